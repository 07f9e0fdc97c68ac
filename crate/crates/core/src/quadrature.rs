//! Gauss–Hermite quadrature and the Gaussian moment integrals used by the
//! local limit theorem constants.

use num_traits::ToPrimitive;

use crate::linalg::{cholesky, forward_solve};
use crate::root_system::{Family, RootSystem};
use crate::{Error, Result};

/// Nodes and weights for ∫_ℝ f(x)·e^{−x²} dx ≈ Σ_i w_i f(x_i), exact for
/// polynomials of degree ≤ 2m−1.
///
/// Eigenvalues of the Jacobi matrix (diag 0, off-diagonal β_k = √(k/2)) by
/// Sturm bisection; weights through the orthonormal three-term recurrence.
pub fn gauss_hermite(m: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(m >= 1, "need at least one node");
    let beta: Vec<f64> = (1..m).map(|k| (k as f64 / 2.0).sqrt()).collect();
    let beta2: Vec<f64> = beta.iter().map(|b| b * b).collect();
    let bound = 2.0 * beta.last().copied().unwrap_or(0.0) + 1.0;

    // Sturm count: number of eigenvalues strictly below t.
    let count_below = |t: f64| -> usize {
        let mut count = 0usize;
        let mut d = 1.0f64;
        for k in 0..m {
            let off = if k == 0 { 0.0 } else { beta2[k - 1] };
            d = -t - off / d;
            if d == 0.0 {
                d = 1e-300;
            }
            if d < 0.0 {
                count += 1;
            }
        }
        count
    };

    let mut nodes = Vec::with_capacity(m);
    for i in 0..m {
        let (mut lo, mut hi) = (-bound, bound);
        for _ in 0..120 {
            let mid = 0.5 * (lo + hi);
            if count_below(mid) <= i {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= f64::EPSILON * bound {
                break;
            }
        }
        nodes.push(0.5 * (lo + hi));
    }

    let p0 = std::f64::consts::PI.powf(-0.25);
    let weights = nodes
        .iter()
        .map(|&x| {
            let mut sum = p0 * p0;
            let mut prev = 0.0f64;
            let mut cur = p0;
            for k in 0..m - 1 {
                let next = (x * cur - if k == 0 { 0.0 } else { beta[k - 1] } * prev) / beta[k];
                prev = cur;
                cur = next;
                sum += cur * cur;
            }
            1.0 / sum
        })
        .collect();
    (nodes, weights)
}

/// ∫_{ℝⁿ} e^{−xᵀBx} Π_f ⟨f,x⟩² dx for a positive definite B, by a tensor
/// Gauss–Hermite rule after the substitution y = Lᵀx (B = LLᵀ). Exact when
/// 2m−1 ≥ 2·#factors.
pub fn gaussian_poly_integral(
    b: &[Vec<f64>],
    sq_factors: &[Vec<f64>],
    nodes_per_dim: usize,
) -> Result<f64> {
    let n = b.len();
    let total_points = (nodes_per_dim as u128).checked_pow(n as u32);
    match total_points {
        Some(p) if p <= 100_000_000 => {}
        _ => {
            return Err(Error::CapExceeded {
                what: "tensor quadrature grid".into(),
                needed: total_points.unwrap_or(u128::MAX),
                cap: 100_000_000,
            })
        }
    }
    let l = cholesky(b)?;
    let det_l: f64 = (0..n).map(|i| l[i][i]).product();
    // ⟨f, L^{-T}y⟩ = ⟨L⁻¹f, y⟩.
    let gs: Vec<Vec<f64>> = sq_factors.iter().map(|f| forward_solve(&l, f)).collect();
    let (nodes, weights) = gauss_hermite(nodes_per_dim);

    let mut idx = vec![0usize; n];
    let mut y = vec![0.0f64; n];
    let mut total = 0.0f64;
    loop {
        let mut w = 1.0f64;
        for (d, &i) in idx.iter().enumerate() {
            y[d] = nodes[i];
            w *= weights[i];
        }
        let mut p = 1.0f64;
        for g in &gs {
            let v: f64 = g.iter().zip(&y).map(|(a, b)| a * b).sum();
            p *= v * v;
        }
        total += w * p;
        // Mixed-radix increment.
        let mut d = 0;
        loop {
            if d == n {
                return Ok(total / det_l);
            }
            idx[d] += 1;
            if idx[d] < nodes_per_dim {
                break;
            }
            idx[d] = 0;
            d += 1;
        }
    }
}

/// The root-system integral J = ∫ e^{−|θ|²} Π_{α∈R₂⁺} ⟨α∨,θ⟩² dθ over
/// simple-root coordinates θ = Σ θ_j α_j. The Gaussian form is the Gram
/// matrix and ⟨α∨,θ⟩ = Σ_j c_j(α∨)·θ_j.
pub fn j_integral(root: &RootSystem) -> Result<f64> {
    let n = root.rank();
    let gram: Vec<Vec<f64>> = root
        .gram()
        .iter()
        .map(|row| row.iter().map(|x| x.to_f64().unwrap()).collect())
        .collect();
    let factors: Vec<Vec<f64>> = root
        .r2_plus_indices()
        .iter()
        .map(|&i| {
            root.roots()[i]
                .coroot_c
                .iter()
                .map(|&c| c as f64)
                .collect()
        })
        .collect();
    let m = factors.len() + 4;
    let _ = n;
    gaussian_poly_integral(&gram, &factors, m)
}

/// Closed forms for J where known; `None` means quadrature is authoritative.
pub fn j_closed_form(family: Family, rank: usize) -> Option<f64> {
    let n = rank;
    let pi = std::f64::consts::PI;
    let prod_fact = |k: usize| -> f64 {
        (1..=k)
            .map(|i| (1..=2 * i).map(|j| j as f64).product::<f64>())
            .product()
    };
    match family {
        Family::A if n == 1 => Some((pi / 2.0).sqrt()),
        Family::B | Family::BC => {
            Some(pi.powf(n as f64 / 2.0) * 2.0f64.powi(-((n * (n - 1)) as i32)) * prod_fact(n))
        }
        Family::C => Some(
            pi.powf(n as f64 / 2.0) * 2.0f64.powi(-((n * n + n + 1) as i32)) * prod_fact(n),
        ),
        Family::D => Some(
            pi.powf(n as f64 / 2.0)
                * 2.0f64.powi(-((n * n) as i32) + n as i32 - 1)
                * (1..=n).map(|i| i as f64).product::<f64>()
                * prod_fact(n - 1),
        ),
        _ => None,
    }
}
