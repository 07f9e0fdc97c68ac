//! Building parameter systems and the derived quantities τ_α, r, and N_λ.
//!
//! Parameters are indexed by the affine diagram nodes 0..=n (node 0 is the
//! extra node attached along −α̃). Validation enforces equality on diagram
//! conjugacy classes plus the two family constraints that tie node 0 to the
//! finite diagram: homogeneous trees for A₁ and q₀ = q_n for C_n.

use std::sync::{Arc, Mutex};

use num_traits::ToPrimitive;

use crate::root_system::{Family, RootSystem};
use crate::{Error, Result};

/// Map an affine building type to the root system the analysis runs on.
///
/// `q0_equals_qn` is the homogeneity of the two end parameters: Ã₁ trees
/// split into homogeneous (A₁) and semi-homogeneous (BC₁), and C̃_n buildings
/// into C_n (equal ends) and BC_n (unequal ends). Every other type X̃_n maps
/// to X_n.
pub fn root_system_for_building(
    building: Family,
    rank: usize,
    q0_equals_qn: bool,
) -> Result<(Family, usize)> {
    match (building, rank) {
        (Family::BC, _) => Err(Error::InvalidType {
            family: "BC".into(),
            rank,
        }),
        (Family::A, 1) => Ok(if q0_equals_qn {
            (Family::A, 1)
        } else {
            (Family::BC, 1)
        }),
        (Family::C, n) if n >= 2 => Ok(if q0_equals_qn {
            (Family::C, n)
        } else {
            (Family::BC, n)
        }),
        (f, n) => {
            // Delegate validity checking to the root system constructor.
            RootSystem::new(f, n)?;
            Ok((f, n))
        }
    }
}

#[derive(Debug)]
pub struct ParameterSystem {
    root: Arc<RootSystem>,
    /// q[i] for affine nodes i = 0..=n.
    q: Vec<f64>,
    exceptional: bool,
    /// a = √(q_n q₀), b = √(q_n/q₀); only meaningful for BC.
    a_bc: f64,
    b_bc: f64,
    /// ln τ_α per root index.
    ln_tau: Vec<f64>,
    /// Linear weights: r_exp(λ) = Σ_j c_j · r_weights[j].
    r_weights: Vec<f64>,
    all_integer_q: bool,
    poincare: Mutex<Option<f64>>,
}

impl ParameterSystem {
    pub fn new(root: Arc<RootSystem>, q: Vec<f64>) -> Result<Self> {
        let n = root.rank();
        if q.len() != n + 1 {
            return Err(Error::InvalidParameters(format!(
                "expected {} parameters for affine nodes 0..={}, got {}",
                n + 1,
                n,
                q.len()
            )));
        }
        for (i, &qi) in q.iter().enumerate() {
            if !qi.is_finite() || qi <= 1.0 {
                return Err(Error::InvalidParameters(format!(
                    "q{i} = {qi} is not a thickness parameter (> 1 required)"
                )));
            }
        }
        // Diagram conjugacy classes force equal parameters.
        let classes = root.affine_node_classes();
        for i in 0..=n {
            for j in i + 1..=n {
                if classes[i] == classes[j] && (q[i] - q[j]).abs() > 0.0 {
                    return Err(Error::InvalidParameters(format!(
                        "nodes {i} and {j} are conjugate in the affine diagram, \
                         so q{i} = q{j} is required (got {} and {})",
                        q[i], q[j]
                    )));
                }
            }
        }
        match root.family() {
            Family::A if n == 1 => {
                if q[0] != q[1] {
                    return Err(Error::InvalidParameters(
                        "a rank-1 A system models a homogeneous tree and needs q0 = q1; \
                         the semi-homogeneous tree is the rank-1 BC system"
                            .into(),
                    ));
                }
            }
            Family::C => {
                if q[0] != q[n] {
                    return Err(Error::InvalidParameters(
                        "a C-type lattice needs q0 = qn; the unequal-end case is the \
                         BC system of the same rank"
                            .into(),
                    ));
                }
            }
            _ => {}
        }

        let is_bc = root.family() == Family::BC;
        let exceptional = is_bc && q[n] < q[0];
        let (a_bc, b_bc) = if is_bc {
            ((q[n] * q[0]).sqrt(), (q[n] / q[0]).sqrt())
        } else {
            (f64::NAN, f64::NAN)
        };
        if exceptional {
            // Higman-style realizability: the node-1 parameter must satisfy
            // q1·b ≥ 1 (for rank 1 that node is the single finite node).
            let q1 = q[1];
            if q1 * b_bc < 1.0 {
                return Err(Error::InvalidParameters(format!(
                    "exceptional parameters need q1·b ≥ 1, got {:.6}",
                    q1 * b_bc
                )));
            }
        }

        // τ per root. For reduced systems τ_α = q_α (the parameter of the
        // equal-length simple root). For BC: q_α on R₃, q₀ on the doubled
        // roots R₁∖R₃, and q_n/q₀ on the short roots R₂∖R₃.
        let mut ln_tau = vec![0.0f64; root.roots().len()];
        let q_same_length = |idx: usize| -> f64 {
            let sq = root.roots()[idx].sq_len;
            for (i, &si) in root.simple_indices().iter().enumerate() {
                if root.roots()[si].sq_len == sq {
                    return q[i + 1];
                }
            }
            unreachable!("every R₃ root shares a length with a simple root");
        };
        for (idx, r) in root.roots().iter().enumerate() {
            let tau = if r.in_r1 && r.in_r2 {
                q_same_length(idx)
            } else if r.in_r1 {
                q[0]
            } else {
                q[n] / q[0]
            };
            ln_tau[idx] = tau.ln();
        }
        // Thickness: τ_α τ_{2α}² > 1 on R₂.
        for (idx, r) in root.roots().iter().enumerate() {
            if r.in_r2 {
                let mut s = ln_tau[idx];
                if let Some(d) = r.double_idx {
                    s += 2.0 * ln_tau[d];
                }
                assert!(s > 0.0, "thickness failed: τ_α·τ_2α² ≤ 1");
            }
        }

        // r_exp(λ) = ½ Σ_{α∈R⁺} ⟨λ,α⟩ ln τ_α = Σ_j c_j w_j with
        // w_j = ½ Σ_{α∈R⁺} k_j(α) ln τ_α.
        let mut r_weights = vec![0.0f64; n];
        for &pi in root.positive_indices() {
            let lt = ln_tau[pi];
            for (j, &kj) in root.roots()[pi].k.iter().enumerate() {
                r_weights[j] += 0.5 * kj as f64 * lt;
            }
        }

        let all_integer_q = q.iter().all(|&x| x.fract() == 0.0);
        Ok(ParameterSystem {
            root,
            q,
            exceptional,
            a_bc,
            b_bc,
            ln_tau,
            r_weights,
            all_integer_q,
            poincare: Mutex::new(None),
        })
    }

    pub fn root(&self) -> &Arc<RootSystem> {
        &self.root
    }

    /// Parameter of affine node i (0..=n).
    pub fn q_node(&self, i: usize) -> f64 {
        self.q[i]
    }

    pub fn q_nodes(&self) -> &[f64] {
        &self.q
    }

    /// Parameter q_{s_i} of the i-th simple generator (0-based).
    pub fn q_simple(&self, i: usize) -> f64 {
        self.q[i + 1]
    }

    pub fn exceptional(&self) -> bool {
        self.exceptional
    }

    /// a = √(q_n q₀) (BC only).
    pub fn a_bc(&self) -> f64 {
        self.a_bc
    }

    /// b = √(q_n/q₀) (BC only).
    pub fn b_bc(&self) -> f64 {
        self.b_bc
    }

    pub fn all_integer_q(&self) -> bool {
        self.all_integer_q
    }

    pub fn tau(&self, root_idx: usize) -> f64 {
        self.ln_tau[root_idx].exp()
    }

    pub fn ln_tau(&self, root_idx: usize) -> f64 {
        self.ln_tau[root_idx]
    }

    /// τ for an optional root index; vectors outside R have τ = 1.
    pub fn tau_any(&self, root_idx: Option<usize>) -> f64 {
        root_idx.map_or(1.0, |i| self.tau(i))
    }

    /// log r^λ for a coweight in c-coordinates (λ need not be dominant).
    pub fn r_exp(&self, c: &[i64]) -> f64 {
        c.iter()
            .zip(&self.r_weights)
            .map(|(&ci, &w)| ci as f64 * w)
            .sum()
    }

    pub fn r_weights(&self) -> &[f64] {
        &self.r_weights
    }

    /// log r^λ through the per-class product formula
    /// r^λ = Π_j (τ_{β_j} τ_{2β_j}²)^{⟨λ,ρ_j⟩}; used to cross-check `r_exp`.
    pub fn r_exp_product_form(&self, c: &[i64]) -> f64 {
        let root = &self.root;
        let mut total = 0.0;
        for cls in root.length_classes() {
            let beta = root.simple_indices()[cls.rep_simple];
            let mut base = self.ln_tau[beta];
            if let Some(d) = root.roots()[beta].double_idx {
                base += 2.0 * self.ln_tau[d];
            }
            let pairing: f64 = cls
                .rho_k
                .iter()
                .zip(c)
                .map(|(rk, &ci)| rk.to_f64().unwrap() * ci as f64)
                .sum();
            total += base * pairing;
        }
        total
    }

    /// W₀(q⁻¹) = Σ_{w∈W₀} q_w⁻¹ (cached).
    pub fn poincare_w0_inv(&self) -> Result<f64> {
        let mut guard = self.poincare.lock().unwrap();
        if let Some(v) = *guard {
            return Ok(v);
        }
        let gens: Vec<usize> = (0..self.root.rank()).collect();
        let v = self
            .root
            .parabolic_poincare_inv(&gens, &|i| self.q_simple(i))?;
        *guard = Some(v);
        Ok(v)
    }

    /// W₀λ(q⁻¹) over the stabilizer of λ (the parabolic on {i : c_i = 0}).
    pub fn stabilizer_poincare_inv(&self, c: &[i64]) -> Result<f64> {
        let gens: Vec<usize> = (0..self.root.rank()).filter(|&i| c[i] == 0).collect();
        self.root
            .parabolic_poincare_inv(&gens, &|i| self.q_simple(i))
    }

    /// log N_λ = log(W₀(q⁻¹)/W₀λ(q⁻¹)) + 2·r_exp(λ).
    pub fn ln_n_lambda(&self, c: &[i64]) -> Result<f64> {
        if !self.root.is_dominant(c) {
            return Err(Error::InvalidParameters(
                "N_λ requires a dominant coweight".into(),
            ));
        }
        let full = self.poincare_w0_inv()?;
        let stab = self.stabilizer_poincare_inv(c)?;
        Ok((full / stab).ln() + 2.0 * self.r_exp(c))
    }

    /// N_λ, the common size of the spheres V_λ(x).
    pub fn n_lambda(&self, c: &[i64]) -> Result<f64> {
        Ok(self.ln_n_lambda(c)?.exp())
    }
}
