//! Small dense linear algebra helpers over rationals and floats.
//!
//! Everything here works on matrices of rank at most eight or so, which is
//! all a finite root system ever needs, so plain Gauss-Jordan and Cholesky
//! with partial checks are enough.

use num_rational::Ratio;
use num_traits::{One, Signed, Zero};

use crate::{Error, Result};

pub type Rat = Ratio<i64>;

/// Invert a square rational matrix by Gauss-Jordan elimination.
pub fn rat_mat_inverse(a: &[Vec<Rat>]) -> Result<Vec<Vec<Rat>>> {
    let n = a.len();
    let mut m: Vec<Vec<Rat>> = a.iter().map(|r| r.clone()).collect();
    let mut inv: Vec<Vec<Rat>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { Rat::one() } else { Rat::zero() })
                .collect()
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n)
            .find(|&r| !m[r][col].is_zero())
            .ok_or_else(|| Error::Singular("rational matrix is not invertible".into()))?;
        m.swap(col, pivot);
        inv.swap(col, pivot);
        let p = m[col][col];
        for j in 0..n {
            m[col][j] /= p;
            inv[col][j] /= p;
        }
        for r in 0..n {
            if r != col && !m[r][col].is_zero() {
                let f = m[r][col];
                for j in 0..n {
                    let mj = m[col][j];
                    let ij = inv[col][j];
                    m[r][j] -= f * mj;
                    inv[r][j] -= f * ij;
                }
            }
        }
    }
    Ok(inv)
}

/// Multiply rational matrix by integer vector.
pub fn rat_mat_vec(a: &[Vec<Rat>], v: &[i64]) -> Vec<Rat> {
    a.iter()
        .map(|row| {
            row.iter()
                .zip(v)
                .fold(Rat::zero(), |acc, (c, &x)| acc + *c * Rat::from_integer(x))
        })
        .collect()
}

/// Cholesky factorization of a symmetric positive definite matrix: B = L L^T.
pub fn cholesky(b: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let n = b.len();
    let mut l = vec![vec![0.0f64; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = b[i][j];
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            if i == j {
                if s <= 0.0 {
                    return Err(Error::Singular(format!(
                        "matrix is not positive definite (pivot {s:.3e} at {i})"
                    )));
                }
                l[i][j] = s.sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    Ok(l)
}

/// Solve L y = b with L lower triangular.
pub fn forward_solve(l: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let n = l.len();
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i][k] * y[k];
        }
        y[i] = s / l[i][i];
    }
    y
}

/// Solve L^T x = y with L lower triangular.
pub fn back_solve_transposed(l: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
    let n = l.len();
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in i + 1..n {
            s -= l[k][i] * x[k];
        }
        x[i] = s / l[i][i];
    }
    x
}

/// Solve the SPD system B x = rhs via Cholesky.
pub fn spd_solve(b: &[Vec<f64>], rhs: &[f64]) -> Result<Vec<f64>> {
    let l = cholesky(b)?;
    let y = forward_solve(&l, rhs);
    Ok(back_solve_transposed(&l, &y))
}

/// Least squares fit for a tall system A x = b through the normal equations.
/// Fine at the tiny sizes used here (degree fits over a handful of samples).
pub fn lstsq(a: &[Vec<f64>], b: &[f64]) -> Result<Vec<f64>> {
    let rows = a.len();
    let cols = a[0].len();
    let mut ata = vec![vec![0.0; cols]; cols];
    let mut atb = vec![0.0; cols];
    for i in 0..cols {
        for j in 0..cols {
            let mut s = 0.0;
            for r in 0..rows {
                s += a[r][i] * a[r][j];
            }
            ata[i][j] = s;
        }
        let mut s = 0.0;
        for r in 0..rows {
            s += a[r][i] * b[r];
        }
        atb[i] = s;
    }
    spd_solve(&ata, &atb)
}

/// Determinant of a small f64 matrix by LU with partial pivoting.
pub fn det(a: &[Vec<f64>]) -> f64 {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let mut d = 1.0;
    for col in 0..n {
        let (pivot, _) = (col..n)
            .map(|r| (r, m[r][col].abs()))
            .max_by(|x, y| x.1.total_cmp(&y.1))
            .unwrap();
        if m[pivot][col] == 0.0 {
            return 0.0;
        }
        if pivot != col {
            m.swap(col, pivot);
            d = -d;
        }
        d *= m[col][col];
        for r in col + 1..n {
            let f = m[r][col] / m[col][col];
            for j in col..n {
                let v = m[col][j];
                m[r][j] -= f * v;
            }
        }
    }
    d
}

/// Exact Smith normal form of an integer matrix: U A V = D diagonal with the
/// divisibility chain d1 | d2 | ... . Only U and the diagonal are returned;
/// the caller never needs V.
pub fn smith_normal_form(a: &[Vec<i64>]) -> (Vec<Vec<i64>>, Vec<i64>) {
    let rows = a.len();
    let cols = if rows > 0 { a[0].len() } else { 0 };
    let mut m: Vec<Vec<i128>> = a
        .iter()
        .map(|r| r.iter().map(|&x| x as i128).collect())
        .collect();
    let mut u: Vec<Vec<i128>> = (0..rows)
        .map(|i| (0..rows).map(|j| i128::from(i == j)).collect())
        .collect();

    let mut t = 0usize;
    while t < rows && t < cols {
        // Find a nonzero pivot in the remaining block.
        let mut found = None;
        'search: for i in t..rows {
            for j in t..cols {
                if m[i][j] != 0 {
                    found = Some((i, j));
                    break 'search;
                }
            }
        }
        let Some((pi, pj)) = found else { break };
        m.swap(t, pi);
        u.swap(t, pi);
        for row in m.iter_mut() {
            row.swap(t, pj);
        }

        loop {
            // Clear the pivot column with row ops (tracked in U).
            let mut dirty = false;
            for i in t + 1..rows {
                while m[i][t] != 0 {
                    if m[i][t].abs() < m[t][t].abs() || m[t][t] == 0 {
                        m.swap(t, i);
                        u.swap(t, i);
                        dirty = true;
                        continue;
                    }
                    let q = m[i][t] / m[t][t];
                    for j in 0..cols {
                        let v = m[t][j];
                        m[i][j] -= q * v;
                    }
                    for j in 0..rows {
                        let v = u[t][j];
                        u[i][j] -= q * v;
                    }
                    dirty = true;
                }
            }
            // Clear the pivot row with column ops (V untracked).
            for j in t + 1..cols {
                while m[t][j] != 0 {
                    if m[t][j].abs() < m[t][t].abs() || m[t][t] == 0 {
                        for row in m.iter_mut() {
                            row.swap(t, j);
                        }
                        dirty = true;
                        continue;
                    }
                    let q = m[t][j] / m[t][t];
                    for row in m.iter_mut() {
                        let v = row[t];
                        row[j] -= q * v;
                    }
                    dirty = true;
                }
            }
            if !dirty {
                break;
            }
        }
        t += 1;
    }

    // Enforce the divisibility chain d_i | d_{i+1}.
    let r = t;
    loop {
        let mut fixed = true;
        for i in 0..r.saturating_sub(1) {
            let (di, dj) = (m[i][i], m[i + 1][i + 1]);
            if di != 0 && dj % di != 0 {
                // Standard trick: add column i+1 to column i, then re-reduce
                // the 2x2 block with row/column ops.
                for row in m.iter_mut() {
                    let v = row[i + 1];
                    row[i] += v;
                }
                // Row-reduce within the two rows.
                loop {
                    if m[i + 1][i] == 0 {
                        break;
                    }
                    if m[i][i] == 0 || m[i + 1][i].abs() < m[i][i].abs() {
                        m.swap(i, i + 1);
                        u.swap(i, i + 1);
                        continue;
                    }
                    let q = m[i + 1][i] / m[i][i];
                    for j in 0..cols {
                        let v = m[i][j];
                        m[i + 1][j] -= q * v;
                    }
                    for j in 0..rows {
                        let v = u[i][j];
                        u[i + 1][j] -= q * v;
                    }
                }
                // Column-reduce within the two columns.
                loop {
                    if m[i][i + 1] == 0 {
                        break;
                    }
                    if m[i][i] == 0 || m[i][i + 1].abs() < m[i][i].abs() {
                        for row in m.iter_mut() {
                            row.swap(i, i + 1);
                        }
                        continue;
                    }
                    let q = m[i][i + 1] / m[i][i];
                    for row in m.iter_mut() {
                        let v = row[i];
                        row[i + 1] -= q * v;
                    }
                }
                fixed = false;
            }
        }
        if fixed {
            break;
        }
    }

    // Normalize signs.
    for i in 0..r {
        if m[i][i] < 0 {
            for j in 0..cols {
                m[i][j] = -m[i][j];
            }
            for j in 0..rows {
                u[i][j] = -u[i][j];
            }
        }
    }

    let diag: Vec<i64> = (0..rows.min(cols)).map(|i| m[i][i] as i64).collect();
    let u64m: Vec<Vec<i64>> = u
        .into_iter()
        .map(|r| r.into_iter().map(|x| x as i64).collect())
        .collect();
    (u64m, diag)
}

/// Reduce a rational to its canonical representative in [0, 1).
pub fn frac_mod1(x: Rat) -> Rat {
    let mut r = x - x.floor();
    if r.is_negative() {
        r += Rat::one();
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn rat(n: i64, d: i64) -> Rat {
        Rat::new(n, d)
    }

    #[test]
    fn rational_inverse_recovers_identity() {
        let a = vec![
            vec![rat(2, 1), rat(-1, 1), rat(0, 1)],
            vec![rat(-1, 1), rat(2, 1), rat(-1, 1)],
            vec![rat(0, 1), rat(-1, 1), rat(2, 1)],
        ];
        let inv = rat_mat_inverse(&a).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let mut s = Rat::zero();
                for k in 0..3 {
                    s += a[i][k] * inv[k][j];
                }
                assert_eq!(s, if i == j { Rat::one() } else { Rat::zero() });
            }
        }
    }

    #[test]
    fn singular_rational_matrix_is_rejected() {
        let a = vec![vec![rat(1, 1), rat(2, 1)], vec![rat(2, 1), rat(4, 1)]];
        assert!(rat_mat_inverse(&a).is_err());
    }

    #[test]
    fn cholesky_round_trip() {
        let b = vec![vec![4.0, 2.0], vec![2.0, 3.0]];
        let l = cholesky(&b).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let mut s = 0.0;
                for k in 0..2 {
                    s += l[i][k] * l[j][k];
                }
                assert_abs_diff_eq!(s, b[i][j], epsilon = 1e-12);
            }
        }
        let x = spd_solve(&b, &[1.0, 1.0]).unwrap();
        assert_abs_diff_eq!(4.0 * x[0] + 2.0 * x[1], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(2.0 * x[0] + 3.0 * x[1], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let b = vec![vec![1.0, 2.0], vec![2.0, 1.0]];
        assert!(cholesky(&b).is_err());
    }

    #[test]
    fn snf_of_cartan_a2_gives_group_of_order_three() {
        // Coroot-coordinate matrix of A2 positive roots has elementary
        // divisors 1, 3: the weight lattice mod root lattice is Z/3.
        let a = vec![vec![2, -1], vec![-1, 2], vec![1, 1]];
        let (u, d) = smith_normal_form(&a);
        assert_eq!(d, vec![1, 3]);
        // U must be unimodular.
        let uf: Vec<Vec<f64>> = u
            .iter()
            .map(|r| r.iter().map(|&x| x as f64).collect())
            .collect();
        assert_abs_diff_eq!(det(&uf).abs(), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn snf_divisibility_chain_holds() {
        let a = vec![vec![2, 0], vec![0, 3]];
        let (_, d) = smith_normal_form(&a);
        assert_eq!(d, vec![1, 6]);
    }

    #[test]
    fn lstsq_fits_exact_line() {
        let a = vec![vec![1.0, 1.0], vec![1.0, 2.0], vec![1.0, 3.0]];
        let b = vec![3.0, 5.0, 7.0];
        let x = lstsq(&a, &b).unwrap();
        assert_abs_diff_eq!(x[0], 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(x[1], 2.0, epsilon = 1e-9);
    }

    #[test]
    fn frac_mod1_handles_negatives() {
        assert_eq!(frac_mod1(rat(-1, 3)), rat(2, 3));
        assert_eq!(frac_mod1(rat(7, 3)), rat(1, 3));
        assert_eq!(frac_mod1(rat(2, 1)), rat(0, 1));
    }
}
