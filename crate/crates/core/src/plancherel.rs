//! The spectral (Plancherel) measure of the vertex-averaging algebra and
//! quadrature against it.
//!
//! On the unit torus the measure has density W₀(q⁻¹)/(|W₀| φ₀(u)) against
//! normalized Haar measure, with φ₀(u) = c(u)c(u⁻¹). For BC systems with
//! q_n < q₀ a complementary piece appears: an (n−1)-torus of characters
//! with t₁ = −b, carrying density W₀(q⁻¹)/(|W₀′| φ₁) where the vanishing
//! linear factor of φ₀ is divided out and W₀′ is the hyperoctahedral group
//! one rank down.
//!
//! All torus integrals are trapezoid sums on offset uniform grids: the
//! integrands are smooth and periodic, so the error decays geometrically in
//! the grid size, and every exported quantity is recomputed on a doubled
//! grid until stable.

use std::collections::BTreeMap;
use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::root_system::{Coweight, Family};
use crate::spherical::{fft_nd, grid_offsets, Spherical, TorusCharacter};
use crate::{Error, Result};

const GRID_BUDGET: u128 = 1 << 24;
/// Two quadratures must agree to this relative tolerance before a value is
/// reported.
const STABLE_TOL: f64 = 1e-9;
/// Absolute sphere-mass agreement accepted by the k-step refinement loop.
const KSTEP_MASS_TOL: f64 = 1e-9;
/// Largest N_λ for which whole-sphere masses are still resolvable in f64;
/// beyond it the per-vertex weight times N_λ amplifies roundoff past any
/// useful tolerance and only per-vertex agreement is enforced.
const KSTEP_N_CAP: f64 = 1e12;

/// Sampled density of the continuous part on an offset uniform grid of the
/// unit torus, with its Fourier table.
#[derive(Debug)]
pub struct PlancherelGrid {
    pub dims: Vec<usize>,
    offsets: Vec<f64>,
    /// W₀(q⁻¹)/(|W₀| φ₀) at each grid point, row-major.
    density: Vec<f64>,
    /// Forward FFT of `density`, divided by the point count.
    ghat: Vec<Complex64>,
}

impl PlancherelGrid {
    fn point(&self, flat: usize) -> TorusCharacter {
        let n = self.dims.len();
        let mut theta = vec![0.0; n];
        let mut rest = flat;
        for j in (0..n).rev() {
            let k = rest % self.dims[j];
            rest /= self.dims[j];
            theta[j] =
                2.0 * std::f64::consts::PI * k as f64 / self.dims[j] as f64 + self.offsets[j];
        }
        TorusCharacter::unit(theta)
    }

    fn len(&self) -> usize {
        self.density.len()
    }

    /// G[m] = ∫ u^m dπ over the continuous part.
    pub fn fourier(&self, m: &[i64]) -> Complex64 {
        let mut idx = 0usize;
        let mut phase = 0.0;
        for (j, &mj) in m.iter().enumerate() {
            let w = (-mj).rem_euclid(self.dims[j] as i64) as usize;
            idx = idx * self.dims[j] + w;
            phase += mj as f64 * self.offsets[j];
        }
        self.ghat[idx] * Complex64::from_polar(1.0, phase)
    }

    /// Total mass of the continuous part.
    pub fn standard_mass(&self) -> f64 {
        self.ghat[0].re
    }
}

/// Quadrature context; caches grids by their dimensions.
pub struct Plancherel {
    sp: Arc<Spherical>,
    grids: Mutex<HashMap<Vec<usize>, Arc<PlancherelGrid>>>,
}

impl Plancherel {
    pub fn new(sp: Arc<Spherical>) -> Self {
        Plancherel {
            sp,
            grids: Mutex::new(HashMap::new()),
        }
    }

    pub fn spherical(&self) -> &Arc<Spherical> {
        &self.sp
    }

    fn weyl_order(&self) -> Result<f64> {
        Ok(self.sp.root().weyl()?.order() as f64)
    }

    /// Density of the continuous part at a unitary character.
    pub fn density_standard(&self, u: &TorusCharacter) -> Result<f64> {
        let phi = self.sp.phi0(u)?;
        if phi.im.abs() > 1e-10 * phi.re.abs().max(1.0) || phi.re <= 0.0 {
            return Err(Error::Singular(format!(
                "spectral density denominator {phi} is not positive real"
            )));
        }
        Ok(self.sp.params().poincare_w0_inv()? / (self.weyl_order()? * phi.re))
    }

    /// Grid with every axis at least `min` points (rounded up to a power of
    /// two), built once and cached.
    pub fn grid(&self, min: usize) -> Result<Arc<PlancherelGrid>> {
        let n = self.sp.root().rank();
        self.grid_per_axis(&vec![min; n])
    }

    pub fn grid_per_axis(&self, min: &[usize]) -> Result<Arc<PlancherelGrid>> {
        let dims: Vec<usize> = min
            .iter()
            .map(|&m| m.max(64).next_power_of_two())
            .collect();
        if let Some(g) = self.grids.lock().unwrap().get(&dims) {
            return Ok(Arc::clone(g));
        }
        let budget: u128 = dims.iter().map(|&d| d as u128).product();
        if budget > GRID_BUDGET {
            return Err(Error::CapExceeded {
                what: "spectral quadrature grid".into(),
                needed: budget,
                cap: GRID_BUDGET,
            });
        }
        let total: usize = dims.iter().product();
        let mut last_err = None;
        'attempt: for attempt in 0..4 {
            let offsets = grid_offsets(dims.len(), attempt);
            let probe = PlancherelGrid {
                dims: dims.clone(),
                offsets,
                density: Vec::new(),
                ghat: Vec::new(),
            };
            let mut density = Vec::with_capacity(total);
            for p in 0..total {
                match self.density_standard(&probe.point(p)) {
                    Ok(d) => density.push(d),
                    Err(e @ Error::Singular(_)) => {
                        last_err = Some(e);
                        continue 'attempt;
                    }
                    Err(e) => return Err(e),
                }
            }
            let mut ghat: Vec<Complex64> =
                density.iter().map(|&d| Complex64::new(d, 0.0)).collect();
            let mut planner = FftPlanner::new();
            fft_nd(&mut ghat, &dims, &mut planner);
            let scale = 1.0 / total as f64;
            for v in ghat.iter_mut() {
                *v *= scale;
            }
            let grid = Arc::new(PlancherelGrid {
                dims: dims.clone(),
                offsets: probe.offsets,
                density,
                ghat,
            });
            self.grids
                .lock()
                .unwrap()
                .insert(dims, Arc::clone(&grid));
            return Ok(grid);
        }
        Err(last_err.unwrap())
    }

    /// ∫ f dπ over the continuous part, by the trapezoid sum on `grid`.
    pub fn integrate_torus<F>(&self, grid: &PlancherelGrid, mut f: F) -> Result<Complex64>
    where
        F: FnMut(&TorusCharacter) -> Result<Complex64>,
    {
        let mut acc = Complex64::new(0.0, 0.0);
        for p in 0..grid.len() {
            acc += f(&grid.point(p))? * grid.density[p];
        }
        Ok(acc / grid.len() as f64)
    }

    /// c(u) through the BC product in the coordinates t_i = u^{e_i};
    /// `skip_plus` omits the (1 + b⁻¹ t_i⁻¹) factor at that index, which is
    /// how the vanishing linear factor of φ₀ is divided out on the
    /// complementary torus.
    pub fn c_bc_from_t(&self, t: &[Complex64], skip_plus: Option<usize>) -> Complex64 {
        let ps = self.sp.params();
        assert_eq!(ps.root().family(), Family::BC);
        let n = t.len();
        let one = Complex64::new(1.0, 0.0);
        let ainv = 1.0 / ps.a_bc();
        let binv = 1.0 / ps.b_bc();
        let mut prod = one;
        for (i, &ti) in t.iter().enumerate() {
            let tinv = one / ti;
            let mut num = one - ainv * tinv;
            if skip_plus != Some(i) {
                num *= one + binv * tinv;
            }
            prod *= num / (one - tinv * tinv);
        }
        if n >= 2 {
            let q1inv = 1.0 / ps.q_node(1);
            for j in 0..n {
                for k in (j + 1)..n {
                    let x = t[k] / t[j];
                    let y = one / (t[j] * t[k]);
                    prod *= (one - q1inv * x) / (one - x);
                    prod *= (one - q1inv * y) / (one - y);
                }
            }
        }
        prod
    }

    /// t-coordinates of a character: t_i = u^{e_i}.
    pub fn t_coords(&self, u: &TorusCharacter) -> Vec<Complex64> {
        let n = u.rank();
        (0..n)
            .map(|i| {
                let mut c = vec![0i64; n];
                c[i] = 1;
                if i > 0 {
                    c[i - 1] = -1;
                }
                u.eval(&c)
            })
            .collect()
    }

    /// The character on the complementary torus with angle coordinates
    /// φ = (φ₂, …, φ_n): t₁ = −b, t_j = e^{iφ_j}.
    fn atom_character(&self, phis: &[f64]) -> TorusCharacter {
        let ps = self.sp.params();
        let n = ps.root().rank();
        let xi = vec![ps.b_bc().ln(); n];
        let mut theta = vec![0.0; n];
        let mut acc = std::f64::consts::PI;
        theta[0] = acc;
        for j in 1..n {
            acc += phis[j - 1];
            theta[j] = acc;
        }
        TorusCharacter { xi, theta }
    }

    /// φ₁ at the complementary character with the given angles: the limit
    /// of φ₀/(1 + b⁻¹t₁) as t₁ → −b.
    fn phi1(&self, phis: &[f64]) -> Result<f64> {
        let ps = self.sp.params();
        let n = ps.root().rank();
        let one = Complex64::new(1.0, 0.0);
        let mut t = vec![Complex64::new(-ps.b_bc(), 0.0); n];
        for j in 1..n {
            t[j] = Complex64::from_polar(1.0, phis[j - 1]);
        }
        let tinv: Vec<Complex64> = t.iter().map(|&v| one / v).collect();
        let phi = self.c_bc_from_t(&t, None) * self.c_bc_from_t(&tinv, Some(0));
        if phi.im.abs() > 1e-9 * phi.re.abs().max(1e-12) || phi.re <= 0.0 {
            return Err(Error::Singular(format!(
                "complementary density denominator {phi} is not positive real"
            )));
        }
        Ok(phi.re)
    }

    /// ∫ f dπ over the complementary torus on an m-point-per-axis grid.
    /// Returns 0 for parameter systems without a complementary piece.
    pub fn integrate_exceptional<F>(&self, m: usize, mut f: F) -> Result<Complex64>
    where
        F: FnMut(&TorusCharacter) -> Result<Complex64>,
    {
        let ps = self.sp.params();
        if !ps.exceptional() {
            return Ok(Complex64::new(0.0, 0.0));
        }
        let n = ps.root().rank();
        // |W₀′| = 2^{n−1} (n−1)!.
        let mut w_prime = 1.0f64;
        for i in 1..n {
            w_prime *= 2.0 * i as f64;
        }
        let scale = ps.poincare_w0_inv()? / w_prime;
        if n == 1 {
            let u = self.atom_character(&[]);
            return Ok(f(&u)? * (scale / self.phi1(&[])?));
        }
        let dims = vec![m.max(16); n - 1];
        let offsets = grid_offsets(n - 1, 0);
        let total: usize = dims.iter().product();
        let mut acc = Complex64::new(0.0, 0.0);
        let mut phis = vec![0.0; n - 1];
        let mut idx = vec![0usize; n - 1];
        for _ in 0..total {
            for j in 0..n - 1 {
                phis[j] =
                    2.0 * std::f64::consts::PI * idx[j] as f64 / dims[j] as f64 + offsets[j];
            }
            let u = self.atom_character(&phis);
            acc += f(&u)? / self.phi1(&phis)?;
            for d in (0..n - 1).rev() {
                idx[d] += 1;
                if idx[d] < dims[d] {
                    break;
                }
                idx[d] = 0;
            }
        }
        Ok(acc * scale / total as f64)
    }

    /// Complementary integral refined until two grids agree.
    fn integrate_exceptional_stable<F>(&self, mut f: F) -> Result<Complex64>
    where
        F: FnMut(&TorusCharacter) -> Result<Complex64>,
    {
        let ps = self.sp.params();
        if !ps.exceptional() {
            return Ok(Complex64::new(0.0, 0.0));
        }
        if ps.root().rank() == 1 {
            return self.integrate_exceptional(1, f);
        }
        let mut m = 32;
        let mut prev = self.integrate_exceptional(m, &mut f)?;
        for _ in 0..4 {
            m *= 2;
            let next = self.integrate_exceptional(m, &mut f)?;
            if (next - prev).norm() < STABLE_TOL * prev.norm().max(1.0) {
                return Ok(next);
            }
            prev = next;
        }
        Err(Error::Singular(
            "complementary torus quadrature did not stabilize".into(),
        ))
    }

    /// Mass of the complementary part; the total measure adds to 1 with the
    /// continuous part.
    pub fn atom_mass(&self) -> Result<f64> {
        let v = self.integrate_exceptional_stable(|_| Ok(Complex64::new(1.0, 0.0)))?;
        Ok(v.re)
    }

    /// ⟨P_λ, P_μ⟩ = ∫ P_λ conj(P_μ) dπ over the whole spectrum. Equals
    /// δ_{λμ}/N_λ.
    pub fn inner_product(&self, la: &[i64], mu: &[i64]) -> Result<f64> {
        let ca = self.sp.coefficients(la)?;
        let cb = self.sp.coefficients(mu)?;
        let std_part = self.continuous_pairing(&ca, &cb)?;
        let atom = self
            .integrate_exceptional_stable(|u| Ok(ca.eval(u) * cb.eval(&u.conj())))?;
        let total = std_part + atom;
        if total.im.abs() > 1e-8 * total.re.abs().max(1.0) {
            return Err(Error::Singular(format!(
                "spectral inner product has imaginary residue {:.3e}",
                total.im
            )));
        }
        Ok(total.re)
    }

    /// The pairing against the standard (continuous) part of the measure
    /// only. For exceptional parameters this misses the complementary mass
    /// and the orthogonality relations visibly fail.
    pub fn inner_product_continuous(&self, la: &[i64], mu: &[i64]) -> Result<f64> {
        let ca = self.sp.coefficients(la)?;
        let cb = self.sp.coefficients(mu)?;
        let v = self.continuous_pairing(&ca, &cb)?;
        Ok(v.re)
    }

    fn continuous_pairing(
        &self,
        ca: &crate::spherical::SphericalCoeffs,
        cb: &crate::spherical::SphericalCoeffs,
    ) -> Result<Complex64> {
        // Frequencies appearing in P_λ conj(P_μ) span the difference box.
        let n = self.sp.root().rank();
        let mut min_dims = vec![0usize; n];
        for j in 0..n {
            let span = (ca.sat().hi[j] - ca.sat().lo[j]) + (cb.sat().hi[j] - cb.sat().lo[j]);
            min_dims[j] = span as usize + 1;
        }
        let pairs: Vec<(Coweight, f64, f64)> = {
            let mut v = Vec::new();
            for (x, &ax) in ca
                .support()
                .iter()
                .zip(ca.values(crate::spherical::Scaling::Raw))
            {
                if ax == 0.0 {
                    continue;
                }
                for (y, &by) in cb
                    .support()
                    .iter()
                    .zip(cb.values(crate::spherical::Scaling::Raw))
                {
                    if by == 0.0 {
                        continue;
                    }
                    let diff: Coweight = x.iter().zip(y).map(|(a, b)| a - b).collect();
                    v.push((diff, ax, by));
                }
            }
            v
        };
        let eval_on = |grid: &PlancherelGrid| -> Complex64 {
            let mut acc = Complex64::new(0.0, 0.0);
            for (diff, ax, by) in &pairs {
                acc += grid.fourier(diff) * (ax * by);
            }
            acc
        };
        let mut grid = self.grid_per_axis(&min_dims)?;
        let mut std_part = eval_on(&grid);
        for round in 0..4 {
            let doubled: Vec<usize> = grid.dims.iter().map(|&d| d * 2).collect();
            let fine = self.grid_per_axis(&doubled)?;
            let refined = eval_on(&fine);
            let stable = (refined - std_part).norm() < STABLE_TOL * std_part.norm().max(1.0);
            grid = fine;
            std_part = refined;
            if stable {
                break;
            }
            if round == 3 {
                return Err(Error::Singular(
                    "spectral quadrature did not stabilize".into(),
                ));
            }
        }
        Ok(std_part)
    }

    /// Per-vertex k-step transition weight: ∫ Â(u)^k conj(P_κ(u)) dπ for
    /// the averaging operator Â of the one-step law `step` (dominant
    /// coweight ↦ weight). Multiply by N_κ for the mass of the whole
    /// κ-sphere.
    pub fn kstep_probability(
        &self,
        step: &BTreeMap<Coweight, f64>,
        k: u32,
        target: &[i64],
    ) -> Result<f64> {
        let out = self.kstep_distribution(step, k, std::slice::from_ref(&target.to_vec()))?;
        Ok(out[0])
    }

    /// As `kstep_probability` for several targets, sharing the quadrature.
    pub fn kstep_distribution(
        &self,
        step: &BTreeMap<Coweight, f64>,
        k: u32,
        targets: &[Coweight],
    ) -> Result<Vec<f64>> {
        let rs = Arc::clone(self.sp.root());
        let n = rs.rank();
        if step.is_empty() {
            return Err(Error::InvalidParameters("empty one-step law".into()));
        }
        // Laurent coefficients of Â = Σ_λ w_λ P_λ.
        let mut ahat: HashMap<Coweight, f64> = HashMap::new();
        let mut alo = vec![0i64; n];
        let mut ahi = vec![0i64; n];
        for (la, &w) in step {
            if w < 0.0 || !w.is_finite() {
                return Err(Error::InvalidParameters(
                    "one-step weights must be finite and nonnegative".into(),
                ));
            }
            if w == 0.0 {
                continue;
            }
            let c = self.sp.coefficients(la)?;
            for (mu, &a) in c
                .support()
                .iter()
                .zip(c.values(crate::spherical::Scaling::Raw))
            {
                if a != 0.0 {
                    *ahat.entry(mu.clone()).or_insert(0.0) += w * a;
                }
            }
            for j in 0..n {
                alo[j] = alo[j].min(c.sat().lo[j]);
                ahi[j] = ahi[j].max(c.sat().hi[j]);
            }
        }
        // Fixed summation order keeps repeated runs bit-identical.
        let mut ahat: Vec<(Coweight, f64)> = ahat.into_iter().collect();
        ahat.sort_by(|a, b| a.0.cmp(&b.0));
        let target_coeffs: Vec<_> = targets
            .iter()
            .map(|t| self.sp.coefficients(t))
            .collect::<Result<_>>()?;
        let mut min_dims = vec![0usize; n];
        for j in 0..n {
            let mut span = k as i64 * (ahi[j] - alo[j]);
            for tc in &target_coeffs {
                span = span.max(k as i64 * (ahi[j] - alo[j]) + tc.sat().hi[j] - tc.sat().lo[j]);
            }
            min_dims[j] = span as usize + 1;
        }
        let eval_on = |grid: &PlancherelGrid| -> Result<Vec<Complex64>> {
            // (Â^k · density) on the grid, then its Fourier table.
            let total = grid.len();
            let mut vals = vec![Complex64::new(0.0, 0.0); total];
            for p in 0..total {
                let u = grid.point(p);
                let mut av = Complex64::new(0.0, 0.0);
                for (mu, a) in &ahat {
                    av += *a * u.eval(mu);
                }
                vals[p] = av.powi(k as i32) * grid.density[p];
            }
            let mut planner = FftPlanner::new();
            fft_nd(&mut vals, &grid.dims, &mut planner);
            let scale = 1.0 / total as f64;
            let mut out = Vec::with_capacity(targets.len());
            for tc in &target_coeffs {
                let mut acc = Complex64::new(0.0, 0.0);
                for (mu, &a) in tc
                    .support()
                    .iter()
                    .zip(tc.values(crate::spherical::Scaling::Raw))
                {
                    if a == 0.0 {
                        continue;
                    }
                    // ∫ Â^k u^{−μ} dπ: index μ of the table, offset phase.
                    let mut idx = 0usize;
                    let mut phase = 0.0;
                    for (j, &mj) in mu.iter().enumerate() {
                        let w = mj.rem_euclid(grid.dims[j] as i64) as usize;
                        idx = idx * grid.dims[j] + w;
                        phase -= mj as f64 * grid.offsets[j];
                    }
                    acc += vals[idx] * Complex64::from_polar(scale * a, phase);
                }
                out.push(acc);
            }
            Ok(out)
        };
        let mut grid = self.grid_per_axis(&min_dims)?;
        // Per-vertex weights stabilize quickly, but a sphere can multiply
        // them by an enormous N_λ, so also demand whole-sphere agreement
        // wherever N_λ stays below the float amplification cap. Beyond the
        // cap the mass is below f64 resolution by many orders and only the
        // per-vertex value is meaningful.
        let nfac: Vec<f64> = targets
            .iter()
            .map(|t| self.sp.params().n_lambda(t))
            .collect::<Result<_>>()?;
        let mut coarse = eval_on(&grid)?;
        for round in 0..4 {
            let doubled: Vec<usize> = grid.dims.iter().map(|&d| d * 2).collect();
            let fine = self.grid_per_axis(&doubled)?;
            let refined = eval_on(&fine)?;
            let stable = coarse.iter().zip(&refined).zip(&nfac).all(|((a, b), &nf)| {
                let step = (*a - *b).norm();
                let pv_ok = step < STABLE_TOL * b.norm().max(1.0);
                let mass_ok = nf > KSTEP_N_CAP
                    || step * nf < KSTEP_MASS_TOL.max(STABLE_TOL * b.norm() * nf);
                pv_ok && mass_ok
            });
            grid = fine;
            coarse = refined;
            if stable {
                break;
            }
            if round == 3 {
                return Err(Error::Singular(
                    "k-step quadrature did not stabilize".into(),
                ));
            }
        }
        // Complementary part, per target.
        let mut out = Vec::with_capacity(targets.len());
        for (i, tc) in target_coeffs.iter().enumerate() {
            let atom = self.integrate_exceptional_stable(|u| {
                let mut av = Complex64::new(0.0, 0.0);
                for (mu, a) in &ahat {
                    av += *a * u.eval(mu);
                }
                Ok(av.powi(k as i32) * tc.eval(&u.conj()))
            })?;
            let total = coarse[i] + atom;
            if total.im.abs() > 1e-8 * total.re.abs().max(1.0) {
                return Err(Error::Singular(format!(
                    "k-step quadrature has imaginary residue {:.3e}",
                    total.im
                )));
            }
            out.push(if total.re < 0.0 && total.re > -1e-12 {
                0.0
            } else {
                total.re
            });
        }
        Ok(out)
    }
}
