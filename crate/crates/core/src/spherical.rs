//! Spherical function analysis: c-function factors, Weyl-sum evaluation,
//! Laurent coefficient extraction on radially shifted tori, monomial and
//! product expansions, and boundedness of characters.
//!
//! The spherical function attached to a dominant coweight λ is a Laurent
//! polynomial P_λ(u) = Σ_μ a_{λ,μ} u^μ supported on Π_λ. All coefficient
//! recovery here samples P_λ on an offset uniform grid of a torus
//! |u^{λ_j}| = e^{ξ_j} and inverts with an FFT; for a grid at least as wide
//! as the support box this is exact up to roundoff. Three shifts are kept:
//! ξ = 0 gives the raw a_{λ,μ}, ξ = +w gives r^μ a_{λ,μ} (the one-step law
//! of the radial walk deep in the chamber), ξ = −w gives r^{−μ} a_{λ,μ}
//! (the reflected law driving drift and boundary statistics).

use std::collections::HashMap;
use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::parameters::ParameterSystem;
use crate::root_system::{Coweight, RootSystem, SaturatedSet};
use crate::{Error, Result};

/// Cap on the product of FFT grid axis sizes.
const GRID_BUDGET: u128 = 1 << 24;
/// |1 − u^{−α∨}| below this counts as a singular grid: re-offset and retry.
const SINGULAR_TOL: f64 = 1e-9;
const MAX_ATTEMPTS: usize = 6;
/// Windowed extraction sizes the per-axis alias margin so wrapped
/// coefficients are below 2^{−ALIAS_BITS} (plus slack).
const ALIAS_BITS: f64 = 44.0;
const MARGIN_SLACK: usize = 8;

/// Multiplicative character of the coweight lattice, stored per axis as
/// u^{λ_j} = e^{ξ_j + iθ_j}. The split keeps u^μ overflow-free for the
/// radially shifted tori used throughout.
#[derive(Clone, Debug)]
pub struct TorusCharacter {
    /// ln|u^{λ_j}| per axis.
    pub xi: Vec<f64>,
    /// arg u^{λ_j} per axis.
    pub theta: Vec<f64>,
}

impl TorusCharacter {
    pub fn unit(theta: Vec<f64>) -> Self {
        let xi = vec![0.0; theta.len()];
        TorusCharacter { xi, theta }
    }

    pub fn from_values(vals: &[Complex64]) -> Self {
        TorusCharacter {
            xi: vals.iter().map(|v| v.norm().ln()).collect(),
            theta: vals.iter().map(|v| v.arg()).collect(),
        }
    }

    /// The positive character u = r with u^{λ_j} = e^{w_j}.
    pub fn r_character(ps: &ParameterSystem) -> Self {
        TorusCharacter {
            xi: ps.r_weights().to_vec(),
            theta: vec![0.0; ps.root().rank()],
        }
    }

    /// u = r·e^{iθ}: the torus where P_λ has the r^μ-scaled coefficients.
    pub fn r_shifted(ps: &ParameterSystem, theta: Vec<f64>) -> Self {
        TorusCharacter {
            xi: ps.r_weights().to_vec(),
            theta,
        }
    }

    pub fn rank(&self) -> usize {
        self.xi.len()
    }

    pub fn inverse(&self) -> Self {
        TorusCharacter {
            xi: self.xi.iter().map(|x| -x).collect(),
            theta: self.theta.iter().map(|t| -t).collect(),
        }
    }

    /// Complex conjugate character: conj(u^μ) = (conj u)^μ. Agrees with the
    /// inverse exactly when u is unitary.
    pub fn conj(&self) -> Self {
        TorusCharacter {
            xi: self.xi.clone(),
            theta: self.theta.iter().map(|t| -t).collect(),
        }
    }

    pub fn axis_value(&self, j: usize) -> Complex64 {
        Complex64::from_polar(self.xi[j].exp(), self.theta[j])
    }

    /// u^μ for μ in c-coordinates.
    pub fn eval(&self, c: &[i64]) -> Complex64 {
        Complex64::from_polar(self.log_abs(c).exp(), self.arg_of(c))
    }

    /// ln|u^μ|.
    pub fn log_abs(&self, c: &[i64]) -> f64 {
        c.iter().zip(&self.xi).map(|(&ci, &x)| ci as f64 * x).sum()
    }

    pub fn arg_of(&self, c: &[i64]) -> f64 {
        c.iter()
            .zip(&self.theta)
            .map(|(&ci, &t)| ci as f64 * t)
            .sum()
    }

    pub fn is_unitary(&self) -> bool {
        self.xi.iter().all(|x| x.abs() < 1e-12)
    }

    /// The character s_i·u with (s_i u)^μ = u^{s_i μ}.
    pub fn reflect_simple(&self, rs: &RootSystem, i: usize) -> Self {
        let n = self.rank();
        let mut out = self.clone();
        // s_i λ_j = λ_j for j ≠ i; s_i λ_i = λ_i − α_i∨ has coords δ_i − cartan row i.
        let mut coords = vec![0i64; n];
        coords[i] = 1;
        let refl = rs.reflect_simple(&coords, i);
        out.xi[i] = refl.iter().zip(&self.xi).map(|(&c, &x)| c as f64 * x).sum();
        out.theta[i] = refl
            .iter()
            .zip(&self.theta)
            .map(|(&c, &t)| c as f64 * t)
            .sum();
        out
    }
}

/// Which coefficient scaling of P_λ to report.
#[derive(Copy, Clone, Eq, PartialEq, Debug)]
pub enum Scaling {
    /// a_{λ,μ}.
    Raw,
    /// r^μ · a_{λ,μ}; nonnegative, sums to 1.
    RScaled,
    /// r^{−μ} · a_{λ,μ}; nonnegative, sums to 1.
    RInvScaled,
}

/// Coefficients of one spherical function in all three scalings, aligned
/// with the points of Π_λ.
#[derive(Debug)]
pub struct SphericalCoeffs {
    pub lambda: Coweight,
    sat: Arc<SaturatedSet>,
    raw: Vec<f64>,
    r_scaled: Vec<f64>,
    r_inv_scaled: Vec<f64>,
    /// P_λ(1) = Σ_μ a_{λ,μ}.
    pub p1: f64,
}

impl SphericalCoeffs {
    pub fn support(&self) -> &[Coweight] {
        &self.sat.points
    }

    pub fn sat(&self) -> &Arc<SaturatedSet> {
        &self.sat
    }

    pub fn values(&self, which: Scaling) -> &[f64] {
        match which {
            Scaling::Raw => &self.raw,
            Scaling::RScaled => &self.r_scaled,
            Scaling::RInvScaled => &self.r_inv_scaled,
        }
    }

    pub fn at(&self, which: Scaling, c: &[i64]) -> f64 {
        match self.sat.index.get(c) {
            Some(&i) => self.values(which)[i],
            None => 0.0,
        }
    }

    /// Top coefficient r^λ a_{λ,λ} of the r-scaled expansion.
    pub fn top_r_scaled(&self) -> f64 {
        self.at(Scaling::RScaled, &self.lambda)
    }

    pub fn laurent(&self, which: Scaling) -> BTreeMap<Coweight, f64> {
        self.sat
            .points
            .iter()
            .zip(self.values(which))
            .filter(|(_, &v)| v != 0.0)
            .map(|(c, &v)| (c.clone(), v))
            .collect()
    }

    /// Evaluate P_λ(u) = Σ a_{λ,μ} u^μ from the stored coefficients. Defined
    /// at every character, including the singular locus of the c-function.
    pub fn eval(&self, u: &TorusCharacter) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (c, &a) in self.sat.points.iter().zip(&self.raw) {
            if a != 0.0 {
                acc += a * u.eval(c);
            }
        }
        acc
    }
}

struct GridSpec {
    dims: Vec<usize>,
    lo: Vec<i64>,
    hi: Vec<i64>,
    offsets: Vec<f64>,
}

impl GridSpec {
    fn total(&self) -> usize {
        self.dims.iter().product()
    }
}

/// Per-root factor data for grid evaluation of the c-function.
enum FactorPre {
    /// (1 − τ_α⁻¹ x)/(1 − x) with x = u^{−α∨}.
    Plain {
        scalar: Complex64,
        pmods: Vec<usize>,
        tau_inv: f64,
    },
    /// (1 − τ_{2α}⁻¹τ_α^{−1/2} y)(1 + τ_α^{−1/2} y)/(1 − y²), y = u^{−(2α)∨}.
    Doubled {
        scalar: Complex64,
        pmods: Vec<usize>,
        c1: f64,
        c2: f64,
    },
}

/// Shared evaluation context: caches the Weyl action on the reduced roots
/// and the extracted coefficients, keyed by λ.
pub struct Spherical {
    ps: Arc<ParameterSystem>,
    /// Root indices of R₂, positives first (in r2_plus order), then the
    /// negatives in matching order.
    r2_all: Vec<usize>,
    /// root index → slot in r2_all.
    slot_of_root: Vec<Option<u32>>,
    /// Slot of each simple root (they are positive and reduced).
    simple_slots: Vec<usize>,
    /// Flattened |W₀| × |r2_all| tables: the first maps slot s to the slot
    /// of w·(r2_all[s]), the second to the slot of w⁻¹·(r2_all[s]).
    perm: Mutex<Option<(Arc<Vec<u32>>, Arc<Vec<u32>>)>>,
    coeff_cache: Mutex<HashMap<Coweight, Arc<SphericalCoeffs>>>,
}

impl Spherical {
    pub fn new(ps: Arc<ParameterSystem>) -> Self {
        let rs = Arc::clone(ps.root());
        let r2p = rs.r2_plus_indices().to_vec();
        let mut r2_all = r2p.clone();
        for &i in &r2p {
            let neg: Vec<i64> = rs.roots()[i].coroot_c.iter().map(|x| -x).collect();
            r2_all.push(
                rs.root_by_coroot(&neg)
                    .expect("negative of a reduced root is a root"),
            );
        }
        let mut slot_of_root = vec![None; rs.roots().len()];
        for (s, &ri) in r2_all.iter().enumerate() {
            slot_of_root[ri] = Some(s as u32);
        }
        let simple_slots = rs
            .simple_indices()
            .iter()
            .map(|&si| slot_of_root[si].expect("simple roots are reduced") as usize)
            .collect();
        Spherical {
            ps,
            r2_all,
            slot_of_root,
            simple_slots,
            perm: Mutex::new(None),
            coeff_cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn params(&self) -> &Arc<ParameterSystem> {
        &self.ps
    }

    pub fn root(&self) -> &Arc<RootSystem> {
        self.ps.root()
    }

    fn n_r2_plus(&self) -> usize {
        self.r2_all.len() / 2
    }

    /// Weyl action on the slots of r2_all (forward and inverse), built once
    /// per context.
    fn root_perm(&self) -> Result<(Arc<Vec<u32>>, Arc<Vec<u32>>)> {
        let mut guard = self.perm.lock().unwrap();
        if let Some((p, ip)) = guard.as_ref() {
            return Ok((Arc::clone(p), Arc::clone(ip)));
        }
        let rs = self.root();
        let weyl = rs.weyl()?;
        let n = rs.rank();
        let l = self.r2_all.len();
        // Simple reflections acting on slots.
        let mut sperm = vec![0u32; n * l];
        for i in 0..n {
            for (s, &ri) in self.r2_all.iter().enumerate() {
                let refl = rs.reflect_simple(&rs.roots()[ri].coroot_c, i);
                let target = rs
                    .root_by_coroot(&refl)
                    .expect("reflection of a root is a root");
                sperm[i * l + s] = self.slot_of_root[target].unwrap();
            }
        }
        let order = weyl.order();
        let mut perm = vec![0u32; order * l];
        for (s, cell) in perm.iter_mut().take(l).enumerate() {
            *cell = s as u32;
        }
        // BFS invariant: mats[w] = mats[parent]·s_g, so w(ρ) = parent(s_g ρ).
        for w in 1..order {
            let (p, g) = weyl.parent[w];
            let (p, g) = (p as usize, g as usize);
            for s in 0..l {
                perm[w * l + s] = perm[p * l + sperm[g * l + s] as usize];
            }
        }
        let mut iperm = vec![0u32; order * l];
        for w in 0..order {
            for s in 0..l {
                iperm[w * l + perm[w * l + s] as usize] = s as u32;
            }
        }
        let arcs = (Arc::new(perm), Arc::new(iperm));
        *guard = Some((Arc::clone(&arcs.0), Arc::clone(&arcs.1)));
        Ok(arcs)
    }

    /// One c-function factor for the root at `root_idx`, evaluated at u.
    pub fn c_factor(&self, root_idx: usize, u: &TorusCharacter) -> Result<Complex64> {
        let rs = self.root();
        let root = &rs.roots()[root_idx];
        assert!(root.in_r2, "c-function factors are indexed by reduced roots");
        let make_singular = || {
            let amb: Vec<f64> = root
                .ambient
                .iter()
                .map(|x| num_traits::ToPrimitive::to_f64(x).unwrap())
                .collect();
            Error::Singular(format!(
                "c-function factor 1 - u^(-a_v) vanishes at the root with ambient coordinates {amb:?}"
            ))
        };
        match root.double_idx {
            None => {
                let x = u.inverse().eval(&root.coroot_c);
                let den = Complex64::new(1.0, 0.0) - x;
                if den.norm() < SINGULAR_TOL {
                    return Err(make_singular());
                }
                let tau_inv = (-self.ps.ln_tau(root_idx)).exp();
                Ok((Complex64::new(1.0, 0.0) - tau_inv * x) / den)
            }
            Some(d) => {
                // u^{−α∨/2} = u^{−(2α)∨} is an integer character.
                let y = u.inverse().eval(&rs.roots()[d].coroot_c);
                let den = Complex64::new(1.0, 0.0) - y * y;
                if den.norm() < SINGULAR_TOL {
                    return Err(make_singular());
                }
                let ta_mhalf = (-0.5 * self.ps.ln_tau(root_idx)).exp();
                let c1 = (-self.ps.ln_tau(d)).exp() * ta_mhalf;
                let c2 = ta_mhalf;
                let num =
                    (Complex64::new(1.0, 0.0) - c1 * y) * (Complex64::new(1.0, 0.0) + c2 * y);
                Ok(num / den)
            }
        }
    }

    /// c(u) = Π_{α∈R₂⁺} c_factor(α, u).
    pub fn c_function(&self, u: &TorusCharacter) -> Result<Complex64> {
        let mut prod = Complex64::new(1.0, 0.0);
        for s in 0..self.n_r2_plus() {
            prod *= self.c_factor(self.r2_all[s], u)?;
        }
        Ok(prod)
    }

    /// φ₀(u) = c(u)·c(u⁻¹); real and positive on the unit torus.
    pub fn phi0(&self, u: &TorusCharacter) -> Result<Complex64> {
        Ok(self.c_function(u)? * self.c_function(&u.inverse())?)
    }

    /// P_λ(u) by the Weyl sum (r^{−λ}/W₀(q⁻¹)) Σ_w c(wu) u^{wλ}. Fails on
    /// the singular locus; use `coefficients(λ).eval(u)` there.
    pub fn eval_generic(&self, lambda: &[i64], u: &TorusCharacter) -> Result<Complex64> {
        let rs = self.root();
        if !rs.is_dominant(lambda) {
            return Err(Error::InvalidParameters(
                "spherical functions are indexed by dominant coweights".into(),
            ));
        }
        let weyl = rs.weyl()?;
        let (perm, iperm) = self.root_perm()?;
        let l = self.r2_all.len();
        let npos = self.n_r2_plus();
        // Factor values at u for every reduced root.
        let mut g = vec![Complex64::new(0.0, 0.0); l];
        for (s, cell) in g.iter_mut().enumerate() {
            *cell = self.c_factor(self.r2_all[s], u)?;
        }
        let rexp_l = self.ps.r_exp(lambda);
        let mut acc = Complex64::new(0.0, 0.0);
        // Each term is c(wu)·(wu)^λ: c(wu) = Π_{α>0} g_{w⁻¹α}(u) since the
        // parameters τ are Weyl invariant, and (wu)^λ = u^{w⁻¹λ}.
        for w in 0..weyl.order() {
            let base = w * l;
            let mut prod = Complex64::new(1.0, 0.0);
            for a in 0..npos {
                prod *= g[iperm[base + a] as usize];
            }
            // c_j(w⁻¹λ) = ⟨λ, w α_j⟩.
            let mut logmag = -rexp_l;
            let mut phase = 0.0;
            for (j, &ss) in self.simple_slots.iter().enumerate() {
                let m = rs.pair(lambda, self.r2_all[perm[base + ss] as usize]) as f64;
                logmag += m * u.xi[j];
                phase += m * u.theta[j];
            }
            acc += prod * Complex64::from_polar(logmag.exp(), phase);
        }
        Ok(acc / self.ps.poincare_w0_inv()?)
    }

    /// m_λ(u) = Σ_{μ ∈ W₀λ} u^μ.
    pub fn monomial(&self, lambda: &[i64], u: &TorusCharacter) -> Result<Complex64> {
        let orbit = self.root().weyl_orbit(lambda)?;
        let mut acc = Complex64::new(0.0, 0.0);
        for mu in &orbit {
            acc += u.eval(mu);
        }
        Ok(acc)
    }

    /// Evaluate P_λ on the full grid of the torus with radial part ξ.
    fn eval_p_grid(
        &self,
        lambda: &[i64],
        xi: &[f64],
        spec: &GridSpec,
    ) -> Result<Vec<Complex64>> {
        let rs = self.root();
        let n = rs.rank();
        let weyl = rs.weyl()?;
        let (perm, iperm) = self.root_perm()?;
        let l = self.r2_all.len();
        let npos = self.n_r2_plus();
        let wq = self.ps.poincare_w0_inv()?;
        let rexp_l = self.ps.r_exp(lambda);
        let dims = &spec.dims;

        // Per-axis roots of unity.
        let omega: Vec<Vec<Complex64>> = dims
            .iter()
            .map(|&m| {
                (0..m)
                    .map(|k| {
                        Complex64::from_polar(
                            1.0,
                            2.0 * std::f64::consts::PI * k as f64 / m as f64,
                        )
                    })
                    .collect()
            })
            .collect();

        // Per-w scalars and per-axis phase indices.
        let order = weyl.order();
        let mut w_scalar = vec![Complex64::new(0.0, 0.0); order];
        let mut w_mod = vec![0usize; order * n];
        for w in 0..order {
            let base = w * l;
            let mut logmag = -rexp_l;
            let mut offphase = 0.0;
            for (j, &ss) in self.simple_slots.iter().enumerate() {
                let m = rs.pair(lambda, self.r2_all[perm[base + ss] as usize]);
                logmag += m as f64 * xi[j];
                offphase += m as f64 * spec.offsets[j];
                w_mod[w * n + j] = m.rem_euclid(dims[j] as i64) as usize;
            }
            w_scalar[w] = Complex64::from_polar(logmag.exp(), offphase);
        }

        // Per-root factor precomputation.
        let facs: Vec<FactorPre> = self
            .r2_all
            .iter()
            .map(|&ri| {
                let root = &rs.roots()[ri];
                let (coroot, scalar_root): (&[i64], usize) = match root.double_idx {
                    None => (&root.coroot_c, ri),
                    Some(d) => (&rs.roots()[d].coroot_c, d),
                };
                let mut logmag = 0.0;
                let mut offphase = 0.0;
                let mut pmods = vec![0usize; n];
                for j in 0..n {
                    logmag -= coroot[j] as f64 * xi[j];
                    offphase -= coroot[j] as f64 * spec.offsets[j];
                    pmods[j] = (-coroot[j]).rem_euclid(dims[j] as i64) as usize;
                }
                let scalar = Complex64::from_polar(logmag.exp(), offphase);
                match root.double_idx {
                    None => FactorPre::Plain {
                        scalar,
                        pmods,
                        tau_inv: (-self.ps.ln_tau(ri)).exp(),
                    },
                    Some(_) => {
                        let ta_mhalf = (-0.5 * self.ps.ln_tau(ri)).exp();
                        FactorPre::Doubled {
                            scalar,
                            pmods,
                            c1: (-self.ps.ln_tau(scalar_root)).exp() * ta_mhalf,
                            c2: ta_mhalf,
                        }
                    }
                }
            })
            .collect();

        let total = spec.total();
        let mut out = vec![Complex64::new(0.0, 0.0); total];
        let mut kidx = vec![0usize; n];
        let mut g = vec![Complex64::new(0.0, 0.0); l];
        let one = Complex64::new(1.0, 0.0);
        for cell in out.iter_mut() {
            for (slot, fac) in facs.iter().enumerate() {
                let val = match fac {
                    FactorPre::Plain {
                        scalar,
                        pmods,
                        tau_inv,
                    } => {
                        let mut x = *scalar;
                        for j in 0..n {
                            x *= omega[j][(kidx[j] * pmods[j]) % dims[j]];
                        }
                        let den = one - x;
                        if den.norm() < SINGULAR_TOL {
                            return Err(Error::Singular(format!(
                                "grid hit the singular locus: |1 - u^{{-coroot {:?}}}| = {:.3e}",
                                rs.roots()[self.r2_all[slot]].coroot_c,
                                den.norm()
                            )));
                        }
                        (one - *tau_inv * x) / den
                    }
                    FactorPre::Doubled {
                        scalar,
                        pmods,
                        c1,
                        c2,
                    } => {
                        let mut y = *scalar;
                        for j in 0..n {
                            y *= omega[j][(kidx[j] * pmods[j]) % dims[j]];
                        }
                        let den = one - y * y;
                        if den.norm() < SINGULAR_TOL {
                            return Err(Error::Singular(format!(
                                "grid hit the singular locus: |1 - u^{{-2·coroot {:?}}}| = {:.3e}",
                                rs.roots()[self.r2_all[slot]].coroot_c,
                                den.norm()
                            )));
                        }
                        (one - *c1 * y) * (one + *c2 * y) / den
                    }
                };
                g[slot] = val;
            }
            let mut acc = Complex64::new(0.0, 0.0);
            for w in 0..order {
                let base = w * l;
                let mut prod = w_scalar[w];
                for a in 0..npos {
                    prod *= g[iperm[base + a] as usize];
                }
                for j in 0..n {
                    prod *= omega[j][(kidx[j] * w_mod[w * n + j]) % dims[j]];
                }
                acc += prod;
            }
            *cell = acc / wq;
            for d in (0..n).rev() {
                kidx[d] += 1;
                if kidx[d] < dims[d] {
                    break;
                }
                kidx[d] = 0;
            }
        }
        Ok(out)
    }

    /// Extract the shifted-torus coefficients of P_λ on the frequency box
    /// [lo, hi]. Grid axes are sized `width + margin`, so with margin 0 the
    /// box must contain the full support (exact inversion); with positive
    /// margins far coefficients alias in at a geometrically small level.
    fn extract(
        &self,
        lambda: &[i64],
        xi: &[f64],
        lo: &[i64],
        hi: &[i64],
        margins: &[usize],
    ) -> Result<HashMap<Coweight, f64>> {
        let n = self.root().rank();
        let base: Vec<usize> = (0..n)
            .map(|j| {
                let width = (hi[j] - lo[j] + 1) as usize + margins[j];
                width.next_power_of_two().max(4)
            })
            .collect();
        let budget: u128 = base.iter().map(|&d| d as u128).product();
        if budget > GRID_BUDGET {
            return Err(Error::CapExceeded {
                what: "coefficient extraction grid".into(),
                needed: budget,
                cap: GRID_BUDGET,
            });
        }
        // Two offset retries per grid size, then double every axis. Residue
        // failures that survive an offset change are alias leakage (coweights
        // congruent modulo the grid, possible on a wall-straddling window
        // whenever a mixed-sign wrap barely changes r^μ); each doubling pushes
        // the nearest congruent coweight past the edge of the support.
        let mut last_err = None;
        for attempt in 0..MAX_ATTEMPTS {
            let scale = 1usize << (attempt / 2);
            let dims: Vec<usize> = base.iter().map(|&d| d * scale).collect();
            if dims.iter().map(|&d| d as u128).product::<u128>() > GRID_BUDGET {
                break;
            }
            let spec = GridSpec {
                dims,
                lo: lo.to_vec(),
                hi: hi.to_vec(),
                offsets: grid_offsets(n, attempt),
            };
            match self.try_extract(lambda, xi, &spec) {
                Ok(map) => return Ok(map),
                Err(e @ Error::Singular(_)) => last_err = Some(e),
                Err(e) => return Err(e),
            }
        }
        Err(last_err.unwrap())
    }

    fn try_extract(
        &self,
        lambda: &[i64],
        xi: &[f64],
        spec: &GridSpec,
    ) -> Result<HashMap<Coweight, f64>> {
        let n = self.root().rank();
        let mut grid = self.eval_p_grid(lambda, xi, spec)?;
        let mut planner = FftPlanner::<f64>::new();
        fft_nd(&mut grid, &spec.dims, &mut planner);
        let total = spec.total() as f64;
        let mut out = HashMap::new();
        let mut m = spec.lo.clone();
        let mut max_re: f64 = 0.0;
        let mut max_im: f64 = 0.0;
        loop {
            let mut idx = 0usize;
            let mut offphase = 0.0;
            for j in 0..n {
                let mj = m[j].rem_euclid(spec.dims[j] as i64) as usize;
                idx = idx * spec.dims[j] + mj;
                offphase -= m[j] as f64 * spec.offsets[j];
            }
            let v = grid[idx] * Complex64::from_polar(1.0 / total, offphase);
            max_re = max_re.max(v.re.abs());
            max_im = max_im.max(v.im.abs());
            out.insert(m.clone(), v.re);
            let mut d = n;
            loop {
                if d == 0 {
                    if max_im > 1e-9 * max_re.max(1.0) {
                        return Err(Error::Singular(format!(
                            "coefficient extraction left imaginary residue {max_im:.3e}"
                        )));
                    }
                    return Ok(out);
                }
                d -= 1;
                m[d] += 1;
                if m[d] <= spec.hi[d] {
                    break;
                }
                m[d] = spec.lo[d];
            }
        }
    }

    /// All three coefficient scalings of P_λ, cached per λ.
    pub fn coefficients(&self, lambda: &[i64]) -> Result<Arc<SphericalCoeffs>> {
        let rs = Arc::clone(self.root());
        if !rs.is_dominant(lambda) {
            return Err(Error::InvalidParameters(
                "spherical coefficients are indexed by dominant coweights".into(),
            ));
        }
        if let Some(c) = self.coeff_cache.lock().unwrap().get(lambda) {
            return Ok(Arc::clone(c));
        }
        let sat = rs.saturated_set(lambda)?;
        let n = rs.rank();
        let zero_margins = vec![0usize; n];
        let w = self.ps.r_weights().to_vec();
        let neg_w: Vec<f64> = w.iter().map(|x| -x).collect();

        // Extract only on the two r-shifted tori: both sit a fixed distance
        // from every c-factor pole, so the grid evaluation never cancels
        // catastrophically (the unit torus does, right where the
        // singularities live, and its pack is recoverable exactly below).
        let mut packs = Vec::with_capacity(2);
        for xi in [&w, &neg_w] {
            let box_map = self.extract(lambda, xi, &sat.lo, &sat.hi, &zero_margins)?;
            // Mass outside Π_λ must be at roundoff level; inside, align with
            // the saturated set. The extraction is exact up to float noise
            // (the support fits the box), so the leak scales with the grid
            // size times the torus maximum, which total_abs bounds.
            let mut inside = vec![0.0f64; sat.points.len()];
            let mut total_abs = 0.0;
            let mut outside_abs = 0.0;
            for (c, v) in &box_map {
                total_abs += v.abs();
                match sat.index.get(c) {
                    Some(&i) => inside[i] = *v,
                    None => outside_abs += v.abs(),
                }
            }
            if total_abs > 0.0 && outside_abs > 1e-8 * total_abs {
                return Err(Error::Singular(format!(
                    "coefficient mass {outside_abs:.3e} observed outside the saturated set"
                )));
            }
            // Clamp roundoff negatives: all three scalings are nonnegative.
            let max = inside.iter().cloned().fold(0.0f64, |a, b| a.max(b.abs()));
            for v in inside.iter_mut() {
                if *v < 0.0 {
                    if *v < -1e-9 * max.max(1e-300) {
                        return Err(Error::Singular(format!(
                            "negative spherical coefficient {v:.3e} beyond roundoff"
                        )));
                    }
                    *v = 0.0;
                }
            }
            packs.push(inside);
        }
        let r_inv_scaled = packs.pop().unwrap();
        let r_scaled = packs.pop().unwrap();
        let sum_e: f64 = r_scaled.iter().sum();
        let sum_h: f64 = r_inv_scaled.iter().sum();
        if (sum_e - 1.0).abs() > 1e-8 || (sum_h - 1.0).abs() > 1e-8 {
            return Err(Error::Singular(format!(
                "coefficient mass checks failed: r-scaled sum {sum_e}, reflected sum {sum_h}"
            )));
        }
        // Unscaled pack, taking each point from the shifted extraction whose
        // back-multiplier is <= 1 so its noise is never amplified. Where both
        // sides stay resolvable they must agree, which cross-checks the two
        // independent extractions against each other.
        let mut raw = vec![0.0f64; sat.points.len()];
        let mut cross = 0.0f64;
        for (i, mu) in sat.points.iter().enumerate() {
            let log_r = self.ps.r_exp(mu);
            let from_e = r_scaled[i] * (-log_r).exp();
            let from_h = r_inv_scaled[i] * log_r.exp();
            raw[i] = if log_r >= 0.0 { from_e } else { from_h };
            if log_r.abs() <= 6.0 {
                cross = cross.max((from_e - from_h).abs());
            }
        }
        if cross > 1e-8 {
            return Err(Error::Singular(format!(
                "shifted coefficient extractions disagree by {cross:.3e}"
            )));
        }
        let p1 = raw.iter().sum();
        let coeffs = Arc::new(SphericalCoeffs {
            lambda: lambda.to_vec(),
            sat,
            raw,
            r_scaled,
            r_inv_scaled,
            p1,
        });
        self.coeff_cache
            .lock()
            .unwrap()
            .insert(lambda.to_vec(), Arc::clone(&coeffs));
        Ok(coeffs)
    }

    /// P_λ(u) via coefficients: defined at singular characters too.
    pub fn eval(&self, lambda: &[i64], u: &TorusCharacter) -> Result<Complex64> {
        Ok(self.coefficients(lambda)?.eval(u))
    }

    /// P_λ(1).
    pub fn p_one(&self, lambda: &[i64]) -> Result<f64> {
        Ok(self.coefficients(lambda)?.p1)
    }

    /// Per-axis alias margins for windowed extraction on the r-torus: the
    /// r^μ-scaled coefficients decay by e^{−w_j} per frequency unit along
    /// axis j, so a single-axis wrap contributes below 2^{−ALIAS_BITS}.
    /// Mixed-sign wraps across a wall can evade this rate; those are caught
    /// by the extraction residue check and retried on a doubled grid.
    fn window_margins(&self) -> Vec<usize> {
        self.ps
            .r_weights()
            .iter()
            .map(|&wj| {
                assert!(wj > 0.0, "thickness gives positive radial weights");
                let bits_per_unit = wj / std::f64::consts::LN_2;
                (ALIAS_BITS / bits_per_unit).ceil() as usize + MARGIN_SLACK
            })
            .collect()
    }

    /// r^μ a_{λ,μ} for μ in the window box [lo, hi], without enumerating the
    /// full (possibly enormous) support of P_λ. Alias leakage from outside
    /// the window is held below the extraction residue tolerance.
    pub fn window_r_scaled(
        &self,
        lambda: &[i64],
        lo: &[i64],
        hi: &[i64],
    ) -> Result<HashMap<Coweight, f64>> {
        let rs = self.root();
        if !rs.is_dominant(lambda) {
            return Err(Error::InvalidParameters(
                "windowed coefficients are indexed by dominant coweights".into(),
            ));
        }
        let margins = self.window_margins();
        let w = self.ps.r_weights().to_vec();
        self.extract(lambda, &w, lo, hi, &margins)
    }

    /// Change of basis m_λ = Σ_{μ ⪯ λ} b_{λ,μ} P_μ by triangular
    /// elimination in the raw coefficient space.
    pub fn expand_monomial(&self, lambda: &[i64]) -> Result<BTreeMap<Coweight, f64>> {
        let rs = Arc::clone(self.root());
        if !rs.is_dominant(lambda) {
            return Err(Error::InvalidParameters(
                "monomial expansion needs a dominant coweight".into(),
            ));
        }
        let sat = rs.saturated_set(lambda)?;
        // Residual vector in raw coefficient space, aligned with sat.points.
        let mut residual = vec![0.0f64; sat.points.len()];
        for mu in rs.weyl_orbit(lambda)? {
            residual[sat.index[&mu]] = 1.0;
        }
        let mut order: Vec<Coweight> = sat.dominant_reps.clone();
        order.sort_by(|a, b| {
            self.ps
                .r_exp(b)
                .partial_cmp(&self.ps.r_exp(a))
                .unwrap()
                .then_with(|| a.cmp(b))
        });
        let mut out = BTreeMap::new();
        for mu in order {
            let idx = sat.index[&mu];
            let b = residual[idx];
            let cmu = self.coefficients(&mu)?;
            if b != 0.0 {
                let top = cmu.at(Scaling::Raw, &mu);
                let b = b / top;
                for (c, &a) in cmu.support().iter().zip(cmu.values(Scaling::Raw)) {
                    if a != 0.0 {
                        if let Some(&i) = sat.index.get(c) {
                            residual[i] -= b * a;
                        }
                    }
                }
                out.insert(mu, b);
            } else {
                out.insert(mu, 0.0);
            }
        }
        let worst = residual.iter().cloned().fold(0.0f64, |a, b| a.max(b.abs()));
        if worst > 1e-7 {
            return Err(Error::Singular(format!(
                "monomial elimination left residual {worst:.3e}"
            )));
        }
        Ok(out)
    }

    /// Expansion P_λ·P_μ = Σ_ν t_ν P_ν in the spherical basis. The t_ν are
    /// the transition weights of the radial chain: nonnegative (tiny
    /// roundoff negatives clamped) and summing to 1.
    pub fn structure_constants(&self, la: &[i64], mu: &[i64]) -> Result<StructureExpansion> {
        let rs = Arc::clone(self.root());
        let ca = self.coefficients(la)?;
        let cb = self.coefficients(mu)?;
        // Convolution in the r-scaled space.
        let mut prod: HashMap<Coweight, f64> = HashMap::new();
        for (x, &ex) in ca.support().iter().zip(ca.values(Scaling::RScaled)) {
            if ex == 0.0 {
                continue;
            }
            for (y, &ey) in cb.support().iter().zip(cb.values(Scaling::RScaled)) {
                if ey == 0.0 {
                    continue;
                }
                let key: Coweight = x.iter().zip(y).map(|(a, b)| a + b).collect();
                *prod.entry(key).or_insert(0.0) += ex * ey;
            }
        }
        let sum: Coweight = la.iter().zip(mu).map(|(a, b)| a + b).collect();
        let sat = rs.saturated_set(&sum)?;
        let mut order: Vec<Coweight> = sat.dominant_reps.clone();
        order.sort_by(|a, b| {
            self.ps
                .r_exp(b)
                .partial_cmp(&self.ps.r_exp(a))
                .unwrap()
                .then_with(|| a.cmp(b))
        });
        let mut coeffs = BTreeMap::new();
        let mut clamped = 0.0f64;
        for nu in order {
            let t = prod.get(&nu).copied().unwrap_or(0.0);
            let cnu = self.coefficients(&nu)?;
            let t = t / cnu.top_r_scaled();
            if t != 0.0 {
                for (c, &e) in cnu.support().iter().zip(cnu.values(Scaling::RScaled)) {
                    if e != 0.0 {
                        if let Some(v) = prod.get_mut(c) {
                            *v -= t * e;
                        } else if (t * e).abs() > 1e-12 {
                            prod.insert(c.clone(), -t * e);
                        }
                    }
                }
            }
            let t = if t < 0.0 {
                clamped += -t;
                if t < -1e-8 {
                    return Err(Error::Singular(format!(
                        "structure constant {t:.3e} negative beyond roundoff"
                    )));
                }
                0.0
            } else {
                t
            };
            coeffs.insert(nu, t);
        }
        let residual = prod.values().fold(0.0f64, |a, &b| a.max(b.abs()));
        if residual > 1e-7 {
            return Err(Error::Singular(format!(
                "spherical product elimination left residual {residual:.3e}"
            )));
        }
        let mass: f64 = coeffs.values().sum();
        if (mass - 1.0).abs() > 1e-7 {
            return Err(Error::Singular(format!(
                "spherical product mass {mass} differs from 1"
            )));
        }
        Ok(StructureExpansion {
            coeffs,
            clamped,
            residual,
        })
    }

    /// Whether h_u extends to a bounded operator: |u^{wλ_i}| ≤ r^{λ_i} for
    /// every fundamental coweight λ_i and every w ∈ W₀.
    pub fn is_bounded_character(&self, u: &TorusCharacter) -> Result<bool> {
        let rs = self.root();
        let weyl = rs.weyl()?;
        let n = rs.rank();
        for i in 0..n {
            let mut coords = vec![0i64; n];
            coords[i] = 1;
            let bound = self.ps.r_exp(&coords);
            for w in 0..weyl.order() {
                let img = weyl.apply(w, &coords);
                if u.log_abs(&img) > bound + 1e-9 * bound.abs().max(1.0) {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }
}

/// Result of expanding a product of spherical functions.
#[derive(Debug)]
pub struct StructureExpansion {
    /// ν ↦ t_ν, nonnegative, summing to 1.
    pub coeffs: BTreeMap<Coweight, f64>,
    /// Total negative mass clamped to zero.
    pub clamped: f64,
    /// Largest leftover after elimination.
    pub residual: f64,
}

/// Per-axis grid offsets for attempt `attempt`: fractional turns built
/// from square roots of distinct primes, which are linearly independent
/// over the rationals. No small integer combination of such offsets is an
/// integer, so a coroot's phase can never cancel identically on the grid
/// (a linear-in-axis scheme fails exactly that way on patterns like
/// (−1, 2, −1)). Retries shift by an independent prime vector, escaping
/// any accidental near-integer combination of the base offsets.
pub(crate) fn grid_offsets(n: usize, attempt: usize) -> Vec<f64> {
    const PRIMES: [f64; 16] = [
        2.0, 3.0, 5.0, 7.0, 11.0, 13.0, 17.0, 19.0, 23.0, 29.0, 31.0, 37.0, 41.0, 43.0, 47.0,
        53.0,
    ];
    assert!(n <= 8, "grid offsets support rank at most 8");
    (0..n)
        .map(|j| {
            let x = PRIMES[j].sqrt() + attempt as f64 * PRIMES[j + 8].sqrt();
            2.0 * std::f64::consts::PI * x.fract()
        })
        .collect()
}

/// In-place multidimensional FFT (row-major, forward).
pub(crate) fn fft_nd(data: &mut [Complex64], dims: &[usize], planner: &mut FftPlanner<f64>) {
    let total = data.len();
    for (axis, &len) in dims.iter().enumerate() {
        if len == 1 {
            continue;
        }
        let fft = planner.plan_fft_forward(len);
        let stride: usize = dims[axis + 1..].iter().product();
        let block = stride * len;
        let mut buf = vec![Complex64::new(0.0, 0.0); len];
        let mut base = 0;
        while base < total {
            for off in 0..stride {
                for (k, cell) in buf.iter_mut().enumerate() {
                    *cell = data[base + off + k * stride];
                }
                fft.process(&mut buf);
                for (k, cell) in buf.iter().enumerate() {
                    data[base + off + k * stride] = *cell;
                }
            }
            base += block;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::root_system::Family;
    use approx::assert_abs_diff_eq;

    fn make(family: Family, rank: usize, q: &[f64]) -> Spherical {
        let rs = Arc::new(RootSystem::new(family, rank).unwrap());
        let ps = Arc::new(ParameterSystem::new(rs, q.to_vec()).unwrap());
        Spherical::new(ps)
    }

    fn random_theta(n: usize, seed: u64) -> Vec<f64> {
        // Deterministic quasi-random angles away from the singular locus.
        (0..n)
            .map(|j| {
                let x = ((seed as f64 + 1.3) * (j as f64 + 2.7)).sin() * 0.5 + 0.5;
                0.3 + 5.5 * x
            })
            .collect()
    }

    /// Laurent coefficients of the tree spherical functions by the product
    /// recurrence (q+1)·P_1·P_k = q·P_{k+1} + P_{k−1}.
    fn tree_coeffs(q: f64, kmax: usize) -> Vec<HashMap<i64, f64>> {
        let s = q.sqrt() / (q + 1.0);
        let mut all: Vec<HashMap<i64, f64>> = Vec::new();
        all.push([(0i64, 1.0f64)].into_iter().collect());
        if kmax >= 1 {
            all.push([(1i64, s), (-1i64, s)].into_iter().collect());
        }
        for k in 1..kmax {
            let mut conv: HashMap<i64, f64> = HashMap::new();
            for (&m1, &a1) in &all[1] {
                for (&m2, &a2) in &all[k] {
                    *conv.entry(m1 + m2).or_insert(0.0) += a1 * a2;
                }
            }
            let mut next = HashMap::new();
            for (&m, &v) in &conv {
                let lower = all[k - 1].get(&m).copied().unwrap_or(0.0);
                let val = ((q + 1.0) * v - lower) / q;
                if val.abs() > 1e-300 {
                    next.insert(m, val);
                }
            }
            all.push(next);
        }
        all
    }

    fn tree_formula(q: f64, k: i64, z: Complex64) -> Complex64 {
        let one = Complex64::new(1.0, 0.0);
        let c = |w: Complex64| (one - w.powi(-2) / q) / (one - w.powi(-2));
        q.powf(-(k as f64) / 2.0) / (1.0 + 1.0 / q)
            * (c(z) * z.powi(k as i32) + c(z.powi(-1)) * z.powi(-(k as i32)))
    }

    #[test]
    fn c_at_r_is_poincare_series() {
        for (f, n, q) in [
            (Family::A, 2, vec![2.0, 2.0, 2.0]),
            (Family::C, 2, vec![2.0, 3.0, 2.0]),
            (Family::BC, 1, vec![4.0, 2.0]),
            (Family::BC, 2, vec![2.0, 3.0, 5.0]),
        ] {
            let sp = make(f, n, &q);
            let r = TorusCharacter::r_character(sp.params());
            let c = sp.c_function(&r).unwrap();
            let expected = sp.params().poincare_w0_inv().unwrap();
            assert_abs_diff_eq!(c.re, expected, epsilon = 1e-10 * expected);
            assert!(c.im.abs() < 1e-12);
        }
    }

    #[test]
    fn c_vanishes_at_reflected_r() {
        let sp = make(Family::A, 2, &[2.0, 2.0, 2.0]);
        let rs = Arc::clone(sp.root());
        let weyl = rs.weyl().unwrap();
        let (_, iperm) = sp.root_perm().unwrap();
        let r = TorusCharacter::r_character(sp.params());
        let l = sp.r2_all.len();
        let g: Vec<Complex64> = (0..l)
            .map(|s| sp.c_factor(sp.r2_all[s], &r).unwrap())
            .collect();
        for w in 0..weyl.order() {
            // c(w r) as a product of factors at w⁻¹-translated roots.
            let mut prod = Complex64::new(1.0, 0.0);
            for a in 0..sp.n_r2_plus() {
                prod *= g[iperm[w * l + a] as usize];
            }
            if w == 0 {
                assert!(prod.norm() > 1.0);
            } else {
                assert!(prod.norm() < 1e-10, "c(w r) = 0 for w != 1, got {prod}");
            }
        }
    }

    #[test]
    fn tree_formula_matches_generic_eval() {
        for q in [2.0, 3.0] {
            let sp = make(Family::A, 1, &[q, q]);
            for k in 0..=6i64 {
                for seed in 0..4u64 {
                    let theta = random_theta(1, seed);
                    // Unit and radially stretched characters.
                    for xi in [0.0, 0.17, -0.4] {
                        let u = TorusCharacter {
                            xi: vec![xi],
                            theta: theta.clone(),
                        };
                        let z = u.axis_value(0);
                        let got = sp.eval_generic(&[k], &u).unwrap();
                        let want = tree_formula(q, k, z);
                        assert!(
                            (got - want).norm() < 1e-10 * want.norm().max(1.0),
                            "q={q} k={k}: {got} vs {want}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn tree_coefficients_match_recurrence() {
        let q = 2.0;
        let sp = make(Family::A, 1, &[q, q]);
        let oracle = tree_coeffs(q, 12);
        for k in 0..=12i64 {
            let co = sp.coefficients(&[k]).unwrap();
            for (c, &a) in co.support().iter().zip(co.values(Scaling::Raw)) {
                let want = oracle[k as usize].get(&c[0]).copied().unwrap_or(0.0);
                assert!(
                    (a - want).abs() < 1e-12,
                    "k={k} mu={}: raw {a} vs oracle {want}",
                    c[0]
                );
                // Cross-scaling consistency on small examples.
                let e = co.at(Scaling::RScaled, c);
                assert!((e - a * q.powf(c[0] as f64 / 2.0)).abs() < 1e-12);
                let h = co.at(Scaling::RInvScaled, c);
                assert!((h - a * q.powf(-c[0] as f64 / 2.0)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn lambda_zero_is_the_constant_function() {
        let sp = make(Family::C, 2, &[2.0, 3.0, 2.0]);
        let co = sp.coefficients(&[0, 0]).unwrap();
        assert_eq!(co.support().len(), 1);
        assert_abs_diff_eq!(co.p1, 1.0, epsilon = 1e-12);
        let u = TorusCharacter::unit(random_theta(2, 7));
        let v = sp.eval_generic(&[0, 0], &u).unwrap();
        assert!((v - Complex64::new(1.0, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn coefficient_masses_and_positivity() {
        let cases = [
            (Family::A, 2, vec![2.0, 2.0, 2.0], vec![2i64, 1]),
            (Family::C, 2, vec![2.0, 3.0, 2.0], vec![1i64, 1]),
            (Family::BC, 2, vec![2.0, 3.0, 5.0], vec![1i64, 1]),
            (Family::BC, 1, vec![4.0, 2.0], vec![3i64]),
            (Family::G, 2, vec![3.0, 2.0, 3.0], vec![1i64, 1]),
        ];
        for (f, n, q, la) in cases {
            let sp = make(f, n, &q);
            let co = sp.coefficients(&la).unwrap();
            let se: f64 = co.values(Scaling::RScaled).iter().sum();
            let sh: f64 = co.values(Scaling::RInvScaled).iter().sum();
            assert!((se - 1.0).abs() < 1e-9, "{f}{n}: r-scaled sum {se}");
            assert!((sh - 1.0).abs() < 1e-9, "{f}{n}: reflected sum {sh}");
            assert!(co.p1 > 0.0 && co.p1 <= 1.0 + 1e-9);
            for &v in co.values(Scaling::Raw) {
                assert!(v >= 0.0);
            }
        }
    }

    #[test]
    fn generic_eval_matches_coefficient_eval() {
        let cases = [
            (Family::A, 2, vec![2.0, 2.0, 2.0], vec![2i64, 1]),
            (Family::BC, 2, vec![4.0, 2.0, 2.0], vec![1i64, 2]),
            (Family::G, 2, vec![3.0, 2.0, 3.0], vec![1i64, 1]),
        ];
        for (f, n, q, la) in cases {
            let sp = make(f, n, &q);
            let co = sp.coefficients(&la).unwrap();
            for seed in 0..5u64 {
                let u = TorusCharacter::unit(random_theta(n, seed));
                let got = sp.eval_generic(&la, &u).unwrap();
                let want = co.eval(&u);
                assert!(
                    (got - want).norm() < 1e-9 * want.norm().max(1.0),
                    "{f}{n} seed {seed}: {got} vs {want}"
                );
            }
        }
    }

    #[test]
    fn weyl_invariance_under_simple_reflections() {
        let sp = make(Family::C, 2, &[2.0, 3.0, 2.0]);
        let rs = Arc::clone(sp.root());
        let la = vec![1i64, 2];
        for seed in 0..3u64 {
            let u = TorusCharacter::unit(random_theta(2, seed));
            let base = sp.eval_generic(&la, &u).unwrap();
            for i in 0..2 {
                let v = u.reflect_simple(&rs, i);
                let refl = sp.eval_generic(&la, &v).unwrap();
                assert!((base - refl).norm() < 1e-9 * base.norm().max(1.0));
            }
        }
    }

    #[test]
    fn star_symmetry_via_inverse_character() {
        let sp = make(Family::A, 2, &[2.0, 2.0, 2.0]);
        let rs = Arc::clone(sp.root());
        let la = vec![2i64, 0];
        let star = rs.star_coweight(&la);
        assert_eq!(star, vec![0, 2]);
        for seed in 0..4u64 {
            let u = TorusCharacter::unit(random_theta(2, seed));
            let a = sp.eval_generic(&star, &u).unwrap();
            let b = sp.eval_generic(&la, &u.inverse()).unwrap();
            assert!((a - b).norm() < 1e-9 * a.norm().max(1.0));
        }
    }

    #[test]
    fn unit_torus_bound_and_quotient_character_equality() {
        let sp = make(Family::A, 2, &[2.0, 2.0, 2.0]);
        let rs = Arc::clone(sp.root());
        let la = vec![1i64, 1];
        let p1 = sp.p_one(&la).unwrap();
        for seed in 0..20u64 {
            let u = TorusCharacter::unit(random_theta(2, seed));
            let v = sp.eval(&la, &u).unwrap();
            assert!(v.norm() <= p1 + 1e-9);
        }
        // At the P/Q quotient characters the bound is attained exactly.
        for ch in rs.quotient_characters() {
            let theta: Vec<f64> = ch
                .phases
                .iter()
                .map(|p| {
                    2.0 * std::f64::consts::PI * num_traits::ToPrimitive::to_f64(p).unwrap()
                })
                .collect();
            let u = TorusCharacter::unit(theta);
            let v = sp.eval(&la, &u).unwrap();
            let expect = u.eval(&la) * p1;
            assert!((v - expect).norm() < 1e-10);
        }
    }

    #[test]
    fn bc2_first_fundamental_closed_form() {
        for q in [vec![2.0, 3.0, 5.0], vec![4.0, 2.0, 2.0]] {
            let sp = make(Family::BC, 2, &q);
            let (q0, q1, qn) = (q[0], q[1], q[2]);
            let a = (q0 * qn).sqrt();
            let nl = sp.params().n_lambda(&[1, 0]).unwrap();
            for seed in 0..6u64 {
                let u = TorusCharacter::unit(random_theta(2, seed));
                let t1 = u.eval(&[1, 0]);
                let t2 = u.eval(&[-1, 1]);
                let want = ((q0 - 1.0) * (1.0 + q1)
                    + a * q1 * (t1 + 1.0 / t1 + t2 + 1.0 / t2))
                    / nl;
                let got = sp.eval_generic(&[1, 0], &u).unwrap();
                assert!(
                    (got - want).norm() < 1e-10 * want.norm().max(1.0),
                    "{got} vs {want}"
                );
            }
        }
    }

    #[test]
    fn tree_structure_constants() {
        let q = 2.0;
        let sp = make(Family::A, 1, &[q, q]);
        for k in 1..=6i64 {
            let exp = sp.structure_constants(&[k], &[1]).unwrap();
            assert!(exp.residual < 1e-10);
            let up = exp.coeffs.get(&vec![k + 1]).copied().unwrap();
            let down = exp.coeffs.get(&vec![k - 1]).copied().unwrap();
            assert_abs_diff_eq!(up, q / (q + 1.0), epsilon = 1e-10);
            assert_abs_diff_eq!(down, 1.0 / (q + 1.0), epsilon = 1e-10);
        }
    }

    #[test]
    fn identity_structure_constant() {
        let sp = make(Family::C, 2, &[2.0, 3.0, 2.0]);
        let la = vec![1i64, 1];
        let exp = sp.structure_constants(&la, &[0, 0]).unwrap();
        for (nu, &t) in &exp.coeffs {
            let want = if *nu == la { 1.0 } else { 0.0 };
            assert!((t - want).abs() < 1e-10);
        }
    }

    #[test]
    fn structure_constants_reproduce_products() {
        let cases = [
            (Family::A, 2, vec![2.0, 2.0, 2.0], vec![1i64, 0], vec![1i64, 0]),
            (Family::A, 2, vec![2.0, 2.0, 2.0], vec![1i64, 0], vec![0i64, 1]),
            (Family::C, 2, vec![2.0, 3.0, 2.0], vec![1i64, 0], vec![0i64, 1]),
            (Family::BC, 1, vec![4.0, 2.0], vec![2i64], vec![1i64]),
            (Family::BC, 2, vec![2.0, 3.0, 5.0], vec![1i64, 0], vec![1i64, 0]),
        ];
        for (f, n, q, la, mu) in cases {
            let sp = make(f, n, &q);
            let exp = sp.structure_constants(&la, &mu).unwrap();
            let mass: f64 = exp.coeffs.values().sum();
            assert!((mass - 1.0).abs() < 1e-9);
            for seed in 0..3u64 {
                let u = TorusCharacter::unit(random_theta(n, seed));
                let lhs = sp.eval(&la, &u).unwrap() * sp.eval(&mu, &u).unwrap();
                let mut rhs = Complex64::new(0.0, 0.0);
                for (nu, &t) in &exp.coeffs {
                    if t != 0.0 {
                        rhs += t * sp.eval(nu, &u).unwrap();
                    }
                }
                assert!(
                    (lhs - rhs).norm() < 1e-9,
                    "{f}{n} {la:?}x{mu:?}: {lhs} vs {rhs}"
                );
            }
        }
    }

    #[test]
    fn monomial_expansion_reconstructs() {
        let cases = [
            (Family::A, 2, vec![2.0, 2.0, 2.0], vec![2i64, 1]),
            (Family::C, 2, vec![2.0, 3.0, 2.0], vec![1i64, 1]),
            (Family::BC, 2, vec![2.0, 3.0, 5.0], vec![1i64, 1]),
        ];
        for (f, n, q, la) in cases {
            let sp = make(f, n, &q);
            let b = sp.expand_monomial(&la).unwrap();
            assert_abs_diff_eq!(
                b.get(&la).copied().unwrap() * sp.coefficients(&la).unwrap().at(
                    Scaling::Raw,
                    &la
                ),
                1.0,
                epsilon = 1e-9
            );
            for seed in 0..5u64 {
                let u = TorusCharacter::unit(random_theta(n, seed));
                let want = sp.monomial(&la, &u).unwrap();
                let mut got = Complex64::new(0.0, 0.0);
                for (mu, &bv) in &b {
                    if bv != 0.0 {
                        got += bv * sp.eval(mu, &u).unwrap();
                    }
                }
                assert!(
                    (got - want).norm() < 1e-8 * want.norm().max(1.0),
                    "{f}{n}: {got} vs {want}"
                );
            }
        }
    }

    #[test]
    fn monomial_zero_is_constant() {
        let sp = make(Family::A, 2, &[2.0, 2.0, 2.0]);
        let b = sp.expand_monomial(&[0, 0]).unwrap();
        assert_eq!(b.len(), 1);
        assert_abs_diff_eq!(b.get(&vec![0i64, 0]).copied().unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn boundedness_decisions() {
        let sp = make(Family::A, 1, &[2.0, 2.0]);
        // Unit torus characters are bounded.
        assert!(sp
            .is_bounded_character(&TorusCharacter::unit(vec![1.234]))
            .unwrap());
        // The r-shifted torus is bounded.
        let u = TorusCharacter::r_shifted(sp.params(), vec![0.7]);
        assert!(sp.is_bounded_character(&u).unwrap());
        // |u^{λ₁}| = 2 > √2 = r^{λ₁} is not.
        let v = TorusCharacter {
            xi: vec![2.0f64.ln()],
            theta: vec![0.0],
        };
        assert!(!sp.is_bounded_character(&v).unwrap());
        // Slight inflation of r fails in rank 2 as well.
        let sp = make(Family::C, 2, &[2.0, 3.0, 2.0]);
        let mut u = TorusCharacter::r_shifted(sp.params(), vec![0.3, 0.9]);
        assert!(sp.is_bounded_character(&u).unwrap());
        for x in u.xi.iter_mut() {
            *x *= 1.01;
        }
        assert!(!sp.is_bounded_character(&u).unwrap());
    }

    #[test]
    fn window_matches_full_extraction() {
        let sp = make(Family::A, 2, &[2.0, 2.0, 2.0]);
        let la = vec![4i64, 3];
        let full = sp.coefficients(&la).unwrap();
        let lo = vec![1i64, 0];
        let hi = vec![4i64, 3];
        let win = sp.window_r_scaled(&la, &lo, &hi).unwrap();
        for (c, &v) in &win {
            let want = full.at(Scaling::RScaled, c);
            assert!(
                (v - want).abs() < 1e-11,
                "window {c:?}: {v} vs full {want}"
            );
        }
    }

    #[test]
    fn tree_window_matches_recurrence_tail() {
        let q = 2.0;
        let sp = make(Family::A, 1, &[q, q]);
        let oracle = tree_coeffs(q, 10);
        let win = sp.window_r_scaled(&[10], &[4], &[10]).unwrap();
        for m in 4..=10i64 {
            let want = oracle[10].get(&m).copied().unwrap_or(0.0) * q.powf(m as f64 / 2.0);
            let got = win.get(&vec![m]).copied().unwrap();
            assert!((got - want).abs() < 1e-11, "m={m}: {got} vs {want}");
        }
    }

    #[test]
    fn p_one_is_r_inverse_times_polynomial() {
        // P_λ(1)·r^λ should be fit exactly by a low-degree polynomial in the
        // coordinates ⟨λ,α_i⟩ on a grid of dominant coweights.
        let sp = make(Family::A, 2, &[2.0, 2.0, 2.0]);
        let deg = sp.root().r2_plus_indices().len(); // 3
        let mut rows = Vec::new();
        let mut rhs = Vec::new();
        for c1 in 0..5i64 {
            for c2 in 0..5i64 {
                let la = vec![c1, c2];
                let val = sp.p_one(&la).unwrap() * sp.params().r_exp(&la).exp();
                let mut row = Vec::new();
                for d1 in 0..=deg {
                    for d2 in 0..=(deg - d1) {
                        row.push((c1 as f64).powi(d1 as i32) * (c2 as f64).powi(d2 as i32));
                    }
                }
                rows.push(row);
                rhs.push(val);
            }
        }
        let coef = crate::linalg::lstsq(&rows, &rhs).unwrap();
        for (row, &want) in rows.iter().zip(&rhs) {
            let got: f64 = row.iter().zip(&coef).map(|(a, b)| a * b).sum();
            assert!(
                (got - want).abs() < 1e-8 * want.abs().max(1.0),
                "{got} vs {want}"
            );
        }
    }

    #[test]
    fn singular_input_is_reported() {
        let sp = make(Family::A, 1, &[2.0, 2.0]);
        let u = TorusCharacter::unit(vec![0.0]);
        match sp.c_function(&u) {
            Err(Error::Singular(msg)) => assert!(msg.contains("vanishes")),
            other => panic!("expected singular error, got {other:?}"),
        }
        assert!(sp.eval_generic(&[3], &u).is_err());
        // Coefficient evaluation is defined there: P_3(1) = Σ_m a_{3,m}.
        let v = sp.eval(&[3], &u).unwrap();
        let want: f64 = tree_coeffs(2.0, 3)[3].values().sum();
        assert!((v - Complex64::new(want, 0.0)).norm() < 1e-12);
    }
}
