//! Isotropic random walks driven by a one-step law on dominant coweights:
//! lattice moments, periodicity data, local-limit constants, exact radial
//! dynamic programming, and Monte Carlo simulation of the radial chain.
//!
//! The radial chain moves from ν to κ with the weight of P_κ in P_ν·P_λ,
//! mixed over the one-step law. Deep in the chamber that row is the
//! translation-invariant table μ ↦ r^μ a_{λ,μ}; near the walls rows are
//! produced by windowed coefficient extraction and cached.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, RwLock};

use num_integer::Integer;
use num_traits::ToPrimitive;
use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::linalg::{self, Rat};
use crate::quadrature;
use crate::root_system::{Coweight, RootSystem};
use crate::spherical::{Scaling, Spherical, TorusCharacter};
use crate::{Error, Result};

/// Row sums and DP mass must stay within this of 1.
const ROW_MASS_TOL: f64 = 1e-7;
const DP_MASS_TOL: f64 = 1e-9;
/// Wall rows are cleared wholesale if the cache ever grows past this.
const WALL_CACHE_CAP: usize = 1 << 18;

/// Normalized one-step law: dominant coweight ↦ probability of averaging
/// over the corresponding sphere.
#[derive(Clone, Debug)]
pub struct WalkSpec {
    terms: BTreeMap<Coweight, f64>,
}

impl WalkSpec {
    pub fn new(rs: &RootSystem, raw: BTreeMap<Coweight, f64>) -> Result<Self> {
        let mut terms = BTreeMap::new();
        for (la, w) in raw {
            if !w.is_finite() || w < 0.0 {
                return Err(Error::InvalidParameters(
                    "one-step weights must be finite and nonnegative".into(),
                ));
            }
            if la.len() != rs.rank() {
                return Err(Error::InvalidParameters(format!(
                    "one-step term {la:?} has wrong rank"
                )));
            }
            if !rs.is_dominant(&la) {
                return Err(Error::InvalidParameters(format!(
                    "one-step term {la:?} is not dominant"
                )));
            }
            if w > 0.0 {
                *terms.entry(la).or_insert(0.0) += w;
            }
        }
        let total: f64 = terms.values().sum();
        if total <= 0.0 {
            return Err(Error::InvalidParameters("one-step law has no mass".into()));
        }
        let off_origin: f64 = terms
            .iter()
            .filter(|(la, _)| la.iter().any(|&c| c != 0))
            .map(|(_, &w)| w)
            .sum();
        if off_origin <= 0.0 {
            return Err(Error::InvalidParameters(
                "one-step law must put mass on a nonzero sphere".into(),
            ));
        }
        for w in terms.values_mut() {
            *w /= total;
        }
        Ok(WalkSpec { terms })
    }

    pub fn terms(&self) -> &BTreeMap<Coweight, f64> {
        &self.terms
    }

    /// Weight of the identity sphere (laziness).
    pub fn lazy_part(&self) -> f64 {
        self.terms
            .iter()
            .find(|(la, _)| la.iter().all(|&c| c == 0))
            .map(|(_, &w)| w)
            .unwrap_or(0.0)
    }
}

/// One transition row of the radial chain.
#[derive(Debug)]
pub struct KernelRow {
    pub targets: Vec<Coweight>,
    pub probs: Vec<f64>,
    sampler: WeightedIndex<f64>,
}

/// Shared fast path for states away from every wall: increments and their
/// law do not depend on the state there.
struct DeepKit {
    /// Minimum coordinates for the translation-invariant row to apply.
    thresholds: Vec<i64>,
    incs: Vec<Coweight>,
    probs: Vec<f64>,
    sampler: WeightedIndex<f64>,
}

/// First and second moments of the walk in coweight coordinates.
#[derive(Clone, Debug)]
pub struct Moments {
    /// Drift γ_j of the radial chain.
    pub drift: Vec<f64>,
    /// The same drift computed through the reflected coefficients; agrees
    /// with `drift` to roundoff and is kept as a consistency probe.
    pub drift_reflected: Vec<f64>,
    /// Second moment matrix of the deep increment law.
    pub second_moment: Vec<Vec<f64>>,
    /// Γ = second moment − drift ⊗ drift; the CLT covariance.
    pub clt_covariance: Vec<Vec<f64>>,
    /// Mean and covariance of the one-step horocycle mixture (the lattice
    /// walk); related to drift and Γ by the diagram involution.
    pub horocycle_mean: Vec<f64>,
    pub horocycle_cov: Vec<Vec<f64>>,
    /// b_{jk} = (2 Â(1))⁻¹ Σ_λ a_λ Σ_μ ⟨μ,α_j⟩⟨μ,α_k⟩ a_{λ,μ}.
    pub b_matrix: Vec<Vec<f64>>,
    /// b with b_{jk} = ⟨α_j,α_k⟩·b.
    pub b_scalar: f64,
    /// max |b_{jk} − ⟨α_j,α_k⟩ b|.
    pub b_residual: f64,
    /// Â(1) = Σ_λ a_λ P_λ(1).
    pub spectral_radius: f64,
}

/// A residual character fixed by the walk: all spheres of the one-step law
/// see the same root of unity.
#[derive(Clone, Debug)]
pub struct WalkCharacter {
    /// Phase of u₀^{λ_j} per axis, as a fraction of a full turn.
    pub phases: Vec<Rat>,
    /// The common phase u₀^λ over the support, as a fraction of a turn.
    pub psi: Rat,
}

#[derive(Clone, Debug)]
pub struct PeriodInfo {
    pub members: Vec<WalkCharacter>,
    pub period: usize,
    pub irreducible_aperiodic: bool,
}

/// Constants of the k^{−|R₂⁺|−n/2} return asymptotics.
#[derive(Clone, Debug)]
pub struct LltConstants {
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    /// K₁K₂K₃.
    pub product: f64,
    /// |R₂⁺| + n/2.
    pub exponent: f64,
    pub b_scalar: f64,
    pub j_quadrature: f64,
    pub j_closed_form: Option<f64>,
    pub spectral_radius: f64,
    pub u_a_size: usize,
    pub period: usize,
}

/// Empirical versus predicted law of (X_k − kγ)/√k for the radial chain.
#[derive(Clone, Debug)]
pub struct CltReport {
    pub steps: usize,
    pub trajectories: usize,
    pub drift: Vec<f64>,
    pub predicted_cov: Vec<Vec<f64>>,
    pub predicted_corr: Vec<Vec<f64>>,
    pub empirical_mean: Vec<f64>,
    pub empirical_cov: Vec<Vec<f64>>,
    pub empirical_corr: Vec<Vec<f64>>,
    pub max_mean_abs: f64,
    pub max_var_rel_err: f64,
    pub max_corr_err: f64,
}

pub struct Walk {
    sp: Arc<Spherical>,
    spec: WalkSpec,
    deep: RwLock<Option<Arc<DeepKit>>>,
    wall_rows: RwLock<HashMap<Coweight, Arc<KernelRow>>>,
}

impl Walk {
    pub fn new(sp: Arc<Spherical>, spec: WalkSpec) -> Self {
        Walk {
            sp,
            spec,
            deep: RwLock::new(None),
            wall_rows: RwLock::new(HashMap::new()),
        }
    }

    pub fn spec(&self) -> &WalkSpec {
        &self.spec
    }

    pub fn spherical(&self) -> &Arc<Spherical> {
        &self.sp
    }

    fn root(&self) -> &Arc<RootSystem> {
        self.sp.root()
    }

    /// Â(u) = Σ_λ a_λ P_λ(u).
    pub fn a_hat(&self, u: &TorusCharacter) -> Result<rustfft::num_complex::Complex64> {
        let mut acc = rustfft::num_complex::Complex64::new(0.0, 0.0);
        for (la, &w) in self.spec.terms() {
            acc += w * self.sp.coefficients(la)?.eval(u);
        }
        Ok(acc)
    }

    /// Â(1), the spectral radius of the averaged operator.
    pub fn a_hat_one(&self) -> Result<f64> {
        let mut acc = 0.0;
        for (la, &w) in self.spec.terms() {
            acc += w * self.sp.p_one(la)?;
        }
        Ok(acc)
    }

    /// Law of the increment seen from a boundary point: μ ↦ r^μ a_{λ,−μ}.
    pub fn horocycle_distribution(&self, la: &[i64]) -> Result<BTreeMap<Coweight, f64>> {
        let co = self.sp.coefficients(la)?;
        let mut out = BTreeMap::new();
        for (mu, &h) in co.support().iter().zip(co.values(Scaling::RInvScaled)) {
            if h != 0.0 {
                out.insert(mu.iter().map(|&c| -c).collect(), h);
            }
        }
        Ok(out)
    }

    /// The diagram involution as a permutation of coordinate axes.
    fn star_axes(&self) -> Vec<usize> {
        let rs = self.root();
        let n = rs.rank();
        (0..n)
            .map(|j| {
                let mut unit = vec![0i64; n];
                unit[j] = 1;
                let star = rs.star_coweight(&unit);
                star.iter().position(|&c| c == 1).unwrap()
            })
            .collect()
    }

    /// Gram matrix ⟨α_j, α_k⟩ of the simple roots.
    fn simple_gram(&self) -> Vec<Vec<f64>> {
        let rs = self.root();
        let n = rs.rank();
        let mut g = vec![vec![0.0; n]; n];
        for j in 0..n {
            for k in 0..n {
                let aj = &rs.roots()[rs.simple_indices()[j]].ambient;
                let ak = &rs.roots()[rs.simple_indices()[k]].ambient;
                g[j][k] = aj
                    .iter()
                    .zip(ak)
                    .map(|(x, y)| (x * y).to_f64().unwrap())
                    .sum();
            }
        }
        g
    }

    pub fn moments(&self) -> Result<Moments> {
        let rs = Arc::clone(self.root());
        let n = rs.rank();
        let star = self.star_axes();
        let mut drift = vec![0.0; n];
        let mut drift_reflected = vec![0.0; n];
        let mut hmean = vec![0.0; n];
        let mut second = vec![vec![0.0; n]; n];
        let mut hcov2 = vec![vec![0.0; n]; n];
        let mut braw = vec![vec![0.0; n]; n];
        let mut ahat1 = 0.0;
        for (la, &w) in self.spec.terms() {
            let co = self.sp.coefficients(la)?;
            ahat1 += w * co.p1;
            for ((mu, &e), (&h, &a)) in co
                .support()
                .iter()
                .zip(co.values(Scaling::RScaled))
                .zip(
                    co.values(Scaling::RInvScaled)
                        .iter()
                        .zip(co.values(Scaling::Raw)),
                )
            {
                for j in 0..n {
                    let cj = mu[j] as f64;
                    drift[j] += w * cj * e;
                    drift_reflected[j] -= w * mu[star[j]] as f64 * h;
                    hmean[j] -= w * cj * h;
                    for k in 0..n {
                        let ck = mu[k] as f64;
                        second[j][k] += w * cj * ck * e;
                        hcov2[j][k] += w * cj * ck * h;
                        braw[j][k] += 0.5 * w * cj * ck * a;
                    }
                }
            }
        }
        let mut clt_cov = vec![vec![0.0; n]; n];
        let mut horo_cov = vec![vec![0.0; n]; n];
        for j in 0..n {
            for k in 0..n {
                clt_cov[j][k] = second[j][k] - drift[j] * drift[k];
                horo_cov[j][k] = hcov2[j][k] - hmean[j] * hmean[k];
            }
        }
        // Γ must be positive definite for the CLT scaling to make sense.
        linalg::cholesky(&clt_cov).map_err(|_| {
            Error::Singular("CLT covariance is not positive definite".into())
        })?;
        let gram = self.simple_gram();
        let mut b_matrix = vec![vec![0.0; n]; n];
        for j in 0..n {
            for k in 0..n {
                b_matrix[j][k] = braw[j][k] / ahat1;
            }
        }
        // Fit the single scalar b of b_{jk} = ⟨α_j,α_k⟩ b at the largest
        // Gram entry and report the worst deviation.
        let (mut j0, mut k0) = (0, 0);
        for j in 0..n {
            for k in 0..n {
                if gram[j][k].abs() > gram[j0][k0].abs() {
                    (j0, k0) = (j, k);
                }
            }
        }
        let b_scalar = b_matrix[j0][k0] / gram[j0][k0];
        let mut b_residual = 0.0f64;
        for j in 0..n {
            for k in 0..n {
                b_residual = b_residual.max((b_matrix[j][k] - gram[j][k] * b_scalar).abs());
            }
        }
        Ok(Moments {
            drift,
            drift_reflected,
            second_moment: second,
            clt_covariance: clt_cov,
            horocycle_mean: hmean,
            horocycle_cov: horo_cov,
            b_matrix,
            b_scalar,
            b_residual,
            spectral_radius: ahat1,
        })
    }

    /// Characters of the finite quotient torus agreeing on the whole
    /// support of the one-step law, with the period they induce.
    pub fn period_info(&self) -> Result<PeriodInfo> {
        let rs = self.root();
        let mut members = Vec::new();
        for ch in rs.quotient_characters() {
            let mut common: Option<Rat> = None;
            let mut ok = true;
            for la in self.spec.terms().keys() {
                let mut phase = Rat::new(0, 1);
                for (j, &c) in la.iter().enumerate() {
                    phase += ch.phases[j] * Rat::new(c, 1);
                }
                let phase = linalg::frac_mod1(phase);
                match &common {
                    None => common = Some(phase),
                    Some(p) if *p == phase => {}
                    Some(_) => {
                        ok = false;
                        break;
                    }
                }
            }
            if ok {
                members.push(WalkCharacter {
                    phases: ch.phases.clone(),
                    psi: common.unwrap(),
                });
            }
        }
        let mut period: i64 = 1;
        for m in &members {
            period = period.lcm(m.psi.denom());
        }
        let irreducible_aperiodic = members.len() == 1;
        Ok(PeriodInfo {
            members,
            period: period as usize,
            irreducible_aperiodic,
        })
    }

    pub fn llt_constants(&self) -> Result<LltConstants> {
        let rs = Arc::clone(self.root());
        let ps = self.sp.params();
        let n = rs.rank();
        let npos = rs.r2_plus_indices().len();
        let k1 = ps.poincare_w0_inv()?
            / (rs.weyl()?.order() as f64 * (2.0 * std::f64::consts::PI).powi(n as i32));
        let mut k2 = 1.0f64;
        for &ri in rs.r2_plus_indices() {
            let th = (-0.5 * ps.ln_tau(ri)).exp();
            let t2inv = match rs.roots()[ri].double_idx {
                Some(d) => (-ps.ln_tau(d)).exp(),
                None => 1.0,
            };
            let factor = (1.0 - t2inv * th) * (1.0 + th);
            k2 /= factor * factor;
        }
        let j_quad = quadrature::j_integral(&rs)?;
        let j_closed = quadrature::j_closed_form(rs.family(), n);
        if let Some(cf) = j_closed {
            if (j_quad - cf).abs() > 1e-6 * cf.abs() {
                return Err(Error::Singular(format!(
                    "Gaussian polynomial integral {j_quad} disagrees with its closed form {cf}"
                )));
            }
        }
        let m = self.moments()?;
        let exponent = npos as f64 + n as f64 / 2.0;
        let k3 = m.b_scalar.powf(-exponent) * j_quad;
        let info = self.period_info()?;
        Ok(LltConstants {
            k1,
            k2,
            k3,
            product: k1 * k2 * k3,
            exponent,
            b_scalar: m.b_scalar,
            j_quadrature: j_quad,
            j_closed_form: j_closed,
            spectral_radius: m.spectral_radius,
            u_a_size: info.members.len(),
            period: info.period,
        })
    }

    /// Leading term of the k-step probability of one vertex of type
    /// `target`: |𝕌_A| K₁K₂K₃ P(1) Â(1)^k k^{−exp} when the residual
    /// characters align, exactly 0 otherwise.
    pub fn llt_asymptote(&self, k: u64, target: &[i64]) -> Result<f64> {
        let info = self.period_info()?;
        // Σ_{u₀} u₀^{−target} ψ(u₀)^k is |𝕌_A| when the character is
        // trivial on every member and 0 otherwise; phases are exact
        // rationals so the test is exact.
        for m in &info.members {
            let mut phase = m.psi * Rat::new(k as i64, 1);
            for (j, &c) in target.iter().enumerate() {
                phase -= m.phases[j] * Rat::new(c, 1);
            }
            if linalg::frac_mod1(phase) != Rat::new(0, 1) {
                return Ok(0.0);
            }
        }
        let lc = self.llt_constants()?;
        let p1 = self.sp.p_one(target)?;
        Ok(info.members.len() as f64
            * lc.product
            * p1
            * lc.spectral_radius.powi(k as i32)
            * (k as f64).powf(-lc.exponent))
    }

    fn deep_kit(&self) -> Result<Arc<DeepKit>> {
        if let Some(k) = self.deep.read().unwrap().as_ref() {
            return Ok(Arc::clone(k));
        }
        let rs = Arc::clone(self.root());
        let n = rs.rank();
        let mut thresholds = vec![0i64; n];
        let mut table: BTreeMap<Coweight, f64> = BTreeMap::new();
        for (la, &w) in self.spec.terms() {
            let co = self.sp.coefficients(la)?;
            for (mu, &e) in co.support().iter().zip(co.values(Scaling::RScaled)) {
                if e != 0.0 {
                    *table.entry(mu.clone()).or_insert(0.0) += w * e;
                }
                for j in 0..n {
                    thresholds[j] = thresholds[j].max(-mu[j]);
                }
            }
        }
        let incs: Vec<Coweight> = table.keys().cloned().collect();
        let probs: Vec<f64> = table.values().cloned().collect();
        let sampler = WeightedIndex::new(&probs)
            .map_err(|e| Error::InvalidParameters(format!("deep row weights: {e}")))?;
        let kit = Arc::new(DeepKit {
            thresholds,
            incs,
            probs,
            sampler,
        });
        *self.deep.write().unwrap() = Some(Arc::clone(&kit));
        Ok(kit)
    }

    fn is_deep(kit: &DeepKit, nu: &[i64]) -> bool {
        nu.iter().zip(&kit.thresholds).all(|(&c, &t)| c >= t)
    }

    /// Transition row of the radial chain at ν (deep rows translated on
    /// the fly, wall rows cached).
    pub fn kernel_row(&self, nu: &[i64]) -> Result<Arc<KernelRow>> {
        let kit = self.deep_kit()?;
        if Self::is_deep(&kit, nu) {
            let targets: Vec<Coweight> = kit
                .incs
                .iter()
                .map(|mu| nu.iter().zip(mu).map(|(a, b)| a + b).collect())
                .collect();
            let sampler = WeightedIndex::new(&kit.probs)
                .map_err(|e| Error::InvalidParameters(format!("row weights: {e}")))?;
            return Ok(Arc::new(KernelRow {
                targets,
                probs: kit.probs.clone(),
                sampler,
            }));
        }
        if let Some(r) = self.wall_rows.read().unwrap().get(nu) {
            return Ok(Arc::clone(r));
        }
        let row = Arc::new(self.build_wall_row(nu)?);
        let mut guard = self.wall_rows.write().unwrap();
        if guard.len() >= WALL_CACHE_CAP {
            guard.clear();
        }
        Ok(Arc::clone(
            guard.entry(nu.to_vec()).or_insert(row),
        ))
    }

    fn build_wall_row(&self, nu: &[i64]) -> Result<KernelRow> {
        let rs = Arc::clone(self.root());
        if !rs.is_dominant(nu) {
            return Err(Error::InvalidParameters(
                "radial states are dominant coweights".into(),
            ));
        }
        let mut acc: BTreeMap<Coweight, f64> = BTreeMap::new();
        for (la, &w) in self.spec.terms() {
            if la.iter().all(|&c| c == 0) {
                *acc.entry(nu.to_vec()).or_insert(0.0) += w;
                continue;
            }
            for (kappa, beta) in self.wall_row_single(nu, la)? {
                if beta != 0.0 {
                    *acc.entry(kappa).or_insert(0.0) += w * beta;
                }
            }
        }
        let mass: f64 = acc.values().sum();
        if (mass - 1.0).abs() > ROW_MASS_TOL {
            return Err(Error::Singular(format!(
                "radial row at {nu:?} has mass {mass}"
            )));
        }
        let mut targets = Vec::with_capacity(acc.len());
        let mut probs = Vec::with_capacity(acc.len());
        for (kappa, p) in acc {
            if p < 0.0 {
                if p < -1e-8 {
                    return Err(Error::Singular(format!(
                        "radial row at {nu:?} has negative weight {p}"
                    )));
                }
                continue;
            }
            if p > 0.0 {
                targets.push(kappa);
                probs.push(p);
            }
        }
        let sampler = WeightedIndex::new(&probs)
            .map_err(|e| Error::InvalidParameters(format!("row weights: {e}")))?;
        Ok(KernelRow {
            targets,
            probs,
            sampler,
        })
    }

    /// Coefficients of P_ν P_λ = Σ t_κ P_κ for a state ν near a wall, by
    /// triangular elimination of r^μ-scaled coefficients on the window
    /// ν + box(Π_λ).
    fn wall_row_single(&self, nu: &[i64], la: &[i64]) -> Result<Vec<(Coweight, f64)>> {
        let rs = Arc::clone(self.root());
        let n = rs.rank();
        let cl = self.sp.coefficients(la)?;
        let wlo: Vec<i64> = (0..n).map(|j| nu[j] + cl.sat().lo[j]).collect();
        let whi: Vec<i64> = (0..n).map(|j| nu[j] + cl.sat().hi[j]).collect();
        // The ν-window must be wide enough that its convolution with the
        // λ-table covers [wlo, whi].
        let nlo: Vec<i64> = (0..n).map(|j| wlo[j] - cl.sat().hi[j]).collect();
        let nhi: Vec<i64> = (0..n).map(|j| whi[j] - cl.sat().lo[j]).collect();
        let enu: BTreeMap<Coweight, f64> = self
            .sp
            .window_r_scaled(nu, &nlo, &nhi)?
            .into_iter()
            .collect();
        let mut conv: BTreeMap<Coweight, f64> = BTreeMap::new();
        for (x, &ex) in &enu {
            if ex == 0.0 {
                continue;
            }
            for (y, &ey) in cl.support().iter().zip(cl.values(Scaling::RScaled)) {
                if ey == 0.0 {
                    continue;
                }
                let z: Coweight = x.iter().zip(y).map(|(a, b)| a + b).collect();
                if z.iter().zip(&wlo).zip(&whi).all(|((&c, &l), &h)| c >= l && c <= h) {
                    *conv.entry(z).or_insert(0.0) += ex * ey;
                }
            }
        }
        // Candidates: dominant lattice points of the window, steepest
        // radial weight first.
        let mut cands: Vec<Coweight> = Vec::new();
        let mut cur = wlo.clone();
        'outer: loop {
            if rs.is_dominant(&cur) {
                cands.push(cur.clone());
            }
            let mut d = n;
            loop {
                if d == 0 {
                    break 'outer;
                }
                d -= 1;
                cur[d] += 1;
                if cur[d] <= whi[d] {
                    break;
                }
                cur[d] = wlo[d];
            }
        }
        let ps = self.sp.params();
        cands.sort_by(|a, b| {
            ps.r_exp(b)
                .partial_cmp(&ps.r_exp(a))
                .unwrap()
                .then_with(|| a.cmp(b))
        });
        // Residuals below the aliasing noise of the windowed tables are
        // not evidence of a real term; dividing them by a small leading
        // coefficient would manufacture spurious entries.
        let conv_scale = conv.values().fold(0.0f64, |a, &b| a.max(b.abs()));
        let noise_floor = 1e-12 * conv_scale;
        let mut out = Vec::new();
        for kappa in cands {
            let resid = conv.get(&kappa).copied().unwrap_or(0.0);
            if resid.abs() <= noise_floor {
                continue;
            }
            let ek: BTreeMap<Coweight, f64> = self
                .sp
                .window_r_scaled(&kappa, &wlo, &whi)?
                .into_iter()
                .collect();
            let top = ek.get(&kappa).copied().unwrap_or(0.0);
            if top <= 0.0 {
                return Err(Error::Singular(format!(
                    "leading coefficient at {kappa:?} is not positive"
                )));
            }
            let beta = resid / top;
            for (z, &ez) in &ek {
                if ez != 0.0 {
                    *conv.entry(z.clone()).or_insert(0.0) -= beta * ez;
                }
            }
            out.push((kappa, beta));
        }
        let worst = conv.values().fold(0.0f64, |a, &b| a.max(b.abs()));
        if worst > ROW_MASS_TOL {
            return Err(Error::Singular(format!(
                "wall-row elimination at {nu:?} left residual {worst:.3e}"
            )));
        }
        let mass: f64 = out.iter().map(|(_, b)| b).sum();
        if (mass - 1.0).abs() > ROW_MASS_TOL {
            return Err(Error::Singular(format!(
                "wall row at {nu:?} for {la:?} has mass {mass}"
            )));
        }
        Ok(out)
    }

    /// Exact distribution of the radial chain after each of 0..=k steps.
    pub fn radial_evolution(&self, k: usize) -> Result<Vec<BTreeMap<Coweight, f64>>> {
        let rs = Arc::clone(self.root());
        let n = rs.rank();
        let kit = self.deep_kit()?;
        let mut out = Vec::with_capacity(k + 1);
        let mut cur: BTreeMap<Coweight, f64> = BTreeMap::new();
        cur.insert(vec![0i64; n], 1.0);
        out.push(cur.clone());
        for _ in 0..k {
            let mut next: BTreeMap<Coweight, f64> = BTreeMap::new();
            for (nu, &p) in &cur {
                if Self::is_deep(&kit, nu) {
                    for (mu, &q) in kit.incs.iter().zip(&kit.probs) {
                        let t: Coweight = nu.iter().zip(mu).map(|(a, b)| a + b).collect();
                        *next.entry(t).or_insert(0.0) += p * q;
                    }
                } else {
                    let row = self.kernel_row(nu)?;
                    for (t, &q) in row.targets.iter().zip(&row.probs) {
                        *next.entry(t.clone()).or_insert(0.0) += p * q;
                    }
                }
            }
            let mass: f64 = next.values().sum();
            if (mass - 1.0).abs() > DP_MASS_TOL {
                return Err(Error::Singular(format!(
                    "radial DP lost mass: {mass} after a step"
                )));
            }
            out.push(next.clone());
            cur = next;
        }
        Ok(out)
    }

    /// Distribution of the radial chain after exactly k steps.
    pub fn radial_distribution(&self, k: usize) -> Result<BTreeMap<Coweight, f64>> {
        Ok(self.radial_evolution(k)?.pop().unwrap())
    }

    /// Endpoints of independent radial trajectories; trajectory i uses
    /// stream i of the seeded generator, so results do not depend on the
    /// number of threads.
    pub fn simulate_radial(
        &self,
        steps: usize,
        trajectories: usize,
        seed: u64,
    ) -> Result<Vec<Coweight>> {
        let kit = self.deep_kit()?;
        let n = self.root().rank();
        // Prime likely wall rows serially so parallel workers mostly read.
        {
            let mut probe: BTreeMap<Coweight, f64> = BTreeMap::new();
            probe.insert(vec![0i64; n], 1.0);
            for _ in 0..4 {
                let mut nxt: BTreeMap<Coweight, f64> = BTreeMap::new();
                for nu in probe.keys() {
                    let row = self.kernel_row(nu)?;
                    for t in &row.targets {
                        nxt.insert(t.clone(), 1.0);
                    }
                }
                probe = nxt;
            }
        }
        (0..trajectories)
            .into_par_iter()
            .map(|tid| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(tid as u64 + 1);
                let mut state = vec![0i64; n];
                for _ in 0..steps {
                    if Self::is_deep(&kit, &state) {
                        let mu = &kit.incs[kit.sampler.sample(&mut rng)];
                        for (s, &m) in state.iter_mut().zip(mu) {
                            *s += m;
                        }
                    } else {
                        let row = self.kernel_row(&state)?;
                        state = row.targets[row.sampler.sample(&mut rng)].clone();
                    }
                }
                Ok(state)
            })
            .collect()
    }

    /// Endpoints of the unfolded lattice walk with iid horocycle
    /// increments.
    pub fn simulate_lattice(
        &self,
        steps: usize,
        trajectories: usize,
        seed: u64,
    ) -> Result<Vec<Coweight>> {
        let n = self.root().rank();
        let mut table: BTreeMap<Coweight, f64> = BTreeMap::new();
        for (la, &w) in self.spec.terms() {
            for (mu, h) in self.horocycle_distribution(la)? {
                *table.entry(mu).or_insert(0.0) += w * h;
            }
        }
        let incs: Vec<Coweight> = table.keys().cloned().collect();
        let probs: Vec<f64> = table.values().cloned().collect();
        let sampler = WeightedIndex::new(&probs)
            .map_err(|e| Error::InvalidParameters(format!("lattice weights: {e}")))?;
        Ok((0..trajectories)
            .into_par_iter()
            .map(|tid| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(tid as u64 + 1);
                let mut state = vec![0i64; n];
                for _ in 0..steps {
                    let mu = &incs[sampler.sample(&mut rng)];
                    for (s, &m) in state.iter_mut().zip(mu) {
                        *s += m;
                    }
                }
                state
            })
            .collect())
    }

    /// Simulate the radial chain and compare (X_k − kγ)/√k against the
    /// predicted Gaussian.
    pub fn roe_clt_report(
        &self,
        steps: usize,
        trajectories: usize,
        seed: u64,
    ) -> Result<CltReport> {
        if steps == 0 || trajectories == 0 {
            return Err(Error::InvalidParameters(
                "CLT comparison needs steps > 0 and trajectories > 0".into(),
            ));
        }
        let m = self.moments()?;
        let n = self.root().rank();
        let ends = self.simulate_radial(steps, trajectories, seed)?;
        let sk = (steps as f64).sqrt();
        let mut mean = vec![0.0; n];
        let mut raw2 = vec![vec![0.0; n]; n];
        for e in &ends {
            let z: Vec<f64> = (0..n)
                .map(|j| (e[j] as f64 - steps as f64 * m.drift[j]) / sk)
                .collect();
            for j in 0..n {
                mean[j] += z[j];
                for k in 0..n {
                    raw2[j][k] += z[j] * z[k];
                }
            }
        }
        let t = trajectories as f64;
        for v in mean.iter_mut() {
            *v /= t;
        }
        let mut cov = vec![vec![0.0; n]; n];
        for j in 0..n {
            for k in 0..n {
                cov[j][k] = raw2[j][k] / t - mean[j] * mean[k];
            }
        }
        let corr_of = |c: &Vec<Vec<f64>>| -> Vec<Vec<f64>> {
            (0..n)
                .map(|j| {
                    (0..n)
                        .map(|k| c[j][k] / (c[j][j] * c[k][k]).sqrt())
                        .collect()
                })
                .collect()
        };
        let pred_corr = corr_of(&m.clt_covariance);
        let emp_corr = corr_of(&cov);
        let mut max_mean_abs = 0.0f64;
        let mut max_var_rel = 0.0f64;
        let mut max_corr_err = 0.0f64;
        for j in 0..n {
            max_mean_abs = max_mean_abs.max(mean[j].abs());
            max_var_rel = max_var_rel
                .max((cov[j][j] - m.clt_covariance[j][j]).abs() / m.clt_covariance[j][j]);
            for k in 0..n {
                if j != k {
                    max_corr_err = max_corr_err.max((emp_corr[j][k] - pred_corr[j][k]).abs());
                }
            }
        }
        Ok(CltReport {
            steps,
            trajectories,
            drift: m.drift.clone(),
            predicted_cov: m.clt_covariance.clone(),
            predicted_corr: pred_corr,
            empirical_mean: mean,
            empirical_cov: cov,
            empirical_corr: emp_corr,
            max_mean_abs,
            max_var_rel_err: max_var_rel,
            max_corr_err,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parameters::ParameterSystem;
    use crate::root_system::Family;
    use approx::assert_abs_diff_eq;

    fn spherical(family: Family, rank: usize, q: &[f64]) -> Arc<Spherical> {
        let rs = Arc::new(RootSystem::new(family, rank).unwrap());
        let ps = Arc::new(ParameterSystem::new(rs, q.to_vec()).unwrap());
        Arc::new(Spherical::new(ps))
    }

    fn nn_walk(sp: &Arc<Spherical>, la: &[i64]) -> Walk {
        let spec = WalkSpec::new(
            sp.root(),
            [(la.to_vec(), 1.0)].into_iter().collect(),
        )
        .unwrap();
        Walk::new(Arc::clone(sp), spec)
    }

    #[test]
    fn spec_validation() {
        let sp = spherical(Family::A, 2, &[2.0, 2.0, 2.0]);
        let rs = sp.root();
        assert!(WalkSpec::new(rs, [(vec![1, 0], -1.0)].into_iter().collect()).is_err());
        assert!(WalkSpec::new(rs, [(vec![-1, 0], 1.0)].into_iter().collect()).is_err());
        assert!(WalkSpec::new(rs, [(vec![0, 0], 1.0)].into_iter().collect()).is_err());
        assert!(WalkSpec::new(rs, BTreeMap::new()).is_err());
        let spec = WalkSpec::new(
            rs,
            [(vec![0, 0], 1.0), (vec![1, 0], 3.0)].into_iter().collect(),
        )
        .unwrap();
        assert_abs_diff_eq!(spec.lazy_part(), 0.25, epsilon = 1e-15);
        let total: f64 = spec.terms().values().sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn tree_horocycle_law() {
        let q = 2.0;
        let sp = spherical(Family::A, 1, &[q, q]);
        let w = nn_walk(&sp, &[1]);
        let h = w.horocycle_distribution(&[1]).unwrap();
        assert_abs_diff_eq!(h[&vec![1i64]], q / (q + 1.0), epsilon = 1e-12);
        assert_abs_diff_eq!(h[&vec![-1i64]], 1.0 / (q + 1.0), epsilon = 1e-12);
    }

    #[test]
    fn tree_moments() {
        let q = 2.0;
        let sp = spherical(Family::A, 1, &[q, q]);
        let w = nn_walk(&sp, &[1]);
        let m = w.moments().unwrap();
        assert_abs_diff_eq!(m.drift[0], (q - 1.0) / (q + 1.0), epsilon = 1e-12);
        assert_abs_diff_eq!(m.drift_reflected[0], m.drift[0], epsilon = 1e-12);
        assert_abs_diff_eq!(m.second_moment[0][0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(
            m.clt_covariance[0][0],
            4.0 * q / ((q + 1.0) * (q + 1.0)),
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(m.b_scalar, 0.25, epsilon = 1e-12);
        assert_abs_diff_eq!(m.b_matrix[0][0], 0.5, epsilon = 1e-12);
        assert!(m.b_residual < 1e-12);
        assert_abs_diff_eq!(
            m.spectral_radius,
            2.0 * q.sqrt() / (q + 1.0),
            epsilon = 1e-12
        );
    }

    #[test]
    fn rank_two_moments_frozen_values() {
        let sp = spherical(Family::A, 2, &[2.0, 2.0, 2.0]);
        let w = nn_walk(&sp, &[1, 0]);
        let m = w.moments().unwrap();
        assert_abs_diff_eq!(m.drift[0], 2.0 / 7.0, epsilon = 1e-12);
        assert_abs_diff_eq!(m.drift[1], 1.0 / 7.0, epsilon = 1e-12);
        for j in 0..2 {
            assert_abs_diff_eq!(m.drift_reflected[j], m.drift[j], epsilon = 1e-12);
        }
        assert_abs_diff_eq!(m.clt_covariance[0][0], 38.0 / 49.0, epsilon = 1e-12);
        assert_abs_diff_eq!(m.clt_covariance[1][1], 20.0 / 49.0, epsilon = 1e-12);
        assert_abs_diff_eq!(m.clt_covariance[0][1], -16.0 / 49.0, epsilon = 1e-12);
        // Horocycle mixture is the diagram flip of the radial law.
        assert_abs_diff_eq!(m.horocycle_mean[0], m.drift[1], epsilon = 1e-12);
        assert_abs_diff_eq!(m.horocycle_mean[1], m.drift[0], epsilon = 1e-12);
        assert_abs_diff_eq!(m.spectral_radius, 6.0 / 7.0, epsilon = 1e-12);
    }

    #[test]
    fn drift_positive_and_asymptotically_linear() {
        for (f, n, q) in [
            (Family::A, 2, vec![2.0, 2.0, 2.0]),
            (Family::C, 2, vec![2.0, 3.0, 2.0]),
            (Family::G, 2, vec![3.0, 2.0, 3.0]),
            (Family::BC, 2, vec![2.0, 3.0, 5.0]),
        ] {
            let sp = spherical(f, n, &q);
            let la = vec![1i64, 1];
            let w = nn_walk(&sp, &la);
            let m = w.moments().unwrap();
            for j in 0..n {
                assert!(m.drift[j] > 0.0, "{f}{n}: drift {:?}", m.drift);
                assert_abs_diff_eq!(m.drift_reflected[j], m.drift[j], epsilon = 1e-9);
            }
            // Per-sphere drift of kλ stays within O(1) of k⟨λ,α_j⟩.
            let mut last = vec![0.0; n];
            for k in 1..=8i64 {
                let kla: Coweight = la.iter().map(|&c| c * k).collect();
                let wk = nn_walk(&sp, &kla);
                let mk = wk.moments().unwrap();
                for j in 0..n {
                    let gap = mk.drift[j] - (k * la[j]) as f64;
                    assert!(
                        gap.abs() < 4.0,
                        "{f}{n} k={k}: drift gap {gap}"
                    );
                    last[j] = gap;
                }
            }
            // The gap settles: consecutive differences shrink.
            let kla: Coweight = la.iter().map(|&c| c * 9).collect();
            let mk = nn_walk(&sp, &kla).moments().unwrap();
            for j in 0..n {
                let gap = mk.drift[j] - (9 * la[j]) as f64;
                assert!((gap - last[j]).abs() < 0.05, "{f}{n}: {gap} vs {}", last[j]);
            }
        }
    }

    #[test]
    fn star_symmetry_of_per_sphere_drift() {
        let sp = spherical(Family::A, 2, &[2.0, 2.0, 2.0]);
        let w1 = nn_walk(&sp, &[2, 1]);
        let w2 = nn_walk(&sp, &[1, 2]);
        let m1 = w1.moments().unwrap();
        let m2 = w2.moments().unwrap();
        assert_abs_diff_eq!(m1.drift[0], m2.drift[1], epsilon = 1e-10);
        assert_abs_diff_eq!(m1.drift[1], m2.drift[0], epsilon = 1e-10);
    }

    #[test]
    fn b_scalar_identity_across_families() {
        for (f, n, q) in [
            (Family::A, 2, vec![2.0, 2.0, 2.0]),
            (Family::C, 2, vec![2.0, 3.0, 2.0]),
            (Family::G, 2, vec![3.0, 2.0, 3.0]),
            (Family::BC, 2, vec![4.0, 2.0, 2.0]),
            (Family::B, 3, vec![2.0, 2.0, 2.0, 3.0]),
        ] {
            let sp = spherical(f, n, &q);
            let spec = WalkSpec::new(
                sp.root(),
                [(vec![1i64; n], 0.7), ({
                    let mut v = vec![0i64; n];
                    v[0] = 1;
                    v
                }, 0.3)]
                .into_iter()
                .collect(),
            )
            .unwrap();
            let w = Walk::new(Arc::clone(&sp), spec);
            let m = w.moments().unwrap();
            assert!(
                m.b_residual < 1e-9,
                "{f}{n}: b residual {}",
                m.b_residual
            );
        }
    }

    #[test]
    fn period_and_residual_characters() {
        // Tree nearest neighbour: two residual characters, period 2.
        let sp = spherical(Family::A, 1, &[2.0, 2.0]);
        let info = nn_walk(&sp, &[1]).period_info().unwrap();
        assert_eq!(info.members.len(), 2);
        assert_eq!(info.period, 2);
        assert!(!info.irreducible_aperiodic);
        // Lazy version kills the alternating character.
        let spec = WalkSpec::new(
            sp.root(),
            [(vec![0i64], 0.5), (vec![1i64], 0.5)].into_iter().collect(),
        )
        .unwrap();
        let info = Walk::new(Arc::clone(&sp), spec).period_info().unwrap();
        assert_eq!(info.members.len(), 1);
        assert_eq!(info.period, 1);
        assert!(info.irreducible_aperiodic);
        // Rank two: the single-sphere walk keeps the full order-3 quotient.
        let sp = spherical(Family::A, 2, &[2.0, 2.0, 2.0]);
        let info = nn_walk(&sp, &[1, 0]).period_info().unwrap();
        assert_eq!(info.members.len(), 3);
        assert_eq!(info.period, 3);
        // Mixing both fundamental spheres leaves only the trivial one.
        let spec = WalkSpec::new(
            sp.root(),
            [(vec![1i64, 0], 0.5), (vec![0i64, 1], 0.5)]
                .into_iter()
                .collect(),
        )
        .unwrap();
        let info = Walk::new(Arc::clone(&sp), spec).period_info().unwrap();
        assert_eq!(info.members.len(), 1);
        assert!(info.irreducible_aperiodic);
    }

    #[test]
    fn deep_row_matches_wall_computation() {
        let sp = spherical(Family::A, 2, &[2.0, 2.0, 2.0]);
        let w = nn_walk(&sp, &[1, 0]);
        // (2,2) is past every wall threshold for this law.
        let nu = vec![2i64, 2];
        let direct = w.wall_row_single(&nu, &[1, 0]).unwrap();
        let co = sp.coefficients(&[1, 0]).unwrap();
        for (kappa, beta) in direct {
            let mu: Coweight = kappa.iter().zip(&nu).map(|(a, b)| a - b).collect();
            let want = co.at(Scaling::RScaled, &mu);
            assert!(
                (beta - want).abs() < 1e-10,
                "{kappa:?}: {beta} vs {want}"
            );
        }
    }

    #[test]
    fn wall_rows_are_probabilities() {
        let sp = spherical(Family::C, 2, &[2.0, 3.0, 2.0]);
        let w = nn_walk(&sp, &[1, 1]);
        for nu in [vec![0i64, 0], vec![0, 1], vec![1, 0], vec![0, 3], vec![2, 0]] {
            let row = w.kernel_row(&nu).unwrap();
            let mass: f64 = row.probs.iter().sum();
            assert!((mass - 1.0).abs() < 1e-9, "{nu:?}: {mass}");
            assert!(row.probs.iter().all(|&p| p > 0.0));
            assert!(row.targets.iter().all(|t| sp.root().is_dominant(t)));
        }
    }

    #[test]
    fn tree_dp_matches_hand_recurrence() {
        let q = 2.0;
        let sp = spherical(Family::A, 1, &[q, q]);
        let w = nn_walk(&sp, &[1]);
        let k = 30;
        let got = w.radial_evolution(k).unwrap();
        // Independent radial recurrence for the homogeneous tree.
        let mut cur = vec![0.0f64; k + 2];
        cur[0] = 1.0;
        for step in 0..k {
            let mut next = vec![0.0f64; k + 2];
            for (d, &p) in cur.iter().enumerate() {
                if p == 0.0 {
                    continue;
                }
                if d == 0 {
                    next[1] += p;
                } else {
                    next[d + 1] += p * q / (q + 1.0);
                    next[d - 1] += p / (q + 1.0);
                }
            }
            cur = next;
            for (d, &p) in cur.iter().enumerate() {
                let have = got[step + 1]
                    .get(&vec![d as i64])
                    .copied()
                    .unwrap_or(0.0);
                assert!(
                    (have - p).abs() < 1e-12,
                    "step {} d {}: {} vs {}",
                    step + 1,
                    d,
                    have,
                    p
                );
            }
        }
    }

    #[test]
    fn dp_stays_on_parity_class() {
        let sp = spherical(Family::A, 2, &[2.0, 2.0, 2.0]);
        let w = nn_walk(&sp, &[1, 0]);
        let dist = w.radial_evolution(9).unwrap();
        for (k, d) in dist.iter().enumerate() {
            for nu in d.keys() {
                // c₁ + 2c₂ ≡ k mod 3 along the order-3 quotient.
                assert_eq!(
                    (nu[0] + 2 * nu[1]).rem_euclid(3),
                    (k as i64).rem_euclid(3),
                    "step {k}, state {nu:?}"
                );
            }
        }
    }

    #[test]
    fn dp_matches_kstep_quadrature() {
        let sp = spherical(Family::A, 2, &[2.0, 2.0, 2.0]);
        let pl = crate::plancherel::Plancherel::new(Arc::clone(&sp));
        let w = nn_walk(&sp, &[1, 0]);
        let step = w.spec().terms().clone();
        let k = 8;
        let dist = w.radial_distribution(k).unwrap();
        let targets: Vec<Coweight> = dist.keys().cloned().collect();
        let per_vertex = pl.kstep_distribution(&step, k as u32, &targets).unwrap();
        for (t, pv) in targets.iter().zip(per_vertex) {
            let n = sp.params().n_lambda(t).unwrap();
            let want = dist[t];
            assert!(
                (pv * n - want).abs() < 1e-8,
                "{t:?}: quadrature {} vs DP {want}",
                pv * n
            );
        }
    }

    #[test]
    fn exceptional_dp_matches_kstep_quadrature() {
        let sp = spherical(Family::BC, 1, &[4.0, 2.0]);
        let pl = crate::plancherel::Plancherel::new(Arc::clone(&sp));
        let w = nn_walk(&sp, &[1]);
        let step = w.spec().terms().clone();
        let k = 6;
        let dist = w.radial_distribution(k).unwrap();
        for (t, &mass) in &dist {
            let n = sp.params().n_lambda(t).unwrap();
            let pv = pl.kstep_probability(&step, k as u32, t).unwrap();
            assert!(
                (pv * n - mass).abs() < 1e-9,
                "{t:?}: {} vs {mass}",
                pv * n
            );
        }
    }

    #[test]
    fn tree_llt_constants_and_ratio() {
        let q = 2.0;
        let sp = spherical(Family::A, 1, &[q, q]);
        let w = nn_walk(&sp, &[1]);
        let lc = w.llt_constants().unwrap();
        assert_abs_diff_eq!(lc.k2, 4.0, epsilon = 1e-12);
        assert_abs_diff_eq!(
            lc.k3,
            4.0 * (2.0 * std::f64::consts::PI).sqrt(),
            epsilon = 1e-9
        );
        assert_abs_diff_eq!(
            lc.k1,
            1.5 / (2.0 * (2.0 * std::f64::consts::PI)),
            epsilon = 1e-12
        );
        assert_eq!(lc.u_a_size, 2);
        // Odd-step returns are exactly zero.
        assert_eq!(w.llt_asymptote(401, &[0]).unwrap(), 0.0);
        // DP against the asymptote at moderate depth.
        let k = 600;
        let dist = w.radial_evolution(k).unwrap();
        let p_return = dist[k].get(&vec![0i64]).copied().unwrap();
        let want = w.llt_asymptote(k as u64, &[0]).unwrap();
        let ratio = p_return / want;
        assert!(
            (ratio - 1.0).abs() < 0.05,
            "LLT ratio at k={k}: {ratio}"
        );
    }

    #[test]
    fn simulation_is_deterministic_and_unbiased() {
        let sp = spherical(Family::A, 2, &[2.0, 2.0, 2.0]);
        let w = nn_walk(&sp, &[1, 0]);
        let a = w.simulate_radial(50, 400, 7).unwrap();
        let b = w.simulate_radial(50, 400, 7).unwrap();
        assert_eq!(a, b);
        let c = w.simulate_radial(50, 400, 8).unwrap();
        assert_ne!(a, c);
        // Lattice endpoints have mean k·horocycle_mean.
        let m = w.moments().unwrap();
        let k = 200;
        let ends = w.simulate_lattice(k, 4000, 11).unwrap();
        for j in 0..2 {
            let mean: f64 =
                ends.iter().map(|e| e[j] as f64).sum::<f64>() / ends.len() as f64;
            let want = k as f64 * m.horocycle_mean[j];
            let sd = (k as f64 * m.horocycle_cov[j][j] / ends.len() as f64).sqrt();
            assert!(
                (mean - want).abs() < 5.0 * sd,
                "axis {j}: {mean} vs {want} (sd {sd})"
            );
        }
    }

    #[test]
    fn clt_report_smoke() {
        let sp = spherical(Family::A, 2, &[2.0, 2.0, 2.0]);
        let w = nn_walk(&sp, &[1, 0]);
        let rep = w.roe_clt_report(400, 4000, 3).unwrap();
        assert!(rep.max_mean_abs < 0.12, "mean {:?}", rep.empirical_mean);
        assert!(rep.max_var_rel_err < 0.12, "cov {:?}", rep.empirical_cov);
        assert!(rep.max_corr_err < 0.12, "corr {:?}", rep.empirical_corr);
    }
}
