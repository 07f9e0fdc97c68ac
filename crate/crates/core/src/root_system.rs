//! Exact models of the irreducible (possibly non-reduced) root systems.
//!
//! Everything in this module is exact: roots live in an ambient rational
//! vector space, coweights are stored through the integer coordinates
//! c_i(λ) = ⟨λ, α_i⟩, and the Weyl group acts by integer matrices in that
//! coordinate system. Floating point only appears downstream.
//!
//! Coordinate conventions used throughout the crate:
//! * ⟨x, y⟩ is the plain Euclidean inner product of the ambient model.
//! * A coweight λ is stored as the integer vector c with c_i = ⟨λ, α_i⟩.
//! * A root α is stored with its simple-root coordinates k (α = Σ k_j α_j),
//!   so ⟨λ, α⟩ = Σ_j k_j c_j is linear and exact.
//! * The coroot α∨ = 2α/⟨α,α⟩ is itself a coweight; its c-coordinates are
//!   Cartan integers. Simple reflections act by (s_i c)_j = c_j − A_ij c_i
//!   with A_ij = 2⟨α_i,α_j⟩/⟨α_i,α_i⟩.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, Mutex, RwLock};

use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde_json::json;

use crate::linalg::{frac_mod1, rat_mat_inverse, smith_normal_form, Rat};
use crate::{Error, Result};

/// Hard refusal threshold for Weyl group enumeration (E₈ is ~7·10⁸).
pub const DEFAULT_WEYL_CAP: u128 = 2_000_000;
/// Candidate budget for saturated-set enumeration.
const SATURATED_BUDGET: u128 = 5_000_000;
/// Largest supported rank; keeps |W₀| inside u128 and models tractable.
const MAX_RANK: usize = 24;

/// Coweight in c-coordinates: c_i = ⟨λ, α_i⟩.
pub type Coweight = Vec<i64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    A,
    B,
    C,
    D,
    E,
    F,
    G,
    BC,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Family::A => "A",
            Family::B => "B",
            Family::C => "C",
            Family::D => "D",
            Family::E => "E",
            Family::F => "F",
            Family::G => "G",
            Family::BC => "BC",
        };
        write!(f, "{s}")
    }
}

impl FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "A" => Ok(Family::A),
            "B" => Ok(Family::B),
            "C" => Ok(Family::C),
            "D" => Ok(Family::D),
            "E" => Ok(Family::E),
            "F" => Ok(Family::F),
            "G" => Ok(Family::G),
            "BC" => Ok(Family::BC),
            other => Err(Error::InvalidType {
                family: other.to_string(),
                rank: 0,
            }),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Root {
    /// Ambient rational coordinates.
    pub ambient: Vec<Rat>,
    /// Simple-root coordinates k with α = Σ k_j α_j (always integral).
    pub k: Vec<i64>,
    /// c-coordinates of the coroot α∨ = 2α/⟨α,α⟩ (always integral).
    pub coroot_c: Vec<i64>,
    /// Squared length ⟨α,α⟩.
    pub sq_len: Rat,
    pub positive: bool,
    /// α ∈ R₁ ⇔ 2α ∉ R.
    pub in_r1: bool,
    /// α ∈ R₂ ⇔ α/2 ∉ R.
    pub in_r2: bool,
    /// Index of 2α when 2α ∈ R.
    pub double_idx: Option<usize>,
    /// Index of α/2 when α/2 ∈ R.
    pub half_idx: Option<usize>,
}

/// One Weyl orbit of R₂ grouped by length, with its simple representative
/// and the half-sum ρ_j of its positive members.
#[derive(Debug, Clone)]
pub struct LengthClass {
    /// Indices into `roots` of all members (positive and negative).
    pub members: Vec<usize>,
    /// Simple-root index (0-based) of the representative β_j.
    pub rep_simple: usize,
    /// Simple-root coordinates of ρ_j (rational), so ⟨λ, ρ_j⟩ = Σ rho_k[m]·c_m.
    pub rho_k: Vec<Rat>,
}

/// A character of P/Q, stored as exact phases: u^{λ_j} = e^{2πi·phases[j]}.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuotientCharacter {
    pub phases: Vec<Rat>,
}

impl QuotientCharacter {
    /// Phase (in [0,1)) of the character's value on the coweight c.
    pub fn phase_on(&self, c: &[i64]) -> Rat {
        let mut s = Rat::zero();
        for (p, &ci) in self.phases.iter().zip(c) {
            s += *p * Rat::from_integer(ci);
        }
        frac_mod1(s)
    }

    pub fn is_trivial(&self) -> bool {
        self.phases.iter().all(|p| p.is_zero())
    }

    /// Order in the dual group: least m ≥ 1 with m·φ_j ∈ Z for all j.
    pub fn order(&self) -> i64 {
        self.phases.iter().fold(1i64, |acc, p| acc.lcm(p.denom()))
    }
}

/// Fully enumerated Weyl group in coweight coordinates.
#[derive(Debug)]
pub struct WeylGroup {
    n: usize,
    /// Flattened n×n matrices, row-major; mats[0] is the identity.
    pub mats: Vec<Vec<i64>>,
    /// Word lengths; BFS order, so nondecreasing.
    pub lengths: Vec<u32>,
    /// (parent index, last generator); the identity has (0, u8::MAX).
    pub parent: Vec<(u32, u8)>,
    /// Index of the longest element.
    pub w0: usize,
}

impl WeylGroup {
    pub fn order(&self) -> usize {
        self.mats.len()
    }

    pub fn apply(&self, idx: usize, c: &[i64]) -> Coweight {
        apply_mat(&self.mats[idx], c, self.n)
    }
}

/// The saturated set Π_λ with its orbit structure and coordinate bounds.
#[derive(Debug)]
pub struct SaturatedSet {
    pub points: Vec<Coweight>,
    pub index: HashMap<Coweight, usize>,
    /// Dominant representatives, one per Weyl orbit.
    pub dominant_reps: Vec<Coweight>,
    /// For each point, the index of its orbit in `dominant_reps`.
    pub orbit_of: Vec<usize>,
    /// Per-axis bounds of the c-coordinates over all points.
    pub lo: Vec<i64>,
    pub hi: Vec<i64>,
}

impl SaturatedSet {
    pub fn contains(&self, c: &[i64]) -> bool {
        self.index.contains_key(c)
    }
}

#[derive(Debug)]
pub struct RootSystem {
    family: Family,
    rank: usize,
    ambient_dim: usize,
    roots: Vec<Root>,
    /// Indices of the simple roots α_1..α_n (in root-list order).
    simple: Vec<usize>,
    positive: Vec<usize>,
    r2_plus: Vec<usize>,
    /// Index of the highest root.
    highest: usize,
    /// Marks m_i with α̃ = Σ m_i α_i.
    marks: Vec<i64>,
    /// Good-type node set I_P ⊆ {0..n} (node 0 is always good).
    good_types: Vec<usize>,
    gram: Vec<Vec<Rat>>,
    /// cartan[i][j] = 2⟨α_i,α_j⟩/⟨α_i,α_i⟩ = c_j(α_i∨).
    cartan: Vec<Vec<i64>>,
    cartan_inv: Vec<Vec<Rat>>,
    cartan_t_inv: Vec<Vec<Rat>>,
    /// Fundamental coweights in ambient coordinates.
    fund_coweights: Vec<Vec<Rat>>,
    classes: Vec<LengthClass>,
    w0_mat: Vec<i64>,
    /// star[j] = j* with −w₀α_j = α_{j*} (0-based).
    star: Vec<usize>,
    uq_characters: Vec<QuotientCharacter>,
    /// Conjugacy class id of each affine diagram node 0..n.
    affine_classes: Vec<usize>,
    weyl_order: u128,
    weyl_cap: u128,
    /// c(α∨) → (root index, positive flag), for Weyl sign counting.
    coroot_index: HashMap<Vec<i64>, usize>,
    weyl_cache: Mutex<Option<Arc<WeylGroup>>>,
    sat_cache: RwLock<HashMap<Coweight, Arc<SaturatedSet>>>,
}

fn rat(n: i64) -> Rat {
    Rat::from_integer(n)
}

fn rat_half() -> Rat {
    Rat::new(1, 2)
}

fn dot(a: &[Rat], b: &[Rat]) -> Rat {
    a.iter().zip(b).fold(Rat::zero(), |s, (x, y)| s + *x * *y)
}

fn reflect_ambient(x: &[Rat], alpha: &[Rat], alpha_sq: Rat) -> Vec<Rat> {
    let coef = rat(2) * dot(x, alpha) / alpha_sq;
    x.iter().zip(alpha).map(|(xi, ai)| *xi - coef * *ai).collect()
}

fn apply_mat(mat: &[i64], c: &[i64], n: usize) -> Vec<i64> {
    (0..n)
        .map(|j| (0..n).map(|k| mat[j * n + k] * c[k]).sum())
        .collect()
}

fn mat_mul(a: &[i64], b: &[i64], n: usize) -> Vec<i64> {
    let mut out = vec![0i64; n * n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i * n + k];
            if aik != 0 {
                for j in 0..n {
                    out[i * n + j] += aik * b[k * n + j];
                }
            }
        }
    }
    out
}

fn identity_mat(n: usize) -> Vec<i64> {
    let mut m = vec![0i64; n * n];
    for i in 0..n {
        m[i * n + i] = 1;
    }
    m
}

/// Bourbaki-style ambient simple root models.
fn simple_root_model(family: Family, rank: usize) -> (usize, Vec<Vec<Rat>>) {
    let n = rank;
    let e = |dim: usize, i: usize| -> Vec<Rat> {
        let mut v = vec![Rat::zero(); dim];
        v[i] = Rat::one();
        v
    };
    let sub = |a: &[Rat], b: &[Rat]| -> Vec<Rat> {
        a.iter().zip(b).map(|(x, y)| *x - *y).collect()
    };
    match family {
        Family::A => {
            let dim = n + 1;
            let base = (0..n).map(|i| sub(&e(dim, i), &e(dim, i + 1))).collect();
            (dim, base)
        }
        Family::B | Family::BC => {
            let mut base: Vec<Vec<Rat>> =
                (0..n - 1).map(|i| sub(&e(n, i), &e(n, i + 1))).collect();
            base.push(e(n, n - 1));
            (n, base)
        }
        Family::C => {
            let mut base: Vec<Vec<Rat>> =
                (0..n - 1).map(|i| sub(&e(n, i), &e(n, i + 1))).collect();
            let mut last = e(n, n - 1);
            last[n - 1] = rat(2);
            base.push(last);
            (n, base)
        }
        Family::D => {
            let mut base: Vec<Vec<Rat>> =
                (0..n - 1).map(|i| sub(&e(n, i), &e(n, i + 1))).collect();
            let mut last = e(n, n - 1);
            last[n - 2] = Rat::one();
            base.push(last);
            (n, base)
        }
        Family::G => {
            // Rank 2 in the sum-zero hyperplane of R³.
            let a1 = vec![rat(1), rat(-1), rat(0)];
            let a2 = vec![rat(-2), rat(1), rat(1)];
            (3, vec![a1, a2])
        }
        Family::F => {
            let a1 = sub(&e(4, 1), &e(4, 2));
            let a2 = sub(&e(4, 2), &e(4, 3));
            let a3 = e(4, 3);
            let a4 = vec![rat_half(), -rat_half(), -rat_half(), -rat_half()];
            (4, vec![a1, a2, a3, a4])
        }
        Family::E => {
            // E₆ and E₇ are the prefixes of the E₈ base in R⁸.
            let mut a1 = vec![-rat_half(); 8];
            a1[0] = rat_half();
            a1[7] = rat_half();
            let mut a2 = vec![Rat::zero(); 8];
            a2[0] = rat(1);
            a2[1] = rat(1);
            let mut base = vec![a1, a2];
            base.push(sub(&e(8, 1), &e(8, 0)));
            for i in 1..6 {
                base.push(sub(&e(8, i + 1), &e(8, i)));
            }
            base.truncate(n);
            (8, base)
        }
    }
}

fn expected_root_count(family: Family, n: usize) -> usize {
    match family {
        Family::A => n * (n + 1),
        Family::B | Family::C => 2 * n * n,
        Family::D => 2 * n * (n - 1),
        Family::BC => 2 * n * n + 2 * n,
        Family::G => 12,
        Family::F => 48,
        Family::E => match n {
            6 => 72,
            7 => 126,
            _ => 240,
        },
    }
}

fn weyl_order_formula(family: Family, n: usize) -> u128 {
    let fact = |m: usize| -> u128 { (1..=m as u128).product() };
    match family {
        Family::A => fact(n + 1),
        Family::B | Family::C | Family::BC => (1u128 << n) * fact(n),
        Family::D => (1u128 << (n - 1)) * fact(n),
        Family::G => 12,
        Family::F => 1152,
        Family::E => match n {
            6 => 51_840,
            7 => 2_903_040,
            _ => 696_729_600,
        },
    }
}

impl RootSystem {
    pub fn new(family: Family, rank: usize) -> Result<Self> {
        let requested = (family, rank);
        // The rank-1 B and C systems coincide with A₁; alias them.
        let (family, rank) = match (family, rank) {
            (Family::B, 1) | (Family::C, 1) => (Family::A, 1),
            other => other,
        };
        let valid = match family {
            Family::A => rank >= 1,
            Family::B | Family::C => rank >= 2,
            Family::D => rank >= 4,
            Family::E => (6..=8).contains(&rank),
            Family::F => rank == 4,
            Family::G => rank == 2,
            Family::BC => rank >= 1,
        };
        if !valid || rank > MAX_RANK {
            return Err(Error::InvalidType {
                family: requested.0.to_string(),
                rank: requested.1,
            });
        }

        let n = rank;
        let (dim, base) = simple_root_model(family, n);

        // Reduced part by closure of the base under simple reflections.
        let base_sq: Vec<Rat> = base.iter().map(|a| dot(a, a)).collect();
        let mut seen: HashSet<Vec<Rat>> = HashSet::new();
        let mut queue: VecDeque<Vec<Rat>> = VecDeque::new();
        for a in &base {
            if seen.insert(a.clone()) {
                queue.push_back(a.clone());
            }
        }
        while let Some(x) = queue.pop_front() {
            for (a, sq) in base.iter().zip(&base_sq) {
                let y = reflect_ambient(&x, a, *sq);
                if seen.insert(y.clone()) {
                    queue.push_back(y);
                }
            }
        }
        let mut ambients: Vec<Vec<Rat>> = seen.into_iter().collect();
        if family == Family::BC {
            // The non-reduced system adds the doubles of the short roots.
            let min_sq = ambients.iter().map(|a| dot(a, a)).min().unwrap();
            let mut doubles = Vec::new();
            for a in &ambients {
                if dot(a, a) == min_sq {
                    doubles.push(a.iter().map(|x| *x * rat(2)).collect::<Vec<_>>());
                }
            }
            ambients.extend(doubles);
        }

        assert_eq!(
            ambients.len(),
            expected_root_count(family, n),
            "root closure produced the wrong count for {family}{n}"
        );

        let gram: Vec<Vec<Rat>> = (0..n)
            .map(|i| (0..n).map(|j| dot(&base[i], &base[j])).collect())
            .collect();
        let gram_inv = rat_mat_inverse(&gram)?;

        // Simple-root coordinates: k = G⁻¹ · (⟨α,α_j⟩)_j.
        let k_of = |a: &[Rat]| -> Vec<i64> {
            let rhs: Vec<Rat> = (0..n).map(|j| dot(a, &base[j])).collect();
            (0..n)
                .map(|i| {
                    let mut s = Rat::zero();
                    for j in 0..n {
                        s += gram_inv[i][j] * rhs[j];
                    }
                    assert!(s.is_integer(), "non-integral simple-root coordinate");
                    s.to_integer()
                })
                .collect()
        };

        struct Raw {
            ambient: Vec<Rat>,
            k: Vec<i64>,
            sq: Rat,
            positive: bool,
        }
        let mut raw: Vec<Raw> = ambients
            .into_iter()
            .map(|a| {
                let k = k_of(&a);
                let pos_cnt = k.iter().filter(|&&x| x > 0).count();
                let neg_cnt = k.iter().filter(|&&x| x < 0).count();
                assert!(
                    pos_cnt == 0 || neg_cnt == 0,
                    "root with mixed-sign simple coordinates"
                );
                let sq = dot(&a, &a);
                Raw {
                    positive: pos_cnt > 0,
                    ambient: a,
                    k,
                    sq,
                }
            })
            .collect();
        raw.sort_by(|x, y| {
            let hx: i64 = x.k.iter().sum();
            let hy: i64 = y.k.iter().sum();
            (!x.positive, hx, &x.k).cmp(&(!y.positive, hy, &y.k))
        });

        let amb_index: HashMap<Vec<Rat>, usize> = raw
            .iter()
            .enumerate()
            .map(|(i, r)| (r.ambient.clone(), i))
            .collect();

        let roots: Vec<Root> = raw
            .iter()
            .map(|r| {
                let double: Vec<Rat> = r.ambient.iter().map(|x| *x * rat(2)).collect();
                let half: Vec<Rat> = r.ambient.iter().map(|x| *x * rat_half()).collect();
                let double_idx = amb_index.get(&double).copied();
                let half_idx = amb_index.get(&half).copied();
                let coroot_c: Vec<i64> = (0..n)
                    .map(|j| {
                        let v = rat(2) * dot(&r.ambient, &base[j]) / r.sq;
                        assert!(v.is_integer(), "non-integral coroot coordinate");
                        v.to_integer()
                    })
                    .collect();
                Root {
                    ambient: r.ambient.clone(),
                    k: r.k.clone(),
                    coroot_c,
                    sq_len: r.sq,
                    positive: r.positive,
                    in_r1: double_idx.is_none(),
                    in_r2: half_idx.is_none(),
                    double_idx,
                    half_idx,
                }
            })
            .collect();

        let simple: Vec<usize> = base
            .iter()
            .map(|a| *amb_index.get(a).expect("simple root lost in closure"))
            .collect();
        let positive: Vec<usize> = (0..roots.len()).filter(|&i| roots[i].positive).collect();
        let r2_plus: Vec<usize> = positive
            .iter()
            .copied()
            .filter(|&i| roots[i].in_r2)
            .collect();

        // Cartan matrix A_ij = 2⟨α_i,α_j⟩/⟨α_i,α_i⟩; rows are c(α_i∨).
        let cartan: Vec<Vec<i64>> = (0..n)
            .map(|i| roots[simple[i]].coroot_c.clone())
            .collect();
        let cartan_rat: Vec<Vec<Rat>> = cartan
            .iter()
            .map(|r| r.iter().map(|&x| rat(x)).collect())
            .collect();
        let cartan_inv = rat_mat_inverse(&cartan_rat)?;
        let cartan_t: Vec<Vec<Rat>> = (0..n)
            .map(|i| (0..n).map(|j| rat(cartan[j][i])).collect())
            .collect();
        let cartan_t_inv = rat_mat_inverse(&cartan_t)?;

        // Fundamental coweights λ_i = Σ_k (G⁻¹)_{ki} α_k satisfy ⟨λ_i,α_j⟩ = δ_ij.
        let fund_coweights: Vec<Vec<Rat>> = (0..n)
            .map(|i| {
                let mut v = vec![Rat::zero(); dim];
                for (kk, alpha) in base.iter().enumerate() {
                    let coef = gram_inv[kk][i];
                    for (d, a) in alpha.iter().enumerate() {
                        v[d] += coef * *a;
                    }
                }
                v
            })
            .collect();
        for (i, lam) in fund_coweights.iter().enumerate() {
            for (j, alpha) in base.iter().enumerate() {
                let p = dot(lam, alpha);
                assert_eq!(
                    p,
                    if i == j { Rat::one() } else { Rat::zero() },
                    "fundamental coweight pairing failed"
                );
            }
        }

        // Highest root: the unique root dominating every other one.
        let highest = positive
            .iter()
            .copied()
            .max_by_key(|&i| (roots[i].k.iter().sum::<i64>(), roots[i].k.clone()))
            .expect("no positive roots");
        for r in &roots {
            let ok = (0..n).all(|j| roots[highest].k[j] >= r.k[j]);
            assert!(ok, "highest root fails to dominate some root");
        }
        let marks = roots[highest].k.clone();
        let mut good_types = vec![0usize];
        for (i, &m) in marks.iter().enumerate() {
            if m == 1 {
                good_types.push(i + 1);
            }
        }

        // Length classes of R₂ with simple representatives and ρ_j.
        let mut class_sqs: Vec<Rat> = Vec::new();
        for &i in &simple {
            // Simple roots of BC are all in R₂, so every class has a simple rep.
            if roots[i].in_r2 && !class_sqs.contains(&roots[i].sq_len) {
                class_sqs.push(roots[i].sq_len);
            }
        }
        let classes: Vec<LengthClass> = class_sqs
            .iter()
            .map(|&sq| {
                let members: Vec<usize> = (0..roots.len())
                    .filter(|&i| roots[i].in_r2 && roots[i].sq_len == sq)
                    .collect();
                let rep_simple = (0..n)
                    .find(|&i| roots[simple[i]].sq_len == sq)
                    .expect("length class without simple representative");
                let mut rho = vec![Rat::zero(); dim];
                for &i in &members {
                    if roots[i].positive {
                        for (d, a) in roots[i].ambient.iter().enumerate() {
                            rho[d] += *a * rat_half();
                        }
                    }
                }
                let rho_rhs: Vec<Rat> = (0..n).map(|j| dot(&rho, &base[j])).collect();
                let rho_k: Vec<Rat> = (0..n)
                    .map(|i| {
                        let mut s = Rat::zero();
                        for j in 0..n {
                            s += gram_inv[i][j] * rho_rhs[j];
                        }
                        s
                    })
                    .collect();
                LengthClass {
                    members,
                    rep_simple,
                    rho_k,
                }
            })
            .collect();
        // ⟨α∨, ρ_j⟩ = δ_ij for simple α in class i.
        for (ci, cls) in classes.iter().enumerate() {
            for (cj, cls2) in classes.iter().enumerate() {
                let a = &roots[simple[cls.rep_simple]];
                let coroot: Vec<Rat> = a.ambient.iter().map(|x| *x * rat(2) / a.sq_len).collect();
                let mut rho = vec![Rat::zero(); dim];
                for &i in &cls2.members {
                    if roots[i].positive {
                        for (d, v) in roots[i].ambient.iter().enumerate() {
                            rho[d] += *v * rat_half();
                        }
                    }
                }
                let p = dot(&coroot, &rho);
                assert_eq!(
                    p,
                    if ci == cj { Rat::one() } else { Rat::zero() },
                    "⟨α∨,ρ_j⟩ = δ_ij failed"
                );
            }
        }

        // Longest element by greedy descent from the regular dominant point.
        let reflect_c = |c: &mut Vec<i64>, i: usize| {
            let ci = c[i];
            for j in 0..n {
                c[j] -= cartan[i][j] * ci;
            }
        };
        let mut c = vec![1i64; n];
        let mut w0_mat = identity_mat(n);
        let mut steps = 0usize;
        loop {
            let Some(i) = (0..n).find(|&i| c[i] > 0) else {
                break;
            };
            reflect_c(&mut c, i);
            let mut s_i = identity_mat(n);
            for j in 0..n {
                s_i[j * n + i] -= cartan[i][j];
            }
            w0_mat = mat_mul(&s_i, &w0_mat, n);
            steps += 1;
        }
        assert_eq!(steps, r2_plus.len(), "ℓ(w₀) must equal |R₂⁺|");
        assert!(c.iter().all(|&x| x == -1), "w₀ must negate the regular point");

        // star: −w₀ α_j = α_{j*}, read off through coroot coordinates.
        let star: Vec<usize> = (0..n)
            .map(|j| {
                let image = apply_mat(&w0_mat, &cartan[j], n);
                let neg: Vec<i64> = image.iter().map(|x| -x).collect();
                (0..n)
                    .find(|&m| cartan[m] == neg)
                    .expect("−w₀ does not permute the simple roots")
            })
            .collect();
        for j in 0..n {
            assert_eq!(star[star[j]], j, "star must be an involution");
        }

        // Characters of P/Q via the Smith normal form of the matrix whose
        // columns are the positive coroots in c-coordinates.
        let coroot_cols: Vec<Vec<i64>> = (0..n)
            .map(|j| positive.iter().map(|&i| roots[i].coroot_c[j]).collect())
            .collect();
        let (u_mat, diag) = smith_normal_form(&coroot_cols);
        assert!(
            diag.len() == n && diag.iter().all(|&d| d > 0),
            "coroots must span a full-rank sublattice"
        );
        let mut uq_characters = Vec::new();
        let mut counter = vec![0i64; n];
        loop {
            let phases: Vec<Rat> = (0..n)
                .map(|j| {
                    let mut s = Rat::zero();
                    for i in 0..n {
                        s += Rat::new(counter[i] * u_mat[i][j], diag[i]);
                    }
                    frac_mod1(s)
                })
                .collect();
            uq_characters.push(QuotientCharacter { phases });
            let mut pos = 0;
            loop {
                if pos == n {
                    break;
                }
                counter[pos] += 1;
                if counter[pos] < diag[pos] {
                    break;
                }
                counter[pos] = 0;
                pos += 1;
            }
            if pos == n {
                break;
            }
        }
        let group_order: i64 = diag.iter().product();
        assert_eq!(uq_characters.len(), group_order as usize);
        for ch in &uq_characters {
            for &i in &positive {
                assert!(
                    ch.phase_on(&roots[i].coroot_c).is_zero(),
                    "character not trivial on Q"
                );
            }
        }

        // Conjugacy classes of affine diagram nodes {0..n} by odd-bond
        // connectivity; node 0 carries α₀ = −α̃.
        let mut node_vecs: Vec<Vec<Rat>> = Vec::with_capacity(n + 1);
        node_vecs.push(roots[highest].ambient.iter().map(|x| -*x).collect());
        for a in &base {
            node_vecs.push(a.clone());
        }
        let mut parent_uf: Vec<usize> = (0..=n).collect();
        fn find(uf: &mut Vec<usize>, x: usize) -> usize {
            if uf[x] != x {
                let r = find(uf, uf[x]);
                uf[x] = r;
            }
            uf[x]
        }
        for i in 0..=n {
            for j in i + 1..=n {
                let nij = rat(2) * dot(&node_vecs[i], &node_vecs[j]) / dot(&node_vecs[j], &node_vecs[j]);
                let nji = rat(2) * dot(&node_vecs[j], &node_vecs[i]) / dot(&node_vecs[i], &node_vecs[i]);
                let prod = nij * nji;
                assert!(prod.is_integer());
                if prod.to_integer() == 1 {
                    let (ri, rj) = (find(&mut parent_uf, i), find(&mut parent_uf, j));
                    if ri != rj {
                        parent_uf[ri] = rj;
                    }
                }
            }
        }
        let mut class_ids: HashMap<usize, usize> = HashMap::new();
        let mut affine_classes = Vec::with_capacity(n + 1);
        for i in 0..=n {
            let r = find(&mut parent_uf, i);
            let next = class_ids.len();
            let id = *class_ids.entry(r).or_insert(next);
            affine_classes.push(id);
        }

        let coroot_index: HashMap<Vec<i64>, usize> = roots
            .iter()
            .enumerate()
            .map(|(i, r)| (r.coroot_c.clone(), i))
            .collect();
        assert_eq!(coroot_index.len(), roots.len(), "coroot coordinates collide");

        Ok(RootSystem {
            family,
            rank,
            ambient_dim: dim,
            roots,
            simple,
            positive,
            r2_plus,
            highest,
            marks,
            good_types,
            gram,
            cartan,
            cartan_inv,
            cartan_t_inv,
            fund_coweights,
            classes,
            w0_mat,
            star,
            uq_characters,
            affine_classes,
            weyl_order: weyl_order_formula(family, n),
            weyl_cap: DEFAULT_WEYL_CAP,
            coroot_index,
            weyl_cache: Mutex::new(None),
            sat_cache: RwLock::new(HashMap::new()),
        })
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn roots(&self) -> &[Root] {
        &self.roots
    }

    pub fn simple_indices(&self) -> &[usize] {
        &self.simple
    }

    pub fn positive_indices(&self) -> &[usize] {
        &self.positive
    }

    pub fn r2_plus_indices(&self) -> &[usize] {
        &self.r2_plus
    }

    pub fn highest_root_index(&self) -> usize {
        self.highest
    }

    pub fn marks(&self) -> &[i64] {
        &self.marks
    }

    pub fn good_types(&self) -> &[usize] {
        &self.good_types
    }

    pub fn gram(&self) -> &[Vec<Rat>] {
        &self.gram
    }

    pub fn cartan(&self) -> &[Vec<i64>] {
        &self.cartan
    }

    pub fn length_classes(&self) -> &[LengthClass] {
        &self.classes
    }

    pub fn fundamental_coweights(&self) -> &[Vec<Rat>] {
        &self.fund_coweights
    }

    pub fn affine_node_classes(&self) -> &[usize] {
        &self.affine_classes
    }

    pub fn quotient_characters(&self) -> &[QuotientCharacter] {
        &self.uq_characters
    }

    pub fn weyl_order(&self) -> u128 {
        self.weyl_order
    }

    pub fn weyl_cap(&self) -> u128 {
        self.weyl_cap
    }

    pub fn set_weyl_cap(&mut self, cap: u128) {
        self.weyl_cap = cap;
    }

    /// Root index whose coroot has the given c-coordinates.
    pub fn root_by_coroot(&self, coroot_c: &[i64]) -> Option<usize> {
        self.coroot_index.get(coroot_c).copied()
    }

    /// ⟨λ, α⟩ for a coweight in c-coordinates and a root index.
    pub fn pair(&self, c: &[i64], root: usize) -> i64 {
        self.roots[root].k.iter().zip(c).map(|(k, x)| k * x).sum()
    }

    pub fn reflect_simple(&self, c: &[i64], i: usize) -> Coweight {
        let mut out = c.to_vec();
        let ci = c[i];
        for j in 0..self.rank {
            out[j] -= self.cartan[i][j] * ci;
        }
        out
    }

    pub fn is_dominant(&self, c: &[i64]) -> bool {
        c.iter().all(|&x| x >= 0)
    }

    /// The unique dominant point in the Weyl orbit of c.
    pub fn dominant_rep(&self, c: &[i64]) -> Coweight {
        let mut cur = c.to_vec();
        loop {
            let Some(i) = (0..self.rank).find(|&i| cur[i] < 0) else {
                return cur;
            };
            let ci = cur[i];
            for j in 0..self.rank {
                cur[j] -= self.cartan[i][j] * ci;
            }
        }
    }

    pub fn coweight_ambient(&self, c: &[i64]) -> Vec<Rat> {
        let mut v = vec![Rat::zero(); self.ambient_dim];
        for (i, &ci) in c.iter().enumerate() {
            for (d, x) in self.fund_coweights[i].iter().enumerate() {
                v[d] += *x * rat(ci);
            }
        }
        v
    }

    /// λ* = −w₀λ in c-coordinates: c_j(λ*) = c_{j*}(λ).
    pub fn star_coweight(&self, c: &[i64]) -> Coweight {
        (0..self.rank).map(|j| c[self.star[j]]).collect()
    }

    /// 0-based index involution j ↦ j* with −w₀α_j = α_{j*}.
    pub fn star_index(&self, j: usize) -> usize {
        self.star[j]
    }

    pub fn apply_w0(&self, c: &[i64]) -> Coweight {
        apply_mat(&self.w0_mat, c, self.rank)
    }

    pub fn w0_matrix(&self) -> &[i64] {
        &self.w0_mat
    }

    /// Decide λ − μ ∈ Q⁺ (nonnegative integer span of the positive coroots).
    pub fn in_q_plus(&self, diff: &[i64]) -> bool {
        if self.family == Family::BC {
            // Q⁺(BC_n) = N{e_1−e_2, …, e_{n−1}−e_n, e_n}: all prefix sums of
            // the ambient coordinates must be nonnegative. With the BC base,
            // ambient coordinate i of a coweight is Σ_{j≥i} c_j.
            let mut suffix = 0i64;
            let mut prefix_ok = true;
            let mut total = Vec::with_capacity(self.rank);
            for j in (0..self.rank).rev() {
                suffix += diff[j];
                total.push(suffix);
            }
            total.reverse();
            let mut run = 0i64;
            for v in total {
                run += v;
                if run < 0 {
                    prefix_ok = false;
                    break;
                }
            }
            prefix_ok
        } else {
            // Reduced: solve λ−μ = Σ k_i α_i∨ and need k ∈ N^n.
            for i in 0..self.rank {
                let mut s = Rat::zero();
                for j in 0..self.rank {
                    s += self.cartan_t_inv[i][j] * rat(diff[j]);
                }
                if !s.is_integer() || s.is_negative() {
                    return false;
                }
            }
            true
        }
    }

    pub fn dominance_leq(&self, mu: &[i64], la: &[i64]) -> bool {
        let diff: Vec<i64> = la.iter().zip(mu).map(|(a, b)| a - b).collect();
        self.in_q_plus(&diff)
    }

    /// Membership of a coweight in the coroot lattice Q.
    pub fn in_q(&self, c: &[i64]) -> bool {
        if self.family == Family::BC {
            return true; // P = Q for the non-reduced family.
        }
        for i in 0..self.rank {
            let mut s = Rat::zero();
            for j in 0..self.rank {
                s += self.cartan_t_inv[i][j] * rat(c[j]);
            }
            if !s.is_integer() {
                return false;
            }
        }
        true
    }

    /// Weyl orbit of a coweight by closure under simple reflections.
    pub fn weyl_orbit(&self, c: &[i64]) -> Result<Vec<Coweight>> {
        let cap = self.weyl_cap;
        let mut seen: HashSet<Coweight> = HashSet::new();
        let mut queue: VecDeque<Coweight> = VecDeque::new();
        let start = c.to_vec();
        seen.insert(start.clone());
        queue.push_back(start);
        let mut out = Vec::new();
        while let Some(x) = queue.pop_front() {
            out.push(x.clone());
            if out.len() as u128 > cap {
                return Err(Error::CapExceeded {
                    what: "Weyl orbit enumeration".into(),
                    needed: out.len() as u128,
                    cap,
                });
            }
            for i in 0..self.rank {
                let y = self.reflect_simple(&x, i);
                if seen.insert(y.clone()) {
                    queue.push_back(y);
                }
            }
        }
        Ok(out)
    }

    /// Full Weyl group enumeration (cached). Refused above the cap.
    pub fn weyl(&self) -> Result<Arc<WeylGroup>> {
        if self.weyl_order > self.weyl_cap {
            return Err(Error::CapExceeded {
                what: format!("Weyl group enumeration for {}{}", self.family, self.rank),
                needed: self.weyl_order,
                cap: self.weyl_cap,
            });
        }
        let mut guard = self.weyl_cache.lock().unwrap();
        if let Some(w) = guard.as_ref() {
            return Ok(Arc::clone(w));
        }
        let n = self.rank;
        let smats: Vec<Vec<i64>> = (0..n)
            .map(|i| {
                let mut m = identity_mat(n);
                for j in 0..n {
                    m[j * n + i] -= self.cartan[i][j];
                }
                m
            })
            .collect();
        let mut mats: Vec<Vec<i64>> = vec![identity_mat(n)];
        let mut lengths: Vec<u32> = vec![0];
        let mut parent: Vec<(u32, u8)> = vec![(0, u8::MAX)];
        let mut index: HashMap<Vec<i64>, usize> = HashMap::new();
        index.insert(mats[0].clone(), 0);
        let mut head = 0usize;
        while head < mats.len() {
            let w = mats[head].clone();
            let lw = lengths[head];
            for (i, smat) in smats.iter().enumerate() {
                let m = mat_mul(&w, smat, n);
                if !index.contains_key(&m) {
                    index.insert(m.clone(), mats.len());
                    mats.push(m);
                    lengths.push(lw + 1);
                    parent.push((head as u32, i as u8));
                }
            }
            head += 1;
        }
        assert_eq!(mats.len() as u128, self.weyl_order, "Weyl order mismatch");
        let max_len = *lengths.iter().max().unwrap();
        assert_eq!(max_len as usize, self.r2_plus.len());
        let longest: Vec<usize> = (0..mats.len())
            .filter(|&i| lengths[i] == max_len)
            .collect();
        assert_eq!(longest.len(), 1, "longest element must be unique");
        let group = Arc::new(WeylGroup {
            n,
            mats,
            lengths,
            parent,
            w0: longest[0],
        });
        *guard = Some(Arc::clone(&group));
        Ok(group)
    }

    /// ℓ(w) by counting sign changes on R₂⁺ (independent of the BFS depth).
    pub fn length_by_inversions(&self, mat: &[i64]) -> usize {
        self.r2_plus
            .iter()
            .filter(|&&i| {
                let img = apply_mat(mat, &self.roots[i].coroot_c, self.rank);
                let idx = *self
                    .coroot_index
                    .get(&img)
                    .expect("Weyl image left the root system");
                !self.roots[idx].positive
            })
            .count()
    }

    /// Σ_{w ∈ W_J} q_w⁻¹ over the parabolic subgroup generated by `gens`,
    /// with q(s_i) supplied per generator.
    pub fn parabolic_poincare_inv(
        &self,
        gens: &[usize],
        q_of_gen: &dyn Fn(usize) -> f64,
    ) -> Result<f64> {
        let n = self.rank;
        let mut index: HashSet<Vec<i64>> = HashSet::new();
        let id = identity_mat(n);
        index.insert(id.clone());
        let mut frontier: Vec<(Vec<i64>, f64)> = vec![(id, 1.0)];
        let mut sum = 0.0;
        while let Some((w, v)) = frontier.pop() {
            sum += v;
            if index.len() as u128 > self.weyl_cap {
                return Err(Error::CapExceeded {
                    what: "parabolic subgroup enumeration".into(),
                    needed: index.len() as u128,
                    cap: self.weyl_cap,
                });
            }
            for &i in gens {
                let mut smat = identity_mat(n);
                for j in 0..n {
                    smat[j * n + i] -= self.cartan[i][j];
                }
                let m = mat_mul(&w, &smat, n);
                // Right multiplication ascends iff the new mat is unseen in
                // this BFS *and* the length actually grows; the inversion
                // count keeps the walk on reduced words.
                if !index.contains(&m)
                    && self.length_by_inversions(&m) > self.length_by_inversions(&w)
                {
                    index.insert(m.clone());
                    frontier.push((m, v / q_of_gen(i)));
                }
            }
        }
        Ok(sum)
    }

    /// The saturated set Π_λ (cached per dominant λ).
    pub fn saturated_set(&self, lambda: &[i64]) -> Result<Arc<SaturatedSet>> {
        if !self.is_dominant(lambda) {
            return Err(Error::InvalidParameters(
                "saturated set requires a dominant coweight".into(),
            ));
        }
        {
            let cache = self.sat_cache.read().unwrap();
            if let Some(s) = cache.get(lambda) {
                return Ok(Arc::clone(s));
            }
        }
        let dominants = self.dominant_cone_below(lambda)?;
        let n = self.rank;
        let mut points: Vec<Coweight> = Vec::new();
        let mut orbit_of: Vec<usize> = Vec::new();
        let mut index: HashMap<Coweight, usize> = HashMap::new();
        for (rep_id, rep) in dominants.iter().enumerate() {
            for p in self.weyl_orbit(rep)? {
                if index.insert(p.clone(), points.len()).is_none() {
                    points.push(p);
                    orbit_of.push(rep_id);
                }
            }
        }
        let mut lo = vec![i64::MAX; n];
        let mut hi = vec![i64::MIN; n];
        for p in &points {
            for j in 0..n {
                lo[j] = lo[j].min(p[j]);
                hi[j] = hi[j].max(p[j]);
            }
        }
        let set = Arc::new(SaturatedSet {
            points,
            index,
            dominant_reps: dominants,
            orbit_of,
            lo,
            hi,
        });
        let mut cache = self.sat_cache.write().unwrap();
        let entry = cache.entry(lambda.to_vec()).or_insert_with(|| Arc::clone(&set));
        Ok(Arc::clone(entry))
    }

    /// All dominant ν with ν ⪯ λ, in deterministic order.
    fn dominant_cone_below(&self, lambda: &[i64]) -> Result<Vec<Coweight>> {
        let n = self.rank;
        let mut out = Vec::new();
        if self.family == Family::BC {
            // Dominant BC coweights are partitions in ambient coordinates.
            let amb: Vec<i64> = (0..n).map(|i| lambda[i..].iter().sum()).collect();
            let top = amb[0];
            let budget = (top as u128 + 1).pow(n as u32);
            if budget > SATURATED_BUDGET {
                return Err(Error::BudgetExceeded(format!(
                    "saturated-set candidate box of size {budget}"
                )));
            }
            let mut nu = vec![0i64; n];
            fn rec(
                rs: &RootSystem,
                amb: &[i64],
                nu: &mut Vec<i64>,
                pos: usize,
                maxv: i64,
                out: &mut Vec<Coweight>,
            ) {
                let n = amb.len();
                if pos == n {
                    let mut run = 0i64;
                    for i in 0..n {
                        run += amb[i] - nu[i];
                        if run < 0 {
                            return;
                        }
                    }
                    // Back to c-coordinates: c_i = ν_i − ν_{i+1}, c_n = ν_n.
                    let mut c = vec![0i64; n];
                    for i in 0..n - 1 {
                        c[i] = nu[i] - nu[i + 1];
                    }
                    c[n - 1] = nu[n - 1];
                    debug_assert!(rs.is_dominant(&c));
                    out.push(c);
                    return;
                }
                for v in (0..=maxv).rev() {
                    nu[pos] = v;
                    rec(rs, amb, nu, pos + 1, v, out);
                }
                nu[pos] = 0;
            }
            rec(self, &amb, &mut nu, 0, top, &mut out);
        } else {
            // ν = λ − Σ k_i α_i∨ with 0 ≤ k_i ≤ ⟨λ, ϖ_i⟩.
            let mut caps = Vec::with_capacity(n);
            let mut budget: u128 = 1;
            for i in 0..n {
                let mut bound = Rat::zero();
                for j in 0..n {
                    bound += self.cartan_inv[j][i] * rat(lambda[j]);
                }
                assert!(!bound.is_negative());
                let cap = bound.floor().to_integer();
                budget = budget.saturating_mul(cap as u128 + 1);
                caps.push(cap);
            }
            if budget > SATURATED_BUDGET {
                return Err(Error::BudgetExceeded(format!(
                    "saturated-set candidate box of size {budget}"
                )));
            }
            let mut k = vec![0i64; n];
            loop {
                let mut c = lambda.to_vec();
                for i in 0..n {
                    if k[i] != 0 {
                        for j in 0..n {
                            c[j] -= k[i] * self.cartan[i][j];
                        }
                    }
                }
                if c.iter().all(|&x| x >= 0) {
                    out.push(c);
                }
                let mut pos = 0;
                loop {
                    if pos == n {
                        break;
                    }
                    k[pos] += 1;
                    if k[pos] <= caps[pos] {
                        break;
                    }
                    k[pos] = 0;
                    pos += 1;
                }
                if pos == n {
                    break;
                }
            }
        }
        out.sort();
        Ok(out)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let rat_str = |r: &Rat| {
            if r.is_integer() {
                r.numer().to_string()
            } else {
                format!("{}/{}", r.numer(), r.denom())
            }
        };
        json!({
            "family": self.family.to_string(),
            "rank": self.rank,
            "ambient_dim": self.ambient_dim,
            "root_count": self.roots.len(),
            "weyl_order": self.weyl_order.to_string(),
            "cartan": self.cartan,
            "marks": self.marks,
            "good_types": self.good_types,
            "affine_node_classes": self.affine_classes,
            "star": (0..self.rank).map(|j| self.star[j] + 1).collect::<Vec<_>>(),
            "quotient_group_order": self.uq_characters.len(),
            "simple_roots": self.simple.iter().map(|&i| {
                self.roots[i].ambient.iter().map(|x| rat_str(x)).collect::<Vec<_>>()
            }).collect::<Vec<_>>(),
            "fundamental_coweights": self.fund_coweights.iter().map(|v| {
                v.iter().map(|x| rat_str(x)).collect::<Vec<_>>()
            }).collect::<Vec<_>>(),
            "positive_roots": self.positive.iter().map(|&i| {
                self.roots[i].ambient.iter().map(|x| rat_str(x)).collect::<Vec<_>>()
            }).collect::<Vec<_>>(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rs(family: Family, rank: usize) -> RootSystem {
        RootSystem::new(family, rank).unwrap()
    }

    #[test]
    fn bc1_matches_the_non_reduced_rank_one_model() {
        let r = rs(Family::BC, 1);
        assert_eq!(r.roots().len(), 4);
        let ambients: HashSet<Vec<Rat>> = r.roots().iter().map(|x| x.ambient.clone()).collect();
        for target in [vec![rat(1)], vec![rat(-1)], vec![rat(2)], vec![rat(-2)]] {
            assert!(ambients.contains(&target));
        }
        // λ₁ = e₁ and P = Q (single trivial character).
        assert_eq!(r.fundamental_coweights()[0], vec![rat(1)]);
        assert_eq!(r.quotient_characters().len(), 1);
        assert!(r.quotient_characters()[0].is_trivial());
    }

    #[test]
    fn a1_has_two_roots_and_halved_coweight() {
        let r = rs(Family::A, 1);
        assert_eq!(r.roots().len(), 2);
        let alpha = &r.roots()[r.simple_indices()[0]];
        let lam = &r.fundamental_coweights()[0];
        for (l, a) in lam.iter().zip(&alpha.ambient) {
            assert_eq!(*l * rat(2), *a);
        }
        assert_eq!(r.quotient_characters().len(), 2);
        let nontrivial = r
            .quotient_characters()
            .iter()
            .find(|c| !c.is_trivial())
            .unwrap();
        assert_eq!(nontrivial.phases[0], Rat::new(1, 2));
    }

    #[test]
    fn a2_basic_data() {
        let r = rs(Family::A, 2);
        assert_eq!(r.positive_indices().len(), 3);
        assert_eq!(r.marks(), &[1, 1]);
        assert_eq!(r.weyl_order(), 6);
        assert_eq!(r.good_types(), &[0, 1, 2]);
        // w₀ sends λ₁ to −λ₂.
        assert_eq!(r.apply_w0(&[1, 0]), vec![0, -1]);
        assert_eq!(r.star_index(0), 1);
        // Three characters of P/Q ≅ Z/3, cube roots of unity on λ₁.
        assert_eq!(r.quotient_characters().len(), 3);
        let mut phases: Vec<Rat> = r
            .quotient_characters()
            .iter()
            .map(|c| c.phase_on(&[1, 0]))
            .collect();
        phases.sort();
        assert_eq!(phases, vec![Rat::zero(), Rat::new(1, 3), Rat::new(2, 3)]);
    }

    #[test]
    fn b1_and_c1_alias_to_a1() {
        let b1 = rs(Family::B, 1);
        assert_eq!(b1.family(), Family::A);
        assert_eq!(b1.roots().len(), 2);
        let c1 = rs(Family::C, 1);
        assert_eq!(c1.family(), Family::A);
    }

    #[test]
    fn invalid_types_are_rejected() {
        assert!(RootSystem::new(Family::D, 3).is_err());
        assert!(RootSystem::new(Family::E, 9).is_err());
        assert!(RootSystem::new(Family::F, 3).is_err());
        assert!(RootSystem::new(Family::G, 3).is_err());
        assert!(RootSystem::new(Family::A, 0).is_err());
    }

    #[test]
    fn root_counts_match_the_classification() {
        let cases = [
            (Family::A, 1, 2),
            (Family::A, 3, 12),
            (Family::B, 2, 8),
            (Family::B, 3, 18),
            (Family::C, 3, 18),
            (Family::D, 4, 24),
            (Family::D, 5, 40),
            (Family::G, 2, 12),
            (Family::F, 4, 48),
            (Family::E, 6, 72),
            (Family::E, 7, 126),
            (Family::E, 8, 240),
            (Family::BC, 2, 12),
            (Family::BC, 3, 24),
        ];
        for (f, n, count) in cases {
            assert_eq!(rs(f, n).roots().len(), count, "{f}{n}");
        }
    }

    #[test]
    fn quotient_group_orders_match_the_tables() {
        let cases = [
            (Family::A, 3, 4),
            (Family::B, 3, 2),
            (Family::C, 3, 2),
            (Family::D, 4, 4),
            (Family::G, 2, 1),
            (Family::F, 4, 1),
            (Family::E, 6, 3),
            (Family::E, 7, 2),
            (Family::E, 8, 1),
            (Family::BC, 3, 1),
        ];
        for (f, n, order) in cases {
            assert_eq!(rs(f, n).quotient_characters().len(), order, "{f}{n}");
        }
    }

    #[test]
    fn bc_subsystem_split() {
        let r = rs(Family::BC, 3);
        let r1 = r.roots().iter().filter(|x| x.in_r1).count();
        let r2 = r.roots().iter().filter(|x| x.in_r2).count();
        let r3 = r.roots().iter().filter(|x| x.in_r1 && x.in_r2).count();
        assert_eq!(r1, 18); // C₃ inside
        assert_eq!(r2, 18); // B₃ inside
        assert_eq!(r3, 12); // D₃-like intersection
        let reduced = rs(Family::B, 3);
        assert!(reduced.roots().iter().all(|x| x.in_r1 && x.in_r2));
    }

    #[test]
    fn dominance_examples() {
        let a2 = rs(Family::A, 2);
        assert!(a2.dominance_leq(&[0, 0], &[1, 1]));
        assert!(a2.dominance_leq(&[1, 0], &[1, 0]));
        assert!(!a2.dominance_leq(&[1, 0], &[0, 1]));
        // BC: prefix-sum rule, e.g. e₂ = (coords of e₂) has λ−μ = e₁−e₂ ⪰ 0.
        let bc2 = rs(Family::BC, 2);
        // c(e₁) = (1,0)·? ambient e₁ ↔ c = (⟨e₁,α₁⟩,⟨e₁,α₂⟩) = (1,0); e₂ ↔ (−1,1).
        assert!(bc2.dominance_leq(&[-1, 1], &[1, 0]));
        assert!(!bc2.dominance_leq(&[1, 0], &[-1, 1]));
        // 2e₂ ⪯̸ e₁ (prefix sum −1).
        assert!(!bc2.dominance_leq(&[-2, 2], &[1, 0]));
    }

    #[test]
    fn q_membership() {
        let a1 = rs(Family::A, 1);
        assert!(!a1.in_q(&[1])); // λ₁ ∉ Q
        assert!(a1.in_q(&[2])); // α₁∨ ∈ Q
        let bc2 = rs(Family::BC, 2);
        assert!(bc2.in_q(&[1, 0]));
        assert!(bc2.in_q(&[0, 1]));
    }

    #[test]
    fn saturated_sets_match_hand_enumerations() {
        let a1 = rs(Family::A, 1);
        let s = a1.saturated_set(&[1]).unwrap();
        let mut pts = s.points.clone();
        pts.sort();
        assert_eq!(pts, vec![vec![-1], vec![1]]);

        let a2 = rs(Family::A, 2);
        let s = a2.saturated_set(&[1, 1]).unwrap();
        assert_eq!(s.points.len(), 7);
        assert!(s.contains(&[0, 0]));
        assert_eq!(s.dominant_reps.len(), 2);

        let s0 = a2.saturated_set(&[0, 0]).unwrap();
        assert_eq!(s0.points.len(), 1);
    }

    #[test]
    fn saturated_sets_are_weyl_invariant_and_saturated() {
        for (f, n, lam) in [
            (Family::A, 2, vec![2, 1]),
            (Family::C, 2, vec![1, 1]),
            (Family::BC, 2, vec![1, 1]),
            (Family::G, 2, vec![1, 0]),
        ] {
            let r = rs(f, n);
            let s = r.saturated_set(&lam).unwrap();
            for p in &s.points {
                for i in 0..n {
                    assert!(s.contains(&r.reflect_simple(p, i)));
                }
                // String property: μ − kα∨ stays inside for 0 ≤ k ≤ ⟨μ,α⟩.
                for &ri in r.positive_indices() {
                    let m = r.pair(p, ri);
                    if m > 0 {
                        for k in 0..=m {
                            let q: Vec<i64> = (0..n)
                                .map(|j| p[j] - k * r.roots()[ri].coroot_c[j])
                                .collect();
                            assert!(s.contains(&q), "string broke at {q:?}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn weyl_group_enumeration_and_lengths() {
        let b2 = rs(Family::B, 2);
        let w = b2.weyl().unwrap();
        assert_eq!(w.order(), 8);
        for i in 0..w.order() {
            assert_eq!(
                w.lengths[i] as usize,
                b2.length_by_inversions(&w.mats[i]),
                "BFS depth must equal the inversion count"
            );
        }
        let g2 = rs(Family::G, 2);
        let w = g2.weyl().unwrap();
        assert_eq!(w.order(), 12);
        assert_eq!(w.lengths[w.w0] as usize, 6);
    }

    #[test]
    fn weyl_closure_on_roots() {
        for (f, n) in [(Family::A, 2), (Family::B, 2), (Family::BC, 2)] {
            let r = rs(f, n);
            let w = r.weyl().unwrap();
            for i in 0..w.order() {
                for &ri in r.positive_indices() {
                    let img = apply_mat(&w.mats[i], &r.roots()[ri].coroot_c, n);
                    assert!(r.coroot_index.contains_key(&img));
                }
            }
        }
    }

    #[test]
    fn e8_weyl_enumeration_is_refused_but_structure_builds() {
        let e8 = rs(Family::E, 8);
        assert_eq!(e8.roots().len(), 240);
        assert!(matches!(e8.weyl(), Err(Error::CapExceeded { .. })));
        assert!(matches!(
            RootSystem::new(Family::E, 7).unwrap().weyl(),
            Err(Error::CapExceeded { .. })
        ));
    }

    #[test]
    fn star_involution_and_fixed_points() {
        let c2 = rs(Family::C, 2);
        assert_eq!(c2.star_index(0), 0);
        assert_eq!(c2.star_index(1), 1);
        let a3 = rs(Family::A, 3);
        assert_eq!(a3.star_index(0), 2);
        assert_eq!(a3.star_index(1), 1);
        let d4 = rs(Family::D, 4);
        for j in 0..4 {
            assert_eq!(d4.star_index(d4.star_index(j)), j);
        }
        // star on coweights agrees with −w₀.
        let a2 = rs(Family::A, 2);
        let c = vec![3, 1];
        let starred = a2.star_coweight(&c);
        let direct: Vec<i64> = a2.apply_w0(&c).iter().map(|x| -x).collect();
        assert_eq!(starred, direct);
    }

    #[test]
    fn highest_root_dominates_everything() {
        for (f, n) in [
            (Family::A, 3),
            (Family::B, 3),
            (Family::C, 2),
            (Family::D, 4),
            (Family::G, 2),
            (Family::F, 4),
            (Family::BC, 2),
        ] {
            let r = rs(f, n);
            let hi = &r.roots()[r.highest_root_index()];
            for x in r.roots() {
                assert!(hi.k.iter().zip(&x.k).all(|(a, b)| a >= b));
            }
        }
    }

    #[test]
    fn marks_and_good_types() {
        assert_eq!(rs(Family::C, 2).good_types(), &[0, 2]);
        assert_eq!(rs(Family::B, 2).good_types(), &[0, 1]);
        assert_eq!(rs(Family::G, 2).good_types(), &[0]);
        assert_eq!(rs(Family::BC, 2).good_types(), &[0]);
        assert_eq!(rs(Family::A, 3).good_types(), &[0, 1, 2, 3]);
    }

    #[test]
    fn affine_diagram_classes() {
        // Ã₂: one class. C̃₂: three. B̃₃: two. G̃₂: two. Ã₁: two.
        assert_eq!(distinct(rs(Family::A, 2).affine_node_classes()), 1);
        assert_eq!(distinct(rs(Family::C, 2).affine_node_classes()), 3);
        assert_eq!(distinct(rs(Family::BC, 2).affine_node_classes()), 3);
        assert_eq!(distinct(rs(Family::B, 3).affine_node_classes()), 2);
        assert_eq!(distinct(rs(Family::G, 2).affine_node_classes()), 2);
        assert_eq!(distinct(rs(Family::A, 1).affine_node_classes()), 2);
        assert_eq!(distinct(rs(Family::BC, 1).affine_node_classes()), 2);
        // B̃₃ puts nodes 0 and 1 in the same class as the chain, node n apart.
        let b3 = rs(Family::B, 3);
        let cls = b3.affine_node_classes();
        assert_eq!(cls[0], cls[1]);
        assert_eq!(cls[1], cls[2]);
        assert_ne!(cls[0], cls[3]);
    }

    fn distinct(xs: &[usize]) -> usize {
        xs.iter().collect::<HashSet<_>>().len()
    }

    #[test]
    fn coroot_orbit_of_highest_root_spans_q() {
        for (f, n) in [
            (Family::A, 2),
            (Family::B, 2),
            (Family::C, 3),
            (Family::D, 4),
            (Family::G, 2),
            (Family::BC, 2),
        ] {
            let r = rs(f, n);
            let orbit = r.weyl_orbit(&r.roots()[r.highest_root_index()].coroot_c).unwrap();
            let cols: Vec<Vec<i64>> = (0..n)
                .map(|j| orbit.iter().map(|c| c[j]).collect())
                .collect();
            let (_, d_orbit) = smith_normal_form(&cols);
            let cols_all: Vec<Vec<i64>> = (0..n)
                .map(|j| {
                    r.positive_indices()
                        .iter()
                        .map(|&i| r.roots()[i].coroot_c[j])
                        .collect()
                })
                .collect();
            let (_, d_all) = smith_normal_form(&cols_all);
            assert_eq!(d_orbit, d_all, "{f}{n}: W₀α̃∨ must span Q");
        }
    }

    #[test]
    fn parabolic_poincare_matches_hand_values() {
        let a2 = rs(Family::A, 2);
        let q = |_: usize| 2.0;
        let full = a2.parabolic_poincare_inv(&[0, 1], &q).unwrap();
        assert!((full - 2.625).abs() < 1e-12);
        let sub = a2.parabolic_poincare_inv(&[1], &q).unwrap();
        assert!((sub - 1.5).abs() < 1e-12);
        let triv = a2.parabolic_poincare_inv(&[], &q).unwrap();
        assert!((triv - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dominant_rep_folds_into_the_chamber() {
        let g2 = rs(Family::G, 2);
        let w = g2.weyl().unwrap();
        let lam = vec![2, 1];
        for i in 0..w.order() {
            let moved = w.apply(i, &lam);
            assert_eq!(g2.dominant_rep(&moved), lam);
        }
    }

    #[test]
    fn json_export_has_core_fields() {
        let v = rs(Family::BC, 2).to_json();
        assert_eq!(v["family"], "BC");
        assert_eq!(v["rank"], 2);
        assert_eq!(v["root_count"], 12);
        assert_eq!(v["quotient_group_order"], 1);
    }
}
