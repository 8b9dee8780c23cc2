//! Decision procedures for orbit equivalence and conjugacy of odometer
//! products, the K-theoretic invariant and eigenvalue groups.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_integer::Integer;
use serde::Serialize;
use thiserror::Error;

use crate::dynamics::supernatural_level_modulus;
use crate::intmat::{solve_conjugator, FiniteAbelianGroup, IntMatrix, MatrixError};
use crate::supernatural::{gcd_u64, is_prime, Exponent, Supernatural, SupernaturalError};

/// Largest modulus the eigenvalue oracle enumerates.
pub const ORACLE_MODULUS_GUARD: u64 = 10_000;

/// Largest rank whose `2^r` subset products are listed.
pub const MAX_K_RANK: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecideError {
    #[error("{0} is not supernatural (no prime has infinite exponent)")]
    NotSupernatural(Supernatural),
    #[error("finite part {0} does not fit in 64 bits")]
    Overflow(Supernatural),
    #[error("rank {0} exceeds the invariant limit of {MAX_K_RANK}")]
    RankTooLarge(usize),
    #[error("modulus {modulus} exceeds the oracle guard of {ORACLE_MODULUS_GUARD}")]
    Guard { modulus: u64 },
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),
    #[error("certificate failed re-verification: {0}")]
    Certificate(String),
    #[error(transparent)]
    Supernatural(#[from] SupernaturalError),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
}

fn check_inputs(xs: &[Supernatural]) -> Result<(), DecideError> {
    match xs.iter().find(|m| !m.is_supernatural()) {
        Some(m) => Err(DecideError::NotSupernatural(m.clone())),
        None => Ok(()),
    }
}

fn product(xs: &[Supernatural]) -> Supernatural {
    xs.iter().fold(Supernatural::one(), |acc, m| acc.mul(m))
}

fn sorted_keys(xs: &[Supernatural]) -> Vec<BTreeSet<u64>> {
    let mut keys: Vec<_> = xs.iter().map(Supernatural::class_key).collect();
    keys.sort();
    keys
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "tag", rename_all = "kebab-case")]
pub enum CoeObstruction {
    LengthMismatch { left: usize, right: usize },
    TotalProductMismatch { left: Supernatural, right: Supernatural },
    ClassMismatch { left: Vec<BTreeSet<u64>>, right: Vec<BTreeSet<u64>> },
}

impl fmt::Display for CoeObstruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoeObstruction::LengthMismatch { left, right } => write!(f, "length mismatch: {left} vs {right} factors"),
            CoeObstruction::TotalProductMismatch { left, right } => {
                write!(f, "total product mismatch: {left} vs {right}")
            }
            CoeObstruction::ClassMismatch { left, right } => {
                write!(f, "class multiset mismatch: {} vs {}", fmt_keys(left), fmt_keys(right))
            }
        }
    }
}

pub(crate) fn fmt_key(key: &BTreeSet<u64>) -> String {
    format!("{{{}}}", key.iter().map(u64::to_string).collect::<Vec<_>>().join(","))
}

fn fmt_keys(keys: &[BTreeSet<u64>]) -> String {
    format!("[{}]", keys.iter().map(fmt_key).collect::<Vec<_>>().join(", "))
}

/// `m · M_i = n · N_{σ(i)}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CoePair {
    pub m: Supernatural,
    pub n: Supernatural,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum CoeVerdict {
    Equivalent { sigma: Vec<usize>, pairs: Vec<CoePair> },
    NotEquivalent { obstruction: CoeObstruction },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CoeDecision {
    pub ms: Vec<Supernatural>,
    pub ns: Vec<Supernatural>,
    #[serde(flatten)]
    pub verdict: CoeVerdict,
}

impl CoeDecision {
    pub fn equivalent(&self) -> bool {
        matches!(self.verdict, CoeVerdict::Equivalent { .. })
    }

    pub fn sigma(&self) -> Option<&[usize]> {
        match &self.verdict {
            CoeVerdict::Equivalent { sigma, .. } => Some(sigma),
            CoeVerdict::NotEquivalent { .. } => None,
        }
    }

    pub fn pairs(&self) -> Option<&[CoePair]> {
        match &self.verdict {
            CoeVerdict::Equivalent { pairs, .. } => Some(pairs),
            CoeVerdict::NotEquivalent { .. } => None,
        }
    }

    /// Re-checks `m_i M_i = n_i N_{σ(i)}` and `∏M = ∏N` exactly.
    pub fn verify(&self) -> Result<(), DecideError> {
        let CoeVerdict::Equivalent { sigma, pairs } = &self.verdict else {
            return Ok(());
        };
        let mut used = vec![false; self.ns.len()];
        for (i, (&j, pair)) in sigma.iter().zip(pairs).enumerate() {
            if j >= used.len() || std::mem::replace(&mut used[j], true) {
                return Err(DecideError::Certificate(format!("sigma {sigma:?} is not a permutation")));
            }
            if !pair.m.is_finite() || !pair.n.is_finite() {
                return Err(DecideError::Certificate(format!("pair {i} is not finite")));
            }
            if pair.m.mul(&self.ms[i]) != pair.n.mul(&self.ns[j]) {
                return Err(DecideError::Certificate(format!(
                    "{} * {} != {} * {}",
                    pair.m, self.ms[i], pair.n, self.ns[j]
                )));
            }
        }
        if sigma.len() != self.ms.len() || self.ms.len() != self.ns.len() {
            return Err(DecideError::Certificate("sigma has the wrong length".into()));
        }
        if product(&self.ms) != product(&self.ns) {
            return Err(DecideError::Certificate("total products differ".into()));
        }
        Ok(())
    }
}

/// Orbit equivalence of `⊠ α_{M_i}` and `⊠ α_{N_j}`.
///
/// Equivalent iff the lengths agree, the total products agree and the class
/// keys agree as multisets. `σ` matches each `M_i` with the first unused
/// `N_j` of its class.
pub fn coe_decide(ms: &[Supernatural], ns: &[Supernatural]) -> Result<CoeDecision, DecideError> {
    check_inputs(ms)?;
    check_inputs(ns)?;
    let verdict = coe_verdict(ms, ns)?;
    let d = CoeDecision { ms: ms.to_vec(), ns: ns.to_vec(), verdict };
    d.verify()?;
    Ok(d)
}

fn coe_verdict(ms: &[Supernatural], ns: &[Supernatural]) -> Result<CoeVerdict, DecideError> {
    if ms.len() != ns.len() {
        return Ok(CoeVerdict::NotEquivalent {
            obstruction: CoeObstruction::LengthMismatch { left: ms.len(), right: ns.len() },
        });
    }
    let (pm, pn) = (product(ms), product(ns));
    if pm != pn {
        return Ok(CoeVerdict::NotEquivalent {
            obstruction: CoeObstruction::TotalProductMismatch { left: pm, right: pn },
        });
    }
    let (km, kn) = (sorted_keys(ms), sorted_keys(ns));
    if km != kn {
        return Ok(CoeVerdict::NotEquivalent { obstruction: CoeObstruction::ClassMismatch { left: km, right: kn } });
    }
    let mut used = vec![false; ns.len()];
    let mut sigma = Vec::with_capacity(ms.len());
    let mut pairs = Vec::with_capacity(ms.len());
    for m in ms {
        let key = m.class_key();
        let j = (0..ns.len())
            .find(|&j| !used[j] && ns[j].class_key() == key)
            .expect("class multisets agree");
        used[j] = true;
        let (a, b) = m.sim_witness(&ns[j])?;
        sigma.push(j);
        pairs.push(CoePair { m: a, n: b });
    }
    Ok(CoeVerdict::Equivalent { sigma, pairs })
}

/// One `∼`-class of a conjugacy decision.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConjBlock {
    pub key: BTreeSet<u64>,
    /// Indices into `Ms`.
    pub left: Vec<usize>,
    /// Indices into `Ns`.
    pub right: Vec<usize>,
    /// Canonical common part `L_k`.
    pub l: Supernatural,
    /// `M_i = m_i L_k`, in the order of `left`.
    pub m: Vec<u64>,
    /// `N_j = n_j L_k`, in the order of `right`.
    pub n: Vec<u64>,
    /// `S diag(m) T = diag(n)` when the block is conjugate.
    pub conjugator: Option<(IntMatrix, IntMatrix)>,
}

impl ConjBlock {
    pub fn left_group(&self) -> FiniteAbelianGroup {
        FiniteAbelianGroup::new(self.m.clone())
    }

    pub fn right_group(&self) -> FiniteAbelianGroup {
        FiniteAbelianGroup::new(self.n.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "tag", rename_all = "kebab-case")]
pub enum ConjFailure {
    ClassSize { key: BTreeSet<u64>, left: usize, right: usize },
    NotIsomorphic { key: BTreeSet<u64>, left: FiniteAbelianGroup, right: FiniteAbelianGroup },
}

impl fmt::Display for ConjFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConjFailure::ClassSize { key, left, right } => {
                write!(f, "class {} has {left} factors on the left and {right} on the right", fmt_key(key))
            }
            ConjFailure::NotIsomorphic { key, left, right } => {
                write!(f, "block {}: {left} is not isomorphic to {right}", fmt_key(key))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConjDecision {
    pub ms: Vec<Supernatural>,
    pub ns: Vec<Supernatural>,
    pub conjugate: bool,
    pub blocks: Vec<ConjBlock>,
    pub failure: Option<ConjFailure>,
}

impl ConjDecision {
    /// Re-checks `M_i = m_i L_k`, `gcd(m_i, L_k) = 1` and the conjugators exactly.
    pub fn verify(&self) -> Result<(), DecideError> {
        for b in &self.blocks {
            for (idx, m, side) in b
                .left
                .iter()
                .zip(&b.m)
                .map(|(&i, &m)| (&self.ms[i], m, "left"))
                .chain(b.right.iter().zip(&b.n).map(|(&j, &n)| (&self.ns[j], n, "right")))
            {
                let mf = Supernatural::from_u64(m);
                if mf.mul(&b.l) != *idx || !mf.gcd(&b.l).is_one() {
                    return Err(DecideError::Certificate(format!(
                        "{side} factor {idx} is not {m} * {} with coprime parts",
                        b.l
                    )));
                }
            }
            if let Some((s, t)) = &b.conjugator {
                let lhs = s.mul(&IntMatrix::diag(&b.m))?.mul(t)?;
                if lhs != IntMatrix::diag(&b.n) || !s.is_unimodular() || !t.is_unimodular() {
                    return Err(DecideError::Certificate(format!("conjugator of block {} fails", fmt_key(&b.key))));
                }
            }
        }
        Ok(())
    }
}

/// The canonical `L` of a class: `∞` on the key, the shared exponent where
/// every member agrees, `0` elsewhere.
pub fn canonical_l(members: &[&Supernatural]) -> Supernatural {
    let primes: BTreeSet<u64> = members.iter().flat_map(|m| m.support()).collect();
    let mut pairs = Vec::new();
    for p in primes {
        let first = members[0].valuation(p);
        if members.iter().all(|m| m.valuation(p) == first) {
            pairs.push((p, first));
        }
    }
    Supernatural::from_factors(pairs).expect("primes come from existing supports")
}

/// `M / L` for `L | M` with `∞` exactly where `M` has `∞`.
fn finite_part(m: &Supernatural, l: &Supernatural) -> Result<u64, DecideError> {
    let mut pairs = Vec::new();
    for (p, e) in m.factors() {
        match (e, l.valuation(p)) {
            (Exponent::Infinite, Exponent::Infinite) => {}
            (Exponent::Finite(a), Exponent::Finite(b)) if *a >= b => pairs.push((p, Exponent::Finite(a - b))),
            _ => {
                return Err(DecideError::Certificate(format!("{l} does not split off from {m}")));
            }
        }
    }
    let q = Supernatural::from_factors(pairs)?;
    q.to_u64().ok_or(DecideError::Overflow(q))
}

/// Conjugacy of `⊠ α_{M_i}` and `⊠ α_{N_j}`.
///
/// Indices are grouped by class key; each class needs equally many factors
/// on both sides and isomorphic finite parts over the canonical `L_k`.
pub fn conj_decide(ms: &[Supernatural], ns: &[Supernatural]) -> Result<ConjDecision, DecideError> {
    check_inputs(ms)?;
    check_inputs(ns)?;
    let mut classes: BTreeMap<BTreeSet<u64>, (Vec<usize>, Vec<usize>)> = BTreeMap::new();
    for (i, m) in ms.iter().enumerate() {
        classes.entry(m.class_key()).or_default().0.push(i);
    }
    for (j, n) in ns.iter().enumerate() {
        classes.entry(n.class_key()).or_default().1.push(j);
    }
    let mut blocks = Vec::new();
    let mut failure = None;
    for (key, (left, right)) in classes {
        if left.len() != right.len() {
            failure.get_or_insert(ConjFailure::ClassSize { key: key.clone(), left: left.len(), right: right.len() });
            continue;
        }
        let members: Vec<&Supernatural> = left.iter().map(|&i| &ms[i]).chain(right.iter().map(|&j| &ns[j])).collect();
        let l = canonical_l(&members);
        let m = left.iter().map(|&i| finite_part(&ms[i], &l)).collect::<Result<Vec<_>, _>>()?;
        let n = right.iter().map(|&j| finite_part(&ns[j], &l)).collect::<Result<Vec<_>, _>>()?;
        let mut block = ConjBlock { key, left, right, l, m, n, conjugator: None };
        match solve_conjugator(&block.m, &block.n) {
            Ok(st) => block.conjugator = Some(st),
            Err(MatrixError::NotIsomorphic(a, b)) => {
                failure.get_or_insert(ConjFailure::NotIsomorphic { key: block.key.clone(), left: a, right: b });
            }
            Err(e) => return Err(e.into()),
        }
        blocks.push(block);
    }
    let d = ConjDecision { ms: ms.to_vec(), ns: ns.to_vec(), conjugate: failure.is_none(), blocks, failure };
    d.verify()?;
    Ok(d)
}

/// Subset product with its class key.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct KEntry {
    pub subset: Vec<usize>,
    pub product: Supernatural,
    pub class_key: BTreeSet<u64>,
}

/// `⊕_{I} Z[(∏_{i∈I} M_i)^{-1}]` recorded by its summands, with the distinguished total product.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct KInvariant {
    pub rank: usize,
    pub entries: Vec<KEntry>,
    pub total: Supernatural,
}

impl KInvariant {
    /// Class keys of all summands, sorted.
    pub fn key_multiset(&self) -> Vec<BTreeSet<u64>> {
        let mut keys: Vec<_> = self.entries.iter().map(|e| e.class_key.clone()).collect();
        keys.sort();
        keys
    }
}

pub fn k_invariant(ms: &[Supernatural]) -> Result<KInvariant, DecideError> {
    check_inputs(ms)?;
    let r = ms.len();
    if r > MAX_K_RANK {
        return Err(DecideError::RankTooLarge(r));
    }
    let entries = (0u64..1 << r)
        .map(|mask| {
            let subset: Vec<usize> = (0..r).filter(|i| mask >> i & 1 == 1).collect();
            let product = subset.iter().fold(Supernatural::one(), |acc, &i| acc.mul(&ms[i]));
            let class_key = product.class_key();
            KEntry { subset, product, class_key }
        })
        .collect();
    Ok(KInvariant { rank: r, entries, total: product(ms) })
}

/// Equal rank, equal total product and equal class-key multisets.
pub fn k_invariant_equal(a: &KInvariant, b: &KInvariant) -> bool {
    a.rank == b.rank && a.total == b.total && a.key_multiset() == b.key_multiset()
}

/// A reduced fraction in `[0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct Fraction {
    pub num: u64,
    pub den: u64,
}

impl Fraction {
    pub fn new(num: u64, den: u64) -> Self {
        assert!(den > 0, "denominator must be positive");
        let num = num % den;
        let g = gcd_u64(num, den).max(1);
        Self { num: num / g, den: den / g }
    }
}

impl Ord for Fraction {
    fn cmp(&self, other: &Self) -> Ordering {
        (u128::from(self.num) * u128::from(other.den)).cmp(&(u128::from(other.num) * u128::from(self.den)))
    }
}

impl PartialOrd for Fraction {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Fraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.num == 0 {
            f.write_str("0")
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

/// `T(A) = Z[A^{-1}]/Z ⊆ Q/Z`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct TGroup(pub Supernatural);

impl TGroup {
    pub fn trivial() -> Self {
        TGroup(Supernatural::one())
    }

    pub fn supernatural(&self) -> &Supernatural {
        &self.0
    }

    /// Elements whose denominator divides `m`: `{t/g}` with `g = gcd(A, m)`.
    pub fn truncation(&self, m: u64) -> BTreeSet<Fraction> {
        let g = self.0.gcd(&Supernatural::from_u64(m)).to_u64().expect("divides m");
        (0..g).map(|t| Fraction::new(t, g)).collect()
    }
}

impl fmt::Display for TGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "T({})", self.0)
    }
}

/// Eigenvalue group of `α_M^k`: `T(M / gcd(|k|, M))`, and `T(1)` for `k = 0`.
pub fn eig_group(m: &Supernatural, k: i64) -> Result<TGroup, DecideError> {
    check_inputs(std::slice::from_ref(m))?;
    if k == 0 {
        return Ok(TGroup::trivial());
    }
    let g = m.gcd(&Supernatural::from_u64(k.unsigned_abs()));
    Ok(TGroup(m.div_exact(&g)?))
}

/// Eigenvalues of translation by `k` on `Z/m`, `m` the level modulus of `M`.
pub fn eig_group_oracle(m: &Supernatural, k: i64, level: u32) -> Result<BTreeSet<Fraction>, DecideError> {
    let modulus = supernatural_level_modulus(m, level).map_err(|_| DecideError::Guard { modulus: u64::MAX })?;
    if modulus > ORACLE_MODULUS_GUARD {
        return Err(DecideError::Guard { modulus });
    }
    let step = k.rem_euclid(modulus as i64) as u64;
    Ok((0..modulus).map(|t| Fraction::new((t * step) % modulus, modulus)).collect())
}

/// The part of `eig_group(M, k)` seen at `level`: elements of order dividing
/// `m / gcd(k, m)`, `m` the level modulus. Compared against [`eig_group_oracle`].
pub fn eig_truncation(m: &Supernatural, k: i64, level: u32) -> Result<BTreeSet<Fraction>, DecideError> {
    let modulus = supernatural_level_modulus(m, level).map_err(|_| DecideError::Guard { modulus: u64::MAX })?;
    let seen = modulus / gcd_u64(k.unsigned_abs(), modulus);
    Ok(eig_group(m, k)?.truncation(seen))
}

/// `T(A) ⊆ T(B)` iff `A | B`.
pub fn tgroup_subset(a: &TGroup, b: &TGroup) -> bool {
    a.0.divides(&b.0)
}

/// `T(A) + T(B) = T(lcm(A, B))`.
pub fn tgroup_product(a: &TGroup, b: &TGroup) -> TGroup {
    TGroup(a.0.lcm(&b.0))
}

/// A certified comparison of eigenvalue groups.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Comparison {
    pub claim: String,
    pub left: TGroup,
    pub right: TGroup,
    pub holds: bool,
}

/// Outcome of the free-group counterexample analysis for `(p, q, n)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CounterexampleReport {
    pub p: u64,
    pub q: u64,
    pub n: u64,
    pub ms: Vec<Supernatural>,
    pub ns: Vec<Supernatural>,
    /// Orbit equivalence of the free-group actions is taken from the literature, not derived here.
    pub coe_cited: String,
    /// The eigenvalue groups of a homeomorphism and of its odometer part coincide; assumed.
    pub assumed_lemma: String,
    /// `E(γ_a)`.
    pub gamma_eigenvalues: TGroup,
    /// The values `E(δ_g)` can take when `g` has no `N_2` component.
    pub l_zero_values: Vec<TGroup>,
    /// `T(q^∞)`, contained in `E(δ_g)` when `g` has a nonzero `N_2` component.
    pub l_nonzero_lower_bound: TGroup,
    pub comparisons: Vec<Comparison>,
    /// Whether the odometer-product shadow (same `M`, `N` over `Z^2`) is orbit equivalent.
    pub shadow_coe: bool,
    pub conjugate: bool,
}

impl CounterexampleReport {
    pub fn certified(&self) -> bool {
        !self.conjugate && self.comparisons.iter().all(|c| c.holds)
    }
}

/// Certifies non-conjugacy of the free-group actions built from
/// `M = (n·p^∞, q^∞)` and `N = (p^∞, n·q^∞)`.
pub fn free_group_counterexample_check(p: u64, q: u64, n: u64) -> Result<CounterexampleReport, DecideError> {
    if !is_prime(p) || !is_prime(q) {
        return Err(DecideError::Hypothesis(format!("{p} and {q} must be prime")));
    }
    if p == q {
        return Err(DecideError::Hypothesis("p and q must differ".into()));
    }
    if n <= 1 {
        return Err(DecideError::Hypothesis(format!("n = {n} must exceed 1")));
    }
    if n.gcd(&p) != 1 || n.gcd(&q) != 1 {
        return Err(DecideError::Hypothesis(format!("n = {n} must be coprime to {p} and {q}")));
    }
    let pinf = Supernatural::prime_infinity(p)?;
    let qinf = Supernatural::prime_infinity(q)?;
    let nn = Supernatural::from_u64(n);
    let ms = vec![nn.mul(&pinf), qinf.clone()];
    let ns = vec![pinf.clone(), nn.mul(&qinf)];

    let gamma = eig_group(&ms[0], 1)?;
    let trivial = TGroup::trivial();
    let tp = TGroup(pinf.clone());
    let tq = TGroup(qinf.clone());

    // l = 0: E(δ_g) = E(α_{p^∞}^k), whose value only depends on whether k vanishes.
    let l_zero_values: BTreeSet<Supernatural> =
        [0i64, 1, p as i64, -(p as i64), n as i64].iter().map(|&k| eig_group(&pinf, k).map(|t| t.0)).collect::<Result<_, _>>()?;
    let l_zero_values: Vec<TGroup> = l_zero_values.into_iter().map(TGroup).collect();

    // l ≠ 0: E(α_{q^∞}^l) = T(q^∞) for every l ≠ 0 since gcd(l, q^∞) is finite.
    let l_nonzero_lower_bound = eig_group(&qinf, 1)?;

    let comparisons = vec![
        Comparison {
            claim: "E(gamma_a) differs from T(1)".into(),
            left: gamma.clone(),
            right: trivial.clone(),
            holds: gamma != trivial,
        },
        Comparison {
            claim: "E(gamma_a) differs from T(p^inf)".into(),
            left: gamma.clone(),
            right: tp.clone(),
            holds: gamma != tp,
        },
        Comparison {
            claim: "T(q^inf) is not contained in E(gamma_a)".into(),
            left: tq.clone(),
            right: gamma.clone(),
            holds: !tgroup_subset(&tq, &gamma),
        },
    ];
    let l_zero_ok = l_zero_values.iter().all(|t| *t == trivial || *t == tp);
    let l_nonzero_ok = l_nonzero_lower_bound == tq;
    let shadow_coe = coe_decide(&ms, &ns)?.equivalent();
    let certified = comparisons.iter().all(|c| c.holds) && l_zero_ok && l_nonzero_ok;
    Ok(CounterexampleReport {
        p,
        q,
        n,
        ms,
        ns,
        coe_cited: "orbit equivalence of the two free-group actions is a cited result (boundary action times odometers); it is not re-derived".into(),
        assumed_lemma: "E(beta_g x alpha) = E(alpha) for the boundary action beta".into(),
        gamma_eigenvalues: gamma,
        l_zero_values,
        l_nonzero_lower_bound,
        comparisons,
        shadow_coe,
        conjugate: !certified,
    })
}
