//! Explicit orbit equivalences and conjugacies between odometer products.
//!
//! Every public constructor verifies its output with [`verify_coe`] or
//! [`verify_conj`] before returning it. The plain constructors use a small
//! budget (radius [`SELF_CHECK_RADIUS`], the highest level up to
//! [`SELF_CHECK_LEVEL`] whose tables fit the default guard); the `_with`
//! variants take the budget from the caller.

use std::sync::Arc;

use num_integer::Integer;
use thiserror::Error;

use crate::cocycle::{
    compose_coe, verify_coe, verify_conj, Cocycle, CocycleError, CoeWitness, ConjWitness, GroupHom, HomCocycle,
    IdentityMap, PointMap, ShiftedMap, Transfer, TwistedCocycle, VerificationReport, VerifyConfig,
};
use crate::decide::{CoeDecision, ConjDecision, DecideError};
use crate::dynamics::{
    min_level_for, supernatural_level_modulus, DynamicsError, Factor, GroupDesc, GroupElement, Grid, Point,
    SystemSpec,
};
use crate::supernatural::{factorize, Supernatural};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WitnessError {
    #[error("decision is negative: {0}")]
    NegativeDecision(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("constructed witness failed verification:\n{0}")]
    Verification(String),
    #[error(transparent)]
    Cocycle(#[from] CocycleError),
    #[error(transparent)]
    Decide(#[from] DecideError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
}

pub const SELF_CHECK_LEVEL: u32 = 2;
pub const SELF_CHECK_RADIUS: u32 = 2;

/// Runs `check` at the highest level `≤ cfg.level` whose tables fit `cfg.guard`.
pub fn verify_fitted(
    cfg: VerifyConfig,
    check: impl Fn(VerifyConfig) -> Result<VerificationReport, CocycleError>,
) -> Result<VerificationReport, WitnessError> {
    let mut cfg = cfg;
    loop {
        match check(cfg) {
            Err(CocycleError::Dynamics(DynamicsError::Guard { .. })) if cfg.level > 0 => cfg.level -= 1,
            r => return ensure(r?),
        }
    }
}

fn self_check(
    check: impl Fn(VerifyConfig) -> Result<VerificationReport, CocycleError>,
) -> Result<VerificationReport, WitnessError> {
    verify_fitted(VerifyConfig::new(SELF_CHECK_LEVEL, SELF_CHECK_RADIUS), check)
}

fn ensure(report: VerificationReport) -> Result<VerificationReport, WitnessError> {
    if report.passed() {
        Ok(report)
    } else {
        Err(WitnessError::Verification(report.to_string()))
    }
}

fn odo(m: Supernatural) -> Result<SystemSpec, WitnessError> {
    Ok(SystemSpec::new(vec![Factor::odometer(m)?])?)
}

/// `x ↦ ([x mod l], (x − [x mod l]) / l)` from `Z/lL` onto `Z/l × Z/L`.
#[derive(Debug, Clone)]
pub struct SplitMap {
    l: u64,
    big: Supernatural,
    small: Supernatural,
    source: SystemSpec,
    target: SystemSpec,
}

impl SplitMap {
    pub fn new(l: u64, small: Supernatural) -> Result<Self, WitnessError> {
        let big = Supernatural::from_u64(l).mul(&small);
        let source = odo(big.clone())?;
        let target = SystemSpec::new(vec![Factor::cyclic(l)?, Factor::odometer(small.clone())?])?;
        Ok(Self { l, big, small, source, target })
    }
}

impl PointMap for SplitMap {
    fn source(&self) -> &SystemSpec {
        &self.source
    }

    fn target(&self) -> &SystemSpec {
        &self.target
    }

    fn source_level(&self, level: u32) -> Option<u32> {
        let need = supernatural_level_modulus(&self.small, level).ok()?.checked_mul(self.l)?;
        min_level_for(&self.big, need).ok()
    }

    fn eval(&self, level: u32, x: &Point) -> Point {
        let x = x.residues[0];
        let r = x % self.l;
        let q = (x - r) / self.l;
        let mq = supernatural_level_modulus(&self.small, level).expect("level modulus");
        Point { level, residues: vec![r, q % mq] }
    }
}

/// `([r], q) ↦ r + l·q`, the inverse of [`SplitMap`].
#[derive(Debug, Clone)]
pub struct MergeMap {
    l: u64,
    big: Supernatural,
    small: Supernatural,
    source: SystemSpec,
    target: SystemSpec,
}

impl MergeMap {
    pub fn new(l: u64, small: Supernatural) -> Result<Self, WitnessError> {
        let split = SplitMap::new(l, small)?;
        Ok(Self { l, big: split.big, small: split.small, source: split.target, target: split.source })
    }
}

impl PointMap for MergeMap {
    fn source(&self) -> &SystemSpec {
        &self.source
    }

    fn target(&self) -> &SystemSpec {
        &self.target
    }

    fn source_level(&self, level: u32) -> Option<u32> {
        let m = supernatural_level_modulus(&self.big, level).ok()?;
        min_level_for(&self.small, m / m.gcd(&self.l)).ok()
    }

    fn eval(&self, level: u32, y: &Point) -> Point {
        let m = supernatural_level_modulus(&self.big, level).expect("level modulus");
        let (r, q) = (u128::from(y.residues[0]), u128::from(y.residues[1]));
        let x = (r + u128::from(self.l) * q) % u128::from(m);
        Point { level, residues: vec![x as u64] }
    }
}

/// `a(1, x) = ([1], c)` with carry `c = 1` iff `x ≡ l − 1 (mod l)`.
#[derive(Debug, Clone)]
pub struct SplitCocycle {
    l: u64,
    level: u32,
    source: SystemSpec,
    target: GroupDesc,
}

impl SplitCocycle {
    pub fn new(l: u64, small: Supernatural) -> Result<Self, WitnessError> {
        let big = Supernatural::from_u64(l).mul(&small);
        let level = min_level_for(&big, l)?;
        Ok(Self { l, level, source: odo(big)?, target: GroupDesc::new(vec![l, 0]) })
    }
}

impl Cocycle for SplitCocycle {
    fn source(&self) -> &SystemSpec {
        &self.source
    }

    fn target(&self) -> &GroupDesc {
        &self.target
    }

    fn level(&self) -> u32 {
        self.level
    }

    fn generator(&self, _i: usize, x: &Point) -> GroupElement {
        let carry = i64::from(x.residues[0] % self.l == self.l - 1);
        self.target.normalize(GroupElement(vec![1, carry]))
    }
}

/// `b(e₀, ([r], q)) = 1` for `r < l − 1` and `1 − l` for `r = l − 1`; `b(e₁, ·) = l`.
#[derive(Debug, Clone)]
pub struct MergeCocycle {
    l: u64,
    source: SystemSpec,
    target: GroupDesc,
}

impl MergeCocycle {
    pub fn new(l: u64, small: Supernatural) -> Result<Self, WitnessError> {
        let source = SystemSpec::new(vec![Factor::cyclic(l)?, Factor::odometer(small)?])?;
        Ok(Self { l, source, target: GroupDesc::free(1) })
    }
}

impl Cocycle for MergeCocycle {
    fn source(&self) -> &SystemSpec {
        &self.source
    }

    fn target(&self) -> &GroupDesc {
        &self.target
    }

    fn level(&self) -> u32 {
        0
    }

    fn generator(&self, i: usize, y: &Point) -> GroupElement {
        let l = self.l as i64;
        let v = match i {
            0 if y.residues[0] + 1 < self.l => 1,
            0 => 1 - l,
            _ => l,
        };
        GroupElement(vec![v])
    }
}

/// Unverified `α_{lL} → λ_l ⊠ α_L`.
fn basic_coe_raw(l: u64, small: &Supernatural) -> Result<CoeWitness, WitnessError> {
    if l == 0 {
        return Err(WitnessError::Invalid("l must be at least 1".into()));
    }
    if !small.is_supernatural() {
        return Err(WitnessError::Invalid(format!("{small} is not supernatural")));
    }
    if l == 1 {
        return Ok(CoeWitness::identity(&odo(small.clone())?));
    }
    let w = CoeWitness::new(
        Arc::new(SplitMap::new(l, small.clone())?),
        Arc::new(SplitCocycle::new(l, small.clone())?),
        Arc::new(MergeMap::new(l, small.clone())?),
        Arc::new(MergeCocycle::new(l, small.clone())?),
    )?;
    Ok(w.with_note(format!("split odo:{} into cyc:{l} x odo:{small} (second coordinate of Z/{l} x {l}Z divided by {l})", Supernatural::from_u64(l).mul(small))))
}

/// Orbit equivalence `α_{lL} → λ_l ⊠ α_L`; the identity on `α_L` when `l = 1`.
pub fn build_basic_coe(l: u64, small: &Supernatural) -> Result<CoeWitness, WitnessError> {
    let w = basic_coe_raw(l, small)?;
    self_check(|cfg| verify_coe(&w, cfg))?;
    Ok(w)
}

pub fn build_basic_coe_with(
    l: u64,
    small: &Supernatural,
    cfg: VerifyConfig,
) -> Result<(CoeWitness, VerificationReport), WitnessError> {
    let w = basic_coe_raw(l, small)?;
    let report = ensure(verify_coe(&w, cfg)?)?;
    Ok((w, report))
}

/// Bijection between two cyclic products through their mixed-radix enumerations.
#[derive(Debug, Clone)]
pub struct MixedRadixMap {
    source: SystemSpec,
    target: SystemSpec,
    from: Grid,
    to: Grid,
}

impl MixedRadixMap {
    pub fn new(from: &[u64], to: &[u64]) -> Result<Self, WitnessError> {
        let source = SystemSpec::cyclics(from)?;
        let target = SystemSpec::cyclics(to)?;
        let (gf, gt) = (Grid::new(from.to_vec())?, Grid::new(to.to_vec())?);
        if gf.size() != gt.size() {
            return Err(WitnessError::Invalid(format!("orders {} and {} differ", gf.size(), gt.size())));
        }
        Ok(Self { source, target, from: gf, to: gt })
    }
}

impl PointMap for MixedRadixMap {
    fn source(&self) -> &SystemSpec {
        &self.source
    }

    fn target(&self) -> &SystemSpec {
        &self.target
    }

    fn source_level(&self, _level: u32) -> Option<u32> {
        Some(0)
    }

    fn eval(&self, level: u32, x: &Point) -> Point {
        Point { level, residues: self.to.residues(self.from.index(&x.residues)) }
    }
}

/// `a(e_i, x) = φ(e_i.x) − φ(x)` for a bijection `φ` onto a cyclic product.
#[derive(Debug, Clone)]
pub struct DisplacementCocycle {
    map: Arc<dyn PointMap>,
    target: GroupDesc,
}

impl DisplacementCocycle {
    pub fn new(map: Arc<dyn PointMap>) -> Result<Self, WitnessError> {
        let target = map.target().group();
        if !target.is_finite() || !map.source().group().is_finite() {
            return Err(WitnessError::Invalid("displacement cocycles need finite systems".into()));
        }
        Ok(Self { map, target })
    }
}

impl Cocycle for DisplacementCocycle {
    fn source(&self) -> &SystemSpec {
        self.map.source()
    }

    fn target(&self) -> &GroupDesc {
        &self.target
    }

    fn level(&self) -> u32 {
        0
    }

    fn generator(&self, i: usize, x: &Point) -> GroupElement {
        let spec = self.map.source();
        let x0 = spec.project_to(x, 0).expect("level");
        let gx = spec.act(&spec.group().generator(i), &x0).expect("point");
        let to_elem = |p: Point| GroupElement(p.residues.iter().map(|&r| r as i64).collect());
        self.target.sub(&to_elem(self.map.eval(0, &gx)), &to_elem(self.map.eval(0, &x0)))
    }
}

fn finite_coe_raw(ns: &[u64], target: &[u64]) -> Result<CoeWitness, WitnessError> {
    if ns == target {
        return Ok(CoeWitness::identity(&SystemSpec::cyclics(ns)?));
    }
    let phi: Arc<dyn PointMap> = Arc::new(MixedRadixMap::new(ns, target)?);
    let psi: Arc<dyn PointMap> = Arc::new(MixedRadixMap::new(target, ns)?);
    let a = Arc::new(DisplacementCocycle::new(phi.clone())?);
    let b = Arc::new(DisplacementCocycle::new(psi.clone())?);
    Ok(CoeWitness::new(phi, a, psi, b)?.with_note(format!("mixed-radix bijection {ns:?} -> {target:?}")))
}

/// Orbit equivalence of `⊠ λ_{ns}` and `⊠ λ_{target}` for equal total orders.
pub fn build_finite_coe(ns: &[u64], target: &[u64]) -> Result<CoeWitness, WitnessError> {
    let w = finite_coe_raw(ns, target)?;
    let order: u64 = ns.iter().product();
    let radius = u32::try_from(order).unwrap_or(u32::MAX).max(1);
    ensure(verify_coe(&w, VerifyConfig::new(0, radius))?)?;
    Ok(w)
}

/// One block of [`CrtLinearMap`]: `y = S·x` on `∏Z/m_a → ∏Z/n_b` and on `(Z/L)^r`.
#[derive(Debug, Clone)]
struct LinearBlock {
    left: Vec<usize>,
    right: Vec<usize>,
    s: Vec<Vec<i64>>,
    m: Vec<u64>,
    n: Vec<u64>,
    l: Supernatural,
}

/// The map `x ↦ S x` of a conjugacy, computed through `Z/(m L) ≅ Z/m × Z/L` per block.
#[derive(Debug, Clone)]
pub struct CrtLinearMap {
    source: SystemSpec,
    target: SystemSpec,
    ms: Vec<Supernatural>,
    blocks: Vec<LinearBlock>,
}

fn crt(r1: u64, m1: u64, r2: u64, m2: u64) -> u64 {
    let (m1i, m2i) = (i128::from(m1), i128::from(m2));
    let e = m1i.extended_gcd(&m2i);
    debug_assert_eq!(e.gcd, 1);
    let inv = e.x.rem_euclid(m2i);
    let diff = (i128::from(r2) - i128::from(r1)).rem_euclid(m2i);
    let k = (diff * inv).rem_euclid(m2i);
    (i128::from(r1) + m1i * k) as u64
}

impl CrtLinearMap {
    fn new(ms: &[Supernatural], ns: &[Supernatural], blocks: Vec<LinearBlock>) -> Result<Self, WitnessError> {
        Ok(Self { source: SystemSpec::odometers(ms)?, target: SystemSpec::odometers(ns)?, ms: ms.to_vec(), blocks })
    }
}

impl PointMap for CrtLinearMap {
    fn source(&self) -> &SystemSpec {
        &self.source
    }

    fn target(&self) -> &SystemSpec {
        &self.target
    }

    fn source_level(&self, level: u32) -> Option<u32> {
        let mut s = 0;
        for b in &self.blocks {
            let ll = supernatural_level_modulus(&b.l, level).ok()?;
            for (&i, &m) in b.left.iter().zip(&b.m) {
                s = s.max(min_level_for(&self.ms[i], m.checked_mul(ll)?).ok()?);
            }
        }
        Some(s)
    }

    fn eval(&self, level: u32, x: &Point) -> Point {
        let mut out = vec![0; self.target.dim()];
        for b in &self.blocks {
            let ll = supernatural_level_modulus(&b.l, level).expect("level modulus");
            let t: Vec<i128> = b.left.iter().zip(&b.m).map(|(&i, &m)| i128::from(x.residues[i] % m)).collect();
            let u: Vec<i128> = b.left.iter().map(|&i| i128::from(x.residues[i] % ll)).collect();
            for (row, (&j, &n)) in b.s.iter().zip(b.right.iter().zip(&b.n)) {
                let nt = supernatural_level_modulus(&Supernatural::from_u64(n), level).expect("level modulus");
                let tv = row.iter().zip(&t).map(|(&c, &v)| i128::from(c) * v).sum::<i128>().rem_euclid(i128::from(n));
                let uv = row.iter().zip(&u).map(|(&c, &v)| i128::from(c) * v).sum::<i128>().rem_euclid(i128::from(ll));
                out[j] = crt(tv as u64 % nt, nt, uv as u64, ll);
            }
        }
        Point { level, residues: out }
    }
}

/// Conjugacy of `⊠ α_{M_i}` and `⊠ α_{N_j}` from a positive decision.
pub fn build_conj_witness(d: &ConjDecision) -> Result<ConjWitness, WitnessError> {
    let w = conj_witness_raw(d)?;
    self_check(|cfg| verify_conj(&w, cfg))?;
    Ok(w)
}

/// Like [`build_conj_witness_with`], lowering the level until the tables fit `cfg.guard`.
pub fn build_conj_witness_fitted(
    d: &ConjDecision,
    cfg: VerifyConfig,
) -> Result<(ConjWitness, VerificationReport), WitnessError> {
    let w = conj_witness_raw(d)?;
    let report = verify_fitted(cfg, |c| verify_conj(&w, c))?;
    Ok((w, report))
}

pub fn build_conj_witness_with(
    d: &ConjDecision,
    cfg: VerifyConfig,
) -> Result<(ConjWitness, VerificationReport), WitnessError> {
    let w = conj_witness_raw(d)?;
    let report = ensure(verify_conj(&w, cfg)?)?;
    Ok((w, report))
}

fn conj_witness_raw(d: &ConjDecision) -> Result<ConjWitness, WitnessError> {
    if !d.conjugate {
        let why = d.failure.as_ref().map_or_else(|| "not conjugate".to_string(), ToString::to_string);
        return Err(WitnessError::NegativeDecision(why));
    }
    d.verify()?;
    let r = d.ms.len();
    let mut rho = vec![vec![0i64; r]; r];
    let mut forward = Vec::new();
    let mut backward = Vec::new();
    for b in &d.blocks {
        let (s, _) = b.conjugator.as_ref().expect("positive blocks carry conjugators");
        let s_rows = s.to_i64_rows().map_err(CocycleError::from)?;
        let s_inv = crate::intmat::invert_unimodular(s).map_err(CocycleError::from)?;
        let s_inv_rows = s_inv.to_i64_rows().map_err(CocycleError::from)?;
        for (bi, &j) in b.right.iter().enumerate() {
            for (ai, &i) in b.left.iter().enumerate() {
                rho[j][i] = s_rows[bi][ai];
            }
        }
        forward.push(LinearBlock {
            left: b.left.clone(),
            right: b.right.clone(),
            s: s_rows,
            m: b.m.clone(),
            n: b.n.clone(),
            l: b.l.clone(),
        });
        backward.push(LinearBlock {
            left: b.right.clone(),
            right: b.left.clone(),
            s: s_inv_rows,
            m: b.n.clone(),
            n: b.m.clone(),
            l: b.l.clone(),
        });
    }
    let phi = Arc::new(CrtLinearMap::new(&d.ms, &d.ns, forward)?);
    let psi = Arc::new(CrtLinearMap::new(&d.ns, &d.ms, backward)?);
    let rho = GroupHom::new(GroupDesc::free(r), GroupDesc::free(r), rho)?;
    Ok(ConjWitness::new(rho, phi, psi)?)
}

/// A coordinate of an intermediate system in the orbit equivalence chain.
#[derive(Debug, Clone, PartialEq, Eq)]
enum Slot {
    Cyc(u64),
    Odo(usize, Supernatural),
}

impl Slot {
    fn factor(&self) -> Factor {
        match self {
            Slot::Cyc(n) => Factor::Cyclic(*n),
            Slot::Odo(_, m) => Factor::Odometer(m.clone()),
        }
    }
}

/// A chain of witnesses starting at a fixed system, tracking coordinate labels.
struct Chain {
    slots: Vec<Slot>,
    witness: Option<CoeWitness>,
}

impl Chain {
    fn new(slots: Vec<Slot>) -> Self {
        Self { slots, witness: None }
    }

    fn spec(&self) -> Result<SystemSpec, WitnessError> {
        Ok(SystemSpec::new(self.slots.iter().map(Slot::factor).collect())?)
    }

    fn push(&mut self, w: CoeWitness) -> Result<(), WitnessError> {
        self.witness = Some(match self.witness.take() {
            None => w,
            Some(prev) => compose_coe(&prev, &w)?,
        });
        Ok(())
    }

    /// `new[j] = old[perm[j]]`.
    fn permute(&mut self, perm: &[usize]) -> Result<(), WitnessError> {
        if perm.iter().enumerate().all(|(j, &i)| i == j) {
            return Ok(());
        }
        let w = CoeWitness::permutation(&self.spec()?, perm)?;
        self.slots = perm.iter().map(|&i| self.slots[i].clone()).collect();
        self.push(w)
    }

    /// Applies `w` to the slots at `positions` (moved to the front) and
    /// leaves the rest in place behind them.
    fn apply(&mut self, positions: &[usize], w: CoeWitness, produced: Vec<Slot>) -> Result<(), WitnessError> {
        let rest: Vec<usize> = (0..self.slots.len()).filter(|i| !positions.contains(i)).collect();
        let perm: Vec<usize> = positions.iter().chain(&rest).copied().collect();
        self.permute(&perm)?;
        let rest_slots: Vec<Slot> = self.slots[positions.len()..].to_vec();
        let w = if rest_slots.is_empty() {
            w
        } else {
            let rest_spec = SystemSpec::new(rest_slots.iter().map(Slot::factor).collect())?;
            CoeWitness::product(&[w, CoeWitness::identity(&rest_spec)])?
        };
        self.slots = produced.into_iter().chain(rest_slots).collect();
        self.push(w)
    }
}

/// Carries `⊠ α_{n_i L_i}` to the canonical `α_{c L_1} ⊠ α_{L_2} ⊠ …`,
/// where `c` collects the primes of `∏ n_i` at which `L = ∏ L_i` is finite.
fn canonical_chain(ls: &[Supernatural], cofactors: &[u64]) -> Result<Chain, WitnessError> {
    let big: Vec<Slot> = ls
        .iter()
        .zip(cofactors)
        .enumerate()
        .map(|(i, (l, &n))| Slot::Odo(i, Supernatural::from_u64(n).mul(l)))
        .collect();
    let mut chain = Chain::new(big);

    // Split each factor with a nontrivial cofactor.
    for (i, (l, &n)) in ls.iter().zip(cofactors).enumerate() {
        if n > 1 {
            let pos = chain.slots.iter().position(|s| matches!(s, Slot::Odo(j, _) if *j == i)).expect("slot");
            let w = basic_coe_raw(n, l)?;
            chain.apply(&[pos], w, vec![Slot::Cyc(n), Slot::Odo(i, l.clone())])?;
        }
    }

    let total_l = ls.iter().fold(Supernatural::one(), |acc, l| acc.mul(l));
    let n_total: u64 = cofactors.iter().product();
    let mut c = 1u64;
    let mut absorbed = Vec::new();
    for (p, e) in factorize(n_total) {
        let pe = p.pow(e as u32);
        if total_l.valuation(p).is_infinite() {
            absorbed.push((p, pe));
        } else {
            c *= pe;
        }
    }
    let mut merged: Vec<u64> = Vec::new();
    if c > 1 {
        merged.push(c);
    }
    merged.extend(absorbed.iter().map(|&(_, pe)| pe));

    // Merge the cyclic coordinates into λ_c ⊠ λ_{p^e} ⊠ ….
    let cyc_pos: Vec<usize> = (0..chain.slots.len()).filter(|&i| matches!(chain.slots[i], Slot::Cyc(_))).collect();
    if !cyc_pos.is_empty() {
        let current: Vec<u64> =
            cyc_pos.iter().map(|&i| if let Slot::Cyc(n) = chain.slots[i] { n } else { unreachable!() }).collect();
        let w = finite_coe_raw(&current, &merged)?;
        chain.apply(&cyc_pos, w, merged.iter().map(|&n| Slot::Cyc(n)).collect())?;
    }

    // Absorb each p^e into the first factor with v_p(L_i) = ∞.
    for &(p, pe) in &absorbed {
        let target = ls.iter().position(|l| l.valuation(p).is_infinite()).expect("p is infinite in L");
        let cpos = chain.slots.iter().position(|s| *s == Slot::Cyc(pe)).expect("cyclic slot");
        let opos = chain.slots.iter().position(|s| matches!(s, Slot::Odo(j, _) if *j == target)).expect("slot");
        let Slot::Odo(_, cur) = chain.slots[opos].clone() else { unreachable!() };
        let w = basic_coe_raw(pe, &cur)?.inverse();
        chain.apply(&[cpos, opos], w, vec![Slot::Odo(target, cur)])?;
    }

    // Absorb c into the first factor.
    if c > 1 {
        let cpos = chain.slots.iter().position(|s| *s == Slot::Cyc(c)).expect("cyclic slot");
        let opos = chain.slots.iter().position(|s| matches!(s, Slot::Odo(0, _))).expect("slot");
        let Slot::Odo(_, cur) = chain.slots[opos].clone() else { unreachable!() };
        let w = basic_coe_raw(c, &cur)?.inverse();
        chain.apply(&[cpos, opos], w, vec![Slot::Odo(0, Supernatural::from_u64(c).mul(&cur))])?;
    }

    // Canonical coordinate order.
    let mut perm: Vec<usize> = (0..chain.slots.len()).collect();
    perm.sort_by_key(|&i| match &chain.slots[i] {
        Slot::Odo(j, _) => *j,
        Slot::Cyc(_) => unreachable!("all cyclic coordinates absorbed"),
    });
    chain.permute(&perm)?;
    Ok(chain)
}

fn finite_u64(x: &Supernatural) -> Result<u64, WitnessError> {
    x.to_u64().ok_or_else(|| WitnessError::Invalid(format!("{x} does not fit in 64 bits")))
}

fn coe_witness_raw(d: &CoeDecision) -> Result<CoeWitness, WitnessError> {
    let (Some(sigma), Some(pairs)) = (d.sigma(), d.pairs()) else {
        return Err(WitnessError::NegativeDecision("not orbit equivalent".into()));
    };
    d.verify()?;
    let x = SystemSpec::odometers(&d.ms)?;
    let y = SystemSpec::odometers(&d.ns)?;
    let mut ls = Vec::new();
    let mut left = Vec::new();
    let mut right = Vec::new();
    for (i, pair) in pairs.iter().enumerate() {
        let (m, n) = (finite_u64(&pair.m)?, finite_u64(&pair.n)?);
        let g = m.gcd(&n);
        let (m, n) = (m / g, n / g);
        // L_i = M_i / n_i = N_σ(i) / m_i.
        let nf = Supernatural::from_u64(n);
        let l = d.ms[i].div_exact(&nf).map_err(|e| WitnessError::Invalid(e.to_string()))?;
        if Supernatural::from_u64(m).mul(&l) != d.ns[sigma[i]] {
            return Err(WitnessError::Invalid(format!("pair {i} does not factor through a common part")));
        }
        ls.push(l);
        left.push(n);
        right.push(m);
    }
    let wm = canonical_chain(&ls, &left)?;
    let wn = canonical_chain(&ls, &right)?;
    if wm.slots != wn.slots {
        return Err(WitnessError::Invalid("canonical systems differ".into()));
    }
    let mut steps: Vec<CoeWitness> = Vec::new();
    steps.extend(wm.witness);
    steps.extend(wn.witness.map(|w| w.inverse()));
    if sigma.iter().enumerate().any(|(i, &j)| i != j) {
        steps.push(CoeWitness::permutation(&y, sigma)?.inverse());
    }
    let mut out: Option<CoeWitness> = None;
    for w in steps {
        out = Some(match out {
            None => w,
            Some(prev) => compose_coe(&prev, &w)?,
        });
    }
    let w = out.unwrap_or_else(|| CoeWitness::identity(&x));
    if w.source() != &x || w.target() != &y {
        return Err(WitnessError::Invalid(format!("chain ends at {} -> {}", w.source(), w.target())));
    }
    Ok(w)
}

/// Orbit equivalence `⊠ α_{M_i} → ⊠ α_{N_j}` from a positive decision.
///
/// Each side is carried to the canonical `α_{c L_1} ⊠ α_{L_2} ⊠ … ⊠ α_{L_r}`
/// by splitting off finite cofactors, merging the cyclic parts and absorbing
/// them back; the two chains are glued through the canonical system.
pub fn build_coe_witness(d: &CoeDecision) -> Result<CoeWitness, WitnessError> {
    let w = coe_witness_raw(d)?;
    self_check(|cfg| verify_coe(&w, cfg))?;
    Ok(w)
}

/// Like [`build_coe_witness_with`], lowering the level until the tables fit `cfg.guard`.
pub fn build_coe_witness_fitted(
    d: &CoeDecision,
    cfg: VerifyConfig,
) -> Result<(CoeWitness, VerificationReport), WitnessError> {
    let w = coe_witness_raw(d)?;
    let report = verify_fitted(cfg, |c| verify_coe(&w, c))?;
    Ok((w, report))
}

pub fn build_coe_witness_with(
    d: &CoeDecision,
    cfg: VerifyConfig,
) -> Result<(CoeWitness, VerificationReport), WitnessError> {
    let w = coe_witness_raw(d)?;
    let report = ensure(verify_coe(&w, cfg)?)?;
    Ok((w, report))
}

/// `x ↦ v(x).x` with `v_i(x) = π_i(x_i mod m) − (x_i mod m)` on odometer coordinates.
///
/// Returns the transfer `v` together with the one for `π⁻¹`.
pub fn residue_permutation_transfer(
    spec: &SystemSpec,
    level: u32,
    perms: &[Vec<u64>],
) -> Result<(Transfer, Transfer), WitnessError> {
    let moduli = spec.moduli(level)?;
    for (i, f) in spec.factors().iter().enumerate() {
        let p = &perms[i];
        let ok = match f {
            Factor::Cyclic(_) => p.is_empty(),
            Factor::Odometer(_) => {
                let mut sorted = p.clone();
                sorted.sort_unstable();
                !p.is_empty() && moduli[i] % p.len() as u64 == 0 && sorted.iter().copied().eq(0..p.len() as u64)
            }
        };
        if !ok {
            return Err(WitnessError::Invalid(format!("coordinate {i}: {p:?} is not a residue permutation")));
        }
    }
    let inverse: Vec<Vec<u64>> = perms
        .iter()
        .map(|p| {
            let mut inv = vec![0; p.len()];
            for (r, &s) in p.iter().enumerate() {
                inv[s as usize] = r as u64;
            }
            inv
        })
        .collect();
    let make = |perms: Vec<Vec<u64>>| {
        Transfer::from_fn(spec.clone(), spec.group(), level, move |x| {
            GroupElement(
                x.residues
                    .iter()
                    .zip(&perms)
                    .map(|(&r, p)| {
                        if p.is_empty() {
                            0
                        } else {
                            let m = p.len() as u64;
                            p[(r % m) as usize] as i64 - (r % m) as i64
                        }
                    })
                    .collect(),
            )
        })
    };
    Ok((make(perms.to_vec()), make(inverse)))
}

/// The orbit equivalence `(φ∘τ, a, τ⁻¹∘ψ, b)` of a conjugacy `(ρ, φ, ψ)`
/// precomposed with `τ(x) = v(x).x`, together with its transfer `ρ∘v`.
pub fn twisted_coe(
    conj: &ConjWitness,
    v: &Transfer,
    v_inv: &Transfer,
) -> Result<(CoeWitness, Transfer), WitnessError> {
    let x = conj.source().clone();
    let id: Arc<dyn PointMap> = Arc::new(IdentityMap::new(x.clone()));
    let tau: Arc<dyn PointMap> = Arc::new(ShiftedMap::new(id.clone(), v.clone())?);
    let tau_inv: Arc<dyn PointMap> = Arc::new(ShiftedMap::new(id, v_inv.clone())?);
    let phi = Arc::new(crate::cocycle::ComposeMap::new(tau, conj.phi.clone())?);
    let psi = Arc::new(crate::cocycle::ComposeMap::new(conj.psi.clone(), tau_inv)?);
    let u = v.then_hom(&conj.rho)?;
    let rho_inv = conj.rho.inverse()?;
    let a = Arc::new(TwistedCocycle::new(Arc::new(HomCocycle::new(x, conj.rho.clone())), u.clone())?);
    let w = v_inv.pull_back(conj.psi.clone())?;
    let b = Arc::new(TwistedCocycle::new(Arc::new(HomCocycle::new(conj.target().clone(), rho_inv)), w)?);
    let coe = CoeWitness::new(phi, a, psi, b)?.with_note("conjugacy twisted by a residue permutation");
    Ok((coe, u))
}
