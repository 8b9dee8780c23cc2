//! Locally constant maps and cocycles between truncated systems.
//!
//! Maps are evaluable objects with a declared modulus: to produce an image at
//! target level `k` a [`PointMap`] needs its argument at
//! [`PointMap::source_level`]`(k)`. A [`Cocycle`] is stored by its values on
//! the generators `e_i` of the acting group, locally constant at
//! [`Cocycle::level`], and extended to arbitrary group elements through the
//! cocycle identity `a(g₁g₂, x) = a(g₁, g₂.x) a(g₂, x)` along a fixed path
//! (coordinates in order, unit steps). Target groups are finitely generated
//! abelian, written additively.

mod maps;
mod verify;

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

pub use maps::{
    ComposeCocycle, ComposeMap, DifferenceCocycle, HomCocycle, IdentityMap, LevelTable, PermutationMap, ProductCocycle,
    ProductMap, ShiftedMap, TableCocycle, TableMap, TwistedCocycle,
};
pub use verify::{
    audit_locality, materialize_cocycle, materialize_map, minimal_level, tighten_cocycle, verify_cocycle_identity,
    verify_coe, verify_coe_tables, verify_conj, verify_conj_tables, CheckOutcome, MaterializedCoe, MaterializedConj,
    VerificationReport, VerifyConfig,
};

use crate::dynamics::{add_mod, DynamicsError, GroupDesc, GroupElement, Point, SystemSpec};
use crate::intmat::{invert_unimodular, IntMatrix, MatrixError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CocycleError {
    #[error("point at level {have}, level {need} required")]
    InsufficientLevel { have: u32, need: u32 },
    #[error("map cannot produce level {0}")]
    LevelUnavailable(u32),
    #[error("incompatible systems: {0}")]
    Incompatible(String),
    #[error("premise fails: {0}")]
    Premise(String),
    #[error("group homomorphism: {0}")]
    Hom(String),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
}

/// A locally constant map between two systems.
pub trait PointMap: Send + Sync + fmt::Debug {
    fn source(&self) -> &SystemSpec;
    fn target(&self) -> &SystemSpec;
    /// Level of the argument needed for an image at `level`, or `None` when
    /// the map cannot produce that level.
    fn source_level(&self, level: u32) -> Option<u32>;
    /// Image at `level` of `x`, where `x.level >= source_level(level)`.
    fn eval(&self, level: u32, x: &Point) -> Point;
}

/// A cocycle `G × X → H`, given by its generator values.
pub trait Cocycle: Send + Sync + fmt::Debug {
    fn source(&self) -> &SystemSpec;
    fn target(&self) -> &GroupDesc;
    /// Level at which every generator value is constant on cylinders.
    fn level(&self) -> u32;
    /// `a(e_i, x)` for `x.level >= level()`.
    fn generator(&self, i: usize, x: &Point) -> GroupElement;
}

/// `a(g, x)` by telescoping over the generator decomposition of `g`.
pub fn extend_cocycle(a: &dyn Cocycle, g: &GroupElement, x: &Point) -> Result<GroupElement, CocycleError> {
    let spec = a.source();
    if g.0.len() != spec.dim() || x.residues.len() != spec.dim() {
        return Err(DynamicsError::Shape { expected: spec.dim(), got: g.0.len() }.into());
    }
    if x.level < a.level() {
        return Err(CocycleError::InsufficientLevel { have: x.level, need: a.level() });
    }
    Ok(extend_unchecked(a, g, x))
}

pub(crate) fn extend_unchecked(a: &dyn Cocycle, g: &GroupElement, x: &Point) -> GroupElement {
    let spec = a.source();
    let lvl = a.level();
    let group = spec.group();
    let g = group.normalize(g.clone());
    let moduli = spec.moduli(lvl).expect("level moduli fit");
    let mut cur = spec.project_to(x, lvl).expect("level checked");
    let target = a.target();
    let mut acc = vec![0i64; target.rank()];
    for (i, &c) in g.0.iter().enumerate() {
        if c >= 0 {
            for _ in 0..c {
                let v = a.generator(i, &cur);
                acc.iter_mut().zip(&v.0).for_each(|(s, d)| *s += d);
                cur.residues[i] = add_mod(cur.residues[i], 1, moduli[i]);
            }
        } else {
            for _ in 0..(-c) {
                cur.residues[i] = add_mod(cur.residues[i], -1, moduli[i]);
                let v = a.generator(i, &cur);
                acc.iter_mut().zip(&v.0).for_each(|(s, d)| *s -= d);
            }
        }
    }
    target.normalize(GroupElement(acc))
}

/// Action of a group element on a point at any level.
pub(crate) fn act_point(spec: &SystemSpec, h: &GroupElement, y: &Point) -> Point {
    let moduli = spec.moduli(y.level).expect("level moduli fit");
    let residues = y
        .residues
        .iter()
        .zip(&h.0)
        .zip(&moduli)
        .map(|((&r, &c), &m)| add_mod(r, c, m))
        .collect();
    Point { level: y.level, residues }
}

/// Homomorphism between acting groups, `ρ(g) = A g` reduced in the target.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupHom {
    source: GroupDesc,
    target: GroupDesc,
    /// `target.rank()` rows, `source.rank()` columns.
    matrix: Vec<Vec<i64>>,
}

impl GroupHom {
    pub fn new(source: GroupDesc, target: GroupDesc, matrix: Vec<Vec<i64>>) -> Result<Self, CocycleError> {
        if matrix.len() != target.rank() || matrix.iter().any(|r| r.len() != source.rank()) {
            return Err(CocycleError::Hom(format!(
                "matrix shape does not match {} -> {} coordinates",
                source.rank(),
                target.rank()
            )));
        }
        let hom = Self { source, target, matrix };
        if !hom.is_well_defined() {
            return Err(CocycleError::Hom("torsion of the source is not killed".into()));
        }
        Ok(hom)
    }

    pub fn identity(group: &GroupDesc) -> Self {
        let n = group.rank();
        let matrix = (0..n).map(|i| (0..n).map(|j| i64::from(i == j)).collect()).collect();
        Self { source: group.clone(), target: group.clone(), matrix }
    }

    /// `ρ(e_i) = e_{j}` where `perm[j] = i`.
    pub fn permutation(source: &GroupDesc, perm: &[usize]) -> Self {
        let n = perm.len();
        let mut matrix = vec![vec![0; n]; n];
        for (j, &i) in perm.iter().enumerate() {
            matrix[j][i] = 1;
        }
        let target = GroupDesc::new(perm.iter().map(|&i| source.moduli()[i]).collect());
        Self { source: source.clone(), target, matrix }
    }

    pub fn from_int_matrix(source: GroupDesc, target: GroupDesc, m: &IntMatrix) -> Result<Self, CocycleError> {
        Self::new(source, target, m.to_i64_rows()?)
    }

    pub fn source(&self) -> &GroupDesc {
        &self.source
    }

    pub fn target(&self) -> &GroupDesc {
        &self.target
    }

    pub fn matrix(&self) -> &[Vec<i64>] {
        &self.matrix
    }

    pub fn apply(&self, g: &GroupElement) -> GroupElement {
        let v = self
            .matrix
            .iter()
            .map(|row| row.iter().zip(&g.0).map(|(a, b)| a * b).sum())
            .collect();
        self.target.normalize(GroupElement(v))
    }

    pub fn column(&self, i: usize) -> GroupElement {
        self.target.normalize(GroupElement(self.matrix.iter().map(|r| r[i]).collect()))
    }

    fn is_well_defined(&self) -> bool {
        self.source.moduli().iter().enumerate().all(|(i, &n)| {
            n == 0 || self.matrix.iter().zip(self.target.moduli()).all(|(row, &t)| {
                let v = row[i] * n as i64;
                if t == 0 {
                    v == 0
                } else {
                    v.rem_euclid(t as i64) == 0
                }
            })
        })
    }

    pub fn compose(&self, after: &GroupHom) -> Result<GroupHom, CocycleError> {
        if self.target != after.source {
            return Err(CocycleError::Hom("composition of mismatched homomorphisms".into()));
        }
        let rows = after.target.rank();
        let cols = self.source.rank();
        let inner = self.target.rank();
        let matrix = (0..rows)
            .map(|i| (0..cols).map(|j| (0..inner).map(|k| after.matrix[i][k] * self.matrix[k][j]).sum()).collect())
            .collect();
        Ok(GroupHom { source: self.source.clone(), target: after.target.clone(), matrix })
    }

    /// Inverse isomorphism. Supported for free groups (unimodular matrix) and
    /// finite groups (by enumeration).
    pub fn inverse(&self) -> Result<GroupHom, CocycleError> {
        if self.source.is_free() && self.target.is_free() {
            if self.source.rank() != self.target.rank() {
                return Err(CocycleError::Hom("free groups of different rank".into()));
            }
            let m = IntMatrix::from_rows(&self.matrix)?;
            let inv = invert_unimodular(&m)?;
            return GroupHom::from_int_matrix(self.target.clone(), self.source.clone(), &inv);
        }
        if self.source.is_finite() && self.target.is_finite() {
            return self.finite_inverse();
        }
        Err(CocycleError::Hom("inverse of a homomorphism between mixed groups".into()))
    }

    fn finite_inverse(&self) -> Result<GroupHom, CocycleError> {
        let src = enumerate_finite(&self.source);
        let tgt_order: u64 = self.target.moduli().iter().product();
        if src.len() as u64 != tgt_order {
            return Err(CocycleError::Hom("finite groups of different order".into()));
        }
        let mut seen = std::collections::HashMap::new();
        for g in &src {
            if seen.insert(self.apply(g), g.clone()).is_some() {
                return Err(CocycleError::Hom("not injective".into()));
            }
        }
        let cols: Vec<GroupElement> = (0..self.target.rank()).map(|j| seen[&self.target.generator(j)].clone()).collect();
        let matrix = (0..self.source.rank()).map(|i| cols.iter().map(|c| c.0[i]).collect()).collect();
        GroupHom::new(self.target.clone(), self.source.clone(), matrix)
    }
}

pub(crate) fn enumerate_finite(group: &GroupDesc) -> Vec<GroupElement> {
    let mut out = vec![Vec::new()];
    for &n in group.moduli() {
        let mut next = Vec::new();
        for prefix in &out {
            for c in 0..n as i64 {
                let mut v: Vec<i64> = prefix.clone();
                v.push(c);
                next.push(v);
            }
        }
        out = next;
    }
    out.into_iter().map(GroupElement).collect()
}

impl fmt::Display for GroupHom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<String> = self
            .matrix
            .iter()
            .map(|r| format!("[{}]", r.iter().map(i64::to_string).collect::<Vec<_>>().join(", ")))
            .collect();
        write!(f, "[{}]", rows.join(", "))
    }
}

type TransferFn = dyn Fn(&Point) -> GroupElement + Send + Sync;

/// A locally constant map `u: X → H`, used to twist cocycles.
#[derive(Clone)]
pub struct Transfer {
    source: SystemSpec,
    target: GroupDesc,
    level: u32,
    f: Arc<TransferFn>,
}

impl fmt::Debug for Transfer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Transfer")
            .field("source", &self.source.to_string())
            .field("target", &self.target)
            .field("level", &self.level)
            .finish()
    }
}

impl Transfer {
    /// `f` receives points at exactly `level`.
    pub fn from_fn<F>(source: SystemSpec, target: GroupDesc, level: u32, f: F) -> Self
    where
        F: Fn(&Point) -> GroupElement + Send + Sync + 'static,
    {
        Self { source, target, level, f: Arc::new(f) }
    }

    pub fn constant(source: SystemSpec, target: GroupDesc, h: GroupElement) -> Self {
        let h = target.normalize(h);
        Self::from_fn(source, target, 0, move |_| h.clone())
    }

    pub fn identity(source: SystemSpec, target: GroupDesc) -> Self {
        let zero = target.identity();
        Self::constant(source, target, zero)
    }

    pub fn source(&self) -> &SystemSpec {
        &self.source
    }

    pub fn target(&self) -> &GroupDesc {
        &self.target
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    /// `u(x)` for `x.level >= level()`.
    pub fn eval(&self, x: &Point) -> GroupElement {
        let p = self.source.project_to(x, self.level).expect("transfer level");
        self.target.normalize((self.f)(&p))
    }

    /// Pointwise inverse `x ↦ u(x)⁻¹`.
    pub fn inverse(&self) -> Transfer {
        let me = self.clone();
        let target = self.target.clone();
        Transfer::from_fn(self.source.clone(), self.target.clone(), self.level, move |x| target.neg(&me.eval(x)))
    }

    /// Pointwise product `x ↦ u(x)·u'(x)`.
    pub fn product(&self, other: &Transfer) -> Result<Transfer, CocycleError> {
        if self.source != other.source || self.target != other.target {
            return Err(CocycleError::Incompatible("transfers over different systems".into()));
        }
        let (a, b) = (self.clone(), other.clone());
        let target = self.target.clone();
        Ok(Transfer::from_fn(
            self.source.clone(),
            self.target.clone(),
            self.level.max(other.level),
            move |x| target.add(&a.eval(x), &b.eval(x)),
        ))
    }

    /// `x ↦ ρ(u(x))`.
    pub fn then_hom(&self, rho: &GroupHom) -> Result<Transfer, CocycleError> {
        if rho.source() != &self.target {
            return Err(CocycleError::Incompatible("homomorphism source differs from transfer target".into()));
        }
        let (me, rho2) = (self.clone(), rho.clone());
        Ok(Transfer::from_fn(self.source.clone(), rho.target().clone(), self.level, move |x| rho2.apply(&me.eval(x))))
    }

    /// `y ↦ u(m(y))` for a map `m: Y → X`.
    pub fn pull_back(&self, map: Arc<dyn PointMap>) -> Result<Transfer, CocycleError> {
        if map.target() != &self.source {
            return Err(CocycleError::Incompatible("map target differs from transfer source".into()));
        }
        let level = map.source_level(self.level).ok_or(CocycleError::LevelUnavailable(self.level))?;
        let me = self.clone();
        let inner_level = self.level;
        Ok(Transfer::from_fn(map.source().clone(), self.target.clone(), level, move |y| {
            me.eval(&map.eval(inner_level, y))
        }))
    }
}

/// Continuous orbit equivalence data `(φ, a, ψ, b)` from `X` to `Y`.
#[derive(Clone, Debug)]
pub struct CoeWitness {
    pub phi: Arc<dyn PointMap>,
    pub a: Arc<dyn Cocycle>,
    pub psi: Arc<dyn PointMap>,
    pub b: Arc<dyn Cocycle>,
    /// Construction steps, outermost last.
    pub notes: Vec<String>,
}

impl CoeWitness {
    pub fn new(
        phi: Arc<dyn PointMap>,
        a: Arc<dyn Cocycle>,
        psi: Arc<dyn PointMap>,
        b: Arc<dyn Cocycle>,
    ) -> Result<Self, CocycleError> {
        let (x, y) = (phi.source(), phi.target());
        if psi.source() != y || psi.target() != x {
            return Err(CocycleError::Incompatible("psi is not a map Y -> X".into()));
        }
        if a.source() != x || a.target() != &y.group() {
            return Err(CocycleError::Incompatible("a is not a cocycle G x X -> H".into()));
        }
        if b.source() != y || b.target() != &x.group() {
            return Err(CocycleError::Incompatible("b is not a cocycle H x Y -> G".into()));
        }
        Ok(Self { phi, a, psi, b, notes: Vec::new() })
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }

    pub fn source(&self) -> &SystemSpec {
        self.phi.source()
    }

    pub fn target(&self) -> &SystemSpec {
        self.phi.target()
    }

    pub fn identity(spec: &SystemSpec) -> Self {
        let id: Arc<dyn PointMap> = Arc::new(IdentityMap::new(spec.clone()));
        let hom: Arc<dyn Cocycle> = Arc::new(HomCocycle::new(spec.clone(), GroupHom::identity(&spec.group())));
        Self { phi: id.clone(), a: hom.clone(), psi: id, b: hom, notes: vec![format!("identity on {spec}")] }
    }

    /// Coordinate permutation `y_j = x_{perm[j]}`, a conjugacy.
    pub fn permutation(spec: &SystemSpec, perm: &[usize]) -> Result<Self, CocycleError> {
        let phi = PermutationMap::new(spec.clone(), perm.to_vec())?;
        let target = phi.target().clone();
        let mut inv = vec![0; perm.len()];
        for (j, &i) in perm.iter().enumerate() {
            inv[i] = j;
        }
        let psi = PermutationMap::new(target.clone(), inv.clone())?;
        let a = HomCocycle::new(spec.clone(), GroupHom::permutation(&spec.group(), perm));
        let b = HomCocycle::new(target.clone(), GroupHom::permutation(&target.group(), &inv));
        Ok(Self::new(Arc::new(phi), Arc::new(a), Arc::new(psi), Arc::new(b))?
            .with_note(format!("permute coordinates {perm:?}")))
    }

    /// Swaps the roles of `(φ, a)` and `(ψ, b)`.
    pub fn inverse(&self) -> Self {
        Self {
            phi: self.psi.clone(),
            a: self.b.clone(),
            psi: self.phi.clone(),
            b: self.a.clone(),
            notes: vec![format!("inverse of [{}]", self.notes.join("; "))],
        }
    }

    /// Direct product acting on concatenated coordinates.
    pub fn product(parts: &[CoeWitness]) -> Result<Self, CocycleError> {
        let phis: Vec<Arc<dyn PointMap>> = parts.iter().map(|w| w.phi.clone()).collect();
        let psis: Vec<Arc<dyn PointMap>> = parts.iter().map(|w| w.psi.clone()).collect();
        let phi = Arc::new(ProductMap::new(phis)?);
        let psi = Arc::new(ProductMap::new(psis)?);
        let a = Arc::new(ProductCocycle::new(parts.iter().map(|w| w.a.clone()).collect())?);
        let b = Arc::new(ProductCocycle::new(parts.iter().map(|w| w.b.clone()).collect())?);
        let note = format!(
            "product of {}",
            parts.iter().map(|w| format!("[{}]", w.notes.join("; "))).collect::<Vec<_>>().join(" x ")
        );
        Ok(Self::new(phi, a, psi, b)?.with_note(note))
    }
}

/// `w2 ∘ w1`: `φ = φ₂∘φ₁`, `a(g, x) = a₂(a₁(g, x), φ₁(x))`.
pub fn compose_coe(w1: &CoeWitness, w2: &CoeWitness) -> Result<CoeWitness, CocycleError> {
    if w1.target() != w2.source() {
        return Err(CocycleError::Incompatible(format!(
            "cannot chain {} -> {} with {} -> {}",
            w1.source(),
            w1.target(),
            w2.source(),
            w2.target()
        )));
    }
    let phi = Arc::new(ComposeMap::new(w1.phi.clone(), w2.phi.clone())?);
    let psi = Arc::new(ComposeMap::new(w2.psi.clone(), w1.psi.clone())?);
    let a = Arc::new(ComposeCocycle::new(w1.a.clone(), w1.phi.clone(), w2.a.clone())?);
    let b = Arc::new(ComposeCocycle::new(w2.b.clone(), w2.psi.clone(), w1.b.clone())?);
    let mut notes = w1.notes.clone();
    notes.extend(w2.notes.iter().cloned());
    Ok(CoeWitness { phi, a, psi, b, notes })
}

/// Conjugacy data: a group isomorphism `ρ` and an equivariant homeomorphism `φ` with inverse `ψ`.
#[derive(Clone, Debug)]
pub struct ConjWitness {
    pub rho: GroupHom,
    pub phi: Arc<dyn PointMap>,
    pub psi: Arc<dyn PointMap>,
}

impl ConjWitness {
    pub fn new(rho: GroupHom, phi: Arc<dyn PointMap>, psi: Arc<dyn PointMap>) -> Result<Self, CocycleError> {
        if rho.source() != &phi.source().group() || rho.target() != &phi.target().group() {
            return Err(CocycleError::Incompatible("rho does not map G to H".into()));
        }
        if psi.source() != phi.target() || psi.target() != phi.source() {
            return Err(CocycleError::Incompatible("psi is not a map Y -> X".into()));
        }
        Ok(Self { rho, phi, psi })
    }

    pub fn identity(spec: &SystemSpec) -> Self {
        let id: Arc<dyn PointMap> = Arc::new(IdentityMap::new(spec.clone()));
        Self { rho: GroupHom::identity(&spec.group()), phi: id.clone(), psi: id }
    }

    pub fn source(&self) -> &SystemSpec {
        self.phi.source()
    }

    pub fn target(&self) -> &SystemSpec {
        self.phi.target()
    }

    /// The same data as an orbit equivalence with constant cocycles `ρ`, `ρ⁻¹`.
    pub fn to_coe(&self) -> Result<CoeWitness, CocycleError> {
        let a = Arc::new(HomCocycle::new(self.source().clone(), self.rho.clone()));
        let b = Arc::new(HomCocycle::new(self.target().clone(), self.rho.inverse()?));
        Ok(CoeWitness::new(self.phi.clone(), a, self.psi.clone(), b)?.with_note(format!("conjugacy via rho = {}", self.rho)))
    }
}

/// `a(g, x) = u(g.x) · a'(g, x) · u(x)⁻¹`.
pub fn twist(a: Arc<dyn Cocycle>, u: &Transfer) -> Result<Arc<dyn Cocycle>, CocycleError> {
    Ok(Arc::new(TwistedCocycle::new(a, u.clone())?))
}

/// Builds the conjugacy `x ↦ u(x)⁻¹.φ(x)` once `a(g, x) = u(g.x) ρ(g) u(x)⁻¹`
/// has been checked exhaustively at the configured level and radius.
///
/// The inverse is `y ↦ ρ⁻¹(u(ψ(y))).ψ(y)`.
pub fn untwist_to_conjugacy(
    w: &CoeWitness,
    u: &Transfer,
    rho: &GroupHom,
    cfg: VerifyConfig,
) -> Result<ConjWitness, CocycleError> {
    let x = w.source();
    let y = w.target();
    if u.source() != x || u.target() != &y.group() {
        return Err(CocycleError::Incompatible("transfer must map X to H".into()));
    }
    if rho.source() != &x.group() || rho.target() != &y.group() {
        return Err(CocycleError::Incompatible("rho must map G to H".into()));
    }
    check_untwist_premise(w.a.as_ref(), u, rho, cfg)?;
    let rho_inv = rho.inverse()?;
    let phi: Arc<dyn PointMap> = Arc::new(ShiftedMap::new(w.phi.clone(), u.inverse())?);
    let v = u.pull_back(w.psi.clone())?.then_hom(&rho_inv)?;
    let psi: Arc<dyn PointMap> = Arc::new(ShiftedMap::new(w.psi.clone(), v)?);
    ConjWitness::new(rho.clone(), phi, psi)
}

fn check_untwist_premise(a: &dyn Cocycle, u: &Transfer, rho: &GroupHom, cfg: VerifyConfig) -> Result<(), CocycleError> {
    let spec = a.source();
    let level = cfg.level.max(a.level()).max(u.level());
    let h = a.target();
    let boxed = spec.group().box_elements(cfg.radius);
    for x in spec.enumerate_points(level)? {
        let ux = u.eval(&x);
        for g in &boxed {
            let gx = act_point(spec, g, &x);
            let expected = h.sub(&h.add(&u.eval(&gx), &rho.apply(g)), &ux);
            let actual = extend_unchecked(a, g, &x);
            if actual != expected {
                return Err(CocycleError::Premise(format!(
                    "a({g}, {x}) = {actual} but u(g.x) rho(g) u(x)^-1 = {expected}"
                )));
            }
        }
    }
    Ok(())
}
