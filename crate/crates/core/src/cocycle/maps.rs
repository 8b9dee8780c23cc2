use std::fmt;
use std::sync::Arc;

use super::{act_point, extend_unchecked, Cocycle, CocycleError, GroupHom, PointMap, Transfer};
use crate::dynamics::{DynamicsError, GroupDesc, GroupElement, Grid, Point, SystemSpec};

fn sub_point(x: &Point, start: usize, len: usize) -> Point {
    Point { level: x.level, residues: x.residues[start..start + len].to_vec() }
}

fn offsets(dims: impl Iterator<Item = usize>) -> Vec<usize> {
    let mut acc = 0;
    let mut out = Vec::new();
    for d in dims {
        out.push(acc);
        acc += d;
    }
    out
}

#[derive(Debug, Clone)]
pub struct IdentityMap {
    spec: SystemSpec,
}

impl IdentityMap {
    pub fn new(spec: SystemSpec) -> Self {
        Self { spec }
    }
}

impl PointMap for IdentityMap {
    fn source(&self) -> &SystemSpec {
        &self.spec
    }

    fn target(&self) -> &SystemSpec {
        &self.spec
    }

    fn source_level(&self, level: u32) -> Option<u32> {
        Some(level)
    }

    fn eval(&self, level: u32, x: &Point) -> Point {
        self.spec.project_to(x, level).expect("level")
    }
}

/// `y_j = x_{perm[j]}`.
#[derive(Debug, Clone)]
pub struct PermutationMap {
    source: SystemSpec,
    target: SystemSpec,
    perm: Vec<usize>,
}

impl PermutationMap {
    pub fn new(source: SystemSpec, perm: Vec<usize>) -> Result<Self, CocycleError> {
        let mut seen = vec![false; source.dim()];
        if perm.len() != source.dim() {
            return Err(DynamicsError::Shape { expected: source.dim(), got: perm.len() }.into());
        }
        for &i in &perm {
            if i >= seen.len() || std::mem::replace(&mut seen[i], true) {
                return Err(CocycleError::Incompatible(format!("{perm:?} is not a permutation")));
            }
        }
        let target = source.select(&perm);
        Ok(Self { source, target, perm })
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }
}

impl PointMap for PermutationMap {
    fn source(&self) -> &SystemSpec {
        &self.source
    }

    fn target(&self) -> &SystemSpec {
        &self.target
    }

    fn source_level(&self, level: u32) -> Option<u32> {
        Some(level)
    }

    fn eval(&self, level: u32, x: &Point) -> Point {
        let x = self.source.project_to(x, level).expect("level");
        Point { level, residues: self.perm.iter().map(|&i| x.residues[i]).collect() }
    }
}

/// Coordinate-block product of maps.
#[derive(Debug, Clone)]
pub struct ProductMap {
    parts: Vec<Arc<dyn PointMap>>,
    source: SystemSpec,
    target: SystemSpec,
    offsets: Vec<usize>,
}

impl ProductMap {
    pub fn new(parts: Vec<Arc<dyn PointMap>>) -> Result<Self, CocycleError> {
        let mut iter = parts.iter();
        let first = iter.next().ok_or(DynamicsError::Empty)?;
        let (mut source, mut target) = (first.source().clone(), first.target().clone());
        for p in iter {
            source = source.product(p.source());
            target = target.product(p.target());
        }
        let offsets = offsets(parts.iter().map(|p| p.source().dim()));
        Ok(Self { parts, source, target, offsets })
    }
}

impl PointMap for ProductMap {
    fn source(&self) -> &SystemSpec {
        &self.source
    }

    fn target(&self) -> &SystemSpec {
        &self.target
    }

    fn source_level(&self, level: u32) -> Option<u32> {
        self.parts.iter().map(|p| p.source_level(level)).try_fold(0, |acc, l| l.map(|l| acc.max(l)))
    }

    fn eval(&self, level: u32, x: &Point) -> Point {
        let mut residues = Vec::with_capacity(self.target.dim());
        for (p, &off) in self.parts.iter().zip(&self.offsets) {
            let y = p.eval(level, &sub_point(x, off, p.source().dim()));
            residues.extend(y.residues);
        }
        Point { level, residues }
    }
}

/// `second ∘ first`.
#[derive(Debug, Clone)]
pub struct ComposeMap {
    first: Arc<dyn PointMap>,
    second: Arc<dyn PointMap>,
}

impl ComposeMap {
    pub fn new(first: Arc<dyn PointMap>, second: Arc<dyn PointMap>) -> Result<Self, CocycleError> {
        if first.target() != second.source() {
            return Err(CocycleError::Incompatible(format!(
                "cannot compose {} -> {} with {} -> {}",
                first.source(),
                first.target(),
                second.source(),
                second.target()
            )));
        }
        Ok(Self { first, second })
    }
}

impl PointMap for ComposeMap {
    fn source(&self) -> &SystemSpec {
        self.first.source()
    }

    fn target(&self) -> &SystemSpec {
        self.second.target()
    }

    fn source_level(&self, level: u32) -> Option<u32> {
        self.second.source_level(level).and_then(|l| self.first.source_level(l))
    }

    fn eval(&self, level: u32, x: &Point) -> Point {
        let mid = self.second.source_level(level).expect("level");
        self.second.eval(level, &self.first.eval(mid, x))
    }
}

/// One target level of a tabulated map.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevelTable {
    pub source_level: u32,
    /// Target index for each source index at `source_level`.
    pub images: Vec<u32>,
}

/// A map given by explicit tables for target levels `0..=max_level`.
#[derive(Clone)]
pub struct TableMap {
    source: SystemSpec,
    target: SystemSpec,
    levels: Vec<LevelTable>,
    source_grids: Vec<Grid>,
    target_grids: Vec<Grid>,
}

impl fmt::Debug for TableMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TableMap")
            .field("source", &self.source.to_string())
            .field("target", &self.target.to_string())
            .field("levels", &self.levels.len())
            .finish()
    }
}

impl TableMap {
    pub fn new(source: SystemSpec, target: SystemSpec, levels: Vec<LevelTable>) -> Result<Self, CocycleError> {
        let mut source_grids = Vec::with_capacity(levels.len());
        let mut target_grids = Vec::with_capacity(levels.len());
        for (t, table) in levels.iter().enumerate() {
            let sg = source.grid(table.source_level)?;
            let tg = target.grid(t as u32)?;
            if table.images.len() != sg.size() {
                return Err(CocycleError::Incompatible(format!(
                    "level {t} table has {} entries, expected {}",
                    table.images.len(),
                    sg.size()
                )));
            }
            if let Some(&bad) = table.images.iter().find(|&&i| i as usize >= tg.size()) {
                return Err(CocycleError::Incompatible(format!("level {t} image index {bad} out of range")));
            }
            source_grids.push(sg);
            target_grids.push(tg);
        }
        Ok(Self { source, target, levels, source_grids, target_grids })
    }

    pub fn max_level(&self) -> Option<u32> {
        self.levels.len().checked_sub(1).map(|l| l as u32)
    }

    pub fn levels(&self) -> &[LevelTable] {
        &self.levels
    }

    pub fn source_grid(&self, level: u32) -> &Grid {
        &self.source_grids[level as usize]
    }

    pub fn target_grid(&self, level: u32) -> &Grid {
        &self.target_grids[level as usize]
    }

    /// Target index at `level` of the source index `idx` on `source_grid(level)`.
    #[inline]
    pub fn image(&self, level: u32, idx: usize) -> usize {
        self.levels[level as usize].images[idx] as usize
    }
}

impl PointMap for TableMap {
    fn source(&self) -> &SystemSpec {
        &self.source
    }

    fn target(&self) -> &SystemSpec {
        &self.target
    }

    fn source_level(&self, level: u32) -> Option<u32> {
        self.levels.get(level as usize).map(|t| t.source_level)
    }

    fn eval(&self, level: u32, x: &Point) -> Point {
        let sl = self.levels[level as usize].source_level;
        let x = self.source.project_to(x, sl).expect("level");
        let idx = self.source_grids[level as usize].index(&x.residues);
        let out = self.image(level, idx);
        Point { level, residues: self.target_grids[level as usize].residues(out) }
    }
}

/// `x ↦ u(x).inner(x)` for a transfer `u` into the target's acting group.
#[derive(Debug, Clone)]
pub struct ShiftedMap {
    inner: Arc<dyn PointMap>,
    shift: Transfer,
}

impl ShiftedMap {
    pub fn new(inner: Arc<dyn PointMap>, shift: Transfer) -> Result<Self, CocycleError> {
        if shift.source() != inner.source() || shift.target() != &inner.target().group() {
            return Err(CocycleError::Incompatible("shift must map the source into the target group".into()));
        }
        Ok(Self { inner, shift })
    }
}

impl PointMap for ShiftedMap {
    fn source(&self) -> &SystemSpec {
        self.inner.source()
    }

    fn target(&self) -> &SystemSpec {
        self.inner.target()
    }

    fn source_level(&self, level: u32) -> Option<u32> {
        self.inner.source_level(level).map(|l| l.max(self.shift.level()))
    }

    fn eval(&self, level: u32, x: &Point) -> Point {
        let y = self.inner.eval(level, x);
        act_point(self.inner.target(), &self.shift.eval(x), &y)
    }
}

/// The constant cocycle `a(g, x) = ρ(g)`.
#[derive(Debug, Clone)]
pub struct HomCocycle {
    source: SystemSpec,
    hom: GroupHom,
}

impl HomCocycle {
    pub fn new(source: SystemSpec, hom: GroupHom) -> Self {
        assert_eq!(hom.source(), &source.group(), "homomorphism must start at the acting group");
        Self { source, hom }
    }

    pub fn hom(&self) -> &GroupHom {
        &self.hom
    }
}

impl Cocycle for HomCocycle {
    fn source(&self) -> &SystemSpec {
        &self.source
    }

    fn target(&self) -> &GroupDesc {
        self.hom.target()
    }

    fn level(&self) -> u32 {
        0
    }

    fn generator(&self, i: usize, _x: &Point) -> GroupElement {
        self.hom.column(i)
    }
}

/// Block-diagonal product of cocycles.
#[derive(Debug, Clone)]
pub struct ProductCocycle {
    parts: Vec<Arc<dyn Cocycle>>,
    source: SystemSpec,
    target: GroupDesc,
    /// `(part, local coordinate)` for each source coordinate.
    owner: Vec<(usize, usize)>,
    src_offsets: Vec<usize>,
    tgt_offsets: Vec<usize>,
    level: u32,
}

impl ProductCocycle {
    pub fn new(parts: Vec<Arc<dyn Cocycle>>) -> Result<Self, CocycleError> {
        let mut iter = parts.iter();
        let first = iter.next().ok_or(DynamicsError::Empty)?;
        let (mut source, mut target) = (first.source().clone(), first.target().clone());
        for p in iter {
            source = source.product(p.source());
            target = target.product(p.target());
        }
        let owner = parts
            .iter()
            .enumerate()
            .flat_map(|(j, p)| (0..p.source().dim()).map(move |i| (j, i)))
            .collect();
        let src_offsets = offsets(parts.iter().map(|p| p.source().dim()));
        let tgt_offsets = offsets(parts.iter().map(|p| p.target().rank()));
        let level = parts.iter().map(|p| p.level()).max().unwrap_or(0);
        Ok(Self { parts, source, target, owner, src_offsets, tgt_offsets, level })
    }
}

impl Cocycle for ProductCocycle {
    fn source(&self) -> &SystemSpec {
        &self.source
    }

    fn target(&self) -> &GroupDesc {
        &self.target
    }

    fn level(&self) -> u32 {
        self.level
    }

    fn generator(&self, i: usize, x: &Point) -> GroupElement {
        let (j, local) = self.owner[i];
        let part = &self.parts[j];
        let v = part.generator(local, &sub_point(x, self.src_offsets[j], part.source().dim()));
        let mut out = vec![0; self.target.rank()];
        out[self.tgt_offsets[j]..self.tgt_offsets[j] + v.0.len()].copy_from_slice(&v.0);
        GroupElement(out)
    }
}

/// `c(g, x) = second(first(g, x), φ(x))` for `φ: X → Y`.
#[derive(Debug, Clone)]
pub struct ComposeCocycle {
    first: Arc<dyn Cocycle>,
    phi: Arc<dyn PointMap>,
    second: Arc<dyn Cocycle>,
    level: u32,
}

impl ComposeCocycle {
    pub fn new(first: Arc<dyn Cocycle>, phi: Arc<dyn PointMap>, second: Arc<dyn Cocycle>) -> Result<Self, CocycleError> {
        if first.source() != phi.source() || second.source() != phi.target() || first.target() != &phi.target().group() {
            return Err(CocycleError::Incompatible("cocycles and map do not chain".into()));
        }
        let phi_level = phi.source_level(second.level()).ok_or(CocycleError::LevelUnavailable(second.level()))?;
        let level = first.level().max(phi_level);
        Ok(Self { first, phi, second, level })
    }
}

impl Cocycle for ComposeCocycle {
    fn source(&self) -> &SystemSpec {
        self.first.source()
    }

    fn target(&self) -> &GroupDesc {
        self.second.target()
    }

    fn level(&self) -> u32 {
        self.level
    }

    fn generator(&self, i: usize, x: &Point) -> GroupElement {
        let spec = self.first.source();
        let h = self.first.generator(i, &spec.project_to(x, self.first.level()).expect("level"));
        let y = self.phi.eval(self.second.level(), x);
        extend_unchecked(self.second.as_ref(), &h, &y)
    }
}

/// Generator values tabulated at one level.
#[derive(Clone)]
pub struct TableCocycle {
    source: SystemSpec,
    target: GroupDesc,
    level: u32,
    grid: Grid,
    group_moduli: Vec<u64>,
    /// `values[(idx · dim + i) · rank + c]`.
    values: Vec<i64>,
}

impl fmt::Debug for TableCocycle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TableCocycle")
            .field("source", &self.source.to_string())
            .field("target", &self.target)
            .field("level", &self.level)
            .finish()
    }
}

impl TableCocycle {
    pub fn new(source: SystemSpec, target: GroupDesc, level: u32, values: Vec<i64>) -> Result<Self, CocycleError> {
        let grid = source.grid(level)?;
        let expected = grid.size() * source.dim() * target.rank();
        if values.len() != expected {
            return Err(CocycleError::Incompatible(format!(
                "cocycle table has {} entries, expected {expected}",
                values.len()
            )));
        }
        let mut values = values;
        for chunk in values.chunks_mut(target.rank().max(1)) {
            if target.rank() > 0 {
                target.normalize_in_place(chunk);
            }
        }
        let group_moduli = source.group().moduli().to_vec();
        Ok(Self { source, target, level, grid, group_moduli, values })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[i64] {
        &self.values
    }

    /// `a(e_i, x)` for the grid index of `x`.
    #[inline]
    pub fn value(&self, i: usize, idx: usize) -> &[i64] {
        let rank = self.target.rank();
        let start = (idx * self.source.dim() + i) * rank;
        &self.values[start..start + rank]
    }

    /// `a(g, x)` for the grid index of `x`, by telescoping.
    pub fn extend_index(&self, g: &[i64], idx: usize) -> Vec<i64> {
        let mut acc = vec![0i64; self.target.rank()];
        let mut cur = idx;
        for (i, (&c, &n)) in g.iter().zip(&self.group_moduli).enumerate() {
            let c = if n == 0 { c } else { c.rem_euclid(n as i64) };
            if c >= 0 {
                for _ in 0..c {
                    acc.iter_mut().zip(self.value(i, cur)).for_each(|(s, d)| *s += d);
                    cur = self.grid.shift(cur, i, 1);
                }
            } else {
                for _ in 0..(-c) {
                    cur = self.grid.shift(cur, i, -1);
                    acc.iter_mut().zip(self.value(i, cur)).for_each(|(s, d)| *s -= d);
                }
            }
        }
        self.target.normalize_in_place(&mut acc);
        acc
    }
}

impl Cocycle for TableCocycle {
    fn source(&self) -> &SystemSpec {
        &self.source
    }

    fn target(&self) -> &GroupDesc {
        &self.target
    }

    fn level(&self) -> u32 {
        self.level
    }

    fn generator(&self, i: usize, x: &Point) -> GroupElement {
        let x = self.source.project_to(x, self.level).expect("level");
        GroupElement(self.value(i, self.grid.index(&x.residues)).to_vec())
    }
}

/// `a(g, x) - a'(g, x)`, again a cocycle since targets are abelian.
#[derive(Debug, Clone)]
pub struct DifferenceCocycle {
    left: Arc<dyn Cocycle>,
    right: Arc<dyn Cocycle>,
}

impl DifferenceCocycle {
    pub fn new(left: Arc<dyn Cocycle>, right: Arc<dyn Cocycle>) -> Result<Self, CocycleError> {
        if left.source() != right.source() || left.target() != right.target() {
            return Err(CocycleError::Incompatible("cocycles over different systems".into()));
        }
        Ok(Self { left, right })
    }
}

impl Cocycle for DifferenceCocycle {
    fn source(&self) -> &SystemSpec {
        self.left.source()
    }

    fn target(&self) -> &GroupDesc {
        self.left.target()
    }

    fn level(&self) -> u32 {
        self.left.level().max(self.right.level())
    }

    fn generator(&self, i: usize, x: &Point) -> GroupElement {
        self.left.target().sub(&self.left.generator(i, x), &self.right.generator(i, x))
    }
}

/// `a(g, x) = u(g.x) + inner(g, x) - u(x)`.
#[derive(Debug, Clone)]
pub struct TwistedCocycle {
    inner: Arc<dyn Cocycle>,
    u: Transfer,
}

impl TwistedCocycle {
    pub fn new(inner: Arc<dyn Cocycle>, u: Transfer) -> Result<Self, CocycleError> {
        if u.source() != inner.source() || u.target() != inner.target() {
            return Err(CocycleError::Incompatible("transfer does not match the cocycle".into()));
        }
        Ok(Self { inner, u })
    }
}

impl Cocycle for TwistedCocycle {
    fn source(&self) -> &SystemSpec {
        self.inner.source()
    }

    fn target(&self) -> &GroupDesc {
        self.inner.target()
    }

    fn level(&self) -> u32 {
        self.inner.level().max(self.u.level())
    }

    fn generator(&self, i: usize, x: &Point) -> GroupElement {
        let spec = self.inner.source();
        let gx = act_point(spec, &spec.group().generator(i), x);
        let h = self.inner.target();
        h.sub(&h.add(&self.u.eval(&gx), &self.inner.generator(i, x)), &self.u.eval(x))
    }
}
