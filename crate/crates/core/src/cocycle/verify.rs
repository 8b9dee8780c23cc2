use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use super::maps::{HomCocycle, LevelTable, TableCocycle, TableMap};
use super::{Cocycle, CocycleError, CoeWitness, ConjWitness, GroupHom, PointMap};
use crate::dynamics::{add_mod, DynamicsError, GroupDesc, GroupElement, Grid, Point, SystemSpec};
use crate::par;

const MAX_EXAMPLES: usize = 5;

/// Truncation level, group-element radius and point ceiling of a finite check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VerifyConfig {
    pub level: u32,
    pub radius: u32,
    /// Largest grid that may be enumerated.
    pub guard: u64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self { level: 4, radius: 6, guard: 4_000_000 }
    }
}

impl VerifyConfig {
    pub fn new(level: u32, radius: u32) -> Self {
        Self { level, radius, ..Self::default() }
    }
}

/// Result of one named check.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub checked: u64,
    pub violations: u64,
    pub examples: Vec<String>,
}

impl CheckOutcome {
    fn new(name: &str) -> Self {
        Self { name: name.to_string(), checked: 0, violations: 0, examples: Vec::new() }
    }

    pub fn passed(&self) -> bool {
        self.violations == 0
    }

    fn record(&mut self, ok: bool, example: impl FnOnce() -> String) {
        self.checked += 1;
        if !ok {
            self.violations += 1;
            if self.examples.len() < MAX_EXAMPLES {
                self.examples.push(example());
            }
        }
    }

    fn merge(mut self, other: CheckOutcome) -> CheckOutcome {
        self.checked += other.checked;
        self.violations += other.violations;
        for e in other.examples {
            if self.examples.len() < MAX_EXAMPLES {
                self.examples.push(e);
            }
        }
        self
    }
}

impl fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed() { "ok" } else { "FAILED" };
        write!(f, "{:<22} {status:<6} {} checked, {} violations", self.name, self.checked, self.violations)?;
        for e in &self.examples {
            write!(f, "\n    {e}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VerificationReport {
    pub level: u32,
    pub radius: u32,
    pub checks: Vec<CheckOutcome>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(CheckOutcome::passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckOutcome> {
        self.checks.iter().filter(|c| !c.passed())
    }

    pub fn check(&self, name: &str) -> Option<&CheckOutcome> {
        self.checks.iter().find(|c| c.name == name)
    }
}

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "level {}, radius {}", self.level, self.radius)?;
        for c in &self.checks {
            writeln!(f, "  {c}")?;
        }
        write!(f, "{}", if self.passed() { "verified" } else { "verification FAILED" })
    }
}

/// Elements of the radius box, each reached from an earlier one by one generator step.
struct BoxPlan {
    elems: Vec<Vec<i64>>,
    normalized: Vec<GroupElement>,
    /// `(predecessor, coordinate, +1 | -1)`; `g = pred ± e_c`.
    steps: Vec<(usize, usize, i64)>,
}

impl BoxPlan {
    fn new(group: &GroupDesc, radius: u32) -> Self {
        let r = i64::from(radius);
        let ranges: Vec<Vec<i64>> = group
            .moduli()
            .iter()
            .map(|&n| if n != 0 && n <= 2 * u64::from(radius) + 1 { (0..n as i64).collect() } else { (-r..=r).collect() })
            .collect();
        let mut elems: Vec<Vec<i64>> = vec![Vec::new()];
        for range in &ranges {
            elems = elems
                .into_iter()
                .flat_map(|p| {
                    range.iter().map(move |&c| {
                        let mut v = p.clone();
                        v.push(c);
                        v
                    })
                })
                .collect();
        }
        elems.sort_by_key(|v| (v.iter().map(|c| c.unsigned_abs()).sum::<u64>(), v.clone()));
        let index: HashMap<Vec<i64>, usize> = elems.iter().cloned().enumerate().map(|(i, v)| (v, i)).collect();
        let steps = elems
            .iter()
            .map(|v| match v.iter().rposition(|&c| c != 0) {
                None => (0, 0, 0),
                Some(c) => {
                    let sign = v[c].signum();
                    let mut pred = v.clone();
                    pred[c] -= sign;
                    (index[&pred], c, sign)
                }
            })
            .collect();
        let normalized = elems.iter().map(|v| group.normalize(GroupElement(v.clone()))).collect();
        Self { elems, normalized, steps }
    }

    fn len(&self) -> usize {
        self.elems.len()
    }

    /// Residues of `g.x` and raw values `a(g, x)` for every box element;
    /// `res[..dim]` holds the residues of `x` on entry.
    fn walk(&self, a: &TableCocycle, to_a: &Projector, moduli: &[u64], res: &mut [u64], val: &mut [i64]) {
        let rank = a.target().rank();
        let dim = moduli.len();
        val[..rank].iter_mut().for_each(|v| *v = 0);
        for j in 1..self.len() {
            let (pred, c, sign) = self.steps[j];
            let (rb, ra) = res.split_at_mut(j * dim);
            let from = &rb[pred * dim..pred * dim + dim];
            let to = &mut ra[..dim];
            to.copy_from_slice(from);
            let (vb, va) = val.split_at_mut(j * rank);
            let prev = &vb[pred * rank..pred * rank + rank];
            let out = &mut va[..rank];
            let m = moduli[c];
            if sign > 0 {
                let v = a.value(c, to_a.index(from));
                to[c] = if to[c] + 1 == m { 0 } else { to[c] + 1 };
                for t in 0..rank {
                    out[t] = prev[t] + v[t];
                }
            } else {
                to[c] = if to[c] == 0 { m - 1 } else { to[c] - 1 };
                let v = a.value(c, to_a.index(to));
                for t in 0..rank {
                    out[t] = prev[t] - v[t];
                }
            }
        }
    }

    /// Grid positions `g.x` and raw values `a(g, x)` for every box element.
    fn walk_indices(&self, a: &TableCocycle, grid: &Grid, idx: usize, pos: &mut [usize], val: &mut [i64]) {
        let rank = a.target().rank();
        let agrid = a.grid();
        pos[0] = idx;
        val[..rank].iter_mut().for_each(|v| *v = 0);
        for j in 1..self.len() {
            let (pred, c, sign) = self.steps[j];
            let (before, after) = val.split_at_mut(j * rank);
            let prev = &before[pred * rank..pred * rank + rank];
            let out = &mut after[..rank];
            if sign > 0 {
                let from = pos[pred];
                pos[j] = grid.shift(from, c, 1);
                let v = a.value(c, grid.project_index(from, agrid));
                for t in 0..rank {
                    out[t] = prev[t] + v[t];
                }
            } else {
                pos[j] = grid.shift(pos[pred], c, -1);
                let v = a.value(c, grid.project_index(pos[j], agrid));
                for t in 0..rank {
                    out[t] = prev[t] - v[t];
                }
            }
        }
    }
}

/// Per-worker buffers for the box walk.
struct Scratch {
    res: Vec<u64>,
    val: Vec<i64>,
    order: Vec<usize>,
    repeats: Vec<bool>,
    back: Vec<i64>,
    keys: Vec<u128>,
    base: Vec<u64>,
    yb: Vec<u64>,
}

impl Scratch {
    fn new(n: usize, dim: usize, rank: usize, target_dim: usize, back_rank: usize) -> Self {
        Self {
            res: vec![0; n * dim],
            val: vec![0; n * rank],
            order: Vec::with_capacity(n),
            repeats: vec![false; n],
            back: vec![0; back_rank],
            keys: Vec::with_capacity(n),
            base: vec![0; target_dim],
            yb: vec![0; target_dim],
        }
    }
}

/// Reduction from a grid to a coarser level by per-coordinate lookup.
struct Projector {
    tables: Vec<Vec<u64>>,
}

impl Projector {
    fn new(fine: &Grid, coarse: &Grid) -> Self {
        let tables = fine
            .moduli()
            .iter()
            .zip(coarse.moduli().iter().zip(coarse.strides()))
            .map(|(&m, (&cm, &st))| (0..m).map(|r| (r % cm) * st).collect())
            .collect();
        Self { tables }
    }

    #[inline]
    fn index(&self, res: &[u64]) -> usize {
        res.iter().zip(&self.tables).map(|(&r, t)| t[r as usize]).sum::<u64>() as usize
    }
}

/// Values packed as `(value bits) << 16 | position`, when they fit: at most
/// `2^16` positions and `rank` coordinates of `112 / rank` bits each.
fn packed_keys<'k>(val: &[i64], rank: usize, keys: &'k mut Vec<u128>) -> Option<&'k mut Vec<u128>> {
    let n = if rank == 0 { 0 } else { val.len() / rank };
    if rank == 0 || n > 1 << 16 || rank > 4 {
        return None;
    }
    let bits = (112 / rank) as u32;
    let half = 1i64 << (bits.min(63) - 1);
    keys.clear();
    for (j, chunk) in val.chunks_exact(rank).enumerate() {
        let mut key = 0u128;
        for &v in chunk {
            if v < -half || v >= half {
                return None;
            }
            key = (key << bits) | (v + half) as u128;
        }
        keys.push(key << 16 | j as u128);
    }
    Some(keys)
}

/// Largest prefix table built for [`Extender`].
const PREFIX_LIMIT: usize = 1 << 24;

/// Evaluates `a(g, y)` for arbitrary `g` in `O(dim)` using, per coordinate,
/// prefix sums of `a(e_i, ·)` along the `e_i`-cycles of the cocycle's grid.
struct Extender<'a> {
    a: &'a TableCocycle,
    group: Vec<u64>,
    offsets: Vec<usize>,
    prefix: Vec<i64>,
}

impl<'a> Extender<'a> {
    fn new(a: &'a TableCocycle) -> Option<Self> {
        let grid = a.grid();
        let rank = a.target().rank();
        let mut offsets = Vec::with_capacity(grid.dim());
        let mut total = 0usize;
        for i in 0..grid.dim() {
            offsets.push(total);
            total = total.checked_add(grid.size().checked_mul(grid.moduli()[i] as usize + 1)?.checked_mul(rank)?)?;
        }
        if total > PREFIX_LIMIT {
            return None;
        }
        let mut prefix = vec![0i64; total];
        for i in 0..grid.dim() {
            let m = grid.moduli()[i] as usize;
            for y in 0..grid.size() {
                let base = offsets[i] + y * (m + 1) * rank;
                let mut cur = y;
                for r in 0..m {
                    let v = a.value(i, cur);
                    for c in 0..rank {
                        prefix[base + (r + 1) * rank + c] = prefix[base + r * rank + c] + v[c];
                    }
                    cur = grid.shift(cur, i, 1);
                }
            }
        }
        Some(Self { a, group: a.source().group().moduli().to_vec(), offsets, prefix })
    }

    /// `Σ_{s<t} a(e_i, e_i^s y)` for `t ≥ 0`, accumulated into `out` with sign `sign`.
    fn run(&self, i: usize, y: usize, t: u64, sign: i64, out: &mut [i64]) {
        let rank = out.len();
        let m = self.a.grid().moduli()[i];
        let (q, r) = match m {
            1 => (t as i64, 0),
            _ if t < m => (0, t as usize),
            _ => ((t / m) as i64, (t % m) as usize),
        };
        let base = self.offsets[i] + y * (m as usize + 1) * rank;
        for c in 0..rank {
            out[c] += sign * (q * self.prefix[base + m as usize * rank + c] + self.prefix[base + r * rank + c]);
        }
    }

    /// Same value as [`TableCocycle::extend_index`] at the point with residues `y`, written to `out`.
    fn extend(&self, g: &[i64], y: &[u64], out: &mut [i64]) {
        out.iter_mut().for_each(|v| *v = 0);
        let grid = self.a.grid();
        let (moduli, strides) = (grid.moduli(), grid.strides());
        let mut cur = grid.index(y);
        for (i, (&c, &n)) in g.iter().zip(&self.group).enumerate() {
            let c = if n == 0 { c } else { c.rem_euclid(n as i64) };
            let moved = add_mod(y[i], c, moduli[i]);
            let next = cur + (moved * strides[i]) as usize - (y[i] * strides[i]) as usize;
            if c >= 0 {
                self.run(i, cur, c as u64, 1, out);
            } else {
                self.run(i, next, c.unsigned_abs(), -1, out);
            }
            cur = next;
        }
        self.a.target().normalize_in_place(out);
    }
}

fn guarded_grid(spec: &SystemSpec, level: u32, guard: u64) -> Result<Grid, CocycleError> {
    let count = spec.point_count(level)?;
    if count > u128::from(guard) {
        return Err(DynamicsError::Guard { count, guard }.into());
    }
    Ok(spec.grid(level)?)
}

/// Tabulates `map` for target levels `0..=max_level`.
pub fn materialize_map(map: &dyn PointMap, max_level: u32, guard: u64) -> Result<TableMap, CocycleError> {
    let mut levels = Vec::with_capacity(max_level as usize + 1);
    for t in 0..=max_level {
        let sl = map.source_level(t).ok_or(CocycleError::LevelUnavailable(t))?;
        let sgrid = guarded_grid(map.source(), sl, guard)?;
        let tgrid = map.target().grid(t)?;
        let images = par::map_range(sgrid.size(), |idx| {
            let y = map.eval(t, &Point { level: sl, residues: sgrid.residues(idx) });
            tgrid.index(&y.residues) as u32
        });
        levels.push(LevelTable { source_level: sl, images });
    }
    TableMap::new(map.source().clone(), map.target().clone(), levels)
}

/// Tabulates the generator values of `a` at its own level.
pub fn materialize_cocycle(a: &dyn Cocycle, guard: u64) -> Result<TableCocycle, CocycleError> {
    let spec = a.source();
    let level = a.level();
    let grid = guarded_grid(spec, level, guard)?;
    let dim = spec.dim();
    let rows = par::map_range(grid.size(), |idx| {
        let x = Point { level, residues: grid.residues(idx) };
        (0..dim).flat_map(|i| a.generator(i, &x).0).collect::<Vec<i64>>()
    });
    TableCocycle::new(spec.clone(), a.target().clone(), level, rows.concat())
}

/// Smallest level at which the tabulated generator values are constant on cylinders.
pub fn minimal_level(a: &TableCocycle) -> Result<u32, CocycleError> {
    let spec = a.source();
    let dim = spec.dim();
    'levels: for l in 0..a.level() {
        let lower = spec.grid(l)?;
        let mut first: Vec<Option<usize>> = vec![None; lower.size()];
        for idx in 0..a.grid().size() {
            let low = a.grid().project_index(idx, &lower);
            match first[low] {
                None => first[low] = Some(idx),
                Some(rep) => {
                    if (0..dim).any(|i| a.value(i, idx) != a.value(i, rep)) {
                        continue 'levels;
                    }
                }
            }
        }
        return Ok(l);
    }
    Ok(a.level())
}

/// Re-tabulates `a` at its minimal level.
pub fn tighten_cocycle(a: &dyn Cocycle, guard: u64) -> Result<TableCocycle, CocycleError> {
    let full = materialize_cocycle(a, guard)?;
    let l = minimal_level(&full)?;
    if l == full.level() {
        return Ok(full);
    }
    let spec = a.source();
    let lower = spec.grid(l)?;
    let dim = spec.dim();
    let mut values = Vec::with_capacity(lower.size() * dim * a.target().rank());
    for idx in 0..lower.size() {
        let hi = full.grid().index(&lower.residues(idx));
        for i in 0..dim {
            values.extend_from_slice(full.value(i, hi));
        }
    }
    TableCocycle::new(spec.clone(), a.target().clone(), l, values)
}

/// `true` when the declared level of `a` is the smallest one it is constant at.
pub fn audit_locality(a: &TableCocycle) -> Result<bool, CocycleError> {
    Ok(minimal_level(a)? == a.level())
}

/// Exhaustive check of `a(g₁ + g₂, x) = a(g₁, g₂.x) + a(g₂, x)` for
/// `g₁, g₂` in the radius box and every cylinder at `max(level, a.level())`.
pub fn verify_cocycle_identity(a: &dyn Cocycle, level: u32, radius: u32, guard: u64) -> Result<CheckOutcome, CocycleError> {
    let table = materialize_cocycle(a, guard)?;
    let spec = a.source();
    let group = spec.group();
    let target = a.target();
    let rank = target.rank();
    let plan = BoxPlan::new(&group, radius);
    let n = plan.len();
    let agrid = table.grid().clone();
    let memo: Vec<(Vec<usize>, Vec<i64>)> = par::map_range(agrid.size(), |idx| {
        let mut pos = vec![0; n];
        let mut val = vec![0; n * rank];
        plan.walk_indices(&table, &agrid, idx, &mut pos, &mut val);
        for chunk in val.chunks_mut(rank.max(1)) {
            if rank > 0 {
                target.normalize_in_place(chunk);
            }
        }
        (pos, val)
    });
    let grid = guarded_grid(spec, level.max(table.level()), guard)?;
    let out = par::fold_range(
        grid.size(),
        || CheckOutcome::new("cocycle-identity"),
        |mut acc, idx| {
            let low = grid.project_index(idx, &agrid);
            let (pos, val) = &memo[low];
            for j2 in 0..n {
                let y = pos[j2];
                let (_, val_y) = &memo[y];
                for j1 in 0..n {
                    let sum: Vec<i64> = plan.elems[j1].iter().zip(&plan.elems[j2]).map(|(p, q)| p + q).collect();
                    let lhs = table.extend_index(&sum, low);
                    let mut rhs: Vec<i64> =
                        (0..rank).map(|t| val_y[j1 * rank + t] + val[j2 * rank + t]).collect();
                    target.normalize_in_place(&mut rhs);
                    acc.record(lhs == rhs, || {
                        format!(
                            "x = {:?}, g1 = {:?}, g2 = {:?}: {lhs:?} != {rhs:?}",
                            grid.residues(idx),
                            plan.elems[j1],
                            plan.elems[j2]
                        )
                    });
                }
            }
            acc
        },
        CheckOutcome::merge,
    );
    Ok(out)
}

/// Commutation squares and torsion sums of the generator values. Together
/// they are equivalent to the cocycle identity on the whole acting group.
fn cocycle_relations(a: &TableCocycle, name: &str) -> CheckOutcome {
    let spec = a.source();
    let moduli = spec.group().moduli().to_vec();
    let target = a.target();
    let rank = target.rank();
    let grid = a.grid();
    let dim = spec.dim();
    par::fold_range(
        grid.size(),
        || CheckOutcome::new(name),
        |mut acc, idx| {
            for i in 0..dim {
                for j in i + 1..dim {
                    let mut lhs: Vec<i64> = a.value(i, grid.shift(idx, j, 1)).to_vec();
                    lhs.iter_mut().zip(a.value(j, idx)).for_each(|(s, d)| *s += d);
                    let mut rhs: Vec<i64> = a.value(j, grid.shift(idx, i, 1)).to_vec();
                    rhs.iter_mut().zip(a.value(i, idx)).for_each(|(s, d)| *s += d);
                    target.normalize_in_place(&mut lhs);
                    target.normalize_in_place(&mut rhs);
                    acc.record(lhs == rhs, || {
                        format!("x = {:?}, e{i}/e{j} square: {lhs:?} != {rhs:?}", grid.residues(idx))
                    });
                }
                if moduli[i] != 0 {
                    let mut sum = vec![0i64; rank];
                    let mut cur = idx;
                    for _ in 0..moduli[i] {
                        sum.iter_mut().zip(a.value(i, cur)).for_each(|(s, d)| *s += d);
                        cur = grid.shift(cur, i, 1);
                    }
                    target.normalize_in_place(&mut sum);
                    acc.record(sum.iter().all(|&c| c == 0), || {
                        format!("x = {:?}, e{i} has order {} but sums to {sum:?}", grid.residues(idx), moduli[i])
                    });
                }
            }
            acc
        },
        CheckOutcome::merge,
    )
}

fn table_level(map: &TableMap, level: u32) -> Result<u32, CocycleError> {
    map.source_level(level).ok_or_else(|| {
        CocycleError::Incompatible(format!(
            "map {} -> {} is tabulated up to level {:?}, level {level} needed",
            map.source(),
            map.target(),
            map.max_level()
        ))
    })
}

/// Equivariance, inverse-cocycle and injectivity checks on one side.
fn side_checks(
    phi: &TableMap,
    a: &TableCocycle,
    b: &TableCocycle,
    k: u32,
    plan: &BoxPlan,
    guard: u64,
    names: [&str; 3],
) -> Result<[CheckOutcome; 3], CocycleError> {
    let x = a.source();
    let rank = a.target().rank();
    let sk = table_level(phi, k)?;
    let lb = b.level();
    let sb = table_level(phi, lb)?;
    let s = sk.max(a.level()).max(sb);
    let grid = guarded_grid(x, s, guard)?;
    let gk = phi.source_grid(k);
    let gb = phi.source_grid(lb);
    let ytk = phi.target_grid(k);
    let h = a.target();
    let n = plan.len();
    let fast = Extender::new(b);
    let back_rank = b.target().rank();
    let dim = x.dim();
    let ydim = ytk.dim();
    let to_k = Projector::new(&grid, gk);
    let to_b = Projector::new(&grid, gb);
    let to_a = Projector::new(&grid, a.grid());
    let bgrid = b.grid();
    let (ymod, ystride) = (ytk.moduli(), ytk.strides());
    let init = || (names.map(CheckOutcome::new), Scratch::new(n, dim, rank, ydim, back_rank));
    let (out, _) = par::fold_range(
        grid.size(),
        init,
        |(mut acc, mut sc), idx| {
            grid.residues_into(idx, &mut sc.res[..dim]);
            plan.walk(a, &to_a, grid.moduli(), &mut sc.res, &mut sc.val);
            let base = phi.image(k, to_k.index(&sc.res[..dim]));
            ytk.residues_into(base, &mut sc.base);
            let yb = phi.image(lb, to_b.index(&sc.res[..dim]));
            bgrid.residues_into(yb, &mut sc.yb);
            for j in 0..n {
                let hv = &mut sc.val[j * rank..(j + 1) * rank];
                h.normalize_in_place(hv);
                let lhs = phi.image(k, to_k.index(&sc.res[j * dim..(j + 1) * dim]));
                let rhs = (0..ydim).map(|c| add_mod(sc.base[c], hv[c], ymod[c]) * ystride[c]).sum::<u64>() as usize;
                acc[0].record(lhs == rhs, || {
                    format!(
                        "x = {:?}, g = {:?}: image of g.x is {:?}, a(g,x).image is {:?}",
                        grid.residues(idx),
                        plan.elems[j],
                        ytk.residues(lhs),
                        ytk.residues(rhs)
                    )
                });
                match &fast {
                    Some(e) => e.extend(hv, &sc.yb, &mut sc.back),
                    None => sc.back.copy_from_slice(&b.extend_index(hv, yb)),
                }
                let back = &sc.back;
                acc[1].record(*back == plan.normalized[j].0, || {
                    format!("x = {:?}, g = {:?}: got {back:?} back", grid.residues(idx), plan.elems[j])
                });
            }
            let val = &sc.val;
            let repeats = &mut sc.repeats;
            repeats.iter_mut().for_each(|r| *r = false);
            if let Some(keys) = packed_keys(val, rank, &mut sc.keys) {
                keys.sort_unstable();
                for w in keys.windows(2) {
                    if w[0] >> 16 == w[1] >> 16 {
                        repeats[(w[0] & 0xffff).max(w[1] & 0xffff) as usize] = true;
                    }
                }
            } else {
                sc.order.clear();
                sc.order.extend(0..n);
                sc.order.sort_unstable_by(|&p, &q| val[p * rank..(p + 1) * rank].cmp(&val[q * rank..(q + 1) * rank]));
                for w in sc.order.windows(2) {
                    if val[w[0] * rank..(w[0] + 1) * rank] == val[w[1] * rank..(w[1] + 1) * rank] {
                        repeats[w[0].max(w[1])] = true;
                    }
                }
            }
            for (j, &rep) in repeats.iter().enumerate() {
                acc[2].record(!rep, || {
                    format!(
                        "x = {:?}: g = {:?} repeats value {:?}",
                        grid.residues(idx),
                        plan.elems[j],
                        &val[j * rank..(j + 1) * rank]
                    )
                });
            }
            (acc, sc)
        },
        |(l, sc), (r, _)| {
            let [l0, l1, l2] = l;
            let [r0, r1, r2] = r;
            ([l0.merge(r0), l1.merge(r1), l2.merge(r2)], sc)
        },
    );
    Ok(out)
}

/// `ψ_k(φ(x)) = x` on the level-`k` quotient.
fn round_trip(phi: &TableMap, psi: &TableMap, k: u32, guard: u64, name: &str) -> Result<CheckOutcome, CocycleError> {
    let mid = table_level(psi, k)?;
    let s = table_level(phi, mid)?.max(k);
    let x = phi.source();
    let grid = guarded_grid(x, s, guard)?;
    let gs = phi.source_grid(mid);
    let xk = psi.target_grid(k);
    Ok(par::fold_range(
        grid.size(),
        || CheckOutcome::new(name),
        |mut acc, idx| {
            let y = phi.image(mid, grid.project_index(idx, gs));
            let back = psi.image(k, y);
            let expected = grid.project_index(idx, xk);
            acc.record(back == expected, || {
                format!("x = {:?} returns as {:?}", grid.residues(idx), xk.residues(back))
            });
            acc
        },
        CheckOutcome::merge,
    ))
}

/// Fully tabulated orbit equivalence.
#[derive(Debug, Clone)]
pub struct MaterializedCoe {
    pub phi: TableMap,
    pub a: TableCocycle,
    pub psi: TableMap,
    pub b: TableCocycle,
}

impl MaterializedCoe {
    /// Tabulates every level the checks at `cfg.level` read.
    pub fn from_witness(w: &CoeWitness, cfg: VerifyConfig) -> Result<Self, CocycleError> {
        let k = cfg.level;
        let a = tighten_cocycle(w.a.as_ref(), cfg.guard)?;
        let b = tighten_cocycle(w.b.as_ref(), cfg.guard)?;
        let sphi = w.phi.source_level(k).ok_or(CocycleError::LevelUnavailable(k))?;
        let spsi = w.psi.source_level(k).ok_or(CocycleError::LevelUnavailable(k))?;
        let phi = materialize_map(w.phi.as_ref(), k.max(spsi).max(b.level()), cfg.guard)?;
        let psi = materialize_map(w.psi.as_ref(), k.max(sphi).max(a.level()), cfg.guard)?;
        Ok(Self { phi, a, psi, b })
    }

    pub fn to_witness(&self) -> Result<CoeWitness, CocycleError> {
        CoeWitness::new(
            Arc::new(self.phi.clone()),
            Arc::new(self.a.clone()),
            Arc::new(self.psi.clone()),
            Arc::new(self.b.clone()),
        )
    }
}

/// Fully tabulated conjugacy.
#[derive(Debug, Clone)]
pub struct MaterializedConj {
    pub rho: GroupHom,
    pub phi: TableMap,
    pub psi: TableMap,
}

impl MaterializedConj {
    pub fn from_witness(w: &ConjWitness, cfg: VerifyConfig) -> Result<Self, CocycleError> {
        let k = cfg.level;
        let sphi = w.phi.source_level(k).ok_or(CocycleError::LevelUnavailable(k))?;
        let spsi = w.psi.source_level(k).ok_or(CocycleError::LevelUnavailable(k))?;
        let phi = materialize_map(w.phi.as_ref(), k.max(spsi), cfg.guard)?;
        let psi = materialize_map(w.psi.as_ref(), k.max(sphi), cfg.guard)?;
        Ok(Self { rho: w.rho.clone(), phi, psi })
    }
}

/// Checks tabulated data at `cfg.level` over the radius box.
pub fn verify_coe_tables(m: &MaterializedCoe, cfg: VerifyConfig) -> Result<VerificationReport, CocycleError> {
    let x = m.phi.source();
    let y = m.phi.target();
    if m.psi.source() != y || m.psi.target() != x || m.a.source() != x || m.b.source() != y {
        return Err(CocycleError::Incompatible("tables do not describe maps between the same systems".into()));
    }
    if m.a.target() != &y.group() || m.b.target() != &x.group() {
        return Err(CocycleError::Incompatible("cocycle targets are not the acting groups".into()));
    }
    let k = cfg.level;
    let plan_x = BoxPlan::new(&x.group(), cfg.radius);
    let plan_y = BoxPlan::new(&y.group(), cfg.radius);
    let [eq_phi, inv_a, inj_a] =
        side_checks(&m.phi, &m.a, &m.b, k, &plan_x, cfg.guard, ["phi-equivariance", "b-inverts-a", "a-injective"])?;
    let [eq_psi, inv_b, inj_b] =
        side_checks(&m.psi, &m.b, &m.a, k, &plan_y, cfg.guard, ["psi-equivariance", "a-inverts-b", "b-injective"])?;
    let checks = vec![
        eq_phi,
        eq_psi,
        round_trip(&m.phi, &m.psi, k, cfg.guard, "psi-after-phi")?,
        round_trip(&m.psi, &m.phi, k, cfg.guard, "phi-after-psi")?,
        inv_a,
        inv_b,
        inj_a,
        inj_b,
        cocycle_relations(&m.a, "a-cocycle-relations"),
        cocycle_relations(&m.b, "b-cocycle-relations"),
    ];
    Ok(VerificationReport { level: k, radius: cfg.radius, checks })
}

/// Tabulates `w` and checks it.
pub fn verify_coe(w: &CoeWitness, cfg: VerifyConfig) -> Result<VerificationReport, CocycleError> {
    verify_coe_tables(&MaterializedCoe::from_witness(w, cfg)?, cfg)
}

/// Checks that `ρ` is an isomorphism and the tables an equivariant bijection.
pub fn verify_conj_tables(m: &MaterializedConj, cfg: VerifyConfig) -> Result<VerificationReport, CocycleError> {
    let mut iso = CheckOutcome::new("rho-isomorphism");
    let inverse = m.rho.inverse();
    iso.record(inverse.is_ok(), || format!("rho = {} is not invertible", m.rho));
    let Ok(rho_inv) = inverse else {
        return Ok(VerificationReport { level: cfg.level, radius: cfg.radius, checks: vec![iso] });
    };
    let x = m.phi.source().clone();
    let y = m.phi.target().clone();
    let a = materialize_cocycle(&HomCocycle::new(x, m.rho.clone()), cfg.guard)?;
    let b = materialize_cocycle(&HomCocycle::new(y, rho_inv), cfg.guard)?;
    let coe = MaterializedCoe { phi: m.phi.clone(), a, psi: m.psi.clone(), b };
    let mut report = verify_coe_tables(&coe, cfg)?;
    report.checks.insert(0, iso);
    Ok(report)
}

pub fn verify_conj(w: &ConjWitness, cfg: VerifyConfig) -> Result<VerificationReport, CocycleError> {
    verify_conj_tables(&MaterializedConj::from_witness(w, cfg)?, cfg)
}
