//! Finite truncations of products of cyclic actions `λ_n` and odometers `α_M`.
//!
//! A [`SystemSpec`] lists factors. Its acting group has one coordinate per
//! factor (`Z/n` for `Cyclic(n)`, `Z` for `Odometer(M)`) and the space is the
//! product of `Z/n` and the profinite `Z/M`. At level `k` an odometer
//! coordinate is a residue modulo `∏_p p^{min(v_p(M), k)}`; one level is
//! shared by all factors.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::supernatural::{Supernatural, SupernaturalError};

/// Default ceiling on the number of points a level may have before
/// enumeration refuses.
pub const DEFAULT_POINT_GUARD: u64 = 1_000_000;

/// Levels are searched up to this bound when looking for a modulus.
pub const MAX_LEVEL: u32 = 64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DynamicsError {
    #[error("invalid factor: {0}")]
    InvalidFactor(String),
    #[error("a system needs at least one factor")]
    Empty,
    #[error("shape mismatch: expected {expected} coordinates, got {got}")]
    Shape { expected: usize, got: usize },
    #[error("residue {residue} out of range for modulus {modulus}")]
    Residue { residue: u64, modulus: u64 },
    #[error("point is at level {have}, level {need} is required")]
    Level { have: u32, need: u32 },
    #[error("level modulus overflows 64 bits")]
    Overflow,
    #[error("{count} points exceed the enumeration guard of {guard}")]
    Guard { count: u128, guard: u64 },
    #[error("no level up to {MAX_LEVEL} has a modulus divisible by {0}")]
    Unreachable(u64),
    #[error(transparent)]
    Supernatural(#[from] SupernaturalError),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Factor {
    /// `Z/n` acting on itself by translation.
    Cyclic(u64),
    /// `Z` acting on `Z/M` by `+1`.
    Odometer(Supernatural),
}

impl Factor {
    pub fn cyclic(n: u64) -> Result<Self, DynamicsError> {
        if n == 0 {
            return Err(DynamicsError::InvalidFactor("cyclic modulus must be at least 1".into()));
        }
        Ok(Factor::Cyclic(n))
    }

    pub fn odometer(m: Supernatural) -> Result<Self, DynamicsError> {
        if !m.is_supernatural() {
            return Err(DynamicsError::InvalidFactor(format!("{m} is not supernatural")));
        }
        Ok(Factor::Odometer(m))
    }

    /// Group coordinate modulus: `n` for cyclic factors, `0` (meaning `Z`) for odometers.
    pub fn group_modulus(&self) -> u64 {
        match self {
            Factor::Cyclic(n) => *n,
            Factor::Odometer(_) => 0,
        }
    }
}

impl fmt::Display for Factor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Factor::Cyclic(n) => write!(f, "cyc:{n}"),
            Factor::Odometer(m) => write!(f, "odo:{m}"),
        }
    }
}

/// Modulus of a factor at level `k`.
pub fn level_modulus(f: &Factor, k: u32) -> Result<u64, DynamicsError> {
    match f {
        Factor::Cyclic(n) => Ok(*n),
        Factor::Odometer(m) => supernatural_level_modulus(m, k),
    }
}

/// `∏_{p ∈ supp(M)} p^{min(v_p(M), k)}`.
pub fn supernatural_level_modulus(m: &Supernatural, k: u32) -> Result<u64, DynamicsError> {
    let mut acc: u64 = 1;
    for (p, e) in m.factors() {
        let e = e.capped(u64::from(k)) as u32;
        let pk = p.checked_pow(e).ok_or(DynamicsError::Overflow)?;
        acc = acc.checked_mul(pk).ok_or(DynamicsError::Overflow)?;
    }
    Ok(acc)
}

/// Smallest level whose modulus for `m` is divisible by `required`.
pub fn min_level_for(m: &Supernatural, required: u64) -> Result<u32, DynamicsError> {
    for k in 0..=MAX_LEVEL {
        if let Ok(md) = supernatural_level_modulus(m, k) {
            if md % required == 0 {
                return Ok(k);
            }
        } else {
            break;
        }
    }
    Err(DynamicsError::Unreachable(required))
}

/// Acting group descriptor: one modulus per coordinate, `0` meaning `Z`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GroupDesc {
    moduli: Vec<u64>,
}

impl GroupDesc {
    pub fn new(moduli: Vec<u64>) -> Self {
        Self { moduli }
    }

    pub fn free(rank: usize) -> Self {
        Self { moduli: vec![0; rank] }
    }

    pub fn moduli(&self) -> &[u64] {
        &self.moduli
    }

    pub fn rank(&self) -> usize {
        self.moduli.len()
    }

    pub fn is_free(&self) -> bool {
        self.moduli.iter().all(|&n| n == 0)
    }

    pub fn is_finite(&self) -> bool {
        self.moduli.iter().all(|&n| n != 0)
    }

    pub fn identity(&self) -> GroupElement {
        GroupElement(vec![0; self.rank()])
    }

    pub fn generator(&self, i: usize) -> GroupElement {
        let mut g = self.identity();
        g.0[i] = 1;
        self.normalize(g)
    }

    pub fn normalize(&self, mut g: GroupElement) -> GroupElement {
        self.normalize_in_place(&mut g.0);
        g
    }

    pub fn normalize_in_place(&self, g: &mut [i64]) {
        for (c, &n) in g.iter_mut().zip(&self.moduli) {
            if n != 0 {
                *c = c.rem_euclid(n as i64);
            }
        }
    }

    pub fn add(&self, a: &GroupElement, b: &GroupElement) -> GroupElement {
        let v = a.0.iter().zip(&b.0).map(|(x, y)| x + y).collect();
        self.normalize(GroupElement(v))
    }

    pub fn neg(&self, a: &GroupElement) -> GroupElement {
        self.normalize(GroupElement(a.0.iter().map(|x| -x).collect()))
    }

    pub fn sub(&self, a: &GroupElement, b: &GroupElement) -> GroupElement {
        self.add(a, &self.neg(b))
    }

    pub fn contains(&self, g: &GroupElement) -> bool {
        g.0.len() == self.rank()
            && g.0.iter().zip(&self.moduli).all(|(&c, &n)| n == 0 || (c >= 0 && (c as u64) < n))
    }

    /// Distinct elements whose coordinates are residues of `[-radius, radius]`.
    ///
    /// A cyclic coordinate of order at most `2·radius + 1` contributes all of `Z/n`.
    pub fn box_elements(&self, radius: u32) -> Vec<GroupElement> {
        let r = i64::from(radius);
        let ranges: Vec<Vec<i64>> = self
            .moduli
            .iter()
            .map(|&n| {
                if n != 0 && n <= 2 * radius as u64 + 1 {
                    (0..n as i64).collect()
                } else {
                    let mut v: Vec<i64> = (-r..=r).collect();
                    if n != 0 {
                        for c in &mut v {
                            *c = c.rem_euclid(n as i64);
                        }
                    }
                    v
                }
            })
            .collect();
        let mut out = vec![Vec::with_capacity(self.rank())];
        for range in &ranges {
            let mut next = Vec::with_capacity(out.len() * range.len());
            for prefix in &out {
                for &c in range {
                    let mut v = prefix.clone();
                    v.push(c);
                    next.push(v);
                }
            }
            out = next;
        }
        out.into_iter().map(GroupElement).collect()
    }

    /// Direct product of two groups.
    pub fn product(&self, other: &GroupDesc) -> GroupDesc {
        let mut moduli = self.moduli.clone();
        moduli.extend_from_slice(&other.moduli);
        GroupDesc { moduli }
    }
}

/// Group element: one integer per coordinate, cyclic coordinates in `[0, n)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GroupElement(pub Vec<i64>);

impl GroupElement {
    pub fn coords(&self) -> &[i64] {
        &self.0
    }
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(i64::to_string).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// A point of the level-`k` truncation.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Point {
    pub level: u32,
    pub residues: Vec<u64>,
}

impl Point {
    pub fn new(level: u32, residues: Vec<u64>) -> Self {
        Self { level, residues }
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.residues.iter().map(u64::to_string).collect();
        write!(f, "({})@{}", parts.join(","), self.level)
    }
}

/// Product system of cyclic and odometer factors.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SystemSpec {
    factors: Vec<Factor>,
}

impl SystemSpec {
    pub fn new(factors: Vec<Factor>) -> Result<Self, DynamicsError> {
        if factors.is_empty() {
            return Err(DynamicsError::Empty);
        }
        for f in &factors {
            match f {
                Factor::Cyclic(0) => {
                    return Err(DynamicsError::InvalidFactor("cyclic modulus must be at least 1".into()))
                }
                Factor::Odometer(m) if !m.is_supernatural() => {
                    return Err(DynamicsError::InvalidFactor(format!("{m} is not supernatural")))
                }
                _ => {}
            }
        }
        Ok(Self { factors })
    }

    /// `⊠ α_{M_i}`.
    pub fn odometers(ms: &[Supernatural]) -> Result<Self, DynamicsError> {
        Self::new(ms.iter().cloned().map(Factor::Odometer).collect())
    }

    /// `⊠ λ_{n_i}`.
    pub fn cyclics(ns: &[u64]) -> Result<Self, DynamicsError> {
        Self::new(ns.iter().map(|&n| Factor::Cyclic(n)).collect())
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn dim(&self) -> usize {
        self.factors.len()
    }

    pub fn group(&self) -> GroupDesc {
        GroupDesc::new(self.factors.iter().map(Factor::group_modulus).collect())
    }

    /// Concatenation `self ⊠ other`.
    pub fn product(&self, other: &SystemSpec) -> SystemSpec {
        let mut factors = self.factors.clone();
        factors.extend(other.factors.iter().cloned());
        SystemSpec { factors }
    }

    /// Sub-system on the given coordinates, in that order.
    pub fn select(&self, coords: &[usize]) -> SystemSpec {
        SystemSpec { factors: coords.iter().map(|&i| self.factors[i].clone()).collect() }
    }

    pub fn moduli(&self, level: u32) -> Result<Vec<u64>, DynamicsError> {
        self.factors.iter().map(|f| level_modulus(f, level)).collect()
    }

    pub fn grid(&self, level: u32) -> Result<Grid, DynamicsError> {
        Grid::new(self.moduli(level)?)
    }

    pub fn point_count(&self, level: u32) -> Result<u128, DynamicsError> {
        Ok(self.moduli(level)?.iter().map(|&m| u128::from(m)).product())
    }

    pub fn check_point(&self, x: &Point) -> Result<(), DynamicsError> {
        if x.residues.len() != self.dim() {
            return Err(DynamicsError::Shape { expected: self.dim(), got: x.residues.len() });
        }
        for (&r, m) in x.residues.iter().zip(self.moduli(x.level)?) {
            if r >= m {
                return Err(DynamicsError::Residue { residue: r, modulus: m });
            }
        }
        Ok(())
    }

    /// Coordinate-wise translation of `x` by `g`.
    pub fn act(&self, g: &GroupElement, x: &Point) -> Result<Point, DynamicsError> {
        if g.0.len() != self.dim() {
            return Err(DynamicsError::Shape { expected: self.dim(), got: g.0.len() });
        }
        self.check_point(x)?;
        let moduli = self.moduli(x.level)?;
        let residues = x
            .residues
            .iter()
            .zip(&g.0)
            .zip(&moduli)
            .map(|((&r, &c), &m)| add_mod(r, c, m))
            .collect();
        Ok(Point { level: x.level, residues })
    }

    /// Reduction of `x` to a lower (or equal) level.
    pub fn project_to(&self, x: &Point, level: u32) -> Result<Point, DynamicsError> {
        if level > x.level {
            return Err(DynamicsError::Level { have: x.level, need: level });
        }
        let moduli = self.moduli(level)?;
        let residues = x.residues.iter().zip(&moduli).map(|(&r, &m)| r % m).collect();
        Ok(Point { level, residues })
    }

    /// Reduction from level `k` to `k - 1`.
    pub fn project(&self, x: &Point) -> Result<Point, DynamicsError> {
        if x.level == 0 {
            return Err(DynamicsError::Level { have: 0, need: 1 });
        }
        self.project_to(x, x.level - 1)
    }

    /// All level-`k` points in lexicographic residue order.
    pub fn enumerate_points(&self, level: u32) -> Result<Vec<Point>, DynamicsError> {
        self.enumerate_points_guarded(level, DEFAULT_POINT_GUARD)
    }

    pub fn enumerate_points_guarded(&self, level: u32, guard: u64) -> Result<Vec<Point>, DynamicsError> {
        let count = self.point_count(level)?;
        if count > u128::from(guard) {
            return Err(DynamicsError::Guard { count, guard });
        }
        let grid = self.grid(level)?;
        Ok((0..grid.size()).map(|i| Point { level, residues: grid.residues(i) }).collect())
    }

    /// `[x, g.x, g².x, ...]` with `steps + 1` entries.
    pub fn orbit(&self, x: &Point, g: &GroupElement, steps: usize) -> Result<Vec<Point>, DynamicsError> {
        let mut out = Vec::with_capacity(steps + 1);
        let mut cur = x.clone();
        self.check_point(&cur)?;
        out.push(cur.clone());
        for _ in 0..steps {
            cur = self.act(g, &cur)?;
            out.push(cur.clone());
        }
        Ok(out)
    }

    /// Parses `odo:<expr>` / `cyc:<n>` factors separated by commas. A bare
    /// expression is read as an odometer.
    pub fn parse(text: &str) -> Result<Self, DynamicsError> {
        let mut factors = Vec::new();
        for part in text.split(',') {
            let part = part.trim();
            if let Some(n) = part.strip_prefix("cyc:") {
                let n: u64 = n
                    .trim()
                    .parse()
                    .map_err(|_| DynamicsError::InvalidFactor(format!("bad cyclic modulus `{n}`")))?;
                factors.push(Factor::cyclic(n)?);
            } else {
                let expr = part.strip_prefix("odo:").unwrap_or(part);
                factors.push(Factor::odometer(Supernatural::parse(expr)?)?);
            }
        }
        Self::new(factors)
    }
}

impl fmt::Display for SystemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.factors.iter().map(Factor::to_string).collect();
        f.write_str(&parts.join(","))
    }
}

impl FromStr for SystemSpec {
    type Err = DynamicsError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::parse(s)
    }
}

impl Serialize for SystemSpec {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for SystemSpec {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Self::parse(&s).map_err(serde::de::Error::custom)
    }
}

#[inline]
pub fn add_mod(r: u64, c: i64, m: u64) -> u64 {
    const SMALL: u64 = 1 << 62;
    if r < SMALL && m < SMALL && c.unsigned_abs() < SMALL {
        let s = r as i64 + c;
        if 0 <= s && s < m as i64 {
            return s as u64;
        }
        return s.rem_euclid(m as i64) as u64;
    }
    let m = m as i128;
    ((r as i128 + c as i128).rem_euclid(m)) as u64
}

/// Mixed-radix indexing of a level: index `Σ r_i · stride_i`, first coordinate most significant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grid {
    moduli: Vec<u64>,
    strides: Vec<u64>,
    size: usize,
}

impl Grid {
    pub fn new(moduli: Vec<u64>) -> Result<Self, DynamicsError> {
        let mut strides = vec![1u64; moduli.len()];
        let mut acc: u64 = 1;
        for i in (0..moduli.len()).rev() {
            strides[i] = acc;
            acc = acc.checked_mul(moduli[i]).ok_or(DynamicsError::Overflow)?;
        }
        let size = usize::try_from(acc).map_err(|_| DynamicsError::Overflow)?;
        Ok(Self { moduli, strides, size })
    }

    pub fn moduli(&self) -> &[u64] {
        &self.moduli
    }

    pub fn strides(&self) -> &[u64] {
        &self.strides
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn dim(&self) -> usize {
        self.moduli.len()
    }

    #[inline]
    pub fn index(&self, residues: &[u64]) -> usize {
        residues.iter().zip(&self.strides).map(|(r, s)| r * s).sum::<u64>() as usize
    }

    #[inline]
    pub fn residue(&self, idx: usize, coord: usize) -> u64 {
        (idx as u64 / self.strides[coord]) % self.moduli[coord]
    }

    pub fn residues(&self, idx: usize) -> Vec<u64> {
        (0..self.dim()).map(|c| self.residue(idx, c)).collect()
    }

    pub fn residues_into(&self, idx: usize, out: &mut [u64]) {
        for (c, o) in out.iter_mut().enumerate() {
            *o = self.residue(idx, c);
        }
    }

    /// Index of `g.x`.
    #[inline]
    pub fn act(&self, idx: usize, g: &[i64]) -> usize {
        let mut out = 0u64;
        for c in 0..self.dim() {
            let r = self.residue(idx, c);
            out += add_mod(r, g[c], self.moduli[c]) * self.strides[c];
        }
        out as usize
    }

    /// Index of `e_coord^{delta}.x`.
    #[inline]
    pub fn shift(&self, idx: usize, coord: usize, delta: i64) -> usize {
        let r = self.residue(idx, coord);
        let nr = add_mod(r, delta, self.moduli[coord]);
        (idx as u64 - r * self.strides[coord] + nr * self.strides[coord]) as usize
    }

    /// Index in `lower` of the reduction of `idx`; `lower` must be a coarser level of the same system.
    #[inline]
    pub fn project_index(&self, idx: usize, lower: &Grid) -> usize {
        let mut out = 0u64;
        for c in 0..self.dim() {
            out += (self.residue(idx, c) % lower.moduli[c]) * lower.strides[c];
        }
        out as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(s: &str) -> SystemSpec {
        s.parse().unwrap()
    }

    #[test]
    fn level_modulus_examples() {
        let m = Factor::Odometer("2^inf*3^2".parse().unwrap());
        assert_eq!(level_modulus(&m, 3).unwrap(), 72);
        assert_eq!(level_modulus(&Factor::Odometer("5*2^inf".parse().unwrap()), 1).unwrap(), 10);
        assert_eq!(level_modulus(&Factor::Cyclic(7), 0).unwrap(), 7);
        assert_eq!(level_modulus(&m, 0).unwrap(), 1);
        // a finite odometer modulus as a plain supernatural value
        assert_eq!(supernatural_level_modulus(&"5".parse().unwrap(), 1).unwrap(), 5);
    }

    #[test]
    fn act_examples() {
        let s = spec("odo:2^inf");
        let x = Point::new(3, vec![6]);
        assert_eq!(s.act(&GroupElement(vec![3]), &x).unwrap(), Point::new(3, vec![1]));
        assert_eq!(s.act(&GroupElement(vec![0]), &x).unwrap(), x);
        let s2 = spec("cyc:2,odo:3^inf");
        let y = Point::new(1, vec![1, 1]);
        assert_eq!(s2.act(&GroupElement(vec![1, 2]), &y).unwrap(), Point::new(1, vec![0, 0]));
        assert!(s2.act(&GroupElement(vec![1]), &y).is_err());
        assert!(s2.act(&GroupElement(vec![0, 0]), &Point::new(1, vec![2, 0])).is_err());
    }

    #[test]
    fn project_examples() {
        let s = spec("odo:2^inf");
        assert_eq!(s.project(&Point::new(3, vec![6])).unwrap(), Point::new(2, vec![2]));
        assert!(s.project(&Point::new(0, vec![0])).is_err());
        let c = spec("cyc:5,odo:3^inf");
        assert_eq!(c.project(&Point::new(2, vec![4, 7])).unwrap(), Point::new(1, vec![4, 1]));
    }

    #[test]
    fn projection_commutes_with_action() {
        let s = spec("odo:2^inf");
        for k in 1..=3 {
            for x in s.enumerate_points(k).unwrap() {
                for g in -6..=6 {
                    let g = GroupElement(vec![g]);
                    let lhs = s.project(&s.act(&g, &x).unwrap()).unwrap();
                    let rhs = s.act(&g, &s.project(&x).unwrap()).unwrap();
                    assert_eq!(lhs, rhs);
                }
            }
        }
    }

    #[test]
    fn enumeration_and_orbits() {
        let s = spec("odo:2^inf");
        let pts = s.enumerate_points(1).unwrap();
        assert_eq!(pts, vec![Point::new(1, vec![0]), Point::new(1, vec![1])]);
        let c = spec("cyc:2,cyc:3");
        for k in 0..3 {
            assert_eq!(c.enumerate_points(k).unwrap().len(), 6);
        }
        let orb = s.orbit(&Point::new(2, vec![0]), &GroupElement(vec![1]), 5).unwrap();
        assert_eq!(orb.len(), 6);
        assert_eq!(orb[4], Point::new(2, vec![0]));
        let big = spec("odo:2^inf,odo:3^inf");
        assert!(matches!(big.enumerate_points_guarded(6, 1000), Err(DynamicsError::Guard { .. })));
    }

    #[test]
    fn spec_literals() {
        let s = spec("odo:5*2^inf, cyc:3, 3^inf");
        assert_eq!(s.to_string(), "odo:2^inf*5,cyc:3,odo:3^inf");
        assert_eq!(s.group().moduli(), &[0, 3, 0]);
        assert!(SystemSpec::parse("odo:12").is_err());
        assert!(SystemSpec::parse("cyc:0").is_err());
        assert!(SystemSpec::parse("cyc:x").is_err());
    }

    #[test]
    fn grid_arithmetic() {
        let g = Grid::new(vec![3, 4]).unwrap();
        assert_eq!(g.size(), 12);
        assert_eq!(g.index(&[2, 1]), 9);
        assert_eq!(g.residues(9), vec![2, 1]);
        assert_eq!(g.act(9, &[1, -2]), g.index(&[0, 3]));
        assert_eq!(g.shift(9, 1, 5), g.index(&[2, 2]));
        let lower = Grid::new(vec![3, 2]).unwrap();
        assert_eq!(g.project_index(g.index(&[2, 3]), &lower), lower.index(&[2, 1]));
    }

    #[test]
    fn min_level_search() {
        let m: Supernatural = "3*2^inf".parse().unwrap();
        assert_eq!(min_level_for(&m, 3).unwrap(), 1);
        assert_eq!(min_level_for(&m, 24).unwrap(), 3);
        assert!(min_level_for(&m, 5).is_err());
    }

    #[test]
    fn box_elements_cover_cyclic_groups() {
        let g = GroupDesc::new(vec![3, 0]);
        let b = g.box_elements(2);
        assert_eq!(b.len(), 3 * 5);
        let g = GroupDesc::new(vec![10]);
        assert_eq!(g.box_elements(2).len(), 5);
        assert!(g.box_elements(2).iter().all(|e| g.contains(e)));
    }
}
