//! Supernatural numbers with finite support.
//!
//! A value is a map from primes to exponents in `{0, 1, 2, ...} ∪ {∞}`. Only
//! finitely many primes carry a nonzero exponent, so the `∼`-class of a value
//! is determined by the set of primes with infinite exponent (its class key).
//! Values whose exponents are all finite are ordinary naturals; they are used
//! as the multipliers `m`, `n` in the decision procedures.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SupernaturalError {
    #[error("syntax error in `{input}`: {reason}")]
    Syntax { input: String, reason: String },
    #[error("base {0} carries an exponent but is not prime")]
    NonPrimeBase(u64),
    #[error("zero is not a supernatural number")]
    Zero,
    #[error("{divisor} does not divide {dividend}")]
    NotDivisible { dividend: String, divisor: String },
    #[error("divisor {0} has an infinite exponent; the quotient is ambiguous")]
    InfiniteDivisor(String),
    #[error("{0} and {1} are not equivalent")]
    NotEquivalent(String, String),
    #[error("{0} does not fit in 64 bits")]
    Overflow(String),
}

/// Exponent of a prime: a natural or `∞`. `Finite < Infinite` in the derived order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Exponent {
    Finite(BigUint),
    Infinite,
}

impl Exponent {
    pub fn zero() -> Self {
        Exponent::Finite(BigUint::zero())
    }

    pub fn finite(e: u64) -> Self {
        Exponent::Finite(BigUint::from(e))
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Exponent::Finite(e) if e.is_zero())
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Exponent::Infinite)
    }

    /// Finite value as `u64`, if it is finite and fits.
    pub fn as_u64(&self) -> Option<u64> {
        match self {
            Exponent::Finite(e) => e.to_u64(),
            Exponent::Infinite => None,
        }
    }

    fn add(&self, other: &Exponent) -> Exponent {
        match (self, other) {
            (Exponent::Finite(a), Exponent::Finite(b)) => Exponent::Finite(a + b),
            _ => Exponent::Infinite,
        }
    }

    /// `min(self, cap)` as a `u64`.
    pub fn capped(&self, cap: u64) -> u64 {
        match self {
            Exponent::Infinite => cap,
            Exponent::Finite(e) => e.to_u64().map_or(cap, |e| e.min(cap)),
        }
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exponent::Finite(e) => write!(f, "{e}"),
            Exponent::Infinite => f.write_str("inf"),
        }
    }
}

/// A finitely supported supernatural number `∏_p p^{v_p}`.
///
/// Zero exponents are never stored, so structural equality is equality of values.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Supernatural {
    factors: BTreeMap<u64, Exponent>,
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n < 4 {
        return true;
    }
    if n % 2 == 0 {
        return false;
    }
    let mut d = 3u64;
    while d.saturating_mul(d) <= n {
        if n % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

/// Trial-division factorization of `n ≥ 1`, primes ascending.
pub fn factorize(mut n: u64) -> Vec<(u64, u64)> {
    let mut out = Vec::new();
    let mut d = 2u64;
    while d.saturating_mul(d) <= n {
        if n % d == 0 {
            let mut e = 0;
            while n % d == 0 {
                n /= d;
                e += 1;
            }
            out.push((d, e));
        }
        d += if d == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

pub fn gcd_u64(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

impl Supernatural {
    pub fn one() -> Self {
        Self::default()
    }

    /// The natural `n`. Panics on `n = 0`.
    pub fn from_u64(n: u64) -> Self {
        assert!(n >= 1, "zero is not a supernatural number");
        let factors = factorize(n)
            .into_iter()
            .map(|(p, e)| (p, Exponent::finite(e)))
            .collect();
        Self { factors }
    }

    /// `p^e`; `p` must be prime.
    pub fn prime_power(p: u64, e: Exponent) -> Result<Self, SupernaturalError> {
        if !is_prime(p) {
            return Err(SupernaturalError::NonPrimeBase(p));
        }
        let mut factors = BTreeMap::new();
        if !e.is_zero() {
            factors.insert(p, e);
        }
        Ok(Self { factors })
    }

    /// `p^∞`; `p` must be prime.
    pub fn prime_infinity(p: u64) -> Result<Self, SupernaturalError> {
        Self::prime_power(p, Exponent::Infinite)
    }

    /// Builds a value from `(prime, exponent)` pairs; exponents of repeated primes add.
    pub fn from_factors<I>(pairs: I) -> Result<Self, SupernaturalError>
    where
        I: IntoIterator<Item = (u64, Exponent)>,
    {
        let mut out = Self::one();
        for (p, e) in pairs {
            out = out.mul(&Self::prime_power(p, e)?);
        }
        Ok(out)
    }

    pub fn valuation(&self, p: u64) -> Exponent {
        self.factors.get(&p).cloned().unwrap_or_else(Exponent::zero)
    }

    /// Primes with nonzero exponent, ascending, with their exponents.
    pub fn factors(&self) -> impl Iterator<Item = (u64, &Exponent)> {
        self.factors.iter().map(|(p, e)| (*p, e))
    }

    pub fn support(&self) -> BTreeSet<u64> {
        self.factors.keys().copied().collect()
    }

    pub fn is_one(&self) -> bool {
        self.factors.is_empty()
    }

    /// Holds iff some exponent is infinite.
    pub fn is_supernatural(&self) -> bool {
        self.factors.values().any(Exponent::is_infinite)
    }

    pub fn is_finite(&self) -> bool {
        !self.is_supernatural()
    }

    /// The natural value, if finite and representable in 64 bits.
    pub fn to_u64(&self) -> Option<u64> {
        let mut acc: u64 = 1;
        for (p, e) in &self.factors {
            let e: u32 = e.as_u64()?.try_into().ok()?;
            acc = acc.checked_mul(p.checked_pow(e)?)?;
        }
        Some(acc)
    }

    pub fn try_to_u64(&self) -> Result<u64, SupernaturalError> {
        self.to_u64()
            .ok_or_else(|| SupernaturalError::Overflow(self.to_string()))
    }

    /// Pointwise exponent addition, `∞ + k = ∞`.
    pub fn mul(&self, other: &Self) -> Self {
        let mut factors = self.factors.clone();
        for (p, e) in &other.factors {
            let v = factors.get(p).map_or_else(|| e.clone(), |cur| cur.add(e));
            factors.insert(*p, v);
        }
        Self { factors }
    }

    /// `v_p(self) ≤ v_p(other)` at every prime.
    pub fn divides(&self, other: &Self) -> bool {
        self.factors
            .iter()
            .all(|(p, e)| *e <= other.valuation(*p))
    }

    pub fn gcd(&self, other: &Self) -> Self {
        let factors = self
            .factors
            .iter()
            .filter_map(|(p, e)| {
                let f = other.factors.get(p)?;
                Some((*p, e.min(f).clone()))
            })
            .collect();
        Self { factors }
    }

    pub fn lcm(&self, other: &Self) -> Self {
        let mut factors = self.factors.clone();
        for (p, e) in &other.factors {
            let v = match factors.get(p) {
                Some(cur) => cur.max(e).clone(),
                None => e.clone(),
            };
            factors.insert(*p, v);
        }
        Self { factors }
    }

    /// Exact quotient by a finite divisor: `v_p(self) − v_p(divisor)`, `∞ − k = ∞`.
    pub fn div_exact(&self, divisor: &Self) -> Result<Self, SupernaturalError> {
        if divisor.is_supernatural() {
            return Err(SupernaturalError::InfiniteDivisor(divisor.to_string()));
        }
        if !divisor.divides(self) {
            return Err(SupernaturalError::NotDivisible {
                dividend: self.to_string(),
                divisor: divisor.to_string(),
            });
        }
        let mut factors = BTreeMap::new();
        for (p, e) in &self.factors {
            let v = match (e, divisor.factors.get(p)) {
                (Exponent::Infinite, _) => Exponent::Infinite,
                (e, None) => e.clone(),
                (Exponent::Finite(a), Some(Exponent::Finite(b))) => Exponent::Finite(a - b),
                (_, Some(Exponent::Infinite)) => unreachable!("checked above"),
            };
            if !v.is_zero() {
                factors.insert(*p, v);
            }
        }
        Ok(Self { factors })
    }

    /// The set of primes with infinite exponent.
    pub fn class_key(&self) -> BTreeSet<u64> {
        self.factors
            .iter()
            .filter(|(_, e)| e.is_infinite())
            .map(|(p, _)| *p)
            .collect()
    }

    /// `self ≲ other`: some natural `n` has `self | n·other`.
    pub fn lesssim(&self, other: &Self) -> bool {
        self.factors
            .iter()
            .filter(|(_, e)| e.is_infinite())
            .all(|(p, _)| other.valuation(*p).is_infinite())
    }

    pub fn sim(&self, other: &Self) -> bool {
        self.class_key() == other.class_key()
    }

    /// Naturals `(m, n)` with `m·self = n·other`. `m` takes the finite excess of
    /// `other`, `n` that of `self`.
    pub fn sim_witness(&self, other: &Self) -> Result<(Self, Self), SupernaturalError> {
        if !self.sim(other) {
            return Err(SupernaturalError::NotEquivalent(
                self.to_string(),
                other.to_string(),
            ));
        }
        let mut m = BTreeMap::new();
        let mut n = BTreeMap::new();
        let primes: BTreeSet<u64> = self.support().union(&other.support()).copied().collect();
        for p in primes {
            match (self.valuation(p), other.valuation(p)) {
                (Exponent::Finite(a), Exponent::Finite(b)) => {
                    if a > b {
                        n.insert(p, Exponent::Finite(a - b));
                    } else if b > a {
                        m.insert(p, Exponent::Finite(b - a));
                    }
                }
                (Exponent::Infinite, Exponent::Infinite) => {}
                _ => unreachable!("class keys agree"),
            }
        }
        Ok((Self { factors: m }, Self { factors: n }))
    }

    /// Parses the `term ("*" term)*` grammar; whitespace is ignored.
    pub fn parse(text: &str) -> Result<Self, SupernaturalError> {
        let compact: String = text.chars().filter(|c| !c.is_whitespace()).collect();
        let syntax = |reason: &str| SupernaturalError::Syntax {
            input: text.to_string(),
            reason: reason.to_string(),
        };
        if compact.is_empty() {
            return Err(syntax("empty expression"));
        }
        let mut out = Self::one();
        for term in compact.split('*') {
            if term.is_empty() {
                return Err(syntax("empty term"));
            }
            let (base, exp) = match term.split_once('^') {
                Some((b, e)) => (b, Some(e)),
                None => (term, None),
            };
            let base = parse_nat_u64(base).ok_or_else(|| syntax("base must be a decimal natural"))?;
            if base == 0 {
                return Err(SupernaturalError::Zero);
            }
            match exp {
                None => out = out.mul(&Self::from_u64(base)),
                Some(e) => {
                    let e = if e == "inf" {
                        Exponent::Infinite
                    } else {
                        if e.is_empty() || !e.bytes().all(|b| b.is_ascii_digit()) {
                            return Err(syntax("exponent must be a natural or `inf`"));
                        }
                        let v: BigUint = e.parse().map_err(|_| syntax("bad exponent"))?;
                        if v.is_zero() {
                            return Err(syntax("exponent must be at least 1"));
                        }
                        Exponent::Finite(v)
                    };
                    out = out.mul(&Self::prime_power(base, e)?);
                }
            }
        }
        Ok(out)
    }
}

fn parse_nat_u64(s: &str) -> Option<u64> {
    if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    s.parse().ok()
}

impl std::ops::Mul for &Supernatural {
    type Output = Supernatural;
    fn mul(self, rhs: &Supernatural) -> Supernatural {
        Supernatural::mul(self, rhs)
    }
}

impl FromStr for Supernatural {
    type Err = SupernaturalError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::parse(s)
    }
}

impl fmt::Display for Supernatural {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.factors.is_empty() {
            return f.write_str("1");
        }
        let mut first = true;
        for (p, e) in &self.factors {
            if !first {
                f.write_str("*")?;
            }
            first = false;
            match e {
                Exponent::Finite(v) if v.is_one() => write!(f, "{p}")?,
                _ => write!(f, "{p}^{e}")?,
            }
        }
        Ok(())
    }
}

impl Serialize for Supernatural {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Supernatural {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Self::parse(&s).map_err(serde::de::Error::custom)
    }
}

/// Parses a comma-separated list of supernatural expressions.
pub fn parse_list(text: &str) -> Result<Vec<Supernatural>, SupernaturalError> {
    text.split(',')
        .map(|t| {
            let t = t.trim();
            Supernatural::parse(t.strip_prefix("odo:").unwrap_or(t))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sn(s: &str) -> Supernatural {
        s.parse().unwrap()
    }

    #[test]
    fn parse_examples() {
        let a = sn("2^inf*3^2");
        assert_eq!(a.valuation(2), Exponent::Infinite);
        assert_eq!(a.valuation(3), Exponent::finite(2));
        assert_eq!(sn("12"), Supernatural::from_factors([(2, Exponent::finite(2)), (3, Exponent::finite(1))]).unwrap());
        assert_eq!(Supernatural::parse("0"), Err(SupernaturalError::Zero));
        assert_eq!(sn(" 3 ^ 2 * 2 ^ inf "), a);
        assert_eq!(sn("1"), Supernatural::one());
    }

    #[test]
    fn parse_rejects() {
        assert!(matches!(Supernatural::parse("4^2"), Err(SupernaturalError::NonPrimeBase(4))));
        assert!(matches!(Supernatural::parse("1^inf"), Err(SupernaturalError::NonPrimeBase(1))));
        assert!(Supernatural::parse("2^").is_err());
        assert!(Supernatural::parse("2^0").is_err());
        assert!(Supernatural::parse("2**3").is_err());
        assert!(Supernatural::parse("bogus").is_err());
        assert!(Supernatural::parse("").is_err());
        assert!(Supernatural::parse("-3").is_err());
    }

    #[test]
    fn display_is_canonical() {
        assert_eq!(sn("3^2*2^inf*5").to_string(), "2^inf*3^2*5");
        assert_eq!(sn("6*6").to_string(), "2^2*3^2");
        assert_eq!(sn("2^100000000000000000000").to_string(), "2^100000000000000000000");
    }

    #[test]
    fn mul_examples() {
        assert_eq!(sn("2^inf").mul(&sn("2^3*5")), sn("2^inf*5"));
        assert_eq!(sn("7*3^inf").mul(&Supernatural::one()), sn("7*3^inf"));
        assert_eq!(sn("3^2").mul(&sn("3")), sn("3^3"));
    }

    #[test]
    fn divides_examples() {
        assert!(sn("12").divides(&sn("3*2^inf")));
        assert!(!sn("5").divides(&sn("2^inf")));
        assert!(sn("2^inf").divides(&sn("2^inf*3")));
    }

    #[test]
    fn gcd_lcm_examples() {
        assert_eq!(sn("6*2^inf").gcd(&sn("4")), sn("4"));
        assert_eq!(sn("2^inf").lcm(&sn("3^inf")), sn("2^inf*3^inf"));
        assert_eq!(sn("2^inf*7").gcd(&Supernatural::one()), Supernatural::one());
    }

    #[test]
    fn div_exact_examples() {
        assert_eq!(sn("5*2^inf").div_exact(&sn("5")).unwrap(), sn("2^inf"));
        assert_eq!(sn("5*2^inf").div_exact(&Supernatural::one()).unwrap(), sn("5*2^inf"));
        assert!(matches!(
            sn("2^inf").div_exact(&sn("2^inf")),
            Err(SupernaturalError::InfiniteDivisor(_))
        ));
        assert!(matches!(
            sn("2^inf").div_exact(&sn("3")),
            Err(SupernaturalError::NotDivisible { .. })
        ));
    }

    #[test]
    fn lesssim_and_sim_examples() {
        assert!(sn("5*2^inf").lesssim(&sn("2^inf")));
        assert!(!sn("2^inf").lesssim(&sn("3^inf")));
        assert!(!sn("2^inf*3^inf").lesssim(&sn("2^inf")));
        assert!(sn("5*2^inf").sim(&sn("2^inf")));
        assert!(!sn("2^inf").sim(&sn("3^inf")));
        let (m, n) = sn("5*2^inf").sim_witness(&sn("2^inf")).unwrap();
        assert_eq!((m, n), (Supernatural::one(), sn("5")));
        let a = sn("3^2*7^inf");
        assert_eq!(a.sim_witness(&a).unwrap(), (Supernatural::one(), Supernatural::one()));
        assert!(sn("2^inf").sim_witness(&sn("3^inf")).is_err());
    }

    #[test]
    fn class_keys() {
        assert_eq!(sn("5*2^inf").class_key(), BTreeSet::from([2]));
        assert!(sn("12").class_key().is_empty());
        assert_eq!(sn("2^inf*3^inf").class_key(), BTreeSet::from([2, 3]));
    }

    #[test]
    fn predicates_and_conversion() {
        assert!(sn("2^inf").is_supernatural());
        assert!(sn("12").is_finite());
        assert_eq!(sn("12").to_u64(), Some(12));
        assert_eq!(sn("2^inf").to_u64(), None);
        assert_eq!(sn("2^70").to_u64(), None);
        assert_eq!(parse_list("odo:5*2^inf, 3^inf").unwrap(), vec![sn("5*2^inf"), sn("3^inf")]);
    }

    #[test]
    fn serde_round_trip() {
        let a = sn("2^inf*3^2*5");
        let json = serde_json::to_string(&a).unwrap();
        assert_eq!(json, "\"2^inf*3^2*5\"");
        let back: Supernatural = serde_json::from_str(&json).unwrap();
        assert_eq!(back, a);
    }
}
