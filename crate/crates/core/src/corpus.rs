//! Seeded random instances for cross-checks.
//!
//! Factors are supernatural numbers over a small prime set with exponents in
//! `{0, …, max_exponent, ∞}` and at least one infinite exponent. Positive
//! instances are built by moves that preserve orbit equivalence (finite prime
//! powers redistributed between factors) or conjugacy (finite exponents
//! permuted inside a class).

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::supernatural::{Exponent, Supernatural};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    pub seed: u64,
    pub ms: Vec<Supernatural>,
    pub ns: Vec<Supernatural>,
    /// Built by an equivalence-preserving move; otherwise both sides are independent.
    pub constructed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CorpusParams {
    pub max_len: usize,
    pub primes: &'static [u64],
    pub max_exponent: u64,
    /// Largest number of distinct primes in one factor.
    pub max_support: usize,
}

impl Default for CorpusParams {
    fn default() -> Self {
        Self { max_len: 3, primes: &[2, 3, 5, 7, 11, 13], max_exponent: 3, max_support: 3 }
    }
}

fn exponent(rng: &mut impl Rng, max: u64) -> Exponent {
    match rng.gen_range(0..=max + 1) {
        e if e > max => Exponent::Infinite,
        e => Exponent::finite(e),
    }
}

pub fn random_factor(rng: &mut impl Rng, params: &CorpusParams) -> Supernatural {
    let k = rng.gen_range(1..=params.max_support.min(params.primes.len()));
    let chosen: Vec<u64> = params.primes.choose_multiple(rng, k).copied().collect();
    let mut pairs: Vec<(u64, Exponent)> = chosen.iter().map(|&p| (p, exponent(rng, params.max_exponent))).collect();
    if !pairs.iter().any(|(_, e)| e.is_infinite()) {
        let i = rng.gen_range(0..pairs.len());
        pairs[i].1 = Exponent::Infinite;
    }
    Supernatural::from_factors(pairs).expect("primes")
}

pub fn random_side(rng: &mut impl Rng, len: usize, params: &CorpusParams) -> Vec<Supernatural> {
    (0..len).map(|_| random_factor(rng, params)).collect()
}

fn finite_exponent(m: &Supernatural, p: u64) -> Option<u64> {
    m.valuation(p).as_u64()
}

fn with_exponent(m: &Supernatural, p: u64, e: u64) -> Supernatural {
    let pairs = m.factors().filter(|&(q, _)| q != p).map(|(q, e)| (q, e.clone())).chain([(p, Exponent::finite(e))]);
    Supernatural::from_factors(pairs.collect::<Vec<_>>()).expect("primes")
}

/// An orbit-equivalent partner: same class keys, same total product.
pub fn coe_partner(rng: &mut impl Rng, ms: &[Supernatural], params: &CorpusParams) -> Vec<Supernatural> {
    let mut ns = ms.to_vec();
    for &p in params.primes {
        let finite: Vec<usize> = (0..ns.len()).filter(|&i| finite_exponent(&ns[i], p).is_some()).collect();
        if finite.is_empty() {
            continue;
        }
        if finite.len() < ns.len() {
            // some factor carries p^∞: finite p-parts are free
            for &i in &finite {
                ns[i] = with_exponent(&ns[i], p, rng.gen_range(0..=params.max_exponent));
            }
        } else {
            let total: u64 = finite.iter().map(|&i| finite_exponent(&ns[i], p).unwrap_or(0)).sum();
            let mut share = vec![0u64; finite.len()];
            for _ in 0..total {
                share[rng.gen_range(0..finite.len())] += 1;
            }
            for (&i, &e) in finite.iter().zip(&share) {
                ns[i] = with_exponent(&ns[i], p, e);
            }
        }
    }
    ns.shuffle(rng);
    ns
}

/// A conjugate partner: inside each class, the finite exponents at every prime are permuted.
pub fn conj_partner(rng: &mut impl Rng, ms: &[Supernatural], params: &CorpusParams) -> Vec<Supernatural> {
    let mut ns = ms.to_vec();
    let mut classes: BTreeMap<_, Vec<usize>> = BTreeMap::new();
    for (i, m) in ms.iter().enumerate() {
        classes.entry(m.class_key()).or_default().push(i);
    }
    for (key, members) in &classes {
        for &p in params.primes.iter().filter(|p| !key.contains(p)) {
            let mut exps: Vec<u64> = members.iter().map(|&i| finite_exponent(&ns[i], p).unwrap_or(0)).collect();
            exps.shuffle(rng);
            for (&i, &e) in members.iter().zip(&exps) {
                ns[i] = with_exponent(&ns[i], p, e);
            }
        }
    }
    ns.shuffle(rng);
    ns
}

fn instance_rng(seed: u64, index: usize) -> (u64, ChaCha8Rng) {
    let s = seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(index as u64);
    (s, ChaCha8Rng::seed_from_u64(s))
}

/// `count` instances; even indices are constructed orbit-equivalent pairs,
/// odd ones independent sides of lengths in `1..=max_len`.
pub fn coe_suite(seed: u64, count: usize, params: &CorpusParams) -> Vec<Instance> {
    (0..count)
        .map(|i| {
            let (s, mut rng) = instance_rng(seed, i);
            let r = rng.gen_range(1..=params.max_len);
            let ms = random_side(&mut rng, r, params);
            if i % 2 == 0 {
                let ns = coe_partner(&mut rng, &ms, params);
                Instance { seed: s, ms, ns, constructed: true }
            } else {
                let len = rng.gen_range(1..=params.max_len);
                let ns = random_side(&mut rng, len, params);
                Instance { seed: s, ms, ns, constructed: false }
            }
        })
        .collect()
}

/// `count` constructed conjugate pairs.
pub fn conj_suite(seed: u64, count: usize, params: &CorpusParams) -> Vec<Instance> {
    (0..count)
        .map(|i| {
            let (s, mut rng) = instance_rng(seed, i);
            let r = rng.gen_range(1..=params.max_len);
            let ms = random_side(&mut rng, r, params);
            let ns = conj_partner(&mut rng, &ms, params);
            Instance { seed: s, ms, ns, constructed: true }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decide::{coe_decide, conj_decide};

    #[test]
    fn suites_are_reproducible() {
        let p = CorpusParams::default();
        assert_eq!(coe_suite(7, 20, &p), coe_suite(7, 20, &p));
        assert_ne!(coe_suite(7, 20, &p), coe_suite(8, 20, &p));
    }

    #[test]
    fn factors_are_supernatural() {
        for inst in coe_suite(1, 100, &CorpusParams::default()) {
            assert!(inst.ms.iter().chain(&inst.ns).all(Supernatural::is_supernatural));
            assert!(inst.ms.len() <= 3 && inst.ns.len() <= 3);
        }
    }

    #[test]
    fn constructed_pairs_are_positive() {
        let p = CorpusParams::default();
        for inst in coe_suite(3, 100, &p).into_iter().filter(|i| i.constructed) {
            assert!(coe_decide(&inst.ms, &inst.ns).unwrap().equivalent(), "{inst:?}");
        }
        for inst in conj_suite(3, 100, &p) {
            assert!(conj_decide(&inst.ms, &inst.ns).unwrap().conjugate, "{inst:?}");
        }
    }
}
