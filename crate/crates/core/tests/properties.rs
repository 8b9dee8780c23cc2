use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::Zero;
use proptest::prelude::*;

use odocoe::decide::{eig_group_oracle, eig_truncation};
use odocoe::intmat::{fab_isomorphic, smith_normal_form, FiniteAbelianGroup, IntMatrix};
use odocoe::{Exponent, Factor, GroupElement, Supernatural, SystemSpec};

const PRIMES: [u64; 4] = [2, 3, 5, 7];

fn exponent() -> impl Strategy<Value = Exponent> {
    prop_oneof![4 => (0u64..4).prop_map(Exponent::finite), 1 => Just(Exponent::Infinite)]
}

fn any_supernatural() -> impl Strategy<Value = Supernatural> {
    proptest::collection::vec(exponent(), PRIMES.len())
        .prop_map(|es| Supernatural::from_factors(PRIMES.iter().copied().zip(es).collect::<Vec<_>>()).unwrap())
}

fn infinite_supernatural() -> impl Strategy<Value = Supernatural> {
    (any_supernatural(), 0..PRIMES.len()).prop_map(|(m, i)| m.mul(&Supernatural::prime_infinity(PRIMES[i]).unwrap()))
}

fn small_odometer() -> impl Strategy<Value = Supernatural> {
    (proptest::collection::vec(0u64..2, 2), 0usize..2).prop_map(|(es, i)| {
        let mut pairs: Vec<(u64, Exponent)> = [2u64, 3].iter().copied().zip(es.into_iter().map(Exponent::finite)).collect();
        pairs[i].1 = Exponent::Infinite;
        Supernatural::from_factors(pairs).unwrap()
    })
}

fn matrix() -> impl Strategy<Value = Vec<Vec<i64>>> {
    (1usize..=4, 1usize..=4).prop_flat_map(|(r, c)| proptest::collection::vec(proptest::collection::vec(-12i64..=12, c), r))
}

/// Element orders counted by walking every element.
fn order_census(orders: &[u64]) -> BTreeMap<u64, u64> {
    let total: u64 = orders.iter().product();
    let mut census = BTreeMap::new();
    for mut idx in 0..total {
        let mut ord = 1u64;
        for &d in orders {
            let x = idx % d;
            idx /= d;
            let o = d / num_integer::gcd(x, d);
            ord = num_integer::lcm(ord, o);
        }
        *census.entry(ord).or_insert(0) += 1;
    }
    census
}

fn small_group() -> impl Strategy<Value = Vec<u64>> {
    proptest::collection::vec(1u64..=16, 1..=3).prop_filter("order at most 64", |v| v.iter().product::<u64>() <= 64)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn gcd_lcm_absorb(a in any_supernatural(), b in any_supernatural()) {
        prop_assert_eq!(a.gcd(&a.lcm(&b)), a.clone());
        prop_assert_eq!(a.lcm(&a.gcd(&b)), a.clone());
        prop_assert!(a.gcd(&b).divides(&a) && a.gcd(&b).divides(&b));
        prop_assert!(a.divides(&a.lcm(&b)) && b.divides(&a.lcm(&b)));
    }

    #[test]
    fn multiplication_commutes_and_associates(a in any_supernatural(), b in any_supernatural(), c in any_supernatural()) {
        prop_assert_eq!(a.mul(&b), b.mul(&a));
        prop_assert_eq!(a.mul(&b).mul(&c), a.mul(&b.mul(&c)));
        prop_assert!(a.divides(&a.mul(&b)));
    }

    #[test]
    fn exact_division_inverts_multiplication(a in any_supernatural(), n in 1u64..500) {
        let n = Supernatural::from_u64(n);
        prop_assert_eq!(a.mul(&n).div_exact(&n).unwrap().mul(&n), a.mul(&n));
    }

    #[test]
    fn display_parses_back(a in any_supernatural()) {
        let text = a.to_string();
        prop_assert_eq!(text.parse::<Supernatural>().unwrap(), a);
    }

    #[test]
    fn sim_is_multiplier_equivalence(a in infinite_supernatural(), m in 1u64..50, n in 1u64..50) {
        let b = a.mul(&Supernatural::from_u64(m));
        let c = a.mul(&Supernatural::from_u64(n));
        prop_assert!(b.sim(&c));
        let (x, y) = b.sim_witness(&c).unwrap();
        prop_assert_eq!(x.mul(&b), y.mul(&c));
    }

    #[test]
    fn smith_form_is_exact(rows in matrix()) {
        let a = IntMatrix::from_rows(&rows).unwrap();
        let d = smith_normal_form(&a);
        prop_assert_eq!(d.u.mul(&a).unwrap().mul(&d.v).unwrap(), d.s.clone());
        prop_assert!(d.s.is_diagonal() && d.u.is_unimodular() && d.v.is_unimodular());
        let inv = d.invariant_factors();
        for w in inv.windows(2) {
            let divides = if w[0].is_zero() { w[1].is_zero() } else { (&w[1] % &w[0]).is_zero() };
            prop_assert!(divides);
        }
        prop_assert!(inv.iter().all(|x| *x >= BigInt::zero()));
    }

    #[test]
    fn smith_form_of_transpose(rows in matrix()) {
        let a = IntMatrix::from_rows(&rows).unwrap();
        prop_assert_eq!(smith_normal_form(&a).invariant_factors(), smith_normal_form(&a.transpose()).invariant_factors());
    }

    #[test]
    fn isomorphism_matches_order_census(a in small_group(), b in small_group()) {
        let (ga, gb) = (FiniteAbelianGroup::new(a.clone()), FiniteAbelianGroup::new(b.clone()));
        prop_assert_eq!(fab_isomorphic(&ga, &gb), order_census(&a) == order_census(&b));
    }

    #[test]
    fn action_is_a_group_action(
        ms in proptest::collection::vec(small_odometer(), 1..=2),
        level in 0u32..4,
        seed in any::<u64>(),
        g in proptest::collection::vec(-20i64..=20, 2),
        h in proptest::collection::vec(-20i64..=20, 2),
    ) {
        let spec = SystemSpec::new(ms.into_iter().map(|m| Factor::odometer(m).unwrap()).collect()).unwrap();
        let n = spec.dim();
        let (g, h) = (GroupElement(g[..n].to_vec()), GroupElement(h[..n].to_vec()));
        let points = spec.enumerate_points(level).unwrap();
        let x = &points[(seed % points.len() as u64) as usize];
        let group = spec.group();
        let lhs = spec.act(&group.add(&g, &h), x).unwrap();
        let rhs = spec.act(&g, &spec.act(&h, x).unwrap()).unwrap();
        prop_assert_eq!(lhs, rhs);
        prop_assert_eq!(spec.act(&group.identity(), x).unwrap(), x.clone());
        // projecting to a coarser level commutes with the action
        for lower in 0..=level {
            let a = spec.project_to(&spec.act(&g, x).unwrap(), lower).unwrap();
            let b = spec.act(&g, &spec.project_to(x, lower).unwrap()).unwrap();
            prop_assert_eq!(a, b);
        }
    }

    #[test]
    fn eigenvalue_truncation_matches_enumeration(m in infinite_supernatural(), k in -12i64..=12, level in 0u32..=3) {
        if let Ok(oracle) = eig_group_oracle(&m, k, level) {
            prop_assert_eq!(eig_truncation(&m, k, level).unwrap(), oracle);
        }
    }
}
