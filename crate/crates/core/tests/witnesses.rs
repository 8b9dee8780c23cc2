use odocoe::cocycle::{
    compose_coe, verify_coe, verify_coe_tables, verify_conj, verify_conj_tables, Cocycle, CoeWitness, GroupHom,
    LevelTable, MaterializedCoe, MaterializedConj, PointMap, TableCocycle, TableMap, VerifyConfig,
};
use odocoe::decide::{coe_decide, conj_decide};
use odocoe::supernatural::parse_list;
use odocoe::witness::{build_coe_witness, build_conj_witness};

fn cfg() -> VerifyConfig {
    VerifyConfig::new(2, 3)
}

fn example() -> CoeWitness {
    let d = coe_decide(&parse_list("5*2^inf,3^inf").unwrap(), &parse_list("2^inf,5*3^inf").unwrap()).unwrap();
    build_coe_witness(&d).unwrap()
}

fn with_map(m: &TableMap, edit: impl FnOnce(&mut Vec<LevelTable>)) -> TableMap {
    let mut levels = m.levels().to_vec();
    edit(&mut levels);
    TableMap::new(m.source().clone(), m.target().clone(), levels).unwrap()
}

fn with_values(a: &TableCocycle, edit: impl FnOnce(&mut Vec<i64>)) -> TableCocycle {
    let mut values = a.values().to_vec();
    edit(&mut values);
    TableCocycle::new(a.source().clone(), a.target().clone(), a.level(), values).unwrap()
}

#[test]
fn example_tables_verify() {
    let m = MaterializedCoe::from_witness(&example(), cfg()).unwrap();
    let report = verify_coe_tables(&m, cfg()).unwrap();
    assert!(report.passed(), "{report}");
    assert!(report.checks.iter().all(|c| c.checked > 0));
}

#[test]
fn swapped_images_are_caught() {
    let mut m = MaterializedCoe::from_witness(&example(), cfg()).unwrap();
    let top = cfg().level as usize;
    m.phi = with_map(&m.phi, |levels| levels[top].images.swap(0, 1));
    let report = verify_coe_tables(&m, cfg()).unwrap();
    assert!(!report.passed());
}

#[test]
fn collapsed_image_is_caught() {
    let mut m = MaterializedCoe::from_witness(&example(), cfg()).unwrap();
    let top = cfg().level as usize;
    m.psi = with_map(&m.psi, |levels| {
        let first = levels[top].images[0];
        levels[top].images[1] = first;
    });
    assert!(!verify_coe_tables(&m, cfg()).unwrap().passed());
}

#[test]
fn perturbed_cocycle_is_caught() {
    let base = MaterializedCoe::from_witness(&example(), cfg()).unwrap();
    for which in 0..2 {
        let mut m = base.clone();
        if which == 0 {
            m.a = with_values(&m.a, |v| v[0] += 1);
        } else {
            let last = m.b.values().len() - 1;
            m.b = with_values(&m.b, |v| v[last] -= 1);
        }
        let report = verify_coe_tables(&m, cfg()).unwrap();
        assert!(!report.passed(), "perturbation {which} passed:\n{report}");
    }
}

#[test]
fn composition_with_inverse_verifies() {
    let w = example();
    let round = compose_coe(&w, &w.inverse()).unwrap();
    assert_eq!(round.source(), round.target());
    assert!(verify_coe(&round, cfg()).unwrap().passed());
}

#[test]
fn conjugacy_with_wrong_rho_is_caught() {
    let d = conj_decide(&parse_list("2*5^inf,3*5^inf").unwrap(), &parse_list("3*5^inf,2*5^inf").unwrap()).unwrap();
    let w = build_conj_witness(&d).unwrap();
    assert!(verify_conj(&w, cfg()).unwrap().passed());
    let mut m = MaterializedConj::from_witness(&w, cfg()).unwrap();
    assert!(verify_conj_tables(&m, cfg()).unwrap().passed());
    let negated: Vec<Vec<i64>> = m.rho.matrix().iter().map(|row| row.iter().map(|x| -x).collect()).collect();
    m.rho = GroupHom::new(m.rho.source().clone(), m.rho.target().clone(), negated).unwrap();
    assert!(!verify_conj_tables(&m, cfg()).unwrap().passed());
}

#[test]
fn conjugacy_as_orbit_equivalence() {
    let d = conj_decide(&parse_list("4*3^inf,2^inf").unwrap(), &parse_list("2^inf,4*3^inf").unwrap()).unwrap();
    let w = build_conj_witness(&d).unwrap();
    assert!(verify_coe(&w.to_coe().unwrap(), cfg()).unwrap().passed());
}
