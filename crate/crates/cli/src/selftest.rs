use std::fmt::Write as _;

use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use odocoe::cocycle::{CocycleError, VerifyConfig};
use odocoe::corpus::{coe_suite, conj_suite, CorpusParams};
use odocoe::decide::{coe_decide, conj_decide, eig_group_oracle, eig_truncation, k_invariant, k_invariant_equal};
use odocoe::dynamics::DynamicsError;
use odocoe::intmat::{smith_normal_form, IntMatrix};
use odocoe::witness::{build_coe_witness_fitted, build_conj_witness_fitted, WitnessError};
use odocoe::Supernatural;

use crate::{Failure, Outcome};

/// Witness checks run at level ≤ 2, radius 2, on at most this many cylinders.
const WITNESS_GUARD: u64 = 20_000;

#[derive(Serialize)]
struct Tally {
    name: &'static str,
    checked: usize,
    failed: usize,
    skipped: usize,
    examples: Vec<String>,
}

impl Tally {
    fn new(name: &'static str) -> Self {
        Self { name, checked: 0, failed: 0, skipped: 0, examples: Vec::new() }
    }

    fn record(&mut self, ok: bool, example: impl FnOnce() -> String) {
        self.checked += 1;
        if !ok {
            self.failed += 1;
            if self.examples.len() < 5 {
                self.examples.push(example());
            }
        }
    }
}

fn show(xs: &[Supernatural]) -> String {
    xs.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

fn too_large(e: &WitnessError) -> bool {
    matches!(e, WitnessError::Cocycle(CocycleError::Dynamics(DynamicsError::Guard { .. })))
}

fn snf_ok(a: &IntMatrix) -> bool {
    let d = smith_normal_form(a);
    let chain = d.invariant_factors();
    let divides = chain.windows(2).all(|w| if w[0] == BigInt::from(0) { w[1] == BigInt::from(0) } else { &w[1] % &w[0] == BigInt::from(0) });
    let product = d.u.mul(a).and_then(|x| x.mul(&d.v));
    d.s.is_diagonal() && d.u.is_unimodular() && d.v.is_unimodular() && divides && product.is_ok_and(|p| p == d.s)
}

pub fn run(seed: u64, count: usize, json: bool) -> Result<Outcome, Failure> {
    let params = CorpusParams::default();
    let budget = VerifyConfig { level: 2, radius: 2, guard: WITNESS_GUARD };
    let mut kinv = Tally::new("coe-decision-vs-k-invariant");
    let mut coe_w = Tally::new("coe-witness");
    for inst in coe_suite(seed, count, &params) {
        let d = coe_decide(&inst.ms, &inst.ns)?;
        let same = k_invariant_equal(&k_invariant(&inst.ms)?, &k_invariant(&inst.ns)?);
        kinv.record(same == d.equivalent() && (!inst.constructed || d.equivalent()), || {
            format!("seed {}: ({}) vs ({})", inst.seed, show(&inst.ms), show(&inst.ns))
        });
        if d.equivalent() && inst.ms.len() <= 2 {
            match build_coe_witness_fitted(&d, budget) {
                Err(e) if too_large(&e) => coe_w.skipped += 1,
                r => coe_w.record(r.is_ok(), || format!("seed {}: {}", inst.seed, r.err().map(|e| e.to_string()).unwrap_or_default())),
            }
        }
    }
    let mut conj = Tally::new("conj-decision-and-witness");
    for inst in conj_suite(seed, count / 4, &params) {
        let d = conj_decide(&inst.ms, &inst.ns)?;
        let ok = d.conjugate && d.verify().is_ok();
        if !ok || inst.ms.len() > 2 {
            conj.record(ok, || format!("seed {}: ({}) vs ({})", inst.seed, show(&inst.ms), show(&inst.ns)));
            continue;
        }
        match build_conj_witness_fitted(&d, budget) {
            Err(e) if too_large(&e) => conj.skipped += 1,
            r => conj.record(r.is_ok(), || format!("seed {}: {}", inst.seed, r.err().map(|e| e.to_string()).unwrap_or_default())),
        }
    }
    let mut snf = Tally::new("smith-normal-form");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..count {
        let (r, c) = (rng.gen_range(1..=5), rng.gen_range(1..=5));
        let rows: Vec<Vec<i64>> = (0..r).map(|_| (0..c).map(|_| rng.gen_range(-20..=20)).collect()).collect();
        let a = IntMatrix::from_rows(&rows).expect("rectangular");
        snf.record(snf_ok(&a), || format!("{a}"));
    }
    let mut eig = Tally::new("eigenvalue-truncations");
    for _ in 0..count {
        let m: Supernatural = ["2^inf", "3*2^inf", "9*5^inf", "2^inf*3^inf", "4*3^inf*5"][rng.gen_range(0..5)]
            .parse()
            .expect("literal");
        let (k, level) = (rng.gen_range(-12..=12), rng.gen_range(0..=4));
        let ok = eig_truncation(&m, k, level)? == eig_group_oracle(&m, k, level)?;
        eig.record(ok, || format!("M = {m}, k = {k}, level {level}"));
    }
    let tallies = [kinv, coe_w, conj, snf, eig];
    let positive = tallies.iter().all(|t| t.failed == 0);
    if json {
        let value = serde_json::json!({ "seed": seed, "count": count, "passed": positive, "checks": tallies });
        return Ok(Outcome { positive, text: serde_json::to_string_pretty(&value).expect("serializes") });
    }
    let mut text = format!("selftest seed {seed}, {count} instances\n");
    for t in &tallies {
        let status = if t.failed == 0 { "ok" } else { "FAILED" };
        let _ = writeln!(text, "  {:<28} {status:<6} {} checked, {} failed, {} skipped", t.name, t.checked, t.failed, t.skipped);
        for e in &t.examples {
            let _ = writeln!(text, "    {e}");
        }
    }
    text.push_str(if positive { "all checks passed\n" } else { "selftest FAILED\n" });
    Ok(Outcome { positive, text })
}
