//! Exhaustive witness verification on the default rayon pool and on a
//! single-thread pool. `cargo bench --no-default-features` measures the
//! sequential build instead; both pools then run the same loops.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rayon::ThreadPoolBuilder;

use odocoe::cocycle::{verify_coe, verify_conj, MaterializedCoe, VerifyConfig};
use odocoe::decide::{coe_decide, conj_decide};
use odocoe::supernatural::parse_list;
use odocoe::witness::{build_coe_witness, build_conj_witness};

fn pools() -> Vec<(String, rayon::ThreadPool)> {
    let default = ThreadPoolBuilder::new().build().expect("pool");
    let threads = default.current_num_threads();
    let single = ThreadPoolBuilder::new().num_threads(1).build().expect("pool");
    vec![(format!("default-pool-{threads}"), default), ("single-thread".into(), single)]
}

fn mode() -> &'static str {
    if odocoe::par::is_parallel() {
        "parallel"
    } else {
        "sequential"
    }
}

fn coe_example(c: &mut Criterion) {
    let ms = parse_list("5*2^inf,3^inf").unwrap();
    let ns = parse_list("2^inf,5*3^inf").unwrap();
    let w = build_coe_witness(&coe_decide(&ms, &ns).unwrap()).unwrap();
    let mut group = c.benchmark_group(format!("verify_coe/{}", mode()));
    group.sample_size(10);
    for level in [2, 3] {
        let cfg = VerifyConfig::new(level, 4);
        for (name, pool) in pools() {
            group.bench_with_input(BenchmarkId::new(name, format!("level {level}")), &cfg, |b, cfg| {
                b.iter(|| pool.install(|| black_box(verify_coe(&w, *cfg).unwrap())));
            });
        }
    }
    group.finish();
}

fn coe_tables(c: &mut Criterion) {
    let ms = parse_list("5*2^inf,3^inf").unwrap();
    let ns = parse_list("2^inf,5*3^inf").unwrap();
    let w = build_coe_witness(&coe_decide(&ms, &ns).unwrap()).unwrap();
    let cfg = VerifyConfig::new(3, 4);
    let mut group = c.benchmark_group(format!("materialize/{}", mode()));
    group.sample_size(10);
    for (name, pool) in pools() {
        group.bench_function(name, |b| b.iter(|| pool.install(|| black_box(MaterializedCoe::from_witness(&w, cfg).unwrap()))));
    }
    group.finish();
}

fn conj_named(c: &mut Criterion) {
    let ms = parse_list("2*5^inf,3*5^inf").unwrap();
    let ns = parse_list("3*5^inf,2*5^inf").unwrap();
    let w = build_conj_witness(&conj_decide(&ms, &ns).unwrap()).unwrap();
    let cfg = VerifyConfig::new(2, 6);
    let mut group = c.benchmark_group(format!("verify_conj/{}", mode()));
    group.sample_size(10);
    for (name, pool) in pools() {
        group.bench_function(name, |b| b.iter(|| pool.install(|| black_box(verify_conj(&w, cfg).unwrap()))));
    }
    group.finish();
}

criterion_group!(benches, coe_example, coe_tables, conj_named);
criterion_main!(benches);
