use criterion::{criterion_group, criterion_main, Criterion};
use extractomat::extractors::explicit::{ip_handle, toeplitz_handle};
use extractomat::oracle::{worst_case_error_2source, worst_case_error_seeded, OracleOptions, DEFAULT_BUDGET};
use extractomat::OracleMode;
use std::hint::black_box;

fn oracle(c: &mut Criterion) {
    let exhaustive = OracleOptions { mode: OracleMode::Exhaustive, budget: DEFAULT_BUDGET };
    let reduced = OracleOptions { mode: OracleMode::Reduced, budget: DEFAULT_BUDGET };
    let toeplitz = toeplitz_handle(4, 1).unwrap();
    c.bench_function("toeplitz4x1 strong seeded k=2 exhaustive", |b| {
        b.iter(|| worst_case_error_seeded(black_box(&toeplitz), 2, true, exhaustive.clone()).unwrap())
    });
    let ip = ip_handle(4).unwrap();
    c.bench_function("ip4 k1=k2=2 reduced", |b| b.iter(|| worst_case_error_2source(black_box(&ip), 2, 2, None, reduced.clone()).unwrap()));
    c.bench_function("ip4 k1=k2=3 reduced", |b| b.iter(|| worst_case_error_2source(black_box(&ip), 3, 3, None, reduced.clone()).unwrap()));
}

criterion_group!(benches, oracle);
criterion_main!(benches);
