//! Algebra benchmarks: series/concatenation products, exchange, the Itô
//! composition route, and netlist reduction end to end.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use slhnet_bench::{cavity_fixture, example_netlist};
use slhnet_cli::commands::{cmd_reduce, CommandOptions};
use slhnet_core::{coefficients_to_slh, ito_coefficients, ito_compose};

fn bench_series(c: &mut Criterion) {
    let mut group = c.benchmark_group("series_product");
    for cutoff in [8usize, 16, 32] {
        let (_reg, _f, cav) = cavity_fixture(cutoff);
        group.bench_with_input(BenchmarkId::from_parameter(cutoff), &cav, |b, cav| {
            b.iter(|| black_box(cav.series(black_box(cav)).unwrap()));
        });
    }
    group.finish();
}

fn bench_exchange(c: &mut Criterion) {
    let (_reg, _f, cav) = cavity_fixture(16);
    c.bench_function("exchange_past_16", |b| {
        b.iter(|| black_box(cav.exchange_past(black_box(&cav)).unwrap()));
    });
}

fn bench_ito_route(c: &mut Criterion) {
    let (_reg, _f, cav) = cavity_fixture(16);
    c.bench_function("ito_compose_roundtrip_16", |b| {
        b.iter(|| {
            let composed =
                ito_compose(&ito_coefficients(&cav), &ito_coefficients(&cav)).unwrap();
            black_box(coefficients_to_slh(&composed, 1e-8).unwrap())
        });
    });
}

fn bench_netlist_reduce(c: &mut Criterion) {
    let text = example_netlist();
    c.bench_function("cmd_reduce_netlist", |b| {
        b.iter(|| black_box(cmd_reduce(black_box(&text), &CommandOptions::default()).unwrap()));
    });
}

criterion_group!(
    benches,
    bench_series,
    bench_exchange,
    bench_ito_route,
    bench_netlist_reduce
);
criterion_main!(benches);
