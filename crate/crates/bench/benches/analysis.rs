use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use bisync::mesh::count_spanning_trees;
use bisync::petri::{build_dual_diamond, reachability};
use bisync::timing::{find_bivalent_run, Classifier, TimingModel};
use bisync_bench::{flipflop, flipflop_start, slot_sweep};

fn petri(c: &mut Criterion) {
    let net = build_dual_diamond();
    c.bench_function("petri/reachability", |b| b.iter(|| reachability(black_box(&net)).unwrap()));
}

fn link(c: &mut Criterion) {
    c.bench_function("link/slot_sweep", |b| b.iter(slot_sweep));
}

fn kirchhoff(c: &mut Criterion) {
    let mut g = c.benchmark_group("kirchhoff");
    for n in [3usize, 4, 6, 8] {
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, &n| b.iter(|| count_spanning_trees(n, n)));
    }
    g.finish();
}

fn valence(c: &mut Criterion) {
    let spec = flipflop();
    let start = flipflop_start(&spec);
    let mut g = c.benchmark_group("valence");
    g.sample_size(20);
    for depth in [8usize, 12] {
        g.bench_with_input(BenchmarkId::new("classify", depth), &depth, |b, &d| {
            b.iter(|| Classifier::new(&spec, TimingModel::Asynchronous, d).classify(&start).unwrap())
        });
    }
    g.bench_function("adversary_200", |b| {
        b.iter(|| {
            let mut cl = Classifier::new(&spec, TimingModel::Asynchronous, 10);
            find_bivalent_run(&mut cl, &start, 200).unwrap()
        })
    });
    g.finish();
}

criterion_group!(benches, petri, link, kirchhoff, valence);
criterion_main!(benches);
