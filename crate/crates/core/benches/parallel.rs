//! Parallel against sequential sweeps. Inside one binary the sequential
//! side is a one-worker pool; `--no-default-features` builds the plain
//! sequential fallback, where both groups take the same path.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use exactgrowth::extremal::{sharpness_sweep_with, MoserSequenceParams, SweepOptions};
use exactgrowth::par;
use exactgrowth::radial::SpaceParams;
use exactgrowth::symmetrize::symmetrize;

const N_LIST: [u64; 4] = [100, 1_000, 10_000, 100_000];

fn sweep(c: &mut Criterion) {
    let base = MoserSequenceParams::new(100, 0.1, 1.0, SpaceParams::critical(2, 2.0, 3.0, 3.0)).unwrap();
    let opts = SweepOptions { n_cells: 2048, ..SweepOptions::default() };
    let mut g = c.benchmark_group("sweep");
    g.sample_size(10);
    for (label, threads) in [("sequential", 1), ("parallel", 0)] {
        g.bench_function(BenchmarkId::new(label, N_LIST.len()), |b| {
            b.iter(|| par::with_threads(threads, || sharpness_sweep_with(16.0, 2.0, &N_LIST, &base, opts).unwrap()))
        });
    }
    g.finish();
}

fn corpus_symmetrize(c: &mut Criterion) {
    let fns = exactgrowth::corpus::corpus(1, 16);
    let mut g = c.benchmark_group("symmetrize");
    g.sample_size(10);
    for (label, threads) in [("sequential", 1), ("parallel", 0)] {
        g.bench_function(BenchmarkId::new(label, fns.len()), |b| {
            b.iter(|| par::with_threads(threads, || par::map(&fns, |u| symmetrize(u, 1.0, 3.0).unwrap())))
        });
    }
    g.finish();
}

criterion_group!(benches, sweep, corpus_symmetrize);
criterion_main!(benches);
