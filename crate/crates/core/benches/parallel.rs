//! Sequential versus parallel execution for the data-parallel hot paths.
//! Build with `--no-default-features` to measure the fallback alone.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use svmpi::generators::{generate_ad, AdSet};
use svmpi::interval::{grid_search, IntervalSpec, Method};
use svmpi::kernel::gram_matrix_with;
use svmpi::{Execution, FitOptions, KernelSpec};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn gram(c: &mut Criterion) {
    let spec = KernelSpec::rbf(0.5).unwrap();
    let mut group = c.benchmark_group("gram_rbf");
    for m in [200, 800] {
        let data = generate_ad(AdSet::AD1, m, 0).unwrap();
        let x = data.inputs.view();
        for (name, exec) in MODES {
            group.bench_with_input(BenchmarkId::new(name, m), &m, |b, _| {
                b.iter(|| gram_matrix_with(exec, &spec, black_box(x), black_box(x)).unwrap())
            });
        }
    }
    group.finish();
}

fn search(c: &mut Criterion) {
    let train = generate_ad(AdSet::AD1, 120, 0).unwrap();
    let val = generate_ad(AdSet::AD1, 120, 1).unwrap();
    let spec = IntervalSpec::new(Method::Svqr, 0.95, 0.025, 1.0, KernelSpec::rbf(1.0).unwrap());
    let (cs, ws) = ([0.5, 2.0, 8.0], [0.25, 1.0, 4.0]);
    let mut group = c.benchmark_group("grid_search_svqr");
    group.sample_size(10);
    for (name, exec) in MODES {
        let opts = FitOptions { exec, ..FitOptions::default() };
        group.bench_function(name, |b| {
            b.iter(|| grid_search(black_box(&train), &val, &spec, &cs, &ws, &opts).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, gram, search);
criterion_main!(benches);
