use std::hint::black_box;

use condsep_core::search::SearchConfig;
use condsep_core::states::{random_density, werner_state};
use condsep_core::{search_extension, SubsystemDims};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn restarts(c: &mut Criterion) {
    let inputs = [
        ("werner-0.3", werner_state(0.3).unwrap()),
        ("random-2x3", random_density(&SubsystemDims::xy(2, 3).unwrap(), 6, 7).unwrap()),
    ];
    let mut group = c.benchmark_group("search");
    group.sample_size(10);
    for (name, rho) in &inputs {
        for parallel in [false, true] {
            let config = SearchConfig {
                restarts: 16,
                max_iters: 200,
                parallel,
                ..Default::default()
            };
            let mode = if parallel { "parallel" } else { "serial" };
            group.bench_with_input(BenchmarkId::new(mode, name), rho, |b, rho| {
                b.iter(|| search_extension(black_box(rho), &config).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, restarts);
criterion_main!(benches);
