use std::path::PathBuf;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use qualsim::data::load_fixtures;
use qualsim::mc::{run_parallel, run_sequential, RunConfig};

fn engine(c: &mut Criterion) {
    let fixtures = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/fixtures");
    let dataset = load_fixtures(&fixtures).expect("shipped fixtures").dataset;
    let iterations = 20_000;
    let config = RunConfig::baseline(iterations, 1);

    let mut group = c.benchmark_group("run");
    group.sample_size(10);
    group.throughput(Throughput::Elements(iterations));
    group.bench_with_input(BenchmarkId::new("sequential", iterations), &config, |b, config| {
        b.iter(|| run_sequential(config, &dataset).unwrap())
    });
    group.bench_with_input(BenchmarkId::new("parallel", iterations), &config, |b, config| {
        b.iter(|| run_parallel(config, &dataset).unwrap())
    });
    group.finish();
}

criterion_group!(benches, engine);
criterion_main!(benches);
