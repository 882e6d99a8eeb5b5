//! Single-thread pool against the default rayon pool on the two parallel
//! hot paths. Build with `--no-default-features` for the plain sequential
//! code path.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use cotune::correlation::ContingencyTable;
use cotune::cot::{cot_opt, OptConfig};
use cotune::harness::{run_experiment_on, ExperimentConfig, Method};
use cotune::optimizer::PsoConfig;
use cotune::tabular::{synthesize, Dataset, SynthSpec};
use rayon::{ThreadPool, ThreadPoolBuilder};

fn data() -> Dataset {
    synthesize(&SynthSpec::new(ContingencyTable::new(600, 400, 200, 800), 5, 1.0, 1.0, 0)).unwrap()
}

fn pools() -> Vec<(String, ThreadPool)> {
    let default = ThreadPoolBuilder::new().build().unwrap();
    let label = format!("default-{}", default.current_num_threads());
    vec![("1-thread".into(), ThreadPoolBuilder::new().num_threads(1).build().unwrap()), (label, default)]
}

fn bench_opt(c: &mut Criterion) {
    let d = data();
    let cfg = OptConfig {
        pso: PsoConfig { particles: 6, iterations: 4, ..PsoConfig::default() },
        ..OptConfig::default()
    };
    let mut group = c.benchmark_group("cot_opt");
    group.sample_size(10);
    for (name, pool) in pools() {
        group.bench_function(BenchmarkId::from_parameter(&name), |b| {
            b.iter(|| pool.install(|| cot_opt(&d, "a", &cfg, 1).unwrap()))
        });
    }
    group.finish();
}

fn bench_experiment(c: &mut Criterion) {
    let d = data();
    let cfg = ExperimentConfig {
        method: Method::CotPhi,
        attrs: vec!["a".into()],
        runs: 8,
        ..ExperimentConfig::default()
    };
    let mut group = c.benchmark_group("experiment");
    group.sample_size(10);
    for (name, pool) in pools() {
        group.bench_function(BenchmarkId::from_parameter(&name), |b| {
            b.iter(|| pool.install(|| run_experiment_on(&d, &cfg).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, bench_opt, bench_experiment);
criterion_main!(benches);
