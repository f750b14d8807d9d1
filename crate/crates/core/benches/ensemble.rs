use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use qjump::ensemble::Execution;
use qjump::experiments::{run_spectral_scan, ExperimentKind, RunConfig};
use qjump::spectra::{reference_ensemble, ReferenceKind};

fn modes() -> [(&'static str, Execution); 2] {
    [("parallel", Execution::Parallel), ("sequential", Execution::Sequential)]
}

fn ginibre(c: &mut Criterion) {
    let mut group = c.benchmark_group("ginibre_dim80_x16");
    group.sample_size(10);
    for (name, mode) in modes() {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| reference_ensemble(ReferenceKind::Ginibre, 80, 16, 1, mode).unwrap())
        });
    }
    group.finish();
}

fn spectral_scan(c: &mut Criterion) {
    let mut group = c.benchmark_group("spectral_scan_l4");
    group.sample_size(10);
    for (name, mode) in modes() {
        let mut cfg = RunConfig::defaults(ExperimentKind::SpectralScan);
        cfg.model.sites = 4;
        cfg.grid.disorder = vec![1.0, 5.0, 20.0];
        cfg.grid.zeta = vec![0.5, 1.0];
        cfg.n_samples = 4;
        cfg.execution = mode;
        group.bench_function(BenchmarkId::from_parameter(name), |b| b.iter(|| run_spectral_scan(&cfg).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, ginibre, spectral_scan);
criterion_main!(benches);
