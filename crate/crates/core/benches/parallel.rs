use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use cohesive_transport::exec::Execution;
use cohesive_transport::stability::spectral_radius;
use cohesive_transport::trajectory::{cutoff_sweep, default_cutoff_grid};
use cohesive_transport::tuning::{tune_dsr, TuningSpec};
use cohesive_transport::{DsrGains, PinnedLaplacian, ScenarioConfig, StiffnessChain};

const MODES: [(&str, Execution); 2] = [
    ("sequential", Execution::Sequential),
    ("parallel", Execution::Parallel),
];

fn lap() -> PinnedLaplacian {
    PinnedLaplacian::from_chain(&StiffnessChain::reference_experiment()).unwrap()
}

fn stability_grid(c: &mut Criterion) {
    let lap = lap();
    let points: Vec<(f64, f64)> = (1..=200)
        .flat_map(|i| (1..=200).map(move |j| (i as f64 * 0.01, j as f64 * 0.11)))
        .collect();
    let mut group = c.benchmark_group("stability_grid_200x200");
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| {
                exec.map(&points, |&(a, beta)| {
                    spectral_radius(&lap, &DsrGains::new(a, beta), 0.03).spectral_radius
                })
            })
        });
    }
    group.finish();
}

fn dsr_tuning(c: &mut Criterion) {
    let lap = lap();
    let mut group = c.benchmark_group("tune_dsr_coarse");
    group.sample_size(10);
    for (name, exec) in MODES {
        let mut spec = TuningSpec::new(10.0, 5.0, 0.03);
        spec.alpha_step = 0.05;
        spec.beta_points = 40;
        spec.exec = exec;
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| tune_dsr(&lap, &spec, 3.5).unwrap())
        });
    }
    group.finish();
}

fn sweep(c: &mut Criterion) {
    let template = ScenarioConfig::paper_dsr();
    let omegas = default_cutoff_grid();
    let mut group = c.benchmark_group("cutoff_sweep");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| cutoff_sweep(&template, &omegas, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, stability_grid, dsr_tuning, sweep);
criterion_main!(benches);
