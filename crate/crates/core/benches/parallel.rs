use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use latent_survival::exec::ExecMode;
use latent_survival::io::embedded_leukemia;
use latent_survival::mcmc::{run_chains, SamplerConfig};
use latent_survival::model::{weibull_perturbation, Distribution1D};
use latent_survival::summary::{bayes_factor_prior_mc, PriorMcSettings};

fn modes() -> [(&'static str, ExecMode); 2] {
    [("sequential", ExecMode::Sequential), ("parallel", ExecMode::Parallel)]
}

fn bench(c: &mut Criterion) {
    let data = embedded_leukemia().years;
    let pooled = weibull_perturbation(
        Distribution1D::Normal { mean: 0.0, var: 5.0 },
        Distribution1D::Uniform { lo: 0.0, hi: 1.0 },
        8.0,
        0.8,
    )
    .unwrap();
    let grouped = pooled.clone().grouped();

    let mut g = c.benchmark_group("bayes_factor");
    g.sample_size(10);
    let settings = PriorMcSettings { n_samples: 20_000, ..PriorMcSettings::default() };
    for (name, mode) in modes() {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| bayes_factor_prior_mc(&pooled, &grouped, &data, &settings, mode).unwrap())
        });
    }
    g.finish();

    let mut g = c.benchmark_group("chains");
    g.sample_size(10);
    let cfg = SamplerConfig {
        iterations: 1_000,
        burn_in: 100,
        horizon: Some(0.75),
        ..SamplerConfig::default()
    };
    for (name, mode) in modes() {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| run_chains(&grouped, &data, &cfg, 4, mode).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, bench);
criterion_main!(benches);
