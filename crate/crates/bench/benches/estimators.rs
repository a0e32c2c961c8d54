//! Throughput of the divergence estimators and the posterior fit loop.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use recab::rng::seeded;
use recab::{
    fit_posterior, kld_categorical_approx, kld_monte_carlo, recab, recab_grad_posterior_log_logits,
    Estimator, FitConfig, RelaxedCategorical,
};

fn pair(n: usize) -> (RelaxedCategorical, RelaxedCategorical) {
    let q =
        RelaxedCategorical::new((0..n).map(|i| (i as f64 * 0.37).sin()).collect(), 1.0).unwrap();
    let p =
        RelaxedCategorical::new((0..n).map(|i| (i as f64 * 0.91).cos()).collect(), 0.4).unwrap();
    (q, p)
}

fn closed_forms(c: &mut Criterion) {
    let mut group = c.benchmark_group("closed_form");
    for n in [3, 10, 100] {
        let (q, p) = pair(n);
        group.bench_with_input(BenchmarkId::new("recab", n), &n, |b, _| {
            b.iter(|| recab(black_box(&q), black_box(&p)).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("recab_grad", n), &n, |b, _| {
            b.iter(|| recab_grad_posterior_log_logits(black_box(&q), black_box(&p)).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("ca", n), &n, |b, _| {
            b.iter(|| kld_categorical_approx(black_box(&q), black_box(&p)).unwrap())
        });
    }
    group.finish();
}

fn monte_carlo(c: &mut Criterion) {
    let mut group = c.benchmark_group("monte_carlo");
    for (n, samples) in [(3, 32), (3, 10_000), (10, 10_000)] {
        let (q, p) = pair(n);
        group.throughput(Throughput::Elements(samples as u64));
        group.bench_function(BenchmarkId::new(format!("n{n}"), samples), |b| {
            let mut rng = seeded(1);
            b.iter(|| kld_monte_carlo(&q, &p, samples, &mut rng).unwrap())
        });
    }
    group.finish();
}

fn fitting(c: &mut Criterion) {
    let target = RelaxedCategorical::from_logits(&[0.57, 0.14, 0.28], 0.2).unwrap();
    let init = RelaxedCategorical::uniform(3, 1.0).unwrap();
    let mut group = c.benchmark_group("fit_100_iters");
    for estimator in [
        Estimator::Recab,
        Estimator::CategoricalApprox,
        Estimator::MonteCarlo,
    ] {
        let cfg = FitConfig {
            max_iters: 100,
            grad_tolerance: f64::MIN_POSITIVE,
            ..FitConfig::for_estimator(estimator)
        };
        group.bench_function(estimator.name(), |b| {
            b.iter(|| fit_posterior(&target, &init, 1.0, &cfg).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, closed_forms, monte_carlo, fitting);
criterion_main!(benches);
