use std::hint::black_box;

use betamomentum::continuous::{solve_hr, solve_lr};
use betamomentum::energy::check_discrete_decrement;
use betamomentum::methods::run;
use betamomentum::phase::{beta_critical_bisection, beta_critical_closed, phase_report};
use betamomentum::{MethodConfig, Objective, Variant};
use betamomentum_bench::{logsumexp, quadratic, start_near};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};

const STEP: f64 = 1.0 / 40.0;

fn stepping(c: &mut Criterion) {
    let mut group = c.benchmark_group("stepping");
    for dim in [2usize, 64, 1024] {
        let q = quadratic(dim, 1.0, 10.0);
        let x0 = start_near(q.minimizer());
        group.throughput(Throughput::Elements(1000));
        for variant in [Variant::SingleVariable, Variant::TwoSequence] {
            let cfg = MethodConfig::new(0.5, STEP, 1000).unwrap().with_variant(variant);
            group.bench_with_input(BenchmarkId::new(variant.name(), dim), &dim, |b, _| {
                b.iter(|| run(black_box(&cfg), &q, black_box(&x0)).unwrap())
            });
        }
    }
    let f = logsumexp(16, 7);
    let x0 = start_near(f.minimizer());
    let cfg = MethodConfig::new(0.5, STEP, 1000).unwrap();
    group.bench_function("logsumexp_16", |b| b.iter(|| run(black_box(&cfg), &f, black_box(&x0)).unwrap()));
    group.finish();
}

fn energy(c: &mut Criterion) {
    let q = quadratic(64, 1.0, 10.0);
    let x0 = start_near(q.minimizer());
    let traj = run(&MethodConfig::new(1.0, STEP, 500).unwrap(), &q, &x0).unwrap();
    c.bench_function("discrete_decrement_500", |b| {
        b.iter(|| check_discrete_decrement(black_box(&traj), 1.0, STEP, &q).unwrap())
    });
}

fn integration(c: &mut Criterion) {
    let mut group = c.benchmark_group("integration");
    group.sample_size(20);
    let q = quadratic(2, 1.0, 10.0);
    let x0 = start_near(q.minimizer());
    for t_end in [5.0, 40.0] {
        group.bench_with_input(BenchmarkId::new("high_resolution", t_end), &t_end, |b, &t| {
            b.iter(|| solve_hr(0.5, STEP, &q, black_box(&x0), t).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("low_resolution", t_end), &t_end, |b, &t| {
            b.iter(|| solve_lr(&q, black_box(&x0), STEP, t).unwrap())
        });
    }
    group.finish();
}

fn sweep(c: &mut Criterion) {
    let mut group = c.benchmark_group("phase");
    group.bench_function("closed_form", |b| b.iter(|| beta_critical_closed(black_box(STEP), 1.0, 10.0).unwrap()));
    group.bench_function("bisection", |b| {
        b.iter(|| beta_critical_bisection(black_box(STEP), 1.0, 10.0, 1e-12).unwrap())
    });
    // A 20 x 20 x 21 regime map with L = 1.
    group.bench_function("grid_8400", |b| {
        b.iter(|| {
            let mut supercritical = 0usize;
            for i in 0..20 {
                let mu = 10f64.powf(-3.0 + 3.0 * i as f64 / 19.0);
                for j in 0..20 {
                    let c = 4.0 + j as f64;
                    for k in 0..=20 {
                        let rep = phase_report(k as f64 / 20.0, 1.0 / c, mu, 1.0).unwrap();
                        supercritical += usize::from(rep.ratio > 1.0 / 6.0);
                    }
                }
            }
            supercritical
        })
    });
    group.finish();
}

criterion_group!(benches, stepping, energy, integration, sweep);
criterion_main!(benches);
