use std::hint::black_box;

use cf_peakon::{
    build_a, integrate, reconstruct_string, weyl_series, AMethod, IntegratorConfig, ModelParams, PeakonState,
    SpectralData, WeylFormula,
};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

const NU: f64 = 0.9;
const BETA_PLUS: f64 = 1e-3;

/// A spread-out same-sign configuration with `d` peakons.
fn instance(d: usize) -> (PeakonState, ModelParams) {
    let x: Vec<f64> = (0..d).map(|k| k as f64 - 0.5 * (d - 1) as f64).collect();
    let m: Vec<f64> = (0..d).map(|k| 0.8 + 0.3 * ((k * 7) % 5) as f64).collect();
    let state = PeakonState::new(0.0, &x, &m).unwrap();
    let mut params = ModelParams::new(NU, BETA_PLUS, 0.0, d).unwrap();
    params.drift = params.default_drift(state.total_mass());
    (state, params)
}

fn lax_matrix(c: &mut Criterion) {
    let mut group = c.benchmark_group("build_a");
    for d in [2, 4, 8, 16] {
        let (s, p) = instance(d);
        for (name, method) in [("closed_form", AMethod::ClosedForm), ("product", AMethod::Product)] {
            group.bench_with_input(BenchmarkId::new(name, d), &d, |b, _| {
                b.iter(|| build_a(black_box(&s), &p, method).unwrap())
            });
        }
    }
    group.finish();
}

fn weyl(c: &mut Criterion) {
    let mut group = c.benchmark_group("weyl_series");
    for d in [2, 4, 8] {
        let (s, p) = instance(d);
        let a = build_a(&s, &p, AMethod::ClosedForm).unwrap();
        let data = SpectralData::analyze(&a, p.det_beta()).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(d), &d, |b, &d| {
            b.iter(|| weyl_series(black_box(&a), &data, 2 * d, WeylFormula::Denominator).unwrap())
        });
    }
    group.finish();
}

fn flow(c: &mut Criterion) {
    let mut group = c.benchmark_group("integrate");
    group.sample_size(10);
    let cfg = IntegratorConfig::default();
    for d in [2, 4, 8] {
        let (s, p) = instance(d);
        group.bench_with_input(BenchmarkId::from_parameter(d), &d, |b, _| {
            b.iter(|| integrate(black_box(&s), &p, 5.0, &cfg).unwrap())
        });
    }
    group.finish();
}

fn inverse(c: &mut Criterion) {
    let mut group = c.benchmark_group("reconstruct_string");
    for d in [2, 3, 4] {
        let (s, p) = instance(d);
        let a = build_a(&s, &p, AMethod::ClosedForm).unwrap();
        let data = SpectralData::analyze(&a, p.det_beta()).unwrap();
        let w = weyl_series(&a, &data, 2 * d, WeylFormula::Denominator).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(d), &d, |b, _| {
            b.iter(|| reconstruct_string(black_box(&w), &data, &p).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, lax_matrix, weyl, flow, inverse);
criterion_main!(benches);
