use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use topcal_core::calibrators::{fit_calibrator, pava, CalibrationSample, CalibratorKind, FitOptions};
use topcal_core::metrics::{ece_with, rdece_at_n, Binning, RankedPrediction};
use topcal_core::strategy::fit_tnf;

const N: usize = 20;

fn ranked(users: usize, seed: u64) -> Vec<RankedPrediction> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..users)
        .flat_map(|_| (1..=N).map(|r| (r, rng.random::<f64>(), rng.random::<f64>())).collect::<Vec<_>>())
        .map(|(rank, p, u)| RankedPrediction { prediction: p, label: (u < p) as u8 as f64, rank })
        .collect()
}

fn samples(users: usize, seed: u64) -> Vec<CalibrationSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(users * N);
    for _ in 0..users {
        for r in 1..=N {
            let s: f64 = rng.random_range(-3.0..3.0) - 0.05 * r as f64;
            let p = 1.0 / (1.0 + (-s).exp());
            out.push(CalibrationSample::new((rng.random::<f64>() < p) as u8 as f64, s, r, 1.0));
        }
    }
    out
}

fn metrics(c: &mut Criterion) {
    let preds = ranked(5_000, 1);
    let pairs: Vec<(f64, f64)> = preds.iter().map(|p| (p.prediction, p.label)).collect();
    c.bench_function("ece_adaptive_100k", |b| b.iter(|| ece_with(black_box(&pairs), Binning::default()).unwrap()));
    c.bench_function("ece_fixed15_100k", |b| b.iter(|| ece_with(black_box(&pairs), Binning::Fixed(15)).unwrap()));
    c.bench_function("rdece_at_20_100k", |b| b.iter(|| rdece_at_n(black_box(&preds), N).unwrap()));
}

fn isotonic(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let y: Vec<f64> = (0..100_000).map(|k| (rng.random::<f64>() < k as f64 / 100_000.0) as u8 as f64).collect();
    let w = vec![1.0; y.len()];
    c.bench_function("pava_100k", |b| b.iter(|| pava(black_box(&y), black_box(&w))));
}

fn fitting(c: &mut Criterion) {
    let data = samples(2_000, 3);
    let opts = FitOptions::default();
    let mut g = c.benchmark_group("fit_40k");
    for kind in [CalibratorKind::Platt, CalibratorKind::Isotonic, CalibratorKind::Beta, CalibratorKind::Histogram] {
        g.bench_function(format!("{kind:?}").to_lowercase(), |b| {
            b.iter_batched(|| data.clone(), |d| fit_calibrator(kind, &d, &opts).unwrap(), BatchSize::LargeInput)
        });
    }
    g.bench_function("tnf_platt_4_groups", |b| b.iter(|| fit_tnf(black_box(&data), N, 4, 1.0, CalibratorKind::Platt, &opts).unwrap()));
    g.finish();
}

criterion_group!(benches, metrics, isotonic, fitting);
criterion_main!(benches);
