use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use topcal_core::calibrators::{
    fit_beta, fit_calibrator, fit_gamma_calibration, fit_gaussian_calibration, fit_gaussian_pinned, fit_isotonic, fit_platt,
    CalibrationSample, Calibrator, CalibratorKind, FitOptions,
};
use topcal_core::math::sigmoid;
use topcal_core::recommenders::ScoreRange;

fn bernoulli(rng: &mut ChaCha8Rng, p: f64) -> f64 {
    if rng.random::<f64>() < p {
        1.0
    } else {
        0.0
    }
}

fn draw(n: usize, seed: u64, score: impl Fn(&mut ChaCha8Rng) -> f64, prob: impl Fn(f64) -> f64) -> Vec<CalibrationSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let s = score(&mut rng);
            let y = bernoulli(&mut rng, prob(s));
            CalibrationSample::unranked(y, s)
        })
        .collect()
}

fn grid(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
}

#[test]
fn platt_recovers_generating_coefficients() {
    let samples = draw(100_000, 11, |r| r.random_range(-3.0..3.0), |s| sigmoid(2.0 * s - 1.0));
    let fit = fit_platt(&samples).unwrap();
    assert!(fit.converged);
    assert!((fit.coef[0] - 2.0).abs() < 0.05, "a = {}", fit.coef[0]);
    assert!((fit.coef[1] + 1.0).abs() < 0.05, "b = {}", fit.coef[1]);
}

#[test]
fn beta_on_calibrated_input_is_near_identity() {
    let samples = draw(100_000, 12, |r| r.random_range(0.001..0.999), |s| s);
    let fit = fit_beta(&samples, ScoreRange::Bounded01).unwrap();
    let worst = grid(0.01, 0.99, 99).map(|s| (fit.calibrate(s) - s).abs()).fold(0.0, f64::max);
    assert!(worst < 0.02, "max deviation {worst}");
}

#[test]
fn gaussian_recovers_quadratic_logit() {
    let samples = draw(100_000, 13, |r| r.random_range(0.0..3.0), |s| sigmoid(0.5 * s * s + s));
    let fit = fit_gaussian_calibration(&samples, ScoreRange::Unbounded).unwrap();
    for (got, want) in fit.coef.iter().zip([0.5, 1.0, 0.0]) {
        assert!((got - want).abs() < 0.1, "coef {:?}", fit.coef);
    }
}

#[test]
fn gamma_recovers_log_linear_logit() {
    let samples = draw(100_000, 14, |r| r.random_range(0.0..5.0f64).max(1e-9), |s| sigmoid(s.ln() + 0.5 * s - 2.0));
    let fit = fit_gamma_calibration(&samples, ScoreRange::Unbounded).unwrap();
    for (got, want) in fit.coef.iter().zip([1.0, 0.5, -2.0]) {
        assert!((got - want).abs() < 0.1, "coef {:?}", fit.coef);
    }
}

#[test]
fn pinned_gaussian_equals_platt() {
    let samples = draw(5_000, 15, |r| r.random_range(-4.0..4.0), |s| sigmoid(0.8 * s + 0.3));
    let platt = fit_platt(&samples).unwrap();
    let pinned = fit_gaussian_pinned(&samples, ScoreRange::Unbounded).unwrap();
    assert_eq!(pinned.coef[0], 0.0);
    // the Gaussian map clamps queries to the observed range
    let lo = samples.iter().map(|s| s.score).fold(f64::INFINITY, f64::min);
    let hi = samples.iter().map(|s| s.score).fold(f64::NEG_INFINITY, f64::max);
    for s in grid(lo, hi, 200) {
        assert!((platt.calibrate(s) - pinned.calibrate(s)).abs() < 1e-6);
    }
}

/// Non-monotone truth, so the constraints of every family are exercised.
fn bumpy(seed: u64, range: ScoreRange) -> Vec<CalibrationSample> {
    let score = move |r: &mut ChaCha8Rng| match range {
        ScoreRange::Bounded01 => r.random_range(0.0..1.0),
        _ => r.random_range(-3.0..3.0),
    };
    draw(3_000, seed, score, |s| 0.5 + 0.4 * (3.0 * s).sin())
}

#[test]
fn fitted_maps_are_monotone_on_observed_range() {
    for range in [ScoreRange::Unbounded, ScoreRange::Bounded01] {
        for (k, kind) in CalibratorKind::ALL.into_iter().enumerate() {
            if kind == CalibratorKind::Histogram {
                continue;
            }
            let samples = bumpy(20 + k as u64, range);
            let opts = FitOptions { score_range: range, ..FitOptions::default() };
            let cal = fit_calibrator(kind, &samples, &opts).unwrap();
            let lo = samples.iter().map(|s| s.score).fold(f64::INFINITY, f64::min);
            let hi = samples.iter().map(|s| s.score).fold(f64::NEG_INFINITY, f64::max);
            let values: Vec<f64> = grid(lo, hi, 1000).map(|s| cal.calibrate(s)).collect();
            assert!(values.windows(2).all(|w| w[0] <= w[1]), "{kind} on {range:?} is not monotone");
            assert!(values.iter().all(|v| (0.0..=1.0).contains(v)));
        }
    }
}

fn max_gap(a: &Calibrator, b: &Calibrator, lo: f64, hi: f64) -> f64 {
    grid(lo, hi, 500).map(|s| (a.calibrate(s) - b.calibrate(s)).abs()).fold(0.0, f64::max)
}

#[test]
fn integer_weight_equals_duplicated_samples() {
    // Equal-count histogram bins split by sample count, so duplicates move
    // bin edges; the identity holds for the other five fitters.
    let mut rng = ChaCha8Rng::seed_from_u64(30);
    for kind in CalibratorKind::ALL.into_iter().filter(|&k| k != CalibratorKind::Histogram) {
        for _ in 0..5 {
            let base = bumpy(rng.random(), ScoreRange::Unbounded);
            let base = &base[..200];
            let weighted: Vec<CalibrationSample> =
                base.iter().map(|s| CalibrationSample { weight: rng.random_range(1..4) as f64, ..*s }).collect();
            let copies: Vec<CalibrationSample> = weighted
                .iter()
                .flat_map(|s| std::iter::repeat_n(CalibrationSample { weight: 1.0, ..*s }, s.weight as usize))
                .collect();
            let opts = FitOptions::default();
            let a = fit_calibrator(kind, &weighted, &opts).unwrap();
            let b = fit_calibrator(kind, &copies, &opts).unwrap();
            let gap = max_gap(&a, &b, -3.5, 3.5);
            assert!(gap < 1e-9, "{kind}: {gap}");
        }
    }
}

#[test]
fn isotonic_matches_three_point_projection() {
    let samples = [(0.1, 1.0), (0.2, 0.0), (0.3, 1.0)].map(|(s, y)| CalibrationSample::unranked(y, s));
    let fit = fit_isotonic(&samples).unwrap();
    for (s, want) in [(0.1, 0.5), (0.2, 0.5), (0.3, 1.0)] {
        assert!((fit.calibrate(s) - want).abs() < 1e-12);
    }
}

#[test]
fn rating_scale_outputs_stay_on_scale() {
    let mut rng = ChaCha8Rng::seed_from_u64(40);
    let samples: Vec<CalibrationSample> = (0..500)
        .map(|_| {
            let s: f64 = rng.random_range(1.0..5.0);
            let y = (s + rng.random_range(-1.5..1.5)).round().clamp(1.0, 5.0);
            CalibrationSample::unranked(y, s)
        })
        .collect();
    let opts = FitOptions { score_range: ScoreRange::RatingScale { min: 1.0, max: 5.0 }, n_bins: 10 };
    for kind in [CalibratorKind::Histogram, CalibratorKind::Isotonic] {
        let cal = fit_calibrator(kind, &samples, &opts).unwrap();
        for s in grid(-2.0, 8.0, 300) {
            let v = cal.calibrate(s);
            assert!((1.0..=5.0).contains(&v), "{kind}: {v}");
        }
    }
    for kind in [CalibratorKind::Platt, CalibratorKind::Beta] {
        assert!(fit_calibrator(kind, &samples, &opts).is_err());
    }
}

#[test]
fn fits_are_deterministic() {
    let samples = bumpy(50, ScoreRange::Unbounded);
    for kind in CalibratorKind::ALL {
        let opts = FitOptions::default();
        assert_eq!(fit_calibrator(kind, &samples, &opts).unwrap(), fit_calibrator(kind, &samples, &opts).unwrap());
    }
}
