//! Sigmoid-link calibrators fitted by constrained weighted logistic regression.
//!
//! | family   | map                                  | monotonicity constraint                 |
//! |----------|--------------------------------------|-----------------------------------------|
//! | Platt    | `sigma(a t + b)`                     | `a >= 0`                                |
//! | Beta     | `sigma(a ln t - b ln(1 - t) + c)`    | `a, b >= 0`                             |
//! | Gaussian | `sigma(a t^2 + b t + c)`             | `2 a t + b >= 0` at both ends of range  |
//! | Gamma    | `sigma(a ln u + b u + c)`, `u = t - t_min + eps` | `a, b >= 0`                 |
//!
//! `t` is the raw score after the family's input transform: Beta works on
//! probabilities (unbounded scores pass through a sigmoid first), Gaussian and
//! Gamma work on unbounded scores (probabilities pass through a logit first).

use serde::{Deserialize, Serialize};

use super::logistic::{fit_constrained, LogisticProblem};
use super::{CalibrationSample, CalibratorKind, InputDomain};
use crate::error::{Error, Result};
use crate::math::{logit, sigmoid};
use crate::recommenders::ScoreRange;

/// Clamp for Beta inputs, keeping `ln t` and `ln(1 - t)` finite.
pub const BETA_EPS: f64 = 1e-6;
/// Offset keeping the Gamma log feature finite at the smallest score.
pub const GAMMA_EPS: f64 = 1e-6;
const LOGIT_EPS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParametricFamily {
    Platt,
    Beta,
    Gaussian,
    Gamma,
}

impl ParametricFamily {
    pub fn kind(self) -> CalibratorKind {
        match self {
            ParametricFamily::Platt => CalibratorKind::Platt,
            ParametricFamily::Beta => CalibratorKind::Beta,
            ParametricFamily::Gaussian => CalibratorKind::Gaussian,
            ParametricFamily::Gamma => CalibratorKind::Gamma,
        }
    }

    fn dim(self) -> usize {
        match self {
            ParametricFamily::Platt => 2,
            _ => 3,
        }
    }

    fn transform_for(self, range: ScoreRange) -> ScoreTransform {
        match (self, range) {
            (ParametricFamily::Beta, ScoreRange::Unbounded) => ScoreTransform::Sigmoid,
            (ParametricFamily::Gaussian | ParametricFamily::Gamma, ScoreRange::Bounded01) => ScoreTransform::Logit,
            _ => ScoreTransform::Identity,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreTransform {
    Identity,
    Logit,
    Sigmoid,
}

impl ScoreTransform {
    pub fn apply(self, s: f64) -> f64 {
        match self {
            ScoreTransform::Identity => s,
            ScoreTransform::Logit => logit(s, LOGIT_EPS),
            ScoreTransform::Sigmoid => sigmoid(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParametricCalibrator {
    pub family: ParametricFamily,
    /// Coefficients in the order of the family's features (intercept last).
    pub coef: Vec<f64>,
    pub transform: ScoreTransform,
    /// Transformed-score interval queries are clamped into.
    pub clamp: Option<(f64, f64)>,
    /// Gamma only: smallest transformed training score.
    pub shift: f64,
    pub input_domain: InputDomain,
    pub converged: bool,
}

impl ParametricCalibrator {
    pub fn calibrate(&self, score: f64) -> f64 {
        let t = self.clamped(self.transform.apply(score));
        let x = features(self.family, t, self.shift);
        sigmoid(self.coef.iter().zip(&x).map(|(c, v)| c * v).sum())
    }

    fn clamped(&self, t: f64) -> f64 {
        match self.clamp {
            Some((lo, hi)) => t.clamp(lo, hi),
            None => t,
        }
    }
}

fn features(family: ParametricFamily, t: f64, shift: f64) -> Vec<f64> {
    match family {
        ParametricFamily::Platt => vec![t, 1.0],
        ParametricFamily::Beta => vec![t.ln(), -(1.0 - t).ln(), 1.0],
        ParametricFamily::Gaussian => vec![t * t, t, 1.0],
        ParametricFamily::Gamma => {
            let u = t - shift + GAMMA_EPS;
            vec![u.ln(), u, 1.0]
        }
    }
}

/// The logistic problem and constraint rows a family fits, plus the fixed
/// parts of the resulting calibrator (coefficients left empty).
pub fn build_problem(
    family: ParametricFamily,
    samples: &[CalibrationSample],
    score_range: ScoreRange,
) -> Result<(LogisticProblem, Vec<Vec<f64>>, ParametricCalibrator)> {
    super::validate_samples(samples)?;
    check_binary(samples)?;
    let transform = family.transform_for(score_range);
    let raw: Vec<f64> = samples.iter().map(|s| transform.apply(s.score)).collect();
    let t_min = raw.iter().copied().fold(f64::INFINITY, f64::min);
    let t_max = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);

    let (clamp, shift) = match family {
        ParametricFamily::Platt => (None, 0.0),
        ParametricFamily::Beta => (Some((BETA_EPS, 1.0 - BETA_EPS)), 0.0),
        ParametricFamily::Gaussian => (Some((t_min, t_max)), 0.0),
        ParametricFamily::Gamma => (Some((t_min, t_max)), t_min),
    };
    let constraints = match family {
        ParametricFamily::Platt => vec![vec![1.0, 0.0]],
        ParametricFamily::Beta | ParametricFamily::Gamma => vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]],
        ParametricFamily::Gaussian => vec![vec![2.0 * t_min, 1.0, 0.0], vec![2.0 * t_max, 1.0, 0.0]],
    };
    let template = ParametricCalibrator {
        family,
        coef: Vec::new(),
        transform,
        clamp,
        shift,
        input_domain: score_range.into(),
        converged: false,
    };
    let x: Vec<f64> = raw.iter().flat_map(|&t| features(family, template.clamped(t), shift)).collect();
    let problem = LogisticProblem::new(
        family.dim(),
        x,
        samples.iter().map(|s| s.label).collect(),
        samples.iter().map(|s| s.weight).collect(),
    );
    Ok((problem, constraints, template))
}

/// Fits `family`, holding the coefficients at the `pinned` indices at zero.
pub fn fit_parametric(
    family: ParametricFamily,
    samples: &[CalibrationSample],
    score_range: ScoreRange,
    pinned: &[usize],
) -> Result<ParametricCalibrator> {
    let (problem, constraints, mut cal) = build_problem(family, samples, score_range)?;
    let fit = fit_constrained(&problem, &constraints, pinned)?;
    if !fit.converged {
        log::warn!("{} calibration stopped after {} iterations without converging", family.kind(), fit.iterations);
    }
    cal.coef = fit.theta;
    cal.converged = fit.converged;
    Ok(cal)
}

pub fn fit_platt(samples: &[CalibrationSample]) -> Result<ParametricCalibrator> {
    fit_parametric(ParametricFamily::Platt, samples, ScoreRange::Unbounded, &[])
}

pub fn fit_beta(samples: &[CalibrationSample], score_range: ScoreRange) -> Result<ParametricCalibrator> {
    fit_parametric(ParametricFamily::Beta, samples, score_range, &[])
}

pub fn fit_gaussian_calibration(samples: &[CalibrationSample], score_range: ScoreRange) -> Result<ParametricCalibrator> {
    fit_parametric(ParametricFamily::Gaussian, samples, score_range, &[])
}

/// Gaussian calibration with the quadratic coefficient held at zero.
pub fn fit_gaussian_pinned(samples: &[CalibrationSample], score_range: ScoreRange) -> Result<ParametricCalibrator> {
    fit_parametric(ParametricFamily::Gaussian, samples, score_range, &[0])
}

pub fn fit_gamma_calibration(samples: &[CalibrationSample], score_range: ScoreRange) -> Result<ParametricCalibrator> {
    fit_parametric(ParametricFamily::Gamma, samples, score_range, &[])
}

fn check_binary(samples: &[CalibrationSample]) -> Result<()> {
    if samples.len() < 2 {
        return Err(Error::Fit("parametric calibration needs at least 2 samples".into()));
    }
    if let Some(s) = samples.iter().find(|s| s.label != 0.0 && s.label != 1.0) {
        return Err(Error::Fit(format!("label {} is not binary", s.label)));
    }
    let has_pos = samples.iter().any(|s| s.label == 1.0);
    let has_neg = samples.iter().any(|s| s.label == 0.0);
    if !(has_pos && has_neg) {
        return Err(Error::Fit("degenerate labels".into()));
    }
    Ok(())
}
