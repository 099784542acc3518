//! Calibration models `g: score -> calibrated prediction`.
//!
//! Every fitter accepts per-sample weights. The non-parametric models
//! (histogram binning, isotonic regression) also serve rating-scale tasks;
//! the parametric ones (Platt, Beta, Gaussian, Gamma) require binary labels.

mod histogram;
mod isotonic;
pub mod logistic;
mod parametric;

pub use histogram::{fit_histogram, HistogramBinning};
pub use isotonic::{fit_isotonic, pava, IsotonicFit};
pub use parametric::{
    build_problem, fit_beta, fit_gamma_calibration, fit_gaussian_calibration, fit_gaussian_pinned, fit_parametric, fit_platt,
    ParametricCalibrator, ParametricFamily, ScoreTransform, BETA_EPS, GAMMA_EPS,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::sigmoid;
use crate::recommenders::ScoreRange;

/// The triplet `(label, score, rank)` plus a fitting weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationSample {
    pub label: f64,
    pub score: f64,
    /// 1-based rank, or 0 when the sample carries no rank.
    pub rank: usize,
    pub weight: f64,
}

impl CalibrationSample {
    pub fn new(label: f64, score: f64, rank: usize, weight: f64) -> Self {
        CalibrationSample { label, score, rank, weight }
    }

    /// Unit-weight, rank-free sample.
    pub fn unranked(label: f64, score: f64) -> Self {
        CalibrationSample { label, score, rank: 0, weight: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CalibratorKind {
    Histogram,
    Isotonic,
    Platt,
    Beta,
    Gaussian,
    Gamma,
}

impl CalibratorKind {
    pub const ALL: [CalibratorKind; 6] = [
        CalibratorKind::Histogram,
        CalibratorKind::Isotonic,
        CalibratorKind::Platt,
        CalibratorKind::Beta,
        CalibratorKind::Gaussian,
        CalibratorKind::Gamma,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CalibratorKind::Histogram => "histogram",
            CalibratorKind::Isotonic => "isotonic",
            CalibratorKind::Platt => "platt",
            CalibratorKind::Beta => "beta",
            CalibratorKind::Gaussian => "gaussian",
            CalibratorKind::Gamma => "gamma",
        }
    }

    pub fn is_parametric(self) -> bool {
        !matches!(self, CalibratorKind::Histogram | CalibratorKind::Isotonic)
    }

    /// Minimum number of samples a fit needs.
    pub fn min_samples(self, n_bins: usize) -> usize {
        match self {
            CalibratorKind::Histogram => n_bins.max(1),
            _ => 2,
        }
    }
}

impl std::fmt::Display for CalibratorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for CalibratorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CalibratorKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown calibrator {s:?}")))
    }
}

/// Domain of the scores a calibrator was fitted on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputDomain {
    UnitInterval,
    Unbounded,
    RatingScale,
}

impl From<ScoreRange> for InputDomain {
    fn from(r: ScoreRange) -> Self {
        match r {
            ScoreRange::Bounded01 => InputDomain::UnitInterval,
            ScoreRange::Unbounded => InputDomain::Unbounded,
            ScoreRange::RatingScale { .. } => InputDomain::RatingScale,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    /// Bin count for histogram binning.
    pub n_bins: usize,
    /// Codomain of the raw scores being calibrated.
    pub score_range: ScoreRange,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions { n_bins: 15, score_range: ScoreRange::Unbounded }
    }
}

/// A fitted calibration model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Calibrator {
    Histogram(HistogramBinning),
    Isotonic(IsotonicFit),
    Parametric(ParametricCalibrator),
}

impl Calibrator {
    pub fn kind(&self) -> CalibratorKind {
        match self {
            Calibrator::Histogram(_) => CalibratorKind::Histogram,
            Calibrator::Isotonic(_) => CalibratorKind::Isotonic,
            Calibrator::Parametric(p) => p.family.kind(),
        }
    }

    pub fn input_domain(&self) -> InputDomain {
        match self {
            Calibrator::Histogram(h) => h.input_domain,
            Calibrator::Isotonic(i) => i.input_domain,
            Calibrator::Parametric(p) => p.input_domain,
        }
    }

    /// Maps a raw score to a calibrated prediction.
    pub fn calibrate(&self, score: f64) -> f64 {
        match self {
            Calibrator::Histogram(h) => h.calibrate(score),
            Calibrator::Isotonic(i) => i.calibrate(score),
            Calibrator::Parametric(p) => p.calibrate(score),
        }
    }
}

/// Fits a calibrator of the requested kind.
pub fn fit_calibrator(kind: CalibratorKind, samples: &[CalibrationSample], opts: &FitOptions) -> Result<Calibrator> {
    validate_samples(samples)?;
    let domain = InputDomain::from(opts.score_range);
    if kind.is_parametric() && domain == InputDomain::RatingScale {
        return Err(Error::Config(format!("{kind} calibration needs binary labels, not ratings")));
    }
    Ok(match kind {
        CalibratorKind::Histogram => {
            let mut h = fit_histogram(samples, opts.n_bins)?;
            h.input_domain = domain;
            Calibrator::Histogram(h)
        }
        CalibratorKind::Isotonic => {
            let mut i = fit_isotonic(samples)?;
            i.input_domain = domain;
            Calibrator::Isotonic(i)
        }
        CalibratorKind::Platt => Calibrator::Parametric(fit_platt(samples)?),
        CalibratorKind::Beta => Calibrator::Parametric(fit_beta(samples, opts.score_range)?),
        CalibratorKind::Gaussian => Calibrator::Parametric(fit_gaussian_calibration(samples, opts.score_range)?),
        CalibratorKind::Gamma => Calibrator::Parametric(fit_gamma_calibration(samples, opts.score_range)?),
    })
}

/// Uncalibrated prediction: the raw score, squashed by a sigmoid when unbounded.
pub fn vanilla(score_range: ScoreRange, score: f64) -> f64 {
    match score_range {
        ScoreRange::Unbounded => sigmoid(score),
        ScoreRange::Bounded01 | ScoreRange::RatingScale { .. } => score,
    }
}

pub(crate) fn validate_samples(samples: &[CalibrationSample]) -> Result<()> {
    for (k, s) in samples.iter().enumerate() {
        if !(s.weight > 0.0 && s.weight.is_finite()) {
            return Err(Error::Fit(format!("sample {k}: weight {} is not positive", s.weight)));
        }
        if !s.score.is_finite() || !s.label.is_finite() {
            return Err(Error::Fit(format!("sample {k}: non-finite score or label")));
        }
    }
    Ok(())
}

/// Indices of `samples` sorted by score, then label, then input position.
pub(crate) fn sorted_by_score(samples: &[CalibrationSample]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..samples.len()).collect();
    order.sort_by(|&a, &b| {
        samples[a]
            .score
            .total_cmp(&samples[b].score)
            .then(samples[a].label.total_cmp(&samples[b].label))
            .then(a.cmp(&b))
    });
    order
}
