//! Calibrator-training strategies: Original, TNF (rank-grouped and
//! rank-weighted), the VAD baseline, and the uncalibrated vanilla output.

mod groups;
mod tnf;
mod vad;

pub use groups::{default_n_groups, make_group_scheme, GroupScheme};
pub use tnf::{apply_tnf, fit_tnf, TnfCalibrator};
pub use vad::{fit_vad, vad_from_ensemble, VadAdjuster, VadParams};

use serde::{Deserialize, Serialize};

use crate::calibrators::{fit_calibrator, vanilla, CalibrationSample, Calibrator, CalibratorKind, FitOptions};
use crate::dataset::InteractionTable;
use crate::error::{Error, Result};
use crate::metrics::RankedPrediction;
use crate::recommenders::{rank_table, LabeledList, ScoreRange, Scorer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyKind {
    Vanilla,
    Original,
    Vad,
    Tnf,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 4] = [StrategyKind::Vanilla, StrategyKind::Original, StrategyKind::Vad, StrategyKind::Tnf];

    pub fn name(self) -> &'static str {
        match self {
            StrategyKind::Vanilla => "vanilla",
            StrategyKind::Original => "original",
            StrategyKind::Vad => "vad",
            StrategyKind::Tnf => "tnf",
        }
    }

    /// Whether the strategy fits a calibrator at all.
    pub fn needs_calibrator(self) -> bool {
        self != StrategyKind::Vanilla
    }
}

impl std::fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for StrategyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        StrategyKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown strategy {s:?}")))
    }
}

/// Valid range of calibrated predictions for a score range.
pub fn output_range(score_range: ScoreRange) -> (f64, f64) {
    match score_range {
        ScoreRange::RatingScale { min, max } => (min, max),
        ScoreRange::Bounded01 | ScoreRange::Unbounded => (0.0, 1.0),
    }
}

/// Ranks each user's validation items and turns them into unit-weight samples.
///
/// With `n`, only ranks `1..=n` are kept. Users without validation records are skipped.
pub fn build_calibration_samples<S: Scorer + Sync + ?Sized>(
    model: &S,
    validation: &InteractionTable,
    n: Option<usize>,
) -> Result<Vec<CalibrationSample>> {
    validation.ensure_fittable("build_calibration_samples")?;
    Ok(samples_from_lists(&rank_table(model, validation, n)))
}

pub(crate) fn samples_from_lists(lists: &[LabeledList]) -> Vec<CalibrationSample> {
    lists
        .iter()
        .flat_map(|l| {
            l.list.entries.iter().zip(&l.labels).map(|(e, &y)| CalibrationSample::new(y, e.score, e.rank, 1.0))
        })
        .collect()
}

/// Fits one calibrator on every sample with unit weights, ignoring ranks.
pub fn fit_original(samples: &[CalibrationSample], kind: CalibratorKind, opts: &FitOptions) -> Result<Calibrator> {
    if samples.is_empty() {
        return Err(Error::Fit("no validation samples".into()));
    }
    let unit: Vec<CalibrationSample> = samples.iter().map(|s| CalibrationSample { weight: 1.0, ..*s }).collect();
    fit_calibrator(kind, &unit, opts)
}

/// A fitted strategy, ready to map `(rank, raw score)` to a prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "strategy", rename_all = "snake_case")]
pub enum FittedStrategy {
    Vanilla { score_range: ScoreRange },
    Original { calibrator: Calibrator },
    Tnf(TnfCalibrator),
    Vad(VadAdjuster),
}

impl FittedStrategy {
    pub fn kind(&self) -> StrategyKind {
        match self {
            FittedStrategy::Vanilla { .. } => StrategyKind::Vanilla,
            FittedStrategy::Original { .. } => StrategyKind::Original,
            FittedStrategy::Tnf(_) => StrategyKind::Tnf,
            FittedStrategy::Vad(_) => StrategyKind::Vad,
        }
    }

    pub fn calibrator_kind(&self) -> Option<CalibratorKind> {
        match self {
            FittedStrategy::Vanilla { .. } => None,
            FittedStrategy::Original { calibrator } => Some(calibrator.kind()),
            FittedStrategy::Tnf(t) => Some(t.kind),
            FittedStrategy::Vad(v) => Some(v.calibrator.kind()),
        }
    }

    /// Calibrated prediction for a raw score at a 1-based rank.
    pub fn predict(&self, rank: usize, score: f64) -> Result<f64> {
        match self {
            FittedStrategy::Vanilla { score_range } => Ok(vanilla(*score_range, score)),
            FittedStrategy::Original { calibrator } => Ok(calibrator.calibrate(score)),
            FittedStrategy::Tnf(t) => t.apply(rank, score),
            FittedStrategy::Vad(v) => v.apply(rank, score),
        }
    }

    /// Calibrates every entry of the given lists. Ranks are copied, never recomputed.
    pub fn predict_lists(&self, lists: &[LabeledList]) -> Result<Vec<RankedPrediction>> {
        let mut out = Vec::with_capacity(lists.iter().map(|l| l.labels.len()).sum());
        for l in lists {
            for (e, &y) in l.list.entries.iter().zip(&l.labels) {
                out.push(RankedPrediction::new(self.predict(e.rank, e.score)?, y, e.rank));
            }
        }
        Ok(out)
    }
}
