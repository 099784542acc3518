use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::groups::{make_group_scheme, GroupScheme};
use crate::calibrators::{fit_calibrator, CalibrationSample, Calibrator, CalibratorKind, FitOptions};
use crate::error::{Error, Result};
use crate::metrics::RankWeight;

/// One calibrator per rank group of the top-N list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TnfCalibrator {
    pub scheme: GroupScheme,
    /// `calibrators[g]` serves ranks in `scheme.boundaries[g]`.
    pub calibrators: Vec<Calibrator>,
    pub alpha: f64,
    pub kind: CalibratorKind,
}

impl TnfCalibrator {
    pub fn apply(&self, rank: usize, score: f64) -> Result<f64> {
        let g = self.scheme.group_of(rank).ok_or(Error::RankOutOfRange { rank, n: self.scheme.n })?;
        Ok(self.calibrators[g].calibrate(score))
    }
}

/// Fits one calibrator per rank group on the samples ranked within `1..=n`,
/// weighting each sample by `(1 / rank)^alpha`.
pub fn fit_tnf(
    samples: &[CalibrationSample],
    n: usize,
    n_groups: usize,
    alpha: f64,
    kind: CalibratorKind,
    opts: &FitOptions,
) -> Result<TnfCalibrator> {
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::Config(format!("alpha must be a finite non-negative number, got {alpha}")));
    }
    let scheme = make_group_scheme(n, n_groups)?;
    let weight = RankWeight::new(alpha);
    let mut groups: Vec<Vec<CalibrationSample>> = vec![Vec::new(); n_groups];
    for s in samples {
        if let Some(g) = scheme.group_of(s.rank) {
            groups[g].push(CalibrationSample { weight: weight.weight(s.rank), ..*s });
        }
    }
    let need = kind.min_samples(opts.n_bins);
    for (g, members) in groups.iter().enumerate() {
        if members.len() < need {
            let (lo, hi) = scheme.boundaries[g];
            return Err(Error::Fit(format!(
                "rank group {} (ranks {lo}-{hi}) has {} samples but {kind} needs {need}; use fewer groups",
                g + 1,
                members.len()
            )));
        }
    }
    let calibrators = groups
        .par_iter()
        .map(|members| fit_calibrator(kind, members, opts))
        .collect::<Result<Vec<_>>>()?;
    Ok(TnfCalibrator { scheme, calibrators, alpha, kind })
}

/// Routes `(rank, score)` to the calibrator of the rank's group.
pub fn apply_tnf(tnf: &TnfCalibrator, rank: usize, score: f64) -> Result<f64> {
    tnf.apply(rank, score)
}
