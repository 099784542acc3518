use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::output_range;
use crate::calibrators::Calibrator;
use crate::dataset::{InteractionTable, TruthTable};
use crate::error::{Error, Result};
use crate::math::{mean, std_dev};
use crate::recommenders::{LabeledList, RecommenderConfig, Scorer};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VadParams {
    /// Ensemble size; members are trained with seeds `1..=k`.
    pub k: usize,
    /// Scale of the subtracted spread.
    pub lambda: f64,
}

impl Default for VadParams {
    fn default() -> Self {
        VadParams { k: 5, lambda: 1.0 }
    }
}

/// An Original calibrator with a per-rank overestimate subtracted from its output.
///
/// This is an approximation of variance-adjusting debiasing: the overestimate
/// at rank `r` is the ensemble spread of calibrated scores at that rank.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VadAdjuster {
    pub calibrator: Calibrator,
    /// `deltas[r - 1]` is subtracted at rank `r`.
    pub deltas: Vec<f64>,
    pub k: usize,
    pub lambda: f64,
    pub output_range: (f64, f64),
}

impl VadAdjuster {
    pub fn n(&self) -> usize {
        self.deltas.len()
    }

    pub fn apply(&self, rank: usize, score: f64) -> Result<f64> {
        if rank == 0 || rank > self.n() {
            return Err(Error::RankOutOfRange { rank, n: self.n() });
        }
        let (lo, hi) = self.output_range;
        Ok((self.calibrator.calibrate(score) - self.deltas[rank - 1]).clamp(lo, hi))
    }
}

/// Builds the adjuster from already trained ensemble members.
///
/// `validation` holds the ranked validation lists of the main recommender;
/// only entries ranked within `1..=n` contribute. Ranks without entries get
/// no adjustment.
pub fn vad_from_ensemble<S: Scorer + Sync>(
    calibrator: Calibrator,
    validation: &[LabeledList],
    members: &[S],
    n: usize,
    lambda: f64,
) -> Result<VadAdjuster> {
    if members.len() < 2 {
        return Err(Error::Config(format!("VAD needs an ensemble of at least 2, got {}", members.len())));
    }
    if n == 0 {
        return Err(Error::Config("N must be at least 1".into()));
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::Config(format!("lambda must be a finite non-negative number, got {lambda}")));
    }
    let spreads: Vec<Vec<(usize, f64)>> = validation
        .par_iter()
        .map(|l| {
            l.list
                .entries
                .iter()
                .filter(|e| e.rank >= 1 && e.rank <= n)
                .map(|e| {
                    let outputs: Vec<f64> =
                        members.iter().map(|m| calibrator.calibrate(m.score(l.list.user, e.item))).collect();
                    (e.rank, std_dev(&outputs))
                })
                .collect()
        })
        .collect();
    let mut per_rank: Vec<Vec<f64>> = vec![Vec::new(); n];
    for (rank, sd) in spreads.into_iter().flatten() {
        per_rank[rank - 1].push(sd);
    }
    let deltas = per_rank.iter().map(|v| if v.is_empty() { 0.0 } else { lambda * mean(v) }).collect();
    Ok(VadAdjuster {
        calibrator,
        deltas,
        k: members.len(),
        lambda,
        output_range: output_range(members[0].score_range()),
    })
}

/// Trains `params.k` recommenders on `train` with seeds `1..=k` and derives
/// the per-rank adjustment of `original`, the calibrator fitted by Original.
pub fn fit_vad(
    train: &InteractionTable,
    validation: &[LabeledList],
    original: Calibrator,
    n: usize,
    params: VadParams,
    recommender: &RecommenderConfig,
    scores: Option<&Arc<TruthTable>>,
) -> Result<VadAdjuster> {
    if params.k < 2 {
        return Err(Error::Config(format!("VAD needs an ensemble of at least 2, got {}", params.k)));
    }
    train.ensure_fittable("fit_vad")?;
    let members = (1..=params.k as u64)
        .into_par_iter()
        .map(|seed| recommender.fit(train, seed, scores))
        .collect::<Result<Vec<_>>>()?;
    vad_from_ensemble(original, validation, &members, n, params.lambda)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calibrators::{fit_calibrator, CalibrationSample, CalibratorKind, FitOptions};
    use crate::recommenders::{rank_items, ScoreRange};

    struct Shifted(f64);

    impl Scorer for Shifted {
        fn score(&self, _user: u32, item: u32) -> f64 {
            item as f64 / 10.0 + self.0
        }

        fn score_range(&self) -> ScoreRange {
            ScoreRange::Bounded01
        }
    }

    fn setup() -> (Calibrator, Vec<LabeledList>) {
        let samples: Vec<_> = (0..20).map(|k| CalibrationSample::unranked((k % 2) as f64, k as f64 / 20.0)).collect();
        let opts = FitOptions { score_range: ScoreRange::Bounded01, ..FitOptions::default() };
        let cal = fit_calibrator(CalibratorKind::Platt, &samples, &opts).unwrap();
        let lists = (0..3)
            .map(|u| {
                let list = rank_items(&Shifted(0.0), u, &[1, 2, 3, 4, 5], None);
                LabeledList { labels: vec![1.0; list.entries.len()], list }
            })
            .collect();
        (cal, lists)
    }

    #[test]
    fn identical_members_give_zero_adjustment() {
        let (cal, lists) = setup();
        let v = vad_from_ensemble(cal.clone(), &lists, &[Shifted(0.0), Shifted(0.0), Shifted(0.0)], 4, 1.0).unwrap();
        assert_eq!(v.deltas, vec![0.0; 4]);
        assert_eq!(v.apply(2, 0.4).unwrap(), cal.calibrate(0.4));
        assert!(v.apply(5, 0.4).is_err());
    }

    #[test]
    fn lambda_zero_matches_calibrator() {
        let (cal, lists) = setup();
        let v = vad_from_ensemble(cal.clone(), &lists, &[Shifted(0.0), Shifted(0.3)], 5, 0.0).unwrap();
        for r in 1..=5 {
            assert_eq!(v.apply(r, 0.25).unwrap(), cal.calibrate(0.25));
        }
    }

    #[test]
    fn deltas_are_spread_of_calibrated_scores() {
        let (cal, lists) = setup();
        let v = vad_from_ensemble(cal.clone(), &lists, &[Shifted(0.0), Shifted(0.3)], 5, 2.0).unwrap();
        // rank 1 holds item 5 for every user
        let expected = 2.0 * (cal.calibrate(0.8) - cal.calibrate(0.5)).abs() / 2.0;
        assert!((v.deltas[0] - expected).abs() < 1e-12);
        assert!(v.deltas.iter().all(|&d| d >= 0.0));
        let out = v.apply(1, 0.0).unwrap();
        assert!((0.0..=1.0).contains(&out));
    }

    #[test]
    fn ensemble_size_checked() {
        let (cal, lists) = setup();
        assert!(vad_from_ensemble(cal, &lists, &[Shifted(0.0)], 5, 1.0).is_err());
    }
}
