use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{combinations, load_dataset, write_csv, ExperimentConfig, SeedRun};
use crate::error::{Error, Result};
use crate::metrics::{rank_calibration_plot, reliability_diagram, RankedPrediction, ReliabilityOptions};
use crate::recommenders::LabeledList;
use crate::strategy::{output_range, FittedStrategy, StrategyKind};

/// Rank-group width of the rank calibration plot.
pub const RANK_GROUP_SIZE: usize = 5;

/// A reliability-diagram bin or a prediction-histogram bucket.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityRow {
    pub strategy: String,
    pub calibrator: String,
    /// `all_items`, `top_n` or `outside_top_n`.
    pub series: String,
    /// `bin` or `histogram`.
    pub row_type: String,
    pub index: usize,
    pub lo: Option<f64>,
    pub hi: Option<f64>,
    pub mean_prediction: Option<f64>,
    pub mean_label: Option<f64>,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankPlotRow {
    pub strategy: String,
    pub calibrator: String,
    pub group: usize,
    pub rank_lo: usize,
    pub rank_hi: usize,
    pub mean_prediction: f64,
    pub mean_label: f64,
    pub count: usize,
}

/// Reliability and rank-plot rows for one fitted strategy on ranked test lists.
///
/// Strategies defined only on the top-N (TNF, VAD) yield the `top_n` series alone.
pub fn diagram_rows(
    fitted: &FittedStrategy,
    test: &[LabeledList],
    n: usize,
    opts: &ReliabilityOptions,
) -> Result<(Vec<ReliabilityRow>, Vec<RankPlotRow>)> {
    let strategy = fitted.kind().name().to_string();
    let calibrator = fitted.calibrator_kind().map_or("none", |c| c.name()).to_string();
    let all: Option<Vec<RankedPrediction>> = match fitted.kind() {
        StrategyKind::Tnf | StrategyKind::Vad => None,
        _ => Some(fitted.predict_lists(test)?),
    };
    let top: Vec<RankedPrediction> = match &all {
        Some(all) => all.iter().copied().filter(|p| p.rank <= n).collect(),
        None => fitted.predict_lists(&super::truncate_lists(test, n))?,
    };
    let mut series: Vec<(&str, Vec<RankedPrediction>)> = Vec::new();
    if let Some(all) = &all {
        series.push(("all_items", all.clone()));
    }
    series.push(("top_n", top.clone()));
    if let Some(all) = &all {
        series.push(("outside_top_n", all.iter().copied().filter(|p| p.rank > n).collect()));
    }

    let mut reliability = Vec::new();
    for (name, preds) in &series {
        let pairs: Vec<(f64, f64)> = preds.iter().map(|p| (p.prediction, p.label)).collect();
        let d = reliability_diagram(&pairs, opts)?;
        let base = |row_type: &str, index: usize| ReliabilityRow {
            strategy: strategy.clone(),
            calibrator: calibrator.clone(),
            series: name.to_string(),
            row_type: row_type.to_string(),
            index,
            lo: None,
            hi: None,
            mean_prediction: None,
            mean_label: None,
            count: 0,
        };
        for (k, p) in d.points.iter().enumerate() {
            reliability.push(ReliabilityRow {
                mean_prediction: Some(p.mean_prediction),
                mean_label: Some(p.mean_label),
                count: p.count,
                ..base("bin", k + 1)
            });
        }
        for (k, b) in d.histogram.iter().enumerate() {
            reliability.push(ReliabilityRow { lo: Some(b.lo), hi: Some(b.hi), count: b.count, ..base("histogram", k + 1) });
        }
    }

    let ranked = all.as_ref().unwrap_or(&top);
    let max_rank = ranked.iter().map(|p| p.rank).max().unwrap_or(0);
    let rankplot = rank_calibration_plot(ranked, RANK_GROUP_SIZE, max_rank)?
        .into_iter()
        .map(|g| RankPlotRow {
            strategy: strategy.clone(),
            calibrator: calibrator.clone(),
            group: g.group,
            rank_lo: g.rank_lo,
            rank_hi: g.rank_hi,
            mean_prediction: g.mean_prediction,
            mean_label: g.mean_label,
            count: g.count,
        })
        .collect();
    Ok((reliability, rankplot))
}

/// Writes `reliability.csv` and `rankplot.csv` for the given strategies into `dir`.
pub fn emit_diagrams(
    fitted: &[FittedStrategy],
    test: &[LabeledList],
    n: usize,
    opts: &ReliabilityOptions,
    dir: impl AsRef<Path>,
) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let mut reliability = Vec::new();
    let mut rankplot = Vec::new();
    for f in fitted {
        let (r, p) = diagram_rows(f, test, n, opts)?;
        reliability.extend(r);
        rankplot.extend(p);
    }
    write_csv(&reliability, dir.join("reliability.csv"))?;
    write_csv(&rankplot, dir.join("rankplot.csv"))
}

/// Fits every configured combination for `seed` and writes its diagrams to `dir`.
///
/// Combinations that fail to fit are logged and left out.
pub fn run_diagrams(cfg: &ExperimentConfig, seed: u64, dir: impl AsRef<Path>) -> Result<()> {
    cfg.validate()?;
    let data = load_dataset(&cfg.dataset)?;
    let run = SeedRun::prepare(cfg, &data, seed, cfg.strategies.contains(&StrategyKind::Vad))?;
    let mut fitted = Vec::new();
    for (strategy, calibrator) in combinations(cfg) {
        match run.fit_strategy(cfg, strategy, calibrator, cfg.n, (cfg.alpha, cfg.groups_for(cfg.n))) {
            Ok(f) => fitted.push(f),
            Err(e) => log::warn!("skipping {strategy}/{calibrator:?}: {e}"),
        }
    }
    if fitted.is_empty() {
        return Err(Error::Config("no strategy could be fitted".into()));
    }
    let opts = ReliabilityOptions { range: output_range(run.score_range), ..ReliabilityOptions::default() };
    emit_diagrams(&fitted, &run.test, cfg.n, &opts, dir)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::recommenders::{RankedEntry, RankedList, ScoreRange};

    fn lists() -> Vec<LabeledList> {
        (0..4u32)
            .map(|u| {
                let entries: Vec<RankedEntry> = (0..30)
                    .map(|k| RankedEntry { item: k, score: 1.0 - k as f64 / 30.0, rank: k as usize + 1 })
                    .collect();
                let labels = entries.iter().map(|e| e.score).collect();
                LabeledList { list: RankedList { user: u, entries, source: None }, labels }
            })
            .collect()
    }

    #[test]
    fn vanilla_series_partition_all_items() {
        let f = FittedStrategy::Vanilla { score_range: ScoreRange::Bounded01 };
        let (rel, plot) = diagram_rows(&f, &lists(), 10, &ReliabilityOptions::default()).unwrap();
        let hist_total = |s: &str| -> usize {
            rel.iter().filter(|r| r.series == s && r.row_type == "histogram").map(|r| r.count).sum()
        };
        assert_eq!(hist_total("all_items"), 120);
        assert_eq!(hist_total("top_n") + hist_total("outside_top_n"), hist_total("all_items"));
        assert!(rel
            .iter()
            .filter(|r| r.row_type == "bin")
            .all(|r| (r.mean_prediction.unwrap() - r.mean_label.unwrap()).abs() < 1e-12));
        assert_eq!(plot.len(), 6);
        assert_eq!(plot[0].count, 20);
    }

    #[test]
    fn files_are_written() {
        let dir = tempfile::tempdir().unwrap();
        let f = FittedStrategy::Vanilla { score_range: ScoreRange::Bounded01 };
        emit_diagrams(&[f], &lists(), 10, &ReliabilityOptions::default(), dir.path()).unwrap();
        let text = std::fs::read_to_string(dir.path().join("reliability.csv")).unwrap();
        for s in ["all_items", "top_n", "outside_top_n"] {
            assert!(text.contains(s));
        }
        assert!(dir.path().join("rankplot.csv").exists());
    }
}
