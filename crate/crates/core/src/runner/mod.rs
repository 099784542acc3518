//! Multi-seed experiments: split, fit a recommender, fit strategies on the
//! validation split, and score the test top-N lists.

mod config;
mod diagrams;
mod rows;

pub use config::{DatasetSource, ExperimentConfig, GridSpec};
pub use diagrams::{diagram_rows, emit_diagrams, run_diagrams, RankPlotRow, ReliabilityRow};
pub use rows::{read_results_csv, summarize, write_csv, CellKey, HeatmapCell, ResultRow, SummaryRow, FAILURE_METRIC};

use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;

use crate::bundle::ModelBundle;
use crate::calibrators::{CalibrationSample, Calibrator, CalibratorKind, FitOptions};
use crate::dataset::{
    generate_synthetic, load_explicit_csv, load_implicit_csv, split, FeedbackKind, InteractionTable, TruthTable,
};
use crate::error::{Error, Result};
use crate::math::{mean, std_dev};
use crate::metrics::{auc, ece_at_n, ece_with, ndcg_at_n, rdece_at_n, rmse};
use crate::recommenders::{rank_table, LabeledList, RecommenderModel, ScoreRange, Scorer};
use crate::strategy::{
    fit_original, fit_tnf, samples_from_lists, vad_from_ensemble, FittedStrategy, StrategyKind,
};

/// Interactions plus, for synthetic data, the score matrix a `score_table`
/// recommender serves.
#[derive(Debug, Clone)]
pub struct LoadedData {
    pub table: InteractionTable,
    pub scores: Option<Arc<TruthTable>>,
}

pub fn load_dataset(source: &DatasetSource) -> Result<LoadedData> {
    match source {
        DatasetSource::Synthetic(spec) => {
            let data = generate_synthetic(spec)?;
            Ok(LoadedData { table: data.table, scores: Some(Arc::new(data.scores)) })
        }
        DatasetSource::Csv { path, feedback, schema } => {
            let table = match feedback {
                FeedbackKind::Explicit => load_explicit_csv(path, schema)?,
                FeedbackKind::Implicit => load_implicit_csv(path, schema)?,
            };
            Ok(LoadedData { table, scores: None })
        }
    }
}

/// Everything fitted for one seed before any strategy is evaluated.
pub struct SeedRun {
    pub seed: u64,
    pub train: InteractionTable,
    pub model: RecommenderModel,
    pub score_range: ScoreRange,
    /// The model's ranking of each user's validation items, all ranks.
    pub validation: Vec<LabeledList>,
    pub validation_samples: Vec<CalibrationSample>,
    /// The model's ranking of each user's test items, all ranks.
    pub test: Vec<LabeledList>,
    originals: Vec<(CalibratorKind, std::result::Result<Calibrator, String>)>,
    ensemble: Option<std::result::Result<Vec<RecommenderModel>, String>>,
}

impl SeedRun {
    /// Splits the data, fits the recommender and, as requested, the Original
    /// calibrators and the VAD ensemble.
    pub fn prepare(cfg: &ExperimentConfig, data: &LoadedData, seed: u64, with_ensemble: bool) -> Result<SeedRun> {
        let splits = split(&data.table, seed).materialize(&data.table);
        let model = cfg.recommender.fit(&splits.train, seed, data.scores.as_ref())?;
        let score_range = model.score_range();
        let validation = rank_table(&model, &splits.validation, None);
        let validation_samples = samples_from_lists(&validation);
        let test = rank_table(&model, &splits.test, None);
        let opts = fit_options(cfg, score_range);
        let originals = cfg
            .calibrators
            .par_iter()
            .map(|&kind| (kind, fit_original(&validation_samples, kind, &opts).map_err(|e| e.to_string())))
            .collect();
        let ensemble = with_ensemble.then(|| {
            (1..=cfg.vad.k as u64)
                .into_par_iter()
                .map(|s| cfg.recommender.fit(&splits.train, s, data.scores.as_ref()))
                .collect::<Result<Vec<_>>>()
                .map_err(|e| e.to_string())
        });
        Ok(SeedRun {
            seed,
            train: splits.train,
            model,
            score_range,
            validation,
            validation_samples,
            test,
            originals,
            ensemble,
        })
    }

    fn original(&self, kind: CalibratorKind) -> Result<Calibrator> {
        match self.originals.iter().find(|(k, _)| *k == kind) {
            Some((_, Ok(c))) => Ok(c.clone()),
            Some((_, Err(e))) => Err(Error::Fit(e.clone())),
            None => Err(Error::Config(format!("calibrator {kind} is not part of this run"))),
        }
    }

    fn max_validation_len(&self) -> usize {
        self.validation.iter().map(|l| l.labels.len()).max().unwrap_or(0)
    }

    /// Fits one strategy for list length `n`.
    pub fn fit_strategy(
        &self,
        cfg: &ExperimentConfig,
        strategy: StrategyKind,
        calibrator: Option<CalibratorKind>,
        n: usize,
        tnf: (f64, usize),
    ) -> Result<FittedStrategy> {
        if strategy.needs_calibrator() && self.max_validation_len() < n {
            return Err(Error::Config(format!(
                "N = {n} exceeds every user's validation list (longest has {})",
                self.max_validation_len()
            )));
        }
        let kind = || calibrator.ok_or_else(|| Error::Config(format!("{strategy} needs a calibrator")));
        Ok(match strategy {
            StrategyKind::Vanilla => FittedStrategy::Vanilla { score_range: self.score_range },
            StrategyKind::Original => FittedStrategy::Original { calibrator: self.original(kind()?)? },
            StrategyKind::Tnf => {
                let (alpha, n_groups) = tnf;
                let opts = fit_options(cfg, self.score_range);
                FittedStrategy::Tnf(fit_tnf(&self.validation_samples, n, n_groups, alpha, kind()?, &opts)?)
            }
            StrategyKind::Vad => {
                let members = match &self.ensemble {
                    Some(Ok(m)) => m,
                    Some(Err(e)) => return Err(Error::Training(e.clone())),
                    None => return Err(Error::Config("VAD ensemble was not trained".into())),
                };
                let original = self.original(kind()?)?;
                FittedStrategy::Vad(vad_from_ensemble(original, &self.validation, members, n, cfg.vad.lambda)?)
            }
        })
    }

    /// Test lists cut to the first `n` ranks.
    pub fn test_top_n(&self, n: usize) -> Vec<LabeledList> {
        truncate_lists(&self.test, n)
    }

    /// Recommender-only metrics: RMSE for explicit data, AUC and NDCG@n for implicit.
    pub fn accuracy(&self, kind: FeedbackKind, n: usize) -> Vec<(&'static str, Result<f64>)> {
        let pairs: Vec<(f64, f64)> = self
            .test
            .iter()
            .flat_map(|l| l.list.entries.iter().zip(&l.labels).map(|(e, &y)| (e.score, y)))
            .collect();
        match kind {
            FeedbackKind::Explicit => vec![("rmse", rmse(&pairs))],
            FeedbackKind::Implicit => {
                let labels: Vec<Vec<f64>> = self.test.iter().map(|l| l.labels.clone()).collect();
                vec![("auc", auc(&pairs)), ("ndcg_at_n", ndcg_at_n(&labels, n))]
            }
        }
    }
}

pub(crate) fn truncate_lists(lists: &[LabeledList], n: usize) -> Vec<LabeledList> {
    lists
        .iter()
        .map(|l| {
            let mut l = l.clone();
            l.list.entries.truncate(n);
            l.labels.truncate(n);
            l
        })
        .collect()
}

pub(crate) fn fit_options(cfg: &ExperimentConfig, score_range: ScoreRange) -> FitOptions {
    FitOptions { n_bins: cfg.histogram_bins, score_range }
}

/// Calibration metrics of a fitted strategy on the test lists.
///
/// ECE over all test items is reported only for strategies defined beyond the top-N.
pub fn calibration_metrics(
    cfg: &ExperimentConfig,
    fitted: &FittedStrategy,
    test: &[LabeledList],
    n: usize,
) -> Result<Vec<(&'static str, f64, Option<usize>)>> {
    let top = fitted.predict_lists(&truncate_lists(test, n))?;
    let at_n = ece_at_n(&top, n, cfg.binning)?;
    let mut out = vec![("ece_at_n", at_n.value, Some(at_n.n_bins)), ("rdece_at_n", rdece_at_n(&top, n)?, None)];
    if matches!(fitted.kind(), StrategyKind::Vanilla | StrategyKind::Original) {
        let all: Vec<(f64, f64)> = fitted.predict_lists(test)?.iter().map(|p| (p.prediction, p.label)).collect();
        let e = ece_with(&all, cfg.binning)?;
        out.push(("ece", e.value, Some(e.n_bins)));
    }
    Ok(out)
}

/// Cells of a run in output order: strategies as listed, each across the
/// calibrators; vanilla appears once without a calibrator.
pub fn combinations(cfg: &ExperimentConfig) -> Vec<(StrategyKind, Option<CalibratorKind>)> {
    let mut out = Vec::new();
    for &s in &cfg.strategies {
        if s.needs_calibrator() {
            out.extend(cfg.calibrators.iter().map(|&c| (s, Some(c))));
        } else {
            out.push((s, None));
        }
    }
    out
}

/// Result rows and their per-cell summary.
#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub rows: Vec<ResultRow>,
    pub summary: Vec<SummaryRow>,
    /// Fitted models per seed, when `save_models` is set.
    pub bundles: Vec<ModelBundle>,
}

impl ExperimentOutput {
    /// Writes `results.csv`, `summary.csv` and any model bundles into `dir`.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        write_csv(&self.rows, dir.join("results.csv"))?;
        write_csv(&self.summary, dir.join("summary.csv"))?;
        for b in &self.bundles {
            b.save(dir.join("models").join(format!("seed-{}.json", b.seed)))?;
        }
        Ok(())
    }
}

struct RowBase<'a> {
    seed: u64,
    recommender: &'a str,
    calibrator: Option<CalibratorKind>,
    strategy: Option<StrategyKind>,
    n: usize,
    tnf: Option<(f64, usize)>,
}

impl RowBase<'_> {
    fn row(&self, metric: &str, value: Option<f64>, bins: Option<usize>, error: Option<String>) -> ResultRow {
        ResultRow {
            seed: self.seed,
            recommender: self.recommender.to_string(),
            calibrator: self.calibrator.map_or("none", |c| c.name()).to_string(),
            strategy: self.strategy.map_or("none", |s| s.name()).to_string(),
            n: Some(self.n),
            alpha: self.tnf.map(|t| t.0),
            n_groups: self.tnf.map(|t| t.1),
            metric: metric.to_string(),
            value,
            bins,
            error,
        }
    }

    fn failure(&self, e: &Error) -> ResultRow {
        self.row(FAILURE_METRIC, None, None, Some(e.to_string()))
    }
}

/// Evaluates each combination at each list length for one prepared seed.
fn seed_rows(cfg: &ExperimentConfig, run: &SeedRun, kind: FeedbackKind, n_list: &[usize]) -> (Vec<ResultRow>, Vec<FittedStrategy>) {
    let recommender = cfg.recommender.name();
    let mut rows = Vec::new();
    let mut fitted_out = Vec::new();
    for &n in n_list {
        let base = RowBase { seed: run.seed, recommender, calibrator: None, strategy: None, n, tnf: None };
        for (metric, value) in run.accuracy(kind, n) {
            rows.push(match value {
                Ok(v) => base.row(metric, Some(v), None, None),
                Err(e) => base.row(metric, None, None, Some(e.to_string())),
            });
        }
        let cells: Vec<_> = combinations(cfg)
            .into_par_iter()
            .map(|(strategy, calibrator)| {
                let tnf = (strategy == StrategyKind::Tnf).then(|| (cfg.alpha, cfg.groups_for(n)));
                let base = RowBase { seed: run.seed, recommender, calibrator, strategy: Some(strategy), n, tnf };
                let result = run
                    .fit_strategy(cfg, strategy, calibrator, n, tnf.unwrap_or((cfg.alpha, 1)))
                    .and_then(|f| calibration_metrics(cfg, &f, &run.test, n).map(|m| (f, m)));
                match result {
                    Ok((f, metrics)) => {
                        (metrics.into_iter().map(|(m, v, b)| base.row(m, Some(v), b, None)).collect(), Some(f))
                    }
                    Err(e) => {
                        log::warn!("seed {} {strategy}/{:?} at N={n}: {e}", run.seed, calibrator);
                        (vec![base.failure(&e)], None)
                    }
                }
            })
            .collect();
        for (r, f) in cells {
            rows.extend(r);
            if n == cfg.n {
                fitted_out.extend(f);
            }
        }
    }
    (rows, fitted_out)
}

fn seed_failure_rows(cfg: &ExperimentConfig, seed: u64, n_list: &[usize], e: &Error) -> Vec<ResultRow> {
    let recommender = cfg.recommender.name();
    let mut rows = Vec::new();
    for &n in n_list {
        for (strategy, calibrator) in combinations(cfg) {
            let tnf = (strategy == StrategyKind::Tnf).then(|| (cfg.alpha, cfg.groups_for(n)));
            rows.push(RowBase { seed, recommender, calibrator, strategy: Some(strategy), n, tnf }.failure(e));
        }
    }
    rows
}

fn run_over_seeds(cfg: &ExperimentConfig, n_list: &[usize]) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let data = load_dataset(&cfg.dataset)?;
    let kind = data.table.kind();
    let with_ensemble = cfg.strategies.contains(&StrategyKind::Vad);
    let mut rows = Vec::new();
    let mut bundles = Vec::new();
    for &seed in &cfg.seeds {
        log::info!("seed {seed}: fitting {}", cfg.recommender.name());
        match SeedRun::prepare(cfg, &data, seed, with_ensemble) {
            Ok(run) => {
                let (r, fitted) = seed_rows(cfg, &run, kind, n_list);
                rows.extend(r);
                if cfg.save_models {
                    bundles.push(ModelBundle::new(seed, run.model.clone(), fitted));
                }
            }
            Err(e) => {
                log::warn!("seed {seed}: {e}");
                rows.extend(seed_failure_rows(cfg, seed, n_list, &e));
            }
        }
    }
    let summary = summarize(&rows);
    Ok(ExperimentOutput { rows, summary, bundles })
}

/// Runs every (seed, calibrator, strategy) cell at the configured N.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    run_over_seeds(cfg, &[cfg.n])
}

/// Repeats the evaluation for each list length, reusing each seed's
/// recommender; TNF and VAD are refitted per N.
pub fn run_sweep_n(cfg: &ExperimentConfig, n_list: &[usize]) -> Result<ExperimentOutput> {
    if n_list.is_empty() || n_list.contains(&0) {
        return Err(Error::Config("N list must be non-empty with entries of at least 1".into()));
    }
    run_over_seeds(cfg, n_list)
}

/// TNF over an (α, n_g) grid at the configured N, per calibrator.
#[derive(Debug, Clone)]
pub struct GridOutput {
    pub rows: Vec<ResultRow>,
    pub heatmap: Vec<HeatmapCell>,
}

impl GridOutput {
    /// Writes `results.csv` and `heatmap.csv` into `dir`.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        write_csv(&self.rows, dir.join("results.csv"))?;
        write_csv(&self.heatmap, dir.join("heatmap.csv"))
    }
}

pub fn run_sensitivity_grid(cfg: &ExperimentConfig, alphas: &[f64], groups: &[usize]) -> Result<GridOutput> {
    cfg.validate()?;
    if alphas.is_empty() || groups.is_empty() {
        return Err(Error::Config("grid axes must be non-empty".into()));
    }
    if let Some(a) = alphas.iter().find(|a| !(**a >= 0.0 && a.is_finite())) {
        return Err(Error::Config(format!("alpha must be non-negative, got {a}")));
    }
    if cfg.calibrators.is_empty() {
        return Err(Error::Config("the grid needs at least one calibrator".into()));
    }
    let data = load_dataset(&cfg.dataset)?;
    let n = cfg.n;
    let recommender = cfg.recommender.name();
    let cells: Vec<(CalibratorKind, f64, usize)> = cfg
        .calibrators
        .iter()
        .flat_map(|&c| alphas.iter().flat_map(move |&a| groups.iter().map(move |&g| (c, a, g))))
        .collect();
    let mut rows = Vec::new();
    for &seed in &cfg.seeds {
        log::info!("seed {seed}: fitting {recommender}");
        let run = SeedRun::prepare(cfg, &data, seed, false);
        let seed_rows: Vec<Vec<ResultRow>> = cells
            .par_iter()
            .map(|&(c, alpha, g)| {
                let base = RowBase {
                    seed,
                    recommender,
                    calibrator: Some(c),
                    strategy: Some(StrategyKind::Tnf),
                    n,
                    tnf: Some((alpha, g)),
                };
                let result = run.as_ref().map_err(|e| Error::Training(e.to_string())).and_then(|run| {
                    let f = run.fit_strategy(cfg, StrategyKind::Tnf, Some(c), n, (alpha, g))?;
                    calibration_metrics(cfg, &f, &run.test, n)
                });
                match result {
                    Ok(m) => m.into_iter().map(|(name, v, b)| base.row(name, Some(v), b, None)).collect(),
                    Err(e) => vec![base.failure(&e)],
                }
            })
            .collect();
        rows.extend(seed_rows.into_iter().flatten());
    }
    let heatmap = cells
        .iter()
        .map(|&(c, alpha, g)| {
            let in_cell = |r: &&ResultRow| r.calibrator == c.name() && r.alpha == Some(alpha) && r.n_groups == Some(g);
            let values = |metric: &str| -> Vec<f64> {
                rows.iter().filter(in_cell).filter(|r| r.metric == metric).filter_map(|r| r.value).collect()
            };
            let stat = |v: &[f64]| if v.is_empty() { (None, None) } else { (Some(mean(v)), Some(std_dev(v))) };
            let (ece, rdece) = (values("ece_at_n"), values("rdece_at_n"));
            let (ece_at_n, ece_at_n_std) = stat(&ece);
            let (rdece_at_n, rdece_at_n_std) = stat(&rdece);
            HeatmapCell {
                calibrator: c.name().to_string(),
                alpha,
                n_groups: g,
                n,
                ece_at_n,
                ece_at_n_std,
                rdece_at_n,
                rdece_at_n_std,
                seeds: ece.len(),
                error: rows.iter().filter(in_cell).find_map(|r| r.error.clone()),
            }
        })
        .collect();
    Ok(GridOutput { rows, heatmap })
}
