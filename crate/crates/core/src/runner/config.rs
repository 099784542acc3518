use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::calibrators::CalibratorKind;
use crate::dataset::{CsvSchema, FeedbackKind, SyntheticSpec};
use crate::error::{Error, Result};
use crate::metrics::Binning;
use crate::recommenders::RecommenderConfig;
use crate::strategy::{default_n_groups, StrategyKind, VadParams};

/// Where the interactions come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum DatasetSource {
    Synthetic(SyntheticSpec),
    Csv {
        path: PathBuf,
        feedback: FeedbackKind,
        #[serde(default)]
        schema: CsvSchema,
    },
}

/// Axes of the TNF sensitivity grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridSpec {
    pub alphas: Vec<f64>,
    pub groups: Vec<usize>,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { alphas: vec![0.0, 0.2, 0.5, 1.0, 2.0, 3.0], groups: vec![1, 2, 4, 10, 20] }
    }
}

/// A complete experiment description, read from JSON. Every field has a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetSource,
    pub recommender: RecommenderConfig,
    pub calibrators: Vec<CalibratorKind>,
    pub strategies: Vec<StrategyKind>,
    /// List length N.
    pub n: usize,
    /// TNF group count; `max(1, round(N / 5))` when absent.
    pub n_groups: Option<usize>,
    /// TNF rank-weight exponent.
    pub alpha: f64,
    pub vad: VadParams,
    pub seeds: Vec<u64>,
    /// Bin selection for ECE and ECE@N.
    pub binning: Binning,
    /// Bin count of histogram-binning calibrators.
    pub histogram_bins: usize,
    /// List lengths for `sweep-n`.
    pub sweep_n: Vec<usize>,
    pub grid: GridSpec,
    pub output_dir: PathBuf,
    /// Also write each seed's fitted models as a JSON bundle.
    pub save_models: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            dataset: DatasetSource::Synthetic(SyntheticSpec::default()),
            recommender: RecommenderConfig::ScoreTable,
            calibrators: vec![CalibratorKind::Isotonic],
            strategies: vec![StrategyKind::Vanilla, StrategyKind::Original, StrategyKind::Tnf],
            n: 20,
            n_groups: None,
            alpha: 1.0,
            vad: VadParams::default(),
            seeds: (0..10).collect(),
            binning: Binning::default(),
            histogram_bins: 15,
            sweep_n: vec![5, 10, 20, 50, 100],
            grid: GridSpec::default(),
            output_dir: PathBuf::from("results"),
            save_models: false,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Group count used for TNF at list length `n`.
    pub fn groups_for(&self, n: usize) -> usize {
        self.n_groups.unwrap_or_else(|| default_n_groups(n))
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Config("n must be at least 1".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("seeds must not be empty".into()));
        }
        if self.strategies.is_empty() {
            return Err(Error::Config("at least one strategy is required".into()));
        }
        if self.calibrators.is_empty() && self.strategies.iter().any(|s| s.needs_calibrator()) {
            return Err(Error::Config("at least one calibrator is required unless only vanilla is run".into()));
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::Config(format!("alpha must be non-negative, got {}", self.alpha)));
        }
        if self.n_groups == Some(0) {
            return Err(Error::Config("n_groups must be at least 1".into()));
        }
        if self.strategies.contains(&StrategyKind::Vad) && self.vad.k < 2 {
            return Err(Error::Config(format!("vad.k must be at least 2, got {}", self.vad.k)));
        }
        if self.histogram_bins == 0 {
            return Err(Error::Config("histogram_bins must be at least 1".into()));
        }
        if matches!(self.binning, Binning::Fixed(0) | Binning::Adaptive { max_bins: Some(0) }) {
            return Err(Error::Config("bin counts must be at least 1".into()));
        }
        if self.sweep_n.contains(&0) {
            return Err(Error::Config("sweep_n entries must be at least 1".into()));
        }
        let mut seen = self.seeds.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != self.seeds.len() {
            return Err(Error::Config("seeds must be distinct".into()));
        }
        Ok(())
    }
}
