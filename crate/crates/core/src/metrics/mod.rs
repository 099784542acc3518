//! Calibration error metrics, plot data and reference accuracy metrics.

mod accuracy;
mod binning;
mod calibration_error;
mod diagrams;

pub use accuracy::{auc, ndcg_at_n, rmse};
pub use binning::{adaptive_bin_count, default_max_bins, equal_count_bins, Bin};
pub use calibration_error::{ece, ece_at_n, ece_with, rdece_at_n, rdece_at_n_weighted, BinCount, Binning};
pub use diagrams::{
    rank_calibration_plot, reliability_diagram, BinScheme, HistogramBucket, RankGroupPoint, ReliabilityDiagram,
    ReliabilityOptions, ReliabilityPoint,
};

use serde::{Deserialize, Serialize};

/// A calibrated prediction with its observed label and list rank.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankedPrediction {
    pub prediction: f64,
    pub label: f64,
    /// 1-based rank in the user's list.
    pub rank: usize,
}

impl RankedPrediction {
    pub fn new(prediction: f64, label: f64, rank: usize) -> Self {
        RankedPrediction { prediction, label, rank }
    }
}

/// Discount applied per rank.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankWeight {
    /// `w_r = (1 / r)^exponent`.
    pub exponent: f64,
}

impl RankWeight {
    /// `w_r = 1 / r`.
    pub const RECIPROCAL: RankWeight = RankWeight { exponent: 1.0 };

    pub fn new(exponent: f64) -> Self {
        assert!(exponent >= 0.0, "rank weight exponent must be non-negative");
        RankWeight { exponent }
    }

    pub fn weight(&self, rank: usize) -> f64 {
        assert!(rank >= 1, "ranks start at 1");
        (1.0 / rank as f64).powf(self.exponent)
    }
}
