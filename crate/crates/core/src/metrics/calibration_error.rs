use serde::{Deserialize, Serialize};

use super::binning::{adaptive_bin_count, equal_count_bins, Bin};
use super::RankedPrediction;
use crate::error::{Error, Result};

/// How ECE picks its bin count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Binning {
    /// Largest monotone bin count up to `max_bins` (default `min(n / 10, 100)`).
    Adaptive { max_bins: Option<usize> },
    Fixed(usize),
}

impl Default for Binning {
    fn default() -> Self {
        Binning::Adaptive { max_bins: None }
    }
}

/// A metric value together with the number of bins it used.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinCount {
    pub value: f64,
    pub n_bins: usize,
}

fn weighted_gap(bins: &[Bin], n: usize) -> f64 {
    bins.iter().map(|b| b.count as f64 / n as f64 * b.gap()).sum()
}

/// Expected calibration error over `m` equal-count bins of `(prediction, label)` pairs.
pub fn ece(pairs: &[(f64, f64)], m: usize) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::Metric("ece of an empty sample".into()));
    }
    Ok(weighted_gap(&equal_count_bins(pairs, m)?, pairs.len()))
}

/// ECE with the bin count chosen by `binning`.
pub fn ece_with(pairs: &[(f64, f64)], binning: Binning) -> Result<BinCount> {
    if pairs.is_empty() {
        return Err(Error::Metric("ece of an empty sample".into()));
    }
    let m = match binning {
        Binning::Adaptive { max_bins } => adaptive_bin_count(pairs, max_bins),
        Binning::Fixed(m) => m,
    };
    Ok(BinCount { value: ece(pairs, m)?, n_bins: m })
}

fn top_n(samples: &[RankedPrediction], n: usize) -> Vec<RankedPrediction> {
    samples.iter().copied().filter(|s| s.rank >= 1 && s.rank <= n).collect()
}

/// ECE restricted to samples ranked within the top `n`.
pub fn ece_at_n(samples: &[RankedPrediction], n: usize, binning: Binning) -> Result<BinCount> {
    let top: Vec<(f64, f64)> = top_n(samples, n).iter().map(|s| (s.prediction, s.label)).collect();
    if top.is_empty() {
        return Err(Error::Metric(format!("no samples ranked within top-{n}")));
    }
    ece_with(&top, binning)
}

/// Rank-discounted ECE with `w_r = 1 / r`.
pub fn rdece_at_n(samples: &[RankedPrediction], n: usize) -> Result<f64> {
    rdece_at_n_weighted(samples, n, |r| 1.0 / r as f64)
}

/// Rank-discounted ECE with an arbitrary rank weight.
///
/// One bin per rank; ranks without samples contribute nothing and are left
/// out of the weight normalizer.
pub fn rdece_at_n_weighted(samples: &[RankedPrediction], n: usize, weight: impl Fn(usize) -> f64) -> Result<f64> {
    let top = top_n(samples, n);
    if top.is_empty() {
        return Err(Error::Metric(format!("no samples ranked within top-{n}")));
    }
    let mut sums = vec![(0.0, 0.0, 0usize); n + 1];
    for s in &top {
        let e = &mut sums[s.rank];
        e.0 += s.prediction;
        e.1 += s.label;
        e.2 += 1;
    }
    let n_prime = top.len() as f64;
    let mut total = 0.0;
    let mut weight_sum = 0.0;
    for (r, &(sp, sl, count)) in sums.iter().enumerate().skip(1) {
        if count == 0 {
            continue;
        }
        let w = weight(r);
        weight_sum += w;
        let gap = (sl / count as f64 - sp / count as f64).abs();
        total += w * count as f64 / n_prime * gap;
    }
    Ok(n as f64 / weight_sum * total)
}
