use serde::{Deserialize, Serialize};

use super::binning::{equal_count_bins, Bin};
use super::RankedPrediction;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BinScheme {
    EqualCount,
    EqualWidth,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReliabilityOptions {
    pub bins: usize,
    pub scheme: BinScheme,
    /// Prediction range used for equal-width bins and the frequency histogram.
    pub range: (f64, f64),
    pub histogram_buckets: usize,
}

impl Default for ReliabilityOptions {
    fn default() -> Self {
        ReliabilityOptions { bins: 10, scheme: BinScheme::EqualCount, range: (0.0, 1.0), histogram_buckets: 20 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityPoint {
    pub mean_prediction: f64,
    pub mean_label: f64,
    pub count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramBucket {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityDiagram {
    /// Ordered by mean prediction.
    pub points: Vec<ReliabilityPoint>,
    /// Prediction frequencies over equal-width buckets of `range`.
    pub histogram: Vec<HistogramBucket>,
}

fn width_index(x: f64, (lo, hi): (f64, f64), m: usize) -> usize {
    if hi <= lo {
        return 0;
    }
    (((x - lo) / (hi - lo) * m as f64).floor().max(0.0) as usize).min(m - 1)
}

/// Per-bin mean prediction against mean label, plus a prediction histogram.
///
/// Equal-width bins that receive no samples are omitted.
pub fn reliability_diagram(pairs: &[(f64, f64)], opts: &ReliabilityOptions) -> Result<ReliabilityDiagram> {
    if opts.bins == 0 || opts.histogram_buckets == 0 {
        return Err(Error::Metric("reliability diagram needs at least one bin".into()));
    }
    let bins: Vec<Bin> = match opts.scheme {
        BinScheme::EqualCount => {
            if pairs.is_empty() {
                Vec::new()
            } else {
                equal_count_bins(pairs, opts.bins.min(pairs.len()))?
            }
        }
        BinScheme::EqualWidth => {
            let mut members = vec![Vec::new(); opts.bins];
            for (k, p) in pairs.iter().enumerate() {
                members[width_index(p.0, opts.range, opts.bins)].push(k);
            }
            members.into_iter().filter(|m| !m.is_empty()).map(|m| Bin::from_members(pairs, m)).collect()
        }
    };
    let mut points: Vec<ReliabilityPoint> = bins
        .iter()
        .map(|b| ReliabilityPoint { mean_prediction: b.mean_prediction, mean_label: b.mean_label, count: b.count })
        .collect();
    points.sort_by(|a, b| a.mean_prediction.total_cmp(&b.mean_prediction));

    let (lo, hi) = opts.range;
    let m = opts.histogram_buckets;
    let step = (hi - lo) / m as f64;
    let mut histogram: Vec<HistogramBucket> = (0..m)
        .map(|k| HistogramBucket { lo: lo + k as f64 * step, hi: lo + (k + 1) as f64 * step, count: 0 })
        .collect();
    for p in pairs {
        histogram[width_index(p.0, opts.range, m)].count += 1;
    }
    Ok(ReliabilityDiagram { points, histogram })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankGroupPoint {
    /// 1-based group index.
    pub group: usize,
    pub rank_lo: usize,
    pub rank_hi: usize,
    pub mean_prediction: f64,
    pub mean_label: f64,
    pub count: usize,
}

/// Mean prediction and mean label per consecutive group of `group_size` ranks,
/// up to `max_rank`. Groups without samples are omitted.
pub fn rank_calibration_plot(
    samples: &[RankedPrediction],
    group_size: usize,
    max_rank: usize,
) -> Result<Vec<RankGroupPoint>> {
    if group_size == 0 {
        return Err(Error::Metric("group size must be at least 1".into()));
    }
    let n_groups = max_rank.div_ceil(group_size);
    let mut sums = vec![(0.0, 0.0, 0usize); n_groups];
    for s in samples.iter().filter(|s| s.rank >= 1 && s.rank <= max_rank) {
        let e = &mut sums[(s.rank - 1) / group_size];
        e.0 += s.prediction;
        e.1 += s.label;
        e.2 += 1;
    }
    Ok(sums
        .into_iter()
        .enumerate()
        .filter(|(_, e)| e.2 > 0)
        .map(|(g, (sp, sl, count))| RankGroupPoint {
            group: g + 1,
            rank_lo: g * group_size + 1,
            rank_hi: ((g + 1) * group_size).min(max_rank),
            mean_prediction: sp / count as f64,
            mean_label: sl / count as f64,
            count,
        })
        .collect())
}
