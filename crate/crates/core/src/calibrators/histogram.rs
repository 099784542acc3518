use log::warn;
use serde::{Deserialize, Serialize};

use super::{sorted_by_score, CalibrationSample, InputDomain};
use crate::error::{Error, Result};
use crate::math::equal_count_sizes;

/// Equal-count histogram binning over scores.
///
/// `edges[m]` separates bin `m` from bin `m + 1`; scores below the first
/// edge fall in bin 0 and scores at or above the last edge in the last bin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramBinning {
    pub edges: Vec<f64>,
    pub values: Vec<f64>,
    pub input_domain: InputDomain,
}

/// Sorts samples by score, cuts them into `n_bins` bins of (nearly) equal
/// count and sets each bin's value to its weighted mean label.
pub fn fit_histogram(samples: &[CalibrationSample], n_bins: usize) -> Result<HistogramBinning> {
    if samples.is_empty() {
        return Err(Error::Fit("histogram binning needs at least one sample".into()));
    }
    let mut m = n_bins.max(1);
    if samples.len() < m {
        warn!("only {} samples for {m} histogram bins; using {} bins", samples.len(), samples.len());
        m = samples.len();
    }
    let order = sorted_by_score(samples);
    let mut edges = Vec::with_capacity(m - 1);
    let mut values = Vec::with_capacity(m);
    let mut start = 0;
    for size in equal_count_sizes(samples.len(), m) {
        let bin = &order[start..start + size];
        let (num, den) = bin.iter().fold((0.0, 0.0), |(n, d), &k| {
            (n + samples[k].weight * samples[k].label, d + samples[k].weight)
        });
        values.push(num / den);
        if start + size < order.len() {
            let last = samples[bin[size - 1]].score;
            let next = samples[order[start + size]].score;
            edges.push(0.5 * (last + next));
        }
        start += size;
    }
    Ok(HistogramBinning { edges, values, input_domain: InputDomain::Unbounded })
}

impl HistogramBinning {
    pub fn bin_of(&self, score: f64) -> usize {
        self.edges.partition_point(|&e| e <= score)
    }

    pub fn calibrate(&self, score: f64) -> f64 {
        self.values[self.bin_of(score)]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_positive_labels_give_unit_bins() {
        let samples: Vec<_> =
            (0..30).map(|k| CalibrationSample::new(1.0, k as f64 * 0.03, 1, 1.0 + (k % 4) as f64)).collect();
        let h = fit_histogram(&samples, 15).unwrap();
        assert_eq!(h.values.len(), 15);
        assert!(h.values.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn weighted_two_bin_example() {
        let samples = [
            CalibrationSample::new(0.0, 0.1, 1, 1.0),
            CalibrationSample::new(1.0, 0.2, 1, 1.0),
            CalibrationSample::new(0.0, 0.8, 1, 1.0),
            CalibrationSample::new(1.0, 0.9, 1, 3.0),
        ];
        let h = fit_histogram(&samples, 2).unwrap();
        assert_eq!(h.values, vec![0.5, 0.75]);
        assert_eq!(h.edges, vec![0.5]);
    }

    #[test]
    fn unit_weights_match_plain_means() {
        let samples: Vec<_> =
            (0..23).map(|k| CalibrationSample::unranked(((k * 7) % 3) as f64 / 2.0, ((k * 11) % 23) as f64)).collect();
        let h = fit_histogram(&samples, 4).unwrap();
        let mut sorted = samples.clone();
        sorted.sort_by(|a, b| a.score.total_cmp(&b.score));
        let mut start = 0;
        for (m, size) in [6, 6, 6, 5].into_iter().enumerate() {
            let mean = sorted[start..start + size].iter().map(|s| s.label).sum::<f64>() / size as f64;
            assert_eq!(h.values[m], mean);
            start += size;
        }
    }

    #[test]
    fn queries_outside_range_clamp_to_end_bins() {
        let samples: Vec<_> = (0..6).map(|k| CalibrationSample::unranked(k as f64 / 5.0, k as f64)).collect();
        let h = fit_histogram(&samples, 3).unwrap();
        assert_eq!(h.calibrate(-100.0), h.values[0]);
        assert_eq!(h.calibrate(100.0), h.values[2]);
    }

    #[test]
    fn fewer_samples_than_bins_shrinks_bin_count() {
        let samples: Vec<_> = (0..3).map(|k| CalibrationSample::unranked(k as f64, k as f64)).collect();
        let h = fit_histogram(&samples, 15).unwrap();
        assert_eq!(h.values, vec![0.0, 1.0, 2.0]);
    }
}
