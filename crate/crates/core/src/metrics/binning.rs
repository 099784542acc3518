use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::equal_count_sizes;

/// A group of `(prediction, label)` pairs with close predictions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bin {
    /// Indices into the input pairs.
    pub members: Vec<usize>,
    pub mean_prediction: f64,
    pub mean_label: f64,
    pub count: usize,
}

impl Bin {
    pub(crate) fn from_members(pairs: &[(f64, f64)], members: Vec<usize>) -> Bin {
        let count = members.len();
        let (sp, sl) = members.iter().fold((0.0, 0.0), |(p, l), &k| (p + pairs[k].0, l + pairs[k].1));
        Bin { mean_prediction: sp / count as f64, mean_label: sl / count as f64, count, members }
    }

    pub fn gap(&self) -> f64 {
        (self.mean_label - self.mean_prediction).abs()
    }
}

/// Default upper bound of the adaptive bin sweep: `min(n / 10, 100)`, at least 1.
pub fn default_max_bins(n: usize) -> usize {
    (n / 10).clamp(1, 100)
}

fn sort_pairs(pairs: &[(f64, f64)]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    order.sort_by(|&a, &b| pairs[a].0.total_cmp(&pairs[b].0).then(pairs[a].1.total_cmp(&pairs[b].1)).then(a.cmp(&b)));
    order
}

/// Sorts pairs by prediction (then label, then input index) and cuts them
/// into `m` contiguous bins whose sizes differ by at most one.
pub fn equal_count_bins(pairs: &[(f64, f64)], m: usize) -> Result<Vec<Bin>> {
    if m == 0 {
        return Err(Error::Metric("bin count must be at least 1".into()));
    }
    if m > pairs.len() {
        return Err(Error::Metric(format!("{m} bins requested for {} samples", pairs.len())));
    }
    Ok(bins_from_order(pairs, &sort_pairs(pairs), m))
}

fn bins_from_order(pairs: &[(f64, f64)], order: &[usize], m: usize) -> Vec<Bin> {
    let mut start = 0;
    equal_count_sizes(order.len(), m)
        .into_iter()
        .map(|size| {
            let bin = Bin::from_members(pairs, order[start..start + size].to_vec());
            start += size;
            bin
        })
        .collect()
}

/// Largest `m <= max_bins` whose equal-count bins have non-decreasing mean labels.
///
/// `max_bins` defaults to [`default_max_bins`] and is capped at the number of pairs.
pub fn adaptive_bin_count(pairs: &[(f64, f64)], max_bins: Option<usize>) -> usize {
    let n = pairs.len();
    if n == 0 {
        return 1;
    }
    let m_max = max_bins.unwrap_or_else(|| default_max_bins(n)).clamp(1, n);
    let order = sort_pairs(pairs);
    let sorted_labels: Vec<f64> = order.iter().map(|&k| pairs[k].1).collect();
    (1..=m_max)
        .rev()
        .find(|&m| {
            let mut start = 0;
            let mut prev = f64::NEG_INFINITY;
            equal_count_sizes(n, m).into_iter().all(|size| {
                let mean = sorted_labels[start..start + size].iter().sum::<f64>() / size as f64;
                start += size;
                let ok = mean >= prev;
                prev = mean;
                ok
            })
        })
        .unwrap_or(1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bin_counts() {
        let pairs = [(0.4, 1.0), (0.1, 0.0), (0.3, 1.0), (0.2, 0.0)];
        let bins = equal_count_bins(&pairs, 2).unwrap();
        assert_eq!(bins.iter().map(|b| b.count).collect::<Vec<_>>(), vec![2, 2]);
        assert_eq!(bins[0].members, vec![1, 3]);
        assert_eq!(equal_count_bins(&pairs, 1).unwrap()[0].count, 4);
        assert!(equal_count_bins(&pairs, 4).unwrap().iter().all(|b| b.count == 1));
        assert!(equal_count_bins(&pairs, 5).is_err());
        assert!(equal_count_bins(&pairs, 0).is_err());
    }

    #[test]
    fn calibrated_distinct_pairs_use_max_bins() {
        let pairs: Vec<_> = (0..200).map(|k| (k as f64 / 200.0, k as f64 / 200.0)).collect();
        assert_eq!(adaptive_bin_count(&pairs, None), 20);
        assert_eq!(adaptive_bin_count(&pairs, Some(37)), 37);
    }

    #[test]
    fn constant_labels_use_max_bins() {
        let pairs: Vec<_> = (0..100).map(|k| (k as f64, 0.3)).collect();
        assert_eq!(adaptive_bin_count(&pairs, None), 10);
    }

    #[test]
    fn equal_bin_means_count_as_monotone() {
        let pairs = [(0.1, 1.0), (0.2, 0.0), (0.3, 1.0), (0.4, 0.0)];
        assert_eq!(adaptive_bin_count(&pairs, Some(2)), 2);
    }

    #[test]
    fn falls_back_to_one_bin() {
        let pairs = [(0.1, 1.0), (0.2, 1.0), (0.3, 0.0), (0.4, 0.0)];
        assert_eq!(adaptive_bin_count(&pairs, Some(4)), 1);
    }

    #[test]
    fn default_cap() {
        assert_eq!(default_max_bins(5), 1);
        assert_eq!(default_max_bins(250), 25);
        assert_eq!(default_max_bins(1_000_000), 100);
    }
}
