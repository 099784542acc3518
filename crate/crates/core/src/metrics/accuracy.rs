use crate::error::{Error, Result};

/// Root mean squared error of `(prediction, label)` pairs.
pub fn rmse(pairs: &[(f64, f64)]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::Metric("rmse of an empty sample".into()));
    }
    Ok((pairs.iter().map(|(p, y)| (p - y) * (p - y)).sum::<f64>() / pairs.len() as f64).sqrt())
}

/// Area under the ROC curve of `(score, binary label)` pairs via the rank-sum
/// statistic, with tied scores sharing their average rank.
pub fn auc(pairs: &[(f64, f64)]) -> Result<f64> {
    let n_pos = pairs.iter().filter(|p| p.1 == 1.0).count();
    let n_neg = pairs.iter().filter(|p| p.1 == 0.0).count();
    if n_pos + n_neg != pairs.len() {
        return Err(Error::Metric("auc needs binary labels".into()));
    }
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::Metric("auc is undefined for single-class labels".into()));
    }
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    order.sort_by(|&a, &b| pairs[a].0.total_cmp(&pairs[b].0));
    let mut pos_rank_sum = 0.0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && pairs[order[end]].0 == pairs[order[start]].0 {
            end += 1;
        }
        // 1-based ranks start+1..=end share their mean
        let avg_rank = (start + 1 + end) as f64 / 2.0;
        let positives = order[start..end].iter().filter(|&&k| pairs[k].1 == 1.0).count();
        pos_rank_sum += avg_rank * positives as f64;
        start = end;
    }
    let (p, q) = (n_pos as f64, n_neg as f64);
    Ok((pos_rank_sum - p * (p + 1.0) / 2.0) / (p * q))
}

/// Mean NDCG@n over users with at least one positive.
///
/// Each list holds binary relevance labels in ranked order; gains are the
/// labels and the discount is `log2(position + 1)`.
pub fn ndcg_at_n(lists: &[Vec<f64>], n: usize) -> Result<f64> {
    let dcg = |labels: &[f64]| -> f64 {
        labels.iter().take(n).enumerate().map(|(k, &rel)| rel / ((k + 2) as f64).log2()).sum()
    };
    let mut total = 0.0;
    let mut users = 0usize;
    for labels in lists {
        if !labels.iter().any(|&l| l > 0.0) {
            continue;
        }
        let mut ideal = labels.clone();
        ideal.sort_by(|a, b| b.total_cmp(a));
        total += dcg(labels) / dcg(&ideal);
        users += 1;
    }
    if users == 0 {
        return Err(Error::Metric("ndcg needs at least one user with a positive item".into()));
    }
    Ok(total / users as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn perfect_ranking() {
        let pairs = [(0.9, 1.0), (0.8, 1.0), (0.3, 0.0), (0.1, 0.0)];
        assert_eq!(auc(&pairs).unwrap(), 1.0);
        assert_eq!(ndcg_at_n(&[vec![1.0, 1.0, 0.0], vec![1.0, 0.0]], 20).unwrap(), 1.0);
    }

    #[test]
    fn rmse_zero_for_exact_predictions() {
        assert_eq!(rmse(&[(3.0, 3.0), (4.5, 4.5)]).unwrap(), 0.0);
        assert!((rmse(&[(1.0, 0.0), (0.0, 1.0)]).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn auc_counts_ties_as_half() {
        let pairs = [(0.5, 1.0), (0.5, 0.0)];
        assert_eq!(auc(&pairs).unwrap(), 0.5);
        let pairs = [(0.1, 1.0), (0.5, 0.0), (0.5, 1.0), (0.9, 0.0)];
        // pairs (pos, neg): (0.1,0.5)=0, (0.1,0.9)=0, (0.5,0.5)=0.5, (0.5,0.9)=0
        assert!((auc(&pairs).unwrap() - 0.125).abs() < 1e-15);
    }

    #[test]
    fn auc_single_class_is_error() {
        assert!(auc(&[(0.1, 1.0), (0.2, 1.0)]).is_err());
    }

    #[test]
    fn random_scores_have_auc_near_half() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let pairs: Vec<_> =
            (0..100_000).map(|k| (rng.random::<f64>(), (k % 2) as f64)).collect();
        assert!((auc(&pairs).unwrap() - 0.5).abs() < 0.01);
    }

    #[test]
    fn ndcg_hand_example() {
        // relevant items at positions 2 and 3 of 3
        let got = ndcg_at_n(&[vec![0.0, 1.0, 1.0]], 3).unwrap();
        let dcg = 1.0 / 3f64.log2() + 1.0 / 4f64.log2();
        let idcg = 1.0 + 1.0 / 3f64.log2();
        assert!((got - dcg / idcg).abs() < 1e-15);
        // cutoff 1 drops both relevant items
        assert_eq!(ndcg_at_n(&[vec![0.0, 1.0, 1.0]], 1).unwrap(), 0.0);
    }
}
