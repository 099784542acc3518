use serde::{Deserialize, Serialize};

use super::{ScoreRange, Scorer};
use crate::dataset::{FeedbackKind, InteractionTable};
use crate::error::{Error, Result};

/// Item-based neighborhood model with adjusted-cosine similarity.
///
/// Ratings are centered on each user's mean. The similarity of items `i`
/// and `j` is the cosine of their centered rating columns (unrated cells
/// count as zero). A prediction is the user's mean plus the
/// similarity-weighted average of the user's centered ratings on the `k`
/// most similar items they rated, clamped to the rating scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemKnn {
    pub k: usize,
    pub n_items: usize,
    pub global_mean: f64,
    pub rating_range: (f64, f64),
    /// `None` for users without training ratings.
    pub user_means: Vec<Option<f64>>,
    /// Per-user `(item, rating - user_mean)`, sorted by item.
    pub user_ratings: Vec<Vec<(u32, f64)>>,
    /// Dense `n_items x n_items` similarity matrix.
    pub similarity: Vec<f64>,
}

pub fn fit_itemknn(train: &InteractionTable, k: usize) -> Result<ItemKnn> {
    train.ensure_fittable("fit_itemknn")?;
    if k < 1 {
        return Err(Error::Config("itemknn neighborhood size k must be at least 1".into()));
    }
    if train.kind() != FeedbackKind::Explicit {
        return Err(Error::Config("itemknn needs explicit ratings".into()));
    }
    let rating_range = train.rating_range().expect("explicit tables carry a range");
    let ni = train.n_items();

    let mut user_means = Vec::with_capacity(train.n_users());
    let mut user_ratings = Vec::with_capacity(train.n_users());
    for indices in train.records_by_user() {
        if indices.is_empty() {
            user_means.push(None);
            user_ratings.push(Vec::new());
            continue;
        }
        let recs = train.records();
        let mean = indices.iter().map(|&i| recs[i].feedback).sum::<f64>() / indices.len() as f64;
        let mut centered: Vec<(u32, f64)> =
            indices.iter().map(|&i| (recs[i].item, recs[i].feedback - mean)).collect();
        centered.sort_unstable_by_key(|&(item, _)| item);
        user_means.push(Some(mean));
        user_ratings.push(centered);
    }

    let mut dots = vec![0.0; ni * ni];
    let mut norms = vec![0.0; ni];
    for ratings in &user_ratings {
        for (a, &(ia, ca)) in ratings.iter().enumerate() {
            norms[ia as usize] += ca * ca;
            let row = &mut dots[ia as usize * ni..(ia as usize + 1) * ni];
            for &(ib, cb) in &ratings[a + 1..] {
                row[ib as usize] += ca * cb;
            }
        }
    }
    let mut similarity = vec![0.0; ni * ni];
    for i in 0..ni {
        similarity[i * ni + i] = if norms[i] > 0.0 { 1.0 } else { 0.0 };
        for j in i + 1..ni {
            let denom = (norms[i] * norms[j]).sqrt();
            let s = if denom > 0.0 { dots[i * ni + j] / denom } else { 0.0 };
            similarity[i * ni + j] = s;
            similarity[j * ni + i] = s;
        }
    }

    Ok(ItemKnn {
        k,
        n_items: ni,
        global_mean: train.global_mean(),
        rating_range,
        user_means,
        user_ratings,
        similarity,
    })
}

impl ItemKnn {
    pub fn similarity(&self, a: u32, b: u32) -> f64 {
        self.similarity[a as usize * self.n_items + b as usize]
    }

    fn predict(&self, user: u32, item: u32) -> f64 {
        let Some(mean) = self.user_means.get(user as usize).copied().flatten() else {
            return self.global_mean;
        };
        let mut neighbors: Vec<(f64, u32, f64)> = self.user_ratings[user as usize]
            .iter()
            .filter(|&&(j, _)| j != item)
            .map(|&(j, c)| (self.similarity(item, j), j, c))
            .filter(|&(s, _, _)| s != 0.0)
            .collect();
        if neighbors.is_empty() {
            return mean;
        }
        let by_sim = |a: &(f64, u32, f64), b: &(f64, u32, f64)| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1));
        if neighbors.len() > self.k {
            neighbors.select_nth_unstable_by(self.k - 1, by_sim);
            neighbors.truncate(self.k);
        }
        neighbors.sort_unstable_by(by_sim);
        let (num, den) = neighbors
            .iter()
            .fold((0.0, 0.0), |(n, d), &(s, _, c)| (n + s * c, d + s.abs()));
        mean + num / den
    }
}

impl Scorer for ItemKnn {
    fn score(&self, user: u32, item: u32) -> f64 {
        let (lo, hi) = self.rating_range;
        self.predict(user, item).clamp(lo, hi)
    }

    fn score_range(&self) -> ScoreRange {
        let (min, max) = self.rating_range;
        ScoreRange::RatingScale { min, max }
    }
}
