//! Fully observed synthetic feedback with known preference probabilities.
//!
//! True probabilities come from a biased logistic factor model. A separate
//! score matrix, distorted from the truth by item popularity and noise, plays
//! the role of a trained recommender whose ranking errors concentrate at the
//! top of each user's list.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{FeedbackKind, InteractionRecord, InteractionTable};
use crate::error::{Error, Result};
use crate::math::{logit, sigmoid};

const PROB_EPS: f64 = 1e-6;

/// How the generated scores depart from the true logits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum RankDistortion {
    /// `score = logit(p)`.
    Identity,
    /// `score = logit(p) + c1 * q + c2 * q^2`, `q` the item's popularity percentile in `[0, 1]`.
    Popularity { c1: f64, c2: f64 },
    /// Each user's `top_k` items by true probability are scored as `logit(p + delta)`.
    TopRankShift { top_k: usize, delta: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticSpec {
    pub n_users: usize,
    pub n_items: usize,
    pub latent_dim: usize,
    /// Standard deviation of the latent factor entries.
    pub factor_scale: f64,
    /// Standard deviation of the user and item logit biases.
    pub bias_scale: f64,
    /// Global logit offset; controls the overall positive rate.
    pub base_logit: f64,
    /// Standard deviation of Gaussian noise added to each score.
    pub noise_scale: f64,
    pub distortion: RankDistortion,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            n_users: 1000,
            n_items: 1000,
            latent_dim: 8,
            factor_scale: 0.6,
            bias_scale: 2.0,
            base_logit: -2.5,
            noise_scale: 1.5,
            distortion: RankDistortion::Popularity { c1: 3.0, c2: 0.0 },
            seed: 100,
        }
    }
}

/// Dense `n_users x n_items` matrix of reals, row-major by user.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthTable {
    n_items: usize,
    values: Vec<f64>,
}

impl TruthTable {
    pub(crate) fn new(n_items: usize, values: Vec<f64>) -> Self {
        TruthTable { n_items, values }
    }

    #[inline]
    pub fn get(&self, user: u32, item: u32) -> f64 {
        self.values[user as usize * self.n_items + item as usize]
    }

    pub fn n_items(&self) -> usize {
        self.n_items
    }

    pub fn n_users(&self) -> usize {
        self.values.len().checked_div(self.n_items).unwrap_or(0)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Generator output. `truth` holds `p_ui` and is meant for test oracles only.
#[derive(Debug, Clone)]
pub struct SyntheticData {
    pub table: InteractionTable,
    pub truth: TruthTable,
    /// Distorted scores, served by [`crate::recommenders::ScoreTableModel`].
    pub scores: TruthTable,
    /// Popularity percentile of each item.
    pub popularity: Vec<f64>,
}

pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<SyntheticData> {
    if spec.latent_dim < 1 {
        return Err(Error::Config("latent_dim must be at least 1".into()));
    }
    if spec.n_users == 0 || spec.n_items == 0 {
        return Err(Error::Config("synthetic spec needs at least one user and one item".into()));
    }
    let (nu, ni, d) = (spec.n_users, spec.n_items, spec.latent_dim);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut normal = |scale: f64, n: usize| -> Vec<f64> {
        (0..n).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect()
    };
    let user_factors = normal(spec.factor_scale, nu * d);
    let item_factors = normal(spec.factor_scale, ni * d);
    let user_bias = normal(spec.bias_scale, nu);
    let item_bias = normal(spec.bias_scale, ni);

    let mut logits = vec![0.0; nu * ni];
    for u in 0..nu {
        let pu = &user_factors[u * d..(u + 1) * d];
        for i in 0..ni {
            let qi = &item_factors[i * d..(i + 1) * d];
            let dot: f64 = pu.iter().zip(qi).map(|(a, b)| a * b).sum();
            logits[u * ni + i] = spec.base_logit + dot + user_bias[u] + item_bias[i];
        }
    }
    let probs: Vec<f64> = logits.iter().map(|&z| sigmoid(z)).collect();
    let popularity = popularity_percentiles(&probs, nu, ni);

    let mut scores = vec![0.0; nu * ni];
    match spec.distortion {
        RankDistortion::Identity => scores.copy_from_slice(&logits),
        RankDistortion::Popularity { c1, c2 } => {
            for (k, s) in scores.iter_mut().enumerate() {
                let q = popularity[k % ni];
                *s = logits[k] + c1 * q + c2 * q * q;
            }
        }
        RankDistortion::TopRankShift { top_k, delta } => {
            scores.copy_from_slice(&logits);
            let mut order: Vec<usize> = (0..ni).collect();
            for u in 0..nu {
                let row = &probs[u * ni..(u + 1) * ni];
                order.sort_by(|&a, &b| row[b].total_cmp(&row[a]).then(a.cmp(&b)));
                for &i in order.iter().take(top_k) {
                    scores[u * ni + i] = logit(row[i] + delta, PROB_EPS);
                }
            }
        }
    }

    let mut records = Vec::with_capacity(nu * ni);
    for u in 0..nu {
        for i in 0..ni {
            let k = u * ni + i;
            let label = if rng.random::<f64>() < probs[k] { 1.0 } else { 0.0 };
            if spec.noise_scale > 0.0 {
                scores[k] += spec.noise_scale * rng.sample::<f64, _>(StandardNormal);
            }
            records.push(InteractionRecord { user: u as u32, item: i as u32, feedback: label });
        }
    }

    let table = InteractionTable::new(records, FeedbackKind::Implicit, nu, ni, None)?;
    Ok(SyntheticData {
        table,
        truth: TruthTable::new(ni, probs),
        scores: TruthTable::new(ni, scores),
        popularity,
    })
}

/// Percentile rank of each item's mean true probability; ties broken by item id.
fn popularity_percentiles(probs: &[f64], nu: usize, ni: usize) -> Vec<f64> {
    let mut mean = vec![0.0; ni];
    for u in 0..nu {
        for (i, m) in mean.iter_mut().enumerate() {
            *m += probs[u * ni + i];
        }
    }
    let mut order: Vec<usize> = (0..ni).collect();
    order.sort_by(|&a, &b| mean[a].total_cmp(&mean[b]).then(a.cmp(&b)));
    let mut pct = vec![0.0; ni];
    if ni > 1 {
        for (pos, &i) in order.iter().enumerate() {
            pct[i] = pos as f64 / (ni - 1) as f64;
        }
    }
    pct
}
