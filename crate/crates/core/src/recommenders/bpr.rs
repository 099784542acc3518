use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::mf::dot;
use super::{ScoreRange, Scorer};
use crate::dataset::{FeedbackKind, InteractionTable};
use crate::error::{Error, Result};
use crate::math::{sigmoid, softplus};

const INIT_STD: f64 = 0.1;

/// Bayesian personalized ranking model: `score = b_i + p_u . q_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bpr {
    pub factors: usize,
    pub item_bias: Vec<f64>,
    pub user_factors: Vec<f64>,
    pub item_factors: Vec<f64>,
}

/// Gradient of [`bpr_triplet_loss`] with respect to `(p_u, q_i, q_j, b_i, b_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BprGrad {
    pub user_factors: Vec<f64>,
    pub pos_factors: Vec<f64>,
    pub neg_factors: Vec<f64>,
    pub pos_bias: f64,
    pub neg_bias: f64,
}

/// `-ln sigma(x_uij) + 0.5 reg (|p_u|^2 + |q_i|^2 + |q_j|^2 + b_i^2 + b_j^2)`
/// with `x_uij = b_i - b_j + p_u . (q_i - q_j)`.
pub fn bpr_triplet_loss(pu: &[f64], qi: &[f64], qj: &[f64], bi: f64, bj: f64, reg: f64) -> f64 {
    let x = bi - bj + dot(pu, qi) - dot(pu, qj);
    let sq = dot(pu, pu) + dot(qi, qi) + dot(qj, qj) + bi * bi + bj * bj;
    softplus(-x) + 0.5 * reg * sq
}

pub fn bpr_triplet_grad(pu: &[f64], qi: &[f64], qj: &[f64], bi: f64, bj: f64, reg: f64) -> BprGrad {
    let x = bi - bj + dot(pu, qi) - dot(pu, qj);
    // d/dx of -ln sigma(x)
    let dx = -sigmoid(-x);
    BprGrad {
        user_factors: pu.iter().zip(qi.iter().zip(qj)).map(|(p, (a, b))| dx * (a - b) + reg * p).collect(),
        pos_factors: pu.iter().zip(qi).map(|(p, q)| dx * p + reg * q).collect(),
        neg_factors: pu.iter().zip(qj).map(|(p, q)| -dx * p + reg * q).collect(),
        pos_bias: dx + reg * bi,
        neg_bias: -dx + reg * bj,
    }
}

/// SGD over sampled `(user, positive, negative)` triplets.
///
/// Positives are the user's training records with label 1; negatives are
/// drawn uniformly from every other item. One epoch draws as many triplets
/// as there are positive records.
pub fn fit_bpr(
    train: &InteractionTable,
    factors: usize,
    epochs: usize,
    lr: f64,
    reg: f64,
    seed: u64,
) -> Result<Bpr> {
    train.ensure_fittable("fit_bpr")?;
    if factors < 1 {
        return Err(Error::Config("bpr needs at least one factor".into()));
    }
    if train.kind() != FeedbackKind::Implicit {
        return Err(Error::Config("bpr needs implicit feedback".into()));
    }
    let (nu, ni) = (train.n_users(), train.n_items());
    let mut positives: Vec<Vec<u32>> = vec![Vec::new(); nu];
    for r in train.records().iter().filter(|r| r.feedback == 1.0) {
        positives[r.user as usize].push(r.item);
    }
    for p in &mut positives {
        p.sort_unstable();
    }
    // (user, positive item) pairs of users that also have a negative
    let pairs: Vec<(u32, u32)> = positives
        .iter()
        .enumerate()
        .filter(|(_, p)| !p.is_empty() && p.len() < ni)
        .flat_map(|(u, p)| p.iter().map(move |&i| (u as u32, i)))
        .collect();
    if pairs.is_empty() {
        return Err(Error::Training("no user has both a positive and a negative item".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut init = |n: usize| -> Vec<f64> {
        (0..n).map(|_| INIT_STD * rng.sample::<f64, _>(StandardNormal)).collect()
    };
    let mut model = Bpr {
        factors,
        item_bias: vec![0.0; ni],
        user_factors: init(nu * factors),
        item_factors: init(ni * factors),
    };

    let f = factors;
    for epoch in 1..=epochs {
        let mut loss = 0.0;
        for _ in 0..pairs.len() {
            let (u, i) = pairs[rng.random_range(0..pairs.len())];
            let j = loop {
                let j = rng.random_range(0..ni as u32);
                if positives[u as usize].binary_search(&j).is_err() {
                    break j;
                }
            };
            let (u, i, j) = (u as usize, i as usize, j as usize);
            let pu = &model.user_factors[u * f..(u + 1) * f];
            let qi = &model.item_factors[i * f..(i + 1) * f];
            let qj = &model.item_factors[j * f..(j + 1) * f];
            let (bi, bj) = (model.item_bias[i], model.item_bias[j]);
            loss += bpr_triplet_loss(pu, qi, qj, bi, bj, reg);
            let g = bpr_triplet_grad(pu, qi, qj, bi, bj, reg);
            for (p, d) in model.user_factors[u * f..(u + 1) * f].iter_mut().zip(&g.user_factors) {
                *p -= lr * d;
            }
            for (q, d) in model.item_factors[i * f..(i + 1) * f].iter_mut().zip(&g.pos_factors) {
                *q -= lr * d;
            }
            for (q, d) in model.item_factors[j * f..(j + 1) * f].iter_mut().zip(&g.neg_factors) {
                *q -= lr * d;
            }
            model.item_bias[i] -= lr * g.pos_bias;
            model.item_bias[j] -= lr * g.neg_bias;
        }
        if !loss.is_finite() {
            return Err(Error::Diverged { epoch, loss });
        }
    }
    Ok(model)
}

impl Scorer for Bpr {
    fn score(&self, user: u32, item: u32) -> f64 {
        let (u, i, f) = (user as usize, item as usize, self.factors);
        self.item_bias[i] + dot(&self.user_factors[u * f..(u + 1) * f], &self.item_factors[i * f..(i + 1) * f])
    }

    fn score_range(&self) -> ScoreRange {
        ScoreRange::Unbounded
    }
}
