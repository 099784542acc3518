use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{ScoreRange, Scorer};
use crate::dataset::{FeedbackKind, InteractionTable};
use crate::error::{Error, Result};

const INIT_STD: f64 = 0.1;

/// Biased matrix factorization: `mu + b_u + b_i + p_u . q_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixFactorization {
    pub factors: usize,
    pub global_mean: f64,
    pub user_bias: Vec<f64>,
    pub item_bias: Vec<f64>,
    pub user_factors: Vec<f64>,
    pub item_factors: Vec<f64>,
    /// Rating bounds for explicit data; scores are unbounded otherwise.
    pub rating_range: Option<(f64, f64)>,
}

/// Gradient of [`mf_sample_loss`] with respect to `(b_u, b_i, p_u, q_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MfGrad {
    pub user_bias: f64,
    pub item_bias: f64,
    pub user_factors: Vec<f64>,
    pub item_factors: Vec<f64>,
}

/// `0.5 e^2 + 0.5 reg (b_u^2 + b_i^2 + |p_u|^2 + |q_i|^2)` for one rating.
pub fn mf_sample_loss(mu: f64, bu: f64, bi: f64, pu: &[f64], qi: &[f64], rating: f64, reg: f64) -> f64 {
    let e = rating - (mu + bu + bi + dot(pu, qi));
    let sq = bu * bu + bi * bi + dot(pu, pu) + dot(qi, qi);
    0.5 * e * e + 0.5 * reg * sq
}

pub fn mf_sample_grad(mu: f64, bu: f64, bi: f64, pu: &[f64], qi: &[f64], rating: f64, reg: f64) -> MfGrad {
    let e = rating - (mu + bu + bi + dot(pu, qi));
    MfGrad {
        user_bias: -e + reg * bu,
        item_bias: -e + reg * bi,
        user_factors: pu.iter().zip(qi).map(|(p, q)| -e * q + reg * p).collect(),
        item_factors: pu.iter().zip(qi).map(|(p, q)| -e * p + reg * q).collect(),
    }
}

/// SGD on squared error with L2 regularization. Deterministic for a fixed seed.
pub fn fit_mf(
    train: &InteractionTable,
    factors: usize,
    epochs: usize,
    lr: f64,
    reg: f64,
    seed: u64,
) -> Result<MatrixFactorization> {
    train.ensure_fittable("fit_mf")?;
    if factors < 1 {
        return Err(Error::Config("mf needs at least one factor".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (nu, ni) = (train.n_users(), train.n_items());
    let mut init = |n: usize| -> Vec<f64> {
        (0..n).map(|_| INIT_STD * rng.sample::<f64, _>(StandardNormal)).collect()
    };
    let mut model = MatrixFactorization {
        factors,
        global_mean: train.global_mean(),
        user_bias: vec![0.0; nu],
        item_bias: vec![0.0; ni],
        user_factors: init(nu * factors),
        item_factors: init(ni * factors),
        rating_range: match train.kind() {
            FeedbackKind::Explicit => train.rating_range(),
            FeedbackKind::Implicit => None,
        },
    };

    let records = train.records();
    let mut order: Vec<usize> = (0..records.len()).collect();
    for epoch in 1..=epochs {
        order.shuffle(&mut rng);
        let mut loss = 0.0;
        for &idx in &order {
            let r = records[idx];
            let (u, i) = (r.user as usize, r.item as usize);
            let pu = &model.user_factors[u * factors..(u + 1) * factors];
            let qi = &model.item_factors[i * factors..(i + 1) * factors];
            let (bu, bi) = (model.user_bias[u], model.item_bias[i]);
            loss += mf_sample_loss(model.global_mean, bu, bi, pu, qi, r.feedback, reg);
            let g = mf_sample_grad(model.global_mean, bu, bi, pu, qi, r.feedback, reg);
            model.user_bias[u] -= lr * g.user_bias;
            model.item_bias[i] -= lr * g.item_bias;
            for (p, gp) in model.user_factors[u * factors..(u + 1) * factors].iter_mut().zip(&g.user_factors) {
                *p -= lr * gp;
            }
            for (q, gq) in model.item_factors[i * factors..(i + 1) * factors].iter_mut().zip(&g.item_factors) {
                *q -= lr * gq;
            }
        }
        if !loss.is_finite() {
            return Err(Error::Diverged { epoch, loss });
        }
    }
    Ok(model)
}

impl MatrixFactorization {
    pub fn raw_prediction(&self, user: u32, item: u32) -> f64 {
        let (u, i, f) = (user as usize, item as usize, self.factors);
        self.global_mean
            + self.user_bias[u]
            + self.item_bias[i]
            + dot(&self.user_factors[u * f..(u + 1) * f], &self.item_factors[i * f..(i + 1) * f])
    }
}

impl Scorer for MatrixFactorization {
    fn score(&self, user: u32, item: u32) -> f64 {
        let s = self.raw_prediction(user, item);
        match self.rating_range {
            Some((lo, hi)) => s.clamp(lo, hi),
            None => s,
        }
    }

    fn score_range(&self) -> ScoreRange {
        match self.rating_range {
            Some((min, max)) => ScoreRange::RatingScale { min, max },
            None => ScoreRange::Unbounded,
        }
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
