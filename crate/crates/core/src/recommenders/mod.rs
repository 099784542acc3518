//! Desk-scale recommenders producing raw scores `s_ui`, and per-user ranking.

mod bpr;
mod itemknn;
mod mf;
mod ranking;

pub use bpr::{bpr_triplet_grad, bpr_triplet_loss, fit_bpr, Bpr, BprGrad};
pub use itemknn::{fit_itemknn, ItemKnn};
pub use mf::{fit_mf, mf_sample_grad, mf_sample_loss, MatrixFactorization, MfGrad};
pub use ranking::{rank_items, rank_table, LabeledList, RankedEntry, RankedList};

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::dataset::{InteractionTable, TruthTable};
use crate::error::{Error, Result};

/// Codomain of a recommender's raw scores.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ScoreRange {
    Bounded01,
    Unbounded,
    RatingScale { min: f64, max: f64 },
}

/// Anything that can score a user–item pair.
pub trait Scorer {
    fn score(&self, user: u32, item: u32) -> f64;
    fn score_range(&self) -> ScoreRange;
}

/// Shared SGD hyperparameters for MF and BPR.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SgdParams {
    pub factors: usize,
    pub epochs: usize,
    pub lr: f64,
    pub reg: f64,
}

impl Default for SgdParams {
    fn default() -> Self {
        SgdParams { factors: 16, epochs: 30, lr: 0.01, reg: 0.02 }
    }
}

/// Precomputed scores, e.g. the distorted score matrix of the synthetic generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreTableModel {
    pub scores: Arc<TruthTable>,
}

impl Scorer for ScoreTableModel {
    fn score(&self, user: u32, item: u32) -> f64 {
        self.scores.get(user, item)
    }

    fn score_range(&self) -> ScoreRange {
        ScoreRange::Unbounded
    }
}

/// A fitted recommender.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RecommenderModel {
    ItemKnn(ItemKnn),
    Mf(MatrixFactorization),
    Bpr(Bpr),
    ScoreTable(ScoreTableModel),
}

impl RecommenderModel {
    pub fn kind_name(&self) -> &'static str {
        match self {
            RecommenderModel::ItemKnn(_) => "itemknn",
            RecommenderModel::Mf(_) => "mf",
            RecommenderModel::Bpr(_) => "bpr",
            RecommenderModel::ScoreTable(_) => "score_table",
        }
    }
}

impl Scorer for RecommenderModel {
    fn score(&self, user: u32, item: u32) -> f64 {
        match self {
            RecommenderModel::ItemKnn(m) => m.score(user, item),
            RecommenderModel::Mf(m) => m.score(user, item),
            RecommenderModel::Bpr(m) => m.score(user, item),
            RecommenderModel::ScoreTable(m) => m.score(user, item),
        }
    }

    fn score_range(&self) -> ScoreRange {
        match self {
            RecommenderModel::ItemKnn(m) => m.score_range(),
            RecommenderModel::Mf(m) => m.score_range(),
            RecommenderModel::Bpr(m) => m.score_range(),
            RecommenderModel::ScoreTable(m) => m.score_range(),
        }
    }
}

/// Recommender choice plus hyperparameters, as written in a run config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RecommenderConfig {
    ItemKnn {
        #[serde(default = "default_k")]
        k: usize,
    },
    Mf(#[serde(default)] SgdParams),
    Bpr(#[serde(default)] SgdParams),
    /// Serve the synthetic generator's score matrix; no training.
    ScoreTable,
}

fn default_k() -> usize {
    50
}

impl RecommenderConfig {
    pub fn name(&self) -> &'static str {
        match self {
            RecommenderConfig::ItemKnn { .. } => "itemknn",
            RecommenderConfig::Mf(_) => "mf",
            RecommenderConfig::Bpr(_) => "bpr",
            RecommenderConfig::ScoreTable => "score_table",
        }
    }

    /// Fits on `train`. `scores` must be given for [`RecommenderConfig::ScoreTable`].
    pub fn fit(
        &self,
        train: &InteractionTable,
        seed: u64,
        scores: Option<&Arc<TruthTable>>,
    ) -> Result<RecommenderModel> {
        train.ensure_fittable("recommender fit")?;
        Ok(match *self {
            RecommenderConfig::ItemKnn { k } => RecommenderModel::ItemKnn(fit_itemknn(train, k)?),
            RecommenderConfig::Mf(p) => {
                RecommenderModel::Mf(fit_mf(train, p.factors, p.epochs, p.lr, p.reg, seed)?)
            }
            RecommenderConfig::Bpr(p) => {
                RecommenderModel::Bpr(fit_bpr(train, p.factors, p.epochs, p.lr, p.reg, seed)?)
            }
            RecommenderConfig::ScoreTable => {
                let scores = scores.ok_or_else(|| {
                    Error::Config("score_table recommender needs a synthetic dataset".into())
                })?;
                RecommenderModel::ScoreTable(ScoreTableModel { scores: Arc::clone(scores) })
            }
        })
    }
}
