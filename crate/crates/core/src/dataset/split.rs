use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{InteractionTable, SplitTag};

/// Users with fewer records than this are pooled into one global split.
const MIN_RECORDS_PER_USER: usize = 5;
const VALIDATION_FRACTION: f64 = 0.2;
const TEST_FRACTION: f64 = 0.2;

/// Disjoint train/validation/test record indices produced by [`split`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitAssignment {
    pub seed: u64,
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

/// The three tagged partitions of a table.
#[derive(Debug, Clone)]
pub struct Splits {
    pub train: InteractionTable,
    pub validation: InteractionTable,
    pub test: InteractionTable,
}

impl SplitAssignment {
    pub fn materialize(&self, table: &InteractionTable) -> Splits {
        Splits {
            train: table.subset(&self.train, SplitTag::Train),
            validation: table.subset(&self.validation, SplitTag::Validation),
            test: table.subset(&self.test, SplitTag::Test),
        }
    }
}

/// Seeded 60/20/20 split, stratified per user.
///
/// Each user with at least five records has their own records shuffled and
/// cut 60/20/20; records of sparser users are pooled and cut the same way.
/// Index lists are returned in ascending order.
pub fn split(table: &InteractionTable, seed: u64) -> SplitAssignment {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = SplitAssignment { seed, train: Vec::new(), validation: Vec::new(), test: Vec::new() };
    let mut pooled = Vec::new();

    for mut indices in table.records_by_user() {
        if indices.len() < MIN_RECORDS_PER_USER {
            pooled.extend(indices);
            continue;
        }
        indices.shuffle(&mut rng);
        cut(&indices, &mut out);
    }
    pooled.sort_unstable();
    pooled.shuffle(&mut rng);
    cut(&pooled, &mut out);

    out.train.sort_unstable();
    out.validation.sort_unstable();
    out.test.sort_unstable();
    out
}

fn cut(shuffled: &[usize], out: &mut SplitAssignment) {
    let n = shuffled.len();
    let n_val = (n as f64 * VALIDATION_FRACTION).round() as usize;
    let n_test = (n as f64 * TEST_FRACTION).round() as usize;
    let n_train = n - n_val - n_test;
    out.train.extend_from_slice(&shuffled[..n_train]);
    out.validation.extend_from_slice(&shuffled[n_train..n_train + n_val]);
    out.test.extend_from_slice(&shuffled[n_train + n_val..]);
}
