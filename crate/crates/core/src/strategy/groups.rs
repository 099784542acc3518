use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Contiguous rank groups covering `1..=n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupScheme {
    pub n: usize,
    pub n_groups: usize,
    /// Inclusive `(rank_lo, rank_hi)` per group, in rank order.
    pub boundaries: Vec<(usize, usize)>,
}

impl GroupScheme {
    /// 0-based group containing `rank`, or `None` outside `1..=n`.
    pub fn group_of(&self, rank: usize) -> Option<usize> {
        if rank == 0 || rank > self.n {
            return None;
        }
        Some(self.boundaries.partition_point(|&(_, hi)| hi < rank))
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.boundaries.iter().map(|&(lo, hi)| hi - lo + 1).collect()
    }
}

/// `max(1, round(n / 5))`.
pub fn default_n_groups(n: usize) -> usize {
    ((n as f64 / 5.0).round() as usize).max(1)
}

/// Splits ranks `1..=n` into `n_groups` groups whose sizes differ by at most one.
///
/// Group `g` ends at rank `ceil(g * n / n_groups)`, so N=18 with 4 groups
/// yields sizes 5, 4, 5, 4.
pub fn make_group_scheme(n: usize, n_groups: usize) -> Result<GroupScheme> {
    if n == 0 {
        return Err(Error::Config("N must be at least 1".into()));
    }
    if n_groups == 0 || n_groups > n {
        return Err(Error::Config(format!("number of groups must be in 1..={n}, got {n_groups}")));
    }
    let mut boundaries = Vec::with_capacity(n_groups);
    let mut lo = 1;
    for g in 1..=n_groups {
        let hi = (g * n).div_ceil(n_groups);
        boundaries.push((lo, hi));
        lo = hi + 1;
    }
    Ok(GroupScheme { n, n_groups, boundaries })
}
