use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::Scorer;
use crate::dataset::{InteractionTable, SplitTag};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankedEntry {
    pub item: u32,
    pub score: f64,
    /// 1-based position in the list.
    pub rank: usize,
}

/// One user's candidates ordered by descending score, ties by ascending item id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedList {
    pub user: u32,
    pub entries: Vec<RankedEntry>,
    /// Partition the candidates came from, if any.
    pub source: Option<SplitTag>,
}

/// A ranked list with the observed feedback of each entry.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledList {
    pub list: RankedList,
    /// `labels[k]` belongs to `list.entries[k]`.
    pub labels: Vec<f64>,
}

/// Ranks `candidates` for `user`, truncated to the first `n` when given.
pub fn rank_items<S: Scorer + ?Sized>(model: &S, user: u32, candidates: &[u32], n: Option<usize>) -> RankedList {
    let mut scored: Vec<(u32, f64)> = candidates.iter().map(|&i| (i, model.score(user, i))).collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    if let Some(n) = n {
        scored.truncate(n);
    }
    RankedList {
        user,
        entries: scored
            .into_iter()
            .enumerate()
            .map(|(k, (item, score))| RankedEntry { item, score, rank: k + 1 })
            .collect(),
        source: None,
    }
}

/// Ranks every user's items in `table` and joins their labels.
///
/// Users without records are skipped. Lists are returned in user-id order.
pub fn rank_table<S: Scorer + Sync + ?Sized>(model: &S, table: &InteractionTable, n: Option<usize>) -> Vec<LabeledList> {
    let records = table.records();
    table
        .records_by_user()
        .into_par_iter()
        .enumerate()
        .filter(|(_, idx)| !idx.is_empty())
        .map(|(user, idx)| {
            let user = user as u32;
            let mut scored: Vec<(u32, f64, f64)> = idx
                .iter()
                .map(|&k| (records[k].item, model.score(user, records[k].item), records[k].feedback))
                .collect();
            scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
            if let Some(n) = n {
                scored.truncate(n);
            }
            let labels = scored.iter().map(|t| t.2).collect();
            let list = RankedList {
                user,
                entries: scored
                    .iter()
                    .enumerate()
                    .map(|(k, &(item, score, _))| RankedEntry { item, score, rank: k + 1 })
                    .collect(),
                source: table.split_tag(),
            };
            LabeledList { list, labels }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::recommenders::ScoreRange;
    use std::collections::HashMap;

    struct Fixed(HashMap<u32, f64>);

    impl Scorer for Fixed {
        fn score(&self, _user: u32, item: u32) -> f64 {
            self.0[&item]
        }
        fn score_range(&self) -> ScoreRange {
            ScoreRange::Bounded01
        }
    }

    fn abc() -> Fixed {
        Fixed(HashMap::from([(0, 0.9), (1, 0.9), (2, 0.1)]))
    }

    #[test]
    fn ties_break_by_item_id() {
        let list = rank_items(&abc(), 0, &[2, 1, 0], None);
        let got: Vec<(u32, usize)> = list.entries.iter().map(|e| (e.item, e.rank)).collect();
        assert_eq!(got, vec![(0, 1), (1, 2), (2, 3)]);
    }

    #[test]
    fn truncates_to_n() {
        assert_eq!(rank_items(&abc(), 0, &[0, 1, 2], Some(2)).entries.len(), 2);
    }

    #[test]
    fn input_order_does_not_matter() {
        let a = rank_items(&abc(), 0, &[0, 1, 2], None);
        let b = rank_items(&abc(), 0, &[2, 0, 1], None);
        assert_eq!(a, b);
    }

    #[test]
    fn empty_candidates_give_empty_list() {
        assert!(rank_items(&abc(), 0, &[], Some(3)).entries.is_empty());
    }
}
