//! Feedback tables, CSV ingestion, seeded splits and the synthetic generator.
//!
//! Every table uses dense 0-based user and item ids. Tables loaded from CSV
//! keep an [`IdMap`] so results can be written back with the original ids.

mod csv_io;
mod split;
mod synthetic;

pub use csv_io::{load_explicit_csv, load_implicit_csv, write_id_map, write_table_csv, CsvSchema};
pub use split::{split, SplitAssignment, Splits};
pub use synthetic::{generate_synthetic, RankDistortion, SyntheticData, SyntheticSpec, TruthTable};

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One observed user–item feedback value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InteractionRecord {
    pub user: u32,
    pub item: u32,
    /// Rating for explicit tables, 0 or 1 for implicit tables.
    pub feedback: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeedbackKind {
    Explicit,
    Implicit,
}

/// Which partition of a split a table was cut from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitTag {
    Train,
    Validation,
    Test,
}

impl std::fmt::Display for SplitTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SplitTag::Train => "train",
            SplitTag::Validation => "validation",
            SplitTag::Test => "test",
        })
    }
}

/// Dense-id to original-id mapping retained from ingestion.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct IdMap {
    pub users: Vec<i64>,
    pub items: Vec<i64>,
}

impl IdMap {
    pub fn identity(n_users: usize, n_items: usize) -> Self {
        IdMap {
            users: (0..n_users as i64).collect(),
            items: (0..n_items as i64).collect(),
        }
    }
}

/// Canonical, immutable feedback table.
#[derive(Debug, Clone, PartialEq)]
pub struct InteractionTable {
    records: Vec<InteractionRecord>,
    kind: FeedbackKind,
    n_users: usize,
    n_items: usize,
    rating_range: Option<(f64, f64)>,
    id_map: IdMap,
    split: Option<SplitTag>,
}

impl InteractionTable {
    /// Builds a table, checking id bounds, pair uniqueness and the feedback domain.
    pub fn new(
        records: Vec<InteractionRecord>,
        kind: FeedbackKind,
        n_users: usize,
        n_items: usize,
        rating_range: Option<(f64, f64)>,
    ) -> Result<Self> {
        if kind == FeedbackKind::Explicit && rating_range.is_none() {
            return Err(Error::InvalidTable("explicit table needs a rating range".into()));
        }
        let mut seen = HashSet::with_capacity(records.len());
        for (idx, r) in records.iter().enumerate() {
            if r.user as usize >= n_users || r.item as usize >= n_items {
                return Err(Error::InvalidTable(format!(
                    "record {idx}: id ({}, {}) outside {n_users}x{n_items}",
                    r.user, r.item
                )));
            }
            if !seen.insert((r.user, r.item)) {
                return Err(Error::InvalidTable(format!(
                    "record {idx}: duplicate pair ({}, {})",
                    r.user, r.item
                )));
            }
            check_feedback(kind, rating_range, r.feedback)
                .map_err(|m| Error::InvalidTable(format!("record {idx}: {m}")))?;
        }
        Ok(InteractionTable {
            records,
            kind,
            n_users,
            n_items,
            rating_range,
            id_map: IdMap::identity(n_users, n_items),
            split: None,
        })
    }

    pub(crate) fn with_id_map(mut self, id_map: IdMap) -> Self {
        self.id_map = id_map;
        self
    }

    pub fn records(&self) -> &[InteractionRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn kind(&self) -> FeedbackKind {
        self.kind
    }

    pub fn n_users(&self) -> usize {
        self.n_users
    }

    pub fn n_items(&self) -> usize {
        self.n_items
    }

    pub fn rating_range(&self) -> Option<(f64, f64)> {
        self.rating_range
    }

    pub fn id_map(&self) -> &IdMap {
        &self.id_map
    }

    /// The split partition this table was cut from, if any.
    pub fn split_tag(&self) -> Option<SplitTag> {
        self.split
    }

    /// Fails when the table is a test partition. Every fitting entry point calls this.
    pub fn ensure_fittable(&self, caller: &'static str) -> Result<()> {
        if self.split == Some(SplitTag::Test) {
            return Err(Error::Leakage(caller));
        }
        Ok(())
    }

    /// Record indices grouped by user id.
    pub fn records_by_user(&self) -> Vec<Vec<usize>> {
        let mut by_user = vec![Vec::new(); self.n_users];
        for (idx, r) in self.records.iter().enumerate() {
            by_user[r.user as usize].push(idx);
        }
        by_user
    }

    /// A sub-table over the same id space, tagged with its partition.
    pub fn subset(&self, indices: &[usize], tag: SplitTag) -> InteractionTable {
        InteractionTable {
            records: indices.iter().map(|&i| self.records[i]).collect(),
            kind: self.kind,
            n_users: self.n_users,
            n_items: self.n_items,
            rating_range: self.rating_range,
            id_map: self.id_map.clone(),
            split: Some(tag),
        }
    }

    /// Mean feedback over all records (0 for an empty table).
    pub fn global_mean(&self) -> f64 {
        if self.records.is_empty() {
            return 0.0;
        }
        self.records.iter().map(|r| r.feedback).sum::<f64>() / self.records.len() as f64
    }
}

fn check_feedback(
    kind: FeedbackKind,
    rating_range: Option<(f64, f64)>,
    value: f64,
) -> std::result::Result<(), String> {
    if !value.is_finite() {
        return Err(format!("feedback {value} is not finite"));
    }
    match kind {
        FeedbackKind::Implicit if value != 0.0 && value != 1.0 => {
            Err(format!("implicit label {value} is not 0 or 1"))
        }
        FeedbackKind::Explicit => {
            let (lo, hi) = rating_range.expect("explicit tables carry a range");
            if value < lo || value > hi {
                Err(format!("rating {value} outside [{lo}, {hi}]"))
            } else {
                Ok(())
            }
        }
        _ => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(user: u32, item: u32, feedback: f64) -> InteractionRecord {
        InteractionRecord { user, item, feedback }
    }

    #[test]
    fn rejects_out_of_range_ids() {
        let err = InteractionTable::new(vec![rec(2, 0, 1.0)], FeedbackKind::Implicit, 2, 1, None);
        assert!(matches!(err, Err(Error::InvalidTable(_))));
    }

    #[test]
    fn rejects_duplicate_pairs() {
        let recs = vec![rec(0, 0, 1.0), rec(0, 0, 0.0)];
        assert!(InteractionTable::new(recs, FeedbackKind::Implicit, 1, 1, None).is_err());
    }

    #[test]
    fn rejects_non_binary_implicit() {
        let recs = vec![rec(0, 0, 0.5)];
        assert!(InteractionTable::new(recs, FeedbackKind::Implicit, 1, 1, None).is_err());
    }

    #[test]
    fn test_partition_is_not_fittable() {
        let t = InteractionTable::new(vec![rec(0, 0, 1.0)], FeedbackKind::Implicit, 1, 1, None)
            .unwrap();
        assert!(t.ensure_fittable("x").is_ok());
        assert!(t.subset(&[0], SplitTag::Validation).ensure_fittable("x").is_ok());
        assert!(matches!(
            t.subset(&[0], SplitTag::Test).ensure_fittable("x"),
            Err(Error::Leakage("x"))
        ));
    }
}
