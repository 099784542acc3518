use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::math::{mean, std_dev};

/// Metric name written for a cell that failed.
pub const FAILURE_METRIC: &str = "failure";

/// One metric value for one seed and one (calibrator, strategy) combination.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub seed: u64,
    pub recommender: String,
    /// `none` for rows that do not involve a calibrator.
    pub calibrator: String,
    pub strategy: String,
    pub n: Option<usize>,
    pub alpha: Option<f64>,
    pub n_groups: Option<usize>,
    pub metric: String,
    pub value: Option<f64>,
    /// Bins used by ECE-type metrics.
    pub bins: Option<usize>,
    pub error: Option<String>,
}

/// Row identity without seed, value and diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellKey {
    pub recommender: String,
    pub calibrator: String,
    pub strategy: String,
    pub n: Option<usize>,
    pub alpha: Option<f64>,
    pub n_groups: Option<usize>,
}

impl ResultRow {
    pub fn key(&self) -> CellKey {
        CellKey {
            recommender: self.recommender.clone(),
            calibrator: self.calibrator.clone(),
            strategy: self.strategy.clone(),
            n: self.n,
            alpha: self.alpha,
            n_groups: self.n_groups,
        }
    }

    pub fn is_failure(&self) -> bool {
        self.metric == FAILURE_METRIC
    }
}

/// Mean and population standard deviation of one metric across seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub recommender: String,
    pub calibrator: String,
    pub strategy: String,
    pub n: Option<usize>,
    pub alpha: Option<f64>,
    pub n_groups: Option<usize>,
    pub metric: String,
    pub mean: Option<f64>,
    pub std: Option<f64>,
    /// Seeds contributing a value (or, for failure rows, failing seeds).
    pub seeds: usize,
}

/// Aggregates rows by cell and metric, in order of first appearance.
pub fn summarize(rows: &[ResultRow]) -> Vec<SummaryRow> {
    let mut groups: Vec<(CellKey, String, Vec<f64>, usize)> = Vec::new();
    for row in rows {
        let key = row.key();
        let pos = groups.iter().position(|g| g.0 == key && g.1 == row.metric);
        let g = match pos {
            Some(p) => &mut groups[p],
            None => {
                groups.push((key, row.metric.clone(), Vec::new(), 0));
                groups.last_mut().unwrap()
            }
        };
        match row.value {
            Some(v) => g.2.push(v),
            None => g.3 += 1,
        }
    }
    groups
        .into_iter()
        .map(|(key, metric, values, failures)| {
            let (m, s) = if values.is_empty() { (None, None) } else { (Some(mean(&values)), Some(std_dev(&values))) };
            SummaryRow {
                recommender: key.recommender,
                calibrator: key.calibrator,
                strategy: key.strategy,
                n: key.n,
                alpha: key.alpha,
                n_groups: key.n_groups,
                metric,
                mean: m,
                std: s,
                seeds: if values.is_empty() { failures } else { values.len() },
            }
        })
        .collect()
}

/// One (calibrator, α, n_g) cell of the TNF sensitivity heatmap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatmapCell {
    pub calibrator: String,
    pub alpha: f64,
    pub n_groups: usize,
    pub n: usize,
    pub ece_at_n: Option<f64>,
    pub ece_at_n_std: Option<f64>,
    pub rdece_at_n: Option<f64>,
    pub rdece_at_n_std: Option<f64>,
    pub seeds: usize,
    /// First failure message, if any seed failed.
    pub error: Option<String>,
}

pub fn write_csv<T: Serialize>(rows: &[T], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_results_csv(path: impl AsRef<Path>) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for row in r.deserialize() {
        out.push(row?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(seed: u64, metric: &str, value: Option<f64>) -> ResultRow {
        ResultRow {
            seed,
            recommender: "mf".into(),
            calibrator: "isotonic".into(),
            strategy: "tnf".into(),
            n: Some(20),
            alpha: None,
            n_groups: None,
            metric: metric.into(),
            value,
            bins: None,
            error: None,
        }
    }

    #[test]
    fn summary_mean_and_std() {
        let rows = vec![row(0, "ece_at_n", Some(1.0)), row(1, "ece_at_n", Some(3.0)), row(0, "rdece_at_n", Some(2.0))];
        let s = summarize(&rows);
        assert_eq!(s.len(), 2);
        assert_eq!((s[0].mean, s[0].std, s[0].seeds), (Some(2.0), Some(1.0), 2));
        assert_eq!(s[1].metric, "rdece_at_n");
    }

    #[test]
    fn failures_are_counted() {
        let s = summarize(&[row(0, FAILURE_METRIC, None), row(1, FAILURE_METRIC, None)]);
        assert_eq!((s[0].mean, s[0].seeds), (None, 2));
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sub/results.csv");
        let mut rows = vec![row(0, "ece_at_n", Some(0.1 + 0.2)), row(3, FAILURE_METRIC, None)];
        rows[1].error = Some("degenerate labels, \"quoted\"".into());
        write_csv(&rows, &path).unwrap();
        assert_eq!(read_results_csv(&path).unwrap(), rows);
    }
}
