use topcal_core::bundle::ModelBundle;
use topcal_core::calibrators::CalibratorKind;
use topcal_core::dataset::{RankDistortion, SyntheticSpec};
use topcal_core::recommenders::{RecommenderConfig, SgdParams};
use topcal_core::runner::{
    read_results_csv, run_diagrams, run_experiment, run_sensitivity_grid, run_sweep_n, DatasetSource, ExperimentConfig,
    ResultRow,
};
use topcal_core::strategy::StrategyKind;

fn small(n_users: usize, n_items: usize) -> ExperimentConfig {
    ExperimentConfig {
        dataset: DatasetSource::Synthetic(SyntheticSpec { n_users, n_items, ..SyntheticSpec::default() }),
        seeds: vec![0, 1],
        ..ExperimentConfig::default()
    }
}

fn count(rows: &[ResultRow], strategy: &str, metric: &str) -> usize {
    rows.iter().filter(|r| r.strategy == strategy && r.metric == metric).count()
}

#[test]
fn one_row_per_seed_cell_and_metric() {
    let mut cfg = small(100, 120);
    cfg.strategies = vec![StrategyKind::Original, StrategyKind::Tnf];
    let out = run_experiment(&cfg).unwrap();
    // per seed: 2 strategies x (ece_at_n, rdece_at_n), all-items ece for Original, auc and ndcg
    assert_eq!(out.rows.len(), 2 * (2 * 2 + 1 + 2));
    for (strategy, metric) in [("original", "ece_at_n"), ("original", "rdece_at_n"), ("tnf", "ece_at_n"), ("tnf", "rdece_at_n")] {
        assert_eq!(count(&out.rows, strategy, metric), 2);
    }
    assert_eq!(count(&out.rows, "original", "ece"), 2);
    assert_eq!(count(&out.rows, "tnf", "ece"), 0);
    assert_eq!(count(&out.rows, "none", "auc"), 2);
    assert!(out.rows.iter().all(|r| !r.is_failure()));
    let tnf = out.rows.iter().find(|r| r.strategy == "tnf").unwrap();
    assert_eq!((tnf.alpha, tnf.n_groups, tnf.n), (Some(1.0), Some(4), Some(20)));

    // the summary has one row per cell and metric, averaging both seeds
    assert_eq!(out.summary.len(), 7);
    assert!(out.summary.iter().all(|s| s.seeds == 2));
    let vals: Vec<f64> = out.rows.iter().filter(|r| r.strategy == "tnf" && r.metric == "ece_at_n").map(|r| r.value.unwrap()).collect();
    let s = out.summary.iter().find(|s| s.strategy == "tnf" && s.metric == "ece_at_n").unwrap();
    assert!((s.mean.unwrap() - (vals[0] + vals[1]) / 2.0).abs() < 1e-15);
    assert!((s.std.unwrap() - (vals[0] - vals[1]).abs() / 2.0).abs() < 1e-15);
}

#[test]
fn repeated_runs_are_identical() {
    let mut cfg = small(80, 100);
    cfg.recommender = RecommenderConfig::Bpr(SgdParams { factors: 4, epochs: 3, ..SgdParams::default() });
    cfg.calibrators = vec![CalibratorKind::Isotonic, CalibratorKind::Platt];
    cfg.strategies = StrategyKind::ALL.to_vec();
    let a = run_experiment(&cfg).unwrap();
    let b = run_experiment(&cfg).unwrap();
    assert_eq!(a.rows, b.rows);
    assert_eq!(a.summary, b.summary);
}

#[test]
fn a_failing_cell_leaves_the_rest() {
    let mut cfg = small(40, 100);
    cfg.seeds = vec![0];
    cfg.calibrators = vec![CalibratorKind::Isotonic, CalibratorKind::Histogram];
    cfg.strategies = vec![StrategyKind::Original, StrategyKind::Tnf];
    // one rank per group leaves at most 40 samples per group, short of 45 bins
    cfg.n_groups = Some(20);
    cfg.histogram_bins = 45;
    let out = run_experiment(&cfg).unwrap();
    let failures: Vec<&ResultRow> = out.rows.iter().filter(|r| r.is_failure()).collect();
    assert_eq!(failures.len(), 1);
    assert_eq!((failures[0].strategy.as_str(), failures[0].calibrator.as_str()), ("tnf", "histogram"));
    assert!(failures[0].error.as_deref().unwrap().contains("fewer groups"));
    assert!(failures[0].value.is_none());
    assert_eq!(count(&out.rows, "tnf", "ece_at_n"), 1);
    assert_eq!(count(&out.rows, "original", "ece_at_n"), 2);
    let s = out.summary.iter().find(|s| s.metric == "failure").unwrap();
    assert_eq!((s.seeds, s.mean), (1, None));
}

#[test]
fn calibrated_scorer_stays_calibrated_at_top() {
    let mut cfg = small(500, 300);
    cfg.dataset = DatasetSource::Synthetic(SyntheticSpec {
        n_users: 500,
        n_items: 300,
        noise_scale: 0.0,
        distortion: RankDistortion::Identity,
        ..SyntheticSpec::default()
    });
    cfg.seeds = vec![0];
    cfg.strategies = vec![StrategyKind::Vanilla];
    let out = run_experiment(&cfg).unwrap();
    let v = out.rows.iter().find(|r| r.strategy == "vanilla" && r.metric == "ece_at_n").unwrap();
    assert!(v.value.unwrap() < 0.02, "vanilla ECE@20 {:?}", v.value);
    assert!(v.bins.unwrap() >= 1);
}

#[test]
fn sweep_reports_every_list_length() {
    let mut cfg = small(100, 120);
    cfg.seeds = vec![3];
    cfg.strategies = vec![StrategyKind::Vanilla, StrategyKind::Tnf];
    let out = run_sweep_n(&cfg, &[5, 10]).unwrap();
    for n in [5, 10] {
        let at = |s: &str| out.rows.iter().filter(|r| r.n == Some(n) && r.strategy == s && r.metric == "ece_at_n").count();
        assert_eq!((at("vanilla"), at("tnf")), (1, 1));
    }
    let groups: Vec<Option<usize>> = out.rows.iter().filter(|r| r.strategy == "tnf").map(|r| r.n_groups).collect();
    assert_eq!(groups, [Some(1), Some(1), Some(2), Some(2)]);
    assert!(run_sweep_n(&cfg, &[]).is_err());
}

#[test]
fn grid_covers_every_alpha_and_group_count() {
    let mut cfg = small(100, 120);
    cfg.calibrators = vec![CalibratorKind::Isotonic, CalibratorKind::Platt];
    let out = run_sensitivity_grid(&cfg, &[0.0, 1.0, 2.0], &[1, 4]).unwrap();
    assert_eq!(out.heatmap.len(), 2 * 3 * 2);
    assert!(out.heatmap.iter().all(|c| c.seeds == 2 && c.ece_at_n.is_some() && c.error.is_none()));
    assert_eq!(out.rows.len(), 2 * 12 * 2);
    let cell = &out.heatmap[5];
    assert_eq!((cell.calibrator.as_str(), cell.alpha, cell.n_groups), ("isotonic", 2.0, 4));
    let vals: Vec<f64> = out
        .rows
        .iter()
        .filter(|r| r.calibrator == "isotonic" && r.alpha == Some(2.0) && r.n_groups == Some(4) && r.metric == "rdece_at_n")
        .map(|r| r.value.unwrap())
        .collect();
    assert!((cell.rdece_at_n.unwrap() - (vals[0] + vals[1]) / 2.0).abs() < 1e-15);
}

#[test]
fn grid_records_more_groups_than_ranks_as_a_failed_cell() {
    let mut cfg = small(60, 120);
    cfg.seeds = vec![0];
    cfg.n = 5;
    let out = run_sensitivity_grid(&cfg, &[1.0], &[2, 6]).unwrap();
    assert!(out.heatmap[0].error.is_none() && out.heatmap[0].ece_at_n.is_some());
    assert_eq!((out.heatmap[1].n_groups, out.heatmap[1].seeds, out.heatmap[1].ece_at_n), (6, 0, None));
    assert!(out.heatmap[1].error.is_some());
}

#[test]
fn outputs_round_trip_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small(60, 120);
    cfg.seeds = vec![0];
    cfg.save_models = true;
    cfg.strategies = vec![StrategyKind::Vanilla, StrategyKind::Original, StrategyKind::Tnf];
    let out = run_experiment(&cfg).unwrap();
    assert!(out.rows.iter().all(|r| !r.is_failure()));
    out.save(dir.path()).unwrap();
    assert_eq!(read_results_csv(dir.path().join("results.csv")).unwrap(), out.rows);
    assert!(dir.path().join("summary.csv").exists());

    let bundle = ModelBundle::load(dir.path().join("models/seed-0.json")).unwrap();
    assert_eq!(bundle, out.bundles[0]);
    assert_eq!(bundle.strategies.len(), 3);
    assert_eq!(bundle.recommender.kind_name(), "score_table");

    let plots = dir.path().join("plots");
    run_diagrams(&cfg, 0, &plots).unwrap();
    let rel = std::fs::read_to_string(plots.join("reliability.csv")).unwrap();
    assert!(rel.lines().next().unwrap().starts_with("strategy,calibrator,series"));
    assert!(rel.contains("tnf,isotonic,top_n"));
    assert!(std::fs::read_to_string(plots.join("rankplot.csv")).unwrap().lines().count() > 1);
}

#[test]
fn n_beyond_validation_lists_fails_the_cell() {
    // 80 items leave 16 validation items per user
    let mut cfg = small(30, 80);
    cfg.seeds = vec![0];
    cfg.strategies = vec![StrategyKind::Vanilla, StrategyKind::Original];
    let out = run_experiment(&cfg).unwrap();
    let f = out.rows.iter().find(|r| r.is_failure()).unwrap();
    assert_eq!(f.strategy, "original");
    assert!(f.error.as_deref().unwrap().contains("exceeds"));
    assert_eq!(count(&out.rows, "vanilla", "ece_at_n"), 1);
}

#[test]
fn config_file_round_trip() {
    let mut cfg = small(10, 10);
    cfg.n_groups = Some(3);
    cfg.calibrators = CalibratorKind::ALL.to_vec();
    let back = ExperimentConfig::from_json(&cfg.to_json().unwrap()).unwrap();
    assert_eq!(back, cfg);
    assert!(ExperimentConfig::from_json(r#"{"unknown_field": 1}"#).is_err());
}
