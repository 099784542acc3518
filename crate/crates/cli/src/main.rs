use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use topcal_core::dataset::{
    generate_synthetic, load_explicit_csv, load_implicit_csv, write_id_map, write_table_csv, CsvSchema, FeedbackKind,
    SyntheticSpec,
};
use topcal_core::metrics::Binning;
use topcal_core::runner::{
    run_diagrams, run_experiment, run_sensitivity_grid, run_sweep_n, DatasetSource, ExperimentConfig,
};

/// Calibration of recommender predictions for the top-N items.
///
/// Experiments are described by a JSON config; every field is optional.
/// Defaults: synthetic popularity-distorted data (1000 users x 1000 items),
/// the synthetic score-table recommender, isotonic calibration, strategies
/// vanilla/original/tnf, N=20, n_g=round(N/5), alpha=1, VAD K=5 lambda=1,
/// seeds 0..9, adaptive ECE bins with M_max=min(n/10, 100), 15 histogram-binning
/// bins, output directory "results".
#[derive(Parser)]
#[command(name = "topcal", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load a CSV of interactions, validate it and write the dense table plus id map.
    Ingest(IngestArgs),
    /// Generate a synthetic dataset and write its interactions and scores.
    Synth(SynthArgs),
    /// Run the configured experiment; writes results.csv and summary.csv.
    Run(RunArgs),
    /// Evaluate ECE@N across several list lengths; writes results.csv and summary.csv.
    SweepN(SweepArgs),
    /// TNF sensitivity to alpha and the number of groups; writes results.csv and heatmap.csv.
    Grid(RunArgs),
    /// Reliability diagrams and rank calibration plots; writes reliability.csv and rankplot.csv.
    Diagrams(DiagramArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Feedback {
    Explicit,
    Implicit,
}

#[derive(Args)]
struct IngestArgs {
    /// Input CSV.
    input: PathBuf,
    #[arg(long, value_enum, default_value = "explicit")]
    feedback: Feedback,
    #[arg(long, default_value = "user")]
    user_column: String,
    #[arg(long, default_value = "item")]
    item_column: String,
    #[arg(long, default_value = "feedback")]
    feedback_column: String,
    #[arg(long, default_value_t = 1.0)]
    rating_min: f64,
    #[arg(long, default_value_t = 5.0)]
    rating_max: f64,
    /// Output directory.
    #[arg(long, default_value = "ingested")]
    out: PathBuf,
}

#[derive(Args)]
struct SynthArgs {
    /// Generator parameters as JSON; defaults when absent.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Override the generator seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "synthetic")]
    out: PathBuf,
}

#[derive(Args)]
struct Overrides {
    /// Experiment config (JSON).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated seeds, e.g. 0,1,2.
    #[arg(long, value_delimiter = ',')]
    seed_list: Option<Vec<u64>>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Use M equal-count bins instead of adaptive binning.
    #[arg(long, value_name = "M")]
    fixed_bins: Option<usize>,
    /// List length N.
    #[arg(long)]
    n: Option<usize>,
    /// TNF rank-weight exponent; the grid accepts a comma-separated list.
    #[arg(long, value_delimiter = ',')]
    alpha: Option<Vec<f64>>,
    /// TNF group count; the grid accepts a comma-separated list.
    #[arg(long, value_delimiter = ',')]
    groups: Option<Vec<usize>>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: Overrides,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: Overrides,
    /// Comma-separated list lengths; defaults to the config's sweep_n.
    #[arg(long, value_delimiter = ',')]
    n_list: Option<Vec<usize>>,
}

#[derive(Args)]
struct DiagramArgs {
    #[command(flatten)]
    common: Overrides,
    /// Seed whose split and fits are plotted; defaults to the first configured seed.
    #[arg(long)]
    seed: Option<u64>,
}

fn single<T: Copy>(values: &Option<Vec<T>>, flag: &str) -> anyhow::Result<Option<T>> {
    match values.as_deref() {
        None => Ok(None),
        Some([v]) => Ok(Some(*v)),
        Some(_) => bail!("--{flag} takes a single value here"),
    }
}

/// Loads the config and applies command-line overrides. The grid axes keep
/// the full --alpha/--groups lists; other commands take one value each.
fn load_config(o: &Overrides, grid: bool) -> anyhow::Result<ExperimentConfig> {
    let mut cfg = match &o.config {
        Some(path) => ExperimentConfig::load(path).with_context(|| format!("reading {}", path.display()))?,
        None => ExperimentConfig::default(),
    };
    if let Some(seeds) = &o.seed_list {
        cfg.seeds = seeds.clone();
    }
    if let Some(out) = &o.out {
        cfg.output_dir = out.clone();
    }
    if let Some(m) = o.fixed_bins {
        cfg.binning = Binning::Fixed(m);
    }
    if let Some(n) = o.n {
        cfg.n = n;
    }
    if grid {
        if let Some(a) = &o.alpha {
            cfg.grid.alphas = a.clone();
        }
        if let Some(g) = &o.groups {
            cfg.grid.groups = g.clone();
        }
    } else {
        if let Some(a) = single(&o.alpha, "alpha")? {
            cfg.alpha = a;
        }
        if let Some(g) = single(&o.groups, "groups")? {
            cfg.n_groups = Some(g);
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write_config(cfg: &ExperimentConfig) -> anyhow::Result<()> {
    std::fs::create_dir_all(&cfg.output_dir)?;
    std::fs::write(cfg.output_dir.join("config.json"), cfg.to_json()?)?;
    Ok(())
}

fn ingest(a: &IngestArgs) -> anyhow::Result<()> {
    let schema = CsvSchema {
        user_column: a.user_column.clone(),
        item_column: a.item_column.clone(),
        feedback_column: a.feedback_column.clone(),
        rating_min: a.rating_min,
        rating_max: a.rating_max,
    };
    let table = match a.feedback {
        Feedback::Explicit => load_explicit_csv(&a.input, &schema),
        Feedback::Implicit => load_implicit_csv(&a.input, &schema),
    }
    .with_context(|| format!("loading {}", a.input.display()))?;
    std::fs::create_dir_all(&a.out)?;
    write_table_csv(&table, a.out.join("interactions.csv"))?;
    write_id_map(&table, a.out.join("id_map.csv"))?;
    println!("{} records, {} users, {} items", table.len(), table.n_users(), table.n_items());
    Ok(())
}

fn synth(a: &SynthArgs) -> anyhow::Result<()> {
    let mut spec: SyntheticSpec = match &a.spec {
        Some(path) => serde_json::from_str(&std::fs::read_to_string(path)?)
            .with_context(|| format!("parsing {}", path.display()))?,
        None => SyntheticSpec::default(),
    };
    if let Some(seed) = a.seed {
        spec.seed = seed;
    }
    let data = generate_synthetic(&spec)?;
    std::fs::create_dir_all(&a.out)?;
    write_table_csv(&data.table, a.out.join("interactions.csv"))?;
    write_scores(data.scores.values(), data.truth.values(), spec.n_items, &a.out.join("scores.csv"))?;
    std::fs::write(a.out.join("spec.json"), serde_json::to_string_pretty(&spec)?)?;
    let positives = data.table.records().iter().filter(|r| r.feedback == 1.0).count();
    println!(
        "{} records, positive rate {:.4}",
        data.table.len(),
        positives as f64 / data.table.len() as f64
    );
    Ok(())
}

fn write_scores(scores: &[f64], truth: &[f64], n_items: usize, path: &Path) -> anyhow::Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "user,item,score,probability")?;
    for (k, (s, p)) in scores.iter().zip(truth).enumerate() {
        writeln!(out, "{},{},{s},{p}", k / n_items, k % n_items)?;
    }
    out.flush()?;
    Ok(())
}

fn describe(cfg: &ExperimentConfig) -> String {
    let data = match &cfg.dataset {
        DatasetSource::Synthetic(_) => "synthetic".to_string(),
        DatasetSource::Csv { path, feedback, .. } => {
            let kind = if *feedback == FeedbackKind::Explicit { "explicit" } else { "implicit" };
            format!("{} ({kind})", path.display())
        }
    };
    format!("{data}, {} recommender, {} seeds", cfg.recommender.name(), cfg.seeds.len())
}

fn main() -> anyhow::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match &cli.command {
        Command::Ingest(a) => ingest(a)?,
        Command::Synth(a) => synth(a)?,
        Command::Run(a) => {
            let cfg = load_config(&a.common, false)?;
            log::info!("run: {}", describe(&cfg));
            let out = run_experiment(&cfg)?;
            write_config(&cfg)?;
            out.save(&cfg.output_dir)?;
            print_failures(out.rows.iter().filter(|r| r.is_failure()).count());
        }
        Command::SweepN(a) => {
            let cfg = load_config(&a.common, false)?;
            let n_list = a.n_list.clone().unwrap_or_else(|| cfg.sweep_n.clone());
            log::info!("sweep-n {n_list:?}: {}", describe(&cfg));
            let out = run_sweep_n(&cfg, &n_list)?;
            write_config(&cfg)?;
            out.save(&cfg.output_dir)?;
            print_failures(out.rows.iter().filter(|r| r.is_failure()).count());
        }
        Command::Grid(a) => {
            let cfg = load_config(&a.common, true)?;
            log::info!("grid {:?} x {:?}: {}", cfg.grid.alphas, cfg.grid.groups, describe(&cfg));
            let out = run_sensitivity_grid(&cfg, &cfg.grid.alphas, &cfg.grid.groups)?;
            write_config(&cfg)?;
            out.save(&cfg.output_dir)?;
            print_failures(out.rows.iter().filter(|r| r.is_failure()).count());
        }
        Command::Diagrams(a) => {
            let cfg = load_config(&a.common, false)?;
            let seed = a.seed.unwrap_or(cfg.seeds[0]);
            log::info!("diagrams for seed {seed}: {}", describe(&cfg));
            run_diagrams(&cfg, seed, &cfg.output_dir)?;
        }
    }
    Ok(())
}

fn print_failures(n: usize) {
    if n > 0 {
        eprintln!("{n} cells failed; see the error column of results.csv");
    }
}
