use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::time::{Duration, Instant};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use selpat::experiment::{
    fpr_tpr_grid, run_fpr, run_timing, run_tpr, timing_grid, Scenario, SyntheticConfig,
};
use selpat::io::{load_database, Format, SigmaArg};
use selpat::output::{write_report_csv, write_summary_csv, write_timing_csv, MineOutput};
use selpat_core::dataset::{DatabaseOptions, Sigma};
use selpat_core::inference::{report, split_inference};
use selpat_core::miner::mine;
use selpat_core::{ItemsetTree, Method, Mode, SearchOptions, TransactionDatabase};

#[derive(Parser)]
#[command(version, about = "Top-k pattern mining with selective p-values")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Mine the top-k patterns and print them as JSON.
    Mine {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        mining: MiningArgs,
    },
    /// Mine, then compute p-values for the discovered patterns.
    Infer {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        mining: MiningArgs,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long, default_value = "select", value_parser = parse_method)]
        baseline: Method,
        /// Seed of the random half split (split baseline only).
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also write the records as CSV to this file.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Walk the whole pattern tree during the truncation search.
        #[arg(long)]
        no_prune: bool,
    },
    /// Synthetic experiments comparing naive, split and selective inference.
    Experiment(ExperimentArgs),
    /// Two-transaction worked example.
    Toy,
}

#[derive(Args)]
struct DataArgs {
    /// Input database.
    path: PathBuf,
    /// Input format; inferred from the file extension when omitted.
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Noise standard deviation, or `sample` to estimate it.
    #[arg(long, default_value = "1")]
    sigma: SigmaArg,
    /// Keep responses as given instead of centering them.
    #[arg(long)]
    no_center: bool,
    /// Number of items (default: largest id + 1).
    #[arg(long)]
    items: Option<usize>,
}

impl DataArgs {
    fn load(&self) -> Result<TransactionDatabase> {
        let format = self.format.unwrap_or_else(|| Format::from_path(&self.path));
        load_database(
            &self.path,
            format,
            DatabaseOptions {
                items: self.items,
                sigma: self.sigma.0,
                center: !self.no_center,
            },
        )
        .with_context(|| format!("loading {}", self.path.display()))
    }
}

#[derive(Args)]
struct MiningArgs {
    #[arg(long, default_value = "signed", value_parser = parse_mode)]
    mode: Mode,
    #[arg(short, long, default_value_t = 5)]
    k: usize,
    /// Maximum pattern size.
    #[arg(short, long = "max-pattern-size", visible_alias = "r", default_value_t = 3)]
    r: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum ExperimentKind {
    Fpr,
    Tpr,
    Timing,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(value_enum)]
    kind: ExperimentKind,
    #[arg(long, value_enum, default_value = "individual")]
    scenario: Scenario,
    #[arg(long, default_value_t = 100)]
    n: usize,
    #[arg(long, default_value_t = 100)]
    d: usize,
    #[arg(long, default_value_t = 5)]
    k: usize,
    #[arg(long, default_value_t = 5)]
    r: usize,
    #[arg(long, default_value_t = 0.6)]
    zeta: f64,
    #[arg(long, default_value_t = 0.5)]
    sigma: f64,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value_t = 100)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Run the large published parameter grids instead of the given point.
    #[arg(long)]
    full: bool,
    /// Per-trial limit for timing runs.
    #[arg(long, default_value_t = 600)]
    timeout_secs: u64,
    /// Timing only: skip the runs without pruning.
    #[arg(long)]
    pruned_only: bool,
    /// Write the JSON summary to this file.
    #[arg(long)]
    json: Option<PathBuf>,
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    s.parse().map_err(|e: selpat_core::Error| e.to_string())
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse().map_err(|e: selpat_core::Error| e.to_string())
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<()> {
    let stdout = io::stdout();
    let mut out = stdout.lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn write_json<T: serde::Serialize>(path: &PathBuf, value: &T) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    serde_json::to_writer_pretty(BufWriter::new(file), value)?;
    Ok(())
}

fn infer(
    db: &TransactionDatabase,
    mining: &MiningArgs,
    alpha: f64,
    baseline: Method,
    seed: u64,
    no_prune: bool,
) -> Result<selpat_core::InferenceReport> {
    if baseline == Method::Split {
        let start = Instant::now();
        let (mut rep, _) = split_inference(db, mining.r, mining.k, mining.mode, alpha, seed)?;
        rep.timings.inference_secs = start.elapsed().as_secs_f64();
        return Ok(rep);
    }
    let tree = ItemsetTree::new(db, mining.r)?;
    let start = Instant::now();
    let discovery = mine(&tree, db.y(), mining.k, mining.mode, true)?;
    let discovery_secs = start.elapsed().as_secs_f64();
    let start = Instant::now();
    let opts = SearchOptions {
        no_prune,
        abort: None,
    };
    let mut rep = report(&tree, db.y(), db.sigma(), db.sigma_source(), &discovery, baseline, alpha, opts)?;
    rep.timings.discovery_secs = discovery_secs;
    rep.timings.inference_secs = start.elapsed().as_secs_f64();
    Ok(rep)
}

fn toy() -> Result<()> {
    let db = TransactionDatabase::new(
        vec![vec![0], vec![1]],
        vec![-1.5, 1.8],
        DatabaseOptions {
            items: Some(2),
            sigma: Sigma::Known(1.0),
            center: false,
        },
    )?;
    let mining = MiningArgs {
        mode: Mode::Positive,
        k: 1,
        r: 2,
    };
    let naive = infer(&db, &mining, 0.05, Method::Naive, 0, false)?;
    let select = infer(&db, &mining, 0.05, Method::Select, 0, false)?;
    let (n, s) = (&naive.records[0], &select.records[0]);
    let iv = s.interval.as_ref().expect("selective record has an interval");
    println!("transactions: ({{0}}, -1.5), ({{1}}, 1.8); k = 1, sigma = 1");
    println!("selected pattern: {} (score {})", s.pattern, s.score);
    println!(
        "naive p-value:     {:.4} ({})",
        n.naive_p,
        if n.positive { "significant at 0.05" } else { "not significant at 0.05" }
    );
    println!(
        "selective p-value: {:.4} ({})",
        s.selective_p.unwrap_or(f64::NAN),
        if s.positive { "significant at 0.05" } else { "not significant at 0.05" }
    );
    println!("truncation interval: [{}, {}]", iv.lower, iv.upper);
    Ok(())
}

fn experiment(args: &ExperimentArgs) -> Result<()> {
    let base = SyntheticConfig {
        n: args.n,
        d: args.d,
        k: args.k,
        r: args.r,
        alpha: args.alpha,
        sigma: args.sigma,
        zeta: args.zeta,
        scenario: args.scenario,
        trials: args.trials,
        seed: args.seed,
        ..Default::default()
    };
    let stdout = io::stdout();
    match args.kind {
        ExperimentKind::Fpr | ExperimentKind::Tpr => {
            let mut summaries = Vec::new();
            for cfg in fpr_tpr_grid(&base, args.full) {
                log::info!("running n={} d={}", cfg.n, cfg.d);
                let (summary, _) = match args.kind {
                    ExperimentKind::Fpr => run_fpr(&cfg)?,
                    _ => run_tpr(&cfg)?,
                };
                summaries.push(summary);
            }
            let kind = match args.kind {
                ExperimentKind::Fpr => "fpr",
                _ => "tpr",
            };
            write_summary_csv(stdout.lock(), kind, &summaries)?;
            if let Some(path) = &args.json {
                write_json(path, &summaries)?;
            }
        }
        ExperimentKind::Timing => {
            let timeout = Duration::from_secs(args.timeout_secs);
            let mut rows = Vec::new();
            for cfg in timing_grid(&base, args.full) {
                rows.push(run_timing(&cfg, true, timeout)?);
                if !args.pruned_only {
                    rows.push(run_timing(&cfg, false, timeout)?);
                }
            }
            write_timing_csv(stdout.lock(), &rows)?;
            if let Some(path) = &args.json {
                write_json(path, &rows)?;
            }
        }
    }
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::Mine { data, mining } => {
            let db = data.load()?;
            let tree = ItemsetTree::new(&db, mining.r)?;
            let res = mine(&tree, db.y(), mining.k, mining.mode, true)?;
            print_json(&MineOutput::from(&res))
        }
        Command::Infer {
            data,
            mining,
            alpha,
            baseline,
            seed,
            csv,
            no_prune,
        } => {
            let db = data.load()?;
            let rep = infer(&db, &mining, alpha, baseline, seed, no_prune)?;
            if let Some(path) = csv {
                let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
                write_report_csv(BufWriter::new(file), &rep)?;
            }
            print_json(&rep)
        }
        Command::Experiment(args) => experiment(&args),
        Command::Toy => toy(),
    }
}
