//! Synthetic data and the Monte-Carlo harness comparing naive, data-splitting
//! and selective inference.
//!
//! Every trial draws from its own ChaCha stream selected by
//! `(seed, trial_index)`, so results do not depend on how trials are
//! scheduled across threads.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use selpat_core::dataset::{DatabaseOptions, Sigma};
use selpat_core::inference::{report, split_inference, Method};
use selpat_core::miner::mine;
use selpat_core::{
    Enumerator, Error, ItemsetTree, Mode, Pattern, SearchOptions, SearchStats, TransactionDatabase,
    TraversalStats,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    /// Top-k patterns by absolute score, each tested on its own.
    Individual,
    /// Greedy least-squares selection, coefficients tested.
    Sequential,
}

impl Scenario {
    pub fn mode(self) -> Mode {
        match self {
            Scenario::Individual => Mode::Signed,
            Scenario::Sequential => Mode::Sequential,
        }
    }

    /// Planted patterns and their effect sizes.
    pub fn signal(self) -> Vec<(Pattern, f64)> {
        let p = |items: &[u32]| Pattern::new(items.to_vec()).expect("valid pattern");
        match self {
            Scenario::Individual => vec![(p(&[0, 1, 2]), 2.0)],
            Scenario::Sequential => vec![
                (p(&[0]), 0.5),
                (p(&[1, 2]), -2.0),
                (p(&[3, 4, 5]), 3.0),
            ],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Truth {
    /// Responses independent of the items.
    Null,
    /// Responses shifted by the scenario's planted patterns.
    Signal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    pub n: usize,
    pub d: usize,
    pub k: usize,
    pub r: usize,
    pub alpha: f64,
    pub sigma: f64,
    /// Probability that an item is absent from a transaction.
    pub zeta: f64,
    pub scenario: Scenario,
    pub truth: Truth,
    pub trials: u64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            n: 100,
            d: 100,
            k: 5,
            r: 5,
            alpha: 0.05,
            sigma: 0.5,
            zeta: 0.6,
            scenario: Scenario::Individual,
            truth: Truth::Null,
            trials: 100,
            seed: 0,
        }
    }
}

/// One generated data set with the patterns that truly affect the response.
#[derive(Debug, Clone)]
pub struct Synthetic {
    pub db: TransactionDatabase,
    pub truth: Vec<Pattern>,
}

pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Each item enters each transaction independently with probability
/// `1 − ζ`; responses are `N(μ(T), σ²)` and then centered.
pub fn generate(cfg: &SyntheticConfig, trial: u64) -> Result<Synthetic, Error> {
    let mut rng = trial_rng(cfg.seed, trial);
    let keep = 1.0 - cfg.zeta;
    let signal = match cfg.truth {
        Truth::Null => Vec::new(),
        Truth::Signal => cfg.scenario.signal(),
    };
    let mut rows = Vec::with_capacity(cfg.n);
    let mut y = Vec::with_capacity(cfg.n);
    for _ in 0..cfg.n {
        let row: Vec<u32> = (0..cfg.d as u32).filter(|_| rng.random::<f64>() < keep).collect();
        let mean: f64 = signal
            .iter()
            .filter(|(p, _)| p.items().iter().all(|i| row.binary_search(i).is_ok()))
            .map(|(_, effect)| effect)
            .sum();
        let noise: f64 = StandardNormal.sample(&mut rng);
        y.push(mean + cfg.sigma * noise);
        rows.push(row);
    }
    let db = TransactionDatabase::new(
        rows,
        y,
        DatabaseOptions {
            items: Some(cfg.d),
            sigma: Sigma::Known(cfg.sigma),
            center: true,
        },
    )?;
    Ok(Synthetic {
        db,
        truth: signal.into_iter().map(|(p, _)| p).collect(),
    })
}

/// Result of one inference method on one trial.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MethodOutcome {
    pub method: Method,
    pub discovered: Vec<Pattern>,
    pub positives: Vec<Pattern>,
    /// Unadjusted p-value of every discovered pattern.
    pub p_values: Vec<f64>,
    /// Some positive is not a planted pattern.
    pub false_positive: bool,
    /// Planted patterns that were discovered.
    pub truth_discovered: usize,
    /// Planted patterns that were discovered and declared positive.
    pub truth_positive: usize,
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub trial: u64,
    pub truth: Vec<Pattern>,
    pub discovery_secs: f64,
    pub discovery: TraversalStats,
    pub search: SearchStats,
    pub methods: Vec<MethodOutcome>,
}

impl TrialOutcome {
    pub fn method(&self, m: Method) -> Option<&MethodOutcome> {
        self.methods.iter().find(|o| o.method == m)
    }
}

fn outcome(
    method: Method,
    truth: &[Pattern],
    records: &[selpat_core::PatternRecord],
    seconds: f64,
) -> MethodOutcome {
    let discovered: Vec<Pattern> = records.iter().map(|r| r.pattern.clone()).collect();
    let positives: Vec<Pattern> = records
        .iter()
        .filter(|r| r.positive)
        .map(|r| r.pattern.clone())
        .collect();
    MethodOutcome {
        method,
        p_values: records
            .iter()
            .map(|r| r.selective_p.unwrap_or(r.naive_p))
            .collect(),
        false_positive: positives.iter().any(|p| !truth.contains(p)),
        truth_discovered: truth.iter().filter(|t| discovered.contains(t)).count(),
        truth_positive: truth.iter().filter(|t| positives.contains(t)).count(),
        discovered,
        positives,
        seconds,
    }
}

/// Seed of the half split for a trial. Drawn from a stream disjoint from
/// the data streams.
fn split_seed(seed: u64, trial: u64) -> u64 {
    trial_rng(seed, trial | 1 << 63).random()
}

/// Runs discovery once, then every requested method on the same data.
/// Naive and selective inference share the discovery; splitting mines its
/// own half.
pub fn run_trial(cfg: &SyntheticConfig, trial: u64, methods: &[Method]) -> Result<TrialOutcome, Error> {
    let Synthetic { db, truth } = generate(cfg, trial)?;
    let tree = ItemsetTree::new(&db, cfg.r)?;
    let mode = cfg.scenario.mode();
    let k = cfg.k.min(tree.pattern_count().min(usize::MAX as u128) as usize);

    let start = Instant::now();
    let discovery = mine(&tree, db.y(), k, mode, true)?;
    let discovery_secs = start.elapsed().as_secs_f64();

    let mut out = TrialOutcome {
        trial,
        truth: truth.clone(),
        discovery_secs,
        discovery: discovery.stats,
        search: SearchStats::default(),
        methods: Vec::new(),
    };
    for &method in methods {
        let start = Instant::now();
        let records = match method {
            Method::Split => {
                split_inference(&db, cfg.r, k, mode, cfg.alpha, split_seed(cfg.seed, trial))?
                    .0
                    .records
            }
            _ => {
                let rep = report(
                    &tree,
                    db.y(),
                    db.sigma(),
                    db.sigma_source(),
                    &discovery,
                    method,
                    cfg.alpha,
                    SearchOptions::default(),
                )?;
                for r in &rep.records {
                    if let Some(s) = &r.search {
                        out.search.merge(s);
                    }
                }
                rep.records
            }
        };
        let secs = start.elapsed().as_secs_f64();
        out.methods.push(outcome(method, &truth, &records, secs));
    }
    Ok(out)
}

/// Trials `0..cfg.trials`, run in parallel, returned in trial order.
pub fn run_trials(cfg: &SyntheticConfig, methods: &[Method]) -> Result<Vec<TrialOutcome>, Error> {
    (0..cfg.trials)
        .into_par_iter()
        .map(|t| run_trial(cfg, t, methods))
        .collect()
}

/// Per-method aggregate over trials.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: Method,
    pub trials: u64,
    /// Fraction of trials with at least one false positive.
    pub fw_fpr: f64,
    /// Binomial standard error of `fw_fpr`.
    pub fw_fpr_se: f64,
    /// Mean fraction of planted patterns discovered and declared positive.
    pub tpr: f64,
    /// Mean fraction of planted patterns discovered, ignoring significance.
    pub tpr_discovery: f64,
    /// Discovered patterns pooled over trials.
    pub pooled_patterns: u64,
    /// Pooled patterns whose unadjusted p-value is below α.
    pub pooled_below_alpha: u64,
    pub mean_seconds: f64,
}

impl MethodSummary {
    pub fn pooled_rate(&self) -> f64 {
        if self.pooled_patterns == 0 {
            0.0
        } else {
            self.pooled_below_alpha as f64 / self.pooled_patterns as f64
        }
    }
}

pub fn binomial_se(p: f64, n: u64) -> f64 {
    if n == 0 {
        0.0
    } else {
        (p * (1.0 - p) / n as f64).sqrt()
    }
}

pub fn summarize(cfg: &SyntheticConfig, trials: &[TrialOutcome], methods: &[Method]) -> Vec<MethodSummary> {
    methods
        .iter()
        .map(|&m| {
            let rows: Vec<(&TrialOutcome, &MethodOutcome)> = trials
                .iter()
                .filter_map(|t| t.method(m).map(|o| (t, o)))
                .collect();
            let count = rows.len() as u64;
            let mean = |f: &dyn Fn(&TrialOutcome, &MethodOutcome) -> f64| {
                if rows.is_empty() {
                    0.0
                } else {
                    rows.iter().map(|(t, o)| f(t, o)).sum::<f64>() / rows.len() as f64
                }
            };
            let rate = |hits: usize, t: &TrialOutcome| {
                if t.truth.is_empty() {
                    0.0
                } else {
                    hits as f64 / t.truth.len() as f64
                }
            };
            let fw_fpr = mean(&|_, o| f64::from(u8::from(o.false_positive)));
            MethodSummary {
                method: m,
                trials: count,
                fw_fpr,
                fw_fpr_se: binomial_se(fw_fpr, count),
                tpr: mean(&|t, o| rate(o.truth_positive, t)),
                tpr_discovery: mean(&|t, o| rate(o.truth_discovered, t)),
                pooled_patterns: rows.iter().map(|(_, o)| o.p_values.len() as u64).sum(),
                pooled_below_alpha: rows
                    .iter()
                    .flat_map(|(_, o)| &o.p_values)
                    .filter(|p| **p < cfg.alpha)
                    .count() as u64,
                mean_seconds: mean(&|_, o| o.seconds),
            }
        })
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub config: SyntheticConfig,
    pub methods: Vec<MethodSummary>,
}

pub const ALL_METHODS: [Method; 3] = [Method::Naive, Method::Split, Method::Select];

/// False-positive experiment on null data.
pub fn run_fpr(cfg: &SyntheticConfig) -> Result<(ExperimentSummary, Vec<TrialOutcome>), Error> {
    let cfg = SyntheticConfig {
        truth: Truth::Null,
        ..*cfg
    };
    let trials = run_trials(&cfg, &ALL_METHODS)?;
    let methods = summarize(&cfg, &trials, &ALL_METHODS);
    Ok((ExperimentSummary { config: cfg, methods }, trials))
}

/// True-positive experiment on data with planted patterns.
pub fn run_tpr(cfg: &SyntheticConfig) -> Result<(ExperimentSummary, Vec<TrialOutcome>), Error> {
    let cfg = SyntheticConfig {
        truth: Truth::Signal,
        ..*cfg
    };
    let methods = [Method::Split, Method::Select];
    let trials = run_trials(&cfg, &methods)?;
    let summary = summarize(&cfg, &trials, &methods);
    Ok((ExperimentSummary { config: cfg, methods: summary }, trials))
}

/// Selective-inference wall-clock time of one trial.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TimingSample {
    pub trial: u64,
    pub seconds: f64,
    pub timed_out: bool,
    pub visited: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TimingSummary {
    pub config: SyntheticConfig,
    pub pruning: bool,
    pub timeout_secs: f64,
    pub median_secs: f64,
    pub max_secs: f64,
    pub timed_out: usize,
    pub samples: Vec<TimingSample>,
}

impl TimingSummary {
    /// Median formatted for tables; runs that hit the timeout show as `>=`.
    pub fn median_label(&self) -> String {
        if self.timed_out * 2 > self.samples.len() {
            format!(">={:.3e}", self.timeout_secs)
        } else {
            format!("{:.3e}", self.median_secs)
        }
    }
}

pub fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Times the selective inference phase (discovery excluded) with or
/// without subtree pruning. Trials run one after another so that timings
/// are not distorted by sharing cores. A trial exceeding `timeout` is
/// stopped and recorded at the timeout.
pub fn run_timing(cfg: &SyntheticConfig, pruning: bool, timeout: Duration) -> Result<TimingSummary, Error> {
    let mut samples = Vec::new();
    for trial in 0..cfg.trials {
        let Synthetic { db, .. } = generate(cfg, trial)?;
        let tree = ItemsetTree::new(&db, cfg.r)?;
        let discovery = mine(&tree, db.y(), cfg.k, cfg.scenario.mode(), true)?;
        let start = Instant::now();
        let abort = move || start.elapsed() > timeout;
        let opts = SearchOptions {
            no_prune: !pruning,
            abort: Some(&abort),
        };
        let result = report(
            &tree,
            db.y(),
            db.sigma(),
            db.sigma_source(),
            &discovery,
            Method::Select,
            cfg.alpha,
            opts,
        );
        let elapsed = start.elapsed().as_secs_f64();
        let sample = match result {
            Ok(rep) => TimingSample {
                trial,
                seconds: elapsed,
                timed_out: false,
                visited: rep
                    .records
                    .iter()
                    .filter_map(|r| r.search.map(|s| s.traversal.visited))
                    .sum(),
            },
            Err(Error::Aborted) => TimingSample {
                trial,
                seconds: timeout.as_secs_f64(),
                timed_out: true,
                visited: 0,
            },
            Err(e) => return Err(e),
        };
        log::info!(
            "timing trial {trial} pruning={pruning}: {:.4}s{}",
            sample.seconds,
            if sample.timed_out { " (timeout)" } else { "" }
        );
        samples.push(sample);
    }
    let secs: Vec<f64> = samples.iter().map(|s| s.seconds).collect();
    Ok(TimingSummary {
        config: *cfg,
        pruning,
        timeout_secs: timeout.as_secs_f64(),
        median_secs: median(&secs),
        max_secs: secs.iter().copied().fold(0.0, f64::max),
        timed_out: samples.iter().filter(|s| s.timed_out).count(),
        samples,
    })
}

/// Parameter grids. The scaled grids finish in minutes; `full` reproduces
/// the larger published grids.
pub fn fpr_tpr_grid(base: &SyntheticConfig, full: bool) -> Vec<SyntheticConfig> {
    let values: Vec<usize> = if full {
        vec![50, 100, 150, 200, 250]
    } else {
        vec![base.n]
    };
    let mut out: Vec<SyntheticConfig> = values
        .iter()
        .map(|&n| SyntheticConfig { n, ..*base })
        .collect();
    if full {
        out.extend(
            [50, 100, 150, 200, 250]
                .into_iter()
                .filter(|&d| d != base.d)
                .map(|d| SyntheticConfig { d, ..*base }),
        );
    }
    out
}

pub fn timing_grid(base: &SyntheticConfig, full: bool) -> Vec<SyntheticConfig> {
    if !full {
        return vec![*base];
    }
    let sizes = [100, 500, 1000, 5000, 10000];
    let mut out = Vec::new();
    for zeta in [0.8, 0.9] {
        for &n in &sizes {
            out.push(SyntheticConfig { n, d: 100, zeta, ..*base });
        }
        for &d in &sizes[1..] {
            out.push(SyntheticConfig { n: 100, d, zeta, ..*base });
        }
    }
    out
}
