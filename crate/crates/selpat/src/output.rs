//! JSON and CSV renderings of results.

use std::io::Write;

use serde::Serialize;

use selpat_core::{DiscoveryResult, InferenceReport, Mode, Sign, TraversalStats};

use crate::experiment::{ExperimentSummary, TimingSummary};

#[derive(Debug, Clone, Serialize)]
pub struct MinedPattern {
    pub pattern: selpat_core::Pattern,
    pub score: f64,
    pub sign: Sign,
    pub support: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct SequentialSummary {
    pub coefficients: Vec<f64>,
    pub residual_norms: Vec<f64>,
    pub rank_deficient: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct MineOutput {
    pub mode: Mode,
    pub k: usize,
    pub patterns: Vec<MinedPattern>,
    pub stats: TraversalStats,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sequential: Option<SequentialSummary>,
}

impl From<&DiscoveryResult> for MineOutput {
    fn from(res: &DiscoveryResult) -> Self {
        Self {
            mode: res.mode,
            k: res.k(),
            patterns: res
                .selected
                .iter()
                .map(|s| MinedPattern {
                    pattern: s.pattern.clone(),
                    score: s.score,
                    sign: s.sign,
                    support: s.occurrence.count_ones(),
                })
                .collect(),
            stats: res.stats,
            sequential: res.sequential.as_ref().map(|f| SequentialSummary {
                coefficients: f.coefficients.clone(),
                residual_norms: f.residual_norms.clone(),
                rank_deficient: f.rank_deficient,
            }),
        }
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// One row per pattern: `pattern,score,selective_p,naive_p,adjusted_p,decision`.
pub fn write_report_csv<W: Write>(w: W, report: &InferenceReport) -> csv::Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["pattern", "score", "selective_p", "naive_p", "adjusted_p", "decision"])?;
    for r in &report.records {
        wtr.write_record([
            r.pattern.to_string(),
            r.score.to_string(),
            opt(r.selective_p),
            r.naive_p.to_string(),
            r.adjusted_p.to_string(),
            if r.positive { "positive" } else { "negative" }.to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

/// One row per configuration and method.
pub fn write_summary_csv<W: Write>(w: W, kind: &str, summaries: &[ExperimentSummary]) -> csv::Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record([
        "experiment", "scenario", "n", "d", "k", "r", "zeta", "sigma", "alpha", "trials",
        "method", "fw_fpr", "fw_fpr_se", "tpr", "tpr_discovery", "pooled_patterns",
        "pooled_below_alpha", "mean_seconds",
    ])?;
    for s in summaries {
        let c = &s.config;
        for m in &s.methods {
            wtr.write_record([
                kind.to_string(),
                format!("{:?}", c.scenario).to_lowercase(),
                c.n.to_string(),
                c.d.to_string(),
                c.k.to_string(),
                c.r.to_string(),
                c.zeta.to_string(),
                c.sigma.to_string(),
                c.alpha.to_string(),
                m.trials.to_string(),
                method_name(m.method).to_string(),
                m.fw_fpr.to_string(),
                m.fw_fpr_se.to_string(),
                m.tpr.to_string(),
                m.tpr_discovery.to_string(),
                m.pooled_patterns.to_string(),
                m.pooled_below_alpha.to_string(),
                m.mean_seconds.to_string(),
            ])?;
        }
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_timing_csv<W: Write>(w: W, rows: &[TimingSummary]) -> csv::Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record([
        "scenario", "n", "d", "r", "k", "zeta", "pruning", "trials", "median_secs", "max_secs",
        "timed_out", "median",
    ])?;
    for t in rows {
        let c = &t.config;
        wtr.write_record([
            format!("{:?}", c.scenario).to_lowercase(),
            c.n.to_string(),
            c.d.to_string(),
            c.r.to_string(),
            c.k.to_string(),
            c.zeta.to_string(),
            t.pruning.to_string(),
            t.samples.len().to_string(),
            t.median_secs.to_string(),
            t.max_secs.to_string(),
            t.timed_out.to_string(),
            t.median_label(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn method_name(m: selpat_core::Method) -> &'static str {
    match m {
        selpat_core::Method::Naive => "naive",
        selpat_core::Method::Split => "split",
        selpat_core::Method::Select => "select",
    }
}
