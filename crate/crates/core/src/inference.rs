//! Selective, naive and data-splitting p-values for discovered patterns.

use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dataset::{SigmaSource, TransactionDatabase};
use crate::error::{Error, Result};
use crate::event::EventSpec;
use crate::linalg::IncrementalQr;
use crate::miner::{mine, DiscoveryResult, Mode, Sign};
use crate::normal::{normal_cdf, normal_sf, TruncatedNormal};
use crate::tree::{Enumerator, ItemsetTree, TraversalStats};
use crate::truncation::{
    search_interval, sequential_line_query, LineQuery, SearchOptions, SearchStats,
    TruncationInterval,
};
use crate::Pattern;

/// Which tail of the null distribution a p-value measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Direction {
    Upper,
    Lower,
}

impl Direction {
    pub fn for_selection(mode: Mode, sign: Sign) -> Self {
        match (mode, sign) {
            (Mode::Positive, _) | (_, Sign::Positive) => Direction::Upper,
            (_, Sign::Negative) => Direction::Lower,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Method {
    /// Nominal p-values, no correction for selection.
    Naive,
    /// Mine on one half, test on the other.
    Split,
    /// p-values conditional on the selection event.
    Select,
}

impl core::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "naive" => Ok(Method::Naive),
            "split" => Ok(Method::Split),
            "select" => Ok(Method::Select),
            other => Err(Error::InvalidArgument(alloc::format!(
                "unknown method {other:?}"
            ))),
        }
    }
}

/// Plain normal tail of `ηᵀy` under `N(0, σ²‖η‖²)`.
pub fn naive_p_value(q: &LineQuery, sigma: f64, direction: Direction) -> f64 {
    let z = q.statistic() / (sigma * libm::sqrt(q.eta_norm_sq()));
    match direction {
        Direction::Upper => normal_sf(z),
        Direction::Lower => normal_cdf(z),
    }
}

/// Tail of `ηᵀy` under `N(0, σ²‖η‖²)` truncated to `[L, U]`.
pub fn selective_p_value<K>(
    q: &LineQuery,
    interval: &TruncationInterval<K>,
    sigma: f64,
    direction: Direction,
) -> Result<f64> {
    let tn = TruncatedNormal::new(
        0.0,
        sigma * libm::sqrt(q.eta_norm_sq()),
        interval.lower,
        interval.upper,
    )?;
    Ok(match direction {
        Direction::Upper => tn.sf(q.statistic()),
        Direction::Lower => tn.cdf(q.statistic()),
    })
}

#[derive(Debug, Clone)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PatternRecord<K = Pattern> {
    pub pattern: K,
    /// Discovery score (`τᵀy`, or the residual correlation in sequential mode).
    pub score: f64,
    pub sign: Sign,
    /// Tested statistic `ηᵀy` (the coefficient `β̂_j` in sequential mode).
    pub statistic: f64,
    pub selective_p: Option<f64>,
    pub naive_p: f64,
    /// `min(1, k · p)` of the method's p-value.
    pub adjusted_p: f64,
    pub positive: bool,
    pub interval: Option<TruncationInterval<K>>,
    pub search: Option<SearchStats>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Timings {
    pub discovery_secs: f64,
    pub inference_secs: f64,
}

#[derive(Debug, Clone)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct InferenceReport<K = Pattern> {
    pub method: Method,
    pub mode: Mode,
    pub k: usize,
    pub alpha: f64,
    pub sigma: f64,
    pub sigma_source: SigmaSource,
    pub discovery: TraversalStats,
    /// Sorted by adjusted p-value, ascending.
    pub records: Vec<PatternRecord<K>>,
    pub timings: Timings,
}

impl<K> InferenceReport<K> {
    pub fn positives(&self) -> impl Iterator<Item = &PatternRecord<K>> {
        self.records.iter().filter(|r| r.positive)
    }

    pub fn any_positive(&self) -> bool {
        self.records.iter().any(|r| r.positive)
    }
}

/// Bonferroni over `k`, clipped to 1.
pub fn bonferroni(p: f64, k: usize) -> f64 {
    (p * k as f64).min(1.0)
}

fn check_alpha(alpha: f64) -> Result<()> {
    if (0.0..=1.0).contains(&alpha) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(alloc::format!(
            "alpha must lie in [0, 1], got {alpha}"
        )))
    }
}

fn line_query<K>(discovery: &DiscoveryResult<K>, j: usize, y: &[f64]) -> Result<LineQuery> {
    match discovery.mode {
        Mode::Sequential => sequential_line_query(discovery, j + 1, y),
        _ => LineQuery::for_occurrence(y, &discovery.selected[j].occurrence),
    }
}

fn finish<K>(mut records: Vec<PatternRecord<K>>) -> Vec<PatternRecord<K>> {
    records.sort_by(|a, b| a.adjusted_p.total_cmp(&b.adjusted_p));
    records
}

/// Naive or selective inference for every discovered pattern.
///
/// `y` and `sigma` must be the responses and noise level the discovery ran
/// on. With [`Method::Naive`] no truncation search is performed.
#[allow(clippy::too_many_arguments)]
pub fn report<E: Enumerator>(
    tree: &E,
    y: &[f64],
    sigma: f64,
    sigma_source: SigmaSource,
    discovery: &DiscoveryResult<E::Key>,
    method: Method,
    alpha: f64,
    opts: SearchOptions<'_>,
) -> Result<InferenceReport<E::Key>> {
    check_alpha(alpha)?;
    if method == Method::Split {
        return Err(Error::InvalidArgument(
            "data splitting needs the raw database; use split_inference".into(),
        ));
    }
    let k = discovery.k();
    let spec = EventSpec::from_discovery(discovery);
    let mut records = Vec::with_capacity(k);
    for (j, sel) in discovery.selected.iter().enumerate() {
        let direction = Direction::for_selection(discovery.mode, sel.sign);
        let mut record = PatternRecord {
            pattern: sel.pattern.clone(),
            score: sel.score,
            sign: sel.sign,
            statistic: 0.0,
            selective_p: None,
            naive_p: 1.0,
            adjusted_p: 1.0,
            positive: false,
            interval: None,
            search: None,
            note: None,
        };
        let q = match line_query(discovery, j, y) {
            Ok(q) => q,
            Err(Error::InvalidArgument(_)) => {
                record.note = Some("degenerate test direction (pattern never occurs)".into());
                if method == Method::Select {
                    record.selective_p = Some(1.0);
                }
                records.push(record);
                continue;
            }
            Err(e) => return Err(e),
        };
        record.statistic = q.statistic();
        record.naive_p = naive_p_value(&q, sigma, direction);
        let p = match method {
            Method::Select => {
                let (interval, stats) = search_interval(tree, &spec, &q, opts)?;
                let p = selective_p_value(&q, &interval, sigma, direction)?;
                record.selective_p = Some(p);
                record.interval = Some(interval);
                record.search = Some(stats);
                p
            }
            _ => record.naive_p,
        };
        if discovery.sequential.as_ref().is_some_and(|f| f.rank_deficient) {
            record.note = Some("selected columns are rank deficient; minimum-norm fit".into());
        }
        record.adjusted_p = bonferroni(p, k);
        record.positive = record.adjusted_p < alpha;
        records.push(record);
    }
    Ok(InferenceReport {
        method,
        mode: discovery.mode,
        k,
        alpha,
        sigma,
        sigma_source,
        discovery: discovery.stats,
        records: finish(records),
        timings: Timings::default(),
    })
}

/// Data-splitting baseline: mine on a random half, test naively on the
/// other half. Each half is re-centered on its own.
pub fn split_inference(
    db: &TransactionDatabase,
    r: usize,
    k: usize,
    mode: Mode,
    alpha: f64,
    seed: u64,
) -> Result<(InferenceReport, DiscoveryResult)> {
    check_alpha(alpha)?;
    let n = db.n();
    if n < 4 {
        return Err(Error::InvalidDatabase(alloc::format!(
            "data splitting needs at least 4 transactions, got {n}"
        )));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (first, second) = idx.split_at(n / 2);
    let train = db.subset(first, true)?;
    let test = db.subset(second, true)?;

    let tree = ItemsetTree::new(&train, r)?;
    let discovery = mine(&tree, train.y(), k, mode, true)?;
    let sigma = db.sigma();

    let test_occ: Vec<_> = discovery
        .selected
        .iter()
        .map(|s| s.occurrence_in(&test))
        .collect();

    // Sequential: refit least squares on the test half.
    let mut pinv = None;
    let mut dependent = Vec::new();
    if mode == Mode::Sequential {
        let mut qr = IncrementalQr::new(test.n());
        for occ in &test_occ {
            dependent.push(!qr.push(&occ.to_dense()));
        }
        pinv = Some(qr.pinv_rows());
    }

    let mut records = Vec::with_capacity(k);
    for (j, sel) in discovery.selected.iter().enumerate() {
        let direction = Direction::for_selection(mode, sel.sign);
        let eta = match &pinv {
            Some(rows) => rows[j].clone(),
            None => test_occ[j].to_dense(),
        };
        let degenerate = test_occ[j].is_zero() || dependent.get(j).copied().unwrap_or(false);
        let (statistic, naive_p, note) = match LineQuery::new(test.y().to_vec(), eta) {
            Ok(q) if !degenerate => (q.statistic(), naive_p_value(&q, sigma, direction), None),
            _ => (
                0.0,
                1.0,
                Some(String::from("pattern not testable on the held-out half")),
            ),
        };
        let adjusted_p = bonferroni(naive_p, k);
        records.push(PatternRecord {
            pattern: sel.pattern.clone(),
            score: sel.score,
            sign: sel.sign,
            statistic,
            selective_p: None,
            naive_p,
            adjusted_p,
            positive: adjusted_p < alpha,
            interval: None,
            search: None,
            note,
        });
    }
    let report = InferenceReport {
        method: Method::Split,
        mode,
        k,
        alpha,
        sigma,
        sigma_source: db.sigma_source(),
        discovery: discovery.stats,
        records: finish(records),
        timings: Timings::default(),
    };
    Ok((report, discovery))
}

impl crate::miner::Selected<Pattern> {
    /// Occurrence of this pattern in another database over the same items.
    pub fn occurrence_in(&self, db: &TransactionDatabase) -> crate::OccurrenceVector {
        db.occurrence(&self.pattern)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::DatabaseOptions;
    use crate::miner::mine_top_k_positive;
    use alloc::vec;

    fn toy() -> TransactionDatabase {
        TransactionDatabase::new(
            vec![vec![0], vec![1]],
            vec![-1.5, 1.8],
            DatabaseOptions {
                center: false,
                ..Default::default()
            },
        )
        .unwrap()
    }

    fn toy_report(method: Method) -> InferenceReport {
        let db = toy();
        let tree = ItemsetTree::new(&db, 2).unwrap();
        let disc = mine_top_k_positive(&tree, db.y(), 1).unwrap();
        report(
            &tree,
            db.y(),
            db.sigma(),
            db.sigma_source(),
            &disc,
            method,
            0.05,
            SearchOptions::default(),
        )
        .unwrap()
    }

    #[test]
    fn toy_naive_vs_selective() {
        let sel = toy_report(Method::Select);
        let rec = &sel.records[0];
        assert!((rec.naive_p - 0.0359).abs() < 1e-3);
        assert!((rec.selective_p.unwrap() - 0.0719).abs() < 1e-3);
        assert!(!rec.positive);
        let naive = toy_report(Method::Naive);
        assert!(naive.records[0].positive);
        assert_eq!(naive.records[0].selective_p, None);
    }

    #[test]
    fn naive_edge_values() {
        let q = LineQuery::new(vec![1.0, -1.0], vec![1.0, 1.0]).unwrap();
        assert_eq!(naive_p_value(&q, 1.0, Direction::Upper), 0.5);
        let q = LineQuery::new(vec![-1.8], vec![1.0]).unwrap();
        let p = naive_p_value(&q, 1.0, Direction::Lower);
        assert!((p - 0.0359).abs() < 1e-4);
    }

    #[test]
    fn bonferroni_boundary() {
        let adjusted = bonferroni(0.01, 5);
        assert!((adjusted - 0.05).abs() < 1e-15);
        assert_eq!(bonferroni(0.3, 5), 1.0);
        assert_eq!(bonferroni(0.02, 1), 0.02);
    }

    #[test]
    fn split_is_deterministic() {
        let rows: Vec<Vec<u32>> = (0..20u32)
            .map(|i| (0..6).filter(|j| (i * 7 + j * 3) % 5 < 2).collect())
            .collect();
        let y: Vec<f64> = (0..20).map(|i| ((i * 37) % 11) as f64 - 5.0).collect();
        let db = TransactionDatabase::new(rows, y, DatabaseOptions::default()).unwrap();
        let (a, _) = split_inference(&db, 2, 3, Mode::Signed, 0.05, 9).unwrap();
        let (b, _) = split_inference(&db, 2, 3, Mode::Signed, 0.05, 9).unwrap();
        let pa: Vec<_> = a.records.iter().map(|r| (r.pattern.clone(), r.naive_p)).collect();
        let pb: Vec<_> = b.records.iter().map(|r| (r.pattern.clone(), r.naive_p)).collect();
        assert_eq!(pa, pb);
        assert!(split_inference(&toy(), 1, 1, Mode::Signed, 0.05, 0).is_err());
    }
}
