//! Discovery phase: top-k and sequential pattern mining with
//! anti-monotone upper bounds.
//!
//! For a node with occurrence `τ_j` and any superset `ℓ`,
//! `Σ_{v_i<0} τ_{i,j} v_i ≤ τ_ℓᵀ v ≤ Σ_{v_i>0} τ_{i,j} v_i` because
//! `0 ≤ τ_{i,ℓ} ≤ τ_{i,j}`. Subtrees whose bound falls strictly below the
//! current k-th best score are skipped.

use alloc::vec::Vec;
use core::borrow::Borrow;
use core::cmp::Ordering;

use crate::bits::OccurrenceVector;
use crate::error::{Error, Result};
use crate::linalg::IncrementalQr;
use crate::tree::{Enumerator, TraversalStats, Visit};
use crate::Pattern;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Mode {
    /// Top-k by `s_j = τ_jᵀ y`.
    Positive,
    /// Top-k by `|s_j|`, conditioning on the signs.
    Signed,
    /// Greedy selection on the least-squares residual, refit each step.
    Sequential,
}

impl core::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "positive" => Ok(Mode::Positive),
            "signed" => Ok(Mode::Signed),
            "sequential" => Ok(Mode::Sequential),
            other => Err(Error::InvalidArgument(alloc::format!("unknown mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Sign {
    Positive,
    Negative,
}

impl Sign {
    /// `sgn(0)` is taken as positive.
    pub fn of(x: f64) -> Self {
        if x < 0.0 {
            Sign::Negative
        } else {
            Sign::Positive
        }
    }

    pub fn as_f64(self) -> f64 {
        match self {
            Sign::Positive => 1.0,
            Sign::Negative => -1.0,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Sign::Positive => Sign::Negative,
            Sign::Negative => Sign::Positive,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Selected<K = Pattern> {
    pub pattern: K,
    pub occurrence: OccurrenceVector,
    /// `τᵀ y` for the top-k modes, `τᵀ r_{h−1}` for the sequential mode.
    pub score: f64,
    pub sign: Sign,
}

/// Least-squares state of a sequential run.
#[derive(Debug, Clone)]
pub struct SequentialFit {
    /// Factorization of `Γ` with the selected occurrence columns in order.
    pub qr: IncrementalQr,
    /// `‖r_h‖` after each step.
    pub residual_norms: Vec<f64>,
    /// `β̂ = Γ⁺ y` for the final model.
    pub coefficients: Vec<f64>,
    pub rank_deficient: bool,
}

#[derive(Debug, Clone)]
pub struct DiscoveryResult<K = Pattern> {
    pub mode: Mode,
    pub selected: Vec<Selected<K>>,
    pub stats: TraversalStats,
    pub sequential: Option<SequentialFit>,
}

impl<K> DiscoveryResult<K> {
    pub fn k(&self) -> usize {
        self.selected.len()
    }

    pub fn patterns(&self) -> impl Iterator<Item = &K> {
        self.selected.iter().map(|s| &s.pattern)
    }
}

/// Keeps the `k` best `(value, key)` pairs ordered by value descending and
/// key ascending.
struct TopK<K> {
    k: usize,
    best: Vec<(f64, K, f64, OccurrenceVector)>,
}

impl<K: Ord> TopK<K> {
    fn new(k: usize) -> Self {
        Self {
            k,
            best: Vec::with_capacity(k + 1),
        }
    }

    fn is_full(&self) -> bool {
        self.best.len() >= self.k
    }

    fn threshold(&self) -> Option<f64> {
        if self.is_full() {
            self.best.last().map(|e| e.0)
        } else {
            None
        }
    }

    /// Whether `(value, view)` would enter the list.
    fn admits<V: ?Sized + Ord>(&self, value: f64, view: &V) -> bool
    where
        K: Borrow<V>,
    {
        match self.best.last() {
            Some(worst) if self.is_full() => match value.total_cmp(&worst.0) {
                Ordering::Greater => true,
                Ordering::Less => false,
                Ordering::Equal => view < worst.1.borrow(),
            },
            _ => true,
        }
    }

    fn insert(&mut self, value: f64, key: K, score: f64, occ: OccurrenceVector) {
        let pos = self
            .best
            .partition_point(|e| match e.0.total_cmp(&value) {
                Ordering::Greater => true,
                Ordering::Less => false,
                Ordering::Equal => e.1 < key,
            });
        self.best.insert(pos, (value, key, score, occ));
        self.best.truncate(self.k);
    }
}

fn check_k<E: Enumerator>(tree: &E, k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    let total = tree.pattern_count();
    if k as u128 > total {
        return Err(Error::TooManyPatterns { k, total });
    }
    Ok(())
}

fn mine_top_k<E: Enumerator>(
    tree: &E,
    y: &[f64],
    k: usize,
    signed: bool,
    prune: bool,
) -> Result<DiscoveryResult<E::Key>> {
    check_k(tree, k)?;
    let mut top = TopK::<E::Key>::new(k);
    let stats = tree.traverse((), |view, occ, _| {
        let mut score = 0.0;
        let mut pos = 0.0;
        let mut neg = 0.0;
        for i in occ.iter_ones() {
            let v = y[i];
            score += v;
            if v > 0.0 {
                pos += v;
            } else if v < 0.0 {
                neg += v;
            }
        }
        let (value, bound) = if signed {
            (score.abs(), f64::max(pos, -neg))
        } else {
            (score, pos)
        };
        if top.admits(value, view) {
            top.insert(value, tree.to_key(view), score, occ.clone());
        }
        match top.threshold() {
            Some(t) if prune && bound < t => Visit::Prune,
            _ => Visit::Descend(()),
        }
    });
    let selected = top
        .best
        .into_iter()
        .map(|(_, pattern, score, occurrence)| Selected {
            pattern,
            occurrence,
            score,
            sign: Sign::of(score),
        })
        .collect();
    Ok(DiscoveryResult {
        mode: if signed { Mode::Signed } else { Mode::Positive },
        selected,
        stats,
        sequential: None,
    })
}

/// The `k` patterns with the largest `τᵀ y`; ties go to the
/// lexicographically smaller pattern.
pub fn mine_top_k_positive<E: Enumerator>(
    tree: &E,
    y: &[f64],
    k: usize,
) -> Result<DiscoveryResult<E::Key>> {
    mine_top_k(tree, y, k, false, true)
}

/// The `k` patterns with the largest `|τᵀ y|`, with their signs.
pub fn mine_top_k_signed<E: Enumerator>(
    tree: &E,
    y: &[f64],
    k: usize,
) -> Result<DiscoveryResult<E::Key>> {
    mine_top_k(tree, y, k, true, true)
}

/// Greedy discovery: step `h` picks the unselected pattern maximizing
/// `|r_{h−1}ᵀ τ|` with `r_0 = y`, then refits least squares on all selected
/// columns.
pub fn mine_sequential<E: Enumerator>(
    tree: &E,
    y: &[f64],
    k: usize,
) -> Result<DiscoveryResult<E::Key>> {
    mine_sequential_with(tree, y, k, true)
}

/// Runs a mining mode, optionally with pruning disabled (for testing and
/// timing baselines).
pub fn mine<E: Enumerator>(
    tree: &E,
    y: &[f64],
    k: usize,
    mode: Mode,
    prune: bool,
) -> Result<DiscoveryResult<E::Key>> {
    match mode {
        Mode::Positive => mine_top_k(tree, y, k, false, prune),
        Mode::Signed => mine_top_k(tree, y, k, true, prune),
        Mode::Sequential => mine_sequential_with(tree, y, k, prune),
    }
}

struct StepBest<K> {
    value: f64,
    key: K,
    score: f64,
    occ: OccurrenceVector,
}

fn best_unselected<E: Enumerator>(
    tree: &E,
    residual: &[f64],
    selected: &[Selected<E::Key>],
    prune: bool,
    accept: &mut dyn FnMut(&OccurrenceVector) -> bool,
    stats: &mut TraversalStats,
) -> Option<StepBest<E::Key>> {
    let mut best: Option<StepBest<E::Key>> = None;
    let s = tree.traverse((), |view, occ, _| {
        let (neg, pos) = occ.signed_parts(residual);
        let score = occ.dot(residual);
        let value = score.abs();
        let is_selected = selected.iter().any(|s| s.pattern.borrow() == view);
        if !is_selected {
            let better = match &best {
                None => true,
                Some(b) => match value.total_cmp(&b.value) {
                    Ordering::Greater => true,
                    Ordering::Less => false,
                    Ordering::Equal => view < b.key.borrow(),
                },
            };
            if better && accept(occ) {
                best = Some(StepBest {
                    value,
                    key: tree.to_key(view),
                    score,
                    occ: occ.clone(),
                });
            }
        }
        match &best {
            Some(b) if prune && f64::max(pos, -neg) < b.value => Visit::Prune,
            _ => Visit::Descend(()),
        }
    });
    stats.merge(&s);
    best
}

fn mine_sequential_with<E: Enumerator>(
    tree: &E,
    y: &[f64],
    k: usize,
    prune: bool,
) -> Result<DiscoveryResult<E::Key>> {
    check_k(tree, k)?;
    let n = tree.transactions();
    let mut qr = IncrementalQr::new(n);
    let mut selected: Vec<Selected<E::Key>> = Vec::with_capacity(k);
    let mut residual = y.to_vec();
    let mut residual_norms = Vec::with_capacity(k);
    let mut stats = TraversalStats::default();
    let mut rank_deficient = false;

    for h in 1..=k {
        let best = best_unselected(tree, &residual, &selected, prune, &mut |_| true, &mut stats)
            .expect("k does not exceed the pattern count");
        let mut trial = qr.clone();
        let chosen = if trial.push(&best.occ.to_dense()) {
            qr = trial;
            best
        } else {
            // Only possible when every remaining correlation is (numerically)
            // zero; prefer an independent column if one exists.
            let mut probe = |occ: &OccurrenceVector| {
                let mut t = qr.clone();
                t.push(&occ.to_dense())
            };
            match best_unselected(tree, &residual, &selected, false, &mut probe, &mut stats) {
                Some(alt) => {
                    qr.push(&alt.occ.to_dense());
                    alt
                }
                None => {
                    log::warn!("sequential step {h}: no independent candidate left");
                    rank_deficient = true;
                    qr.push(&best.occ.to_dense());
                    best
                }
            }
        };
        selected.push(Selected {
            pattern: chosen.key,
            occurrence: chosen.occ,
            score: chosen.score,
            sign: Sign::of(chosen.score),
        });
        residual = qr.projected_prefix(h, y);
        residual_norms.push(libm::sqrt(residual.iter().map(|v| v * v).sum()));
    }

    let coefficients = qr.coefficients(y);
    Ok(DiscoveryResult {
        mode: Mode::Sequential,
        selected,
        stats,
        sequential: Some(SequentialFit {
            qr,
            residual_norms,
            coefficients,
            rank_deficient,
        }),
    })
}
