//! Truncation points of the conditional null distribution.
//!
//! On the line `y + θη` a constraint `aᵀ y ≥ 0` becomes
//! `num + θ·den ≥ 0` with `num = aᵀ y ≥ 0` and `den = aᵀ η`. Constraints
//! with `den > 0` bound θ from below by `−num/den`, those with `den < 0`
//! bound it from above, and the rest never bind. `θ_min` is the largest
//! lower bound and `θ_max` the smallest upper bound.
//!
//! The lazy search walks the pattern tree once for all families. For a
//! node `j'` every superset `ℓ'` satisfies, for any vector `z`,
//! `Σ_{z_i<0} τ_{i,j'} z_i ≤ τ_{ℓ'}ᵀ z ≤ Σ_{z_i>0} τ_{i,j'} z_i`, which
//! brackets `num` and `den` of every constraint in the subtree. A family
//! stops looking at the subtree on the θ_min side when no descendant can
//! have `den > 0`, or when the numerator is provably non-negative and even
//! the most favourable ratio cannot beat the running `θ_min`; the θ_max
//! side is symmetric. A subtree is skipped once every family has given up
//! on both sides.

use alloc::vec;
use alloc::vec::Vec;

use crate::bits::OccurrenceVector;
use crate::error::{Error, Result};
use crate::event::{EventSpec, HalfSpace, FEASIBILITY_TOLERANCE};
use crate::miner::DiscoveryResult;
use crate::tree::{Enumerator, TraversalStats, Visit};
use crate::Pattern;

/// A constraint whose `|aᵀη|` is at most this fraction of its magnitude
/// scale is treated as parallel to the line.
pub const PARALLEL_TOLERANCE: f64 = 1e-12;

/// Relative margin by which a subtree bound must clear the running
/// estimate before it is pruned. Keeps pruned and unpruned searches
/// bit-identical in the presence of rounding.
const PRUNE_MARGIN: f64 = 1e-12;

const ABORT_CHECK_INTERVAL: u64 = 4096;

/// The line `y + θη` through the observed response.
#[derive(Debug, Clone, PartialEq)]
pub struct LineQuery {
    y: Vec<f64>,
    eta: Vec<f64>,
    statistic: f64,
    eta_norm_sq: f64,
}

impl LineQuery {
    pub fn new(y: Vec<f64>, eta: Vec<f64>) -> Result<Self> {
        if y.len() != eta.len() {
            return Err(Error::InvalidArgument(alloc::format!(
                "direction has length {} but response has length {}",
                eta.len(),
                y.len()
            )));
        }
        let eta_norm_sq: f64 = eta.iter().map(|v| v * v).sum();
        if eta_norm_sq.is_nan() || eta_norm_sq <= 0.0 {
            return Err(Error::InvalidArgument("test direction is zero".into()));
        }
        let statistic = eta.iter().zip(&y).map(|(a, b)| a * b).sum();
        Ok(Self {
            y,
            eta,
            statistic,
            eta_norm_sq,
        })
    }

    /// Test of an individual pattern: `η = τ`.
    pub fn for_occurrence(y: &[f64], occurrence: &OccurrenceVector) -> Result<Self> {
        Self::new(y.to_vec(), occurrence.to_dense())
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn eta(&self) -> &[f64] {
        &self.eta
    }

    /// `ηᵀ y`.
    pub fn statistic(&self) -> f64 {
        self.statistic
    }

    pub fn eta_norm_sq(&self) -> f64 {
        self.eta_norm_sq
    }
}

/// Test direction of the `j`-th (1-based) least-squares coefficient of a
/// sequential run: row `j` of `Γ⁺`, so that `ηᵀ y = β̂_j`.
pub fn sequential_line_query<K>(
    discovery: &DiscoveryResult<K>,
    j: usize,
    y: &[f64],
) -> Result<LineQuery> {
    let fit = discovery.sequential.as_ref().ok_or_else(|| {
        Error::InvalidArgument("coefficient tests need a sequential discovery".into())
    })?;
    if j == 0 || j > fit.qr.columns() {
        return Err(Error::InvalidArgument(alloc::format!(
            "coefficient index {j} outside 1..={}",
            fit.qr.columns()
        )));
    }
    let eta = fit.qr.pinv_rows().swap_remove(j - 1);
    LineQuery::new(y.to_vec(), eta)
}

/// Identifies the constraint that determined an end point.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConstraintId<K = Pattern> {
    pub family: usize,
    pub against: K,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TruncationInterval<K = Pattern> {
    pub theta_min: f64,
    pub theta_max: f64,
    /// `ηᵀy + θ_min‖η‖²`.
    pub lower: f64,
    /// `ηᵀy + θ_max‖η‖²`.
    pub upper: f64,
    pub argmin: Option<ConstraintId<K>>,
    pub argmax: Option<ConstraintId<K>>,
}

impl<K> TruncationInterval<K> {
    fn from_thetas(
        q: &LineQuery,
        theta_min: f64,
        theta_max: f64,
        argmin: Option<ConstraintId<K>>,
        argmax: Option<ConstraintId<K>>,
    ) -> Self {
        // θ = 0 is feasible; clamp away rounding on near-tight constraints.
        let theta_min = theta_min.min(0.0);
        let theta_max = theta_max.max(0.0);
        Self {
            theta_min,
            theta_max,
            lower: q.statistic + theta_min * q.eta_norm_sq,
            upper: q.statistic + theta_max * q.eta_norm_sq,
            argmin,
            argmax,
        }
    }

    pub fn unbounded(q: &LineQuery) -> Self {
        Self::from_thetas(q, f64::NEG_INFINITY, f64::INFINITY, None, None)
    }
}

#[derive(Clone, Copy, Default)]
pub struct SearchOptions<'a> {
    /// Disable to walk every node (for testing and timing baselines).
    pub no_prune: bool,
    /// Polled periodically; returning `true` aborts with [`Error::Aborted`].
    pub abort: Option<&'a (dyn Fn() -> bool + Sync)>,
}

impl core::fmt::Debug for SearchOptions<'_> {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("SearchOptions")
            .field("no_prune", &self.no_prune)
            .field("abort", &self.abort.is_some())
            .finish()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SearchStats {
    pub traversal: TraversalStats,
    /// Constraint evaluations performed (node × family).
    pub constraints_evaluated: u64,
}

impl SearchStats {
    pub fn merge(&mut self, other: &SearchStats) {
        self.traversal.merge(&other.traversal);
        self.constraints_evaluated += other.constraints_evaluated;
    }
}

/// Per-family constants of one query.
struct FamilyTerms {
    /// `bᵀy`, `bᵀη`.
    base_y: f64,
    base_eta: f64,
    coef: f64,
    step: usize,
    excluded: usize,
    parallel_tol: f64,
}

/// `(τᵀz_y, lo(z_y), hi(z_y), τᵀz_η, lo(z_η), hi(z_η))` for one step.
#[derive(Clone, Copy, Default)]
struct NodeSums {
    ty: f64,
    ylo: f64,
    yhi: f64,
    te: f64,
    elo: f64,
    ehi: f64,
}

#[inline]
fn node_sums(occ: &OccurrenceVector, zy: &[f64], ze: &[f64]) -> NodeSums {
    let mut s = NodeSums::default();
    for i in occ.iter_ones() {
        let a = zy[i];
        let b = ze[i];
        s.ty += a;
        s.te += b;
        if a > 0.0 {
            s.yhi += a;
        } else if a < 0.0 {
            s.ylo += a;
        }
        if b > 0.0 {
            s.ehi += b;
        } else if b < 0.0 {
            s.elo += b;
        }
    }
    s
}

/// Computes `θ_min`, `θ_max` and the truncation points by searching the
/// pattern tree with subtree pruning.
pub fn search_interval<E: Enumerator>(
    tree: &E,
    spec: &EventSpec<E::Key>,
    q: &LineQuery,
    opts: SearchOptions<'_>,
) -> Result<(TruncationInterval<E::Key>, SearchStats)> {
    let zy = spec.project(q.y());
    let ze = spec.project(q.eta());
    // Projection can shrink η to rounding noise; keep the unprojected scale.
    let eta_l1: f64 = q.eta().iter().map(|v| v.abs()).sum();
    let ze_l1: Vec<f64> = ze.iter().map(|z| z.iter().map(|v| v.abs()).sum()).collect();
    let feas_tol = FEASIBILITY_TOLERANCE * (1.0 + q.y().iter().map(|v| v.abs()).sum::<f64>());

    let terms: Vec<FamilyTerms> = spec
        .families
        .iter()
        .map(|f| {
            let base_eta = spec.base_dot(f, &ze);
            FamilyTerms {
                base_y: spec.base_dot(f, &zy),
                base_eta,
                coef: f.coef,
                step: f.step,
                excluded: f.excluded,
                parallel_tol: PARALLEL_TOLERANCE * (base_eta.abs() + ze_l1[f.step] + eta_l1),
            }
        })
        .collect();

    let mut theta_min = f64::NEG_INFINITY;
    let mut theta_max = f64::INFINITY;
    let mut argmin = None;
    let mut argmax = None;
    let mut stats = SearchStats::default();
    let mut failure: Option<Error> = None;
    let steps = zy.len();
    let mut sums = vec![NodeSums::default(); steps];
    let mut have = vec![false; steps];

    for (chunk_idx, chunk) in terms.chunks(64).enumerate() {
        let offset = chunk_idx * 64;
        let full: u64 = if chunk.len() == 64 {
            u64::MAX
        } else {
            (1u64 << chunk.len()) - 1
        };
        let mut visited = 0u64;
        let t = tree.traverse((full, full), |view, occ, &(min_mask, max_mask)| {
            visited += 1;
            if visited.is_multiple_of(ABORT_CHECK_INTERVAL) {
                if let Some(abort) = opts.abort {
                    if abort() {
                        failure = Some(Error::Aborted);
                        return Visit::Stop;
                    }
                }
            }
            let pos = spec.selected_position(view);
            have.iter_mut().for_each(|h| *h = false);
            let mut next_min = 0u64;
            let mut next_max = 0u64;
            let active = min_mask | max_mask;
            for (bit, fam) in chunk.iter().enumerate() {
                let flag = 1u64 << bit;
                if active & flag == 0 {
                    continue;
                }
                if !have[fam.step] {
                    sums[fam.step] = node_sums(occ, &zy[fam.step], &ze[fam.step]);
                    have[fam.step] = true;
                }
                let s = &sums[fam.step];
                let c = fam.coef;

                if !matches!(pos, Some(p) if p < fam.excluded) {
                    stats.constraints_evaluated += 1;
                    let num = fam.base_y + c * s.ty;
                    let den = fam.base_eta + c * s.te;
                    if num < -feas_tol {
                        failure = Some(Error::InfeasibleObservation {
                            constraint: alloc::format!(
                                "family {} against {:?}",
                                offset + bit,
                                tree.to_key(view)
                            ),
                            slack: num,
                        });
                        return Visit::Stop;
                    }
                    if den.abs() > fam.parallel_tol && den.abs() > 1e-300 {
                        let ratio = -num / den;
                        if den > 0.0 {
                            if min_mask & flag != 0 && ratio > theta_min {
                                theta_min = ratio;
                                argmin = Some(ConstraintId {
                                    family: offset + bit,
                                    against: tree.to_key(view),
                                });
                            }
                        } else if max_mask & flag != 0 && ratio < theta_max {
                            theta_max = ratio;
                            argmax = Some(ConstraintId {
                                family: offset + bit,
                                against: tree.to_key(view),
                            });
                        }
                    }
                }

                if opts.no_prune {
                    next_min |= min_mask & flag;
                    next_max |= max_mask & flag;
                    continue;
                }
                // Brackets over every superset in the subtree.
                let (num_lo, den_lo, den_hi) = if c > 0.0 {
                    (
                        fam.base_y + s.ylo,
                        fam.base_eta + s.elo,
                        fam.base_eta + s.ehi,
                    )
                } else {
                    (
                        fam.base_y - s.yhi,
                        fam.base_eta - s.ehi,
                        fam.base_eta - s.elo,
                    )
                };
                if min_mask & flag != 0 {
                    let skip = den_hi <= fam.parallel_tol
                        || (num_lo >= 0.0
                            && -num_lo / den_hi
                                <= theta_min - PRUNE_MARGIN * (1.0 + theta_min.abs()));
                    if !skip {
                        next_min |= flag;
                    }
                }
                if max_mask & flag != 0 {
                    let skip = den_lo >= -fam.parallel_tol
                        || (num_lo >= 0.0
                            && -num_lo / den_lo
                                >= theta_max + PRUNE_MARGIN * (1.0 + theta_max.abs()));
                    if !skip {
                        next_max |= flag;
                    }
                }
            }
            if next_min == 0 && next_max == 0 {
                Visit::Prune
            } else {
                Visit::Descend((next_min, next_max))
            }
        });
        stats.traversal.merge(&t);
        if let Some(err) = failure.take() {
            return Err(err);
        }
    }

    Ok((
        TruncationInterval::from_thetas(q, theta_min, theta_max, argmin, argmax),
        stats,
    ))
}

/// Reference computation over an explicit constraint list, no pruning.
pub fn oracle_interval<K: Clone>(halfspaces: &[HalfSpace<K>], q: &LineQuery) -> TruncationInterval<K> {
    let mut theta_min = f64::NEG_INFINITY;
    let mut theta_max = f64::INFINITY;
    let mut argmin = None;
    let mut argmax = None;
    let eta_l1: f64 = q.eta().iter().map(|v| v.abs()).sum();
    for h in halfspaces {
        let mut num = 0.0;
        let mut den = 0.0;
        let mut mag = 0.0;
        let mut a_max = 0.0f64;
        for ((a, y), e) in h.a.iter().zip(q.y()).zip(q.eta()) {
            num += a * y;
            den += a * e;
            mag += (a * e).abs();
            a_max = a_max.max(a.abs());
        }
        if den.abs() <= PARALLEL_TOLERANCE * (mag + a_max * eta_l1) || den.abs() <= 1e-300 {
            continue;
        }
        let ratio = -num / den;
        let id = || ConstraintId {
            family: h.family,
            against: h.against.clone(),
        };
        if den > 0.0 {
            if ratio > theta_min {
                theta_min = ratio;
                argmin = Some(id());
            }
        } else if ratio < theta_max {
            theta_max = ratio;
            argmax = Some(id());
        }
    }
    TruncationInterval::from_thetas(q, theta_min, theta_max, argmin, argmax)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{DatabaseOptions, TransactionDatabase};
    use crate::event::{materialize, DEFAULT_MATERIALIZE_CAP};
    use crate::miner::{mine_sequential, mine_top_k_positive};
    use crate::tree::ItemsetTree;

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

    #[test]
    fn toy_interval() {
        let db = toy();
        let tree = ItemsetTree::new(&db, 2).unwrap();
        let res = mine_top_k_positive(&tree, db.y(), 1).unwrap();
        let spec = EventSpec::from_discovery(&res);
        let q = LineQuery::for_occurrence(db.y(), &res.selected[0].occurrence).unwrap();
        let (iv, _) = search_interval(&tree, &spec, &q, SearchOptions::default()).unwrap();
        assert!((iv.theta_min + 1.8).abs() < 1e-12);
        assert_eq!(iv.theta_max, f64::INFINITY);
        assert!(iv.lower.abs() < 1e-12);
        assert_eq!(iv.upper, f64::INFINITY);
        assert_eq!(iv.argmin.as_ref().unwrap().against.items(), [0, 1]);

        let hs = materialize(&tree, &spec, DEFAULT_MATERIALIZE_CAP).unwrap();
        let oracle = oracle_interval(&hs, &q);
        assert_eq!(oracle.theta_min, iv.theta_min);
        assert_eq!(oracle.theta_max, iv.theta_max);
    }

    #[test]
    fn oracle_single_constraint() {
        let q = LineQuery::new(vec![0.0, 1.0], vec![0.0, 1.0]).unwrap();
        let hs = [HalfSpace {
            a: vec![0.0, 1.0],
            family: 0,
            against: (),
        }];
        let iv = oracle_interval(&hs, &q);
        assert_eq!(iv.theta_min, -1.0);
        assert_eq!(iv.theta_max, f64::INFINITY);
    }

    #[test]
    fn oracle_ignores_parallel() {
        let q = LineQuery::new(vec![1.0, 1.0], vec![1.0, 0.0]).unwrap();
        let hs = [HalfSpace {
            a: vec![0.0, 1.0],
            family: 0,
            against: (),
        }];
        let iv = oracle_interval(&hs, &q);
        assert_eq!(iv.theta_min, f64::NEG_INFINITY);
        assert_eq!(iv.theta_max, f64::INFINITY);
        assert_eq!(iv.lower, f64::NEG_INFINITY);
    }

    #[test]
    fn empty_event_is_unbounded() {
        let db = toy();
        let tree = ItemsetTree::new(&db, 2).unwrap();
        let res = mine_top_k_positive(&tree, db.y(), 3).unwrap();
        let spec = EventSpec::from_discovery(&res);
        let q = LineQuery::for_occurrence(db.y(), &res.selected[0].occurrence).unwrap();
        let (iv, _) = search_interval(&tree, &spec, &q, SearchOptions::default()).unwrap();
        assert_eq!((iv.lower, iv.upper), (f64::NEG_INFINITY, f64::INFINITY));
    }

    #[test]
    fn infeasible_observation_is_reported() {
        let db = toy();
        let tree = ItemsetTree::new(&db, 2).unwrap();
        let res = mine_top_k_positive(&tree, db.y(), 1).unwrap();
        let spec = EventSpec::from_discovery(&res);
        let q = LineQuery::new(vec![1.8, -1.5], vec![0.0, 1.0]).unwrap();
        assert!(matches!(
            search_interval(&tree, &spec, &q, SearchOptions::default()),
            Err(Error::InfeasibleObservation { .. })
        ));
    }

    #[test]
    fn abort_is_honoured() {
        let rows: Vec<Vec<u32>> = (0..8).map(|i| (0..20).filter(|j| (i + j) % 3 != 0).collect()).collect();
        let y = vec![0.5, -1.0, 2.0, 0.1, -0.3, 0.7, -1.2, 0.9];
        let db = TransactionDatabase::new(rows, y, DatabaseOptions::default()).unwrap();
        let tree = ItemsetTree::new(&db, 4).unwrap();
        let res = mine_top_k_positive(&tree, db.y(), 2).unwrap();
        let spec = EventSpec::from_discovery(&res);
        let q = LineQuery::for_occurrence(db.y(), &res.selected[0].occurrence).unwrap();
        let always = || true;
        let opts = SearchOptions {
            no_prune: true,
            abort: Some(&always),
        };
        assert_eq!(search_interval(&tree, &spec, &q, opts).unwrap_err(), Error::Aborted);
    }

    #[test]
    fn single_column_line_query() {
        let db = TransactionDatabase::new(
            vec![vec![0], vec![0], vec![]],
            vec![1.0, 2.0, 3.0],
            DatabaseOptions {
                center: false,
                ..Default::default()
            },
        )
        .unwrap();
        let tree = ItemsetTree::new(&db, 1).unwrap();
        let res = mine_sequential(&tree, db.y(), 1).unwrap();
        let q = sequential_line_query(&res, 1, db.y()).unwrap();
        for (a, b) in q.eta().iter().zip([0.5, 0.5, 0.0]) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!((q.statistic() - 1.5).abs() < 1e-12);
        assert!(sequential_line_query(&res, 2, db.y()).is_err());
    }
}
