//! Selection events as families of half-spaces `aᵀ y ≥ 0`.
//!
//! Every constraint has the form `a = b + c · M τ_{j'}` where the base
//! vector `b`, the coefficient `c ∈ {−1, +1}` and the symmetric matrix `M`
//! are fixed per family and `τ_{j'}` ranges over the occurrence vectors of
//! the patterns the event compares against:
//!
//! | mode       | base `b`                  | `c` | `M`          | compared patterns |
//! |------------|---------------------------|-----|--------------|-------------------|
//! | positive   | `τ_j`                     | −1  | `I`          | all but `K`       |
//! | signed     | `sgn(s_j) τ_j`            | ±1  | `I`          | all but `K`       |
//! | sequential | `sgn_h P_{h−1} τ_(h)`     | ±1  | `P_{h−1}`    | all but `K_h`     |
//!
//! with `P_h = I − Γ_h Γ_h⁺`. Since `M` is symmetric,
//! `(M τ)ᵀ v = τᵀ (M v)`, so a family only needs `M v` once per query.

use alloc::vec;
use alloc::vec::Vec;
use core::borrow::Borrow;

use crate::bits::OccurrenceVector;
use crate::error::{Error, Result};
use crate::linalg::IncrementalQr;
use crate::miner::{DiscoveryResult, Mode, Sign};
use crate::tree::{Enumerator, Visit};
use crate::Pattern;

/// Default limit on the number of patterns `materialize` will expand.
pub const DEFAULT_MATERIALIZE_CAP: u128 = 1_000_000;

/// One family of constraints sharing a base vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Family {
    /// Index into the selected list of the pattern forming the base.
    pub anchor: usize,
    pub anchor_sign: f64,
    /// Coefficient of the compared pattern.
    pub coef: f64,
    /// Projector prefix: `M = P_step` (`0` is the identity).
    pub step: usize,
    /// Patterns `selected[..excluded]` are not compared against.
    pub excluded: usize,
}

#[derive(Debug, Clone)]
pub struct HalfSpace<K = Pattern> {
    pub a: Vec<f64>,
    pub family: usize,
    pub against: K,
}

impl<K> HalfSpace<K> {
    pub fn eval(&self, y: &[f64]) -> f64 {
        self.a.iter().zip(y).map(|(a, v)| a * v).sum()
    }
}

/// The selection event of one discovery run.
#[derive(Debug, Clone)]
pub struct EventSpec<K = Pattern> {
    pub mode: Mode,
    pub selected: Vec<K>,
    pub occurrences: Vec<OccurrenceVector>,
    pub signs: Vec<Sign>,
    pub families: Vec<Family>,
    /// Factorization providing the projectors in sequential mode.
    pub projector: Option<IncrementalQr>,
}

impl<K: Clone + Ord> EventSpec<K> {
    pub fn from_discovery(discovery: &DiscoveryResult<K>) -> Self {
        let k = discovery.selected.len();
        let mut families = Vec::new();
        for (j, s) in discovery.selected.iter().enumerate() {
            match discovery.mode {
                Mode::Positive => families.push(Family {
                    anchor: j,
                    anchor_sign: 1.0,
                    coef: -1.0,
                    step: 0,
                    excluded: k,
                }),
                Mode::Signed => {
                    for coef in [1.0, -1.0] {
                        families.push(Family {
                            anchor: j,
                            anchor_sign: s.sign.as_f64(),
                            coef,
                            step: 0,
                            excluded: k,
                        });
                    }
                }
                Mode::Sequential => {
                    for coef in [1.0, -1.0] {
                        families.push(Family {
                            anchor: j,
                            anchor_sign: s.sign.as_f64(),
                            coef,
                            step: j,
                            excluded: j + 1,
                        });
                    }
                }
            }
        }
        Self {
            mode: discovery.mode,
            selected: discovery.selected.iter().map(|s| s.pattern.clone()).collect(),
            occurrences: discovery
                .selected
                .iter()
                .map(|s| s.occurrence.clone())
                .collect(),
            signs: discovery.selected.iter().map(|s| s.sign).collect(),
            families,
            projector: discovery.sequential.as_ref().map(|f| f.qr.clone()),
        }
    }

    pub fn k(&self) -> usize {
        self.selected.len()
    }

    /// Number of distinct projectors used by the families.
    pub fn steps(&self) -> usize {
        match self.mode {
            Mode::Sequential => self.k(),
            _ => 1,
        }
    }

    /// `P_s v` for every step `s` used by the families.
    pub fn project(&self, v: &[f64]) -> Vec<Vec<f64>> {
        match (&self.projector, self.mode) {
            (Some(qr), Mode::Sequential) => {
                (0..self.k()).map(|s| qr.projected_prefix(s, v)).collect()
            }
            _ => vec![v.to_vec()],
        }
    }

    /// `bᵀ v` given `projected = self.project(v)`, summed the same way as
    /// the per-node terms so that duplicate patterns cancel exactly.
    pub fn base_dot(&self, family: &Family, projected: &[Vec<f64>]) -> f64 {
        family.anchor_sign * self.occurrences[family.anchor].dot(&projected[family.step])
    }

    /// Position of `view` in the selected list, if it was selected.
    pub fn selected_position<V: ?Sized + Ord>(&self, view: &V) -> Option<usize>
    where
        K: Borrow<V>,
    {
        self.selected.iter().position(|p| p.borrow() == view)
    }

    /// Dense constraint vector of `family` against occurrence `tau`.
    pub fn constraint_vector(&self, family: &Family, tau: &OccurrenceVector) -> Vec<f64> {
        let dense_anchor = self.occurrences[family.anchor].to_dense();
        let dense_tau = tau.to_dense();
        let (b, m) = match (&self.projector, self.mode) {
            (Some(qr), Mode::Sequential) => (
                qr.projected_prefix(family.step, &dense_anchor),
                qr.projected_prefix(family.step, &dense_tau),
            ),
            _ => (dense_anchor, dense_tau),
        };
        b.iter()
            .zip(&m)
            .map(|(bi, mi)| family.anchor_sign * bi + family.coef * mi)
            .collect()
    }
}

/// Expands the full constraint family. Only meant for small pattern spaces.
pub fn materialize<E: Enumerator>(
    tree: &E,
    spec: &EventSpec<E::Key>,
    cap: u128,
) -> Result<Vec<HalfSpace<E::Key>>> {
    let patterns = tree.pattern_count();
    if patterns > cap {
        return Err(Error::MaterializationCap { patterns, cap });
    }
    let mut out = Vec::new();
    tree.traverse((), |view, occ, _| {
        let pos = spec.selected_position(view);
        for (fi, fam) in spec.families.iter().enumerate() {
            if matches!(pos, Some(p) if p < fam.excluded) {
                continue;
            }
            let a = spec.constraint_vector(fam, occ);
            if a.iter().all(|v| v.abs() <= VACUOUS_TOLERANCE) {
                continue;
            }
            out.push(HalfSpace {
                a,
                family: fi,
                against: tree.to_key(view),
            });
        }
        Visit::Descend(())
    });
    Ok(out)
}

/// Entries of a constraint vector below this are treated as zero when
/// deciding whether the constraint is vacuous.
pub const VACUOUS_TOLERANCE: f64 = 1e-10;

/// Slack allowed when checking that the observed response satisfies its own
/// event, relative to `1 + ‖y‖₁`.
pub const FEASIBILITY_TOLERANCE: f64 = 1e-9;

/// Whether `y` lies in the event's polyhedron. Stops at the first violation.
pub fn verify_observed<E: Enumerator>(tree: &E, spec: &EventSpec<E::Key>, y: &[f64]) -> bool {
    first_violation(tree, spec, y).is_none()
}

/// The first violated constraint as `(family, pattern, slack)`, if any.
pub fn first_violation<E: Enumerator>(
    tree: &E,
    spec: &EventSpec<E::Key>,
    y: &[f64],
) -> Option<(usize, E::Key, f64)> {
    let tol = FEASIBILITY_TOLERANCE * (1.0 + y.iter().map(|v| v.abs()).sum::<f64>());
    let projected = spec.project(y);
    let bases: Vec<f64> = spec
        .families
        .iter()
        .map(|f| spec.base_dot(f, &projected))
        .collect();
    let mut found = None;
    tree.traverse((), |view, occ, _| {
        let pos = spec.selected_position(view);
        let dots: Vec<f64> = projected.iter().map(|z| occ.dot(z)).collect();
        for (fi, fam) in spec.families.iter().enumerate() {
            if matches!(pos, Some(p) if p < fam.excluded) {
                continue;
            }
            let slack = bases[fi] + fam.coef * dots[fam.step];
            if slack < -tol {
                found = Some((fi, tree.to_key(view), slack));
                return Visit::Stop;
            }
        }
        Visit::Descend(())
    });
    found
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{DatabaseOptions, TransactionDatabase};
    use crate::miner::{mine_top_k_positive, mine_top_k_signed};
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

    fn sorted(mut v: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v
    }

    #[test]
    fn toy_positive_constraints() {
        let db = toy();
        let tree = ItemsetTree::new(&db, 2).unwrap();
        let res = mine_top_k_positive(&tree, db.y(), 1).unwrap();
        let spec = EventSpec::from_discovery(&res);
        let hs = materialize(&tree, &spec, DEFAULT_MATERIALIZE_CAP).unwrap();
        let got = sorted(hs.into_iter().map(|h| h.a).collect());
        // y2 − y1 ≥ 0 (against {0}) and y2 ≥ 0 (against {0,1}).
        assert_eq!(got, sorted(vec![vec![-1.0, 1.0], vec![0.0, 1.0]]));
        assert!(verify_observed(&tree, &spec, db.y()));
    }

    #[test]
    fn toy_signed_constraints() {
        let db = toy();
        let tree = ItemsetTree::new(&db, 2).unwrap();
        let res = mine_top_k_signed(&tree, db.y(), 1).unwrap();
        let spec = EventSpec::from_discovery(&res);
        let hs = materialize(&tree, &spec, DEFAULT_MATERIALIZE_CAP).unwrap();
        let got = sorted(hs.into_iter().map(|h| h.a).collect());
        assert_eq!(
            got,
            sorted(vec![
                vec![1.0, 1.0],
                vec![-1.0, 1.0],
                vec![0.0, 1.0],
                vec![0.0, 1.0]
            ])
        );
    }

    #[test]
    fn all_selected_is_empty() {
        let db = toy();
        let tree = ItemsetTree::new(&db, 2).unwrap();
        let res = mine_top_k_positive(&tree, db.y(), 3).unwrap();
        let spec = EventSpec::from_discovery(&res);
        assert!(materialize(&tree, &spec, DEFAULT_MATERIALIZE_CAP)
            .unwrap()
            .is_empty());
        assert!(verify_observed(&tree, &spec, db.y()));
    }

    #[test]
    fn cap_refuses() {
        let db = toy();
        let tree = ItemsetTree::new(&db, 2).unwrap();
        let res = mine_top_k_positive(&tree, db.y(), 1).unwrap();
        let spec = EventSpec::from_discovery(&res);
        assert!(matches!(
            materialize(&tree, &spec, 2),
            Err(Error::MaterializationCap { patterns: 3, cap: 2 })
        ));
    }

    #[test]
    fn other_response_violates() {
        let db = toy();
        let tree = ItemsetTree::new(&db, 2).unwrap();
        let res = mine_top_k_positive(&tree, db.y(), 1).unwrap();
        let spec = EventSpec::from_discovery(&res);
        assert!(!verify_observed(&tree, &spec, &[1.8, -1.5]));
    }
}
