//! Set-enumeration tree over itemsets.
//!
//! Every itemset of size `1..=r` is reached exactly once by canonical
//! extension: the children of `p` are `p ∪ {i}` for items `i > max(p)`.
//! A node's canonical subtree therefore only contains supersets of it, so
//! any bound built from the node's occurrence (anti-monotone support) holds
//! for the whole subtree.

use alloc::vec;
use alloc::vec::Vec;
use core::borrow::Borrow;
use core::fmt::Debug;

use crate::bits::OccurrenceVector;
use crate::dataset::{pattern_count, Pattern, TransactionDatabase};
use crate::error::{Error, Result};

/// What to do after visiting a node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Visit<S> {
    /// Explore the children, handing them this state.
    Descend(S),
    /// Skip the subtree below this node.
    Prune,
    /// End the traversal.
    Stop,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TraversalStats {
    pub visited: u64,
    /// Nodes with a non-empty canonical subtree that the callback pruned.
    pub pruned: u64,
    pub stopped: bool,
}

impl TraversalStats {
    pub fn merge(&mut self, other: &TraversalStats) {
        self.visited += other.visited;
        self.pruned += other.pruned;
        self.stopped |= other.stopped;
    }
}

/// A depth-first pattern enumerator with per-subtree pruning.
///
/// Implementations must visit every pattern exactly once when the callback
/// never prunes, and the subtree skipped on [`Visit::Prune`] must contain
/// only patterns whose occurrence vectors are dominated by the pruned
/// node's. The selective-inference search relies on nothing else, so a
/// subgraph enumerator can stand in for [`ItemsetTree`].
pub trait Enumerator {
    /// Borrowed form of a pattern handed to the visitor.
    type View: ?Sized + Ord;
    /// Owned pattern identity.
    type Key: Clone + Ord + Debug + Borrow<Self::View>;

    fn transactions(&self) -> usize;

    fn to_key(&self, view: &Self::View) -> Self::Key;

    fn occurrence(&self, key: &Self::Key) -> OccurrenceVector;

    /// Number of patterns reachable with pruning disabled.
    fn pattern_count(&self) -> u128;

    fn traverse<S, F>(&self, root: S, visit: F) -> TraversalStats
    where
        S: Clone,
        F: FnMut(&Self::View, &OccurrenceVector, &S) -> Visit<S>;
}

/// Canonical itemset tree of depth `r` over a database.
#[derive(Debug, Clone, Copy)]
pub struct ItemsetTree<'a> {
    db: &'a TransactionDatabase,
    max_size: usize,
}

impl<'a> ItemsetTree<'a> {
    pub fn new(db: &'a TransactionDatabase, max_size: usize) -> Result<Self> {
        if max_size == 0 {
            return Err(Error::InvalidArgument(
                "maximum pattern size must be at least 1".into(),
            ));
        }
        Ok(Self { db, max_size })
    }

    pub fn database(&self) -> &'a TransactionDatabase {
        self.db
    }

    pub fn max_size(&self) -> usize {
        self.max_size
    }
}

impl Enumerator for ItemsetTree<'_> {
    type View = [u32];
    type Key = Pattern;

    fn transactions(&self) -> usize {
        self.db.n()
    }

    fn to_key(&self, view: &[u32]) -> Pattern {
        Pattern::new(view.to_vec()).expect("tree nodes are canonical itemsets")
    }

    fn occurrence(&self, key: &Pattern) -> OccurrenceVector {
        self.db.occurrence(key)
    }

    fn pattern_count(&self) -> u128 {
        pattern_count(self.db.d(), self.max_size)
    }

    fn traverse<S, F>(&self, root: S, mut visit: F) -> TraversalStats
    where
        S: Clone,
        F: FnMut(&[u32], &OccurrenceVector, &S) -> Visit<S>,
    {
        let n = self.db.n();
        let d = self.db.d();
        let r = self.max_size.min(d);
        let mut stats = TraversalStats::default();
        if r == 0 {
            return stats;
        }

        // Level ℓ holds the node with ℓ items; level 0 is the empty root.
        let mut occ: Vec<OccurrenceVector> = vec![OccurrenceVector::zeros(n); r + 1];
        occ[0] = OccurrenceVector::ones(n);
        let mut states: Vec<S> = vec![root; r + 1];
        let mut next: Vec<usize> = vec![0; r + 1];
        let mut items: Vec<u32> = Vec::with_capacity(r);
        let mut depth = 0usize;

        loop {
            let item = next[depth];
            if depth == r || item >= d {
                if depth == 0 {
                    break;
                }
                depth -= 1;
                items.pop();
                continue;
            }
            next[depth] = item + 1;

            let (lo, hi) = occ.split_at_mut(depth + 1);
            hi[0].assign_and(&lo[depth], self.db.item_column(item));
            items.push(item as u32);
            stats.visited += 1;

            let has_children = depth + 1 < r && item + 1 < d;
            match visit(&items, &hi[0], &states[depth]) {
                Visit::Descend(s) if has_children => {
                    depth += 1;
                    states[depth] = s;
                    next[depth] = item + 1;
                }
                Visit::Descend(_) => {
                    items.pop();
                }
                Visit::Prune => {
                    if has_children {
                        stats.pruned += 1;
                    }
                    items.pop();
                }
                Visit::Stop => {
                    stats.stopped = true;
                    break;
                }
            }
        }
        stats
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::DatabaseOptions;
    use alloc::vec::Vec;

    fn db_with_items(d: usize) -> TransactionDatabase {
        let rows = vec![(0..d as u32).collect::<Vec<_>>(), Vec::new()];
        TransactionDatabase::new(rows, vec![1.0, -1.0], DatabaseOptions::default()).unwrap()
    }

    fn visited(d: usize, r: usize, prune_at: Option<&[u32]>) -> (Vec<Vec<u32>>, TraversalStats) {
        let db = db_with_items(d);
        let tree = ItemsetTree::new(&db, r).unwrap();
        let mut seen = Vec::new();
        let stats = tree.traverse((), |p, _, _| {
            seen.push(p.to_vec());
            if Some(p) == prune_at {
                Visit::Prune
            } else {
                Visit::Descend(())
            }
        });
        (seen, stats)
    }

    #[test]
    fn d3_r2_full() {
        let (seen, stats) = visited(3, 2, None);
        assert_eq!(
            seen,
            [vec![0], vec![0, 1], vec![0, 2], vec![1], vec![1, 2], vec![2]]
        );
        assert_eq!(stats.visited, 6);
        assert_eq!(stats.pruned, 0);
    }

    #[test]
    fn d3_r2_prune_first() {
        let (seen, stats) = visited(3, 2, Some(&[0]));
        assert_eq!(seen, [vec![0], vec![1], vec![1, 2], vec![2]]);
        assert_eq!(stats.visited, 4);
        assert_eq!(stats.pruned, 1);
    }

    #[test]
    fn stop_ends_early() {
        let db = db_with_items(5);
        let tree = ItemsetTree::new(&db, 3).unwrap();
        let mut count = 0;
        let stats = tree.traverse((), |_, _, _| {
            count += 1;
            if count == 3 {
                Visit::Stop
            } else {
                Visit::Descend(())
            }
        });
        assert!(stats.stopped);
        assert_eq!(stats.visited, 3);
    }

    #[test]
    fn zero_depth_rejected() {
        let db = db_with_items(2);
        assert!(ItemsetTree::new(&db, 0).is_err());
    }

    #[test]
    fn state_flows_to_children() {
        let db = db_with_items(4);
        let tree = ItemsetTree::new(&db, 3).unwrap();
        tree.traverse(0usize, |p, _, depth| {
            assert_eq!(*depth + 1, p.len());
            Visit::Descend(p.len())
        });
    }
}
