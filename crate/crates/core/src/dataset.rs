//! Transaction databases, patterns and their occurrence vectors.

use alloc::format;
use alloc::vec::Vec;
use core::fmt;

use crate::bits::OccurrenceVector;
use crate::error::{Error, Result};

/// A non-empty itemset in canonical (strictly increasing) form.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(try_from = "Vec<u32>", into = "Vec<u32>"))]
pub struct Pattern(Vec<u32>);

impl Pattern {
    pub fn new(items: Vec<u32>) -> Result<Self> {
        if items.is_empty() {
            return Err(Error::InvalidPattern("empty itemset".into()));
        }
        if items.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidPattern(format!(
                "items {items:?} are not strictly increasing"
            )));
        }
        Ok(Self(items))
    }

    pub fn items(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_subset_of(&self, other: &Pattern) -> bool {
        is_sorted_subset(&self.0, &other.0)
    }
}

impl TryFrom<Vec<u32>> for Pattern {
    type Error = Error;

    fn try_from(items: Vec<u32>) -> Result<Self> {
        Pattern::new(items)
    }
}

impl From<Pattern> for Vec<u32> {
    fn from(p: Pattern) -> Self {
        p.0
    }
}

impl core::borrow::Borrow<[u32]> for Pattern {
    fn borrow(&self) -> &[u32] {
        &self.0
    }
}

impl fmt::Debug for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, item) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{item}")?;
        }
        f.write_str("}")
    }
}

/// Both slices strictly increasing.
pub(crate) fn is_sorted_subset(small: &[u32], big: &[u32]) -> bool {
    let mut it = big.iter();
    'outer: for &x in small {
        for &b in it.by_ref() {
            if b == x {
                continue 'outer;
            }
            if b > x {
                return false;
            }
        }
        return false;
    }
    true
}

/// How the noise level was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum SigmaSource {
    Known,
    Estimated,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Sigma {
    Known(f64),
    /// Sample standard deviation of the (centered) responses.
    Sample,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DatabaseOptions {
    /// Item universe size; inferred as `max id + 1` when `None`.
    pub items: Option<usize>,
    pub sigma: Sigma,
    pub center: bool,
}

impl Default for DatabaseOptions {
    fn default() -> Self {
        Self {
            items: None,
            sigma: Sigma::Known(1.0),
            center: true,
        }
    }
}

/// `n` transactions over `d` items with one real response each.
///
/// Immutable once built. Per-item occurrence columns are kept alongside the
/// rows so that pattern occurrences are computed by AND-ing bit vectors.
#[derive(Debug, Clone)]
pub struct TransactionDatabase {
    rows: Vec<Vec<u32>>,
    y: Vec<f64>,
    d: usize,
    sigma: f64,
    sigma_source: SigmaSource,
    centered: bool,
    columns: Vec<OccurrenceVector>,
}

impl TransactionDatabase {
    pub fn new(rows: Vec<Vec<u32>>, mut y: Vec<f64>, opts: DatabaseOptions) -> Result<Self> {
        let n = rows.len();
        if n != y.len() {
            return Err(Error::InvalidDatabase(format!(
                "{n} transactions but {} responses",
                y.len()
            )));
        }
        if n < 2 {
            return Err(Error::InvalidDatabase(format!(
                "need at least 2 transactions, got {n}"
            )));
        }
        if let Some(i) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidDatabase(format!(
                "response {i} is not finite"
            )));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidDatabase(format!(
                    "transaction {i} is not strictly increasing: {row:?}"
                )));
            }
        }
        let inferred = rows
            .iter()
            .filter_map(|r| r.last())
            .map(|&m| m as usize + 1)
            .max()
            .unwrap_or(0);
        let d = match opts.items {
            Some(d) if d < inferred => {
                return Err(Error::InvalidDatabase(format!(
                    "item id {} out of range for d = {d}",
                    inferred - 1
                )))
            }
            Some(d) => d,
            None => inferred,
        };

        if opts.center {
            let mean = y.iter().sum::<f64>() / n as f64;
            for v in &mut y {
                *v -= mean;
            }
        }

        let (sigma, sigma_source) = match opts.sigma {
            Sigma::Known(s) => (s, SigmaSource::Known),
            Sigma::Sample => (sample_sd(&y), SigmaSource::Estimated),
        };
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidDatabase(format!(
                "sigma must be positive and finite, got {sigma}"
            )));
        }

        let mut columns = alloc::vec![OccurrenceVector::zeros(n); d];
        for (i, row) in rows.iter().enumerate() {
            for &item in row {
                columns[item as usize].set(i);
            }
        }

        Ok(Self {
            rows,
            y,
            d,
            sigma,
            sigma_source,
            centered: opts.center,
            columns,
        })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.rows.len()
    }

    #[inline]
    pub fn d(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn rows(&self) -> &[Vec<u32>] {
        &self.rows
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn sigma_source(&self) -> SigmaSource {
        self.sigma_source
    }

    pub fn is_centered(&self) -> bool {
        self.centered
    }

    /// Occurrence column of a single item.
    #[inline]
    pub fn item_column(&self, item: usize) -> &OccurrenceVector {
        &self.columns[item]
    }

    pub fn occurrence(&self, pattern: &Pattern) -> OccurrenceVector {
        self.occurrence_of_items(pattern.items())
    }

    /// Occurrence of an arbitrary item list; the empty list occurs everywhere.
    pub fn occurrence_of_items(&self, items: &[u32]) -> OccurrenceVector {
        let mut occ = OccurrenceVector::ones(self.n());
        let mut tmp = OccurrenceVector::zeros(self.n());
        for &item in items {
            if item as usize >= self.d {
                return OccurrenceVector::zeros(self.n());
            }
            tmp.assign_and(&occ, &self.columns[item as usize]);
            core::mem::swap(&mut occ, &mut tmp);
        }
        occ
    }

    /// `s = τᵀ y`.
    pub fn score(&self, occurrence: &OccurrenceVector) -> f64 {
        occurrence.dot(&self.y)
    }

    /// Same transactions and σ with different responses, taken as given.
    pub fn with_responses(&self, y: Vec<f64>) -> Result<Self> {
        if y.len() != self.n() {
            return Err(Error::InvalidDatabase(format!(
                "{} responses for {} transactions",
                y.len(),
                self.n()
            )));
        }
        let mut out = self.clone();
        out.y = y;
        Ok(out)
    }

    /// Sub-database over `indices` (in that order), re-centered when `center`.
    pub fn subset(&self, indices: &[usize], center: bool) -> Result<Self> {
        let rows = indices.iter().map(|&i| self.rows[i].clone()).collect();
        let y = indices.iter().map(|&i| self.y[i]).collect();
        let mut db = Self::new(
            rows,
            y,
            DatabaseOptions {
                items: Some(self.d),
                sigma: Sigma::Known(self.sigma),
                center,
            },
        )?;
        db.sigma_source = self.sigma_source;
        Ok(db)
    }

    /// Number of non-empty itemsets of size at most `r`: `Σ_{ρ=1..r} C(d, ρ)`.
    pub fn pattern_count(&self, r: usize) -> u128 {
        pattern_count(self.d, r)
    }
}

/// `Σ_{ρ=1..r} C(d, ρ)`, saturating at `u128::MAX`.
pub fn pattern_count(d: usize, r: usize) -> u128 {
    let mut total: u128 = 0;
    let mut c: u128 = 1;
    for rho in 1..=r.min(d) {
        c = match c.checked_mul((d - rho + 1) as u128) {
            Some(v) => v / rho as u128,
            None => return u128::MAX,
        };
        total = total.saturating_add(c);
    }
    total
}

fn sample_sd(y: &[f64]) -> f64 {
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    let ss: f64 = y.iter().map(|v| (v - mean) * (v - mean)).sum();
    libm::sqrt(ss / (n - 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn abc() -> TransactionDatabase {
        // A=0, B=1, C=2
        TransactionDatabase::new(
            vec![vec![0, 1, 2], vec![0, 2], vec![1]],
            vec![1.0, 2.0, 3.0],
            DatabaseOptions::default(),
        )
        .unwrap()
    }

    #[test]
    fn occurrence_matches_membership() {
        let db = abc();
        let a = Pattern::new(vec![0]).unwrap();
        let ab = Pattern::new(vec![0, 1]).unwrap();
        assert_eq!(db.occurrence(&a).to_dense(), [1.0, 1.0, 0.0]);
        assert_eq!(db.occurrence(&ab).to_dense(), [1.0, 0.0, 0.0]);
        let big = Pattern::new(vec![0, 1, 2, 7]).unwrap();
        assert!(db.occurrence(&big).is_zero());
    }

    #[test]
    fn toy_centering() {
        let rows = vec![vec![0], vec![1]];
        let db = TransactionDatabase::new(rows.clone(), vec![-1.5, 1.8], DatabaseOptions::default())
            .unwrap();
        assert_eq!(db.n(), 2);
        assert_eq!(db.d(), 2);
        assert!((db.y()[0] + 1.65).abs() < 1e-12 && (db.y()[1] - 1.65).abs() < 1e-12);
        let raw = TransactionDatabase::new(
            rows,
            vec![-1.5, 1.8],
            DatabaseOptions {
                center: false,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(raw.y(), [-1.5, 1.8]);
        let t2 = raw.occurrence(&Pattern::new(vec![1]).unwrap());
        assert_eq!(raw.score(&t2), 1.8);
    }

    #[test]
    fn score_edge_cases() {
        let db = abc();
        assert_eq!(db.score(&OccurrenceVector::zeros(3)), 0.0);
        assert!(db.score(&OccurrenceVector::ones(3)).abs() < 1e-12);
    }

    #[test]
    fn validation_errors() {
        let opts = DatabaseOptions::default();
        assert!(TransactionDatabase::new(vec![vec![0]], vec![1.0], opts).is_err());
        assert!(TransactionDatabase::new(vec![vec![1, 1], vec![]], vec![1.0, 2.0], opts).is_err());
        let small = DatabaseOptions {
            items: Some(2),
            ..opts
        };
        assert!(TransactionDatabase::new(vec![vec![2], vec![]], vec![1.0, 2.0], small).is_err());
        let bad_sigma = DatabaseOptions {
            sigma: Sigma::Known(0.0),
            ..opts
        };
        assert!(TransactionDatabase::new(vec![vec![], vec![]], vec![1.0, 2.0], bad_sigma).is_err());
    }

    #[test]
    fn empty_transactions_allowed() {
        let db = TransactionDatabase::new(vec![vec![], vec![0]], vec![0.0, 1.0], DatabaseOptions::default())
            .unwrap();
        assert_eq!(db.rows()[0].len(), 0);
    }

    #[test]
    fn sample_sigma_is_flagged() {
        let db = TransactionDatabase::new(
            vec![vec![], vec![], vec![]],
            vec![1.0, 2.0, 3.0],
            DatabaseOptions {
                sigma: Sigma::Sample,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(db.sigma_source(), SigmaSource::Estimated);
        assert!((db.sigma() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pattern_counts() {
        assert_eq!(pattern_count(3, 2), 6);
        assert_eq!(pattern_count(8, 3), 8 + 28 + 56);
        assert_eq!(pattern_count(100, 5), 79_375_495);
        assert_eq!(pattern_count(2, 5), 3);
    }

    #[test]
    fn pattern_validation() {
        assert!(Pattern::new(vec![]).is_err());
        assert!(Pattern::new(vec![2, 1]).is_err());
        let p = Pattern::new(vec![1, 3]).unwrap();
        assert!(p.is_subset_of(&Pattern::new(vec![0, 1, 2, 3]).unwrap()));
        assert!(!p.is_subset_of(&Pattern::new(vec![1, 2]).unwrap()));
        assert_eq!(alloc::format!("{p}"), "{1,3}");
    }
}
