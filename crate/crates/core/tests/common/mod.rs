//! Independent reference machinery for the integration tests: brute-force
//! pattern enumeration, dense occurrence vectors and nalgebra least squares.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use selpat_core::dataset::DatabaseOptions;
use selpat_core::{Pattern, TransactionDatabase};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_db(rng: &mut ChaCha8Rng, n: usize, d: usize, density: f64) -> TransactionDatabase {
    let rows: Vec<Vec<u32>> = (0..n)
        .map(|_| (0..d as u32).filter(|_| rng.random::<f64>() < density).collect())
        .collect();
    let y: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
    TransactionDatabase::new(
        rows,
        y,
        DatabaseOptions {
            items: Some(d),
            ..Default::default()
        },
    )
    .unwrap()
}

/// All itemsets of size 1..=r over 0..d, by recursive combination.
pub fn all_patterns(d: usize, r: usize) -> Vec<Vec<u32>> {
    fn rec(start: u32, d: u32, r: usize, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        for i in start..d {
            cur.push(i);
            out.push(cur.clone());
            if cur.len() < r {
                rec(i + 1, d, r, cur, out);
            }
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, d as u32, r, &mut Vec::new(), &mut out);
    out
}

/// Dense occurrence by direct membership checks on the rows.
pub fn dense_occ(db: &TransactionDatabase, items: &[u32]) -> Vec<f64> {
    db.rows()
        .iter()
        .map(|row| {
            if items.iter().all(|i| row.contains(i)) {
                1.0
            } else {
                0.0
            }
        })
        .collect()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn pat(items: &[u32]) -> Pattern {
    Pattern::new(items.to_vec()).unwrap()
}

/// `Γ⁺` via SVD.
pub fn pinv(cols: &[Vec<f64>], n: usize) -> DMatrix<f64> {
    let g = DMatrix::from_fn(n, cols.len(), |i, j| cols[j][i]);
    g.pseudo_inverse(1e-10).unwrap()
}

/// `I − Γ Γ⁺` (identity for no columns).
pub fn projector(cols: &[Vec<f64>], n: usize) -> DMatrix<f64> {
    if cols.is_empty() {
        return DMatrix::identity(n, n);
    }
    let g = DMatrix::from_fn(n, cols.len(), |i, j| cols[j][i]);
    DMatrix::identity(n, n) - &g * pinv(cols, n)
}

pub fn apply(m: &DMatrix<f64>, v: &[f64]) -> Vec<f64> {
    (m * DVector::from_column_slice(v)).iter().copied().collect()
}

pub fn close(a: f64, b: f64, rel: f64) -> bool {
    if a == b {
        return true;
    }
    (a - b).abs() <= rel * a.abs().max(b.abs()) + 1e-12
}
