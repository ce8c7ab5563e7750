//! Incremental orthogonal factorization for the sequential mode.
//!
//! Columns are appended one at a time and orthogonalized against the
//! current basis with classical Gram-Schmidt run twice, so that
//! `Γ = Q C` with `Q` (n × rank) orthonormal and `C` (rank × k) holding the
//! coordinates of each column. Bases are nested: the first `rank(h)`
//! vectors of `Q` span the first `h` columns.

use alloc::vec;
use alloc::vec::Vec;

/// Relative residual norm below which an appended column counts as
/// dependent on the existing ones.
pub const RANK_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Default)]
pub struct IncrementalQr {
    n: usize,
    basis: Vec<Vec<f64>>,
    /// Column `j` in basis coordinates; length = rank after inserting it.
    coords: Vec<Vec<f64>>,
    rank_after: Vec<usize>,
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn norm(a: &[f64]) -> f64 {
    libm::sqrt(dot(a, a))
}

impl IncrementalQr {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            ..Default::default()
        }
    }

    pub fn rows(&self) -> usize {
        self.n
    }

    pub fn columns(&self) -> usize {
        self.coords.len()
    }

    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    pub fn is_full_rank(&self) -> bool {
        self.rank() == self.columns()
    }

    /// Rank of the first `h` columns.
    pub fn rank_of_prefix(&self, h: usize) -> usize {
        if h == 0 {
            0
        } else {
            self.rank_after[h - 1]
        }
    }

    pub fn basis(&self) -> &[Vec<f64>] {
        &self.basis
    }

    /// Residual of `v` after removing its component in the span of `basis`.
    /// Also returns the removed coordinates.
    fn orthogonalize(basis: &[Vec<f64>], v: &mut [f64]) -> Vec<f64> {
        let mut coeff = vec![0.0; basis.len()];
        for _ in 0..2 {
            for (c, q) in coeff.iter_mut().zip(basis) {
                let proj = dot(q, v);
                *c += proj;
                for (vi, qi) in v.iter_mut().zip(q) {
                    *vi -= proj * qi;
                }
            }
        }
        coeff
    }

    /// Appends a column; returns `false` when it is (numerically) in the
    /// span of the previous ones.
    pub fn push(&mut self, column: &[f64]) -> bool {
        assert_eq!(column.len(), self.n);
        let scale = norm(column);
        let mut w = column.to_vec();
        let mut coeff = Self::orthogonalize(&self.basis, &mut w);
        let resid = norm(&w);
        let independent = scale > 0.0 && resid > RANK_TOLERANCE * scale;
        if independent {
            for wi in &mut w {
                *wi /= resid;
            }
            self.basis.push(w);
            coeff.push(resid);
        }
        self.coords.push(coeff);
        self.rank_after.push(self.basis.len());
        independent
    }

    /// Applies `P = I − Q_h Q_hᵀ` in place, where `Q_h` spans the first
    /// `h` columns.
    pub fn project_out_prefix(&self, h: usize, v: &mut [f64]) {
        let r = self.rank_of_prefix(h);
        Self::orthogonalize(&self.basis[..r], v);
    }

    pub fn projected_prefix(&self, h: usize, v: &[f64]) -> Vec<f64> {
        let mut out = v.to_vec();
        self.project_out_prefix(h, &mut out);
        out
    }

    /// Rows of the pseudo-inverse `Γ⁺` (k vectors of length n).
    ///
    /// With dependent columns this is the minimum-norm pseudo-inverse,
    /// computed as `Γ⁺ = C⁺ Qᵀ` with `C⁺` taken from a QR factorization of
    /// `Cᵀ`.
    pub fn pinv_rows(&self) -> Vec<Vec<f64>> {
        let k = self.columns();
        let r = self.rank();
        // C as r × k dense, row-major.
        let mut c = vec![vec![0.0; k]; r];
        for (j, col) in self.coords.iter().enumerate() {
            for (m, &v) in col.iter().enumerate() {
                c[m][j] = v;
            }
        }

        // Each row of Γ⁺ is xᵀ Qᵀ for some x in R^r; collect those x first.
        let coeffs: Vec<Vec<f64>> = if r == k {
            // C is upper triangular and invertible: row j of C⁻¹ solves Cᵀ x = e_j.
            (0..k)
                .map(|j| {
                    let mut x = vec![0.0; k];
                    for i in 0..k {
                        let rhs = if i == j { 1.0 } else { 0.0 };
                        let s: f64 = (0..i).map(|m| c[m][i] * x[m]).sum();
                        x[i] = (rhs - s) / c[i][i];
                    }
                    x
                })
                .collect()
        } else {
            // Cᵀ = Q2 R2 (k × r, r × r); C⁺ = Q2 R2⁻ᵀ, so row j is R2⁻¹ Q2[j,:].
            let ct_cols: Vec<Vec<f64>> = c.clone();
            let mut q2: Vec<Vec<f64>> = Vec::with_capacity(r);
            let mut r2 = vec![vec![0.0; r]; r];
            for (m, col) in ct_cols.iter().enumerate() {
                let mut w = col.clone();
                let coeff = Self::orthogonalize(&q2, &mut w);
                let nrm = norm(&w);
                for (i, &cv) in coeff.iter().enumerate() {
                    r2[i][m] = cv;
                }
                r2[m][m] = nrm;
                for wi in &mut w {
                    *wi /= nrm;
                }
                q2.push(w);
            }
            (0..k)
                .map(|j| {
                    let u: Vec<f64> = (0..r).map(|m| q2[m][j]).collect();
                    let mut x = vec![0.0; r];
                    for i in (0..r).rev() {
                        let s: f64 = (i + 1..r).map(|m| r2[i][m] * x[m]).sum();
                        x[i] = (u[i] - s) / r2[i][i];
                    }
                    x
                })
                .collect()
        };

        coeffs
            .iter()
            .map(|x| {
                let mut row = vec![0.0; self.n];
                for (q, &xm) in self.basis.iter().zip(x) {
                    for (ri, qi) in row.iter_mut().zip(q) {
                        *ri += xm * qi;
                    }
                }
                row
            })
            .collect()
    }

    /// Least-squares coefficients `Γ⁺ y`.
    pub fn coefficients(&self, y: &[f64]) -> Vec<f64> {
        self.pinv_rows().iter().map(|row| dot(row, y)).collect()
    }
}
