//! Packed occurrence vectors.

use alloc::vec;
use alloc::vec::Vec;

/// Binary indicator over transactions, packed 64 per word.
///
/// Bits past `len` in the last word are always zero.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct OccurrenceVector {
    words: Vec<u64>,
    len: usize,
}

impl core::fmt::Debug for OccurrenceVector {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str("[")?;
        for i in 0..self.len {
            f.write_str(if self.get(i) { "1" } else { "0" })?;
        }
        f.write_str("]")
    }
}

#[inline]
fn word_count(len: usize) -> usize {
    len.div_ceil(64)
}

impl OccurrenceVector {
    pub fn zeros(len: usize) -> Self {
        Self {
            words: vec![0; word_count(len)],
            len,
        }
    }

    pub fn ones(len: usize) -> Self {
        let mut v = Self {
            words: vec![u64::MAX; word_count(len)],
            len,
        };
        v.clear_tail();
        v
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut v = Self::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b {
                v.set(i);
            }
        }
        v
    }

    fn clear_tail(&mut self) {
        let rem = self.len % 64;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn words(&self) -> &[u64] {
        &self.words
    }

    #[inline]
    pub fn set(&mut self, i: usize) {
        debug_assert!(i < self.len);
        self.words[i / 64] |= 1 << (i % 64);
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// Overwrites `self` with `a & b`. All three must have the same length.
    #[inline]
    pub fn assign_and(&mut self, a: &Self, b: &Self) {
        debug_assert!(a.len == b.len && a.len == self.len);
        for ((o, x), y) in self.words.iter_mut().zip(&a.words).zip(&b.words) {
            *o = x & y;
        }
    }

    /// Element-wise `self <= other`.
    pub fn is_subset_of(&self, other: &Self) -> bool {
        self.words
            .iter()
            .zip(&other.words)
            .all(|(a, b)| a & !b == 0)
    }

    /// Indices of set bits in increasing order.
    pub fn iter_ones(&self) -> Ones<'_> {
        Ones {
            words: &self.words,
            idx: 0,
            cur: self.words.first().copied().unwrap_or(0),
        }
    }

    /// `Σ_i τ_i v_i`, summed over set bits in increasing index order.
    #[inline]
    pub fn dot(&self, v: &[f64]) -> f64 {
        debug_assert_eq!(v.len(), self.len);
        let mut acc = 0.0;
        for i in self.iter_ones() {
            acc += v[i];
        }
        acc
    }

    /// Sums of the negative and positive entries of `v` over set bits:
    /// `(Σ_{v_i<0} τ_i v_i, Σ_{v_i>0} τ_i v_i)`.
    #[inline]
    pub fn signed_parts(&self, v: &[f64]) -> (f64, f64) {
        let mut neg = 0.0;
        let mut pos = 0.0;
        for i in self.iter_ones() {
            let x = v[i];
            if x > 0.0 {
                pos += x;
            } else if x < 0.0 {
                neg += x;
            }
        }
        (neg, pos)
    }

    pub fn to_dense(&self) -> Vec<f64> {
        (0..self.len)
            .map(|i| if self.get(i) { 1.0 } else { 0.0 })
            .collect()
    }

    /// Keeps only the positions listed in `rows`, in that order.
    pub fn select_rows(&self, rows: &[usize]) -> Self {
        let mut out = Self::zeros(rows.len());
        for (k, &i) in rows.iter().enumerate() {
            if self.get(i) {
                out.set(k);
            }
        }
        out
    }
}

pub struct Ones<'a> {
    words: &'a [u64],
    idx: usize,
    cur: u64,
}

impl Iterator for Ones<'_> {
    type Item = usize;

    #[inline]
    fn next(&mut self) -> Option<usize> {
        loop {
            if self.cur != 0 {
                let tz = self.cur.trailing_zeros() as usize;
                self.cur &= self.cur - 1;
                return Some(self.idx * 64 + tz);
            }
            self.idx += 1;
            if self.idx >= self.words.len() {
                return None;
            }
            self.cur = self.words[self.idx];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ones_clears_tail() {
        let v = OccurrenceVector::ones(70);
        assert_eq!(v.count_ones(), 70);
        assert_eq!(v.iter_ones().last(), Some(69));
    }

    #[test]
    fn and_and_dot() {
        let a = OccurrenceVector::from_bools(&[true, true, false, true]);
        let b = OccurrenceVector::from_bools(&[true, false, false, true]);
        let mut c = OccurrenceVector::zeros(4);
        c.assign_and(&a, &b);
        assert_eq!(c, b);
        assert!(c.is_subset_of(&a));
        assert!(!a.is_subset_of(&c));
        let y = [1.0, -2.0, 5.0, -0.5];
        assert_eq!(a.dot(&y), -1.5);
        assert_eq!(a.signed_parts(&y), (-2.5, 1.0));
        assert_eq!(OccurrenceVector::zeros(4).dot(&y), 0.0);
    }

    #[test]
    fn select_rows_reorders() {
        let a = OccurrenceVector::from_bools(&[true, false, true]);
        let s = a.select_rows(&[2, 1]);
        assert_eq!(s.to_dense(), [1.0, 0.0]);
    }
}
