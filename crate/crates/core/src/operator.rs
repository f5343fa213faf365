//! Sparse complex matrices with a deterministic row-major entry order.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };

/// Square sparse matrix stored as sorted `(row, col, value)` triplets.
///
/// Entries are kept in row-major order with no duplicate positions and no
/// stored exact zeros. `hermitian` is only ever set after an exact entrywise
/// check, so a flagged operator always stores both `(r, c, v)` and
/// `(c, r, conj(v))`.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseOperator {
    dim: usize,
    entries: Vec<(usize, usize, C64)>,
    row_ptr: Vec<usize>,
    hermitian: bool,
}

impl SparseOperator {
    /// Assembles from unordered triplets; duplicate positions are summed.
    pub fn from_triplets<I>(dim: usize, triplets: I) -> Self
    where
        I: IntoIterator<Item = (usize, usize, C64)>,
    {
        let mut raw: Vec<(usize, usize, C64)> = triplets.into_iter().collect();
        raw.sort_by_key(|a| (a.0, a.1));
        let mut entries: Vec<(usize, usize, C64)> = Vec::with_capacity(raw.len());
        for (r, c, v) in raw {
            assert!(r < dim && c < dim, "triplet ({r}, {c}) outside dimension {dim}");
            match entries.last_mut() {
                Some(last) if last.0 == r && last.1 == c => last.2 += v,
                _ => entries.push((r, c, v)),
            }
        }
        entries.retain(|e| e.2 != ZERO);
        let row_ptr = build_row_ptr(dim, &entries);
        let mut op = Self {
            dim,
            entries,
            row_ptr,
            hermitian: false,
        };
        op.hermitian = op.is_exactly_hermitian();
        op
    }

    pub fn zeros(dim: usize) -> Self {
        Self::from_triplets(dim, std::iter::empty())
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_diagonal(&vec![1.0; dim])
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        Self::from_triplets(
            diag.len(),
            diag.iter().enumerate().map(|(i, &d)| (i, i, C64::new(d, 0.0))),
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[(usize, usize, C64)] {
        &self.entries
    }

    pub fn hermitian_flag(&self) -> bool {
        self.hermitian
    }

    /// Stored entries of one row.
    pub fn row(&self, r: usize) -> &[(usize, usize, C64)] {
        &self.entries[self.row_ptr[r]..self.row_ptr[r + 1]]
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        let row = self.row(r);
        match row.binary_search_by(|e| e.1.cmp(&c)) {
            Ok(k) => row[k].2,
            Err(_) => ZERO,
        }
    }

    pub fn is_exactly_hermitian(&self) -> bool {
        self.entries.iter().all(|&(r, c, v)| self.get(c, r) == v.conj())
    }

    pub fn is_diagonal(&self) -> bool {
        self.entries.iter().all(|e| e.0 == e.1)
    }

    pub fn diagonal(&self) -> Vec<C64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    pub fn apply_into(&self, x: &[C64], y: &mut [C64]) {
        assert_eq!(x.len(), self.dim);
        assert_eq!(y.len(), self.dim);
        for (r, yr) in y.iter_mut().enumerate() {
            let mut acc = ZERO;
            for &(_, c, v) in self.row(r) {
                acc += v * x[c];
            }
            *yr = acc;
        }
    }

    pub fn apply(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![ZERO; self.dim];
        self.apply_into(x, &mut y);
        y
    }

    pub fn adjoint(&self) -> Self {
        Self::from_triplets(self.dim, self.entries.iter().map(|&(r, c, v)| (c, r, v.conj())))
    }

    pub fn scale(&self, s: C64) -> Self {
        Self::from_triplets(self.dim, self.entries.iter().map(|&(r, c, v)| (r, c, s * v)))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        Ok(Self::from_triplets(
            self.dim,
            self.entries.iter().chain(other.entries.iter()).copied(),
        ))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        Ok(Self::from_triplets(
            self.dim,
            self.entries
                .iter()
                .copied()
                .chain(other.entries.iter().map(|&(r, c, v)| (r, c, -v))),
        ))
    }

    /// Sparse product `self * other`.
    pub fn matmul(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        let mut out = Vec::new();
        for &(r, k, a) in &self.entries {
            for &(_, c, b) in other.row(k) {
                out.push((r, c, a * b));
            }
        }
        Ok(Self::from_triplets(self.dim, out))
    }

    /// `spin ⊗ self` on the doubled space, with index `s * dim + i`.
    pub fn spin_kron(&self, spin: [[C64; 2]; 2]) -> Self {
        let d = self.dim;
        let mut out = Vec::with_capacity(4 * self.entries.len());
        for (s, row) in spin.iter().enumerate() {
            for (t, &w) in row.iter().enumerate() {
                if w == ZERO {
                    continue;
                }
                out.extend(self.entries.iter().map(|&(r, c, v)| (s * d + r, t * d + c, w * v)));
            }
        }
        Self::from_triplets(2 * d, out)
    }

    /// Compression onto the listed basis positions (in the given order).
    pub fn compress(&self, keep: &[usize]) -> Self {
        let mut pos = vec![usize::MAX; self.dim];
        for (k, &i) in keep.iter().enumerate() {
            pos[i] = k;
        }
        Self::from_triplets(
            keep.len(),
            self.entries.iter().filter_map(|&(r, c, v)| {
                let (pr, pc) = (pos[r], pos[c]);
                (pr != usize::MAX && pc != usize::MAX).then_some((pr, pc, v))
            }),
        )
    }

    /// Maximum absolute row sum (the ∞-norm).
    pub fn max_row_sum(&self) -> f64 {
        (0..self.dim)
            .map(|r| self.row(r).iter().map(|e| e.2.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Maximum absolute column sum (the 1-norm).
    pub fn max_col_sum(&self) -> f64 {
        let mut cols = vec![0.0; self.dim];
        for &(_, c, v) in &self.entries {
            cols[c] += v.norm();
        }
        cols.into_iter().fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let mut m = DMatrix::from_element(self.dim, self.dim, ZERO);
        for &(r, c, v) in &self.entries {
            m[(r, c)] = v;
        }
        m
    }

    fn check_dim(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                left: self.dim,
                right: other.dim,
            });
        }
        Ok(())
    }
}

fn build_row_ptr(dim: usize, entries: &[(usize, usize, C64)]) -> Vec<usize> {
    let mut ptr = vec![0usize; dim + 1];
    for e in entries {
        ptr[e.0 + 1] += 1;
    }
    for i in 0..dim {
        ptr[i + 1] += ptr[i];
    }
    ptr
}

pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

pub fn normalize(a: &mut [C64]) -> f64 {
    let n = norm(a);
    if n > 0.0 {
        for x in a.iter_mut() {
            *x /= n;
        }
    }
    n
}

pub const PAULI_X: [[C64; 2]; 2] = [[ZERO, ONE], [ONE, ZERO]];
pub const PAULI_Z: [[C64; 2]; 2] = [[ONE, ZERO], [ZERO, C64 { re: -1.0, im: 0.0 }]];
pub const SPIN_ID: [[C64; 2]; 2] = [[ONE, ZERO], [ZERO, ONE]];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicates_are_summed_and_zeros_dropped() {
        let op =
            SparseOperator::from_triplets(2, vec![(1, 0, c(1.0)), (0, 1, c(2.0)), (0, 1, c(-2.0)), (1, 0, c(0.5))]);
        assert_eq!(op.entries(), &[(1, 0, c(1.5))]);
        assert!(!op.hermitian_flag());
    }

    #[test]
    fn hermitian_flag_requires_exact_conjugates() {
        let h = SparseOperator::from_triplets(2, vec![(0, 1, C64::new(1.0, 2.0)), (1, 0, C64::new(1.0, -2.0))]);
        assert!(h.hermitian_flag());
        let nh = SparseOperator::from_triplets(2, vec![(0, 1, C64::new(1.0, 2.0)), (1, 0, C64::new(1.0, 2.0))]);
        assert!(!nh.hermitian_flag());
    }

    #[test]
    fn spin_kron_places_blocks() {
        let f = SparseOperator::from_diagonal(&[1.0, 3.0]);
        let k = f.spin_kron(PAULI_X);
        assert_eq!(k.dim(), 4);
        assert_eq!(k.get(0, 2), c(1.0));
        assert_eq!(k.get(3, 1), c(3.0));
        assert_eq!(k.get(0, 0), ZERO);
    }

    #[test]
    fn matmul_matches_dense() {
        let a = SparseOperator::from_triplets(3, vec![(0, 1, c(2.0)), (2, 0, C64::new(0.0, 1.0))]);
        let b = SparseOperator::from_triplets(3, vec![(1, 2, c(3.0)), (0, 0, c(-1.0))]);
        let p = a.matmul(&b).unwrap().to_dense();
        let q = a.to_dense() * b.to_dense();
        assert_eq!(p, q);
    }

    #[test]
    fn compress_keeps_order() {
        let a = SparseOperator::from_triplets(3, vec![(0, 2, c(5.0)), (2, 0, c(5.0)), (1, 1, c(7.0))]);
        let s = a.compress(&[2, 0]);
        assert_eq!(s.get(0, 1), c(5.0));
        assert_eq!(s.get(1, 0), c(5.0));
        assert_eq!(s.dim(), 2);
    }
}
