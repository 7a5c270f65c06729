//! Compressed-row matrices assembled from coordinate triplets.

use std::io::Write;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Coordinate-format accumulator. Duplicates are summed on conversion, in
/// insertion order, so the result does not depend on how work was split.
#[derive(Debug, Clone, PartialEq)]
pub struct Triplets<T> {
    nrows: usize,
    ncols: usize,
    entries: Vec<(u32, u32, T)>,
}

impl<T: Scalar> Triplets<T> {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        assert!(nrows <= u32::MAX as usize && ncols <= u32::MAX as usize);
        Self {
            nrows,
            ncols,
            entries: Vec::new(),
        }
    }

    pub fn with_capacity(nrows: usize, ncols: usize, cap: usize) -> Self {
        let mut t = Self::new(nrows, ncols);
        t.entries.reserve(cap);
        t
    }

    #[inline]
    pub fn push(&mut self, i: usize, j: usize, v: T) {
        debug_assert!(i < self.nrows && j < self.ncols);
        self.entries.push((i as u32, j as u32, v));
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn to_csr(&self) -> CsrMatrix<T> {
        Self::merge_to_csr(self.nrows, self.ncols, &[self])
    }

    /// Compresses the concatenation of `parts`, in order.
    pub fn merge_to_csr(nrows: usize, ncols: usize, parts: &[&Triplets<T>]) -> CsrMatrix<T> {
        // stable counting sort by row, then stable sort by column within a row
        let entries = || parts.iter().flat_map(|p| p.entries.iter());
        let total: usize = parts.iter().map(|p| p.len()).sum();
        let mut row_ptr = vec![0usize; nrows + 1];
        for &(i, _, _) in entries() {
            row_ptr[i as usize + 1] += 1;
        }
        for r in 0..nrows {
            row_ptr[r + 1] += row_ptr[r];
        }
        let mut next = row_ptr.clone();
        let mut bucket = vec![(0u32, T::zero()); total];
        for &(i, j, v) in entries() {
            let slot = &mut next[i as usize];
            bucket[*slot] = (j, v);
            *slot += 1;
        }
        let mut out_ptr = Vec::with_capacity(nrows + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        out_ptr.push(0);
        for r in 0..nrows {
            let row = &mut bucket[row_ptr[r]..row_ptr[r + 1]];
            row.sort_by_key(|e| e.0);
            let mut last = None;
            for &(j, v) in row.iter() {
                if last == Some(j) {
                    *vals.last_mut().unwrap() += v;
                } else {
                    cols.push(j as usize);
                    vals.push(v);
                    last = Some(j);
                }
            }
            out_ptr.push(cols.len());
        }
        CsrMatrix {
            nrows,
            ncols,
            row_ptr: out_ptr,
            col_idx: cols,
            values: vals,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix<T> {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<T>,
}

impl<T: Scalar> CsrMatrix<T> {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Triplets::new(nrows, ncols).to_csr()
    }

    pub fn identity(n: usize) -> Self {
        let mut t = Triplets::new(n, n);
        for i in 0..n {
            t.push(i, i, T::one());
        }
        t.to_csr()
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[r.clone()].binary_search(&j) {
            Ok(p) => self.values[r.start + p],
            Err(_) => T::zero(),
        }
    }

    /// All stored entries as `(row, col, value)`, row-major.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        (0..self.nrows).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    pub fn mul_vec(&self, x: &[T]) -> Result<Vec<T>> {
        if x.len() != self.ncols {
            return Err(Error::LengthMismatch {
                expected: self.ncols,
                got: x.len(),
            });
        }
        Ok((0..self.nrows)
            .map(|i| self.row(i).map(|(j, v)| v * x[j]).sum())
            .collect())
    }

    /// `xᵀ M y`.
    pub fn bilinear(&self, x: &[T], y: &[T]) -> Result<T> {
        let my = self.mul_vec(y)?;
        Ok(x.iter().zip(&my).map(|(&a, &b)| a * b).sum())
    }

    pub fn transpose(&self) -> Self {
        let mut t = Triplets::with_capacity(self.ncols, self.nrows, self.nnz());
        for (i, j, v) in self.iter() {
            t.push(j, i, v);
        }
        t.to_csr()
    }

    pub fn scaled(&self, s: T) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= s);
        out
    }

    /// `sum_i s_i M_i` over matrices of equal shape.
    pub fn linear_combination(terms: &[(T, &Self)]) -> Result<Self> {
        let (nrows, ncols) = match terms.first() {
            Some((_, m)) => (m.nrows, m.ncols),
            None => return Err(Error::LengthMismatch { expected: 1, got: 0 }),
        };
        let cap = terms.iter().map(|(_, m)| m.nnz()).sum();
        let mut t = Triplets::with_capacity(nrows, ncols, cap);
        for (s, m) in terms {
            if m.nrows != nrows || m.ncols != ncols {
                return Err(Error::LengthMismatch {
                    expected: nrows * ncols,
                    got: m.nrows * m.ncols,
                });
            }
            for (i, j, v) in m.iter() {
                t.push(i, j, *s * v);
            }
        }
        Ok(t.to_csr())
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    /// Largest `|M_ij - M_ji|`.
    pub fn asymmetry(&self) -> T {
        self.iter()
            .map(|(i, j, v)| (v - self.get(j, i)).abs())
            .fold(T::zero(), T::max)
    }

    pub fn to_dense(&self) -> Vec<Vec<T>> {
        let mut d = vec![vec![T::zero(); self.ncols]; self.nrows];
        for (i, j, v) in self.iter() {
            d[i][j] += v;
        }
        d
    }

    /// Appends the entries, shifted by `(r0, c0)`, to a triplet list.
    pub fn push_into(&self, t: &mut Triplets<T>, r0: usize, c0: usize, scale: T) {
        for (i, j, v) in self.iter() {
            t.push(r0 + i, c0 + j, scale * v);
        }
    }

    pub fn write_matrix_market<W: Write>(&self, out: &mut W) -> Result<()> {
        writeln!(out, "%%MatrixMarket matrix coordinate real general")?;
        writeln!(out, "{} {} {}", self.nrows, self.ncols, self.nnz())?;
        for (i, j, v) in self.iter() {
            writeln!(out, "{} {} {:e}", i + 1, j + 1, v.to_f64_lossy())?;
        }
        Ok(())
    }
}

impl CsrMatrix<f64> {
    pub fn to_faer(&self) -> Result<faer::sparse::SparseColMat<usize, f64>> {
        let trip: Vec<faer::sparse::Triplet<usize, usize, f64>> = self
            .iter()
            .map(|(i, j, v)| faer::sparse::Triplet::new(i, j, v))
            .collect();
        faer::sparse::SparseColMat::try_new_from_triplets(self.nrows, self.ncols, &trip)
            .map_err(|e| Error::Factorization(format!("{e:?}")))
    }
}
