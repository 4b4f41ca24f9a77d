//! Compressed-row sparse matrices.

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Weighted sparse matrix in compressed-row layout.
///
/// Entries are sorted by `(row, col)`, contain no duplicates and no stored
/// zeros. The `symmetric` flag is set by constructors that guarantee
/// `(i, j)` and `(j, i)` carry equal weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseMatrix<T> {
    n_rows: usize,
    n_cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<T>,
    symmetric: bool,
}

impl<T: Real> SparseMatrix<T> {
    /// Finalizes coordinate triples. Duplicate coordinates are summed, zero
    /// results are dropped.
    pub fn from_triplets(
        n_rows: usize,
        n_cols: usize,
        mut triplets: Vec<(usize, usize, T)>,
    ) -> Result<Self> {
        for &(r, c, w) in &triplets {
            if r >= n_rows || c >= n_cols {
                return Err(Error::InvalidArgument(format!(
                    "entry ({r}, {c}) outside a {n_rows}x{n_cols} matrix"
                )));
            }
            if !w.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "non-finite weight at ({r}, {c})"
                )));
            }
        }
        triplets.sort_by_key(|t| (t.0, t.1));

        let mut indptr = vec![0usize; n_rows + 1];
        let mut indices = Vec::with_capacity(triplets.len());
        let mut values: Vec<T> = Vec::with_capacity(triplets.len());
        let mut rows = Vec::with_capacity(triplets.len());
        let mut iter = triplets.into_iter().peekable();
        while let Some((r, c, mut w)) = iter.next() {
            while let Some(&(r2, c2, w2)) = iter.peek() {
                if r2 == r && c2 == c {
                    w += w2;
                    iter.next();
                } else {
                    break;
                }
            }
            if w != T::zero() {
                rows.push(r);
                indices.push(c);
                values.push(w);
            }
        }
        for &r in &rows {
            indptr[r + 1] += 1;
        }
        for i in 0..n_rows {
            indptr[i + 1] += indptr[i];
        }
        let mut m = SparseMatrix {
            n_rows,
            n_cols,
            indptr,
            indices,
            values,
            symmetric: false,
        };
        m.symmetric = m.check_symmetric();
        Ok(m)
    }

    /// Builds from already-finalized compressed-row arrays, validating every invariant.
    pub fn from_csr(
        n_rows: usize,
        n_cols: usize,
        indptr: Vec<usize>,
        indices: Vec<usize>,
        values: Vec<T>,
    ) -> Result<Self> {
        if indptr.len() != n_rows + 1 || indptr[0] != 0 || indices.len() != values.len() {
            return Err(Error::format("csr arrays", "inconsistent lengths"));
        }
        if *indptr.last().unwrap() != indices.len() {
            return Err(Error::format("csr arrays", "indptr does not cover indices"));
        }
        for r in 0..n_rows {
            if indptr[r] > indptr[r + 1] {
                return Err(Error::format("csr arrays", "indptr not monotone"));
            }
            let cols = &indices[indptr[r]..indptr[r + 1]];
            if cols.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::format("csr arrays", format!("row {r} unsorted or duplicated")));
            }
            if cols.iter().any(|&c| c >= n_cols) {
                return Err(Error::format("csr arrays", format!("row {r} column out of range")));
            }
        }
        if values.iter().any(|v| !v.is_finite() || *v == T::zero()) {
            return Err(Error::format("csr arrays", "stored weights must be finite and nonzero"));
        }
        let mut m = SparseMatrix {
            n_rows,
            n_cols,
            indptr,
            indices,
            values,
            symmetric: false,
        };
        m.symmetric = m.check_symmetric();
        Ok(m)
    }

    pub fn identity(n: usize) -> Self {
        SparseMatrix {
            n_rows: n,
            n_cols: n,
            indptr: (0..=n).collect(),
            indices: (0..n).collect(),
            values: vec![T::one(); n],
            symmetric: true,
        }
    }

    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        SparseMatrix {
            n_rows,
            n_cols,
            indptr: vec![0; n_rows + 1],
            indices: Vec::new(),
            values: Vec::new(),
            symmetric: n_rows == n_cols,
        }
    }

    /// Dense to sparse, keeping nonzero cells.
    pub fn from_dense(dense: ArrayView2<'_, T>) -> Result<Self> {
        let (n, m) = dense.dim();
        let triplets = dense
            .indexed_iter()
            .filter(|(_, v)| **v != T::zero())
            .map(|((r, c), v)| (r, c, *v))
            .collect();
        Self::from_triplets(n, m, triplets)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.n_rows, self.n_cols)
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn indptr(&self) -> &[usize] {
        &self.indptr
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// `(col, weight)` pairs of one row, ascending by column.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let span = self.indptr[r]..self.indptr[r + 1];
        self.indices[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    pub fn row_degree(&self, r: usize) -> usize {
        self.indptr[r + 1] - self.indptr[r]
    }

    /// All stored entries in `(row, col)` order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        (0..self.n_rows).flat_map(move |r| self.row(r).map(move |(c, w)| (r, c, w)))
    }

    pub fn get(&self, r: usize, c: usize) -> T {
        let span = self.indptr[r]..self.indptr[r + 1];
        match self.indices[span.clone()].binary_search(&c) {
            Ok(k) => self.values[span.start + k],
            Err(_) => T::zero(),
        }
    }

    pub fn contains(&self, r: usize, c: usize) -> bool {
        let span = self.indptr[r]..self.indptr[r + 1];
        self.indices[span].binary_search(&c).is_ok()
    }

    pub fn row_sums(&self) -> Vec<T> {
        (0..self.n_rows)
            .map(|r| self.row(r).fold(T::zero(), |acc, (_, w)| acc + w))
            .collect()
    }

    pub fn transpose(&self) -> Self {
        let triplets = self.triplets().map(|(r, c, w)| (c, r, w)).collect();
        Self::from_triplets(self.n_cols, self.n_rows, triplets)
            .expect("transpose of a valid matrix is valid")
    }

    /// Applies `f` to every stored weight, dropping entries mapped to zero.
    pub fn map_values(&self, f: impl Fn(usize, usize, T) -> T) -> Result<Self> {
        let triplets = self.triplets().map(|(r, c, w)| (r, c, f(r, c, w))).collect();
        Self::from_triplets(self.n_rows, self.n_cols, triplets)
    }

    pub fn to_dense(&self) -> Array2<T> {
        let mut out = Array2::zeros((self.n_rows, self.n_cols));
        for (r, c, w) in self.triplets() {
            out[[r, c]] = w;
        }
        out
    }

    /// Sparse × dense product.
    pub fn mul_dense(&self, rhs: ArrayView2<'_, T>) -> Result<Array2<T>> {
        if rhs.nrows() != self.n_cols {
            return Err(Error::shape(
                "sparse x dense product",
                format!("{} rhs rows", self.n_cols),
                format!("{} rhs rows", rhs.nrows()),
            ));
        }
        let mut out = Array2::zeros((self.n_rows, rhs.ncols()));
        for (r, mut out_row) in out.rows_mut().into_iter().enumerate() {
            for (c, w) in self.row(r) {
                out_row.scaled_add(w, &rhs.row(c));
            }
        }
        Ok(out)
    }

    /// `selfᵀ × rhs` without materializing the transpose.
    pub fn transpose_mul_dense(&self, rhs: ArrayView2<'_, T>) -> Result<Array2<T>> {
        if self.symmetric {
            return self.mul_dense(rhs);
        }
        if rhs.nrows() != self.n_rows {
            return Err(Error::shape(
                "transposed sparse x dense product",
                format!("{} rhs rows", self.n_rows),
                format!("{} rhs rows", rhs.nrows()),
            ));
        }
        let mut out = Array2::zeros((self.n_cols, rhs.ncols()));
        for r in 0..self.n_rows {
            let src = rhs.row(r);
            for (c, w) in self.row(r) {
                out.row_mut(c).scaled_add(w, &src);
            }
        }
        Ok(out)
    }

    fn check_symmetric(&self) -> bool {
        if self.n_rows != self.n_cols {
            return false;
        }
        self.triplets().all(|(r, c, w)| {
            let span = self.indptr[c]..self.indptr[c + 1];
            match self.indices[span.clone()].binary_search(&r) {
                Ok(k) => self.values[span.start + k] == w,
                Err(_) => false,
            }
        })
    }
}
