//! Symmetric sparse matrices stored as their lower triangle.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// A symmetric matrix in compressed-row form holding entries `(i, j)` with `j <= i`.
///
/// Row `i` lists its column indices in increasing order and always contains the
/// diagonal entry last, so the arrays read column-wise are exactly the upper
/// triangle in compressed-column form.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSymMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseSymMatrix {
    /// Builds the matrix from `(i, j, value)` triplets. Entries above the diagonal are
    /// mirrored below it and duplicates are summed in input order, so the result is
    /// independent of everything except the triplet sequence.
    pub fn from_triplets(n: usize, triplets: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self> {
        let mut entries: Vec<(usize, usize, f64)> = Vec::new();
        for (i, j, v) in triplets {
            if i >= n || j >= n {
                return Err(Error::DimensionMismatch { expected: n, got: i.max(j) + 1 });
            }
            let (r, c) = if j <= i { (i, j) } else { (j, i) };
            entries.push((r, c, v));
        }
        // Stable sort keeps the summation order of duplicates fixed.
        entries.sort_by_key(|&(r, c, _)| (r, c));

        let mut row_ptr = vec![0usize; n + 1];
        let mut col_idx = Vec::with_capacity(entries.len() + n);
        let mut values = Vec::with_capacity(entries.len() + n);
        let mut k = 0;
        for row in 0..n {
            while k < entries.len() && entries[k].0 == row {
                let (_, c, v) = entries[k];
                if col_idx.len() > row_ptr[row] && *col_idx.last().unwrap() == c {
                    *values.last_mut().unwrap() += v;
                } else {
                    col_idx.push(c);
                    values.push(v);
                }
                k += 1;
            }
            if col_idx.len() == row_ptr[row] || *col_idx.last().unwrap() != row {
                col_idx.push(row);
                values.push(0.0);
            }
            row_ptr[row + 1] = col_idx.len();
        }
        Ok(SparseSymMatrix { n, row_ptr, col_idx, values })
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(&vec![1.0; n])
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        SparseSymMatrix {
            n: d.len(),
            row_ptr: (0..=d.len()).collect(),
            col_idx: (0..d.len()).collect(),
            values: d.to_vec(),
        }
    }

    /// Lower triangle of a dense matrix, keeping exact zeros off the diagonal out.
    pub fn from_dense(a: &DMatrix<f64>) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::DimensionMismatch { expected: a.nrows(), got: a.ncols() });
        }
        let n = a.nrows();
        let triplets = (0..n).flat_map(|i| (0..=i).map(move |j| (i, j))).filter_map(|(i, j)| {
            let v = a[(i, j)];
            (v != 0.0 || i == j).then_some((i, j, v))
        });
        Self::from_triplets(n, triplets)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Stored (lower-triangle) nonzeros.
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub(crate) fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub(crate) fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub(crate) fn values(&self) -> &[f64] {
        &self.values
    }

    /// Iterates stored entries `(i, j, value)` with `j <= i`.
    pub fn lower_entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| {
            (self.row_ptr[i]..self.row_ptr[i + 1]).map(move |p| (i, self.col_idx[p], self.values[p]))
        })
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (r, c) = if j <= i { (i, j) } else { (j, i) };
        let row = &self.col_idx[self.row_ptr[r]..self.row_ptr[r + 1]];
        match row.binary_search(&c) {
            Ok(p) => self.values[self.row_ptr[r] + p],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.values[self.row_ptr[i + 1] - 1]).collect()
    }

    pub fn trace(&self) -> f64 {
        self.diagonal().iter().sum()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n, "vector length does not match matrix dimension");
        y.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..self.n {
            let mut acc = 0.0;
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.col_idx[p];
                let a = self.values[p];
                acc += a * x[j];
                if j != i {
                    y[j] += a * x[i];
                }
            }
            y[i] += acc;
        }
    }

    /// `x^T S x`
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.n, "vector length does not match matrix dimension");
        let mut s = 0.0;
        for i in 0..self.n {
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.col_idx[p];
                let t = self.values[p] * x[i] * x[j];
                s += if i == j { t } else { 2.0 * t };
            }
        }
        s
    }

    /// Row sums of the full symmetric matrix, i.e. `S * ones`.
    pub fn row_sums(&self) -> Vec<f64> {
        self.mul_vec(&vec![1.0; self.n])
    }

    /// Sum of all entries of the full symmetric matrix.
    pub fn sum_entries(&self) -> f64 {
        self.lower_entries().map(|(i, j, v)| if i == j { v } else { 2.0 * v }).sum()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(self.n, self.n);
        for (i, j, v) in self.lower_entries() {
            d[(i, j)] = v;
            d[(j, i)] = v;
        }
        d
    }

    /// `alpha * self + beta * other` on the union of the two patterns.
    pub fn linear_combination(&self, alpha: f64, other: &SparseSymMatrix, beta: f64) -> Result<Self> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: other.n });
        }
        let mut row_ptr = vec![0usize; self.n + 1];
        let mut col_idx = Vec::with_capacity(self.nnz().max(other.nnz()));
        let mut values = Vec::with_capacity(col_idx.capacity());
        for i in 0..self.n {
            let (mut p, pe) = (self.row_ptr[i], self.row_ptr[i + 1]);
            let (mut q, qe) = (other.row_ptr[i], other.row_ptr[i + 1]);
            while p < pe || q < qe {
                let cp = if p < pe { self.col_idx[p] } else { usize::MAX };
                let cq = if q < qe { other.col_idx[q] } else { usize::MAX };
                if cp == cq {
                    col_idx.push(cp);
                    values.push(alpha * self.values[p] + beta * other.values[q]);
                    p += 1;
                    q += 1;
                } else if cp < cq {
                    col_idx.push(cp);
                    values.push(alpha * self.values[p]);
                    p += 1;
                } else {
                    col_idx.push(cq);
                    values.push(beta * other.values[q]);
                    q += 1;
                }
            }
            row_ptr[i + 1] = col_idx.len();
        }
        Ok(SparseSymMatrix { n: self.n, row_ptr, col_idx, values })
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= alpha);
        out
    }

    /// Symmetric permutation `P S P^T` where `perm[new] = old`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: perm.len() });
        }
        let mut inv = vec![usize::MAX; self.n];
        for (new, &old) in perm.iter().enumerate() {
            if old >= self.n || inv[old] != usize::MAX {
                return Err(Error::InvalidParameter("permutation is not a bijection".into()));
            }
            inv[old] = new;
        }
        Self::from_triplets(self.n, self.lower_entries().map(|(i, j, v)| (inv[i], inv[j], v)))
    }

    /// Adjacency lists of the off-diagonal pattern, sorted.
    pub(crate) fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n];
        for (i, j, _) in self.lower_entries() {
            if i != j {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
        adj.iter_mut().for_each(|a| a.sort_unstable());
        adj
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn path_laplacian() -> SparseSymMatrix {
        SparseSymMatrix::from_triplets(3, [(0, 0, 1.0), (1, 0, -1.0), (1, 1, 2.0), (2, 1, -1.0), (2, 2, 1.0)]).unwrap()
    }

    #[test]
    fn triplets_merge_and_mirror() {
        let s = SparseSymMatrix::from_triplets(2, [(0, 1, 1.0), (1, 0, 2.0), (0, 0, 1.0), (1, 1, 0.5)]).unwrap();
        assert_eq!(s.nnz(), 3);
        assert_eq!(s.get(0, 1), 3.0);
        assert_eq!(s.get(1, 0), 3.0);
        assert_eq!(s.diagonal(), vec![1.0, 0.5]);
        assert!(SparseSymMatrix::from_triplets(2, [(2, 0, 1.0)]).is_err());
    }

    #[test]
    fn diagonal_always_stored() {
        let s = SparseSymMatrix::from_triplets(3, [(2, 0, 1.0)]).unwrap();
        assert_eq!(s.diagonal(), vec![0.0, 0.0, 0.0]);
        assert_eq!(s.get(0, 2), 1.0);
    }

    #[test]
    fn products_and_sums() {
        let l = path_laplacian();
        assert_eq!(l.row_sums(), vec![0.0, 0.0, 0.0]);
        assert_eq!(l.sum_entries(), 0.0);
        assert_eq!(l.mul_vec(&[1.0, 0.0, -1.0]), vec![1.0, 0.0, -1.0]);
        assert_eq!(l.quad_form(&[1.0, 0.0, -1.0]), 2.0);
        assert_eq!(l.trace(), 4.0);
    }

    #[test]
    fn combination_and_permutation() {
        let l = path_laplacian();
        let i3 = SparseSymMatrix::identity(3);
        let s = l.linear_combination(1.0, &i3, 2.0).unwrap();
        assert_eq!(s.diagonal(), vec![3.0, 4.0, 3.0]);
        assert_eq!(s.get(2, 1), -1.0);
        let p = l.permuted(&[2, 0, 1]).unwrap();
        assert_eq!(p.get(0, 0), l.get(2, 2));
        assert_eq!(p.get(2, 0), l.get(1, 2));
        assert_eq!(p.to_dense().sum(), 0.0);
    }

    proptest! {
        #[test]
        fn dense_round_trip(vals in proptest::collection::vec(-3.0f64..3.0, 15)) {
            let mut d = DMatrix::zeros(5, 5);
            let mut k = 0;
            for i in 0..5 {
                for j in 0..=i {
                    d[(i, j)] = vals[k];
                    d[(j, i)] = vals[k];
                    k += 1;
                }
            }
            let s = SparseSymMatrix::from_dense(&d).unwrap();
            prop_assert_eq!(s.to_dense(), d.clone());
            let x: Vec<f64> = (0..5).map(|i| i as f64 - 1.5).collect();
            let y = s.mul_vec(&x);
            let yd = &d * nalgebra::DVector::from_vec(x.clone());
            for i in 0..5 {
                prop_assert!((y[i] - yd[i]).abs() < 1e-12);
            }
        }
    }
}
