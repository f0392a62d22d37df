//! Sparse LDL^T factorization of symmetric positive definite matrices.
//!
//! The matrix is reordered by reverse Cuthill-McKee, its elimination tree gives the
//! nonzero pattern of `L`, and the factor is computed row by row (up-looking).

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::sparse::SparseSymMatrix;

/// Pivots below this fraction of the corresponding diagonal entry are rejected.
pub const PIVOT_TOL: f64 = 1e-12;

const NONE: usize = usize::MAX;

/// A reusable solve handle for `S x = b`.
#[derive(Debug, Clone)]
pub struct Factorization {
    n: usize,
    /// `perm[new] = old`
    perm: Vec<usize>,
    l_ptr: Vec<usize>,
    l_idx: Vec<usize>,
    l_val: Vec<f64>,
    d_inv: Vec<f64>,
    matrix: SparseSymMatrix,
    refinement_steps: usize,
}

/// Reverse Cuthill-McKee ordering of the pattern of `s`, as `perm[new] = old`.
pub fn reverse_cuthill_mckee(s: &SparseSymMatrix) -> Vec<usize> {
    let adj = s.adjacency();
    let n = adj.len();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let degree = |v: usize| adj[v].len();

    while order.len() < n {
        // Start each component from a pseudo-peripheral vertex.
        let seed = (0..n).filter(|&v| !visited[v]).min_by_key(|&v| (degree(v), v)).unwrap();
        let start = pseudo_peripheral(&adj, seed);
        let mut queue = VecDeque::from([start]);
        visited[start] = true;
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut next: Vec<usize> = adj[v].iter().copied().filter(|&u| !visited[u]).collect();
            next.sort_by_key(|&u| (degree(u), u));
            for u in next {
                visited[u] = true;
                queue.push_back(u);
            }
        }
    }
    order.reverse();
    order
}

fn bfs_levels(adj: &[Vec<usize>], start: usize) -> Vec<usize> {
    let mut level = vec![NONE; adj.len()];
    level[start] = 0;
    let mut queue = VecDeque::from([start]);
    while let Some(v) = queue.pop_front() {
        for &u in &adj[v] {
            if level[u] == NONE {
                level[u] = level[v] + 1;
                queue.push_back(u);
            }
        }
    }
    level
}

fn pseudo_peripheral(adj: &[Vec<usize>], seed: usize) -> usize {
    let mut v = seed;
    let mut ecc = 0;
    for _ in 0..8 {
        let level = bfs_levels(adj, v);
        let far = level.iter().filter(|&&l| l != NONE).copied().max().unwrap_or(0);
        if far <= ecc && v != seed {
            break;
        }
        ecc = far;
        let candidate = (0..adj.len())
            .filter(|&u| level[u] == far)
            .min_by_key(|&u| (adj[u].len(), u))
            .unwrap();
        if candidate == v {
            break;
        }
        v = candidate;
    }
    v
}

/// Factorizes `s` after a fill-reducing reorder. Fails with `NotPositiveDefinite`
/// when a pivot is not safely positive.
pub fn factorize(s: &SparseSymMatrix) -> Result<Factorization> {
    let n = s.dim();
    let perm = reverse_cuthill_mckee(s);
    let p = s.permuted(&perm)?;
    // Rows of the stored lower triangle are the columns of the upper triangle.
    let (ap, ai, ax) = (p.row_ptr(), p.col_idx(), p.values());

    let mut etree = vec![NONE; n];
    let mut col_count = vec![0usize; n];
    let mut flag = vec![NONE; n];
    for j in 0..n {
        flag[j] = j;
        for &row in &ai[ap[j]..ap[j + 1]] {
            let mut i = row;
            while flag[i] != j {
                if etree[i] == NONE {
                    etree[i] = j;
                }
                col_count[i] += 1;
                flag[i] = j;
                i = etree[i];
            }
        }
    }
    let mut l_ptr = vec![0usize; n + 1];
    for i in 0..n {
        l_ptr[i + 1] = l_ptr[i] + col_count[i];
    }
    let nnz_l = l_ptr[n];
    let mut l_idx = vec![0usize; nnz_l];
    let mut l_val = vec![0.0; nnz_l];
    let mut d = vec![0.0; n];
    let mut d_inv = vec![0.0; n];

    let mut y_vals = vec![0.0; n];
    let mut marked = vec![false; n];
    let mut y_idx = Vec::with_capacity(n);
    let mut stack = Vec::with_capacity(n);
    let mut next_in_col: Vec<usize> = l_ptr[..n].to_vec();

    for k in 0..n {
        y_idx.clear();
        let mut diag = 0.0;
        for q in ap[k]..ap[k + 1] {
            let b = ai[q];
            if b == k {
                diag = ax[q];
                continue;
            }
            y_vals[b] = ax[q];
            if marked[b] {
                continue;
            }
            // Walk up the elimination tree to collect the reach of b.
            stack.clear();
            let mut v = b;
            while v != NONE && v < k && !marked[v] {
                marked[v] = true;
                stack.push(v);
                v = etree[v];
            }
            while let Some(v) = stack.pop() {
                y_idx.push(v);
            }
        }
        d[k] = diag;
        for &c in y_idx.iter().rev() {
            let yc = y_vals[c];
            let end = next_in_col[c];
            for q in l_ptr[c]..end {
                y_vals[l_idx[q]] -= l_val[q] * yc;
            }
            l_idx[end] = k;
            l_val[end] = yc * d_inv[c];
            d[k] -= yc * l_val[end];
            next_in_col[c] += 1;
            y_vals[c] = 0.0;
            marked[c] = false;
        }
        let scale = diag.abs().max(f64::MIN_POSITIVE);
        if !(d[k] > PIVOT_TOL * scale) {
            return Err(Error::NotPositiveDefinite(format!(
                "pivot {k} is {:.3e} against diagonal {:.3e}",
                d[k], diag
            )));
        }
        d_inv[k] = 1.0 / d[k];
    }

    Ok(Factorization { n, perm, l_ptr, l_idx, l_val, d_inv, matrix: s.clone(), refinement_steps: 2 })
}

impl Factorization {
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Nonzeros of the unit lower factor, excluding the diagonal.
    pub fn factor_nnz(&self) -> usize {
        self.l_idx.len()
    }

    fn solve_once(&self, b: &[f64]) -> Vec<f64> {
        let mut x: Vec<f64> = self.perm.iter().map(|&old| b[old]).collect();
        for j in 0..self.n {
            let xj = x[j];
            if xj != 0.0 {
                for q in self.l_ptr[j]..self.l_ptr[j + 1] {
                    x[self.l_idx[q]] -= self.l_val[q] * xj;
                }
            }
        }
        for (xi, di) in x.iter_mut().zip(&self.d_inv) {
            *xi *= di;
        }
        for j in (0..self.n).rev() {
            let mut acc = x[j];
            for q in self.l_ptr[j]..self.l_ptr[j + 1] {
                acc -= self.l_val[q] * x[self.l_idx[q]];
            }
            x[j] = acc;
        }
        let mut out = vec![0.0; self.n];
        for (new, &old) in self.perm.iter().enumerate() {
            out[old] = x[new];
        }
        out
    }

    /// Solves `S x = b` with a few steps of iterative refinement.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n, "right-hand side length does not match");
        let mut x = self.solve_once(b);
        for _ in 0..self.refinement_steps {
            let sx = self.matrix.mul_vec(&x);
            let r: Vec<f64> = b.iter().zip(&sx).map(|(bi, si)| bi - si).collect();
            let dx = self.solve_once(&r);
            x.iter_mut().zip(&dx).for_each(|(xi, di)| *xi += di);
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beltrami::EllipticMatrixField;
    use crate::fem::{assemble_mass, assemble_stiffness, Density};
    use crate::mesh::build_disc_mesh;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn norm(v: &[f64]) -> f64 {
        v.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    #[test]
    fn small_examples() {
        let f = factorize(&SparseSymMatrix::identity(4)).unwrap();
        assert_eq!(f.solve(&[1.0, -2.0, 3.0, 0.5]), vec![1.0, -2.0, 3.0, 0.5]);
        let f = factorize(&SparseSymMatrix::from_diagonal(&[2.0, 3.0])).unwrap();
        assert_eq!(f.solve(&[2.0, 3.0]), vec![1.0, 1.0]);
    }

    #[test]
    fn singular_stiffness_is_rejected() {
        let mesh = build_disc_mesh(8, 32).unwrap();
        let k = assemble_stiffness(&mesh, &EllipticMatrixField::identity()).unwrap();
        assert!(matches!(factorize(&k), Err(Error::NotPositiveDefinite(_))));
        let neg = SparseSymMatrix::from_diagonal(&[1.0, -1.0]);
        assert!(matches!(factorize(&neg), Err(Error::NotPositiveDefinite(_))));
    }

    #[test]
    fn shifted_stiffness_solves_accurately() {
        let mesh = build_disc_mesh(16, 64).unwrap();
        let k = assemble_stiffness(&mesh, &EllipticMatrixField::identity()).unwrap();
        let m = assemble_mass(&mesh, Density::Unit).unwrap();
        let s = k.linear_combination(1.0, &m, 0.5).unwrap();
        let f = factorize(&s).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let b: Vec<f64> = (0..s.dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let x = f.solve(&b);
        let r: Vec<f64> = s.mul_vec(&x).iter().zip(&b).map(|(a, b)| a - b).collect();
        assert!(norm(&r) <= 1e-10 * norm(&b));
    }

    #[test]
    fn dense_random_spd_matches_nalgebra() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 30;
        let g = nalgebra::DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let a = &g * g.transpose() + nalgebra::DMatrix::identity(n, n) * 0.1;
        let s = SparseSymMatrix::from_dense(&a).unwrap();
        let b: Vec<f64> = (0..n).map(|i| (i as f64).cos()).collect();
        let x = factorize(&s).unwrap().solve(&b);
        let xd = a.cholesky().unwrap().solve(&nalgebra::DVector::from_vec(b));
        for i in 0..n {
            assert!((x[i] - xd[i]).abs() < 1e-9 * xd.amax());
        }
    }

    #[test]
    fn rcm_is_a_permutation_and_reduces_bandwidth() {
        let mesh = build_disc_mesh(12, 48).unwrap();
        let k = assemble_stiffness(&mesh, &EllipticMatrixField::identity()).unwrap();
        let mut shuffle: Vec<usize> = (0..k.dim()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for i in (1..shuffle.len()).rev() {
            shuffle.swap(i, rng.random_range(0..=i));
        }
        let scrambled = k.permuted(&shuffle).unwrap();
        let perm = reverse_cuthill_mckee(&scrambled);
        let mut sorted = perm.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..k.dim()).collect::<Vec<_>>());
        let bandwidth = |s: &SparseSymMatrix| s.lower_entries().map(|(i, j, _)| i - j).max().unwrap();
        assert!(bandwidth(&scrambled) > 300);
        assert!(bandwidth(&scrambled.permuted(&perm).unwrap()) <= 2 * 48 + 2);
    }
}
