//! Lowest eigenpairs of the symmetric pencil `K x = mu M x`.
//!
//! The sparse path builds an `M`-orthonormal block Krylov basis of the shift-inverted
//! operator `(K - sigma M)^{-1} M` with full reorthogonalization and extracts Ritz
//! pairs from the projection of `K`. Blocks of three vectors resolve the paired
//! eigenvalues of rotationally symmetric problems. The dense path is an oracle for
//! small problems.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ldl::{factorize, Factorization};
use crate::sparse::SparseSymMatrix;

/// Eigenvalues in `[-ZERO_CLAMP, 0)` are reported as zero.
pub const ZERO_CLAMP: f64 = 1e-10;

/// Eigenvalues below this fraction of the largest computed one count as zero modes
/// when choosing `v_star`.
pub const ZERO_MODE_FRACTION: f64 = 1e-6;

/// Largest dimension accepted by [`dense_generalized_eigs`].
pub const DENSE_LIMIT: usize = 2000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    /// Nondecreasing.
    pub eigenvalues: Vec<f64>,
    /// `M`-orthonormal, one per eigenvalue.
    pub eigenvectors: Vec<Vec<f64>>,
    /// `||K x - mu M x|| / ||M x||` per pair.
    pub residuals: Vec<f64>,
    /// `mu^{-1/2}` for the first eigenvalue that is not a zero mode.
    pub v_star: Option<f64>,
}

impl Spectrum {
    fn from_pairs(k: &SparseSymMatrix, m: &SparseSymMatrix, mut pairs: Vec<(f64, Vec<f64>)>) -> Self {
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut eigenvalues = Vec::with_capacity(pairs.len());
        let mut eigenvectors = Vec::with_capacity(pairs.len());
        let mut residuals = Vec::with_capacity(pairs.len());
        for (mu, mut x) in pairs {
            normalize_sign(&mut x);
            residuals.push(residual(k, m, mu, &x));
            eigenvalues.push(if (-ZERO_CLAMP..0.0).contains(&mu) { 0.0 } else { mu });
            eigenvectors.push(x);
        }
        let top = eigenvalues.iter().copied().fold(0.0, f64::max);
        let v_star = eigenvalues.iter().find(|&&mu| mu > ZERO_MODE_FRACTION * top && mu > 0.0).map(|mu| mu.powf(-0.5));
        Spectrum { eigenvalues, eigenvectors, residuals, v_star }
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// `mu_n` with one-based `n`.
    pub fn mode(&self, n: usize) -> Result<f64> {
        if n == 0 || n > self.len() {
            return Err(Error::ModeOutOfRange { mode: n, available: self.len() });
        }
        Ok(self.eigenvalues[n - 1])
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }
}

fn normalize_sign(x: &mut [f64]) {
    let mut best = 0.0;
    let mut sign = 1.0;
    for &v in x.iter() {
        if v.abs() > best * (1.0 + 1e-12) {
            best = v.abs();
            sign = v.signum();
        }
    }
    if sign < 0.0 {
        x.iter_mut().for_each(|v| *v = -*v);
    }
}

fn norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn residual(k: &SparseSymMatrix, m: &SparseSymMatrix, mu: f64, x: &[f64]) -> f64 {
    let kx = k.mul_vec(x);
    let mx = m.mul_vec(x);
    let r: Vec<f64> = kx.iter().zip(&mx).map(|(a, b)| a - mu * b).collect();
    let d = norm(&mx);
    if d == 0.0 {
        norm(&r)
    } else {
        norm(&r) / d
    }
}

/// Options for [`generalized_eigs_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigOptions {
    /// Explicit shift; [`default_shift`] when absent.
    pub shift: Option<f64>,
    pub block_size: usize,
    /// Krylov vectors allowed per requested mode.
    pub vectors_per_mode: usize,
    pub seed: u64,
}

impl Default for EigOptions {
    fn default() -> Self {
        EigOptions { shift: None, block_size: 3, vectors_per_mode: 50, seed: 0x5eed }
    }
}

/// Shift `-0.1 * (trace K / trace M) * min(1, 2 n_modes / n)`.
///
/// The trace ratio is of the order of the top of the spectrum. Eigenvalues of
/// Laplace-type pencils grow linearly with their index, so the factor
/// `2 n_modes / n` moves the shift down to the scale of the requested modes.
/// The ratio is taken as one when `K` has zero trace.
pub fn default_shift(k: &SparseSymMatrix, m: &SparseSymMatrix, n_modes: usize) -> f64 {
    let (tk, tm) = (k.trace(), m.trace());
    let ratio = if tk > 0.0 && tm > 0.0 { tk / tm } else { 1.0 };
    let fraction = (2.0 * n_modes as f64 / k.dim().max(1) as f64).min(1.0);
    -0.1 * ratio * fraction
}

/// The trace-ratio shift `-0.1 * trace(K) / trace(M)` without the mode-count factor.
pub fn trace_ratio_shift(k: &SparseSymMatrix, m: &SparseSymMatrix) -> f64 {
    let (tk, tm) = (k.trace(), m.trace());
    -0.1 * if tk > 0.0 && tm > 0.0 { tk / tm } else { 1.0 }
}

/// Lowest `n_modes` eigenpairs with residuals at most `tol`.
pub fn generalized_eigs(k: &SparseSymMatrix, m: &SparseSymMatrix, n_modes: usize, tol: f64) -> Result<Spectrum> {
    generalized_eigs_with(k, m, n_modes, tol, &EigOptions::default())
}

pub fn generalized_eigs_with(
    k: &SparseSymMatrix,
    m: &SparseSymMatrix,
    n_modes: usize,
    tol: f64,
    opts: &EigOptions,
) -> Result<Spectrum> {
    let n = k.dim();
    if m.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, got: m.dim() });
    }
    if n_modes == 0 || n_modes > n {
        return Err(Error::InvalidParameter(format!("n_modes = {n_modes} for dimension {n}")));
    }
    if !(tol > 0.0) || opts.block_size == 0 {
        return Err(Error::InvalidParameter("tolerance and block size must be positive".into()));
    }
    let sigma = opts.shift.unwrap_or_else(|| default_shift(k, m, n_modes));
    let factor = match factorize(&k.linear_combination(1.0, m, -sigma)?) {
        Ok(f) => f,
        Err(Error::NotPositiveDefinite(_)) => factorize(&k.linear_combination(1.0, m, -2.0 * sigma)?)?,
        Err(e) => return Err(e),
    };
    let mut krylov = Krylov::new(k, m, factor, opts.seed);
    let max_vectors = (opts.vectors_per_mode * n_modes).max(n_modes + 2 * opts.block_size).min(n);
    let b = opts.block_size.min(n);

    for _ in 0..b {
        krylov.push_random();
    }
    let check_every = (2 * b).max(6);
    let mut next_check = (n_modes + b).max(2 * b);
    let mut last_residual = f64::INFINITY;
    loop {
        let full = krylov.len() >= max_vectors;
        if krylov.len() >= next_check || full {
            let pairs = krylov.ritz_pairs(n_modes.min(krylov.len()));
            if pairs.len() == n_modes {
                let worst = pairs.iter().map(|(mu, x)| residual(k, m, *mu, x)).fold(0.0, f64::max);
                last_residual = worst;
                if worst <= tol {
                    return Ok(Spectrum::from_pairs(k, m, pairs));
                }
            }
            if full {
                return Err(Error::NoConvergence { iterations: krylov.len(), residual: last_residual });
            }
            next_check = krylov.len() + check_every;
        }
        let before = krylov.len();
        krylov.push_operator_image(before.saturating_sub(b));
        if krylov.len() == before {
            // No new direction exists; the basis spans an invariant subspace.
            let pairs = krylov.ritz_pairs(n_modes.min(before));
            let worst = pairs.iter().map(|(mu, x)| residual(k, m, *mu, x)).fold(0.0, f64::max);
            if pairs.len() == n_modes && worst <= tol {
                return Ok(Spectrum::from_pairs(k, m, pairs));
            }
            return Err(Error::NoConvergence { iterations: before, residual: worst });
        }
    }
}

/// `M`-orthonormal Krylov basis with cached `K q` and `M q` products.
struct Krylov<'a> {
    k: &'a SparseSymMatrix,
    m: &'a SparseSymMatrix,
    factor: Factorization,
    rng: ChaCha8Rng,
    q: Vec<Vec<f64>>,
    kq: Vec<Vec<f64>>,
    mq: Vec<Vec<f64>>,
    /// Projection `Q^T K Q`, row `i` holds entries `0..=i`.
    proj: Vec<Vec<f64>>,
}

impl<'a> Krylov<'a> {
    fn new(k: &'a SparseSymMatrix, m: &'a SparseSymMatrix, factor: Factorization, seed: u64) -> Self {
        Krylov { k, m, factor, rng: ChaCha8Rng::seed_from_u64(seed), q: vec![], kq: vec![], mq: vec![], proj: vec![] }
    }

    fn len(&self) -> usize {
        self.q.len()
    }

    fn random_vector(&mut self) -> Vec<f64> {
        (0..self.k.dim()).map(|_| self.rng.random_range(-1.0..1.0)).collect()
    }

    fn push_random(&mut self) {
        for _ in 0..10 {
            let v = self.random_vector();
            if self.try_push(v) {
                return;
            }
        }
    }

    fn push_operator_image(&mut self, source: usize) {
        let w = self.factor.solve(&self.mq[source]);
        if !self.try_push(w) {
            // The Krylov sequence broke down; continue from a fresh direction.
            self.push_random();
        }
    }

    /// Orthogonalizes `w` against the basis twice and appends it unless it is
    /// numerically dependent.
    fn try_push(&mut self, mut w: Vec<f64>) -> bool {
        if self.len() >= self.k.dim() {
            return false;
        }
        let mut mw = self.m.mul_vec(&w);
        let start = dot(&w, &mw).max(0.0).sqrt();
        if start == 0.0 {
            return false;
        }
        for _ in 0..2 {
            for (qi, mqi) in self.q.iter().zip(&self.mq) {
                let c = dot(mqi, &w);
                w.iter_mut().zip(qi).for_each(|(wv, qv)| *wv -= c * qv);
            }
        }
        self.m.mul_vec_into(&w, &mut mw);
        let len = dot(&w, &mw).max(0.0).sqrt();
        if len <= 1e-10 * start {
            return false;
        }
        w.iter_mut().for_each(|v| *v /= len);
        mw.iter_mut().for_each(|v| *v /= len);
        let kw = self.k.mul_vec(&w);
        let row: Vec<f64> = self.q.iter().map(|qi| dot(qi, &kw)).chain([dot(&w, &kw)]).collect();
        self.proj.push(row);
        self.q.push(w);
        self.kq.push(kw);
        self.mq.push(mw);
        true
    }

    /// The lowest `count` Ritz pairs of `K` on the current basis.
    fn ritz_pairs(&self, count: usize) -> Vec<(f64, Vec<f64>)> {
        let m = self.len();
        let h = DMatrix::from_fn(m, m, |i, j| if j <= i { self.proj[i][j] } else { self.proj[j][i] });
        let eig = SymmetricEigen::new(h);
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        order
            .into_iter()
            .take(count)
            .map(|c| {
                let y = eig.eigenvectors.column(c);
                let mut x = vec![0.0; self.k.dim()];
                for (qi, &yi) in self.q.iter().zip(y.iter()) {
                    x.iter_mut().zip(qi).for_each(|(xv, qv)| *xv += yi * qv);
                }
                (eig.eigenvalues[c], x)
            })
            .collect()
    }
}

/// Full spectrum by Cholesky reduction of `M` and a dense symmetric eigensolver.
pub fn dense_generalized_eigs(k: &SparseSymMatrix, m: &SparseSymMatrix) -> Result<Spectrum> {
    let n = k.dim();
    if m.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, got: m.dim() });
    }
    if n > DENSE_LIMIT {
        return Err(Error::InvalidParameter(format!("dense oracle limited to dimension {DENSE_LIMIT}, got {n}")));
    }
    let chol = m
        .to_dense()
        .cholesky()
        .ok_or_else(|| Error::NotPositiveDefinite("mass matrix in dense reduction".into()))?;
    let l = chol.l();
    let kd = k.to_dense();
    // C = L^{-1} K L^{-T}
    let left = l.solve_lower_triangular(&kd).expect("Cholesky factor is nonsingular");
    let c_t = l.solve_lower_triangular(&left.transpose()).expect("Cholesky factor is nonsingular");
    let c = (&c_t + c_t.transpose()) * 0.5;
    let eig = SymmetricEigen::new(c);
    let lt = l.transpose();
    let pairs = (0..n)
        .map(|i| {
            let y: DVector<f64> = eig.eigenvectors.column(i).into_owned();
            let x = lt.solve_upper_triangular(&y).expect("Cholesky factor is nonsingular");
            (eig.eigenvalues[i], x.iter().copied().collect())
        })
        .collect();
    Ok(Spectrum::from_pairs(k, m, pairs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beltrami::EllipticMatrixField;
    use crate::fem::{assemble_mass, assemble_stiffness, Density};
    use crate::mesh::build_disc_mesh;

    fn two_by_two() -> (SparseSymMatrix, SparseSymMatrix) {
        let k = SparseSymMatrix::from_triplets(2, [(0, 0, 1.0), (1, 0, -1.0), (1, 1, 1.0)]).unwrap();
        (k, SparseSymMatrix::identity(2))
    }

    #[test]
    fn two_by_two_example() {
        let (k, m) = two_by_two();
        let s = generalized_eigs(&k, &m, 2, 1e-10).unwrap();
        assert!(s.eigenvalues[0].abs() < 1e-12 && (s.eigenvalues[1] - 2.0).abs() < 1e-12);
        let d = dense_generalized_eigs(&k, &m).unwrap();
        assert!(d.eigenvalues[0].abs() < 1e-12 && (d.eigenvalues[1] - 2.0).abs() < 1e-12);
        assert!((s.v_star.unwrap() - 0.5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn zero_stiffness() {
        let k = SparseSymMatrix::from_diagonal(&[0.0; 6]);
        let s = generalized_eigs(&k, &SparseSymMatrix::identity(6), 3, 1e-10).unwrap();
        assert_eq!(s.eigenvalues, vec![0.0, 0.0, 0.0]);
        assert_eq!(s.v_star, None);
    }

    #[test]
    fn diagonal_pencil_sorted() {
        let k = SparseSymMatrix::from_diagonal(&[5.0, 1.0, 3.0, 2.0]);
        let d = dense_generalized_eigs(&k, &SparseSymMatrix::identity(4)).unwrap();
        assert_eq!(d.eigenvalues, vec![1.0, 2.0, 3.0, 5.0]);
    }

    #[test]
    fn disc_matches_dense_and_is_orthonormal() {
        let mesh = build_disc_mesh(8, 32).unwrap();
        let k = assemble_stiffness(&mesh, &EllipticMatrixField::identity()).unwrap();
        let m = assemble_mass(&mesh, Density::Unit).unwrap();
        let s = generalized_eigs(&k, &m, 6, 1e-9).unwrap();
        let d = dense_generalized_eigs(&k, &m).unwrap();
        assert!(s.eigenvalues[0].abs() < 1e-8);
        for i in 1..6 {
            assert!((s.eigenvalues[i] - d.eigenvalues[i]).abs() <= 1e-8 * d.eigenvalues[i], "mode {i}");
        }
        for i in 0..6 {
            for j in 0..6 {
                let mx = m.mul_vec(&s.eigenvectors[j]);
                let g = dot(&s.eigenvectors[i], &mx);
                assert!((g - if i == j { 1.0 } else { 0.0 }).abs() < 1e-8);
            }
        }
        assert!(s.max_residual() <= 1e-9);
        assert!(matches!(s.mode(7), Err(Error::ModeOutOfRange { .. })));
    }
}
