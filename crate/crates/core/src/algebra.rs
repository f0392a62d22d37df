//! Small fixed-size real linear algebra for planar maps.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::ops::Mul;

/// A point of the plane, `x + iy`.
pub type Point = Complex64;

/// Real 2×2 matrix stored row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2(pub [[f64; 2]; 2]);

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2([[1.0, 0.0], [0.0, 1.0]]);

    pub fn new(m11: f64, m12: f64, m21: f64, m22: f64) -> Self {
        Mat2([[m11, m12], [m21, m22]])
    }

    pub fn diag(d1: f64, d2: f64) -> Self {
        Mat2([[d1, 0.0], [0.0, d2]])
    }

    pub fn rotation(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Mat2([[c, -s], [s, c]])
    }

    /// Real matrix of multiplication by the complex number `c`.
    pub fn from_complex(c: Complex64) -> Self {
        Mat2([[c.re, -c.im], [c.im, c.re]])
    }

    pub fn det(&self) -> f64 {
        let m = &self.0;
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }

    pub fn transpose(&self) -> Self {
        let m = &self.0;
        Mat2([[m[0][0], m[1][0]], [m[0][1], m[1][1]]])
    }

    pub fn inverse(&self) -> Self {
        let d = self.det();
        let m = &self.0;
        Mat2([[m[1][1] / d, -m[0][1] / d], [-m[1][0] / d, m[0][0] / d]])
    }

    pub fn apply(&self, v: [f64; 2]) -> [f64; 2] {
        let m = &self.0;
        [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
    }

    /// Operator (spectral) norm, `|f_z| + |f_zbar|`.
    pub fn operator_norm(&self) -> f64 {
        let (dz, dzbar) = self.wirtinger();
        dz.norm() + dzbar.norm()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|x| x.is_finite())
    }

    /// Wirtinger derivatives `(f_z, f_zbar)` of the linear map with this real matrix.
    pub fn wirtinger(&self) -> (Complex64, Complex64) {
        let [[pu, pv], [qu, qv]] = self.0;
        let dz = Complex64::new(0.5 * (pu + qv), 0.5 * (qu - pv));
        let dzbar = Complex64::new(0.5 * (pu - qv), 0.5 * (qu + pv));
        (dz, dzbar)
    }
}

impl Mul for Mat2 {
    type Output = Mat2;

    fn mul(self, rhs: Mat2) -> Mat2 {
        let a = &self.0;
        let b = &rhs.0;
        let mut out = [[0.0; 2]; 2];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        Mat2(out)
    }
}

/// Symmetric 2×2 matrix; only the upper triangle is stored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymMat2 {
    pub a11: f64,
    pub a12: f64,
    pub a22: f64,
}

impl SymMat2 {
    pub const IDENTITY: SymMat2 = SymMat2 { a11: 1.0, a12: 0.0, a22: 1.0 };

    pub fn new(a11: f64, a12: f64, a22: f64) -> Self {
        SymMat2 { a11, a12, a22 }
    }

    pub fn det(&self) -> f64 {
        self.a11 * self.a22 - self.a12 * self.a12
    }

    pub fn trace(&self) -> f64 {
        self.a11 + self.a22
    }

    pub fn apply(&self, v: [f64; 2]) -> [f64; 2] {
        [self.a11 * v[0] + self.a12 * v[1], self.a12 * v[0] + self.a22 * v[1]]
    }

    /// `<A u, v>`
    pub fn bilinear(&self, u: [f64; 2], v: [f64; 2]) -> f64 {
        let au = self.apply(u);
        au[0] * v[0] + au[1] * v[1]
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let half_tr = 0.5 * self.trace();
        let d = (0.25 * (self.a11 - self.a22).powi(2) + self.a12 * self.a12).sqrt();
        (half_tr - d, half_tr + d)
    }

    pub fn to_mat2(&self) -> Mat2 {
        Mat2::new(self.a11, self.a12, self.a12, self.a22)
    }

    pub fn max_abs_diff(&self, other: &SymMat2) -> f64 {
        (self.a11 - other.a11)
            .abs()
            .max((self.a12 - other.a12).abs())
            .max((self.a22 - other.a22).abs())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_and_det() {
        let m = Mat2::new(2.0, 1.0, 0.5, 3.0);
        let p = m * m.inverse();
        for i in 0..2 {
            for j in 0..2 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((p.0[i][j] - e).abs() < 1e-15);
            }
        }
        assert!((m.det() - 5.5).abs() < 1e-15);
    }

    #[test]
    fn operator_norm_of_diagonal() {
        assert!((Mat2::diag(3.0, -0.5).operator_norm() - 3.0).abs() < 1e-14);
        let r = Mat2::rotation(0.7) * Mat2::diag(2.0, 0.5);
        assert!((r.operator_norm() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn wirtinger_of_conformal_has_zero_antiholomorphic_part() {
        let (dz, dzbar) = Mat2::from_complex(Complex64::new(0.3, -1.2)).wirtinger();
        assert_eq!(dzbar, Complex64::new(0.0, 0.0));
        assert!((dz - Complex64::new(0.3, -1.2)).norm() < 1e-16);
    }

    #[test]
    fn symmetric_eigenvalues() {
        let (lo, hi) = SymMat2::new(0.5, 0.0, 2.0).eigenvalues();
        assert!((lo - 0.5).abs() < 1e-15 && (hi - 2.0).abs() < 1e-15);
    }
}
