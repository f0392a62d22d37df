//! Complex dilatations and the unit-determinant matrix fields they encode.
//!
//! A symmetric positive definite matrix `A` with `det A = 1` and the complex
//! dilatation `mu` determine each other:
//!
//! ```text
//! mu = (a22 - a11 - 2i a12) / det(I + A)
//! A  = 1/(1-|mu|^2) [ |1-mu|^2   -2 Im mu ]
//!                   [ -2 Im mu   |1+mu|^2 ]
//! ```
//!
//! and the ellipticity constant of `A` is `K = (1+|mu|)/(1-|mu|)`.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::algebra::{Point, SymMat2};
use crate::error::{Error, Result};

/// Tolerance on `|det A - 1|` accepted by [`beltrami_from_matrix`].
pub const DET_TOL: f64 = 1e-10;

/// A complex dilatation with modulus strictly below one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeltramiValue(Complex64);

impl BeltramiValue {
    pub const ZERO: BeltramiValue = BeltramiValue(Complex64::new(0.0, 0.0));

    pub fn new(mu: Complex64) -> Result<Self> {
        let modulus = mu.norm();
        if !(modulus < 1.0) {
            return Err(Error::DilatationOutOfRange { modulus });
        }
        Ok(BeltramiValue(mu))
    }

    pub fn from_parts(re: f64, im: f64) -> Result<Self> {
        Self::new(Complex64::new(re, im))
    }

    pub fn value(&self) -> Complex64 {
        self.0
    }

    pub fn re(&self) -> f64 {
        self.0.re
    }

    pub fn im(&self) -> f64 {
        self.0.im
    }

    pub fn modulus(&self) -> f64 {
        self.0.norm()
    }
}

/// Complex dilatation agreed with a unit-determinant SPD matrix.
pub fn beltrami_from_matrix(a: SymMat2) -> Result<BeltramiValue> {
    let det = a.det();
    if (det - 1.0).abs() > DET_TOL {
        return Err(Error::NonUnitDeterminant { det, tol: DET_TOL });
    }
    let det_i_plus_a = (1.0 + a.a11) * (1.0 + a.a22) - a.a12 * a.a12;
    if a.a11 <= 0.0 || det_i_plus_a <= 0.0 {
        return Err(Error::NotPositiveDefinite(format!(
            "a11 = {}, det(I + A) = {}",
            a.a11, det_i_plus_a
        )));
    }
    let mu = Complex64::new(a.a22 - a.a11, -2.0 * a.a12) / det_i_plus_a;
    BeltramiValue::new(mu)
}

/// Inverse of [`beltrami_from_matrix`].
pub fn matrix_from_beltrami(mu: BeltramiValue) -> Result<SymMat2> {
    let m = mu.value();
    let m2 = m.norm_sqr();
    if !(m2 < 1.0) {
        return Err(Error::DilatationOutOfRange { modulus: m2.sqrt() });
    }
    let one = Complex64::new(1.0, 0.0);
    let denom = 1.0 - m2;
    Ok(SymMat2 {
        a11: (one - m).norm_sqr() / denom,
        a12: -2.0 * m.im / denom,
        a22: (one + m).norm_sqr() / denom,
    })
}

/// Quasiconformal coefficient `(1+|mu|)/(1-|mu|)`.
pub fn ellipticity_of(mu: BeltramiValue) -> Result<f64> {
    ellipticity_of_modulus(mu.modulus())
}

pub fn ellipticity_of_modulus(modulus: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&modulus) {
        return Err(Error::DilatationOutOfRange { modulus });
    }
    Ok((1.0 + modulus) / (1.0 - modulus))
}

/// `|mu| = (K-1)/(K+1)`, the largest dilatation compatible with constant `K`.
pub fn dilatation_bound(k: f64) -> f64 {
    (k - 1.0) / (k + 1.0)
}

type MatrixFn = dyn Fn(Point) -> SymMat2 + Send + Sync;

/// A symmetric, unit-determinant, uniformly elliptic matrix field `A(w)`.
#[derive(Clone)]
pub struct EllipticMatrixField {
    eval: Arc<MatrixFn>,
    ellipticity_k: f64,
    domain_tag: String,
}

impl fmt::Debug for EllipticMatrixField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EllipticMatrixField")
            .field("ellipticity_k", &self.ellipticity_k)
            .field("domain_tag", &self.domain_tag)
            .finish()
    }
}

impl EllipticMatrixField {
    pub fn identity() -> Self {
        EllipticMatrixField {
            eval: Arc::new(|_| SymMat2::IDENTITY),
            ellipticity_k: 1.0,
            domain_tag: "plane".into(),
        }
    }

    /// Constant field; the ellipticity constant is the largest eigenvalue.
    pub fn constant(a: SymMat2) -> Result<Self> {
        let mu = beltrami_from_matrix(a)?;
        let k = ellipticity_of(mu)?;
        Ok(EllipticMatrixField {
            eval: Arc::new(move |_| a),
            ellipticity_k: k,
            domain_tag: "plane".into(),
        })
    }

    /// A field from a closure. `ellipticity_k` must bound the field everywhere on its domain.
    pub fn from_fn<F>(f: F, ellipticity_k: f64, domain_tag: impl Into<String>) -> Result<Self>
    where
        F: Fn(Point) -> SymMat2 + Send + Sync + 'static,
    {
        if !(ellipticity_k >= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "ellipticity constant {ellipticity_k} must be >= 1"
            )));
        }
        Ok(EllipticMatrixField {
            eval: Arc::new(f),
            ellipticity_k,
            domain_tag: domain_tag.into(),
        })
    }

    pub fn eval(&self, w: Point) -> SymMat2 {
        (self.eval)(w)
    }

    pub fn ellipticity_k(&self) -> f64 {
        self.ellipticity_k
    }

    pub fn domain_tag(&self) -> &str {
        &self.domain_tag
    }

    /// Evaluates `A(w)` and rejects it unless `det A = 1` within [`DET_TOL`].
    pub fn eval_checked(&self, w: Point) -> Result<SymMat2> {
        let a = self.eval(w);
        let det = a.det();
        if !((det - 1.0).abs() <= DET_TOL) {
            return Err(Error::NonUnitDeterminant { det, tol: DET_TOL });
        }
        if a.a11 <= 0.0 {
            return Err(Error::NotPositiveDefinite(format!("a11 = {} at {w}", a.a11)));
        }
        Ok(a)
    }

    /// Uniform ellipticity at `w` for direction `xi`:
    /// `|xi|^2 / K <= <A xi, xi> <= K |xi|^2` up to a relative slack.
    pub fn satisfies_uec(&self, w: Point, xi: [f64; 2], slack: f64) -> bool {
        let a = self.eval(w);
        let q = a.bilinear(xi, xi);
        let n2 = xi[0] * xi[0] + xi[1] * xi[1];
        let k = self.ellipticity_k;
        q >= n2 / k * (1.0 - slack) && q <= k * n2 * (1.0 + slack)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: SymMat2, b: SymMat2, tol: f64) -> bool {
        a.max_abs_diff(&b) <= tol
    }

    #[test]
    fn beltrami_examples() {
        let mu = beltrami_from_matrix(SymMat2::IDENTITY).unwrap();
        assert_eq!(mu.value(), Complex64::new(0.0, 0.0));

        let mu = beltrami_from_matrix(SymMat2::new(0.5, 0.0, 2.0)).unwrap();
        assert!((mu.value() - Complex64::new(1.0 / 3.0, 0.0)).norm() < 1e-15);

        let mu = beltrami_from_matrix(SymMat2::new(5.0 / 3.0, -4.0 / 3.0, 5.0 / 3.0)).unwrap();
        assert!((mu.value() - Complex64::new(0.0, 0.5)).norm() < 1e-15);
    }

    #[test]
    fn matrix_examples() {
        let zero = BeltramiValue::ZERO;
        assert!(close(matrix_from_beltrami(zero).unwrap(), SymMat2::IDENTITY, 0.0));

        let third = BeltramiValue::from_parts(1.0 / 3.0, 0.0).unwrap();
        assert!(close(matrix_from_beltrami(third).unwrap(), SymMat2::new(0.5, 0.0, 2.0), 1e-15));

        let half_i = BeltramiValue::from_parts(0.0, 0.5).unwrap();
        let a = matrix_from_beltrami(half_i).unwrap();
        assert!(close(a, SymMat2::new(5.0 / 3.0, -4.0 / 3.0, 5.0 / 3.0), 1e-15));
    }

    #[test]
    fn ellipticity_examples() {
        assert_eq!(ellipticity_of(BeltramiValue::ZERO).unwrap(), 1.0);
        let k = ellipticity_of(BeltramiValue::from_parts(1.0 / 3.0, 0.0).unwrap()).unwrap();
        assert!((k - 2.0).abs() < 1e-15);
        let k = ellipticity_of(BeltramiValue::from_parts(0.12, 0.16).unwrap()).unwrap();
        assert!((k - 1.5).abs() < 1e-14);
        assert!((dilatation_bound(k) - 0.2).abs() < 1e-12);
    }

    #[test]
    fn error_paths() {
        assert!(matches!(
            beltrami_from_matrix(SymMat2::new(1.0, 0.0, 1.1)),
            Err(Error::NonUnitDeterminant { .. })
        ));
        assert!(matches!(
            beltrami_from_matrix(SymMat2::new(-1.0, 0.0, -1.0)),
            Err(Error::NotPositiveDefinite(_))
        ));
        assert!(matches!(
            BeltramiValue::from_parts(0.6, 0.8),
            Err(Error::DilatationOutOfRange { .. })
        ));
        assert!(ellipticity_of_modulus(1.0).is_err());
    }

    #[test]
    fn constant_field_k_is_top_eigenvalue() {
        let f = EllipticMatrixField::constant(SymMat2::new(0.5, 0.0, 2.0)).unwrap();
        assert!((f.ellipticity_k() - 2.0).abs() < 1e-14);
        assert!(f.satisfies_uec(Point::new(0.1, 0.2), [1.0, 0.0], 1e-12));
        assert!(f.satisfies_uec(Point::new(0.1, 0.2), [0.0, 1.0], 1e-12));
    }

    proptest! {
        #[test]
        fn round_trip_through_dilatation(re in -0.95f64..0.95, im in -0.95f64..0.95) {
            prop_assume!(re * re + im * im < 0.9);
            let mu = BeltramiValue::from_parts(re, im).unwrap();
            let a = matrix_from_beltrami(mu).unwrap();
            prop_assert!((a.det() - 1.0).abs() < 1e-10);
            let back = beltrami_from_matrix(a).unwrap();
            prop_assert!((back.value() - mu.value()).norm() < 1e-12);
            // UEC with K from the dilatation
            let k = ellipticity_of(mu).unwrap();
            let (lo, hi) = a.eigenvalues();
            prop_assert!(lo >= 1.0 / k * (1.0 - 1e-10) && hi <= k * (1.0 + 1e-10));
        }
    }
}
