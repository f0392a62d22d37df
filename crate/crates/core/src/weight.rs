//! Disc weights `h(z) = |J(z, phi^{-1})|` generated by maps `phi: Omega -> D`.

use std::fmt;

use crate::algebra::Point;
use crate::error::{Error, Result};
use crate::maps::QcMap;
use crate::quadrature::{polar_quadrature, QuadratureResult};

/// Tolerance used for the total mass `m_h(D)`.
pub const MASS_TOL: f64 = 1e-10;

#[derive(Clone)]
pub struct Weight {
    source_map: QcMap,
    scale: f64,
    mass: f64,
}

impl fmt::Debug for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Weight")
            .field("mass", &self.mass)
            .field("scale", &self.scale)
            .field("source_map", &self.source_map)
            .finish()
    }
}

/// Weight generated by `phi`; its mass equals the area of `phi^{-1}(D)`.
pub fn weight_of_map(phi: &QcMap) -> Result<Weight> {
    let map = phi.clone();
    let q = polar_quadrature(|z| map.jac_inverse(z).abs(), MASS_TOL);
    if !q.is_finite() {
        return Err(Error::NonIntegrableWeight(format!("{phi:?}: {q:?}")));
    }
    Ok(Weight { source_map: phi.clone(), scale: 1.0, mass: q.value })
}

impl Weight {
    /// `h = 1`, generated by the identity map.
    pub fn unit() -> Self {
        Weight { source_map: QcMap::identity(), scale: 1.0, mass: std::f64::consts::PI }
    }

    /// `lambda * h` for `lambda > 0`.
    pub fn scaled(&self, lambda: f64) -> Result<Weight> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!("weight scale {lambda} must be positive")));
        }
        Ok(Weight { source_map: self.source_map.clone(), scale: self.scale * lambda, mass: self.mass * lambda })
    }

    pub fn eval(&self, z: Point) -> f64 {
        self.scale * self.source_map.jac_inverse(z).abs()
    }

    /// `m_h(D)`.
    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn source_map(&self) -> &QcMap {
        &self.source_map
    }

    /// True when `h` blows up at the origin (e.g. radial exponent below one).
    pub fn is_singular_at_origin(&self) -> bool {
        let near = self.eval(Point::new(1e-8, 0.0));
        let far = self.eval(Point::new(1e-4, 0.0));
        !near.is_finite() || near > 2.0 * far
    }

    /// `||h | L^2(D)||`.
    pub fn l2_norm(&self, tol: f64) -> QuadratureResult {
        polar_quadrature(|z| self.eval(z).powi(2), tol).map_value(f64::sqrt, |v| 0.5 / v.sqrt())
    }
}
