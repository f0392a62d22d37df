//! Analytic quasiconformal map families and their closure under composition and inversion.
//!
//! Every map here is thought of as `phi: Omega -> D` onto the unit disc, with
//! `Omega = phi^{-1}(D)`. Forward and inverse evaluation, the real differential,
//! both Jacobians and the Beltrami coefficient are exact (closed form or chain rule).

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::algebra::{Mat2, Point};
use crate::beltrami::{ellipticity_of_modulus, matrix_from_beltrami, BeltramiValue, EllipticMatrixField};
use crate::error::{Error, Result};

/// Boundary samples used to check that a composition is well defined.
pub const DOMAIN_SAMPLES: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapKind {
    AffineStretch,
    RadialPower,
    Mobius,
    Composition,
    Inverse,
}

/// Beltrami coefficient at a point. At the origin of a radial power map the
/// direction of `mu` is undefined; only its modulus is meaningful there.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeltramiSample {
    pub mu: BeltramiValue,
    pub direction_defined: bool,
}

enum Node {
    Stretch { a: f64, theta: f64 },
    Radial { gamma: f64 },
    Mobius { b: Complex64 },
    Compose { first: QcMap, second: QcMap },
    Inverse(QcMap),
}

/// An invertible planar quasiconformal map with exact derivative data.
#[derive(Clone)]
pub struct QcMap {
    node: Arc<Node>,
    qc_coefficient: f64,
}

impl fmt::Debug for QcMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "QcMap({:?}, K = {})", self.descriptor(), self.qc_coefficient)
    }
}

/// Affine map `rotation(theta) . diag(a, 1/a)`; unit Jacobian, constant dilatation.
pub fn make_affine_stretch(a: f64, theta: f64) -> Result<QcMap> {
    if !(a > 0.0) || !a.is_finite() || !theta.is_finite() {
        return Err(Error::InvalidParameter(format!("stretch factor a = {a} must be > 0")));
    }
    let k = (a * a).max(1.0 / (a * a));
    Ok(QcMap::from_node(Node::Stretch { a, theta }, k))
}

/// Radial self-map of the disc `z -> z |z|^(gamma - 1)`.
pub fn make_radial_power(gamma: f64) -> Result<QcMap> {
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(Error::InvalidParameter(format!("radial exponent gamma = {gamma} must be > 0")));
    }
    Ok(QcMap::from_node(Node::Radial { gamma }, gamma.max(1.0 / gamma)))
}

/// Disc automorphism `z -> (z - b) / (1 - conj(b) z)`.
pub fn make_mobius(b: Complex64) -> Result<QcMap> {
    if !(b.norm() < 1.0) {
        return Err(Error::InvalidParameter(format!("Mobius parameter |b| = {} must be < 1", b.norm())));
    }
    Ok(QcMap::from_node(Node::Mobius { b }, 1.0))
}

/// `second . first`. Fails if sampled boundary images of `first` leave the domain of `second`.
pub fn compose_maps(first: &QcMap, second: &QcMap) -> Result<QcMap> {
    for k in 0..DOMAIN_SAMPLES {
        let t = 2.0 * PI * k as f64 / DOMAIN_SAMPLES as f64;
        let on_circle = Complex64::from_polar(1.0, t);
        let image = first.forward(first.inverse(on_circle));
        let landed = second.forward(image);
        if !landed.norm().is_finite() || landed.norm() > 1.0 + 1e-9 {
            return Err(Error::DomainMismatch(format!(
                "image point {image} of the first map is outside the domain of the second (maps to |z| = {})",
                landed.norm()
            )));
        }
    }
    let k = first.qc_coefficient * second.qc_coefficient;
    Ok(QcMap::from_node(
        Node::Compose { first: first.clone(), second: second.clone() },
        k,
    ))
}

/// Inverse map; same quasiconformal coefficient.
pub fn invert_map(m: &QcMap) -> QcMap {
    if let Node::Inverse(inner) = m.node.as_ref() {
        return inner.clone();
    }
    QcMap::from_node(Node::Inverse(m.clone()), m.qc_coefficient)
}

/// The matrix field agreed with `m`, i.e. `A(w) = matrix_from_beltrami(mu(w))`.
pub fn matrix_field_of_map(m: &QcMap) -> Result<EllipticMatrixField> {
    let mut sup = 0.0f64;
    for z in disc_samples(12, 32) {
        let s = m.beltrami(m.inverse(z));
        sup = sup.max(s.mu.modulus());
    }
    let k = ellipticity_of_modulus(sup)?;
    let map = m.clone();
    EllipticMatrixField::from_fn(
        move |w| {
            let mu = map.beltrami(w).mu;
            matrix_from_beltrami(mu).expect("dilatation modulus < 1 by construction")
        },
        k,
        format!("preimage of the unit disc under {:?}", m.kind()),
    )
}

/// Polar sample grid of the open disc, used for sup estimates.
pub(crate) fn disc_samples(n_r: usize, n_theta: usize) -> impl Iterator<Item = Point> {
    (1..=n_r).flat_map(move |i| {
        let r = (i as f64 - 0.5) / n_r as f64;
        (0..n_theta).map(move |j| Complex64::from_polar(r, 2.0 * PI * (j as f64 + 0.25) / n_theta as f64))
    })
}

fn radial_differential(z: Point, gamma: f64) -> Mat2 {
    let r = z.norm();
    if r == 0.0 {
        let s = if gamma > 1.0 {
            0.0
        } else if gamma < 1.0 {
            f64::INFINITY
        } else {
            1.0
        };
        return Mat2::diag(s, s);
    }
    let scale = r.powf(gamma - 1.0);
    let (c, s) = (z.re / r, z.im / r);
    let g = gamma - 1.0;
    Mat2::new(
        scale * (1.0 + g * c * c),
        scale * g * c * s,
        scale * g * c * s,
        scale * (1.0 + g * s * s),
    )
}

fn radial_forward(z: Point, gamma: f64) -> Point {
    let r = z.norm();
    if r == 0.0 {
        return z;
    }
    z * r.powf(gamma - 1.0)
}

fn radial_jacobian(z: Point, gamma: f64) -> f64 {
    let r = z.norm();
    if gamma == 1.0 {
        return 1.0;
    }
    gamma * r.powf(2.0 * (gamma - 1.0))
}

fn beltrami_of_differential(d: &Mat2) -> Option<Complex64> {
    if !d.is_finite() {
        return None;
    }
    let (dz, dzbar) = d.wirtinger();
    if dz.norm() == 0.0 {
        return None;
    }
    Some(dzbar / dz)
}

impl QcMap {
    fn from_node(node: Node, qc_coefficient: f64) -> Self {
        QcMap { node: Arc::new(node), qc_coefficient }
    }

    pub fn identity() -> Self {
        make_affine_stretch(1.0, 0.0).expect("identity parameters are valid")
    }

    pub fn kind(&self) -> MapKind {
        match self.node.as_ref() {
            Node::Stretch { .. } => MapKind::AffineStretch,
            Node::Radial { .. } => MapKind::RadialPower,
            Node::Mobius { .. } => MapKind::Mobius,
            Node::Compose { .. } => MapKind::Composition,
            Node::Inverse(_) => MapKind::Inverse,
        }
    }

    pub fn qc_coefficient(&self) -> f64 {
        self.qc_coefficient
    }

    pub fn forward(&self, w: Point) -> Point {
        match self.node.as_ref() {
            Node::Stretch { a, theta } => {
                Complex64::new(a * w.re, w.im / a) * Complex64::from_polar(1.0, *theta)
            }
            Node::Radial { gamma } => radial_forward(w, *gamma),
            Node::Mobius { b } => (w - b) / (1.0 - b.conj() * w),
            Node::Compose { first, second } => second.forward(first.forward(w)),
            Node::Inverse(m) => m.inverse(w),
        }
    }

    pub fn inverse(&self, z: Point) -> Point {
        match self.node.as_ref() {
            Node::Stretch { a, theta } => {
                let u = z * Complex64::from_polar(1.0, -*theta);
                Complex64::new(u.re / a, u.im * a)
            }
            Node::Radial { gamma } => radial_forward(z, 1.0 / gamma),
            Node::Mobius { b } => (z + b) / (1.0 + b.conj() * z),
            Node::Compose { first, second } => first.inverse(second.inverse(z)),
            Node::Inverse(m) => m.forward(z),
        }
    }

    /// Real differential `D phi(w)`.
    pub fn differential(&self, w: Point) -> Mat2 {
        match self.node.as_ref() {
            Node::Stretch { a, theta } => Mat2::rotation(*theta) * Mat2::diag(*a, 1.0 / a),
            Node::Radial { gamma } => radial_differential(w, *gamma),
            Node::Mobius { b } => {
                let d = (1.0 - b.norm_sqr()) / (1.0 - b.conj() * w).powi(2);
                Mat2::from_complex(d)
            }
            Node::Compose { first, second } => second.differential(first.forward(w)) * first.differential(w),
            Node::Inverse(m) => m.inverse_differential(w),
        }
    }

    /// Real differential of the inverse map at `z`.
    pub fn inverse_differential(&self, z: Point) -> Mat2 {
        match self.node.as_ref() {
            Node::Stretch { a, theta } => Mat2::diag(1.0 / a, *a) * Mat2::rotation(-*theta),
            Node::Radial { gamma } => radial_differential(z, 1.0 / gamma),
            Node::Mobius { b } => {
                let d = (1.0 - b.norm_sqr()) / (1.0 + b.conj() * z).powi(2);
                Mat2::from_complex(d)
            }
            Node::Compose { first, second } => {
                first.inverse_differential(second.inverse(z)) * second.inverse_differential(z)
            }
            Node::Inverse(m) => m.differential(z),
        }
    }

    /// `J(w, phi)`.
    pub fn jac_forward(&self, w: Point) -> f64 {
        match self.node.as_ref() {
            Node::Stretch { .. } => 1.0,
            Node::Radial { gamma } => radial_jacobian(w, *gamma),
            Node::Mobius { .. } => self.differential(w).det(),
            Node::Compose { first, second } => first.jac_forward(w) * second.jac_forward(first.forward(w)),
            Node::Inverse(m) => m.jac_inverse(w),
        }
    }

    /// `J(z, phi^{-1})`.
    pub fn jac_inverse(&self, z: Point) -> f64 {
        match self.node.as_ref() {
            Node::Stretch { .. } => 1.0,
            Node::Radial { gamma } => radial_jacobian(z, 1.0 / gamma),
            Node::Mobius { .. } => self.inverse_differential(z).det(),
            Node::Compose { first, second } => {
                second.jac_inverse(z) * first.jac_inverse(second.inverse(z))
            }
            Node::Inverse(m) => m.jac_forward(z),
        }
    }

    /// Beltrami coefficient `phi_wbar / phi_w` at `w`.
    pub fn beltrami(&self, w: Point) -> BeltramiSample {
        match self.node.as_ref() {
            Node::Stretch { a, .. } => {
                let m = (a * a - 1.0) / (a * a + 1.0);
                BeltramiSample { mu: BeltramiValue::from_parts(m, 0.0).unwrap(), direction_defined: true }
            }
            Node::Radial { gamma } => {
                let modulus = (gamma - 1.0) / (gamma + 1.0);
                let r = w.norm();
                if r == 0.0 {
                    return BeltramiSample {
                        mu: BeltramiValue::from_parts(modulus.abs(), 0.0).unwrap(),
                        direction_defined: *gamma == 1.0,
                    };
                }
                let e2 = (w / r).powi(2);
                BeltramiSample { mu: BeltramiValue::new(e2 * modulus).unwrap(), direction_defined: true }
            }
            Node::Mobius { .. } => BeltramiSample { mu: BeltramiValue::ZERO, direction_defined: true },
            Node::Compose { .. } | Node::Inverse(_) => match beltrami_of_differential(&self.differential(w)) {
                Some(mu) => BeltramiSample {
                    mu: BeltramiValue::new(mu).unwrap_or_else(|_| {
                        BeltramiValue::new(mu / (mu.norm() * (1.0 + 1e-15))).unwrap()
                    }),
                    direction_defined: true,
                },
                None => {
                    // Degenerate differential (origin of a radial factor): modulus from a nearby point.
                    let nearby = w + Complex64::new(1e-9, 0.0);
                    let modulus = beltrami_of_differential(&self.differential(nearby))
                        .map(|m| m.norm())
                        .unwrap_or(0.0);
                    BeltramiSample {
                        mu: BeltramiValue::from_parts(modulus.min(1.0 - 1e-15), 0.0).unwrap(),
                        direction_defined: false,
                    }
                }
            },
        }
    }

    /// JSON-serializable description of this map.
    pub fn descriptor(&self) -> MapDescriptor {
        match self.node.as_ref() {
            Node::Stretch { a, theta } if *a == 1.0 && *theta == 0.0 => MapDescriptor::Identity,
            Node::Stretch { a, theta } => MapDescriptor::AffineStretch { a: *a, theta: *theta },
            Node::Radial { gamma } => MapDescriptor::RadialPower { gamma: *gamma },
            Node::Mobius { b } => MapDescriptor::Mobius { b: [b.re, b.im] },
            Node::Compose { first, second } => {
                let mut maps = match first.descriptor() {
                    MapDescriptor::Composition { maps } => maps,
                    d => vec![d],
                };
                match second.descriptor() {
                    MapDescriptor::Composition { maps: rest } => maps.extend(rest),
                    d => maps.push(d),
                }
                MapDescriptor::Composition { maps }
            }
            Node::Inverse(m) => MapDescriptor::Inverse { of: Box::new(m.descriptor()) },
        }
    }
}

/// Map description used in scenario files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MapDescriptor {
    Identity,
    AffineStretch {
        a: f64,
        #[serde(default)]
        theta: f64,
    },
    RadialPower {
        gamma: f64,
    },
    Mobius {
        b: [f64; 2],
    },
    /// Applied left to right: `maps[0]` first.
    Composition {
        maps: Vec<MapDescriptor>,
    },
    Inverse {
        of: Box<MapDescriptor>,
    },
}

impl MapDescriptor {
    pub fn build(&self) -> Result<QcMap> {
        match self {
            MapDescriptor::Identity => Ok(QcMap::identity()),
            MapDescriptor::AffineStretch { a, theta } => make_affine_stretch(*a, *theta),
            MapDescriptor::RadialPower { gamma } => make_radial_power(*gamma),
            MapDescriptor::Mobius { b } => make_mobius(Complex64::new(b[0], b[1])),
            MapDescriptor::Composition { maps } => {
                let mut iter = maps.iter();
                let first = iter
                    .next()
                    .ok_or_else(|| Error::InvalidParameter("empty composition list".into()))?;
                let mut acc = first.build()?;
                for d in iter {
                    acc = compose_maps(&acc, &d.build()?)?;
                }
                Ok(acc)
            }
            MapDescriptor::Inverse { of } => Ok(invert_map(&of.build()?)),
        }
    }
}

/// Matrix-field description used in scenario files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MatrixFieldDescriptor {
    Constant { a11: f64, a12: f64, a22: f64 },
    AgreedWith { map: MapDescriptor },
}

impl MatrixFieldDescriptor {
    pub fn build(&self) -> Result<EllipticMatrixField> {
        match self {
            MatrixFieldDescriptor::Constant { a11, a12, a22 } => {
                EllipticMatrixField::constant(crate::algebra::SymMat2::new(*a11, *a12, *a22))
            }
            MatrixFieldDescriptor::AgreedWith { map } => matrix_field_of_map(&map.build()?),
        }
    }
}
