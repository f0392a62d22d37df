//! P1 finite elements: stiffness and weighted mass assembly, discrete norms and means.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use crate::algebra::{Point, SymMat2};
use crate::beltrami::EllipticMatrixField;
use crate::error::{Error, Result};
use crate::maps::{invert_map, matrix_field_of_map, QcMap};
use crate::mesh::{build_disc_mesh, pushforward_mesh, TriMesh};
use crate::quadrature::{polar_quadrature, Integrability};
use crate::sparse::SparseSymMatrix;
use crate::weight::Weight;

/// Density of the mass matrix.
#[derive(Debug, Clone, Copy)]
pub enum Density<'a> {
    Unit,
    Weight(&'a Weight),
}

type PointFn = dyn Fn(Point) -> f64 + Send + Sync;

/// A scalar function given in closed form or by nodal values of a P1 field.
#[derive(Clone)]
pub enum ScalarField {
    Closed(Arc<PointFn>),
    Nodal(Vec<f64>),
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScalarField::Closed(_) => f.write_str("ScalarField::Closed(..)"),
            ScalarField::Nodal(v) => write!(f, "ScalarField::Nodal({} values)", v.len()),
        }
    }
}

impl ScalarField {
    pub fn closed<F>(f: F) -> Self
    where
        F: Fn(Point) -> f64 + Send + Sync + 'static,
    {
        ScalarField::Closed(Arc::new(f))
    }

    pub fn nodal(values: Vec<f64>) -> Self {
        ScalarField::Nodal(values)
    }

    /// Exact value of a closed-form field; `None` for nodal fields.
    pub fn eval(&self, p: Point) -> Option<f64> {
        match self {
            ScalarField::Closed(f) => Some(f(p)),
            ScalarField::Nodal(_) => None,
        }
    }

    /// Values at the mesh vertices.
    pub fn nodal_values(&self, mesh: &TriMesh) -> Result<Vec<f64>> {
        match self {
            ScalarField::Closed(f) => Ok(mesh.vertices.iter().map(|&p| f(p)).collect()),
            ScalarField::Nodal(v) if v.len() == mesh.num_vertices() => Ok(v.clone()),
            ScalarField::Nodal(v) => Err(Error::DimensionMismatch { expected: mesh.num_vertices(), got: v.len() }),
        }
    }

    /// P1 interpolant of the field on `mesh`, evaluated at `p`.
    pub fn interpolate(&self, mesh: &TriMesh, p: Point) -> Result<f64> {
        let values = self.nodal_values(mesh)?;
        for (t, &[a, b, c]) in mesh.triangles.iter().enumerate() {
            let bary = barycentric(mesh, t, p);
            if bary.iter().all(|&l| l >= -1e-12) {
                return Ok(bary[0] * values[a] + bary[1] * values[b] + bary[2] * values[c]);
            }
        }
        Err(Error::InvalidParameter(format!("point {p} lies outside the mesh")))
    }

    /// Finite-difference gradient of a closed-form field, accurate to fourth order.
    pub fn gradient(&self, p: Point) -> Option<[f64; 2]> {
        const H: f64 = 1e-3;
        let f = match self {
            ScalarField::Closed(f) => f,
            ScalarField::Nodal(_) => return None,
        };
        // Fourth-order central difference.
        let diff = |e: Point| (8.0 * (f(p + e) - f(p - e)) - f(p + 2.0 * e) + f(p - 2.0 * e)) / (12.0 * H);
        Some([diff(Point::new(H, 0.0)), diff(Point::new(0.0, H))])
    }
}

fn barycentric(mesh: &TriMesh, t: usize, p: Point) -> [f64; 3] {
    let [a, b, c] = mesh.corners(t);
    let area2 = 2.0 * mesh.signed_area(t);
    let cross = |u: Point, v: Point| u.re * v.im - u.im * v.re;
    [cross(b - p, c - p) / area2, cross(c - p, a - p) / area2, cross(a - p, b - p) / area2]
}

/// Gradients of the three barycentric coordinates and the signed area.
fn p1_gradients(mesh: &TriMesh, t: usize) -> ([[f64; 2]; 3], f64) {
    let p = mesh.corners(t);
    let area = mesh.signed_area(t);
    let mut g = [[0.0; 2]; 3];
    for (i, gi) in g.iter_mut().enumerate() {
        let (pj, pk) = (p[(i + 1) % 3], p[(i + 2) % 3]);
        *gi = [(pj.im - pk.im) / (2.0 * area), (pk.re - pj.re) / (2.0 * area)];
    }
    (g, area)
}

/// Element stiffness `area * <A grad l_i, grad l_j>`.
pub fn element_stiffness(mesh: &TriMesh, t: usize, a: SymMat2) -> Result<[[f64; 3]; 3]> {
    let (g, area) = p1_gradients(mesh, t);
    if !(area > 0.0) {
        return Err(Error::DegenerateTriangle { index: t, area });
    }
    let mut k = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            k[i][j] = area * a.bilinear(g[i], g[j]);
        }
    }
    Ok(k)
}

fn scatter(n: usize, mesh: &TriMesh, elements: &[[[f64; 3]; 3]]) -> Result<SparseSymMatrix> {
    let triplets = mesh.triangles.iter().zip(elements).flat_map(|(tri, ke)| {
        (0..3).flat_map(move |i| (0..3).filter(move |&j| tri[j] <= tri[i]).map(move |j| (tri[i], tri[j], ke[i][j])))
    });
    SparseSymMatrix::from_triplets(n, triplets)
}

/// Stiffness matrix of `-div(A grad)` with `A` sampled at triangle centroids.
pub fn assemble_stiffness(mesh: &TriMesh, a: &EllipticMatrixField) -> Result<SparseSymMatrix> {
    let elements: Vec<[[f64; 3]; 3]> = (0..mesh.num_triangles())
        .into_par_iter()
        .map(|t| element_stiffness(mesh, t, a.eval_checked(mesh.centroid(t))?))
        .collect::<Result<_>>()?;
    scatter(mesh.num_vertices(), mesh, &elements)
}

/// Element mass matrix; exact for the unit density, midedge rule otherwise.
pub fn element_mass(mesh: &TriMesh, t: usize, density: Density<'_>) -> Result<[[f64; 3]; 3]> {
    let area = mesh.signed_area(t);
    if !(area > 0.0) {
        return Err(Error::DegenerateTriangle { index: t, area });
    }
    match density {
        Density::Unit => {
            let mut m = [[area / 12.0; 3]; 3];
            (0..3).for_each(|i| m[i][i] = area / 6.0);
            Ok(m)
        }
        Density::Weight(w) => {
            let p = mesh.corners(t);
            let mut m = [[0.0; 3]; 3];
            // Midpoint of edge (i, i+1) has barycentric coordinates 1/2 at i and i+1.
            for i in 0..3 {
                let j = (i + 1) % 3;
                let mid = 0.5 * (p[i] + p[j]);
                let h = w.eval(mid);
                if !(h > 0.0 && h.is_finite()) {
                    return Err(Error::NonpositiveWeight { value: h, x: mid.re, y: mid.im });
                }
                let c = area / 3.0 * h * 0.25;
                m[i][i] += c;
                m[j][j] += c;
                m[i][j] += c;
                m[j][i] += c;
            }
            Ok(m)
        }
    }
}

/// Mass matrix of `int density * l_i * l_j`.
pub fn assemble_mass(mesh: &TriMesh, density: Density<'_>) -> Result<SparseSymMatrix> {
    let elements: Vec<[[f64; 3]; 3]> = (0..mesh.num_triangles())
        .into_par_iter()
        .map(|t| element_mass(mesh, t, density))
        .collect::<Result<_>>()?;
    scatter(mesh.num_vertices(), mesh, &elements)
}

/// Discrete `h`-weighted mean of `f` over the disc mesh.
pub fn weighted_mean(mesh: &TriMesh, h: &Weight, f: &ScalarField) -> Result<f64> {
    let m = assemble_mass(mesh, Density::Weight(h))?;
    let x = f.nodal_values(mesh)?;
    let total: f64 = m.row_sums().iter().sum();
    let mx = m.mul_vec(&x);
    Ok(mx.iter().sum::<f64>() / total)
}

/// `sqrt(x^T K x)` for the nodal values of `f` and the stiffness of `A`.
pub fn sobolev_seminorm(mesh: &TriMesh, f: &ScalarField, a: &EllipticMatrixField) -> Result<f64> {
    let k = assemble_stiffness(mesh, a)?;
    let x = f.nodal_values(mesh)?;
    Ok(k.quad_form(&x).max(0.0).sqrt())
}

/// Both sides of the composition isometry for a closed-form `f` on the disc.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsometryCheck {
    /// Discrete seminorm of `f o phi` in `L^{1,2}(Omega, A)` on the mapped mesh.
    pub lhs: f64,
    /// Seminorm of `f` in `L^{1,2}(D)` by adaptive quadrature.
    pub rhs: f64,
    /// `|lhs - rhs| / rhs`, zero when both vanish.
    pub rel_err: f64,
}

/// Compares `||f o phi | L^{1,2}(Omega, A)||` with `||f | L^{1,2}(D)||`, where `A` is
/// the field agreed with `phi: Omega -> D`.
pub fn isometry_check(f: &ScalarField, phi: &QcMap, n_r: usize, n_theta: usize) -> Result<IsometryCheck> {
    if matches!(f, ScalarField::Nodal(_)) {
        return Err(Error::InvalidParameter("isometry check needs a closed-form field".into()));
    }
    let disc = build_disc_mesh(n_r, n_theta)?;
    let omega = pushforward_mesh(&disc, &invert_map(phi))?;
    let a = matrix_field_of_map(phi)?;
    // Nodal values of f o phi at the mapped vertices are the values of f at the disc vertices.
    let pulled = ScalarField::nodal(f.nodal_values(&disc)?);
    let lhs = sobolev_seminorm(&omega, &pulled, &a)?;

    let energy = polar_quadrature(
        |z| {
            let [gx, gy] = f.gradient(z).expect("closed-form field");
            gx * gx + gy * gy
        },
        1e-10,
    );
    match energy.status() {
        Integrability::Finite => {}
        Integrability::Divergent => return Err(Error::Divergent(format!("Dirichlet energy of f: {energy:?}"))),
        Integrability::Undetermined => {
            return Err(Error::NoConvergence {
                iterations: energy.levels_used as usize,
                residual: energy.error_estimate,
            })
        }
    }
    let rhs = energy.value.max(0.0).sqrt();
    let rel_err = if rhs == 0.0 && lhs < 1e-6 { 0.0 } else { (lhs - rhs).abs() / rhs };
    Ok(IsometryCheck { lhs, rhs, rel_err })
}

/// `x^T K x / x^T M x` with the convention `0/0 = 0`.
pub fn rayleigh_quotient(k: &SparseSymMatrix, m: &SparseSymMatrix, x: &[f64]) -> Result<f64> {
    let num = k.quad_form(x);
    let den = m.quad_form(x);
    if den > 0.0 {
        return Ok(num / den);
    }
    if num > 0.0 {
        return Err(Error::ZeroMassVector);
    }
    Ok(0.0)
}
