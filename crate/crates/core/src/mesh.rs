//! Structured triangulations of the unit disc and their images under maps.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::io::{BufRead, Write};

use num_complex::Complex64;

use crate::algebra::Point;
use crate::error::{Error, Result};
use crate::maps::QcMap;

/// Smallest signed area accepted for a mapped triangle.
pub const MIN_TRIANGLE_AREA: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq)]
pub struct TriMesh {
    pub vertices: Vec<Point>,
    /// Counter-clockwise vertex triples.
    pub triangles: Vec<[usize; 3]>,
    pub boundary_flags: Vec<bool>,
    /// Longest edge length.
    pub mesh_size_h: f64,
}

/// Polar mesh of the unit disc: rings at radii `i / n_r`, `n_theta` sectors.
///
/// Produces `1 + n_r n_theta` vertices and `n_theta (2 n_r - 1)` triangles.
pub fn build_disc_mesh(n_r: usize, n_theta: usize) -> Result<TriMesh> {
    if n_r < 1 || n_theta < 3 {
        return Err(Error::InvalidParameter(format!(
            "disc mesh needs n_r >= 1 and n_theta >= 3, got ({n_r}, {n_theta})"
        )));
    }
    let radii: Vec<f64> = (1..=n_r).map(|i| i as f64 / n_r as f64).collect();
    disc_mesh_with_radii(&radii, n_theta)
}

/// Same as [`build_disc_mesh`] with one extra ring at radius `1 / (2 n_r)`.
/// Used for weights that are singular at the origin.
pub fn build_disc_mesh_refined_center(n_r: usize, n_theta: usize) -> Result<TriMesh> {
    if n_r < 1 || n_theta < 3 {
        return Err(Error::InvalidParameter(format!(
            "disc mesh needs n_r >= 1 and n_theta >= 3, got ({n_r}, {n_theta})"
        )));
    }
    let mut radii = vec![0.5 / n_r as f64];
    radii.extend((1..=n_r).map(|i| i as f64 / n_r as f64));
    disc_mesh_with_radii(&radii, n_theta)
}

/// Polar mesh with the given increasing ring radii; the last ring is the unit circle.
pub fn disc_mesh_with_radii(radii: &[f64], n_theta: usize) -> Result<TriMesh> {
    if radii.is_empty() || n_theta < 3 {
        return Err(Error::InvalidParameter("need at least one ring and three sectors".into()));
    }
    if radii.windows(2).any(|w| w[1] <= w[0]) || radii[0] <= 0.0 {
        return Err(Error::InvalidParameter("ring radii must be positive and increasing".into()));
    }
    let n_rings = radii.len();
    let mut vertices = Vec::with_capacity(1 + n_rings * n_theta);
    vertices.push(Complex64::new(0.0, 0.0));
    for &r in radii {
        for j in 0..n_theta {
            vertices.push(Complex64::from_polar(r, 2.0 * PI * j as f64 / n_theta as f64));
        }
    }
    let last = *radii.last().unwrap();
    let boundary_flags = (0..vertices.len()).map(|v| v > (n_rings - 1) * n_theta && last == 1.0).collect();
    let ring = |i: usize, j: usize| 1 + i * n_theta + (j % n_theta);

    let mut triangles = Vec::with_capacity(n_theta * (2 * n_rings - 1));
    for j in 0..n_theta {
        triangles.push([0, ring(0, j), ring(0, j + 1)]);
    }
    for i in 0..n_rings - 1 {
        for j in 0..n_theta {
            triangles.push([ring(i, j), ring(i + 1, j), ring(i + 1, j + 1)]);
            triangles.push([ring(i, j), ring(i + 1, j + 1), ring(i, j + 1)]);
        }
    }
    let mut mesh = TriMesh { vertices, triangles, boundary_flags, mesh_size_h: 0.0 };
    mesh.mesh_size_h = mesh.max_edge_length();
    Ok(mesh)
}

/// Maps every vertex by `map.forward`, keeping connectivity and boundary flags.
pub fn pushforward_mesh(mesh: &TriMesh, map: &QcMap) -> Result<TriMesh> {
    let vertices: Vec<Point> = mesh.vertices.iter().map(|&z| map.forward(z)).collect();
    let mut out = TriMesh {
        vertices,
        triangles: mesh.triangles.clone(),
        boundary_flags: mesh.boundary_flags.clone(),
        mesh_size_h: 0.0,
    };
    for t in 0..out.triangles.len() {
        let area = out.signed_area(t);
        if !(area > MIN_TRIANGLE_AREA) {
            return Err(Error::DegenerateTriangle { index: t, area });
        }
    }
    out.mesh_size_h = out.max_edge_length();
    Ok(out)
}

impl TriMesh {
    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn corners(&self, t: usize) -> [Point; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn signed_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.corners(t);
        let (u, v) = (b - a, c - a);
        0.5 * (u.re * v.im - u.im * v.re)
    }

    pub fn centroid(&self, t: usize) -> Point {
        let [a, b, c] = self.corners(t);
        (a + b + c) / 3.0
    }

    pub fn total_area(&self) -> f64 {
        (0..self.num_triangles()).map(|t| self.signed_area(t)).sum()
    }

    fn max_edge_length(&self) -> f64 {
        self.triangles
            .iter()
            .flat_map(|&[a, b, c]| [(a, b), (b, c), (c, a)])
            .map(|(p, q)| (self.vertices[p] - self.vertices[q]).norm())
            .fold(0.0, f64::max)
    }

    /// Structural checks: indices in range, every vertex used, positive orientation.
    pub fn validate(&self) -> Result<()> {
        let nv = self.num_vertices();
        let mut used = vec![false; nv];
        for (t, tri) in self.triangles.iter().enumerate() {
            for &v in tri {
                if v >= nv {
                    return Err(Error::InvalidParameter(format!("triangle {t} references vertex {v}")));
                }
                used[v] = true;
            }
            let area = self.signed_area(t);
            if !(area > 0.0) {
                return Err(Error::DegenerateTriangle { index: t, area });
            }
        }
        if let Some(v) = used.iter().position(|u| !u) {
            return Err(Error::InvalidParameter(format!("vertex {v} belongs to no triangle")));
        }
        if self.boundary_flags.len() != nv {
            return Err(Error::DimensionMismatch { expected: nv, got: self.boundary_flags.len() });
        }
        Ok(())
    }

    /// Writes the plain-text node/element format:
    /// `nv nt`, then `x y flag` per vertex, then zero-based `i j k` per triangle.
    pub fn write_text<W: Write>(&self, mut out: W) -> Result<()> {
        let mut s = String::new();
        writeln!(s, "{} {}", self.num_vertices(), self.num_triangles()).unwrap();
        for (v, flag) in self.vertices.iter().zip(&self.boundary_flags) {
            writeln!(s, "{} {} {}", v.re, v.im, u8::from(*flag)).unwrap();
        }
        for [a, b, c] in &self.triangles {
            writeln!(s, "{a} {b} {c}").unwrap();
        }
        out.write_all(s.as_bytes())?;
        Ok(())
    }

    pub fn read_text<R: BufRead>(input: R) -> Result<TriMesh> {
        let mut lines = input.lines();
        let mut next = |what: &str| -> Result<String> {
            lines
                .next()
                .ok_or_else(|| Error::Parse(format!("unexpected end of mesh file reading {what}")))?
                .map_err(Error::from)
        };
        let header = next("header")?;
        let counts: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| Error::Parse(format!("bad header {header:?}"))))
            .collect::<Result<_>>()?;
        let [nv, nt] = counts[..] else {
            return Err(Error::Parse(format!("header must be `nv nt`, got {header:?}")));
        };
        let mut vertices = Vec::with_capacity(nv);
        let mut boundary_flags = Vec::with_capacity(nv);
        for i in 0..nv {
            let line = next("vertex")?;
            let f: Vec<&str> = line.split_whitespace().collect();
            let parse = |s: &str| s.parse::<f64>().map_err(|_| Error::Parse(format!("vertex line {}: {line:?}", i + 2)));
            if f.len() != 3 {
                return Err(Error::Parse(format!("vertex line {}: {line:?}", i + 2)));
            }
            vertices.push(Complex64::new(parse(f[0])?, parse(f[1])?));
            boundary_flags.push(f[2] == "1");
        }
        let mut triangles = Vec::with_capacity(nt);
        for i in 0..nt {
            let line = next("triangle")?;
            let idx: Vec<usize> = line
                .split_whitespace()
                .map(|t| t.parse().map_err(|_| Error::Parse(format!("triangle line {}: {line:?}", nv + i + 2))))
                .collect::<Result<_>>()?;
            let [a, b, c] = idx[..] else {
                return Err(Error::Parse(format!("triangle line {}: {line:?}", nv + i + 2)));
            };
            triangles.push([a, b, c]);
        }
        let mut mesh = TriMesh { vertices, triangles, boundary_flags, mesh_size_h: 0.0 };
        mesh.mesh_size_h = mesh.max_edge_length();
        Ok(mesh)
    }
}
