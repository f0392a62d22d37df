//! Neumann eigenvalues of `-div(A grad g)` under quasiconformal change of variables.
//!
//! The crate transfers the Neumann problem for a unit-determinant elliptic matrix
//! field `A` on a domain `Omega` to a weighted Neumann problem on the unit disc,
//! solves both with P1 finite elements, and evaluates the functionals that bound
//! how far the spectra of two such problems can drift apart.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod algebra;
pub mod beltrami;
pub mod eigen;
pub mod error;
pub mod fem;
pub mod functionals;
pub mod lab;
pub mod ldl;
pub mod maps;
pub mod mesh;
pub mod quadrature;
pub mod sparse;
pub mod weight;

pub use algebra::{Mat2, Point, SymMat2};
pub use beltrami::{beltrami_from_matrix, ellipticity_of, matrix_from_beltrami, BeltramiValue, EllipticMatrixField};
pub use eigen::{dense_generalized_eigs, generalized_eigs, Spectrum};
pub use error::{Error, Result};
pub use fem::{assemble_mass, assemble_stiffness, Density, ScalarField};
pub use maps::{
    compose_maps, invert_map, make_affine_stretch, make_mobius, make_radial_power, matrix_field_of_map, MapDescriptor,
    QcMap,
};
pub use mesh::{build_disc_mesh, pushforward_mesh, TriMesh};
pub use quadrature::{polar_quadrature, Integrability, QuadratureResult};
pub use sparse::SparseSymMatrix;
pub use weight::{weight_of_map, Weight};
