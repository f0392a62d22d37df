use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use qcspectral::eigen::generalized_eigs;
use qcspectral::fem::{assemble_mass, assemble_stiffness, Density};
use qcspectral::functionals::{d_s_distance, phi_beta};
use qcspectral::ldl::factorize;
use qcspectral::maps::{invert_map, make_radial_power, matrix_field_of_map};
use qcspectral::mesh::{build_disc_mesh, pushforward_mesh};
use qcspectral::weight::{weight_of_map, Weight};
use qcspectral::EllipticMatrixField;

const MESHES: [(usize, usize); 3] = [(8, 32), (16, 64), (32, 128)];

fn assembly(c: &mut Criterion) {
    let phi = make_radial_power(1.5).unwrap();
    let a = matrix_field_of_map(&phi).unwrap();
    let mut group = c.benchmark_group("assembly");
    for (n_r, n_theta) in MESHES {
        let omega = pushforward_mesh(&build_disc_mesh(n_r, n_theta).unwrap(), &invert_map(&phi)).unwrap();
        let id = format!("{n_r}x{n_theta}");
        group.bench_with_input(BenchmarkId::new("stiffness", &id), &omega, |b, m| {
            b.iter(|| assemble_stiffness(black_box(m), &a).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("mass", &id), &omega, |b, m| {
            b.iter(|| assemble_mass(black_box(m), Density::Unit).unwrap())
        });
    }
    group.finish();
}

fn factorization(c: &mut Criterion) {
    let mut group = c.benchmark_group("ldl");
    for (n_r, n_theta) in MESHES {
        let mesh = build_disc_mesh(n_r, n_theta).unwrap();
        let k = assemble_stiffness(&mesh, &EllipticMatrixField::identity()).unwrap();
        let m = assemble_mass(&mesh, Density::Unit).unwrap();
        let s = k.linear_combination(1.0, &m, 5.0).unwrap();
        group.bench_with_input(BenchmarkId::new("factorize", format!("{n_r}x{n_theta}")), &s, |b, s| {
            b.iter(|| factorize(black_box(s)).unwrap())
        });
    }
    group.finish();
}

fn eigensolve(c: &mut Criterion) {
    let h = weight_of_map(&invert_map(&make_radial_power(1.5).unwrap())).unwrap();
    let mut group = c.benchmark_group("eigs");
    group.sample_size(10);
    for (n_r, n_theta) in MESHES {
        let mesh = build_disc_mesh(n_r, n_theta).unwrap();
        let k = assemble_stiffness(&mesh, &EllipticMatrixField::identity()).unwrap();
        let m = assemble_mass(&mesh, Density::Weight(&h)).unwrap();
        group.bench_function(BenchmarkId::new("six_modes", format!("{n_r}x{n_theta}")), |b| {
            b.iter(|| generalized_eigs(black_box(&k), &m, 6, 1e-8).unwrap())
        });
    }
    group.finish();
}

fn functionals(c: &mut Criterion) {
    let id = make_radial_power(1.0).unwrap();
    let phi = invert_map(&make_radial_power(1.5).unwrap());
    let h2 = weight_of_map(&phi).unwrap();
    let mut group = c.benchmark_group("functionals");
    group.bench_function("phi_beta", |b| b.iter(|| phi_beta(black_box(&id), &phi, 2.0, 1e-8).unwrap()));
    group.bench_function("d_s", |b| b.iter(|| d_s_distance(&Weight::unit(), black_box(&h2), 4.0 / 3.0, 1e-8).unwrap()));
    group.finish();
}

criterion_group!(benches, assembly, factorization, eigensolve, functionals);
criterion_main!(benches);
