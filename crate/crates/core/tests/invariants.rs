use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;
use qcspectral::fem::{assemble_mass, assemble_stiffness, rayleigh_quotient, Density};
use qcspectral::functionals::{d_s_distance, phi_beta};
use qcspectral::lab::disc_problem;
use qcspectral::{
    build_disc_mesh, compose_maps, generalized_eigs, invert_map, make_affine_stretch, make_mobius, make_radial_power,
    matrix_field_of_map, polar_quadrature, pushforward_mesh, weight_of_map, EllipticMatrixField, Point, QcMap,
};

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig { cases, ..ProptestConfig::default() }
}

fn any_map() -> impl Strategy<Value = QcMap> {
    let stretch = (1.0f64..2.5, 0.0f64..PI).prop_map(|(a, t)| make_affine_stretch(a, t).unwrap());
    let radial = (0.5f64..2.0).prop_map(|g| make_radial_power(g).unwrap());
    let mobius = (0.0f64..0.6, 0.0f64..2.0 * PI).prop_map(|(r, t)| make_mobius(Complex64::from_polar(r, t)).unwrap());
    let composed = (1.0f64..2.0, 0.0f64..0.5).prop_map(|(a, r)| {
        let m = make_mobius(Complex64::new(r, 0.5 * r)).unwrap();
        compose_maps(&make_affine_stretch(a, 0.3).unwrap(), &m).unwrap()
    });
    let inverted = (0.6f64..1.8).prop_map(|g| invert_map(&make_radial_power(g).unwrap()));
    prop_oneof![stretch, radial, mobius, composed, inverted]
}

/// Maps of the disc onto itself, which can follow any map in a composition.
fn disc_self_map() -> impl Strategy<Value = QcMap> {
    let radial = (0.5f64..2.0).prop_map(|g| make_radial_power(g).unwrap());
    let mobius = (0.0f64..0.6, 0.0f64..2.0 * PI).prop_map(|(r, t)| make_mobius(Complex64::from_polar(r, t)).unwrap());
    prop_oneof![radial, mobius]
}

/// A disc point away from the origin, where radial maps are smooth.
fn disc_point() -> impl Strategy<Value = Point> {
    (0.1f64..0.95, 0.0f64..2.0 * PI).prop_map(|(r, t)| Complex64::from_polar(r, t))
}

fn unit_vector() -> impl Strategy<Value = [f64; 2]> {
    (0.0f64..2.0 * PI).prop_map(|t| [t.cos(), t.sin()])
}

fn random_vector(n: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-1.0f64..1.0, n)
}

fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

proptest! {
    #![proptest_config(config(64))]

    #[test]
    fn map_identities(phi in any_map(), z in disc_point()) {
        let w = phi.inverse(z);
        prop_assert!((phi.forward(w) - z).norm() < 1e-12);
        prop_assert!((phi.inverse(phi.forward(w)) - w).norm() < 1e-12);
        prop_assert!((phi.jac_forward(w) * phi.jac_inverse(z) - 1.0).abs() < 1e-10);

        let d = phi.differential(w);
        let norm = d.operator_norm();
        prop_assert!(norm * norm <= phi.qc_coefficient() * phi.jac_forward(w).abs() * (1.0 + 1e-10));
        prop_assert!((d.det() - phi.jac_forward(w)).abs() < 1e-10 * d.det().abs().max(1.0));

        let h = 1e-6;
        for (j, e) in [Complex64::new(h, 0.0), Complex64::new(0.0, h)].into_iter().enumerate() {
            let fd = (phi.forward(w + e) - phi.forward(w - e)) / (2.0 * h);
            prop_assert!((fd.re - d.0[0][j]).abs() < 1e-6, "column {}: {} vs {}", j, fd.re, d.0[0][j]);
            prop_assert!((fd.im - d.0[1][j]).abs() < 1e-6, "column {}: {} vs {}", j, fd.im, d.0[1][j]);
        }
    }

    #[test]
    fn chain_rule_for_compositions(a in any_map(), b in disc_self_map(), z in disc_point()) {
        let c = compose_maps(&a, &b).unwrap();
        let w = a.inverse(z);
        let expected = b.differential(z) * a.differential(w);
        let got = c.differential(w);
        for i in 0..2 {
            for j in 0..2 {
                prop_assert!((got.0[i][j] - expected.0[i][j]).abs() < 1e-10 * expected.operator_norm().max(1.0));
            }
        }
        prop_assert!((c.jac_forward(w) - a.jac_forward(w) * b.jac_forward(z)).abs() < 1e-10 * c.jac_forward(w).abs().max(1.0));
        prop_assert!((c.inverse(c.forward(w)) - w).norm() < 1e-11);
    }

    #[test]
    fn agreed_matrix_field_is_unimodular_and_elliptic(phi in any_map(), z in disc_point(), xi in unit_vector()) {
        let a = matrix_field_of_map(&phi).unwrap();
        let w = phi.inverse(z);
        let m = a.eval(w);
        prop_assert!((m.det() - 1.0).abs() < 1e-12);
        prop_assert!(a.satisfies_uec(w, xi, 1e-12));
    }
}

proptest! {
    #![proptest_config(config(24))]

    #[test]
    fn stiffness_is_psd_with_constant_kernel(phi in any_map(), x in random_vector(65)) {
        let disc = build_disc_mesh(4, 16).unwrap();
        let omega = pushforward_mesh(&disc, &invert_map(&phi)).unwrap();
        let k = assemble_stiffness(&omega, &matrix_field_of_map(&phi).unwrap()).unwrap();
        prop_assert_eq!(k.dim(), x.len());
        prop_assert!(k.quad_form(&x) >= -1e-10 * norm2(&x));
        let scale = k.diagonal().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        prop_assert!(k.row_sums().iter().all(|s| s.abs() <= 1e-10 * scale));
    }

    #[test]
    fn weighted_mass_is_positive_definite(gamma in 0.6f64..2.0, x in random_vector(65)) {
        let disc = build_disc_mesh(4, 16).unwrap();
        let h = weight_of_map(&invert_map(&make_radial_power(gamma).unwrap())).unwrap();
        let m = assemble_mass(&disc, Density::Weight(&h)).unwrap();
        prop_assert!(m.quad_form(&x) > 0.0);
        let min_diag = m.diagonal().iter().fold(f64::INFINITY, |a, &b| a.min(b));
        prop_assert!(min_diag > 0.0);
    }

    #[test]
    fn ellipticity_transfers_to_stiffness(a in 1.0f64..3.0, theta in 0.0f64..PI, x in random_vector(65)) {
        let phi = make_affine_stretch(a, theta).unwrap();
        let field = matrix_field_of_map(&phi).unwrap();
        let k_const = field.ellipticity_k();
        let disc = build_disc_mesh(4, 16).unwrap();
        let k_a = assemble_stiffness(&disc, &field).unwrap().quad_form(&x);
        let k_i = assemble_stiffness(&disc, &EllipticMatrixField::identity()).unwrap().quad_form(&x);
        prop_assert!(k_a >= k_i / k_const * (1.0 - 1e-12) - 1e-14);
        prop_assert!(k_a <= k_i * k_const * (1.0 + 1e-12) + 1e-14);
    }
}

proptest! {
    #![proptest_config(config(8))]

    #[test]
    fn d_s_is_symmetric(g1 in 0.8f64..2.0, g2 in 0.8f64..2.0, beta in 1.5f64..4.0) {
        let h1 = weight_of_map(&invert_map(&make_radial_power(g1).unwrap())).unwrap();
        let h2 = weight_of_map(&invert_map(&make_radial_power(g2).unwrap())).unwrap();
        let s = 2.0 * beta / (beta + 1.0);
        let ab = d_s_distance(&h1, &h2, s, 1e-10).unwrap().value;
        let ba = d_s_distance(&h2, &h1, s, 1e-10).unwrap().value;
        prop_assert!((ab - ba).abs() <= 1e-10 * ab.max(1.0));
    }

    #[test]
    // On this range (2 gamma - 2)(beta - 1) < 2, so every pair is integrable.
    fn phi_beta_lower_bound(g1 in 1.0f64..1.5, g2 in 1.0f64..1.5, beta in 1.5f64..2.5) {
        let m1 = invert_map(&make_radial_power(g1).unwrap());
        let m2 = compose_maps(&make_mobius(Complex64::new(0.2, 0.1)).unwrap(), &invert_map(&make_radial_power(g2).unwrap())).unwrap();
        let area1 = weight_of_map(&m1).unwrap().mass();
        let area2 = weight_of_map(&m2).unwrap().mass();
        let same = phi_beta(&m1, &m1, beta, 1e-10).unwrap();
        prop_assert!((same.value - area1.powf(1.0 / (2.0 * beta))).abs() < 1e-8);
        let pair = phi_beta(&m1, &m2, beta, 1e-8).unwrap();
        prop_assert!(pair.is_finite());
        prop_assert!(pair.value >= area1.max(area2).powf(1.0 / (2.0 * beta)) * (1.0 - 1e-8));
    }

    #[test]
    fn converged_quadrature_meets_its_tolerance(power in -1.8f64..3.0, tol_exp in 6i32..11) {
        let tol = 10f64.powi(-tol_exp);
        let q = polar_quadrature(|z| z.norm().powf(power), tol);
        prop_assert!(q.converged);
        prop_assert!(q.error_estimate <= tol * q.value.abs().max(1.0));
        let exact = 2.0 * PI / (power + 2.0);
        prop_assert!((q.value - exact).abs() <= 10.0 * tol * exact.max(1.0), "{} vs {}", q.value, exact);
    }

    #[test]
    fn spectrum_invariants_and_min_max(
        gamma in 0.8f64..2.0,
        coeffs in proptest::collection::vec(-1.0f64..1.0, 5),
        raw in random_vector(145),
    ) {
        let disc = build_disc_mesh(6, 24).unwrap();
        let h = weight_of_map(&invert_map(&make_radial_power(gamma).unwrap())).unwrap();
        let (k, m) = disc_problem(&disc, &h).unwrap();
        prop_assert_eq!(k.dim(), raw.len());
        let tol = 1e-10;
        let spec = generalized_eigs(&k, &m, 5, tol).unwrap();
        let mu = &spec.eigenvalues;
        prop_assert!(mu.windows(2).all(|p| p[0] <= p[1]));
        prop_assert!(mu[0] >= -1e-8 && mu[0] <= 1e-6 * mu[1].max(1.0));
        prop_assert!(spec.residuals.iter().all(|&r| r <= tol));

        let vecs = &spec.eigenvectors;
        for i in 0..vecs.len() {
            let mi = m.mul_vec(&vecs[i]);
            for (j, vj) in vecs.iter().enumerate() {
                let ip: f64 = mi.iter().zip(vj).map(|(a, b)| a * b).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                prop_assert!((ip - want).abs() < 1e-8, "<v{}, v{}>_M = {}", i, j, ip);
            }
        }
        let first = &vecs[0];
        let mean = first.iter().sum::<f64>() / first.len() as f64;
        let sd = (first.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / first.len() as f64).sqrt();
        prop_assert!(sd <= 1e-6 * mean.abs());

        // Span of the first five eigenvectors: quotient at most mu_5.
        let n = raw.len();
        let combo: Vec<f64> = (0..n).map(|i| coeffs.iter().zip(vecs).map(|(c, v)| c * v[i]).sum()).collect();
        if norm2(&combo) > 0.0 {
            prop_assert!(rayleigh_quotient(&k, &m, &combo).unwrap() <= mu[4] * (1.0 + 1e-8));
        }
        // Weighted-mean-zero vectors: quotient at least mu_2.
        let m_one = m.mul_vec(&vec![1.0; n]);
        let total: f64 = m_one.iter().sum();
        let c = raw.iter().zip(&m_one).map(|(x, w)| x * w).sum::<f64>() / total;
        let centered: Vec<f64> = raw.iter().map(|x| x - c).collect();
        prop_assert!(rayleigh_quotient(&k, &m, &centered).unwrap() >= mu[1] * (1.0 - 1e-8));
    }
}
