//! Verification pipelines behind each scenario kind.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::algebra::{Mat2, Point, SymMat2};
use crate::beltrami::{beltrami_from_matrix, matrix_from_beltrami, BeltramiValue, EllipticMatrixField};
use crate::eigen::{dense_generalized_eigs, generalized_eigs, generalized_eigs_with, EigOptions, Spectrum, DENSE_LIMIT};
use crate::error::{Error, Result};
use crate::fem::{assemble_mass, assemble_stiffness, Density, ScalarField};
use crate::functionals::{
    beta_regularity, bound_two_weight, pair_functionals, pair_regularity, weighted_poincare_sides, StabilityReport,
};
use crate::maps::{invert_map, make_affine_stretch, make_mobius, make_radial_power, matrix_field_of_map, MapDescriptor, QcMap};
use crate::mesh::{build_disc_mesh, build_disc_mesh_refined_center, pushforward_mesh, TriMesh};
use crate::quadrature::QuadratureResult;
use crate::sparse::SparseSymMatrix;
use crate::weight::{weight_of_map, Weight};

use super::report::{CheckRow, ModeRow, Report};
use super::scenario::{Scenario, ScenarioKind};

/// Relative agreement required between the sparse solver and its reference in eig runs.
pub const EIG_REL_TOL: f64 = 1e-8;
/// Largest accepted `mu_1 / mu_2` for the constant mode.
pub const ZERO_MODE_TOL: f64 = 1e-6;
/// Slack factor on the right-hand side of the weighted Poincare check.
pub const POINCARE_SLACK: f64 = 1.01;
/// Quadratic trial functions per weight in the functionals battery.
pub const POINCARE_TRIALS: usize = 5;
/// Tolerance of the exact algebraic identities checked by the roundtrip battery.
pub const IDENTITY_TOL: f64 = 1e-12;

/// Runs the pipeline selected by `s.kind`.
pub fn run_scenario(s: &Scenario) -> Result<Report> {
    run_inner(s).map_err(|e| e.context(format!("{} scenario", s.kind)))
}

fn run_inner(s: &Scenario) -> Result<Report> {
    s.validate()?;
    let maps = s.build_maps()?;
    let descriptors: Vec<MapDescriptor> = s.map_specs().iter().map(|m| m.descriptor()).collect();
    match s.kind {
        ScenarioKind::Transfer => transfer(s, &maps[0], descriptors, false),
        ScenarioKind::Isospectral => transfer(s, &maps[0], descriptors, true),
        ScenarioKind::Eig => {
            let phi = maps.first().cloned().unwrap_or_else(QcMap::identity);
            let descriptors = if descriptors.is_empty() { vec![MapDescriptor::Identity] } else { descriptors };
            eig(s, &phi, descriptors)
        }
        ScenarioKind::Stability => stability(s, &maps[0], &maps[1], descriptors),
        ScenarioKind::Functionals => functionals_battery(s, &maps[0], &maps[1], descriptors),
        ScenarioKind::Roundtrip => roundtrip_battery(s, &maps, descriptors),
    }
}

/// Polar disc mesh, with an extra inner ring when any weight is singular at the origin.
pub fn disc_mesh_for(weights: &[&Weight], n_r: usize, n_theta: usize) -> Result<TriMesh> {
    if weights.iter().any(|h| h.is_singular_at_origin()) {
        build_disc_mesh_refined_center(n_r, n_theta)
    } else {
        build_disc_mesh(n_r, n_theta)
    }
}

/// Stiffness and unit mass of `-div(A grad g)` on `Omega = phi^{-1}(D)`, discretized
/// on the image of `disc` under `phi^{-1}`.
pub fn domain_problem(disc: &TriMesh, phi: &QcMap) -> Result<(SparseSymMatrix, SparseSymMatrix)> {
    let omega = pushforward_mesh(disc, &invert_map(phi))?;
    let a = matrix_field_of_map(phi)?;
    Ok((assemble_stiffness(&omega, &a)?, assemble_mass(&omega, Density::Unit)?))
}

/// Laplacian stiffness and `h`-weighted mass on the disc mesh.
pub fn disc_problem(disc: &TriMesh, h: &Weight) -> Result<(SparseSymMatrix, SparseSymMatrix)> {
    Ok((
        assemble_stiffness(disc, &EllipticMatrixField::identity())?,
        assemble_mass(disc, Density::Weight(h))?,
    ))
}

/// The first `modes` eigenvalues of the `h`-weighted disc problem.
pub fn weighted_disc_spectrum(disc: &TriMesh, h: &Weight, modes: usize, tol: f64) -> Result<Spectrum> {
    let (k, m) = disc_problem(disc, h)?;
    generalized_eigs(&k, &m, modes, tol)
}

fn relative(a: f64, b: f64) -> f64 {
    let d = (a - b).abs();
    if d == 0.0 {
        0.0
    } else {
        d / b.abs().max(a.abs())
    }
}

fn compare_row(n: usize, a: f64, b: f64, rel_tol: f64) -> ModeRow {
    let rel = relative(a, b);
    ModeRow {
        mode_index: n,
        mu_domain: a,
        mu_disc_weighted: b,
        abs_diff: (a - b).abs(),
        rel_diff: rel,
        rhs_sharp: None,
        rhs_coarse: None,
        rhs_main: None,
        margin: rel_tol - rel,
        pass: rel <= rel_tol,
    }
}

fn zero_mode_check(name: &str, spec: &Spectrum) -> Result<CheckRow> {
    let ratio = spec.mode(1)?.abs() / spec.mode(2)?;
    Ok(CheckRow::at_most(format!("{name} mu_1 / mu_2"), ratio, ZERO_MODE_TOL))
}

fn transfer(s: &Scenario, phi: &QcMap, maps: Vec<MapDescriptor>, unweighted: bool) -> Result<Report> {
    let [n_r, n_theta] = s.mesh;
    let h = if unweighted { Weight::unit() } else { weight_of_map(phi)? };
    let disc = disc_mesh_for(&[&h], n_r, n_theta)?;
    let (k_dom, m_dom) = domain_problem(&disc, phi)?;
    let dom = generalized_eigs(&k_dom, &m_dom, s.modes, s.tol).map_err(|e| e.context("domain problem"))?;
    let (k_disc, m_disc) = disc_problem(&disc, &h)?;
    let reference = generalized_eigs(&k_disc, &m_disc, s.modes, s.tol).map_err(|e| e.context("disc problem"))?;
    let rows = (2..=s.modes)
        .map(|n| Ok(compare_row(n, dom.mode(n)?, reference.mode(n)?, s.rel_tol)))
        .collect::<Result<Vec<_>>>()?;
    let checks = vec![zero_mode_check("domain", &dom)?, zero_mode_check("disc", &reference)?];
    let mut notes = vec![format!("disc mesh has {} vertices", disc.num_vertices())];
    if unweighted {
        notes.push("disc side is the unweighted Laplacian".into());
    }
    Ok(Report::new(s.kind, s.mesh, maps, rows, checks, None, notes))
}

fn eig(s: &Scenario, phi: &QcMap, maps: Vec<MapDescriptor>) -> Result<Report> {
    let [n_r, n_theta] = s.mesh;
    let h = weight_of_map(phi)?;
    let disc = disc_mesh_for(&[&h], n_r, n_theta)?;
    let (k, m) = domain_problem(&disc, phi)?;
    let sparse = generalized_eigs(&k, &m, s.modes, s.tol)?;
    let (reference, note) = if k.dim() <= DENSE_LIMIT {
        (dense_generalized_eigs(&k, &m)?, format!("reference: dense solve of dimension {}", k.dim()))
    } else {
        let opts = EigOptions { block_size: 4, seed: s.seed.wrapping_add(1), ..EigOptions::default() };
        (
            generalized_eigs_with(&k, &m, s.modes, s.tol, &opts)?,
            format!("reference: second sparse solve (dimension {} exceeds the dense limit)", k.dim()),
        )
    };
    let rows = (2..=s.modes)
        .map(|n| Ok(compare_row(n, sparse.mode(n)?, reference.mode(n)?, EIG_REL_TOL)))
        .collect::<Result<Vec<_>>>()?;
    let checks = vec![
        zero_mode_check("sparse", &sparse)?,
        CheckRow::at_most("sparse max residual", sparse.max_residual(), s.tol),
    ];
    Ok(Report::new(s.kind, s.mesh, maps, rows, checks, None, vec![note]))
}

/// Fine and coarse weighted disc spectra of both maps, with the pair functionals.
pub fn stability_report(
    phi1: &QcMap,
    phi2: &QcMap,
    mesh: [usize; 2],
    modes: usize,
    beta: f64,
    tol: f64,
) -> Result<StabilityReport> {
    let [n_r, n_theta] = mesh;
    let h1 = weight_of_map(phi1)?;
    let h2 = weight_of_map(phi2)?;
    let fine_mesh = disc_mesh_for(&[&h1, &h2], n_r, n_theta)?;
    let coarse_mesh = disc_mesh_for(&[&h1, &h2], n_r / 2, n_theta / 2)?;
    let solve = |mesh: &TriMesh, h: &Weight, label: &str| {
        weighted_disc_spectrum(mesh, h, modes, tol).map_err(|e| e.context(label.to_string()))
    };
    let f1 = solve(&fine_mesh, &h1, "first weight, fine mesh")?;
    let f2 = solve(&fine_mesh, &h2, "second weight, fine mesh")?;
    let c1 = solve(&coarse_mesh, &h1, "first weight, coarse mesh")?;
    let c2 = solve(&coarse_mesh, &h2, "second weight, coarse mesh")?;
    let f = pair_functionals(phi1, phi2, beta, tol)?;
    StabilityReport::assemble(&f, [&f1, &f2], [&c1, &c2], modes)
}

fn stability(s: &Scenario, phi1: &QcMap, phi2: &QcMap, maps: Vec<MapDescriptor>) -> Result<Report> {
    let r = stability_report(phi1, phi2, s.mesh, s.modes, s.beta, s.tol)?;
    let margins = r.margins();
    let rows: Vec<ModeRow> = (0..r.modes.len())
        .map(|i| ModeRow {
            mode_index: r.modes[i],
            mu_domain: r.mu1_n[i],
            mu_disc_weighted: r.mu2_n[i],
            abs_diff: r.lhs_n[i],
            rel_diff: relative(r.mu1_n[i], r.mu2_n[i]),
            rhs_sharp: Some(r.rhs_sharp_n[i]),
            rhs_coarse: Some(r.rhs_coarse_n[i]),
            rhs_main: Some(r.rhs_main_n[i]),
            margin: margins[i],
            pass: r.pass_n[i],
        })
        .collect();
    let sharp_excess = r
        .rhs_sharp_n
        .iter()
        .zip(&r.rhs_coarse_n)
        .map(|(a, b)| a - b)
        .fold(f64::NEG_INFINITY, f64::max);
    let checks = vec![
        CheckRow::at_most("d_s <= 2 phi_beta l2_root_jac", r.d_s, r.lemma51_bound),
        CheckRow::at_most("max(rhs_sharp - rhs_coarse)", sharp_excess, 0.0),
    ];
    let notes = vec![
        "mu_domain and mu_disc_weighted hold mu_n of the first and second weight on the fine mesh".into(),
        format!("coarse mesh [{}, {}] estimates the discretization error", s.mesh[0] / 2, s.mesh[1] / 2),
    ];
    Ok(Report::new(s.kind, s.mesh, maps, rows, checks, Some(r), notes))
}

fn finite(q: QuadratureResult, what: &str) -> Result<f64> {
    if q.is_finite() {
        Ok(q.value)
    } else if q.divergent {
        Err(Error::Divergent(what.to_string()))
    } else {
        Err(Error::NoConvergence { iterations: q.levels_used as usize, residual: q.error_estimate })
    }
}

/// Random quadratic `c1 x + c2 y + c3 x^2 + c4 x y + c5 y^2` with coefficients in `[-1, 1)`.
pub fn random_quadratic(rng: &mut impl Rng) -> ScalarField {
    let c: [f64; 5] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
    ScalarField::closed(move |p: Point| {
        let (x, y) = (p.re, p.im);
        c[0] * x + c[1] * y + c[2] * x * x + c[3] * x * y + c[4] * y * y
    })
}

fn functionals_battery(s: &Scenario, phi1: &QcMap, phi2: &QcMap, maps: Vec<MapDescriptor>) -> Result<Report> {
    let f = pair_functionals(phi1, phi2, s.beta, s.tol)?;
    let mut checks = vec![CheckRow::info("s", f.s), CheckRow::info("q", f.q)];
    for (i, phi) in [phi1, phi2].into_iter().enumerate() {
        let v = finite(beta_regularity(phi, s.beta, s.tol)?, "beta-regularity integral")?;
        checks.push(CheckRow::info(format!("beta_regularity map {}", i + 1), v));
    }
    let (r12, r21) = pair_regularity(phi1, phi2, s.beta, s.tol)?;
    checks.push(CheckRow::info("pair_regularity 1->2", finite(r12, "pair regularity integral")?));
    checks.push(CheckRow::info("pair_regularity 2->1", finite(r21, "pair regularity integral")?));
    checks.extend([
        CheckRow::info("phi_beta", f.phi_beta),
        CheckRow::info("l2_root_jac", f.l2_root_jac),
        CheckRow::info("d_s", f.d_s),
        CheckRow::info("b_q2", f.b_q2),
        CheckRow::info("poincare_b", f.poincare_b),
        CheckRow::at_most("d_s <= 2 phi_beta l2_root_jac", f.d_s, f.lemma51_bound),
    ]);
    let b2d = f.poincare_b * f.poincare_b * f.d_s;
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
    let [n_r, n_theta] = s.mesh;
    for (i, phi) in [phi1, phi2].into_iter().enumerate() {
        let h = weight_of_map(phi)?;
        let disc = disc_mesh_for(&[&h], n_r, n_theta)?;
        let spec = weighted_disc_spectrum(&disc, &h, 2, s.tol)?;
        let mu2 = spec.mode(2)?;
        let (sharp, coarse) = bound_two_weight(b2d, mu2 * mu2);
        checks.push(CheckRow::at_most(format!("two-weight sharp - coarse, weight {}", i + 1), sharp - coarse, 0.0));
        let v_star = spec.v_star.ok_or_else(|| Error::Validation("weighted spectrum has no nonzero mode".into()))?;
        for j in 0..POINCARE_TRIALS {
            let trial = random_quadratic(&mut rng);
            let (lhs, rhs) = weighted_poincare_sides(&h, &trial, v_star, s.tol)?;
            checks.push(CheckRow::at_most(
                format!("weighted poincare, weight {}, trial {}", i + 1, j + 1),
                lhs,
                POINCARE_SLACK * rhs,
            ));
        }
    }
    Ok(Report::new(s.kind, s.mesh, maps, vec![], checks, None, vec![]))
}

/// Random unit-determinant SPD matrix with condition number up to 100.
pub fn random_unit_spd(rng: &mut impl Rng) -> SymMat2 {
    let lambda = rng.random_range(0.0..10f64.ln()).exp();
    let r = Mat2::rotation(rng.random_range(0.0..std::f64::consts::PI));
    let m = r * Mat2::diag(lambda, 1.0 / lambda) * r.transpose();
    SymMat2::new(m.0[0][0], 0.5 * (m.0[0][1] + m.0[1][0]), m.0[1][1])
}

/// Maps checked by the roundtrip battery when the scenario names none.
pub fn default_roundtrip_maps() -> Vec<QcMap> {
    vec![
        make_affine_stretch(2f64.sqrt(), std::f64::consts::FRAC_PI_6).expect("valid stretch"),
        make_radial_power(1.5).expect("valid radial power"),
        make_mobius(Complex64::new(0.3, 0.2)).expect("valid Mobius map"),
    ]
}

fn roundtrip_battery(s: &Scenario, maps: &[QcMap], descriptors: Vec<MapDescriptor>) -> Result<Report> {
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
    let (mut err_a, mut err_det, mut err_mu) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..s.trials {
        let a = random_unit_spd(&mut rng);
        let back = matrix_from_beltrami(beltrami_from_matrix(a)?)?;
        err_a = err_a.max(a.max_abs_diff(&back));
        err_det = err_det.max((back.det() - 1.0).abs());
        let mu = BeltramiValue::new(Complex64::from_polar(
            rng.random_range(0.0..0.9),
            rng.random_range(0.0..std::f64::consts::TAU),
        ))?;
        let mu_back = beltrami_from_matrix(matrix_from_beltrami(mu)?)?;
        err_mu = err_mu.max((mu.value() - mu_back.value()).norm());
    }
    let mut checks = vec![
        CheckRow::at_most("matrix -> beltrami -> matrix max entry error", err_a, IDENTITY_TOL),
        CheckRow::at_most("beltrami -> matrix -> beltrami max error", err_mu, IDENTITY_TOL),
        CheckRow::at_most("max |det A - 1| after round trip", err_det, IDENTITY_TOL),
    ];
    let (maps, descriptors) = if maps.is_empty() {
        let m = default_roundtrip_maps();
        let d = m.iter().map(QcMap::descriptor).collect();
        (m, d)
    } else {
        (maps.to_vec(), descriptors)
    };
    for (i, phi) in maps.iter().enumerate() {
        let field = matrix_field_of_map(phi)?;
        let (mut inv, mut jac, mut det, mut unit) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
        for _ in 0..64 {
            let z = Complex64::from_polar(rng.random_range(0.05f64..1.0).sqrt(), rng.random_range(0.0..std::f64::consts::TAU));
            let w = phi.inverse(z);
            inv = inv.max((phi.forward(w) - z).norm());
            let jf = phi.jac_forward(w);
            jac = jac.max((jf * phi.jac_inverse(z) - 1.0).abs());
            det = det.max(relative(phi.differential(w).det(), jf));
            unit = unit.max((field.eval(w).det() - 1.0).abs());
        }
        let label = format!("map {}", i + 1);
        checks.extend([
            CheckRow::at_most(format!("{label}: |phi(phi^-1(z)) - z|"), inv, IDENTITY_TOL),
            CheckRow::at_most(format!("{label}: |J(w, phi) J(z, phi^-1) - 1|"), jac, 10.0 * IDENTITY_TOL),
            CheckRow::at_most(format!("{label}: rel |det D phi - J|"), det, 10.0 * IDENTITY_TOL),
            CheckRow::at_most(format!("{label}: |det A - 1|"), unit, IDENTITY_TOL),
        ]);
    }
    let notes = vec![format!("{} random samples, seed {}", s.trials, s.seed)];
    Ok(Report::new(s.kind, s.mesh, descriptors, vec![], checks, None, notes))
}
