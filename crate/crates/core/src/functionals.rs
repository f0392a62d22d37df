//! Integral functionals of disc weights and the explicit constants of the stability bounds.
//!
//! Every weight is `h_k(z) = |J(z, phi_k^{-1})|` for a map `phi_k: Omega_k -> D`.
//! Integrals are taken over the disc with [`polar_quadrature`]; a divergent
//! integral is reported through [`QuadratureResult::divergent`] rather than as a
//! numerical value.

use serde::{Deserialize, Serialize};

use crate::eigen::Spectrum;
use crate::error::{Error, Result};
use crate::fem::ScalarField;
use crate::maps::QcMap;
use crate::quadrature::{polar_quadrature, Integrability, QuadratureResult};
use crate::weight::Weight;

fn check_beta(beta: f64) -> Result<()> {
    if !(beta > 1.0) || !beta.is_finite() {
        return Err(Error::InvalidParameter(format!("beta = {beta} must be a finite number > 1")));
    }
    Ok(())
}

/// `s = 2 beta / (beta + 1)`.
pub fn s_of_beta(beta: f64) -> f64 {
    2.0 * beta / (beta + 1.0)
}

/// `q = (2 beta / (beta - 1))^2`.
pub fn q_of_beta(beta: f64) -> f64 {
    (2.0 * beta / (beta - 1.0)).powi(2)
}

/// Sobolev exponent `2s/(s-1)` paired with `s`.
pub fn embedding_exponent_of_s(s: f64) -> f64 {
    2.0 * s / (s - 1.0)
}

/// Sobolev exponent `4 beta / (beta - 1)`.
pub fn embedding_exponent_of_beta(beta: f64) -> f64 {
    4.0 * beta / (beta - 1.0)
}

fn root(q: QuadratureResult, p: f64) -> QuadratureResult {
    q.map_value(|v| v.max(0.0).powf(1.0 / p), |v| if v > 0.0 { v.powf(1.0 / p - 1.0) / p } else { 0.0 })
}

/// `int_Omega |J(w, phi)|^{1 - beta} du dv`, evaluated on the disc as
/// `int_D |J(phi^{-1}(z), phi)|^{1 - beta} |J(z, phi^{-1})| dx dy`.
pub fn beta_regularity(phi: &QcMap, beta: f64, tol: f64) -> Result<QuadratureResult> {
    check_beta(beta)?;
    Ok(polar_quadrature(
        |z| {
            let w = phi.inverse(z);
            phi.jac_forward(w).abs().powf(1.0 - beta) * phi.jac_inverse(z).abs()
        },
        tol,
    ))
}

/// `Phi_beta = (int_D max{J1^b / J2^(b-1), J2^b / J1^(b-1)})^{1/(2b)}` with `J_k = |J(z, phi_k^{-1})|`.
pub fn phi_beta(map1: &QcMap, map2: &QcMap, beta: f64, tol: f64) -> Result<QuadratureResult> {
    check_beta(beta)?;
    let q = polar_quadrature(
        |z| {
            let j1 = map1.jac_inverse(z).abs();
            let j2 = map2.jac_inverse(z).abs();
            (j1.powf(beta) * j2.powf(1.0 - beta)).max(j2.powf(beta) * j1.powf(1.0 - beta))
        },
        tol,
    );
    Ok(root(q, 2.0 * beta))
}

/// `(int_D J2^b J1^(1-b), int_D J1^b J2^(1-b))`, the `beta`-integrals of the
/// transition map `phi_2^{-1} o phi_1` and of its inverse.
pub fn pair_regularity(
    map1: &QcMap,
    map2: &QcMap,
    beta: f64,
    tol: f64,
) -> Result<(QuadratureResult, QuadratureResult)> {
    check_beta(beta)?;
    let mixed = |a: &QcMap, b: &QcMap| {
        polar_quadrature(
            |z| b.jac_inverse(z).abs().powf(beta) * a.jac_inverse(z).abs().powf(1.0 - beta),
            tol,
        )
    };
    Ok((mixed(map1, map2), mixed(map2, map1)))
}

/// `d_s(h1, h2) = || (h1 - h2) min(h1, h2)^{(1-s)/s} | L^s(D) ||`.
pub fn d_s_distance(h1: &Weight, h2: &Weight, s: f64, tol: f64) -> Result<QuadratureResult> {
    if !(s > 1.0 && s <= 2.0) {
        return Err(Error::InvalidParameter(format!("s = {s} must lie in (1, 2]")));
    }
    let q = polar_quadrature(
        |z| {
            let (a, b) = (h1.eval(z), h2.eval(z));
            let diff = (a - b).abs();
            if diff == 0.0 {
                0.0
            } else {
                diff.powf(s) * a.min(b).powf(1.0 - s)
            }
        },
        tol,
    );
    Ok(root(q, s))
}

/// `|| sqrt(h1) - sqrt(h2) | L^2(D) ||`.
pub fn sqrt_jacobian_l2(h1: &Weight, h2: &Weight, tol: f64) -> QuadratureResult {
    let q = polar_quadrature(|z| (h1.eval(z).sqrt() - h2.eval(z).sqrt()).powi(2), tol);
    root(q, 2.0)
}

/// Outcome of the `d_s <= 2 Phi_beta ||sqrt(J1) - sqrt(J2)||` comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lemma51 {
    pub d_s: f64,
    pub phi_beta: f64,
    pub l2_root_jac: f64,
    pub bound: f64,
    pub holds: bool,
}

fn finite_value(q: QuadratureResult, what: &str) -> Result<f64> {
    match q.status() {
        Integrability::Finite => Ok(q.value),
        Integrability::Divergent => Err(Error::Divergent(format!("{what} diverges"))),
        Integrability::Undetermined => Err(Error::NoConvergence {
            iterations: q.levels_used as usize,
            residual: q.error_estimate,
        }),
    }
}

/// Checks `d_s(h1, h2) <= 2 Phi_beta(phi_1, phi_2) ||sqrt(h1) - sqrt(h2)||_2` at `s = 2 beta/(beta+1)`.
pub fn lemma51_check(map1: &QcMap, map2: &QcMap, beta: f64, tol: f64) -> Result<Lemma51> {
    check_beta(beta)?;
    let h1 = crate::weight::weight_of_map(map1)?;
    let h2 = crate::weight::weight_of_map(map2)?;
    let phi_b = finite_value(phi_beta(map1, map2, beta, tol)?, "Phi_beta")?;
    let d_s = finite_value(d_s_distance(&h1, &h2, s_of_beta(beta), tol)?, "d_s")?;
    let l2 = finite_value(sqrt_jacobian_l2(&h1, &h2, tol), "root-Jacobian distance")?;
    let bound = 2.0 * phi_b * l2;
    Ok(Lemma51 { d_s, phi_beta: phi_b, l2_root_jac: l2, bound, holds: d_s <= bound * (1.0 + 1e-8) })
}

/// Explicit upper estimate `(pi/2)^{(2-q)/(2q)} (q+2)^{(q+2)/(2q)}` of `B_{q,2}(D)`.
pub fn b_q2_disc(q: f64) -> Result<f64> {
    if !(q >= 2.0) || !q.is_finite() {
        return Err(Error::InvalidParameter(format!("q = {q} must be a finite number >= 2")));
    }
    let half_pi = std::f64::consts::FRAC_PI_2;
    Ok(half_pi.powf((2.0 - q) / (2.0 * q)) * (q + 2.0).powf((q + 2.0) / (2.0 * q)))
}

/// Upper estimate of `B_{4b/(b-1),2}(D, h)`:
/// `K^{1/2} B_{q,2}(D) max_k ||h_k | L^2||^{(b-1)/(4b)}` with `q = (2b/(b-1))^2`.
pub fn poincare_upper(beta: f64, h1: &Weight, h2: &Weight, k_qc: f64, tol: f64) -> Result<f64> {
    check_beta(beta)?;
    if !(k_qc >= 1.0) {
        return Err(Error::InvalidParameter(format!("quasiconformal coefficient {k_qc} must be >= 1")));
    }
    let n1 = finite_value(h1.l2_norm(tol), "||h1 | L^2||")?;
    let n2 = finite_value(h2.l2_norm(tol), "||h2 | L^2||")?;
    Ok(k_qc.sqrt() * b_q2_disc(q_of_beta(beta))? * n1.max(n2).powf((beta - 1.0) / (4.0 * beta)))
}

/// Two-weight eigenvalue bounds `(B c / (1 + B sqrt(c)), B c)`.
pub fn bound_two_weight(b: f64, c_tilde: f64) -> (f64, f64) {
    let coarse = b * c_tilde;
    (coarse / (1.0 + b * c_tilde.sqrt()), coarse)
}

/// `c~ B^2 d_s`.
pub fn bound_thm_two_ww(d_s: f64, b: f64, c_tilde: f64) -> f64 {
    c_tilde * b * b * d_s
}

/// Both sides of the main stability estimate for one mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MainBound {
    pub lhs: f64,
    pub rhs: f64,
    pub c_n: f64,
}

/// `|mu_n^1 - mu_n^2| <= 2 c_n B^2 Phi_beta ||sqrt(J1) - sqrt(J2)||` with
/// `c_n = max(mu_n^1, mu_n^2)^2`; `n` is one-based.
pub fn bound_main(
    spec1: &Spectrum,
    spec2: &Spectrum,
    n: usize,
    beta: f64,
    phi_b: f64,
    l2dist: f64,
    b: f64,
) -> Result<MainBound> {
    check_beta(beta)?;
    let (m1, m2) = (spec1.mode(n)?, spec2.mode(n)?);
    let c_n = (m1 * m1).max(m2 * m2);
    Ok(MainBound { lhs: (m1 - m2).abs(), rhs: 2.0 * c_n * b * b * phi_b * l2dist, c_n })
}

/// Both sides of the weighted Poincare inequality for a closed-form `f`:
/// `||f - f_h | L^2(D, h)||` and `v_star ||grad f | L^2(D)||`.
pub fn weighted_poincare_sides(h: &Weight, f: &ScalarField, v_star: f64, tol: f64) -> Result<(f64, f64)> {
    if matches!(f, ScalarField::Nodal(_)) {
        return Err(Error::InvalidParameter("weighted Poincare check needs a closed-form field".into()));
    }
    let value = |z| f.eval(z).expect("closed-form field");
    let mass = finite_value(polar_quadrature(|z| h.eval(z), tol), "m_h")?;
    let mean = finite_value(polar_quadrature(|z| value(z) * h.eval(z), tol), "int f h")? / mass;
    let lhs = finite_value(polar_quadrature(|z| (value(z) - mean).powi(2) * h.eval(z), tol), "weighted variance")?;
    let energy = finite_value(
        polar_quadrature(
            |z| {
                let [gx, gy] = f.gradient(z).expect("closed-form field");
                gx * gx + gy * gy
            },
            tol,
        ),
        "Dirichlet energy",
    )?;
    Ok((lhs.max(0.0).sqrt(), v_star * energy.max(0.0).sqrt()))
}

/// Integral functionals of a map pair at a fixed `beta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairFunctionals {
    pub beta: f64,
    pub s: f64,
    pub q: f64,
    pub d_s: f64,
    pub phi_beta: f64,
    pub l2_root_jac: f64,
    pub b_q2: f64,
    /// Explicit upper estimate of `B_{4b/(b-1),2}(D, h)`.
    pub poincare_b: f64,
    /// Larger quasiconformal coefficient of the two maps.
    pub k_qc: f64,
    pub lemma51_bound: f64,
    pub lemma51_holds: bool,
}

/// Evaluates every functional that enters the stability bounds for `(map1, map2)`.
pub fn pair_functionals(map1: &QcMap, map2: &QcMap, beta: f64, tol: f64) -> Result<PairFunctionals> {
    check_beta(beta)?;
    let h1 = crate::weight::weight_of_map(map1)?;
    let h2 = crate::weight::weight_of_map(map2)?;
    let lemma = lemma51_check(map1, map2, beta, tol)?;
    let k_qc = map1.qc_coefficient().max(map2.qc_coefficient());
    let q = q_of_beta(beta);
    Ok(PairFunctionals {
        beta,
        s: s_of_beta(beta),
        q,
        d_s: lemma.d_s,
        phi_beta: lemma.phi_beta,
        l2_root_jac: lemma.l2_root_jac,
        b_q2: b_q2_disc(q)?,
        poincare_b: poincare_upper(beta, &h1, &h2, k_qc, tol)?,
        k_qc,
        lemma51_bound: lemma.bound,
        lemma51_holds: lemma.holds,
    })
}

/// Functionals, per-mode bound sides and pass flags for a pair of disc weights.
///
/// Per-mode vectors are indexed like `modes`. The discretization error of each
/// spectrum is estimated by the signed change `mu_n(fine) - mu_n(coarse)`, and
/// `lhs_upper_n = |mu_n^1 - mu_n^2| + |err_n^1 - err_n^2|` bounds the exact
/// difference when the two errors are estimated alike.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub beta: f64,
    pub s: f64,
    pub q: f64,
    pub d_s: f64,
    pub phi_beta: f64,
    pub l2_root_jac: f64,
    pub b_q2: f64,
    pub poincare_b: f64,
    pub k_qc: f64,
    pub lemma51_bound: f64,
    pub lemma51_holds: bool,
    /// `mu_2^{-1/2}` of each weight: the computed best constant of the `L^2` Poincare inequality.
    pub v_star: [Option<f64>; 2],
    pub modes: Vec<usize>,
    pub mu1_n: Vec<f64>,
    pub mu2_n: Vec<f64>,
    pub disc_err1_n: Vec<f64>,
    pub disc_err2_n: Vec<f64>,
    pub c_n: Vec<f64>,
    pub c_tilde_n: Vec<f64>,
    pub lhs_n: Vec<f64>,
    pub lhs_upper_n: Vec<f64>,
    pub rhs_sharp_n: Vec<f64>,
    pub rhs_coarse_n: Vec<f64>,
    pub rhs_two_ww_n: Vec<f64>,
    pub rhs_main_n: Vec<f64>,
    pub pass_n: Vec<bool>,
}

impl StabilityReport {
    /// Combines the functionals with fine and coarse spectra of both weights for
    /// modes `2..=n_max`.
    pub fn assemble(
        f: &PairFunctionals,
        fine: [&Spectrum; 2],
        coarse: [&Spectrum; 2],
        n_max: usize,
    ) -> Result<StabilityReport> {
        let b2 = f.poincare_b * f.poincare_b;
        let mut r = StabilityReport {
            beta: f.beta,
            s: f.s,
            q: f.q,
            d_s: f.d_s,
            phi_beta: f.phi_beta,
            l2_root_jac: f.l2_root_jac,
            b_q2: f.b_q2,
            poincare_b: f.poincare_b,
            k_qc: f.k_qc,
            lemma51_bound: f.lemma51_bound,
            lemma51_holds: f.lemma51_holds,
            v_star: [fine[0].v_star, fine[1].v_star],
            modes: vec![],
            mu1_n: vec![],
            mu2_n: vec![],
            disc_err1_n: vec![],
            disc_err2_n: vec![],
            c_n: vec![],
            c_tilde_n: vec![],
            lhs_n: vec![],
            lhs_upper_n: vec![],
            rhs_sharp_n: vec![],
            rhs_coarse_n: vec![],
            rhs_two_ww_n: vec![],
            rhs_main_n: vec![],
            pass_n: vec![],
        };
        for n in 2..=n_max {
            let main = bound_main(fine[0], fine[1], n, f.beta, f.phi_beta, f.l2_root_jac, f.poincare_b)?;
            let (m1, m2) = (fine[0].mode(n)?, fine[1].mode(n)?);
            let e1 = m1 - coarse[0].mode(n)?;
            let e2 = m2 - coarse[1].mode(n)?;
            // Both problems live on the disc, so c_n and c~_n coincide here.
            let c_tilde = main.c_n;
            let (sharp, coarse_bound) = bound_two_weight(b2 * f.d_s, c_tilde);
            let lhs_upper = main.lhs + (e1 - e2).abs();
            r.modes.push(n);
            r.mu1_n.push(m1);
            r.mu2_n.push(m2);
            r.disc_err1_n.push(e1);
            r.disc_err2_n.push(e2);
            r.c_n.push(main.c_n);
            r.c_tilde_n.push(c_tilde);
            r.lhs_n.push(main.lhs);
            r.lhs_upper_n.push(lhs_upper);
            r.rhs_sharp_n.push(sharp);
            r.rhs_coarse_n.push(coarse_bound);
            r.rhs_two_ww_n.push(bound_thm_two_ww(f.d_s, f.poincare_b, c_tilde));
            r.rhs_main_n.push(main.rhs);
            r.pass_n.push(lhs_upper <= main.rhs);
        }
        Ok(r)
    }

    pub fn all_pass(&self) -> bool {
        self.pass_n.iter().all(|&p| p)
    }

    /// `rhs_main_n - lhs_upper_n` per mode.
    pub fn margins(&self) -> Vec<f64> {
        self.rhs_main_n.iter().zip(&self.lhs_upper_n).map(|(r, l)| r - l).collect()
    }
}
