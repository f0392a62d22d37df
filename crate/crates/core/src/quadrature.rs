//! Quadrature on the unit disc in polar coordinates.
//!
//! The angular direction is split into arcs, each integrated by 10-point
//! Gauss–Legendre against its two halves, and the worst arcs are bisected in
//! batches until the error estimates meet the tolerance. Each radial line is
//! integrated by globally adaptive 10-point Gauss–Legendre bisection, whose nodes
//! never touch `r = 0` or `r = 1`, so integrable endpoint singularities are
//! handled without special cases. A line that cannot be resolved is probed for
//! non-decaying endpoint mass, which is how divergence is flagged.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::Point;

const GL_ORDER: usize = 10;
const START_ARCS: usize = 8;
const MAX_ARCS: usize = 1024;
const SPLIT_BATCH: usize = 16;
const MAX_SEGMENTS: usize = 600;

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess, then Newton on P_n.
        let mut x = ((4 * i + 3) as f64 * PI / (4 * n + 2) as f64).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

fn gl10() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(GL_ORDER))
}

fn gl_segment<G: Fn(f64) -> f64>(g: &G, a: f64, b: f64) -> f64 {
    let (x, w) = gl10();
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    x.iter().zip(w).map(|(xi, wi)| wi * g(mid + half * xi)).sum::<f64>() * half
}

/// Outcome of a quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureResult {
    pub value: f64,
    /// Absolute error estimate.
    pub error_estimate: f64,
    /// `error_estimate <= tol * max(|value|, 1)` was reached.
    pub converged: bool,
    /// Angular refinement rounds.
    pub levels_used: u32,
    /// Set when refinement exposed non-decaying endpoint mass, or the value grew
    /// more than tenfold over the last three refinement rounds.
    pub divergent: bool,
}

/// Three-way classification of a quadrature outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrability {
    Finite,
    Divergent,
    Undetermined,
}

impl QuadratureResult {
    pub fn status(&self) -> Integrability {
        if self.divergent {
            Integrability::Divergent
        } else if self.converged {
            Integrability::Finite
        } else {
            Integrability::Undetermined
        }
    }

    pub fn is_finite(&self) -> bool {
        self.status() == Integrability::Finite
    }

    /// Applies `f` to the value, keeping the status flags. The error estimate is
    /// propagated to first order using `df` (derivative of `f` at the value).
    pub fn map_value(self, f: impl Fn(f64) -> f64, df: impl Fn(f64) -> f64) -> Self {
        QuadratureResult {
            value: f(self.value),
            error_estimate: (df(self.value) * self.error_estimate).abs(),
            ..self
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct LineResult {
    value: f64,
    error: f64,
    converged: bool,
    divergent: bool,
}

struct Segment {
    a: f64,
    b: f64,
    fine: f64,
    err: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.err.total_cmp(&other.err) == Ordering::Equal
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err).then_with(|| other.a.total_cmp(&self.a))
    }
}

fn make_segment<G: Fn(f64) -> f64>(g: &G, a: f64, b: f64) -> Segment {
    let m = 0.5 * (a + b);
    let coarse = gl_segment(g, a, b);
    let fine = gl_segment(g, a, m) + gl_segment(g, m, b);
    let err = if fine.is_finite() { (fine - coarse).abs() } else { f64::INFINITY };
    Segment { a, b, fine, err }
}

/// Globally adaptive Gauss–Legendre on `[0, 1]`.
fn adaptive_line<G: Fn(f64) -> f64>(g: &G, rtol: f64, atol: f64) -> LineResult {
    let mut heap = BinaryHeap::new();
    let seg = make_segment(g, 0.0, 1.0);
    let mut total = seg.fine;
    let mut total_err = seg.err;
    heap.push(seg);
    while heap.len() < MAX_SEGMENTS {
        if total.is_finite() && total_err <= rtol * total.abs() + atol {
            return LineResult { value: total, error: total_err, converged: true, divergent: false };
        }
        let worst = heap.pop().expect("heap is never empty");
        if !worst.err.is_finite() {
            heap.push(worst);
            break;
        }
        let m = 0.5 * (worst.a + worst.b);
        if m <= worst.a || m >= worst.b {
            heap.push(worst);
            break;
        }
        let l = make_segment(g, worst.a, m);
        let r = make_segment(g, m, worst.b);
        total += l.fine + r.fine - worst.fine;
        heap.push(l);
        heap.push(r);
        // Recompute the error sum to avoid drift from repeated add/subtract.
        total_err = heap.iter().map(|s| s.err).sum();
    }
    let converged = total.is_finite() && total_err <= rtol * total.abs() + atol;
    let divergent = !converged && (endpoint_mass_persists(g, true) || endpoint_mass_persists(g, false));
    LineResult { value: total, error: total_err, converged, divergent }
}

/// Probes `|int over [0, 2^-k]|` (or `[1 - 2^-k, 1]`) for `k = 8, 16, 24, 32`.
/// Integrable endpoint behaviour makes these shrink geometrically; persisting
/// (ratio >= 0.999 at every step) or growing (>10x overall) mass is divergence.
fn endpoint_mass_persists<G: Fn(f64) -> f64>(g: &G, at_origin: bool) -> bool {
    let tails: Vec<f64> = [8, 16, 24, 32]
        .iter()
        .map(|&k| {
            let w = 2f64.powi(-k);
            let t = if at_origin { gl_segment(g, 0.0, w) } else { gl_segment(g, 1.0 - w, 1.0) };
            t.abs()
        })
        .collect();
    if tails.iter().any(|t| !t.is_finite()) {
        return true;
    }
    if tails[0] == 0.0 {
        return false;
    }
    let persists = tails.windows(2).all(|p| p[1] >= 0.999 * p[0]);
    let grows = tails[3] > 10.0 * tails[0];
    persists || grows
}

fn integrate_line<F: Fn(Point) -> f64>(f: &F, theta: f64, rtol: f64, atol: f64) -> LineResult {
    let dir = Complex64::from_polar(1.0, theta);
    let g = |r: f64| f(dir * r) * r;
    adaptive_line(&g, rtol, atol)
}

/// One angular arc `[a, b]` with its 20 fine-level radial lines.
struct Arc {
    a: f64,
    b: f64,
    fine: f64,
    err: f64,
    line_err: f64,
    converged: bool,
    divergent: bool,
}

fn make_arc<F: Fn(Point) -> f64 + Sync>(f: &F, a: f64, b: f64, rtol: f64, atol: f64) -> Arc {
    let (x, w) = gl10();
    let m = 0.5 * (a + b);
    let thetas: Vec<f64> = [(a, b), (a, m), (m, b)]
        .iter()
        .flat_map(|&(lo, hi)| x.iter().map(move |xi| 0.5 * (lo + hi) + 0.5 * (hi - lo) * xi))
        .collect();
    let lines: Vec<LineResult> = thetas.par_iter().map(|&t| integrate_line(f, t, rtol, atol)).collect();
    let weighted = |ls: &[LineResult], half: f64, pick: fn(&LineResult) -> f64| {
        half * ls.iter().zip(w).map(|(l, wi)| wi * pick(l)).sum::<f64>()
    };
    let (h_coarse, h_fine) = (0.5 * (b - a), 0.25 * (b - a));
    let coarse = weighted(&lines[..GL_ORDER], h_coarse, |l| l.value);
    let fine = weighted(&lines[GL_ORDER..2 * GL_ORDER], h_fine, |l| l.value)
        + weighted(&lines[2 * GL_ORDER..], h_fine, |l| l.value);
    let line_err = weighted(&lines[GL_ORDER..2 * GL_ORDER], h_fine, |l| l.error)
        + weighted(&lines[2 * GL_ORDER..], h_fine, |l| l.error);
    let err = if fine.is_finite() { (fine - coarse).abs() } else { f64::INFINITY };
    Arc {
        a,
        b,
        fine,
        err,
        line_err,
        converged: lines.iter().all(|l| l.converged),
        divergent: lines.iter().any(|l| l.divergent),
    }
}

/// `int_D f(z) dx dy`, relative tolerance `tol` (absolute below magnitude 1).
pub fn polar_quadrature<F>(f: F, tol: f64) -> QuadratureResult
where
    F: Fn(Point) -> f64 + Sync,
{
    let tol = tol.max(1e-14);
    let line_rtol = 0.05 * tol;
    let line_atol = 1e-3 * tol;
    let h = 2.0 * PI / START_ARCS as f64;
    let mut arcs: Vec<Arc> = (0..START_ARCS)
        .into_par_iter()
        .map(|j| make_arc(&f, j as f64 * h, (j + 1) as f64 * h, line_rtol, line_atol))
        .collect();

    let mut rounds = 1;
    let mut history: Vec<f64> = Vec::new();
    loop {
        // Arcs stay sorted by start angle, so the summation order is fixed.
        let value: f64 = arcs.iter().map(|s| s.fine).sum();
        history.push(value);
        let err: f64 = arcs.iter().map(|s| s.err + s.line_err).sum();
        if arcs.iter().any(|s| s.divergent) || !value.is_finite() {
            return QuadratureResult {
                value,
                error_estimate: f64::INFINITY,
                converged: false,
                levels_used: rounds,
                divergent: true,
            };
        }
        let lines_ok = arcs.iter().all(|s| s.converged);
        if lines_ok && err <= tol * value.abs().max(1.0) {
            return QuadratureResult { value, error_estimate: err, converged: true, levels_used: rounds, divergent: false };
        }
        if !lines_ok || arcs.len() >= MAX_ARCS {
            let k = history.len();
            let grew = k >= 4 && value.abs() > 10.0 * history[k - 4].abs();
            return QuadratureResult { value, error_estimate: err, converged: false, levels_used: rounds, divergent: grew };
        }
        let mut order: Vec<usize> = (0..arcs.len()).collect();
        order.sort_by(|&i, &j| arcs[j].err.total_cmp(&arcs[i].err).then(i.cmp(&j)));
        let mut split: Vec<usize> = order.into_iter().take(SPLIT_BATCH.min(MAX_ARCS - arcs.len())).collect();
        split.sort_unstable();
        let halves: Vec<(Arc, Arc)> = split
            .par_iter()
            .map(|&i| {
                let (a, b) = (arcs[i].a, arcs[i].b);
                let m = 0.5 * (a + b);
                (make_arc(&f, a, m, line_rtol, line_atol), make_arc(&f, m, b, line_rtol, line_atol))
            })
            .collect();
        let mut next = Vec::with_capacity(arcs.len() + split.len());
        let mut pending = split.iter().zip(halves).peekable();
        for (i, arc) in arcs.into_iter().enumerate() {
            match pending.peek() {
                Some(&(&k, _)) if k == i => {
                    let (_, (l, r)) = pending.next().expect("peeked");
                    next.push(l);
                    next.push(r);
                }
                _ => next.push(arc),
            }
        }
        arcs = next;
        rounds += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let (x, w) = gauss_legendre(10);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        for p in 0..20 {
            let q: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(p)).sum();
            let exact = if p % 2 == 1 { 0.0 } else { 2.0 / (p as f64 + 1.0) };
            assert!((q - exact).abs() < 1e-14, "degree {p}");
        }
        let (x3, w3) = gauss_legendre(3);
        assert!((x3[2] - 0.6f64.sqrt()).abs() < 1e-15);
        assert!((w3[1] - 8.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn constant_integrand_gives_pi() {
        let r = polar_quadrature(|_| 1.0, 1e-12);
        assert!(r.converged);
        assert!((r.value - PI).abs() < 1e-12);
    }

    #[test]
    fn sqrt_radius() {
        let r = polar_quadrature(|z| z.norm().sqrt(), 1e-10);
        assert!(r.converged);
        assert!((r.value - 4.0 * PI / 5.0).abs() < 1e-8);
    }

    #[test]
    fn inverse_square_is_divergent() {
        let r = polar_quadrature(|z| z.norm().powi(-2), 1e-8);
        assert!(r.divergent);
        assert_eq!(r.status(), Integrability::Divergent);
    }

    #[test]
    fn integrable_origin_singularity() {
        // int_D r^{-1.6} = 2 pi / 0.4
        let r = polar_quadrature(|z| z.norm().powf(-1.6), 1e-8);
        assert!(r.converged, "{r:?}");
        assert!((r.value - 2.0 * PI / 0.4).abs() < 1e-6);
    }

    #[test]
    fn kinked_and_angular_integrands() {
        // max(x, 0): integral 2/3
        let r = polar_quadrature(|z| z.re.max(0.0), 1e-10);
        assert!(r.converged, "{r:?}");
        assert!((r.value - 2.0 / 3.0).abs() < 1e-9);
        // x^2 y^2: pi/24
        let r = polar_quadrature(|z| z.re * z.re * z.im * z.im, 1e-12);
        assert!((r.value - PI / 24.0).abs() < 1e-12);
        // kink at r = 1/2
        let r = polar_quadrature(|z| (z.norm() - 0.5).abs(), 1e-10);
        let exact = PI / 4.0;
        assert!((r.value - exact).abs() < 1e-9, "{} vs {}", r.value, exact);
    }

    #[test]
    fn deterministic() {
        let f = |z: Point| (z.re * 3.0).sin() * z.norm().powf(0.3);
        let a = polar_quadrature(f, 1e-9);
        let b = polar_quadrature(f, 1e-9);
        assert_eq!(a.value.to_bits(), b.value.to_bits());
    }
}
