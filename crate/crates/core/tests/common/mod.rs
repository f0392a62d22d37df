//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

/// `J_n(x) = (1/pi) int_0^pi cos(n t - x sin t) dt` by the trapezoid rule, which
/// converges geometrically for this smooth periodic integrand.
pub fn bessel_j(n: i32, x: f64) -> f64 {
    const M: usize = 256;
    let h = PI / M as f64;
    let f = |t: f64| (n as f64 * t - x * t.sin()).cos();
    let mut sum = 0.5 * (f(0.0) + f(PI));
    for k in 1..M {
        sum += f(k as f64 * h);
    }
    sum * h / PI
}

/// `J_n'(x) = (J_{n-1}(x) - J_{n+1}(x)) / 2`.
pub fn bessel_j_prime(n: i32, x: f64) -> f64 {
    0.5 * (bessel_j(n - 1, x) - bessel_j(n + 1, x))
}

/// Positive zeros of `J_n'` below `x_max`, by sign-change scan and bisection.
/// The scan starts at `x = n`, below the first zero, where `J_n'` is not yet
/// lost in rounding.
pub fn bessel_prime_zeros(n: i32, x_max: f64) -> Vec<f64> {
    let step = 0.01f64;
    let mut zeros = Vec::new();
    let mut a = step.max(n as f64);
    let mut fa = bessel_j_prime(n, a);
    while a < x_max {
        let b = a + step;
        let fb = bessel_j_prime(n, b);
        if fa == 0.0 {
            zeros.push(a);
        } else if fa * fb < 0.0 {
            let (mut lo, mut hi, mut flo) = (a, b, fa);
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                let fm = bessel_j_prime(n, mid);
                if fm * flo <= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                    flo = fm;
                }
            }
            zeros.push(0.5 * (lo + hi));
        }
        a = b;
        fa = fb;
    }
    zeros
}

/// The first `count` Neumann eigenvalues of the Laplacian on the unit disc with
/// multiplicity, starting with the zero mode.
pub fn disc_neumann_eigenvalues(count: usize) -> Vec<f64> {
    let mut values = vec![0.0];
    for n in 0..12 {
        for z in bessel_prime_zeros(n, 20.0) {
            values.push(z * z);
            if n > 0 {
                values.push(z * z);
            }
        }
    }
    values.sort_by(f64::total_cmp);
    values.truncate(count);
    values
}

/// `int_D g` by the midpoint rule on an `n_r x n_theta` polar grid.
pub fn polar_midpoint(g: impl Fn(f64, f64) -> f64, n_r: usize, n_theta: usize) -> f64 {
    let (dr, dt) = (1.0 / n_r as f64, 2.0 * PI / n_theta as f64);
    let mut total = 0.0;
    for i in 0..n_r {
        let r = (i as f64 + 0.5) * dr;
        let mut ring = 0.0;
        for j in 0..n_theta {
            let t = (j as f64 + 0.5) * dt;
            ring += g(r * t.cos(), r * t.sin());
        }
        total += ring * r;
    }
    total * dr * dt
}

/// `d_s(h1, h2)` on the fixed 4096 x 8192 polar midpoint grid.
pub fn d_s_oracle(h1: impl Fn(f64, f64) -> f64, h2: impl Fn(f64, f64) -> f64, s: f64) -> f64 {
    let g = |x: f64, y: f64| {
        let (a, b) = (h1(x, y), h2(x, y));
        ((a - b).abs() * a.min(b).powf((1.0 - s) / s)).powf(s)
    };
    polar_midpoint(g, 4096, 8192).powf(1.0 / s)
}
