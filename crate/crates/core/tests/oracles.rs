mod common;

use common::{bessel_j, bessel_prime_zeros, d_s_oracle, disc_neumann_eigenvalues, polar_midpoint};

#[test]
fn bessel_oracle_reproduces_tabulated_zeros() {
    assert!((bessel_j(0, 0.0) - 1.0).abs() < 1e-14);
    assert!((bessel_j(1, 2.0) - 0.576_724_807_756_873_4).abs() < 1e-13);
    assert!((bessel_prime_zeros(1, 2.0)[0] - 1.841_183_781_340_659).abs() < 1e-12);
    assert!((bessel_prime_zeros(0, 4.0)[0] - 3.831_705_970_207_512).abs() < 1e-12);
    let mu = disc_neumann_eigenvalues(6);
    for (got, want) in mu.iter().zip([0.0, 3.390, 3.390, 9.328, 9.328, 14.682]) {
        assert!((got - want).abs() < 1e-3, "{mu:?}");
    }
}

#[test]
fn midpoint_oracle_integrates_polynomials() {
    let area = polar_midpoint(|_, _| 1.0, 512, 1024);
    assert!((area - std::f64::consts::PI).abs() < 1e-5);
    let second = polar_midpoint(|x, y| x * x + y * y, 512, 1024);
    assert!((second - std::f64::consts::FRAC_PI_2).abs() < 1e-5);
}

#[test]
fn d_s_oracle_vanishes_on_equal_weights() {
    assert_eq!(d_s_oracle(|_, _| 1.0, |_, _| 1.0, 4.0 / 3.0), 0.0);
}
