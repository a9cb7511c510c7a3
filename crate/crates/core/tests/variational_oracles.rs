//! Independent checks of the analytic trial-function machinery: a
//! fourth-order finite-difference Laplacian in Cartesian coordinates, and a
//! graded tensor-product quadrature that does not use the corner transform.

use nalgebra::Vector3;
use proptest::prelude::*;
use spectral_bounds::quadrature::{gauss_legendre, QuadSettings};
use spectral_bounds::variational::{rayleigh, second_moment, trial_moments, ProlateTrial, TrialParams};

/// `(A psi)(p)` with `-1/2` times a 4th-order central-difference Laplacian.
fn a_psi_fd(trial: &ProlateTrial, p: &Vector3<f64>) -> f64 {
    let half = 0.5 * trial.r;
    let ra = (p - Vector3::new(0.0, 0.0, -half)).norm();
    let rb = (p - Vector3::new(0.0, 0.0, half)).norm();
    let h = (0.02 * ra.min(rb)).min(2e-3);
    let f = |q: Vector3<f64>| trial.psi_cartesian(&q);
    let mut lap = 0.0;
    for axis in 0..3 {
        let mut e = Vector3::zeros();
        e[axis] = h;
        lap += (-f(p + 2.0 * e) + 16.0 * f(p + e) - 30.0 * f(*p) + 16.0 * f(p - e) - f(p - 2.0 * e)) / (12.0 * h * h);
    }
    -0.5 * lap - (trial.za / ra + trial.zb / rb) * f(*p)
}

fn spheroidal_to_cartesian(r: f64, xi: f64, eta: f64) -> Vector3<f64> {
    let rho = 0.5 * r * ((xi * xi - 1.0) * (1.0 - eta * eta)).max(0.0).sqrt();
    Vector3::new(rho, 0.0, 0.5 * r * xi * eta)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]
    #[test]
    fn analytic_image_matches_finite_differences(
        alpha in 0.6f64..2.0, beta in -0.3f64..0.8, r in 0.4f64..6.0,
        xi in 1.05f64..4.0, eta in -0.95f64..0.95,
    ) {
        let trial = ProlateTrial::new(&TrialParams { alpha, beta, r }).unwrap();
        let p = spheroidal_to_cartesian(r, xi, eta);
        let analytic = trial.apply(xi, eta);
        let fd = a_psi_fd(&trial, &p);
        prop_assert!((analytic - fd).abs() < 1e-6 * analytic.abs().max(trial.psi(xi, eta)),
            "{} vs {}", analytic, fd);
    }
}

/// Break points in `[0, 1]` graded geometrically toward 0.
fn graded(levels: i32) -> Vec<f64> {
    let mut b: Vec<f64> = (0..levels).map(|k| 10f64.powi(k - levels)).collect();
    b.insert(0, 0.0);
    b.extend([0.3, 0.6, 1.0]);
    b
}

/// `|A psi|^2 / |psi|^2`, with `A psi` from finite differences, on a tensor
/// grid graded toward `xi = 1` and `eta = +-1`.
fn second_moment_oracle(trial: &ProlateTrial) -> f64 {
    let rule = gauss_legendre(12).unwrap();
    let scale = 1.0 / (2.0 * trial.a);
    let mut xi_breaks: Vec<f64> = graded(10).iter().map(|u| 1.0 + u * scale.min(1.0)).collect();
    let mut top = *xi_breaks.last().unwrap();
    while (2.0 * trial.a * (top - 1.0)) < 45.0 {
        top += 2.0 * scale;
        xi_breaks.push(top);
    }
    let v = graded(10);
    let mut eta_breaks: Vec<f64> = v.iter().map(|s| -1.0 + s).collect();
    eta_breaks.extend(v.iter().rev().skip(1).map(|s| 1.0 - s));
    let (mut num, mut den) = (0.0, 0.0);
    for xw in xi_breaks.windows(2) {
        for (xi, wx) in rule.iter_mapped(xw[0], xw[1]) {
            for ew in eta_breaks.windows(2) {
                for (eta, we) in rule.iter_mapped(ew[0], ew[1]) {
                    let jac = (xi - eta) * (xi + eta);
                    let p = spheroidal_to_cartesian(trial.r, xi, eta);
                    let ap = a_psi_fd(trial, &p);
                    let psi = trial.psi(xi, eta);
                    num += wx * we * jac * ap * ap;
                    den += wx * we * jac * psi * psi;
                }
            }
        }
    }
    num / den
}

#[test]
fn second_moment_spot_value_matches_oracle() {
    let params = TrialParams { alpha: 1.35, beta: 0.2, r: 2.0 };
    let ours = second_moment(&params, &QuadSettings::default()).unwrap();
    let oracle = second_moment_oracle(&ProlateTrial::new(&params).unwrap());
    assert!((ours - oracle).abs() < 1e-5 * oracle.abs(), "{ours} vs {oracle}");
}

#[test]
fn second_moment_matches_oracle_at_large_separation() {
    let params = TrialParams { alpha: 1.0463, beta: 0.7089, r: 6.0 };
    let ours = second_moment(&params, &QuadSettings::default()).unwrap();
    let oracle = second_moment_oracle(&ProlateTrial::new(&params).unwrap());
    assert!((ours - oracle).abs() < 1e-5 * oracle.abs(), "{ours} vs {oracle}");
}

#[test]
fn variance_is_nonnegative() {
    let q = QuadSettings::default();
    for &(alpha, beta, r) in &[(0.7, -0.3, 0.5), (1.9, 0.9, 3.3), (1.1, 0.0, 8.0), (1.5, 0.5, 1.0)] {
        let m = trial_moments(&ProlateTrial::new(&TrialParams { alpha, beta, r }).unwrap(), true, &q).unwrap();
        assert!(m.variance().unwrap() > 0.0);
    }
}

#[test]
fn trial_means_stay_above_ground_state() {
    // Exact electronic ground-state energy of H2+ at R = 2.
    let q = QuadSettings::default();
    for &(alpha, beta) in &[(1.0, 0.0), (1.35, 0.2), (1.3, 0.45), (2.0, -0.2)] {
        let (_, mean) = rayleigh(&TrialParams { alpha, beta, r: 2.0 }, &q).unwrap();
        assert!(mean > -1.1026342, "{mean}");
    }
}
