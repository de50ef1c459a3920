use std::f64::consts::PI;

use periodlab::haar::{sample_haar, so_d_average_g2, NormRoute, Rotation, SphereQuadrature};
use periodlab::lattice::{eval_periodization, periodize, CoefficientSum};
use periodlab::shells::{g2_by_shells, g2_by_shells_auto, shells_needed};
use periodlab::TestFunction;

/// Σ_k exp(−2π k²/a) / √a: one axis of Σ_m |f̂(m)|² for exp(−π a x²).
fn theta_axis(a: f64) -> f64 {
    (-60i64..=60).map(|k| (-2.0 * PI * (k * k) as f64 / a).exp()).sum::<f64>() / a
}

#[test]
fn identity_rotation_gives_product_of_theta_sums() {
    let f = TestFunction::from_id("gaussian:d=4:a=4,1,1,1").unwrap();
    let sum = CoefficientSum::new(&f, 1.0, 1e-14).unwrap();
    let exact: f64 = [4.0, 1.0, 1.0, 1.0].iter().map(|&a| theta_axis(a)).product();
    let got = sum.norm_sq(&f, &Rotation::identity(4));
    assert!((got - exact).abs() <= 1e-13 * exact, "{got} vs {exact}");
}

#[test]
fn isotropic_shell_sum_matches_theta_power() {
    for d in 2..=5 {
        let f = TestFunction::from_id(&format!("gaussian:d={d}")).unwrap();
        let quad = SphereQuadrature::monte_carlo(d, 64, 1).unwrap();
        let s = g2_by_shells_auto(&f, 1.0, &quad, 1e-14).unwrap();
        let exact = theta_axis(1.0).powi(d as i32);
        assert!((s.total - exact).abs() <= 1e-12 * exact, "d={d}");
        assert_eq!(s.stderr, 0.0);
        assert!((s.dc_term - 1.0).abs() < 1e-15);
    }
}

#[test]
fn grid_samples_match_direct_lattice_sum() {
    let f = TestFunction::from_id("gaussian:d=3:a=1,2,3").unwrap();
    let rho = sample_haar(3, 4);
    let g = periodize(&f, &rho, 6, 1e-13).unwrap();
    for idx in [0usize, 17, 101, 215] {
        let x = g.grid_point(idx);
        let direct = eval_periodization(&f, &rho, &x, 8.0);
        assert!((direct - g.samples[idx]).norm() < 1e-11, "idx {idx}");
    }
}

#[test]
fn grid_norm_matches_coefficient_norm() {
    let f = TestFunction::from_id("gaussian:d=2").unwrap();
    let rho = sample_haar(2, 8);
    let g = periodize(&f, &rho, 32, 1e-14).unwrap();
    let c = CoefficientSum::new(&f, 1.0, 1e-14).unwrap().norm_sq(&f, &rho);
    assert!((g.norm_sq() - c).abs() < 1e-12 * c);
}

#[test]
fn binary_grid_round_trips() {
    let f = TestFunction::from_id("gaussian:d=2").unwrap();
    let g = periodize(&f, &sample_haar(2, 1), 8, 1e-12).unwrap();
    let mut buf = Vec::new();
    g.write_binary(&mut buf).unwrap();
    let back = periodlab::lattice::PeriodizationGrid::read_binary(buf.as_slice()).unwrap();
    assert_eq!(back.samples, g.samples);
    assert_eq!(back.rotation.matrix(), g.rotation.matrix());
}

#[test]
fn haar_coefficient_route_agrees_with_shells() {
    let f = TestFunction::from_id("gaussian:d=4:a=3,2,1,1").unwrap();
    let est = so_d_average_g2(&f, 128, 2, NormRoute::Coefficients, 1e-12).unwrap();
    let quad = SphereQuadrature::monte_carlo(4, 4096, 2).unwrap();
    let s = g2_by_shells_auto(&f, 1.0, &quad, 1e-12).unwrap();
    let z = (est.estimate - s.total) / est.stderr.hypot(s.stderr);
    assert!(z.abs() < 4.0, "z = {z}");
}

#[test]
fn too_few_shells_are_refused() {
    let f = TestFunction::from_id("gaussian:d=4").unwrap();
    let quad = SphereQuadrature::monte_carlo(4, 16, 0).unwrap();
    assert!(g2_by_shells(&f, 1.0, 1, &quad, 1e-12).is_err());
    let n = shells_needed(&f, 1.0, 1e-12).unwrap();
    assert!(g2_by_shells(&f, 1.0, n, &quad, 1e-12).is_ok());
}
