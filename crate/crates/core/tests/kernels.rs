use std::f64::consts::PI;

use num_complex::Complex64;
use periodlab::kernels::{kernel_abs_sum, kernel_d_n_nu, kernel_family, q_bump, surface_measure_ft, KernelProbe};
use periodlab::quadrature::GaussLegendre;

/// Same integral on a 10× finer grid with a different Gauss rule.
fn refined(d: usize, n: f64, nu: f64, x: f64, panels: usize) -> Complex64 {
    let rule = GaussLegendre::new(12);
    let h = 1.5 / panels as f64;
    let mut acc = Complex64::new(0.0, 0.0);
    for k in 0..panels {
        let lo = 0.5 + h * k as f64;
        for (t, w) in rule.mapped(lo, lo + h) {
            let amp = n * q_bump(t) * (n * t).powi(d as i32 - 1) * surface_measure_ft(d, n * t * x);
            acc += Complex64::from_polar(w * amp, -2.0 * PI * nu * n * n * t * t);
        }
    }
    acc
}

#[test]
fn kernel_matches_refined_quadrature() {
    let probe = KernelProbe { dim: 4, n: 8, nu: 1, b: 0.0, x_mag: 16.0 };
    let v = kernel_d_n_nu(&probe).unwrap();
    let r = refined(4, 8.0, 1.0, 16.0, 4480);
    assert!((v - r).norm() <= 1e-6 * r.norm(), "{v} vs {r}");
}

#[test]
fn family_agrees_with_single_probes_and_phase_shift() {
    let fam = kernel_family(5, 8, 20.0, 6).unwrap();
    for nu in 1..=6i64 {
        let p = KernelProbe { dim: 5, n: 8, nu, b: 0.0, x_mag: 20.0 };
        let v = kernel_d_n_nu(&p).unwrap();
        let f = fam.values[nu as usize - 1];
        assert!((v - f).norm() <= 1e-6 * f.norm() + 10.0 * fam.noise_floor);
        let shifted = kernel_d_n_nu(&KernelProbe { b: 0.3, ..p }).unwrap();
        assert!((shifted.norm() - v.norm()).abs() <= 1e-6 * v.norm() + 10.0 * fam.noise_floor);
        let neg = kernel_d_n_nu(&KernelProbe { nu: -nu, ..p }).unwrap();
        assert!((neg.norm() - v.norm()).abs() <= 1e-6 * v.norm() + 10.0 * fam.noise_floor);
    }
}

#[test]
fn terms_decay_beyond_the_stationary_window() {
    // stationary ν lie in [|x|/4N, |x|/N] = [1, 4]
    let fam = kernel_family(4, 8, 32.0, 40).unwrap();
    let mags: Vec<f64> = fam.values.iter().map(|v| v.norm()).collect();
    let peak = mags[..4].iter().cloned().fold(0.0, f64::max);
    for (i, m) in mags.iter().enumerate().skip(7) {
        assert!(*m < 0.1 * peak, "nu={}: {m} vs peak {peak}", i + 1);
    }
    assert!(mags[39] < 1e-3 * peak);
}

#[test]
fn abs_sum_is_twice_positive_frequencies() {
    let s = kernel_abs_sum(4, 8, 16.0, 10_000).unwrap();
    let fam = kernel_family(4, 8, 16.0, s.nu_max).unwrap();
    let half: f64 = fam.values.iter().map(|v| v.norm()).sum();
    assert!((s.measured - 2.0 * half).abs() <= 1e-9 * s.measured);
    assert!(s.upper_bound >= s.measured);
}

#[test]
fn q_is_a_partition_of_unity() {
    for k in 0..=100 {
        let x = 1.0 + k as f64 / 100.0;
        assert!((q_bump(x) + q_bump(x / 2.0) - 1.0).abs() < 1e-14);
    }
    assert_eq!(q_bump(0.5), 0.0);
    assert_eq!(q_bump(2.0), 0.0);
}

#[test]
fn invalid_probes_are_rejected() {
    assert!(kernel_d_n_nu(&KernelProbe { dim: 4, n: 8, nu: 0, b: 0.0, x_mag: 4.0 }).is_err());
    assert!(kernel_d_n_nu(&KernelProbe { dim: 4, n: 8, nu: 1, b: 0.0, x_mag: 0.5 }).is_err());
}
