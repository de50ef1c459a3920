//! Bessel functions of integer and half-integer order, plus sphere constants.
//!
//! Only the orders `ν = d/2 − 1` for integer `d ≥ 2` are ever needed, so the order is
//! passed as `2ν` (a non-negative integer).

use std::f64::consts::PI;

use statrs::function::gamma::gamma;

/// Surface area ω_{d−1} = 2π^{d/2}/Γ(d/2) of the unit sphere in R^d.
pub fn sphere_area(d: usize) -> f64 {
    2.0 * PI.powf(d as f64 / 2.0) / gamma(d as f64 / 2.0)
}

/// Volume of the unit ball in R^d.
pub fn ball_volume(d: usize) -> f64 {
    sphere_area(d) / d as f64
}

/// J_ν(z) for `ν = two_nu / 2`, `z ≥ 0`.
pub fn bessel_j(two_nu: u32, z: f64) -> f64 {
    debug_assert!(z >= 0.0);
    if two_nu % 2 == 0 {
        let n = two_nu / 2;
        if z <= 30.0 {
            bessel_j_integer_trapezoid(n, z)
        } else {
            bessel_j_hankel(two_nu, z)
        }
    } else if z <= 8.0 {
        bessel_j_series(two_nu, z)
    } else {
        // the Hankel expansion terminates for half-integer orders
        bessel_j_hankel(two_nu, z)
    }
}

/// J_n(z) = (1/2π)∫₀^{2π} cos(nτ − z sin τ) dτ by the periodic trapezoid rule,
/// which converges geometrically once the node count exceeds z + n.
fn bessel_j_integer_trapezoid(n: u32, z: f64) -> f64 {
    let m = (z + n as f64) as usize + 48;
    let h = 2.0 * PI / m as f64;
    let nf = n as f64;
    let s: f64 = (0..m)
        .map(|k| {
            let t = h * k as f64;
            (nf * t - z * t.sin()).cos()
        })
        .sum();
    s / m as f64
}

fn bessel_j_series(two_nu: u32, z: f64) -> f64 {
    let nu = two_nu as f64 / 2.0;
    if z == 0.0 {
        return if two_nu == 0 { 1.0 } else { 0.0 };
    }
    let half = 0.5 * z;
    let mut term = half.powf(nu) / gamma(nu + 1.0);
    let mut sum = term;
    let q = -half * half;
    for k in 0..200 {
        let kf = k as f64;
        term *= q / ((kf + 1.0) * (kf + nu + 1.0));
        sum += term;
        if term.abs() < 1e-18 * sum.abs().max(1e-300) {
            break;
        }
    }
    sum
}

fn bessel_j_hankel(two_nu: u32, z: f64) -> f64 {
    let nu = two_nu as f64 / 2.0;
    let mu = 4.0 * nu * nu;
    let mut p = 1.0;
    let mut q = 0.0;
    let mut a = 1.0; // a_k(ν)/z^k
    let mut last = f64::INFINITY;
    for k in 1..400 {
        let kf = k as f64;
        a *= (mu - (2.0 * kf - 1.0).powi(2)) / (kf * 8.0 * z);
        if a == 0.0 {
            break;
        }
        // asymptotic (divergent) for integer orders: stop at the smallest term
        if two_nu % 2 == 0 && a.abs() > last {
            break;
        }
        last = a.abs();
        match k % 4 {
            1 => q += a,
            2 => p -= a,
            3 => q -= a,
            _ => p += a,
        }
        if a.abs() < 1e-17 {
            break;
        }
    }
    let chi = z - (0.5 * nu + 0.25) * PI;
    (2.0 / (PI * z)).sqrt() * (p * chi.cos() - q * chi.sin())
}

#[cfg(test)]
mod tests {
    use super::*;

    // closed forms for half-integer orders
    fn j_half(z: f64) -> f64 {
        (2.0 / (PI * z)).sqrt() * z.sin()
    }
    fn j_three_halves(z: f64) -> f64 {
        (2.0 / (PI * z)).sqrt() * (z.sin() / z - z.cos())
    }

    #[test]
    fn half_integer_orders_match_closed_forms() {
        for &z in &[1e-3, 0.1, 1.0, 5.0, 7.99, 8.01, 20.0, 123.4, 5e4] {
            assert!((bessel_j(1, z) - j_half(z)).abs() < 1e-13, "z={z}");
            assert!((bessel_j(3, z) - j_three_halves(z)).abs() < 1e-12, "z={z}");
        }
    }

    #[test]
    fn integer_orders_reference_values() {
        // tabulated values (Abramowitz & Stegun, table 9.1)
        assert!((bessel_j(0, 1.0) - 0.765_197_686_557_966_6).abs() < 1e-14);
        assert!((bessel_j(2, 1.0) - 0.440_050_585_744_933_5).abs() < 1e-14);
        assert!((bessel_j(4, 10.0) - 0.254_630_313_685_120_6).abs() < 1e-14);
        assert!((bessel_j(0, 0.0) - 1.0).abs() < 1e-15);
        assert!(bessel_j(2, 0.0).abs() < 1e-15);
    }

    #[test]
    fn integer_orders_agree_across_regimes() {
        for n in 0..4u32 {
            for &z in &[30.0, 45.5] {
                let a = bessel_j_integer_trapezoid(n, z);
                let b = bessel_j_hankel(2 * n, z);
                assert!((a - b).abs() < 1e-14, "n={n} z={z}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn recurrence_holds_at_large_argument() {
        // J_{ν−1} + J_{ν+1} = (2ν/z) J_ν
        for &z in &[31.0, 77.7, 1500.0] {
            let lhs = bessel_j(0, z) + bessel_j(4, z);
            let rhs = 2.0 / z * bessel_j(2, z);
            assert!((lhs - rhs).abs() < 1e-14, "z={z}");
        }
    }

    #[test]
    fn sphere_constants() {
        assert!((sphere_area(2) - 2.0 * PI).abs() < 1e-13);
        assert!((sphere_area(3) - 4.0 * PI).abs() < 1e-13);
        assert!((sphere_area(4) - 2.0 * PI * PI).abs() < 1e-12);
        assert!((ball_volume(3) - 4.0 / 3.0 * PI).abs() < 1e-13);
    }
}
