use periodlab::haar::{sample_haar_indexed, SphereQuadrature};
use periodlab::lattice::eval_periodization;
use periodlab::shells::g2_by_shells_auto;
use periodlab::sos::build_rd_table;
use periodlab::TestFunction;
use proptest::prelude::*;

fn gaussian() -> impl Strategy<Value = TestFunction> {
    (2usize..=4, prop::collection::vec(0.5f64..3.0, 4))
        .prop_map(|(d, a)| periodlab::make_gaussian(d, &a[..d]).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn periodization_is_lattice_periodic(f in gaussian(), seed in 0u64..1000, x in prop::collection::vec(-1.0f64..1.0, 4), axis in 0usize..4, shift in -2i32..=2) {
        let d = f.dimension();
        let rho = sample_haar_indexed(d, seed, 0);
        let x = &x[..d];
        let mut y = x.to_vec();
        y[axis % d] += shift as f64;
        let a = eval_periodization(&f, &rho, x, 8.0);
        let b = eval_periodization(&f, &rho, &y, 8.0);
        prop_assert!((a - b).norm() < 1e-12 * a.norm().max(1.0));
    }

    #[test]
    fn haar_samples_are_rotations(d in 2usize..9, seed: u64, idx in 0u64..1_000_000) {
        let r = sample_haar_indexed(d, seed, idx);
        prop_assert!(r.orthogonality_defect() < 1e-12);
        prop_assert!((r.determinant() - 1.0).abs() < 1e-12);
        let again = sample_haar_indexed(d, seed, idx);
        prop_assert_eq!(r.matrix(), again.matrix());
    }

    #[test]
    fn rotations_preserve_length(d in 2usize..7, seed: u64, v in prop::collection::vec(-5.0f64..5.0, 7)) {
        let r = sample_haar_indexed(d, seed, 0);
        let v = &v[..d];
        let w = r.apply(v);
        let n0: f64 = v.iter().map(|x| x * x).sum();
        let n1: f64 = w.iter().map(|x| x * x).sum();
        prop_assert!((n0 - n1).abs() <= 1e-12 * n0.max(1.0));
    }

    #[test]
    fn cumulative_counts_step_by_shell_size(d in 1usize..7, n in 0usize..300) {
        let t = build_rd_table(d, 300).unwrap();
        if n > 0 {
            prop_assert_eq!(t.cumulative(n) - t.cumulative(n - 1), t.count(n));
        } else {
            prop_assert_eq!(t.cumulative(0), t.count(0));
        }
    }

    #[test]
    fn shell_terms_are_nonnegative_and_ordered(d in 2usize..6, lambda in 0.5f64..2.0) {
        let f = TestFunction::from_id(&format!("gaussian:d={d}")).unwrap().dilated(lambda).unwrap();
        let quad = SphereQuadrature::monte_carlo(d, 32, 0).unwrap();
        let s = g2_by_shells_auto(&f, 1.0, &quad, 1e-12).unwrap();
        prop_assert!(s.terms.iter().all(|t| t.contribution >= 0.0 && t.average >= 0.0));
        // A(√n) decreases for a radial Gaussian
        for w in s.terms.windows(2) {
            prop_assert!(w[1].average <= w[0].average * (1.0 + 1e-12));
        }
    }

    #[test]
    fn dilation_trades_against_lattice_scale(d in 2usize..6, lambda in 0.5f64..2.0) {
        // Σ|f̂_λ(m)|² = λ^d Σ|f̂(λm)|²
        let f = TestFunction::from_id(&format!("gaussian:d={d}")).unwrap();
        let quad = SphereQuadrature::monte_carlo(d, 32, 0).unwrap();
        let lhs = g2_by_shells_auto(&f.dilated(lambda).unwrap(), 1.0, &quad, 1e-13).unwrap().total;
        let rhs = lambda.powi(d as i32) * g2_by_shells_auto(&f, lambda, &quad, 1e-13).unwrap().total;
        prop_assert!((lhs - rhs).abs() <= 1e-10 * lhs);
    }

    #[test]
    fn l2_norm_is_dilation_invariant(f in gaussian(), lambda in 0.5f64..2.0) {
        let a = f.lp_norm(2.0).unwrap();
        let b = f.dilated(lambda).unwrap().lp_norm(2.0).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * a);
    }

    #[test]
    fn quotient_norm_splits_off_the_constant(f in gaussian()) {
        let quad = SphereQuadrature::monte_carlo(f.dimension(), 64, 0).unwrap();
        let s = g2_by_shells_auto(&f, 1.0, &quad, 1e-12).unwrap();
        prop_assert!((s.modulo_constants() + s.dc_term - s.total).abs() <= 1e-12 * s.total);
    }
}
