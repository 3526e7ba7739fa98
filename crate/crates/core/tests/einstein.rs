use nalgebra::{DMatrix, SymmetricEigen};
use proptest::prelude::*;
use wulffstab::curvature;
use wulffstab::einstein::{self, EigenSpectrum};

fn arb_spectrum() -> impl Strategy<Value = Vec<f64>> {
    (3usize..=5).prop_flat_map(|n| prop::collection::vec(-3.0..3.0f64, n))
}

fn arb_kappa() -> impl Strategy<Value = f64> {
    prop::sample::select(vec![-1.0, 0.0, 1.0])
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

proptest! {
    #[test]
    fn spectrum_is_stored_sorted(lambda in arb_spectrum(), kappa in arb_kappa()) {
        let s = EigenSpectrum::new(lambda.clone(), kappa).unwrap();
        let expected = sorted(lambda);
        prop_assert_eq!(s.lambda(), expected.as_slice());
    }

    #[test]
    fn flat_polynomials_are_quartic(lambda in arb_spectrum(), t in 0.1..10.0f64) {
        let (p1, q1) = einstein::polys(&EigenSpectrum::new(lambda.clone(), 0.0).unwrap());
        let scaled: Vec<f64> = lambda.iter().map(|l| l * t).collect();
        let (pt, qt) = einstein::polys(&EigenSpectrum::new(scaled, 0.0).unwrap());
        let t4 = t.powi(4);
        prop_assert!((pt - t4 * p1).abs() <= 1e-12 * t4 * (1.0 + p1));
        prop_assert!((qt - t4 * q1).abs() <= 1e-12 * t4 * (1.0 + q1));
    }

    #[test]
    fn ricci_spectrum_matches_matrix_route(lambda in arb_spectrum(), seed in prop::collection::vec(-1.0..1.0f64, 25)) {
        let n = lambda.len();
        let q = DMatrix::from_fn(n, n, |i, j| seed[(i * 5 + j) % 25] + if i == j { 2.0 } else { 0.0 }).qr().q();
        let h = &q * DMatrix::from_diagonal(&nalgebra::DVector::from_vec(lambda.clone())) * q.transpose();
        let (ric, _) = curvature::gauss_ricci(&h);
        let eig = sorted(SymmetricEigen::new(ric).eigenvalues.iter().copied().collect());
        let spec = sorted(einstein::ricci_spectrum(&EigenSpectrum::new(lambda, 1.0).unwrap()));
        for (a, b) in eig.iter().zip(&spec) {
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()) * 10.0);
        }
    }

    #[test]
    fn scalar_curvature_trace_consistency(lambda in arb_spectrum()) {
        let spec = EigenSpectrum::new(lambda.clone(), 0.0).unwrap();
        let r_ricci: f64 = einstein::ricci_spectrum(&spec).iter().sum();
        let h: f64 = lambda.iter().sum();
        let r_gauss = h * h - lambda.iter().map(|l| l * l).sum::<f64>();
        prop_assert!((r_ricci - r_gauss).abs() <= 1e-12 * (1.0 + r_gauss.abs()));
    }

    #[test]
    fn polynomials_are_nonnegative_and_vanish_on_umbilic_points(lambda in arb_spectrum(), kappa in arb_kappa()) {
        let (p, q) = einstein::polys(&EigenSpectrum::new(lambda.clone(), kappa).unwrap());
        prop_assert!(p >= 0.0 && q >= 0.0);
        if kappa > 0.0 {
            let n = lambda.len();
            let (p0, q0) = einstein::polys(&EigenSpectrum::new(vec![kappa.sqrt(); n], kappa).unwrap());
            prop_assert!(p0.abs() <= 1e-24 && q0.abs() <= 1e-24);
        }
    }
}

#[test]
fn taylor_expansion_along_a_flat_direction_is_exact() {
    for n in 3..=5 {
        for t in [1e-1, 1e-2, 1e-3, 1e-4] {
            let mut lambda = vec![0.0; n];
            lambda[0] = 1.0;
            lambda[1] = t;
            let (p, q) = einstein::polys(&EigenSpectrum::new(lambda, 0.0).unwrap());
            assert!((p - 2.0 * t * t).abs() <= 1e-15 * t * t);
            assert!((q - 2.0 * t * t).abs() <= 1e-15 * t * t);
        }
    }
}

#[test]
fn analytic_zeros_are_zeros_of_both_polynomials() {
    for n in 3..=5 {
        for kappa in [-1.0, 0.0, 1.0] {
            for z in einstein::analytic_zeros(n, kappa) {
                let (p, q) = einstein::polys(&EigenSpectrum::new(z, kappa).unwrap());
                assert!(p <= 1e-20 && q <= 1e-20, "n={n} kappa={kappa}: p={p} q={q}");
            }
        }
    }
}

#[test]
fn negative_curvature_has_extra_zeros_of_q_in_dimension_four() {
    let s = 3f64.sqrt();
    let (p, q) = einstein::polys(&EigenSpectrum::new(vec![s, -s, s, -s], -1.0).unwrap());
    assert!(q <= 1e-24);
    assert!(p > 1.0);
}

#[test]
fn ratio_bounds_on_flat_three_space() {
    let b = einstein::ratio_bounds(3, 0.0, 20_000, 7).unwrap();
    assert!(b.c1 > 0.0 && b.c1 <= b.c2);
    assert!((b.c1 - 0.5).abs() < 1e-3 && (b.c2 - 2.0).abs() < 1e-3, "{} {}", b.c1, b.c2);
}

#[test]
fn sharp_pinching_holds_where_stated_constant_fails() {
    let spec = EigenSpectrum::new(vec![1.0, 1.0, 2.0], 0.0).unwrap();
    let stated = einstein::pinching_check(&spec, 1.0).unwrap();
    let sharp = einstein::sharp_pinching_check(&spec, 1.0).unwrap();
    assert!(!stated.pass && sharp.pass);
    let sweep = einstein::pinching_sweep(4, 5_000, 3).unwrap();
    assert_eq!(sweep.violations, 0);
    assert_eq!(sweep.sharp_violations, 0);
}
