use proptest::prelude::*;
use wulffstab::geom;
use wulffstab::mesh::{self, DiffOperator, ScalarField, TensorField, TensorKind};
use wulffstab::sh::{self, SpectralField};

fn arb_coeffs(l_max: usize) -> impl Strategy<Value = SpectralField> {
    prop::collection::vec(-1.0..1.0f64, sh::num_coeffs(l_max)).prop_map(move |coeffs| SpectralField { l_max, coeffs })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn synthesis_then_analysis_is_identity(field in arb_coeffs(4)) {
        let s = mesh::build_sphere_mesh(3).unwrap();
        let values = mesh::sh_synthesize(&s, &field).values;
        let back = mesh::sh_analyze(&s, &values, 4).unwrap();
        for (a, b) in field.coeffs.iter().zip(&back.coeffs) {
            prop_assert!((a - b).abs() <= 1e-10);
        }
    }

    #[test]
    fn tensor_norms_ignore_frame_rotation(
        entries in prop::collection::vec([-2.0..2.0f64, -2.0..2.0, -2.0..2.0, -2.0..2.0], 50),
        angles in prop::collection::vec(0.0..std::f64::consts::TAU, 50),
        p in 1.5..6.0f64,
    ) {
        let field = TensorField { values: entries.iter().map(|e| [[e[0], e[1]], [e[2], e[3]]]).collect(), kind: TensorKind::Operator };
        let w = vec![0.02; 50];
        let a = mesh::tensor_lp_norm(&field, &w, p).unwrap();
        let b = mesh::tensor_lp_norm(&field.rotated(&angles), &w, p).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0));
    }
}

#[test]
fn laplacian_of_harmonics_converges_to_eigenvalue() {
    let mut errors = Vec::new();
    for level in 3..=5 {
        let s = mesh::build_sphere_mesh(level).unwrap();
        let op = DiffOperator::new(&s.domain()).unwrap();
        let mut worst: f64 = 0.0;
        for (l, m) in [(1usize, 0i64), (2, 1), (3, -2)] {
            let y = ScalarField::sample(&s.vertices, &SpectralField::harmonic(l, m, 1.0));
            let lap = op.laplacian(&y.values);
            let expected = -((l * (l + 1)) as f64);
            let num: f64 = lap.iter().zip(&y.values).map(|(a, b)| (a - expected * b).powi(2)).sum();
            let den: f64 = y.values.iter().map(|b| (expected * b).powi(2)).sum();
            worst = worst.max((num / den).sqrt());
        }
        errors.push((s.edge_length(), worst));
    }
    for w in errors.windows(2) {
        assert!(w[1].1 < w[0].1, "{errors:?}");
        let order = (w[0].1 / w[1].1).ln() / (w[0].0 / w[1].0).ln();
        assert!(order >= 1.0, "order {order}: {errors:?}");
    }
}

#[test]
fn gradient_of_linear_function_is_tangential_projection() {
    let c = [0.3, -0.5, 0.8];
    let s = mesh::build_sphere_mesh(4).unwrap();
    let op = DiffOperator::new(&s.domain()).unwrap();
    let values: Vec<f64> = s.vertices.iter().map(|x| geom::dot(c, *x)).collect();
    let grad = op.gradient(&values);
    let h = s.edge_length();
    for (g, x) in grad.iter().zip(&s.vertices) {
        let tangential = geom::sub(c, geom::scale(*x, geom::dot(c, *x)));
        assert!(geom::norm(geom::sub(*g, tangential)) <= h);
    }
}

#[test]
fn divergence_is_minus_adjoint_of_gradient() {
    let s = mesh::build_sphere_mesh(5).unwrap();
    let d = s.domain();
    let op = DiffOperator::new(&d).unwrap();
    let a = ScalarField::sample(&s.vertices, &SpectralField::harmonic(3, 1, 1.0).add(&SpectralField::harmonic(4, -2, 0.7)));
    let b = ScalarField::sample(&s.vertices, &SpectralField::harmonic(3, 1, 0.8).add(&SpectralField::harmonic(4, -2, -0.3)).add(&SpectralField::harmonic(2, 0, 1.0)));
    let ga = op.gradient(&a.values);
    let gb = op.gradient(&b.values);
    let lhs = d.inner(&op.divergence(&ga), &b.values);
    let rhs: f64 = -mesh::deterministic_sum(ga.iter().zip(&gb).zip(&d.weights).map(|((x, y), w)| geom::dot(*x, *y) * w));
    assert!((lhs - rhs).abs() <= 0.05 * rhs.abs(), "{lhs} vs {rhs}");
}
