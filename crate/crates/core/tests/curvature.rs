use nalgebra::DMatrix;
use proptest::prelude::*;
use wulffstab::curvature;
use wulffstab::geom;
use wulffstab::integrand::Integrand;
use wulffstab::mesh::{ScalarField, TensorField, TensorKind};
use wulffstab::surface;

fn arb_symmetric() -> impl Strategy<Value = DMatrix<f64>> {
    (3usize..=5).prop_flat_map(|n| {
        prop::collection::vec(-3.0..3.0f64, n * n).prop_map(move |v| {
            let a = DMatrix::from_vec(n, n, v);
            (&a + a.transpose()) * 0.5
        })
    })
}

fn arb_field(len: usize) -> impl Strategy<Value = TensorField> {
    prop::collection::vec([-2.0..2.0f64, -2.0..2.0, -2.0..2.0, -2.0..2.0], len)
        .prop_map(|e| TensorField { values: e.iter().map(|x| [[x[0], x[1]], [x[2], x[3]]]).collect(), kind: TensorKind::Operator })
}

proptest! {
    #[test]
    fn gauss_ricci_matches_riemann_contraction(h in arb_symmetric()) {
        let n = h.nrows();
        let (ric, r) = curvature::gauss_ricci(&h);
        let oracle = curvature::ricci_from_riemann(&curvature::riemann_bruteforce(&h), n);
        prop_assert!((&ric - &oracle).amax() <= 1e-12 * (1.0 + oracle.amax()));
        prop_assert!((r - ric.trace()).abs() <= 1e-12 * (1.0 + r.abs()));
    }

    #[test]
    fn trace_free_part_has_zero_trace(field in arb_field(20)) {
        let (ring, traces) = curvature::trace_free(&field);
        for (m, (orig, t)) in ring.values.iter().zip(field.values.iter().zip(&traces)) {
            prop_assert_eq!(geom::mat2_trace(m), 0.0);
            prop_assert_eq!(*t, geom::mat2_trace(orig));
        }
    }

    #[test]
    fn optimal_lambda_beats_mean_lambda(field in arb_field(30), p in 1.5..6.0f64) {
        let w = vec![1.0 / 30.0; 30];
        let r = curvature::oscillation_deficit(&field, &w, p).unwrap();
        prop_assert!(r.min_oscillation <= r.mean_oscillation * (1.0 + 1e-10));
        prop_assert!(r.min_oscillation <= r.deficit.max(0.0) + r.mean_oscillation);
    }
}

#[test]
fn wulff_shape_deficit_vanishes_under_refinement() {
    let f = Integrand::ellipsoidal(1.0, 1.3, 1.8).unwrap();
    let deficits: Vec<f64> = (3..=5)
        .map(|level| {
            let w = f.build_wulff(level).unwrap();
            let geo = surface::radial_graph(&w, &ScalarField::nodal(vec![0.0; w.len()])).unwrap();
            curvature::surface_deficit(&geo, &f, 4.0).unwrap().deficit
        })
        .collect();
    assert!(deficits.windows(2).all(|d| d[1] < 0.5 * d[0]), "{deficits:?}");
}

#[test]
fn unit_sphere_is_umbilic_for_constant_integrand() {
    let w = Integrand::constant().build_wulff(3).unwrap();
    let geo = surface::model_geometry(&wulffstab::surface::SurfaceModel::Exp { radius: wulffstab::sh::SpectralField::zeros(0) }, &w.sphere, [0.0; 3]).unwrap();
    let s = curvature::anisotropic_shape_operator(&geo, &w.integrand).unwrap();
    for h in &s.h_f {
        assert!((h - 2.0).abs() <= 1e-12);
    }
    let r = curvature::oscillation_deficit(&s.s_f, &geo.area, 2.0).unwrap();
    assert!(r.deficit <= 1e-12);
    assert!((r.lambda_star - 1.0).abs() <= 1e-9);
}
