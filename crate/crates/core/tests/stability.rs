use wulffstab::geom::{self, Vec3};
use wulffstab::integrand::Integrand;
use wulffstab::mesh::{self, ScalarField};
use wulffstab::optim::nelder_mead;
use wulffstab::sh::SpectralField;
use wulffstab::stability::{self, CenteringOptions, KernelFrame};
use wulffstab::surface::{Base, SurfaceModel};

fn minus_kernel(u: &ScalarField, base: Base<'_>, c: Vec3) -> ScalarField {
    let phi = stability::kernel_field(base, c);
    let values = u.values.iter().zip(&phi.values).map(|(a, b)| a - b).collect();
    let spectral = match (&u.spectral, &phi.spectral) {
        (Some(a), Some(b)) => Some(a.add(&b.scaled(-1.0))),
        _ => None,
    };
    ScalarField { values, spectral }
}

/// `min_c ‖u − φ_c‖_{W^{2,p}}` by direct search, started at the frame projection.
fn direct_minimum(u: &ScalarField, base: Base<'_>, p: f64, start: Vec3) -> f64 {
    let f = |c: &[f64]| stability::radius_w2p(&minus_kernel(u, base, [c[0], c[1], c[2]]), base, p).unwrap();
    nelder_mead(f, &start, 1e-3, 2000, 1e-14).0
}

#[test]
fn centering_is_idempotent() {
    let w = Integrand::ellipsoidal(1.0, 1.0, 1.5).unwrap().build_wulff(3).unwrap();
    let field = SpectralField::harmonic(2, 1, 0.02).add(&SpectralField::linear([0.01, -0.02, 0.015]));
    let model = SurfaceModel::Radial { integrand: w.integrand.clone(), radius: field };
    let opts = CenteringOptions::default();
    let first = stability::center(&model, Base::Wulff(&w), &opts).unwrap();
    assert!(geom::norm(first.c) > 1e-3);
    let recentered = SurfaceModel::Translated { inner: Box::new(model), shift: geom::scale(first.c, -1.0) };
    let second = stability::center(&recentered, Base::Wulff(&w), &opts).unwrap();
    assert!(geom::norm(second.c) <= opts.tolerance, "|c| = {}", geom::norm(second.c));
}

#[test]
fn centering_residuals_decrease() {
    let s = mesh::build_sphere_mesh(4).unwrap();
    let model = SurfaceModel::Translated {
        inner: Box::new(SurfaceModel::Exp { radius: SpectralField::harmonic(2, 0, 0.03) }),
        shift: [0.02, -0.01, 0.03],
    };
    let r = stability::center(&model, Base::Sphere(&s), &CenteringOptions::default()).unwrap();
    let tail = &r.residuals[..r.residuals.len() - 1];
    assert!(tail.windows(2).all(|w| w[1] < w[0]), "{:?}", r.residuals);
}

#[test]
fn kernel_frame_projection_minimizes_w22_on_the_sphere() {
    let s = mesh::build_sphere_mesh(4).unwrap();
    let base = Base::Sphere(&s);
    let field = SpectralField::harmonic(2, 0, 0.02)
        .add(&SpectralField::harmonic(3, -1, 0.01))
        .add(&SpectralField::linear([0.004, -0.003, 0.006]));
    let u = ScalarField::sample(&s.vertices, &field);
    let model = SurfaceModel::Exp { radius: field };
    let r = stability::stability_ratio(&model, [0.0; 3], &u, base, &Integrand::constant(), 2.0).unwrap();
    let best = direct_minimum(&u, base, 2.0, r.kernel_component);
    assert!((r.distance - best).abs() <= 1e-6, "{} vs {best}", r.distance);
}

#[test]
fn even_fields_have_zero_kernel_component_for_any_p() {
    let w = Integrand::ellipsoidal(1.0, 1.2, 1.6).unwrap().build_wulff(3).unwrap();
    let base = Base::Wulff(&w);
    let field = SpectralField::harmonic(2, 0, 0.02).add(&SpectralField::harmonic(2, 2, -0.01));
    let u = ScalarField::sample(&w.normals, &field);
    let model = SurfaceModel::Radial { integrand: w.integrand.clone(), radius: field };
    let r = stability::stability_ratio(&model, [0.0; 3], &u, base, &w.integrand, 4.0).unwrap();
    assert!(geom::norm(r.kernel_component) <= 1e-12);
    let best = direct_minimum(&u, base, 4.0, [2e-3, -1e-3, 1e-3]);
    assert!((r.distance - best).abs() <= 1e-6, "{} vs {best}", r.distance);
}

#[test]
fn kernel_frame_is_orthonormal_on_wulff_meshes() {
    let w = Integrand::ellipsoidal(1.0, 1.5, 2.0).unwrap().build_wulff(3).unwrap();
    let frame = KernelFrame::new(Base::Wulff(&w)).unwrap();
    for (i, c) in [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]].into_iter().enumerate() {
        let v = frame.component(&stability::kernel_field(Base::Wulff(&w), c).values);
        for k in 0..3 {
            let expected = if k == i { 1.0 } else { 0.0 };
            assert!((v[k] - expected).abs() <= 1e-10, "{v:?}");
        }
    }
}
