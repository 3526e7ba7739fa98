use std::ffi::{c_char, CStr};
use std::path::Path;
use std::process::Command;
use std::ptr;

use wulffstab_ffi::*;

fn last_error() -> String {
    let mut buf = [0 as c_char; 256];
    unsafe {
        ws_last_error(buf.as_mut_ptr(), buf.len());
        CStr::from_ptr(buf.as_ptr()).to_string_lossy().into_owned()
    }
}

#[test]
fn constant_integrand_round_trip() {
    unsafe {
        let mut f: *mut WsIntegrand = ptr::null_mut();
        assert_eq!(ws_integrand_constant(&mut f), WsStatus::Ok);
        let mut v = 0.0;
        assert_eq!(ws_integrand_value(f, [0.0, 0.0, 1.0].as_ptr(), &mut v), WsStatus::Ok);
        assert!((v - 1.0).abs() < 1e-15);

        let mut g = 0.0;
        let mut grad = [0.0; 3];
        assert_eq!(ws_integrand_gauge(f, [0.0, 3.0, 4.0].as_ptr(), &mut g, grad.as_mut_ptr()), WsStatus::Ok);
        assert!((g - 5.0).abs() < 1e-12);

        let mut w: *mut WsWulffMesh = ptr::null_mut();
        assert_eq!(ws_wulff_build(f, 3, &mut w), WsStatus::Ok);
        let n = ws_wulff_vertex_count(w);
        assert_eq!(n, 642);
        let mut buf = vec![0.0; 3 * n];
        assert_eq!(ws_wulff_vertices(w, buf.as_mut_ptr(), buf.len()), WsStatus::Ok);
        for v in buf.chunks(3) {
            assert!(((v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt() - 1.0).abs() < 1e-12);
        }
        assert_eq!(ws_wulff_vertices(w, buf.as_mut_ptr(), 3), WsStatus::BufferTooSmall);

        let mut r = 1.0;
        assert_eq!(ws_kernel_ratio(w, [1.0, 0.0, 0.0].as_ptr(), &mut r), WsStatus::Ok);
        assert!(r < 0.05, "kernel ratio {r}");

        ws_wulff_free(w);
        ws_integrand_free(f);
    }
}

#[test]
fn invalid_inputs_map_to_status_codes() {
    unsafe {
        let mut f: *mut WsIntegrand = ptr::null_mut();
        let indefinite = [1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 1.0];
        assert_eq!(ws_integrand_quadratic(indefinite.as_ptr(), &mut f), WsStatus::Domain);
        assert!(f.is_null());
        assert!(last_error().contains("positive definite"));

        assert_eq!(ws_integrand_constant(ptr::null_mut()), WsStatus::NullPointer);

        assert_eq!(ws_integrand_constant(&mut f), WsStatus::Ok);
        let mut w: *mut WsWulffMesh = ptr::null_mut();
        assert_eq!(ws_wulff_build(f, 99, &mut w), WsStatus::LevelOutOfRange);
        let mut v = 0.0;
        assert_eq!(ws_integrand_value(f, [0.0, 0.0, 2.0].as_ptr(), &mut v), WsStatus::Domain);
        ws_integrand_free(f);
        ws_integrand_free(ptr::null_mut());
        ws_wulff_free(ptr::null_mut());
    }
}

#[test]
fn einstein_entry_points() {
    unsafe {
        let (mut p, mut q) = (f64::NAN, f64::NAN);
        assert_eq!(ws_einstein_polys([1.0, 1.0, 1.0].as_ptr(), 3, 1.0, &mut p, &mut q), WsStatus::Ok);
        assert_eq!((p, q), (0.0, 0.0));
        assert_eq!(ws_einstein_polys([1.0, 1.0].as_ptr(), 2, 1.0, &mut p, &mut q), WsStatus::Domain);
        let mut a = 0.0;
        assert_eq!(ws_alpha_exponent(3, 10.0, 8.0, &mut a), WsStatus::Ok);
        assert_eq!(a, 0.25);
        assert_eq!(ws_alpha_exponent(3, 10.0, 2.0, &mut a), WsStatus::Domain);
    }
}

#[test]
fn generated_header_is_valid_c() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/wulffstab.h");
    let text = std::fs::read_to_string(&header).expect("header generated by the build script");
    for name in ["ws_integrand_constant", "ws_wulff_build", "ws_kernel_ratio", "ws_last_error", "WS_STATUS_OK"] {
        assert!(text.contains(name), "{name} missing from header");
    }
    // Syntax-check with the system C compiler when one is installed.
    if let Ok(out) = Command::new("cc").args(["-fsyntax-only", "-x", "c"]).arg(&header).output() {
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
}
