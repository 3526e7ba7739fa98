//! C ABI over the `wulffstab` toolkit.
//!
//! Objects cross the boundary as opaque handles created by `ws_*_new` or
//! `ws_*_build` and released by the matching `ws_*_free`. Every fallible call
//! returns a [`WsStatus`]; on failure the message is retrievable with
//! [`ws_last_error`] on the same thread. Panics never unwind into C.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use wulffstab::einstein::{self, EigenSpectrum};
use wulffstab::integrand::{Integrand, WulffMesh};
use wulffstab::mesh::DiffOperator;
use wulffstab::{stability, Error};

/// Result codes of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WsStatus {
    Ok = 0,
    NullPointer = 1,
    Domain = 2,
    Ellipticity = 3,
    LevelOutOfRange = 4,
    Numerical = 5,
    Certificate = 6,
    Io = 7,
    BufferTooSmall = 8,
    Panic = 9,
}

/// Opaque integrand handle.
pub struct WsIntegrand(Integrand);

/// Opaque Wulff mesh handle.
pub struct WsWulffMesh(WulffMesh);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> WsStatus {
    match e {
        Error::Domain(_) | Error::InvalidExponent(_) | Error::Sweep(_) | Error::Config { .. } => WsStatus::Domain,
        Error::Ellipticity { .. } => WsStatus::Ellipticity,
        Error::LevelOutOfRange(..) | Error::OverBand { .. } => WsStatus::LevelOutOfRange,
        Error::DegenerateStencil { .. } | Error::DegenerateGram(_) | Error::Projection { .. } | Error::Centering { .. } => {
            WsStatus::Numerical
        }
        Error::Tubular { .. } | Error::Certificate { .. } => WsStatus::Certificate,
        Error::Io(_) => WsStatus::Io,
    }
}

/// Runs `f`, mapping errors and panics to status codes.
fn guard<F: FnOnce() -> Result<(), WsStatus>>(f: F) -> WsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => WsStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic");
            WsStatus::Panic
        }
    }
}

fn fail(e: Error) -> WsStatus {
    set_error(&e.to_string());
    status_of(&e)
}

fn null(what: &str) -> WsStatus {
    set_error(&format!("null pointer: {what}"));
    WsStatus::NullPointer
}

unsafe fn read3(p: *const f64, what: &str) -> Result<[f64; 3], WsStatus> {
    if p.is_null() {
        return Err(null(what));
    }
    Ok([*p, *p.add(1), *p.add(2)])
}

unsafe fn write_out<T>(p: *mut T, v: T, what: &str) -> Result<(), WsStatus> {
    if p.is_null() {
        return Err(null(what));
    }
    p.write(v);
    Ok(())
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`); returns the full message length without the NUL.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn ws_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let bytes = e.borrow();
        let bytes = bytes.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// `F ≡ 1`.
///
/// # Safety
/// `out` must be valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn ws_integrand_constant(out: *mut *mut WsIntegrand) -> WsStatus {
    guard(|| write_out(out, Box::into_raw(Box::new(WsIntegrand(Integrand::constant()))), "out"))
}

/// `F(ν) = sqrt(νᵀ M ν)` with `m` a row-major symmetric positive definite 3×3 matrix.
///
/// # Safety
/// `m` must be valid for 9 reads and `out` for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn ws_integrand_quadratic(m: *const f64, out: *mut *mut WsIntegrand) -> WsStatus {
    guard(|| {
        if m.is_null() {
            return Err(null("m"));
        }
        let mut mat = [[0.0; 3]; 3];
        for (i, row) in mat.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = *m.add(3 * i + j);
            }
        }
        let f = Integrand::quadratic(mat).map_err(fail)?;
        write_out(out, Box::into_raw(Box::new(WsIntegrand(f))), "out")
    })
}

/// # Safety
/// `h` must be null or a handle from a `ws_integrand_*` constructor, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ws_integrand_free(h: *mut WsIntegrand) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// `F(ν)` at a unit vector.
///
/// # Safety
/// `h` must be a live handle, `nu` valid for 3 reads, `out` for one write.
#[no_mangle]
pub unsafe extern "C" fn ws_integrand_value(h: *const WsIntegrand, nu: *const f64, out: *mut f64) -> WsStatus {
    guard(|| {
        let f = h.as_ref().ok_or_else(|| null("integrand"))?;
        let nu = read3(nu, "nu")?;
        let e = f.0.evaluate(nu).map_err(fail)?;
        write_out(out, e.f, "out")
    })
}

/// Gauge `F*(x)` and its gradient.
///
/// # Safety
/// `h` must be a live handle, `x` valid for 3 reads, `value` for one write
/// and `gradient` for 3 writes.
#[no_mangle]
pub unsafe extern "C" fn ws_integrand_gauge(
    h: *const WsIntegrand,
    x: *const f64,
    value: *mut f64,
    gradient: *mut f64,
) -> WsStatus {
    guard(|| {
        let f = h.as_ref().ok_or_else(|| null("integrand"))?;
        let x = read3(x, "x")?;
        if gradient.is_null() {
            return Err(null("gradient"));
        }
        let g = f.0.gauge(x).map_err(fail)?;
        write_out(value, g.value, "value")?;
        for k in 0..3 {
            *gradient.add(k) = g.gradient[k];
        }
        Ok(())
    })
}

/// Discretized Wulff shape at an icosphere level.
///
/// # Safety
/// `h` must be a live handle and `out` valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn ws_wulff_build(h: *const WsIntegrand, level: usize, out: *mut *mut WsWulffMesh) -> WsStatus {
    guard(|| {
        let f = h.as_ref().ok_or_else(|| null("integrand"))?;
        let w = f.0.build_wulff(level).map_err(fail)?;
        write_out(out, Box::into_raw(Box::new(WsWulffMesh(w))), "out")
    })
}

/// # Safety
/// `h` must be null or a handle from [`ws_wulff_build`], not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ws_wulff_free(h: *mut WsWulffMesh) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Number of vertices; 0 for a null handle.
///
/// # Safety
/// `h` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ws_wulff_vertex_count(h: *const WsWulffMesh) -> usize {
    h.as_ref().map_or(0, |w| w.0.len())
}

/// Copies vertex positions as `x y z` triples into `buf` of `len` doubles.
///
/// # Safety
/// `h` must be a live handle and `buf` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn ws_wulff_vertices(h: *const WsWulffMesh, buf: *mut f64, len: usize) -> WsStatus {
    guard(|| {
        let w = h.as_ref().ok_or_else(|| null("mesh"))?;
        if buf.is_null() {
            return Err(null("buf"));
        }
        let need = 3 * w.0.len();
        if len < need {
            set_error(&format!("buffer holds {len} doubles, need {need}"));
            return Err(WsStatus::BufferTooSmall);
        }
        for (i, v) in w.0.vertices.iter().enumerate() {
            for k in 0..3 {
                *buf.add(3 * i + k) = v[k];
            }
        }
        Ok(())
    })
}

/// Total surface area of the mesh.
///
/// # Safety
/// `h` must be a live handle and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn ws_wulff_area(h: *const WsWulffMesh, out: *mut f64) -> WsStatus {
    guard(|| {
        let w = h.as_ref().ok_or_else(|| null("mesh"))?;
        write_out(out, w.0.total_area(), "out")
    })
}

/// `‖L[φ_c]‖_{L²} / ‖φ_c‖_{L²}` for the translation mode along `c`.
///
/// # Safety
/// `h` must be a live handle, `c` valid for 3 reads, `out` for one write.
#[no_mangle]
pub unsafe extern "C" fn ws_kernel_ratio(h: *const WsWulffMesh, c: *const f64, out: *mut f64) -> WsStatus {
    guard(|| {
        let w = h.as_ref().ok_or_else(|| null("mesh"))?;
        let c = read3(c, "c")?;
        let op = DiffOperator::new(&w.0.domain()).map_err(fail)?;
        let r = stability::kernel_ratio(&w.0, &op, c).map_err(fail)?;
        write_out(out, r, "out")
    })
}

/// Deviation polynomials `p` and `q` of a spectrum with `n ≥ 3` entries.
///
/// # Safety
/// `lambda` must be valid for `n` reads; `p` and `q` for one write each.
#[no_mangle]
pub unsafe extern "C" fn ws_einstein_polys(lambda: *const f64, n: usize, kappa: f64, p: *mut f64, q: *mut f64) -> WsStatus {
    guard(|| {
        if lambda.is_null() {
            return Err(null("lambda"));
        }
        let values = std::slice::from_raw_parts(lambda, n).to_vec();
        let spec = EigenSpectrum::new(values, kappa).map_err(fail)?;
        let (pv, qv) = einstein::polys(&spec);
        write_out(p, pv, "p")?;
        write_out(q, qv, "q")
    })
}

/// `α(p, q)` for dimension `n`; requires `n < q < p`.
///
/// # Safety
/// `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn ws_alpha_exponent(n: usize, p: f64, q: f64, out: *mut f64) -> WsStatus {
    guard(|| {
        let a = einstein::alpha_exponent(n, p, q).map_err(fail)?;
        write_out(out, a, "out")
    })
}
