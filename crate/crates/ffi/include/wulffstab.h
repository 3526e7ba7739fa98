#ifndef WULFFSTAB_H
#define WULFFSTAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes of every fallible call.
 */
typedef enum WsStatus {
  WS_STATUS_OK = 0,
  WS_STATUS_NULL_POINTER = 1,
  WS_STATUS_DOMAIN = 2,
  WS_STATUS_ELLIPTICITY = 3,
  WS_STATUS_LEVEL_OUT_OF_RANGE = 4,
  WS_STATUS_NUMERICAL = 5,
  WS_STATUS_CERTIFICATE = 6,
  WS_STATUS_IO = 7,
  WS_STATUS_BUFFER_TOO_SMALL = 8,
  WS_STATUS_PANIC = 9,
} WsStatus;

/**
 * Opaque integrand handle.
 */
typedef struct WsIntegrand WsIntegrand;

/**
 * Opaque Wulff mesh handle.
 */
typedef struct WsWulffMesh WsWulffMesh;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread into `buf` (NUL-terminated,
 * truncated to `len`); returns the full message length without the NUL.
 *
 * # Safety
 * `buf` must be null or valid for `len` bytes.
 */
uintptr_t ws_last_error(char *buf, uintptr_t len);

/**
 * `F ≡ 1`.
 *
 * # Safety
 * `out` must be valid for a pointer write.
 */
enum WsStatus ws_integrand_constant(struct WsIntegrand **out);

/**
 * `F(ν) = sqrt(νᵀ M ν)` with `m` a row-major symmetric positive definite 3×3 matrix.
 *
 * # Safety
 * `m` must be valid for 9 reads and `out` for a pointer write.
 */
enum WsStatus ws_integrand_quadratic(const double *m, struct WsIntegrand **out);

/**
 * # Safety
 * `h` must be null or a handle from a `ws_integrand_*` constructor, not yet freed.
 */
void ws_integrand_free(struct WsIntegrand *h);

/**
 * `F(ν)` at a unit vector.
 *
 * # Safety
 * `h` must be a live handle, `nu` valid for 3 reads, `out` for one write.
 */
enum WsStatus ws_integrand_value(const struct WsIntegrand *h, const double *nu, double *out);

/**
 * Gauge `F*(x)` and its gradient.
 *
 * # Safety
 * `h` must be a live handle, `x` valid for 3 reads, `value` for one write
 * and `gradient` for 3 writes.
 */
enum WsStatus ws_integrand_gauge(const struct WsIntegrand *h,
                                 const double *x,
                                 double *value,
                                 double *gradient);

/**
 * Discretized Wulff shape at an icosphere level.
 *
 * # Safety
 * `h` must be a live handle and `out` valid for a pointer write.
 */
enum WsStatus ws_wulff_build(const struct WsIntegrand *h,
                             uintptr_t level,
                             struct WsWulffMesh **out);

/**
 * # Safety
 * `h` must be null or a handle from [`ws_wulff_build`], not yet freed.
 */
void ws_wulff_free(struct WsWulffMesh *h);

/**
 * Number of vertices; 0 for a null handle.
 *
 * # Safety
 * `h` must be null or a live handle.
 */
uintptr_t ws_wulff_vertex_count(const struct WsWulffMesh *h);

/**
 * Copies vertex positions as `x y z` triples into `buf` of `len` doubles.
 *
 * # Safety
 * `h` must be a live handle and `buf` valid for `len` writes.
 */
enum WsStatus ws_wulff_vertices(const struct WsWulffMesh *h, double *buf, uintptr_t len);

/**
 * Total surface area of the mesh.
 *
 * # Safety
 * `h` must be a live handle and `out` valid for one write.
 */
enum WsStatus ws_wulff_area(const struct WsWulffMesh *h, double *out);

/**
 * `‖L[φ_c]‖_{L²} / ‖φ_c‖_{L²}` for the translation mode along `c`.
 *
 * # Safety
 * `h` must be a live handle, `c` valid for 3 reads, `out` for one write.
 */
enum WsStatus ws_kernel_ratio(const struct WsWulffMesh *h, const double *c, double *out);

/**
 * Deviation polynomials `p` and `q` of a spectrum with `n ≥ 3` entries.
 *
 * # Safety
 * `lambda` must be valid for `n` reads; `p` and `q` for one write each.
 */
enum WsStatus ws_einstein_polys(const double *lambda,
                                uintptr_t n,
                                double kappa,
                                double *p,
                                double *q);

/**
 * `α(p, q)` for dimension `n`; requires `n < q < p`.
 *
 * # Safety
 * `out` must be valid for one write.
 */
enum WsStatus ws_alpha_exponent(uintptr_t n, double p, double q, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* WULFFSTAB_H */
