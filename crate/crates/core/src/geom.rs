//! Small fixed-size vector and matrix helpers.

pub type Vec3 = [f64; 3];
pub type Mat2 = [[f64; 2]; 2];
pub type Mat3 = [[f64; 3]; 3];

#[inline]
pub fn add(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn scale(a: Vec3, k: f64) -> Vec3 {
    [a[0] * k, a[1] * k, a[2] * k]
}

#[inline]
pub fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
pub fn norm(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn normalize(a: Vec3) -> Vec3 {
    scale(a, 1.0 / norm(a))
}

/// Deterministic orthonormal tangent frame `(e1, e2)` at a unit vector `n`,
/// with `e1 × e2 = n`.
pub fn tangent_frame(n: Vec3) -> (Vec3, Vec3) {
    let ax = n.iter().map(|c| c.abs()).collect::<Vec<_>>();
    let helper = if ax[0] <= ax[1] && ax[0] <= ax[2] {
        [1.0, 0.0, 0.0]
    } else if ax[1] <= ax[2] {
        [0.0, 1.0, 0.0]
    } else {
        [0.0, 0.0, 1.0]
    };
    let e1 = normalize(sub(helper, scale(n, dot(helper, n))));
    let e2 = cross(n, e1);
    (e1, e2)
}

/// Restriction `Eᵀ M E` of an ambient matrix to the frame `(e1, e2)`.
pub fn restrict(m: &Mat3, e1: Vec3, e2: Vec3) -> Mat2 {
    let mv = |v: Vec3| -> Vec3 {
        [
            m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
            m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
            m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
        ]
    };
    let m1 = mv(e1);
    let m2 = mv(e2);
    [[dot(e1, m1), dot(e1, m2)], [dot(e2, m1), dot(e2, m2)]]
}

pub fn mat2_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    [
        [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
        [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
    ]
}

pub fn mat2_det(a: &Mat2) -> f64 {
    a[0][0] * a[1][1] - a[0][1] * a[1][0]
}

pub fn mat2_inv(a: &Mat2) -> Mat2 {
    let d = mat2_det(a);
    [[a[1][1] / d, -a[0][1] / d], [-a[1][0] / d, a[0][0] / d]]
}

pub fn mat2_trace(a: &Mat2) -> f64 {
    a[0][0] + a[1][1]
}

pub fn mat2_transpose(a: &Mat2) -> Mat2 {
    [[a[0][0], a[1][0]], [a[0][1], a[1][1]]]
}

pub fn mat2_frobenius(a: &Mat2) -> f64 {
    (a[0][0] * a[0][0] + a[0][1] * a[0][1] + a[1][0] * a[1][0] + a[1][1] * a[1][1]).sqrt()
}

pub fn mat2_apply(a: &Mat2, v: [f64; 2]) -> [f64; 2] {
    [a[0][0] * v[0] + a[0][1] * v[1], a[1][0] * v[0] + a[1][1] * v[1]]
}

/// Eigenvalues of the symmetric part of `a`, ascending.
pub fn sym2_eigenvalues(a: &Mat2) -> [f64; 2] {
    let b = 0.5 * (a[0][1] + a[1][0]);
    let m = 0.5 * (a[0][0] + a[1][1]);
    let d = 0.5 * (a[0][0] - a[1][1]);
    let r = (d * d + b * b).sqrt();
    [m - r, m + r]
}

/// Eigenvalues of a general real 2×2 matrix with real spectrum (falls back to
/// the real part when complex).
pub fn mat2_eigenvalues(a: &Mat2) -> [f64; 2] {
    let t = mat2_trace(a);
    let d = mat2_det(a);
    let disc = (0.25 * t * t - d).max(0.0).sqrt();
    [0.5 * t - disc, 0.5 * t + disc]
}
