//! Icosphere meshes, per-vertex fields, local polynomial derivative fits,
//! spherical-harmonic transforms and `L^p` / `W^{2,p}` norms.

use std::collections::HashMap;
use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{self, dot, Mat2, Vec3};
use crate::real::{jet2_parts, jet2_var, Jet2, Real};
use crate::sh::{self, SpectralField};

pub const MIN_LEVEL: usize = 2;
pub const MAX_LEVEL: usize = 8;

/// Icosphere discretization of the unit sphere.
#[derive(Clone, Debug)]
pub struct SphereMesh {
    pub level: usize,
    pub vertices: Vec<Vec3>,
    pub triangles: Vec<[usize; 3]>,
    /// Quadrature weight per vertex (a third of the adjacent spherical triangle areas).
    pub weights: Vec<f64>,
    /// One-ring neighbors, in ascending index order.
    pub neighbors: Vec<Vec<usize>>,
    pub frames: Vec<(Vec3, Vec3)>,
}

fn icosahedron() -> (Vec<Vec3>, Vec<[usize; 3]>) {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let raw = [
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ];
    let faces = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    (raw.iter().map(|v| geom::normalize(*v)).collect(), faces)
}

/// Area of the spherical triangle with unit-vector corners.
fn spherical_triangle_area(a: Vec3, b: Vec3, c: Vec3) -> f64 {
    let num = dot(a, geom::cross(b, c)).abs();
    let den = 1.0 + dot(a, b) + dot(b, c) + dot(c, a);
    2.0 * num.atan2(den)
}

pub fn build_sphere_mesh(level: usize) -> Result<SphereMesh> {
    if !(MIN_LEVEL..=MAX_LEVEL).contains(&level) {
        return Err(Error::LevelOutOfRange(level, MIN_LEVEL, MAX_LEVEL));
    }
    Ok(build_icosphere(level))
}

/// Icosphere at any level, without the range check (the gauge sampler uses it).
pub(crate) fn build_icosphere(level: usize) -> SphereMesh {
    let (mut vertices, mut triangles) = icosahedron();
    for _ in 0..level {
        let mut midpoint: HashMap<(usize, usize), usize> = HashMap::new();
        let mut next = Vec::with_capacity(triangles.len() * 4);
        let mut mid = |a: usize, b: usize, verts: &mut Vec<Vec3>| -> usize {
            let key = if a < b { (a, b) } else { (b, a) };
            *midpoint.entry(key).or_insert_with(|| {
                verts.push(geom::normalize(geom::scale(geom::add(verts[a], verts[b]), 0.5)));
                verts.len() - 1
            })
        };
        for &[a, b, c] in &triangles {
            let ab = mid(a, b, &mut vertices);
            let bc = mid(b, c, &mut vertices);
            let ca = mid(c, a, &mut vertices);
            next.push([a, ab, ca]);
            next.push([b, bc, ab]);
            next.push([c, ca, bc]);
            next.push([ab, bc, ca]);
        }
        triangles = next;
    }
    let n = vertices.len();
    let mut weights = vec![0.0; n];
    let mut neighbors: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &[a, b, c] in &triangles {
        let area = spherical_triangle_area(vertices[a], vertices[b], vertices[c]);
        for v in [a, b, c] {
            weights[v] += area / 3.0;
        }
        for (p, q) in [(a, b), (b, c), (c, a)] {
            neighbors[p].push(q);
            neighbors[q].push(p);
        }
    }
    for nb in neighbors.iter_mut() {
        nb.sort_unstable();
        nb.dedup();
    }
    let frames = vertices.iter().map(|v| geom::tangent_frame(*v)).collect();
    SphereMesh { level, vertices, triangles, weights, neighbors, frames }
}

impl SphereMesh {
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Mean edge length.
    pub fn edge_length(&self) -> f64 {
        let mut total = 0.0;
        let mut count = 0usize;
        for (i, nb) in self.neighbors.iter().enumerate() {
            for &j in nb {
                if j > i {
                    total += geom::norm(geom::sub(self.vertices[i], self.vertices[j]));
                    count += 1;
                }
            }
        }
        total / count as f64
    }

    /// Largest band limit the transforms accept on this mesh.
    pub fn band_limit(&self) -> usize {
        ((self.len() as f64).sqrt() / 2.0).floor() as usize
    }

    pub fn total_area(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn domain(&self) -> Domain {
        Domain {
            positions: self.vertices.clone(),
            normals: self.vertices.clone(),
            frames: self.frames.clone(),
            weights: self.weights.clone(),
            neighbors: self.neighbors.clone(),
            round_sphere: true,
        }
    }
}

/// Node-wise data a discretized closed surface exposes to the differential
/// operators: positions, unit normals, tangent frames, quadrature weights and
/// adjacency.
#[derive(Clone, Debug)]
pub struct Domain {
    pub positions: Vec<Vec3>,
    pub normals: Vec<Vec3>,
    pub frames: Vec<(Vec3, Vec3)>,
    pub weights: Vec<f64>,
    pub neighbors: Vec<Vec<usize>>,
    /// True when positions are the unit sphere itself (spectral derivatives apply).
    pub round_sphere: bool,
}

impl Domain {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Quadrature integral of a nodal function.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        deterministic_sum(values.iter().zip(&self.weights).map(|(v, w)| v * w))
    }

    pub fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
        deterministic_sum(a.iter().zip(b).zip(&self.weights).map(|((x, y), w)| x * y * w))
    }
}

/// Sum in index order; the only reduction primitive used for reported numbers.
pub fn deterministic_sum<I: Iterator<Item = f64>>(it: I) -> f64 {
    let mut acc = 0.0;
    for v in it {
        acc += v;
    }
    acc
}

/// Per-vertex scalar values, optionally carrying the harmonic coefficients
/// they were sampled from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalarField {
    pub values: Vec<f64>,
    pub spectral: Option<SpectralField>,
}

impl ScalarField {
    pub fn nodal(values: Vec<f64>) -> Self {
        Self { values, spectral: None }
    }

    pub fn constant(n: usize, c: f64) -> Self {
        Self { values: vec![c; n], spectral: Some(SpectralField::constant(c)) }
    }

    /// Samples `coeffs` at unit directions (the sphere vertices, or the normal
    /// parameter of a Wulff mesh).
    pub fn sample(directions: &[Vec3], coeffs: &SpectralField) -> Self {
        let values = directions.par_iter().map(|d| coeffs.eval(*d)).collect();
        Self { values, spectral: Some(coeffs.clone()) }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TensorKind {
    /// Symmetric bilinear form.
    Bilinear,
    /// Mixed (1,1) operator, possibly non-symmetric.
    Operator,
}

/// Per-vertex 2×2 tensor expressed in an orthonormal tangent frame.
#[derive(Clone, Debug, PartialEq)]
pub struct TensorField {
    pub values: Vec<Mat2>,
    pub kind: TensorKind,
}

impl TensorField {
    /// Pointwise Frobenius norms; invariant under per-vertex frame rotations.
    pub fn pointwise_norm(&self) -> Vec<f64> {
        self.values.iter().map(geom::mat2_frobenius).collect()
    }

    /// Re-expresses every entry in a frame rotated by `angles[i]`.
    pub fn rotated(&self, angles: &[f64]) -> Self {
        let values = self
            .values
            .iter()
            .zip(angles)
            .map(|(m, a)| {
                let (c, s) = (a.cos(), a.sin());
                let r = [[c, -s], [s, c]];
                let rt = geom::mat2_transpose(&r);
                geom::mat2_mul(&rt, &geom::mat2_mul(m, &r))
            })
            .collect();
        Self { values, kind: self.kind }
    }
}

/// First and second derivatives at a node, in its tangent frame.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LocalJet {
    pub value: f64,
    pub grad: [f64; 2],
    pub hess: Mat2,
}

const CUBIC_TERMS: usize = 10;

#[derive(Clone, Debug)]
struct Stencil {
    nodes: Vec<usize>,
    /// Rows: value, d/ds, d/dt, d²/ds², d²/dsdt, d²/dt², each a weight per stencil node.
    weights: [Vec<f64>; 6],
}

/// Weighted-free least-squares cubic fits over each vertex's two-ring, in the
/// orthographic chart of the tangent plane.
///
/// The chart's Christoffel symbols vanish at the origin, so the fitted second
/// derivatives are the covariant Hessian there.
#[derive(Clone, Debug)]
pub struct DiffOperator {
    frames: Vec<(Vec3, Vec3)>,
    stencils: Vec<Stencil>,
}

fn two_ring(neighbors: &[Vec<usize>], i: usize) -> Vec<usize> {
    let mut ring = vec![i];
    ring.extend(neighbors[i].iter().copied());
    for &j in &neighbors[i] {
        ring.extend(neighbors[j].iter().copied());
    }
    ring.sort_unstable();
    ring.dedup();
    ring
}

impl DiffOperator {
    pub fn new(domain: &Domain) -> Result<Self> {
        let stencils = (0..domain.len())
            .into_par_iter()
            .map(|i| Self::stencil(domain, i))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { frames: domain.frames.clone(), stencils })
    }

    fn stencil(domain: &Domain, i: usize) -> Result<Stencil> {
        if domain.neighbors[i].len() < 3 {
            return Err(Error::DegenerateStencil {
                vertex: i,
                reason: format!("valence {}", domain.neighbors[i].len()),
            });
        }
        let nodes = two_ring(&domain.neighbors, i);
        let (e1, e2) = domain.frames[i];
        let p0 = domain.positions[i];
        let coords: Vec<[f64; 2]> = nodes
            .iter()
            .map(|&j| {
                let d = geom::sub(domain.positions[j], p0);
                [dot(d, e1), dot(d, e2)]
            })
            .collect();
        let h = coords.iter().map(|c| c[0].hypot(c[1])).fold(0.0, f64::max);
        if nodes.len() < CUBIC_TERMS || h == 0.0 {
            return Err(Error::DegenerateStencil {
                vertex: i,
                reason: format!("{} stencil nodes", nodes.len()),
            });
        }
        let a = DMatrix::from_fn(nodes.len(), CUBIC_TERMS, |r, c| {
            let (s, t) = (coords[r][0] / h, coords[r][1] / h);
            match c {
                0 => 1.0,
                1 => s,
                2 => t,
                3 => 0.5 * s * s,
                4 => s * t,
                5 => 0.5 * t * t,
                6 => s * s * s,
                7 => s * s * t,
                8 => s * t * t,
                _ => t * t * t,
            }
        });
        // Householder QR; the fit is `R⁻¹ Qᵀ` applied to the stencil values.
        let qr = a.qr();
        let r = qr.r();
        let diag: Vec<f64> = (0..CUBIC_TERMS).map(|k| r[(k, k)].abs()).collect();
        let dmax = diag.iter().copied().fold(0.0, f64::max);
        let dmin = diag.iter().copied().fold(f64::INFINITY, f64::min);
        if !(dmin > 1e-8 * dmax) {
            return Err(Error::DegenerateStencil {
                vertex: i,
                reason: format!("ill-conditioned fit ({dmin:.2e}/{dmax:.2e})"),
            });
        }
        let pinv = r.solve_upper_triangular(&qr.q().transpose()).ok_or_else(|| Error::DegenerateStencil {
            vertex: i,
            reason: "singular triangular factor".into(),
        })?;
        let row = |k: usize, f: f64| -> Vec<f64> { (0..nodes.len()).map(|c| pinv[(k, c)] * f).collect() };
        let weights = [
            row(0, 1.0),
            row(1, 1.0 / h),
            row(2, 1.0 / h),
            row(3, 1.0 / (h * h)),
            row(4, 1.0 / (h * h)),
            row(5, 1.0 / (h * h)),
        ];
        Ok(Stencil { nodes, weights })
    }

    pub fn len(&self) -> usize {
        self.stencils.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stencils.is_empty()
    }

    fn apply(&self, i: usize, row: usize, values: &[f64]) -> f64 {
        let st = &self.stencils[i];
        let center = values[i];
        // Differences against the center value keep derivative rows exact on constants.
        st.nodes.iter().zip(&st.weights[row]).map(|(&j, w)| w * (values[j] - center)).sum()
    }

    /// Fitted jet of a nodal function at every node.
    pub fn jets(&self, values: &[f64]) -> Vec<LocalJet> {
        (0..self.len())
            .into_par_iter()
            .map(|i| {
                let d = |r| self.apply(i, r, values);
                LocalJet {
                    value: values[i],
                    grad: [d(1), d(2)],
                    hess: [[d(3), d(4)], [d(4), d(5)]],
                }
            })
            .collect()
    }

    /// Tangential gradient as ambient vectors.
    pub fn gradient(&self, values: &[f64]) -> Vec<Vec3> {
        (0..self.len())
            .into_par_iter()
            .map(|i| {
                let (e1, e2) = self.frames[i];
                let gs = self.apply(i, 1, values);
                let gt = self.apply(i, 2, values);
                geom::add(geom::scale(e1, gs), geom::scale(e2, gt))
            })
            .collect()
    }

    /// Divergence of a tangent vector field given by ambient components.
    pub fn divergence(&self, field: &[Vec3]) -> Vec<f64> {
        let comps: Vec<Vec<f64>> = (0..3).map(|k| field.iter().map(|v| v[k]).collect()).collect();
        (0..self.len())
            .into_par_iter()
            .map(|i| {
                let (e1, e2) = self.frames[i];
                let ds = [0, 1, 2].map(|k| self.apply(i, 1, &comps[k]));
                let dt = [0, 1, 2].map(|k| self.apply(i, 2, &comps[k]));
                dot(ds, e1) + dot(dt, e2)
            })
            .collect()
    }

    /// Laplace–Beltrami as divergence of the gradient.
    pub fn laplacian(&self, values: &[f64]) -> Vec<f64> {
        self.divergence(&self.gradient(values))
    }

    /// Symmetrized covariant Hessian in each node's frame.
    pub fn hessian(&self, values: &[f64]) -> Vec<Mat2> {
        self.jets(values).into_iter().map(|j| j.hess).collect()
    }
}

/// Chart `(s, t) ↦ unit sphere` around `nu` with frame `(e1, e2)`, evaluated on jets.
pub fn sphere_chart(nu: Vec3, e1: Vec3, e2: Vec3) -> [Jet2; 3] {
    let s = jet2_var(0.0, 0);
    let t = jet2_var(0.0, 1);
    let w = (Jet2::cst(1.0) - s * s - t * t).sqrt();
    [0, 1, 2].map(|k| s.scale(e1[k]) + t.scale(e2[k]) + w.scale(nu[k]))
}

/// Exact jets of a band-limited field on the round sphere.
pub fn spectral_jets(field: &SpectralField, mesh: &SphereMesh) -> Vec<LocalJet> {
    (0..mesh.len())
        .into_par_iter()
        .map(|i| {
            let (e1, e2) = mesh.frames[i];
            let x = sphere_chart(mesh.vertices[i], e1, e2);
            let (value, grad, hess) = jet2_parts(&field.eval(x));
            LocalJet { value, grad, hess }
        })
        .collect()
}

/// Least-squares projection of nodal values onto real harmonics up to `l_max`.
pub fn sh_analyze(mesh: &SphereMesh, values: &[f64], l_max: usize) -> Result<SpectralField> {
    let limit = mesh.band_limit();
    if l_max > limit {
        return Err(Error::OverBand { requested: l_max, limit });
    }
    let k = sh::num_coeffs(l_max);
    let rows: Vec<Vec<f64>> = mesh.vertices.par_iter().map(|v| sh::eval_all(*v, l_max)).collect();
    let sw: Vec<f64> = mesh.weights.iter().map(|w| w.sqrt()).collect();
    let a = DMatrix::from_fn(mesh.len(), k, |r, c| rows[r][c] * sw[r]);
    let b = DVector::from_iterator(mesh.len(), values.iter().zip(&sw).map(|(v, w)| v * w));
    let qr = a.qr();
    let qtb = qr.q().transpose() * b;
    let coeffs = qr
        .r()
        .solve_upper_triangular(&qtb)
        .ok_or_else(|| Error::Domain("singular harmonic design matrix".into()))?;
    Ok(SpectralField { l_max, coeffs: coeffs.iter().copied().collect() })
}

pub fn sh_synthesize(mesh: &SphereMesh, coeffs: &SpectralField) -> ScalarField {
    ScalarField::sample(&mesh.vertices, coeffs)
}

fn check_p(p: f64) -> Result<()> {
    if p.is_finite() && p > 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidExponent(p))
    }
}

/// `(Σ w_i |v_i|^p)^{1/p}`.
pub fn lp_norm(values: &[f64], weights: &[f64], p: f64) -> Result<f64> {
    check_p(p)?;
    let s = deterministic_sum(values.iter().zip(weights).map(|(v, w)| v.abs().powf(p) * w));
    Ok(s.powf(1.0 / p))
}

/// `L^p` norm of the pointwise Frobenius norm of a tensor field.
pub fn tensor_lp_norm(field: &TensorField, weights: &[f64], p: f64) -> Result<f64> {
    lp_norm(&field.pointwise_norm(), weights, p)
}

/// Sobolev norm `‖u‖_p + ‖∇u‖_p + ‖∇²u‖_p` from per-node jets.
pub fn w2p_from_jets(jets: &[LocalJet], weights: &[f64], p: f64) -> Result<f64> {
    let v: Vec<f64> = jets.iter().map(|j| j.value).collect();
    let g: Vec<f64> = jets.iter().map(|j| j.grad[0].hypot(j.grad[1])).collect();
    let h: Vec<f64> = jets
        .iter()
        .map(|j| {
            let s = 0.5 * (j.hess[0][1] + j.hess[1][0]);
            geom::mat2_frobenius(&[[j.hess[0][0], s], [s, j.hess[1][1]]])
        })
        .collect();
    Ok(lp_norm(&v, weights, p)? + lp_norm(&g, weights, p)? + lp_norm(&h, weights, p)?)
}

/// `W^{2,p}` norm of a scalar field: spectral derivatives on the round sphere
/// when coefficients are known, local fits otherwise.
pub fn w2p_norm(
    field: &ScalarField,
    domain: &Domain,
    op: &DiffOperator,
    sphere: Option<&SphereMesh>,
    p: f64,
) -> Result<f64> {
    check_p(p)?;
    let jets = match (&field.spectral, domain.round_sphere, sphere) {
        (Some(c), true, Some(mesh)) => spectral_jets(c, mesh),
        _ => op.jets(&field.values),
    };
    w2p_from_jets(&jets, &domain.weights, p)
}

/// Total area `4π` of the unit sphere.
pub const SPHERE_AREA: f64 = 4.0 * PI;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vertex_counts_follow_icosphere_formula() {
        for level in 2..=4 {
            let m = build_sphere_mesh(level).unwrap();
            assert_eq!(m.len(), 10 * 4usize.pow(level as u32) + 2);
            assert_eq!(m.triangles.len(), 20 * 4usize.pow(level as u32));
        }
        assert_eq!(build_sphere_mesh(2).unwrap().len(), 162);
    }

    #[test]
    fn level_out_of_range() {
        assert!(matches!(build_sphere_mesh(1), Err(Error::LevelOutOfRange(1, 2, 8))));
        assert!(build_sphere_mesh(9).is_err());
    }

    #[test]
    fn unit_vertices_and_valence() {
        let m = build_sphere_mesh(3).unwrap();
        for v in &m.vertices {
            assert!((geom::norm(*v) - 1.0).abs() < 1e-14);
        }
        let fives = m.neighbors.iter().filter(|n| n.len() == 5).count();
        assert_eq!(fives, 12);
        assert!(m.neighbors.iter().all(|n| n.len() == 5 || n.len() == 6));
    }

    #[test]
    fn gradient_of_constant_is_zero() {
        let m = build_sphere_mesh(3).unwrap();
        let op = DiffOperator::new(&m.domain()).unwrap();
        let g = op.gradient(&vec![3.7; m.len()]);
        assert!(g.iter().all(|v| geom::norm(*v) < 1e-12));
    }

    #[test]
    fn lp_rejects_small_exponent() {
        assert!(matches!(lp_norm(&[1.0], &[1.0], 1.0), Err(Error::InvalidExponent(_))));
        assert!(lp_norm(&[1.0], &[1.0], f64::INFINITY).is_err());
    }

    #[test]
    fn degenerate_stencil_is_reported() {
        let m = build_sphere_mesh(2).unwrap();
        let mut d = m.domain();
        d.neighbors[7] = vec![d.neighbors[7][0], d.neighbors[7][1]];
        assert!(matches!(DiffOperator::new(&d), Err(Error::DegenerateStencil { vertex: 7, .. })));
    }

    #[test]
    fn over_band_request() {
        let m = build_sphere_mesh(2).unwrap();
        let l = m.band_limit() + 1;
        assert!(matches!(sh_analyze(&m, &vec![0.0; m.len()], l), Err(Error::OverBand { .. })));
    }
}
