//! Hypersurfaces given as radial graphs over the sphere or a Wulff shape:
//! fundamental forms, graph certificates, Hausdorff distances, and the flat
//! graph model on a planar grid.
//!
//! Geometry is computed from first and second derivatives of the
//! parametrization in a chart around each node. For band-limited radii the
//! derivatives are exact (dual numbers); otherwise they come from local fits.

use std::collections::HashMap;

use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geom::{self, cross, dot, Mat2, Vec3};
use crate::integrand::{Integrand, WulffMesh};
use crate::mesh::{self, DiffOperator, Domain, ScalarField, SphereMesh, TensorField, TensorKind};
use crate::optim::{golden_section, nelder_mead};
use crate::real::{jet2_parts, Jet2, Real};
use crate::sh::SpectralField;

/// Analytic description of a closed surface over the unit sphere of
/// parameter directions.
#[derive(Clone, Debug)]
pub enum SurfaceModel {
    /// `ψ(ν) = X(ν) + u(ν) ν` over the Wulff shape of `integrand`.
    Radial { integrand: Integrand, radius: SpectralField },
    /// `ψ(ν) = e^{f(ν)} ν`.
    Exp { radius: SpectralField },
    /// Necked surface of revolution that is not a radial graph near `|z| = 1/2`.
    Dumbbell,
    /// `ψ + shift`.
    Translated { inner: Box<SurfaceModel>, shift: Vec3 },
}

impl SurfaceModel {
    /// Parametrization at a (possibly non-unit) direction; the direction is
    /// normalized internally.
    pub fn point<T: Real>(&self, x: [T; 3]) -> [T; 3] {
        let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
        let nu = [x[0] / r, x[1] / r, x[2] / r];
        match self {
            SurfaceModel::Radial { integrand, radius } => {
                let w = integrand.wulff_point(nu);
                let u = radius.eval(nu);
                [0, 1, 2].map(|k| w[k] + u * nu[k])
            }
            SurfaceModel::Exp { radius } => {
                let e = radius.eval(nu).exp();
                nu.map(|c| c * e)
            }
            SurfaceModel::Dumbbell => {
                let z = nu[2];
                let rho = T::cst(0.1) + (z * z).scale(4.0);
                [nu[0] * rho, nu[1] * rho, z.scale(2.0)]
            }
            SurfaceModel::Translated { inner, shift } => {
                let p = inner.point(x);
                [0, 1, 2].map(|k| p[k] + T::cst(shift[k]))
            }
        }
    }
}

/// Per-node geometry of a parametrized surface.
///
/// `metric` is expressed in the parameter chart at each node (isometric to the
/// base at the origin); `shape` is the differential of the Gauss map in the
/// orthonormal frame `frames` of the surface tangent plane.
#[derive(Clone, Debug)]
pub struct SurfaceGeometry {
    pub directions: Vec<Vec3>,
    pub positions: Vec<Vec3>,
    pub normals: Vec<Vec3>,
    pub frames: Vec<(Vec3, Vec3)>,
    pub metric: Vec<Mat2>,
    pub second_form: Vec<Mat2>,
    pub shape: Vec<Mat2>,
    pub mean_curvature: Vec<f64>,
    /// Quadrature weights of the surface area measure.
    pub area: Vec<f64>,
    /// Translation already subtracted from the model (`Σ − offset`).
    pub offset: Vec3,
    pub model: Option<SurfaceModel>,
}

struct NodeGeometry {
    normal: Vec3,
    frame: (Vec3, Vec3),
    metric: Mat2,
    second_form: Mat2,
    shape: Mat2,
    area_factor: f64,
}

fn node_geometry(d1: [Vec3; 2], d2: [[Vec3; 2]; 2]) -> Option<NodeGeometry> {
    let g = [[dot(d1[0], d1[0]), dot(d1[0], d1[1])], [dot(d1[1], d1[0]), dot(d1[1], d1[1])]];
    let n_raw = cross(d1[0], d1[1]);
    let len = geom::norm(n_raw);
    if !(len > 0.0) || !len.is_finite() {
        return None;
    }
    let n = geom::scale(n_raw, 1.0 / len);
    let sym = 0.5 * (dot(d2[0][1], n) + dot(d2[1][0], n));
    let h = [[-dot(d2[0][0], n), -sym], [-sym, -dot(d2[1][1], n)]];
    let weingarten = geom::mat2_mul(&geom::mat2_inv(&g), &h);
    let f1 = geom::normalize(d1[0]);
    let f2 = cross(n, f1);
    let b = [[dot(f1, d1[0]), dot(f1, d1[1])], [dot(f2, d1[0]), dot(f2, d1[1])]];
    let shape = geom::mat2_mul(&geom::mat2_mul(&b, &weingarten), &geom::mat2_inv(&b));
    Some(NodeGeometry {
        normal: n,
        frame: (f1, f2),
        metric: g,
        second_form: h,
        shape,
        area_factor: geom::mat2_det(&g).sqrt(),
    })
}

fn assemble(
    directions: Vec<Vec3>,
    positions: Vec<Vec3>,
    nodes: Vec<Option<NodeGeometry>>,
    base_weights: &[f64],
    offset: Vec3,
    model: Option<SurfaceModel>,
) -> Result<SurfaceGeometry> {
    let n = nodes.len();
    let mut geo = SurfaceGeometry {
        directions,
        positions,
        normals: Vec::with_capacity(n),
        frames: Vec::with_capacity(n),
        metric: Vec::with_capacity(n),
        second_form: Vec::with_capacity(n),
        shape: Vec::with_capacity(n),
        mean_curvature: Vec::with_capacity(n),
        area: Vec::with_capacity(n),
        offset,
        model,
    };
    for (i, node) in nodes.into_iter().enumerate() {
        let node = node.ok_or_else(|| Error::DegenerateStencil {
            vertex: i,
            reason: "parametrization is singular (tangent vectors are dependent)".into(),
        })?;
        geo.normals.push(node.normal);
        geo.frames.push(node.frame);
        geo.metric.push(node.metric);
        geo.second_form.push(node.second_form);
        geo.mean_curvature.push(geom::mat2_trace(&node.shape));
        geo.shape.push(node.shape);
        geo.area.push(base_weights[i] * node.area_factor);
    }
    Ok(geo)
}

/// Exact geometry of an analytic model sampled at the vertices of `sphere`,
/// translated by `-offset`.
pub fn model_geometry(model: &SurfaceModel, sphere: &SphereMesh, offset: Vec3) -> Result<SurfaceGeometry> {
    let per_node: Vec<(Vec3, Option<NodeGeometry>)> = (0..sphere.len())
        .into_par_iter()
        .map(|i| {
            let (e1, e2) = sphere.frames[i];
            let chart = mesh::sphere_chart(sphere.vertices[i], e1, e2);
            let psi = model.point::<Jet2>(chart);
            let parts = psi.map(|c| jet2_parts(&c));
            let pos = [0, 1, 2].map(|k| parts[k].0 - offset[k]);
            let d1 = [0, 1].map(|a| [0, 1, 2].map(|k| parts[k].1[a]));
            let d2 = [0, 1].map(|a| [0, 1].map(|b| [0, 1, 2].map(|k| parts[k].2[a][b])));
            (pos, node_geometry(d1, d2))
        })
        .collect();
    let (positions, nodes): (Vec<_>, Vec<_>) = per_node.into_iter().unzip();
    assemble(sphere.vertices.clone(), positions, nodes, &sphere.weights, offset, Some(model.clone()))
}

/// Geometry from nodal positions, with derivatives fitted in the charts of
/// `domain` (one node per domain node).
pub fn nodal_geometry(domain: &Domain, directions: Vec<Vec3>, positions: Vec<Vec3>) -> Result<SurfaceGeometry> {
    let op = DiffOperator::new(domain)?;
    let comps: Vec<Vec<f64>> = (0..3).map(|k| positions.iter().map(|p| p[k]).collect()).collect();
    let jets: Vec<_> = comps.iter().map(|c| op.jets(c)).collect();
    let nodes: Vec<Option<NodeGeometry>> = (0..positions.len())
        .into_par_iter()
        .map(|i| {
            let d1 = [0, 1].map(|a| [0, 1, 2].map(|k| jets[k][i].grad[a]));
            let d2 = [0, 1].map(|a| [0, 1].map(|b| [0, 1, 2].map(|k| jets[k][i].hess[a][b])));
            node_geometry(d1, d2)
        })
        .collect();
    assemble(directions, positions, nodes, &domain.weights, [0.0; 3], None)
}

/// `ψ(x) = x + u(x) ν_W(x)` over the Wulff mesh.
///
/// Band-limited radii use exact derivatives in the normal-parameter chart;
/// nodal radii use local fits over the Wulff mesh.
pub fn radial_graph(wulff: &WulffMesh, u: &ScalarField) -> Result<SurfaceGeometry> {
    if u.len() != wulff.len() {
        return Err(Error::Domain(format!("radius has {} values for {} nodes", u.len(), wulff.len())));
    }
    let reach = wulff.reach();
    let max_abs_u = u.max_abs();
    if !(max_abs_u < reach) {
        return Err(Error::Tubular { max_abs_u, reach });
    }
    match &u.spectral {
        Some(radius) => {
            let model = SurfaceModel::Radial { integrand: wulff.integrand.clone(), radius: radius.clone() };
            model_geometry(&model, &wulff.sphere, [0.0; 3])
        }
        None => {
            let positions = (0..wulff.len())
                .map(|i| geom::add(wulff.vertices[i], geom::scale(wulff.normals[i], u.values[i])))
                .collect();
            nodal_geometry(&wulff.domain(), wulff.normals.clone(), positions)
        }
    }
}

/// `ψ(x) = e^{f(x)} x` over the unit sphere.
pub fn exp_graph(sphere: &SphereMesh, f: &ScalarField) -> Result<SurfaceGeometry> {
    if f.len() != sphere.len() {
        return Err(Error::Domain(format!("radius has {} values for {} nodes", f.len(), sphere.len())));
    }
    if f.values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("radius must be finite".into()));
    }
    match &f.spectral {
        Some(radius) => model_geometry(&SurfaceModel::Exp { radius: radius.clone() }, sphere, [0.0; 3]),
        None => {
            let positions = sphere
                .vertices
                .iter()
                .zip(&f.values)
                .map(|(v, r)| geom::scale(*v, r.exp()))
                .collect();
            nodal_geometry(&sphere.domain(), sphere.vertices.clone(), positions)
        }
    }
}

impl SurfaceGeometry {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn total_area(&self) -> f64 {
        mesh::deterministic_sum(self.area.iter().copied())
    }

    /// Shape operator as a tensor field in the surface frames.
    pub fn shape_field(&self) -> TensorField {
        TensorField { values: self.shape.clone(), kind: TensorKind::Operator }
    }

    /// The same surface translated by `-c`.
    pub fn translated(&self, c: Vec3) -> Self {
        let mut out = self.clone();
        for p in &mut out.positions {
            *p = geom::sub(*p, c);
        }
        out.offset = geom::add(self.offset, c);
        out
    }
}

/// Base over which a surface is read as a graph.
#[derive(Clone, Copy, Debug)]
pub enum Base<'a> {
    /// Radial projection `q ↦ q/|q|`; recovered radius is `log |q|` (exp convention).
    Sphere(&'a SphereMesh),
    /// Projection along the normal lines of `W`; recovered radius is the
    /// additive offset `t` in `q = x + t ν_W(x)`.
    Wulff(&'a WulffMesh),
}

impl<'a> Base<'a> {
    pub fn directions(&self) -> &'a [Vec3] {
        match self {
            Base::Sphere(s) => &s.vertices,
            Base::Wulff(w) => &w.normals,
        }
    }

    pub fn positions(&self) -> &'a [Vec3] {
        match self {
            Base::Sphere(s) => &s.vertices,
            Base::Wulff(w) => &w.vertices,
        }
    }

    pub fn weights(&self) -> &'a [f64] {
        match self {
            Base::Sphere(s) => &s.weights,
            Base::Wulff(w) => &w.weights,
        }
    }

    pub fn len(&self) -> usize {
        self.positions().len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions().is_empty()
    }

    pub fn domain(&self) -> Domain {
        match self {
            Base::Sphere(s) => s.domain(),
            Base::Wulff(w) => w.domain(),
        }
    }

    pub fn sphere(&self) -> &'a SphereMesh {
        match self {
            Base::Sphere(s) => s,
            Base::Wulff(w) => &w.sphere,
        }
    }

    fn base_point<T: Real>(&self, nu: [T; 3]) -> [T; 3] {
        match self {
            Base::Sphere(_) => [T::cst(0.0); 3],
            Base::Wulff(w) => w.integrand.wulff_point(nu),
        }
    }
}

/// Default certificate threshold on the margin `η`.
pub const CERTIFICATE_THRESHOLD: f64 = 0.1;

#[derive(Clone, Debug)]
pub struct GraphCertificate {
    /// `min_q ⟨ν_Σ(q), ν_W(p(q))⟩` over surface nodes.
    pub margin: f64,
    pub worst_node: usize,
    pub threshold: f64,
    pub pass: bool,
    /// Radius recovered at the base nodes (requires an analytic model).
    pub radius: Option<ScalarField>,
}

impl GraphCertificate {
    pub fn into_result(self) -> Result<Self> {
        if self.pass {
            Ok(self)
        } else {
            Err(Error::Certificate { margin: self.margin, threshold: self.threshold })
        }
    }
}

const NEWTON_STEPS: usize = 40;
const NEWTON_TOL: f64 = 1e-13;

/// Solves `A(μ) + τ d = target` for a direction `μ` near `start` and a scalar
/// `τ`, where `A` is given on jets.
fn solve_on_sphere<A>(start: Vec3, target: Vec3, dir: Option<Vec3>, a: A) -> Option<(Vec3, f64)>
where
    A: Fn([Jet2; 3]) -> [Jet2; 3],
{
    let mut mu = start;
    let mut tau = 0.0;
    let scale = 1.0 + geom::norm(target);
    for _ in 0..NEWTON_STEPS {
        let (e1, e2) = geom::tangent_frame(mu);
        let parts = a(mesh::sphere_chart(mu, e1, e2)).map(|c| jet2_parts(&c));
        // Normal-line projection uses d = μ itself, so it moves with the chart.
        let d = dir.unwrap_or(mu);
        let r = [0, 1, 2].map(|k| parts[k].0 + tau * d[k] - target[k]);
        if geom::norm(r) < NEWTON_TOL * scale {
            return Some((mu, tau));
        }
        let ds = [0, 1, 2].map(|k| parts[k].1[0] + if dir.is_none() { tau * e1[k] } else { 0.0 });
        let dt = [0, 1, 2].map(|k| parts[k].1[1] + if dir.is_none() { tau * e2[k] } else { 0.0 });
        let j = Matrix3::new(ds[0], dt[0], d[0], ds[1], dt[1], d[1], ds[2], dt[2], d[2]);
        let step = j.lu().solve(&Vector3::new(-r[0], -r[1], -r[2]))?;
        let mut st = [step[0], step[1]];
        let len = st[0].hypot(st[1]);
        if len > 0.3 {
            st = [st[0] * 0.3 / len, st[1] * 0.3 / len];
        }
        if !st[0].is_finite() || !st[1].is_finite() || !step[2].is_finite() {
            return None;
        }
        mu = geom::normalize(geom::add(mu, geom::add(geom::scale(e1, st[0]), geom::scale(e2, st[1]))));
        tau += step[2];
    }
    None
}

/// Foot point on `W` of the normal line through `q`: `q = X(ν) + t ν`.
pub fn project_to_wulff(wulff: &WulffMesh, q: Vec3) -> Result<(Vec3, f64)> {
    let start = wulff.integrand.gauge(q)?.maximizer;
    solve_on_sphere(start, q, None, |nu| wulff.integrand.wulff_point(nu))
        .ok_or_else(|| Error::Projection { node: usize::MAX, reason: format!("no normal-line foot point for {q:?}") })
}

/// Graph certificate of `geo` over `base`, and the recovered radius when the
/// geometry carries an analytic model.
pub fn projection_certificate(geo: &SurfaceGeometry, base: Base<'_>, threshold: f64) -> Result<GraphCertificate> {
    let margins: Vec<Result<f64>> = (0..geo.len())
        .into_par_iter()
        .map(|j| {
            let q = geo.positions[j];
            let nu_w = match base {
                Base::Sphere(_) => geom::normalize(q),
                Base::Wulff(w) => project_to_wulff(w, q)
                    .map_err(|_| Error::Projection { node: j, reason: "normal-line projection failed".into() })?
                    .0,
            };
            Ok(dot(geo.normals[j], nu_w))
        })
        .collect();
    let mut margin = f64::INFINITY;
    let mut worst_node = 0;
    for (j, m) in margins.into_iter().enumerate() {
        let m = m?;
        if m < margin || m.is_nan() {
            margin = m;
            worst_node = j;
        }
    }
    let pass = margin > threshold;
    let radius = match (&geo.model, pass) {
        (Some(model), true) => Some(recover_radius(model, geo.offset, base)?),
        _ => None,
    };
    Ok(GraphCertificate { margin, worst_node, threshold, pass, radius })
}

/// Radius of `model − offset` along the base normal lines, one value per base node.
pub fn recover_radius(model: &SurfaceModel, offset: Vec3, base: Base<'_>) -> Result<ScalarField> {
    let dirs = base.directions();
    let values: Vec<Result<f64>> = (0..base.len())
        .into_par_iter()
        .map(|i| {
            let d = dirs[i];
            let b: Vec3 = base.base_point(d);
            let target = geom::add(b, offset);
            // ψ(μ) − τ d = b + offset, solved with τ ↦ −τ.
            let (_, tau) = solve_on_sphere(d, target, Some(geom::scale(d, -1.0)), |mu| model.point(mu))
                .ok_or_else(|| Error::Projection { node: i, reason: "ray does not meet the surface".into() })?;
            match base {
                Base::Sphere(_) if tau <= 0.0 => {
                    Err(Error::Projection { node: i, reason: format!("non-positive radial hit {tau}") })
                }
                Base::Sphere(_) => Ok(tau.ln()),
                Base::Wulff(_) => Ok(tau),
            }
        })
        .collect();
    Ok(ScalarField::nodal(values.into_iter().collect::<Result<Vec<_>>>()?))
}

/// Uniform-grid nearest-neighbor index over a point set.
struct PointGrid<'a> {
    points: &'a [Vec3],
    cell: f64,
    cells: HashMap<[i64; 3], Vec<usize>>,
}

impl<'a> PointGrid<'a> {
    fn new(points: &'a [Vec3], cell: f64) -> Self {
        let mut cells: HashMap<[i64; 3], Vec<usize>> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            cells.entry(Self::key(*p, cell)).or_default().push(i);
        }
        Self { points, cell, cells }
    }

    fn key(p: Vec3, cell: f64) -> [i64; 3] {
        p.map(|c| (c / cell).floor() as i64)
    }

    fn nearest_distance(&self, q: Vec3) -> f64 {
        let k = Self::key(q, self.cell);
        let mut best = f64::INFINITY;
        let mut ring = 0i64;
        loop {
            for dx in -ring..=ring {
                for dy in -ring..=ring {
                    for dz in -ring..=ring {
                        if dx.abs().max(dy.abs()).max(dz.abs()) != ring {
                            continue;
                        }
                        if let Some(ids) = self.cells.get(&[k[0] + dx, k[1] + dy, k[2] + dz]) {
                            for &i in ids {
                                best = best.min(geom::norm(geom::sub(self.points[i], q)));
                            }
                        }
                    }
                }
            }
            // Every point outside the searched block is farther than ring·cell.
            if best <= ring as f64 * self.cell || ring > 64 {
                return best;
            }
            ring += 1;
        }
    }
}

fn directed_max_min(from: &[Vec3], shift: Vec3, grid: &PointGrid<'_>) -> f64 {
    from.par_iter()
        .map(|p| grid.nearest_distance(geom::add(*p, shift)))
        .reduce(|| 0.0, f64::max)
}

fn centroid(points: &[Vec3]) -> Vec3 {
    let n = points.len() as f64;
    [0, 1, 2].map(|k| mesh::deterministic_sum(points.iter().map(|p| p[k])) / n)
}

/// Symmetric node Hausdorff distance between `a + τ` and `b`, minimized over
/// translations `τ`; returns `(distance, τ)`.
pub fn hausdorff_distance(a: &[Vec3], b: &[Vec3]) -> (f64, Vec3) {
    let spacing = typical_spacing(b).max(typical_spacing(a)).max(1e-6);
    let grid_b = PointGrid::new(b, spacing);
    let grid_a = PointGrid::new(a, spacing);
    let objective = |tau: Vec3| -> f64 {
        let d1 = directed_max_min(a, tau, &grid_b);
        let d2 = directed_max_min(b, geom::scale(tau, -1.0), &grid_a);
        d1.max(d2)
    };
    let start = geom::sub(centroid(b), centroid(a));
    let (d, tau) = nelder_mead(|t| objective([t[0], t[1], t[2]]), &start, 0.1 * spacing, 300, 1e-14);
    (d, [tau[0], tau[1], tau[2]])
}

/// Hausdorff distance of a surface to its base, minimized over translations.
pub fn hausdorff_to_base(geo: &SurfaceGeometry, base: Base<'_>) -> f64 {
    hausdorff_distance(&geo.positions, base.positions()).0
}

fn typical_spacing(points: &[Vec3]) -> f64 {
    if points.len() < 2 {
        return 1.0;
    }
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for p in points {
        for k in 0..3 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    let diag = geom::norm(geom::sub(hi, lo));
    // Area-based spacing for points on a closed surface of that extent.
    diag / (points.len() as f64).sqrt() * 2.0
}

/// Height function on a uniform square grid over `[-radius, radius]²`; only
/// nodes inside the closed disk of that radius are used.
#[derive(Clone, Debug)]
pub struct FlatGrid {
    pub n: usize,
    pub radius: f64,
    pub spacing: f64,
    /// Row-major values, `values[i * n + j]` at `(x_i, y_j)`; NaN outside the disk.
    pub values: Vec<f64>,
}

impl FlatGrid {
    pub fn from_fn<G: Fn(f64, f64) -> f64>(n: usize, radius: f64, g: G) -> Result<Self> {
        if n < 5 || !(radius > 0.0 && radius < 1.0) {
            return Err(Error::Domain("flat grid needs n ≥ 5 and 0 < R < 1".into()));
        }
        let spacing = 2.0 * radius / (n - 1) as f64;
        let mut values = vec![f64::NAN; n * n];
        for i in 0..n {
            for j in 0..n {
                let (x, y) = (-radius + i as f64 * spacing, -radius + j as f64 * spacing);
                if x * x + y * y <= radius * radius * (1.0 + 1e-12) {
                    values[i * n + j] = g(x, y);
                }
            }
        }
        Ok(Self { n, radius, spacing, values })
    }

    pub fn coords(&self, i: usize, j: usize) -> [f64; 2] {
        [-self.radius + i as f64 * self.spacing, -self.radius + j as f64 * self.spacing]
    }

    fn at(&self, i: isize, j: isize) -> f64 {
        if i < 0 || j < 0 || i as usize >= self.n || j as usize >= self.n {
            return f64::NAN;
        }
        self.values[i as usize * self.n + j as usize]
    }

    /// Centered first and second differences at an interior node.
    fn jet(&self, i: usize, j: usize) -> Option<([f64; 2], Mat2)> {
        let (i, j) = (i as isize, j as isize);
        let hh = self.spacing;
        let c = self.at(i, j);
        let (xp, xm, yp, ym) = (self.at(i + 1, j), self.at(i - 1, j), self.at(i, j + 1), self.at(i, j - 1));
        let (pp, pm, mp, mm) = (self.at(i + 1, j + 1), self.at(i + 1, j - 1), self.at(i - 1, j + 1), self.at(i - 1, j - 1));
        let all = [c, xp, xm, yp, ym, pp, pm, mp, mm];
        if all.iter().any(|v| !v.is_finite()) {
            return None;
        }
        let g = [(xp - xm) / (2.0 * hh), (yp - ym) / (2.0 * hh)];
        let uxx = (xp - 2.0 * c + xm) / (hh * hh);
        let uyy = (yp - 2.0 * c + ym) / (hh * hh);
        let uxy = (pp - pm - mp + mm) / (4.0 * hh * hh);
        Some((g, [[uxx, uxy], [uxy, uyy]]))
    }
}

/// Second fundamental form `h(u)` of a flat graph at grid nodes.
#[derive(Clone, Debug)]
pub struct FlatShape {
    /// `h^i_j = ∂_j (∂_i u / sqrt(1 + |Du|²))` per retained node.
    pub field: TensorField,
    pub points: Vec<[f64; 2]>,
    /// Nodes dropped because the gradient blew up near the rim.
    pub trimmed: usize,
}

const GRADIENT_BLOWUP: f64 = 1e3;

/// `h(u)` by centered differences of the flux `V = Du / sqrt(1 + |Du|²)`.
pub fn flat_graph_shape(grid: &FlatGrid) -> FlatShape {
    let n = grid.n;
    let mut flux = vec![[f64::NAN; 2]; n * n];
    let mut trimmed = 0;
    for i in 0..n {
        for j in 0..n {
            if let Some((g, _)) = grid.jet(i, j) {
                let norm = g[0].hypot(g[1]);
                if norm > GRADIENT_BLOWUP {
                    trimmed += 1;
                    continue;
                }
                let s = (1.0 + norm * norm).sqrt();
                flux[i * n + j] = [g[0] / s, g[1] / s];
            }
        }
    }
    let hh = grid.spacing;
    let mut values = Vec::new();
    let mut points = Vec::new();
    for i in 1..n - 1 {
        for j in 1..n - 1 {
            let f = |a: usize, b: usize| flux[a * n + b];
            let (xp, xm, yp, ym) = (f(i + 1, j), f(i - 1, j), f(i, j + 1), f(i, j - 1));
            if [xp, xm, yp, ym].iter().any(|v| !v[0].is_finite() || !v[1].is_finite()) {
                continue;
            }
            let dx = [(xp[0] - xm[0]) / (2.0 * hh), (xp[1] - xm[1]) / (2.0 * hh)];
            let dy = [(yp[0] - ym[0]) / (2.0 * hh), (yp[1] - ym[1]) / (2.0 * hh)];
            // Row i, column j: ∂_j V^i.
            values.push([[dx[0], dy[0]], [dx[1], dy[1]]]);
            points.push(grid.coords(i, j));
        }
    }
    FlatShape { field: TensorField { values, kind: TensorKind::Operator }, points, trimmed }
}

/// Spherical cap of curvature `λ` over the plane, tangent at the origin.
pub fn spherical_cap(lambda: f64, x: f64, y: f64) -> f64 {
    (1.0 - (1.0 - lambda * lambda * (x * x + y * y)).sqrt()) / lambda
}

/// Discrete `W^{2,p}` norm of a grid function over nodes with a full stencil.
pub fn grid_w2p_norm(grid: &FlatGrid, p: f64) -> Result<f64> {
    let mut v = Vec::new();
    let mut g = Vec::new();
    let mut h = Vec::new();
    for i in 0..grid.n {
        for j in 0..grid.n {
            if let Some((d1, d2)) = grid.jet(i, j) {
                v.push(grid.values[i * grid.n + j]);
                g.push(d1[0].hypot(d1[1]));
                h.push(geom::mat2_frobenius(&d2));
            }
        }
    }
    let w = vec![grid.spacing * grid.spacing; v.len()];
    Ok(mesh::lp_norm(&v, &w, p)? + mesh::lp_norm(&g, &w, p)? + mesh::lp_norm(&h, &w, p)?)
}

/// `min_λ ‖u − cap_λ‖_{W^{2,p}}` by golden-section search; returns `(residual, λ)`.
pub fn cap_fit_residual(grid: &FlatGrid, p: f64) -> Result<(f64, f64)> {
    let eval = |lambda: f64| -> Result<f64> {
        let mut diff = grid.clone();
        for i in 0..grid.n {
            for j in 0..grid.n {
                let [x, y] = grid.coords(i, j);
                let k = i * grid.n + j;
                diff.values[k] = grid.values[k] - spherical_cap(lambda, x, y);
            }
        }
        grid_w2p_norm(&diff, p)
    };
    let hi = 0.999 / grid.radius;
    golden_section(eval, 1e-6, hi, 1e-13)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_sphere_geometry_is_identity() {
        let s = mesh::build_sphere_mesh(3).unwrap();
        let geo = exp_graph(&s, &ScalarField::sample(&s.vertices, &SpectralField::zeros(0))).unwrap();
        for i in 0..geo.len() {
            assert!(geom::norm(geom::sub(geo.normals[i], s.vertices[i])) < 1e-14);
            let d = geo.shape[i];
            assert!((d[0][0] - 1.0).abs() < 1e-13 && (d[1][1] - 1.0).abs() < 1e-13);
            assert!(d[0][1].abs() < 1e-13 && d[1][0].abs() < 1e-13);
        }
        assert!((geo.total_area() - mesh::SPHERE_AREA).abs() < 1e-12);
    }

    #[test]
    fn trace_of_shape_is_mean_curvature() {
        let s = mesh::build_sphere_mesh(2).unwrap();
        let f = ScalarField::sample(&s.vertices, &SpectralField::harmonic(3, 2, 0.1));
        let geo = exp_graph(&s, &f).unwrap();
        for i in 0..geo.len() {
            assert_eq!(geom::mat2_trace(&geo.shape[i]), geo.mean_curvature[i]);
        }
    }

    #[test]
    fn point_grid_matches_brute_force() {
        let s = mesh::build_sphere_mesh(2).unwrap();
        let grid = PointGrid::new(&s.vertices, 0.2);
        for q in [[0.3, 0.1, -0.2], [1.5, 0.0, 0.0], [0.0, 0.7, 0.7]] {
            let brute = s.vertices.iter().map(|v| geom::norm(geom::sub(*v, q))).fold(f64::INFINITY, f64::min);
            assert_eq!(grid.nearest_distance(q), brute);
        }
    }

    #[test]
    fn tubular_violation_is_reported() {
        let f = Integrand::constant();
        let w = f.build_wulff(2).unwrap();
        let u = ScalarField::nodal(vec![2.0; w.len()]);
        assert!(matches!(radial_graph(&w, &u), Err(Error::Tubular { .. })));
    }
}
