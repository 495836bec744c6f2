//! Local graph charts of a C^{1,α} boundary, the rigid motions that put a
//! boundary point at the origin with horizontal tangent plane, and the
//! inequalities the exponent bootstrap draws from them.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::extension::BoundaryData;
use crate::poly::{Polynomial, Term};
use crate::qc::Ellipsoid;
use crate::regularity::log_log_slope;
use crate::sampling::{rng, spread_points, tangent_direction, uniform_sphere};
use crate::sphere::{dist, dot, norm, orthonormal_complement, SpherePoint};

/// Inflation applied to sampled constants that stand in for true suprema.
pub const SAFETY_FACTOR: f64 = 1.05;

/// `x -> R x + b` with `R` orthogonal.
#[derive(Debug, Clone, PartialEq)]
pub struct Isometry {
    rotation: DMatrix<f64>,
    translation: Vec<f64>,
}

impl Isometry {
    pub fn new(rotation: DMatrix<f64>, translation: Vec<f64>) -> Result<Self> {
        let n = rotation.nrows();
        if rotation.ncols() != n || translation.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: translation.len() });
        }
        let iso = Self { rotation, translation };
        if iso.orthogonality_defect() > 1e-10 {
            return Err(Error::InvalidParameter("rotation is not orthogonal".into()));
        }
        Ok(iso)
    }

    pub fn identity(n: usize) -> Self {
        Self { rotation: DMatrix::identity(n, n), translation: vec![0.0; n] }
    }

    pub fn n(&self) -> usize {
        self.translation.len()
    }

    pub fn rotation(&self) -> &DMatrix<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &[f64] {
        &self.translation
    }

    /// `|R^T R - I|` (Frobenius).
    pub fn orthogonality_defect(&self) -> f64 {
        let n = self.n();
        (self.rotation.transpose() * &self.rotation - DMatrix::<f64>::identity(n, n)).norm()
    }

    pub fn apply_vector(&self, v: &[f64]) -> Vec<f64> {
        let n = self.n();
        (0..n).map(|i| (0..n).map(|k| self.rotation[(i, k)] * v[k]).sum()).collect()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = self.apply_vector(x);
        for (yi, b) in y.iter_mut().zip(&self.translation) {
            *yi += b;
        }
        y
    }

    pub fn inverse_apply_vector(&self, v: &[f64]) -> Vec<f64> {
        let n = self.n();
        (0..n).map(|i| (0..n).map(|k| self.rotation[(k, i)] * v[k]).sum()).collect()
    }

    pub fn inverse_apply(&self, y: &[f64]) -> Vec<f64> {
        let shifted: Vec<f64> = y.iter().zip(&self.translation).map(|(a, b)| a - b).collect();
        self.inverse_apply_vector(&shifted)
    }

    pub fn inverse(&self) -> Self {
        let rt = self.rotation.transpose();
        let b = self.inverse_apply_vector(&self.translation).into_iter().map(|v| -v).collect();
        Self { rotation: rt, translation: b }
    }

    /// `other ∘ self`.
    pub fn then(&self, other: &Isometry) -> Self {
        Self { rotation: &other.rotation * &self.rotation, translation: other.apply(&self.translation) }
    }
}

/// The rigid motion sending `q` to the origin and the unit normal `normal` to `e_n`:
/// a Householder reflection followed by a translation.
pub fn normalize_at(q: &[f64], normal: &[f64]) -> Result<Isometry> {
    let n = q.len();
    if normal.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: normal.len() });
    }
    let nu = SpherePoint::new(normal.to_vec())?;
    let mut v = nu.coords().to_vec();
    v[n - 1] -= 1.0;
    let vv = dot(&v, &v);
    let mut rot = DMatrix::identity(n, n);
    if vv > 1e-30 {
        for i in 0..n {
            for k in 0..n {
                rot[(i, k)] -= 2.0 * v[i] * v[k] / vv;
            }
        }
    }
    let iso = Isometry { rotation: rot, translation: vec![0.0; n] };
    let shift = iso.apply_vector(q).into_iter().map(|v| -v).collect();
    Ok(Isometry { translation: shift, ..iso })
}

/// Boundary surfaces described in world coordinates.
#[derive(Clone)]
pub enum Surface {
    /// `{p : (p - center)^T matrix (p - center) = 1}`
    Quadric { matrix: DMatrix<f64>, center: Vec<f64> },
    /// The image `F(S^{n-1})` of a boundary map.
    Trace(BoundaryData),
}

impl fmt::Debug for Surface {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Surface::Quadric { matrix, center } => f.debug_struct("Quadric").field("matrix", matrix).field("center", center).finish(),
            Surface::Trace(d) => f.debug_tuple("Trace").field(&d.label()).finish(),
        }
    }
}

impl Surface {
    pub fn sphere(n: usize) -> Self {
        Surface::Quadric { matrix: DMatrix::identity(n, n), center: vec![0.0; n] }
    }

    pub fn ellipsoid(e: &Ellipsoid) -> Result<Self> {
        let ff = &e.frame * e.frame.transpose();
        let matrix = ff.try_inverse().ok_or_else(|| Error::InvalidParameter("degenerate ellipsoid".into()))?;
        Ok(Surface::Quadric { matrix, center: e.center.clone() })
    }

    pub fn n(&self) -> usize {
        match self {
            Surface::Quadric { center, .. } => center.len(),
            Surface::Trace(d) => d.n(),
        }
    }

    fn transformed(&self, l: &Isometry) -> Result<Self> {
        Ok(match self {
            Surface::Quadric { matrix, center } => {
                Surface::Quadric { matrix: l.rotation() * matrix * l.rotation().transpose(), center: l.apply(center) }
            }
            Surface::Trace(d) => {
                let l2 = l.clone();
                Surface::Trace(d.map_values(d.arity(), format!("L·{}", d.label()), move |v, o| o.copy_from_slice(&l2.apply(v)))?)
            }
        })
    }
}

/// Exponential map of the sphere at `eta` in the frame `basis` of its tangent plane.
fn exp_map(eta: &[f64], basis: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    let t = norm(v);
    let (s, c) = t.sin_cos();
    let sinc = if t < 1e-8 { 1.0 - t * t / 6.0 } else { s / t };
    let mut out: Vec<f64> = eta.iter().map(|e| c * e).collect();
    for (vi, b) in v.iter().zip(basis) {
        for (o, bi) in out.iter_mut().zip(b) {
            *o += sinc * vi * bi;
        }
    }
    out
}

#[derive(Clone)]
struct TraceFrame {
    data: BoundaryData,
    eta: SpherePoint,
    basis: Vec<Vec<f64>>,
}

impl TraceFrame {
    fn new(data: BoundaryData, eta: SpherePoint) -> Self {
        let basis = orthonormal_complement(eta.coords());
        Self { data, eta, basis }
    }

    fn point(&self, v: &[f64]) -> Vec<f64> {
        self.data.eval(&exp_map(self.eta.coords(), &self.basis, v))
    }

    /// Central-difference derivative of `v -> g(F(exp(v)))`, `n x (n - 1)`.
    fn derivative<G: Fn(&[f64]) -> Vec<f64>>(&self, v: &[f64], g: G) -> DMatrix<f64> {
        let m = v.len();
        let h = 1e-6;
        let mut vp = v.to_vec();
        let first = g(&self.point(v));
        let mut d = DMatrix::zeros(first.len(), m);
        for k in 0..m {
            vp[k] = v[k] + h;
            let a = g(&self.point(&vp));
            vp[k] = v[k] - h;
            let b = g(&self.point(&vp));
            vp[k] = v[k];
            for i in 0..first.len() {
                d[(i, k)] = (a[i] - b[i]) / (2.0 * h);
            }
        }
        d
    }

    /// Outward unit normal of the image surface at `F(eta)`, oriented away from the origin.
    fn normal(&self) -> Result<Vec<f64>> {
        let n = self.eta.dim();
        let d = self.derivative(&vec![0.0; n - 1], |p| p.to_vec());
        let svd = d.clone().svd(true, false);
        let u = svd.u.ok_or_else(|| Error::InvalidParameter("tangent map SVD failed".into()))?;
        if svd.singular_values.min() < 1e-10 {
            return Err(Error::DegenerateJacobian { point: self.eta.coords().to_vec(), sigma_min: svd.singular_values.min() });
        }
        // the left singular vector missing from the thin SVD spans the normal line
        let mut nu = vec![1.0; n];
        let full = DMatrix::from_fn(n, n, |i, j| if j < n - 1 { u[(i, j)] } else { 0.0 });
        for (idx, e) in (0..n).map(|k| (k, SpherePoint::axis(n, k))) {
            let mut w = e.coords().to_vec();
            for j in 0..n - 1 {
                let c: f64 = (0..n).map(|i| full[(i, j)] * w[i]).sum();
                for i in 0..n {
                    w[i] -= c * full[(i, j)];
                }
            }
            if norm(&w) > 0.5 || idx == n - 1 {
                if norm(&w) > 1e-8 {
                    nu = w;
                    break;
                }
            }
        }
        let nu = SpherePoint::new(nu)?.coords().to_vec();
        let q = self.data.eval_at(&self.eta);
        Ok(if dot(&nu, &q) < 0.0 { nu.into_iter().map(|v| -v).collect() } else { nu })
    }
}

/// How `Phi` is evaluated.
#[derive(Clone)]
enum PhiKind {
    Quadric { matrix: DMatrix<f64>, center: Vec<f64> },
    Trace(Arc<TraceFrame>),
    Paraboloid { a: f64 },
    Polynomial { p: Polynomial, grad: Vec<Polynomial> },
    Reanchored(Arc<GraphChart>),
}

/// A boundary patch written as `{L^{-1}(zeta, Phi(zeta)) : |zeta| < radius}`.
#[derive(Clone)]
pub struct GraphChart {
    anchor: Vec<f64>,
    iso: Isometry,
    phi: PhiKind,
    alpha: f64,
    c2: f64,
    radius: f64,
}

impl fmt::Debug for GraphChart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GraphChart")
            .field("anchor", &self.anchor)
            .field("kind", &self.kind_name())
            .field("alpha", &self.alpha)
            .field("c2", &self.c2)
            .field("radius", &self.radius)
            .finish()
    }
}

const NEWTON_ITERS: usize = 60;

impl GraphChart {
    /// Chart of `surface` at its point `q`; `eta` locates `q` on trace surfaces.
    pub fn on_surface(surface: &Surface, q: &[f64], eta: Option<&SpherePoint>, alpha: f64, c2: f64, radius: f64) -> Result<Self> {
        let (normal, phi) = match surface {
            Surface::Quadric { matrix, center } => {
                let d: Vec<f64> = q.iter().zip(center).map(|(a, b)| a - b).collect();
                let g = matrix * DVector::from_column_slice(&d);
                (g.as_slice().to_vec(), PhiKind::Quadric { matrix: matrix.clone(), center: center.clone() })
            }
            Surface::Trace(data) => {
                let eta = match eta {
                    Some(e) => e.clone(),
                    None => locate_on_trace(data, q)?,
                };
                let frame = TraceFrame::new(data.clone(), eta);
                (frame.normal()?, PhiKind::Trace(Arc::new(frame)))
            }
        };
        let iso = normalize_at(q, &normal)?;
        Self::build(q.to_vec(), iso, phi, alpha, c2, radius)
    }

    /// Graph `zeta -> a |zeta|^2` in the frame `iso`.
    pub fn paraboloid(iso: Isometry, a: f64, radius: f64) -> Result<Self> {
        let anchor = iso.inverse_apply(&vec![0.0; iso.n()]);
        Self::build(anchor, iso, PhiKind::Paraboloid { a }, 1.0, 2.0 * a.abs(), radius)
    }

    /// Graph of a polynomial in `n - 1` variables in the frame `iso`.
    pub fn polynomial(iso: Isometry, p: Polynomial, alpha: f64, c2: f64, radius: f64) -> Result<Self> {
        if p.nvars() + 1 != iso.n() {
            return Err(Error::DimensionMismatch { expected: iso.n() - 1, got: p.nvars() });
        }
        let anchor = iso.inverse_apply(&vec![0.0; iso.n()]);
        let grad = (0..p.nvars()).map(|i| p.partial(i)).collect();
        Self::build(anchor, iso, PhiKind::Polynomial { p, grad }, alpha, c2, radius)
    }

    /// A chart centred at `q` describing the same surface as `base`.
    pub fn reanchored(base: &GraphChart, q: &[f64], alpha: f64, c2: f64, radius: f64) -> Result<Self> {
        let y = base.iso.apply(q);
        let n = y.len();
        let zeta = &y[..n - 1];
        let g = base.grad_phi_unchecked(zeta)?;
        let mut local: Vec<f64> = g.iter().map(|v| -v).collect();
        local.push(1.0);
        let normal = base.iso.inverse_apply_vector(&local);
        let iso = normalize_at(q, &normal)?;
        Self::build(q.to_vec(), iso, PhiKind::Reanchored(Arc::new(base.clone())), alpha, c2, radius)
    }

    fn build(anchor: Vec<f64>, iso: Isometry, phi: PhiKind, alpha: f64, c2: f64, radius: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::InvalidParameter(format!("alpha must lie in (0, 1], got {alpha}")));
        }
        if !(radius > 0.0) || !(c2 >= 0.0) {
            return Err(Error::InvalidParameter("chart radius must be positive and C2 non-negative".into()));
        }
        Ok(Self { anchor, iso, phi, alpha, c2, radius })
    }

    pub fn n(&self) -> usize {
        self.anchor.len()
    }

    pub fn anchor(&self) -> &[f64] {
        &self.anchor
    }

    pub fn iso(&self) -> &Isometry {
        &self.iso
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn c2(&self) -> f64 {
        self.c2
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn with_c2(mut self, c2: f64) -> Self {
        self.c2 = c2;
        self
    }

    pub fn kind_name(&self) -> &'static str {
        match &self.phi {
            PhiKind::Quadric { .. } => "quadric",
            PhiKind::Trace(_) => "trace",
            PhiKind::Paraboloid { .. } => "paraboloid",
            PhiKind::Polynomial { .. } => "polynomial",
            PhiKind::Reanchored(_) => "reanchored",
        }
    }

    /// World-coordinate normal at the anchor.
    pub fn normal(&self) -> Vec<f64> {
        let mut e = vec![0.0; self.n()];
        e[self.n() - 1] = 1.0;
        self.iso.inverse_apply_vector(&e)
    }

    fn check_domain(&self, zeta: &[f64]) -> Result<()> {
        if zeta.len() + 1 != self.n() {
            return Err(Error::DimensionMismatch { expected: self.n() - 1, got: zeta.len() });
        }
        if norm(zeta) > self.radius * (1.0 + 1e-12) {
            return Err(Error::OutsideChart { point: zeta.to_vec(), radius: self.radius });
        }
        Ok(())
    }

    pub fn phi(&self, zeta: &[f64]) -> Result<f64> {
        self.check_domain(zeta)?;
        self.phi_unchecked(zeta)
    }

    pub fn grad_phi(&self, zeta: &[f64]) -> Result<Vec<f64>> {
        self.check_domain(zeta)?;
        self.grad_phi_unchecked(zeta)
    }

    fn world(&self, zeta: &[f64], t: f64) -> Vec<f64> {
        let mut y = zeta.to_vec();
        y.push(t);
        self.iso.inverse_apply(&y)
    }

    fn quadric_solve(&self, matrix: &DMatrix<f64>, center: &[f64], zeta: &[f64]) -> Result<f64> {
        let n = self.n();
        let w0: Vec<f64> = self.world(zeta, 0.0).iter().zip(center).map(|(a, b)| a - b).collect();
        let mut en = vec![0.0; n];
        en[n - 1] = 1.0;
        let e = self.iso.inverse_apply_vector(&en);
        let me = matrix * DVector::from_column_slice(&e);
        let mw = matrix * DVector::from_column_slice(&w0);
        let a = dot(&e, me.as_slice());
        let b = 2.0 * dot(&e, mw.as_slice());
        let c = dot(&w0, mw.as_slice()) - 1.0;
        let disc = b * b - 4.0 * a * c;
        if disc < 0.0 || a <= 0.0 {
            return Err(Error::OutsideChart { point: zeta.to_vec(), radius: self.radius });
        }
        let q = -0.5 * (b + b.signum() * disc.sqrt());
        if q == 0.0 {
            return Ok(0.0);
        }
        let (t1, t2) = (q / a, c / q);
        Ok(if t1.abs() < t2.abs() { t1 } else { t2 })
    }

    fn trace_solve(&self, frame: &TraceFrame, zeta: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let n = self.n();
        let local = |p: &[f64]| self.iso.apply(p);
        let mut v = vec![0.0; n - 1];
        let d0 = frame.derivative(&v, local);
        let a0 = d0.rows(0, n - 1).into_owned();
        let inv0 = a0.clone().try_inverse().ok_or_else(|| Error::OutsideChart { point: zeta.to_vec(), radius: self.radius })?;
        let z = DVector::from_column_slice(zeta);
        let step = &inv0 * &z;
        v.copy_from_slice(step.as_slice());
        for _ in 0..NEWTON_ITERS {
            let y = local(&frame.point(&v));
            let res: Vec<f64> = y[..n - 1].iter().zip(zeta).map(|(a, b)| a - b).collect();
            if norm(&res) < 1e-14 * (1.0 + norm(zeta)) {
                return Ok((v, y));
            }
            let d = frame.derivative(&v, local);
            let a = d.rows(0, n - 1).into_owned();
            let inv = a.try_inverse().ok_or_else(|| Error::OutsideChart { point: zeta.to_vec(), radius: self.radius })?;
            let dv = inv * DVector::from_column_slice(&res);
            for (vi, di) in v.iter_mut().zip(dv.iter()) {
                *vi -= di;
            }
        }
        let y = local(&frame.point(&v));
        let res: Vec<f64> = y[..n - 1].iter().zip(zeta).map(|(a, b)| a - b).collect();
        if norm(&res) < 1e-11 * (1.0 + norm(zeta)) {
            Ok((v, y))
        } else {
            Err(Error::OutsideChart { point: zeta.to_vec(), radius: self.radius })
        }
    }

    /// Solves `h(t) = y_b[n] - Phi_b(y_b[..n])` along the chart's normal line.
    fn reanchored_solve(&self, base: &GraphChart, zeta: &[f64]) -> Result<(f64, Vec<f64>, f64)> {
        let n = self.n();
        let mut en = vec![0.0; n];
        en[n - 1] = 1.0;
        let w = base.iso.apply_vector(&self.iso.inverse_apply_vector(&en));
        let mut t = 0.0;
        for _ in 0..NEWTON_ITERS {
            let yb = base.iso.apply(&self.world(zeta, t));
            let g = base.grad_phi_unchecked(&yb[..n - 1])?;
            let h = yb[n - 1] - base.phi_unchecked(&yb[..n - 1])?;
            let dh = w[n - 1] - dot(&g, &w[..n - 1]);
            if dh.abs() < 1e-14 {
                break;
            }
            let dt = h / dh;
            t -= dt;
            if dt.abs() < 1e-15 * (1.0 + t.abs()) {
                let yb = base.iso.apply(&self.world(zeta, t));
                let g = base.grad_phi_unchecked(&yb[..n - 1])?;
                let s = w[n - 1] - dot(&g, &w[..n - 1]);
                return Ok((t, g, s));
            }
        }
        let yb = base.iso.apply(&self.world(zeta, t));
        let h = yb[n - 1] - base.phi_unchecked(&yb[..n - 1])?;
        if h.abs() > 1e-11 {
            return Err(Error::OutsideChart { point: zeta.to_vec(), radius: self.radius });
        }
        let g = base.grad_phi_unchecked(&yb[..n - 1])?;
        Ok((t, g.clone(), w[n - 1] - dot(&g, &w[..n - 1])))
    }

    fn phi_unchecked(&self, zeta: &[f64]) -> Result<f64> {
        match &self.phi {
            PhiKind::Quadric { matrix, center } => self.quadric_solve(matrix, center, zeta),
            PhiKind::Trace(frame) => Ok(self.trace_solve(frame, zeta)?.1[self.n() - 1]),
            PhiKind::Paraboloid { a } => Ok(a * dot(zeta, zeta)),
            PhiKind::Polynomial { p, .. } => Ok(p.eval(zeta)),
            PhiKind::Reanchored(base) => Ok(self.reanchored_solve(base, zeta)?.0),
        }
    }

    fn grad_phi_unchecked(&self, zeta: &[f64]) -> Result<Vec<f64>> {
        let n = self.n();
        match &self.phi {
            PhiKind::Quadric { matrix, center } => {
                let t = self.quadric_solve(matrix, center, zeta)?;
                let d: Vec<f64> = self.world(zeta, t).iter().zip(center).map(|(a, b)| a - b).collect();
                let g = matrix * DVector::from_column_slice(&d);
                let gy = self.iso.apply_vector(g.as_slice());
                Ok(gy[..n - 1].iter().map(|v| -v / gy[n - 1]).collect())
            }
            PhiKind::Trace(frame) => {
                let (v, _) = self.trace_solve(frame, zeta)?;
                let d = frame.derivative(&v, |p| self.iso.apply(p));
                let a = d.rows(0, n - 1).into_owned();
                let b = d.row(n - 1).transpose();
                let inv_t = a.transpose().try_inverse().ok_or_else(|| Error::OutsideChart { point: zeta.to_vec(), radius: self.radius })?;
                Ok((inv_t * b).as_slice().to_vec())
            }
            PhiKind::Paraboloid { a } => Ok(zeta.iter().map(|z| 2.0 * a * z).collect()),
            PhiKind::Polynomial { grad, .. } => Ok(grad.iter().map(|g| g.eval(zeta)).collect()),
            PhiKind::Reanchored(base) => {
                let (_, g, dh) = self.reanchored_solve(base, zeta)?;
                Ok((0..n - 1)
                    .map(|i| {
                        let mut ei = vec![0.0; n];
                        ei[i] = 1.0;
                        let wi = base.iso.apply_vector(&self.iso.inverse_apply_vector(&ei));
                        -(wi[n - 1] - dot(&g, &wi[..n - 1])) / dh
                    })
                    .collect())
            }
        }
    }

    /// Chart coordinates `(zeta, y_n)` of a world point.
    pub fn local(&self, p: &[f64]) -> Vec<f64> {
        self.iso.apply(p)
    }

    /// `y_n - Phi(zeta)` for the world point `p`.
    pub fn graph_offset(&self, p: &[f64]) -> Result<f64> {
        let y = self.local(p);
        let n = self.n();
        Ok(y[n - 1] - self.phi(&y[..n - 1])?)
    }

    /// `Phi(0) = 0` and `grad Phi(0) = 0` within `tol`.
    pub fn validate(&self, tol: f64) -> Result<()> {
        let z = vec![0.0; self.n() - 1];
        let p = self.phi(&z)?;
        let g = self.grad_phi(&z)?;
        if p.abs() > tol || norm(&g) > tol {
            return Err(Error::ChartMismatch { point: self.anchor.clone(), offset: p.abs().max(norm(&g)) });
        }
        Ok(())
    }
}

/// Uniform point in the `m`-ball of radius `radius`.
pub fn uniform_in_disk<R: Rng>(rng: &mut R, m: usize, radius: f64) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
        if dot(&v, &v) <= 1.0 {
            return v.into_iter().map(|x| x * radius).collect();
        }
    }
}

/// Pairs in the chart domain: half independent, half at distances `2^-j`.
pub fn chart_pairs(chart: &GraphChart, count: usize, seed: u64) -> Vec<(Vec<f64>, Vec<f64>)> {
    let m = chart.n() - 1;
    let mut r = rng(seed);
    (0..count)
        .map(|i| {
            let z = uniform_in_disk(&mut r, m, chart.radius);
            if i % 2 == 0 {
                return (z, uniform_in_disk(&mut r, m, chart.radius));
            }
            loop {
                let j: i32 = r.random_range(2..=24);
                let d = uniform_in_disk(&mut r, m, 1.0);
                let l = norm(&d);
                if l < 1e-3 {
                    continue;
                }
                let w: Vec<f64> = z.iter().zip(&d).map(|(a, b)| a + 2f64.powi(-j) * b / l).collect();
                if norm(&w) <= chart.radius {
                    return (z, w);
                }
            }
        })
        .collect()
}

/// Sampled sup of `|grad Phi(zeta) - grad Phi(omega)| / |zeta - omega|^alpha`.
pub fn c2_diagnostic(chart: &GraphChart, pairs: usize, seed: u64) -> Result<f64> {
    let ps = chart_pairs(chart, pairs, seed);
    let ratios: Vec<f64> = ps
        .par_iter()
        .map(|(z, w)| {
            let h = dist(z, w);
            if h == 0.0 {
                return Ok(0.0);
            }
            Ok(dist(&chart.grad_phi(z)?, &chart.grad_phi(w)?) / h.powf(chart.alpha))
        })
        .collect::<Result<_>>()?;
    Ok(ratios.into_iter().fold(0.0, f64::max))
}

/// `(|Phi(zeta) - Phi(omega)|, C2 |zeta - omega| (min(|zeta|^a, |omega|^a) + |zeta - omega|^a))`.
pub fn chart_product_bound(chart: &GraphChart, zeta: &[f64], omega: &[f64]) -> Result<(f64, f64)> {
    let lhs = (chart.phi(zeta)? - chart.phi(omega)?).abs();
    let a = chart.alpha;
    let h = dist(zeta, omega);
    let rhs = chart.c2 * h * (norm(zeta).powf(a).min(norm(omega).powf(a)) + h.powf(a));
    Ok((lhs, rhs))
}

/// How points `xi` around `eta` are drawn for the normal-component bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NormalSampler {
    /// Chords `2^-j`, `j = 1..=levels`, along frame and random tangent directions.
    pub levels: u32,
    pub directions: usize,
    /// Extra uniform points on the whole sphere.
    pub far: usize,
    pub seed: u64,
}

impl Default for NormalSampler {
    fn default() -> Self {
        Self { levels: 16, directions: 6, far: 200, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalBound {
    /// `(1 + alpha) beta`
    pub exponent: f64,
    /// Sup of `|F_n(xi) - F_n(eta)| / |xi - eta|^exponent` over the sample.
    pub m_empirical: f64,
    /// `max(C1^{1 + alpha} C2, 2 M~ / delta^exponent)`
    pub m_theory: f64,
    pub m_tilde: f64,
    pub violations: usize,
    /// Log-log slope of `max |F_n(xi) - F_n(eta)|` over dyadic chords.
    pub dyadic_exponent: Option<f64>,
    pub samples: usize,
}

/// Checks `|F_n(xi) - F_n(eta)| <= M |xi - eta|^{(1 + alpha) beta}` where `F_n` is
/// the normal coordinate of `F` in the chart at `q = F(eta)`.
#[allow(clippy::too_many_arguments)]
pub fn normal_component_bound(
    chart: &GraphChart,
    data: &BoundaryData,
    eta: &SpherePoint,
    beta: f64,
    c1: f64,
    delta: f64,
    sampler: &NormalSampler,
) -> Result<NormalBound> {
    let n = chart.n();
    if data.arity() != n || data.n() != n {
        return Err(Error::DimensionMismatch { expected: n, got: data.arity() });
    }
    let q = data.eval_at(eta);
    let off = dist(&q, chart.anchor());
    if off > 1e-8 * (1.0 + norm(&q)) {
        return Err(Error::ChartMismatch { point: q, offset: off });
    }
    let e = (1.0 + chart.alpha) * beta;
    let mut r = rng(sampler.seed);
    let mut dirs = crate::regularity::frame_directions(eta);
    dirs.extend((0..sampler.directions).map(|_| tangent_direction(&mut r, eta)));
    let mut xis: Vec<(f64, SpherePoint)> = Vec::new();
    for j in 1..=sampler.levels {
        let h = 2f64.powi(-(j as i32));
        for d in &dirs {
            xis.push((h, eta.at_chord(h, d)));
        }
    }
    let mut far: Vec<SpherePoint> = (0..sampler.far).map(|_| uniform_sphere(&mut r, n)).collect();
    far.extend(spread_points(n, 64));
    far.push(eta.antipode());
    let near_count = xis.len();
    xis.extend(far.into_iter().map(|p| (p.chord(eta), p)));
    let rows: Vec<(f64, f64, bool)> = xis
        .par_iter()
        .map(|(h, xi)| {
            let y = chart.local(&data.eval_at(xi));
            let inside = *h < delta && norm(&y[..n - 1]) <= chart.radius;
            if inside {
                let g = y[n - 1] - chart.phi(&y[..n - 1])?;
                if g.abs() > 1e-7 * (1.0 + norm(&y)) {
                    return Err(Error::ChartMismatch { point: data.eval_at(xi), offset: g.abs() });
                }
            }
            Ok((*h, y[n - 1].abs(), inside))
        })
        .collect::<Result<_>>()?;
    let m_tilde = SAFETY_FACTOR * xis.iter().map(|(_, xi)| norm(&chart.local(&data.eval_at(xi)))).fold(0.0, f64::max);
    let m_theory = (c1.powf(1.0 + chart.alpha) * chart.c2).max(2.0 * m_tilde / delta.powf(e));
    let mut m_empirical: f64 = 0.0;
    let mut violations = 0;
    for &(h, v, _) in &rows {
        if h == 0.0 {
            continue;
        }
        let ratio = v / h.powf(e);
        m_empirical = m_empirical.max(ratio);
        if v > m_theory * h.powf(e) * (1.0 + 1e-9) + 1e-15 {
            violations += 1;
        }
    }
    let per_level: Vec<(f64, f64)> = (1..=sampler.levels)
        .map(|j| {
            let h = 2f64.powi(-(j as i32));
            let worst = rows[..near_count].iter().filter(|r| r.0 == h).map(|r| r.1).fold(0.0, f64::max);
            (h, worst)
        })
        .filter(|(h, _)| *h <= 0.25)
        .collect();
    Ok(NormalBound {
        exponent: e,
        m_empirical,
        m_theory,
        m_tilde,
        violations,
        dyadic_exponent: log_log_slope(&per_level),
        samples: rows.len(),
    })
}

/// A bound `C (1 - r)^e` for `|grad f_n|` becomes `K C (1 - r)^e` for the other components.
pub fn qc_component_propagation(bound: (f64, f64), k: f64) -> Result<(f64, f64)> {
    if !(k >= 1.0) {
        return Err(Error::InvalidParameter(format!("distortion must be at least 1, got {k}")));
    }
    Ok((k * bound.0, bound.1))
}

/// Componentwise bounds for `f = L^{-1} ∘ f~`: each is `sqrt(n)` times the largest bound of `f~`.
pub fn isometry_gradient_propagation(tilde_bounds: &[f64], iso: &Isometry) -> Result<Vec<f64>> {
    let n = iso.n();
    if tilde_bounds.len() != n || n < 2 {
        return Err(Error::DimensionMismatch { expected: n, got: tilde_bounds.len() });
    }
    let m = tilde_bounds.iter().copied().fold(0.0, f64::max);
    Ok(vec![(n as f64).sqrt() * m; n])
}

/// `y -> scale R y + translation`, a reference map from the ball onto (a region containing) the domain.
#[derive(Debug, Clone, PartialEq)]
pub struct Similarity {
    pub scale: f64,
    pub rotation: DMatrix<f64>,
    pub translation: Vec<f64>,
}

impl Similarity {
    pub fn scaling(n: usize, scale: f64) -> Self {
        Self { scale, rotation: DMatrix::identity(n, n), translation: vec![0.0; n] }
    }

    pub fn apply(&self, y: &[f64]) -> Vec<f64> {
        let n = y.len();
        (0..n).map(|i| self.translation[i] + self.scale * (0..n).map(|k| self.rotation[(i, k)] * y[k]).sum::<f64>()).collect()
    }

    pub fn inverse_apply(&self, p: &[f64]) -> Vec<f64> {
        let n = p.len();
        let d: Vec<f64> = p.iter().zip(&self.translation).map(|(a, b)| a - b).collect();
        (0..n).map(|i| (0..n).map(|k| self.rotation[(k, i)] * d[k]).sum::<f64>() / self.scale).collect()
    }
}

/// The target domain: an atlas of boundary charts plus the covering parameters.
#[derive(Debug, Clone)]
pub struct DomainSpec {
    pub n: usize,
    pub charts: Vec<GraphChart>,
    /// Sphere-side radius: `|xi1 - xi2| < delta` keeps `F(xi1), F(xi2)` within `rho / 2`.
    pub delta: f64,
    /// Target-side radius, used as the domain radius of charts built at `F(eta)`.
    pub rho: f64,
    pub lipschitz_g: Option<f64>,
    pub reference: Option<Similarity>,
    surfaces: Vec<Option<Surface>>,
}

impl DomainSpec {
    pub fn new(n: usize, delta: f64, rho: f64, lipschitz_g: Option<f64>) -> Self {
        Self { n, charts: Vec::new(), delta, rho, lipschitz_g, reference: None, surfaces: Vec::new() }
    }

    pub fn with_reference(mut self, reference: Similarity) -> Self {
        self.lipschitz_g.get_or_insert(reference.scale);
        self.reference = Some(reference);
        self
    }

    /// Adds a chart; `surface` lets new charts be built directly on the same surface.
    pub fn push(&mut self, chart: GraphChart, surface: Option<Surface>) {
        self.charts.push(chart);
        self.surfaces.push(surface);
    }

    /// Largest `C2` over the atlas.
    pub fn c2(&self) -> f64 {
        self.charts.iter().map(|c| c.c2).fold(0.0, f64::max)
    }

    pub fn alpha(&self) -> f64 {
        self.charts.iter().map(|c| c.alpha).fold(1.0, f64::min)
    }

    /// The most central chart whose graph passes through `p`.
    pub fn covering_chart(&self, p: &[f64]) -> Result<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (i, c) in self.charts.iter().enumerate() {
            let y = c.local(p);
            let z = &y[..self.n - 1];
            let rel = norm(z) / c.radius;
            if rel > 1.0 {
                continue;
            }
            match c.phi(z) {
                Ok(v) if (y[self.n - 1] - v).abs() <= 1e-8 * (1.0 + norm(p)) => {
                    if best.is_none_or(|b| rel < b.1) {
                        best = Some((i, rel));
                    }
                }
                _ => {}
            }
        }
        best.map(|b| b.0).ok_or_else(|| Error::Uncovered(p.to_vec()))
    }

    /// A chart anchored at the boundary point `q`, with the atlas's `alpha`, `C2` and radius `rho`.
    pub fn chart_at(&self, q: &[f64], eta: Option<&SpherePoint>) -> Result<GraphChart> {
        let i = self.covering_chart(q)?;
        let base = &self.charts[i];
        match &self.surfaces[i] {
            Some(s) => GraphChart::on_surface(s, q, eta, base.alpha, self.c2(), self.rho),
            None => GraphChart::reanchored(base, q, base.alpha, self.c2(), self.rho),
        }
    }

    /// The same domain moved by the rigid motion `l`.
    pub fn transformed(&self, l: &Isometry) -> Result<Self> {
        let linv = l.inverse();
        let mut out = Self::new(self.n, self.delta, self.rho, self.lipschitz_g);
        out.reference = self.reference.as_ref().map(|g| Similarity {
            scale: g.scale,
            rotation: l.rotation() * &g.rotation,
            translation: l.apply(&g.translation),
        });
        for (c, s) in self.charts.iter().zip(&self.surfaces) {
            let surface = s.as_ref().map(|s| s.transformed(l)).transpose()?;
            let chart = transform_chart(c, l, &linv)?;
            out.push(chart, surface);
        }
        Ok(out)
    }

    /// `|F(xi1) - F(xi2)| < rho / 2` whenever `|xi1 - xi2| < delta`, checked on sampled pairs.
    pub fn validate_delta(&self, data: &BoundaryData, pairs: usize, seed: u64) -> Result<DeltaCheck> {
        let mut r = rng(seed);
        let ps: Vec<(SpherePoint, SpherePoint)> = (0..pairs)
            .map(|i| {
                let a = uniform_sphere(&mut r, self.n);
                let d = tangent_direction(&mut r, &a);
                let h = if i % 2 == 0 { self.delta * 0.999 } else { self.delta * r.random_range(0.0..1.0) };
                (a.at_chord(h, &d), a)
            })
            .collect();
        let worst = ps.par_iter().map(|(a, b)| dist(&data.eval_at(a), &data.eval_at(b))).reduce(|| 0.0, f64::max);
        Ok(DeltaCheck { max_image_distance: worst, limit: 0.5 * self.rho, ok: worst < 0.5 * self.rho })
    }

    pub fn from_json(text: &str, trace: Option<&BoundaryData>) -> Result<Self> {
        let file: AtlasFile = serde_json::from_str(text)?;
        file.into_domain(trace)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut charts = Vec::new();
        for (c, s) in self.charts.iter().zip(&self.surfaces) {
            let phi = match (&c.phi, s) {
                (PhiKind::Quadric { matrix, center }, _) => {
                    if (matrix - DMatrix::<f64>::identity(self.n, self.n)).norm() < 1e-15 && norm(center) == 0.0 {
                        json!("sphere")
                    } else {
                        json!({"quadric": {"center": center, "matrix": rows_of(matrix)}})
                    }
                }
                (PhiKind::Trace(_), _) => json!("image"),
                (PhiKind::Paraboloid { a }, _) => json!({"paraboloid": {"a": a}}),
                (PhiKind::Polynomial { p, .. }, _) => json!({"polynomial": p.terms()}),
                (PhiKind::Reanchored(_), _) => return Err(Error::Config("re-anchored charts have no file form".into())),
            };
            let mut entry = json!({
                "anchor": c.anchor, "normal": c.normal(), "alpha": c.alpha, "C2": c.c2, "radius": c.radius, "phi": phi,
            });
            if let PhiKind::Trace(f) = &c.phi {
                entry["eta"] = json!(f.eta.coords());
            }
            if matches!(c.phi, PhiKind::Paraboloid { .. } | PhiKind::Polynomial { .. }) {
                entry["rotation"] = json!(rows_of(c.iso.rotation()));
            }
            charts.push(entry);
        }
        let mut v = json!({
            "n": self.n, "charts": charts, "delta": self.delta, "rho": self.rho, "lipschitz_G": self.lipschitz_g,
        });
        if let Some(g) = &self.reference {
            v["reference"] = json!({"scale": g.scale, "rotation": rows_of(&g.rotation), "translation": g.translation});
        }
        Ok(serde_json::to_string_pretty(&v)?)
    }
}

fn transform_chart(c: &GraphChart, l: &Isometry, linv: &Isometry) -> Result<GraphChart> {
    let phi = match &c.phi {
        PhiKind::Quadric { matrix, center } => {
            PhiKind::Quadric { matrix: l.rotation() * matrix * l.rotation().transpose(), center: l.apply(center) }
        }
        PhiKind::Trace(f) => {
            let l2 = l.clone();
            let d = f.data.map_values(f.data.arity(), format!("L·{}", f.data.label()), move |v, o| o.copy_from_slice(&l2.apply(v)))?;
            PhiKind::Trace(Arc::new(TraceFrame::new(d, f.eta.clone())))
        }
        PhiKind::Reanchored(b) => PhiKind::Reanchored(Arc::new(transform_chart(b, l, linv)?)),
        other => other.clone(),
    };
    Ok(GraphChart { anchor: l.apply(&c.anchor), iso: linv.then(&c.iso), phi, alpha: c.alpha, c2: c.c2, radius: c.radius })
}

fn rows_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

fn matrix_from_rows(rows: &[Vec<f64>], n: usize) -> Result<DMatrix<f64>> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(Error::Config(format!("expected a {n}x{n} matrix")));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeltaCheck {
    pub max_image_distance: f64,
    pub limit: f64,
    pub ok: bool,
}

#[derive(Debug, Deserialize)]
struct AtlasFile {
    n: usize,
    charts: Vec<ChartEntry>,
    delta: f64,
    rho: f64,
    #[serde(rename = "lipschitz_G", default)]
    lipschitz_g: Option<f64>,
    #[serde(default)]
    reference: Option<ReferenceEntry>,
}

#[derive(Debug, Deserialize)]
struct ReferenceEntry {
    scale: f64,
    #[serde(default)]
    rotation: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    translation: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
struct ChartEntry {
    anchor: Vec<f64>,
    normal: Vec<f64>,
    alpha: f64,
    #[serde(rename = "C2")]
    c2: f64,
    radius: f64,
    phi: Value,
    #[serde(default)]
    eta: Option<Vec<f64>>,
    #[serde(default)]
    rotation: Option<Vec<Vec<f64>>>,
}

impl AtlasFile {
    fn into_domain(self, trace: Option<&BoundaryData>) -> Result<DomainSpec> {
        crate::sphere::check_dimension(self.n)?;
        let n = self.n;
        let mut d = DomainSpec::new(n, self.delta, self.rho, self.lipschitz_g);
        if let Some(r) = self.reference {
            let rotation = match r.rotation {
                Some(rows) => matrix_from_rows(&rows, n)?,
                None => DMatrix::identity(n, n),
            };
            d = d.with_reference(Similarity { scale: r.scale, rotation, translation: r.translation.unwrap_or(vec![0.0; n]) });
        }
        for c in self.charts {
            if c.anchor.len() != n || c.normal.len() != n {
                return Err(Error::Config("chart anchor/normal has the wrong dimension".into()));
            }
            let frame_iso = || -> Result<Isometry> {
                match &c.rotation {
                    Some(rows) => {
                        let rot = matrix_from_rows(rows, n)?;
                        let iso = Isometry::new(rot, vec![0.0; n])?;
                        let b = iso.apply_vector(&c.anchor).into_iter().map(|v| -v).collect();
                        Isometry::new(iso.rotation().clone(), b)
                    }
                    None => normalize_at(&c.anchor, &c.normal),
                }
            };
            let (chart, surface) = match &c.phi {
                Value::String(s) if s == "sphere" => {
                    let s = Surface::sphere(n);
                    (GraphChart::on_surface(&s, &c.anchor, None, c.alpha, c.c2, c.radius)?, Some(s))
                }
                Value::String(s) if s == "image" => {
                    let data = trace.ok_or_else(|| Error::Config("atlas uses the image surface but no map trace is available".into()))?;
                    let s = Surface::Trace(data.clone());
                    let eta = c.eta.clone().map(SpherePoint::new).transpose()?;
                    (GraphChart::on_surface(&s, &c.anchor, eta.as_ref(), c.alpha, c.c2, c.radius)?, Some(s))
                }
                Value::Object(o) if o.contains_key("ellipsoid") => {
                    let e = &o["ellipsoid"];
                    let axes: Vec<f64> = serde_json::from_value(e["axes"].clone())?;
                    let center: Vec<f64> = serde_json::from_value(e.get("center").cloned().unwrap_or(json!(vec![0.0; n])))?;
                    let mut ell = Ellipsoid::axes(&axes);
                    ell.center = center;
                    let s = Surface::ellipsoid(&ell)?;
                    (GraphChart::on_surface(&s, &c.anchor, None, c.alpha, c.c2, c.radius)?, Some(s))
                }
                Value::Object(o) if o.contains_key("quadric") => {
                    let e = &o["quadric"];
                    let rows: Vec<Vec<f64>> = serde_json::from_value(e["matrix"].clone())?;
                    let center: Vec<f64> = serde_json::from_value(e["center"].clone())?;
                    let s = Surface::Quadric { matrix: matrix_from_rows(&rows, n)?, center };
                    (GraphChart::on_surface(&s, &c.anchor, None, c.alpha, c.c2, c.radius)?, Some(s))
                }
                Value::Object(o) if o.contains_key("paraboloid") => {
                    let a = o["paraboloid"]["a"].as_f64().ok_or_else(|| Error::Config("paraboloid needs a".into()))?;
                    let mut ch = GraphChart::paraboloid(frame_iso()?, a, c.radius)?;
                    ch.alpha = c.alpha;
                    ch.c2 = c.c2;
                    (ch, None)
                }
                Value::Object(o) if o.contains_key("polynomial") => {
                    let terms: Vec<Term> = serde_json::from_value(o["polynomial"].clone())?;
                    let p = Polynomial::from_terms(n - 1, &terms);
                    (GraphChart::polynomial(frame_iso()?, p, c.alpha, c.c2, c.radius)?, None)
                }
                other => return Err(Error::Config(format!("unknown chart type {other}"))),
            };
            chart.validate(1e-8).map_err(|e| Error::Config(format!("chart at {:?} is not normalized: {e}", c.anchor)))?;
            let declared = norm(&c.normal);
            if !(declared > 0.0) || chart.normal().iter().zip(&c.normal).any(|(a, b)| (a - b / declared).abs() > 1e-6) {
                return Err(Error::Config(format!("chart at {:?}: declared normal disagrees with the surface", c.anchor)));
            }
            d.push(chart, surface);
        }
        if d.charts.is_empty() {
            return Err(Error::Config("atlas has no charts".into()));
        }
        Ok(d)
    }
}

/// The point of the sphere whose image under `data` is nearest to `q`.
pub fn locate_on_trace(data: &BoundaryData, q: &[f64]) -> Result<SpherePoint> {
    let n = data.n();
    let coarse = spread_points(n, if n == 2 { 720 } else { 4000 });
    let start = coarse
        .iter()
        .min_by(|a, b| dist(&data.eval_at(a), q).partial_cmp(&dist(&data.eval_at(b), q)).unwrap())
        .ok_or(Error::EmptySample)?
        .clone();
    let mut eta = start;
    for _ in 0..NEWTON_ITERS {
        let frame = TraceFrame::new(data.clone(), eta.clone());
        let v0 = vec![0.0; n - 1];
        let res: Vec<f64> = frame.point(&v0).iter().zip(q).map(|(a, b)| a - b).collect();
        if norm(&res) < 1e-14 * (1.0 + norm(q)) {
            break;
        }
        let d = frame.derivative(&v0, |p| p.to_vec());
        let step = d.clone().svd(true, true).solve(&DVector::from_column_slice(&res), 1e-14).map_err(|e| Error::InvalidParameter(e.into()))?;
        let v: Vec<f64> = step.iter().map(|s| -s).collect();
        eta = SpherePoint::new(exp_map(eta.coords(), &frame.basis, &v))?;
        if norm(&v) < 1e-15 {
            break;
        }
    }
    let off = dist(&data.eval_at(&eta), q);
    if off > 1e-9 * (1.0 + norm(q)) {
        return Err(Error::ChartMismatch { point: q.to_vec(), offset: off });
    }
    Ok(eta)
}

/// Charts of an ellipsoid (or sphere) image at `F(eta)` for the given spread of `eta`s;
/// `C2` is the sampled diagnostic inflated by the safety factor.
pub fn ellipsoid_atlas(e: &Ellipsoid, anchors: &[Vec<f64>], alpha: f64, radius: f64, delta: f64, rho: f64) -> Result<DomainSpec> {
    let s = Surface::ellipsoid(e)?;
    let mut charts = Vec::new();
    for q in anchors {
        charts.push(GraphChart::on_surface(&s, q, None, alpha, 0.0, radius)?);
    }
    let c2 = charts.iter().enumerate().map(|(i, c)| c2_diagnostic(c, 4000, i as u64)).collect::<Result<Vec<_>>>()?;
    let c2 = SAFETY_FACTOR * c2.into_iter().fold(0.0, f64::max);
    let mut d = DomainSpec::new(e.center.len(), delta, rho, None);
    for c in charts {
        d.push(c.with_c2(c2), Some(s.clone()));
    }
    Ok(d)
}

/// Charts of the image surface `F(S)` at `F(eta)` for each `eta`.
pub fn trace_atlas(data: &BoundaryData, etas: &[SpherePoint], alpha: f64, radius: f64, delta: f64, rho: f64) -> Result<DomainSpec> {
    let s = Surface::Trace(data.clone());
    let mut charts = Vec::new();
    for eta in etas {
        charts.push(GraphChart::on_surface(&s, &data.eval_at(eta), Some(eta), alpha, 0.0, radius)?);
    }
    let c2 = charts.iter().enumerate().map(|(i, c)| c2_diagnostic(c, 600, i as u64)).collect::<Result<Vec<_>>>()?;
    let c2 = SAFETY_FACTOR * c2.into_iter().fold(0.0, f64::max);
    let mut d = DomainSpec::new(data.n(), delta, rho, None);
    for c in charts {
        d.push(c.with_c2(c2), Some(s.clone()));
    }
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalize_examples() {
        let iso = normalize_at(&[0.0, 0.0, 1.0], &[0.0, 0.0, 1.0]).unwrap();
        assert!((iso.rotation() - DMatrix::<f64>::identity(3, 3)).norm() < 1e-15);
        assert_eq!(iso.translation(), &[0.0, 0.0, -1.0]);
        let id = normalize_at(&[0.0, 0.0], &[0.0, 1.0]).unwrap();
        assert_eq!(id, Isometry::identity(2));
        assert!(normalize_at(&[1.0, 0.0], &[0.0, 0.0]).is_err());
        let q = [0.3, -0.2, 0.5];
        let iso = normalize_at(&q, &[1.0, 2.0, -0.5]).unwrap();
        assert!(norm(&iso.apply(&q)) < 1e-15);
        let nu = SpherePoint::new(vec![1.0, 2.0, -0.5]).unwrap();
        let img = iso.apply_vector(nu.coords());
        assert!((img[2] - 1.0).abs() < 1e-12 && img[0].abs() < 1e-12);
        assert!(iso.orthogonality_defect() < 1e-12);
    }

    #[test]
    fn sphere_chart_at_e1() {
        let s = Surface::sphere(3);
        let c = GraphChart::on_surface(&s, &[1.0, 0.0, 0.0], None, 1.0, 2.0, 0.5).unwrap();
        c.validate(1e-12).unwrap();
        for z in [[0.1f64, 0.2], [-0.3, 0.25], [0.0, 0.45]] {
            let expect = (1.0 - z[0] * z[0] - z[1] * z[1]).sqrt() - 1.0;
            assert!((c.phi(&z).unwrap() - expect).abs() < 1e-14);
            let g = c.grad_phi(&z).unwrap();
            let r = (1.0 - z[0] * z[0] - z[1] * z[1]).sqrt();
            assert!((g[0] + z[0] / r).abs() < 1e-12 && (g[1] + z[1] / r).abs() < 1e-12);
        }
        assert!(matches!(c.phi(&[0.6, 0.0]), Err(Error::OutsideChart { .. })));
    }

    #[test]
    fn product_bound_examples() {
        let c = GraphChart::paraboloid(Isometry::identity(3), 1.0, 1.0).unwrap();
        let (l, r) = chart_product_bound(&c, &[0.3, 0.4], &[0.0, 0.0]).unwrap();
        assert!((l - 0.25).abs() < 1e-15 && (r - 0.5).abs() < 1e-15);
        assert_eq!(chart_product_bound(&c, &[0.3, 0.4], &[0.3, 0.4]).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn trace_and_reanchored_charts_agree_with_quadric() {
        let e = Ellipsoid::axes(&[1.3, 0.7]);
        let s = Surface::ellipsoid(&e).unwrap();
        let eta = SpherePoint::new(vec![0.6, 0.8]).unwrap();
        let data = BoundaryData::new(2, 2, "ellipse", |x, o| {
            o[0] = 1.3 * x[0];
            o[1] = 0.7 * x[1];
        })
        .unwrap();
        let q = data.eval_at(&eta);
        let quad = GraphChart::on_surface(&s, &q, None, 1.0, 1.0, 0.4).unwrap();
        let tr = GraphChart::on_surface(&Surface::Trace(data.clone()), &q, Some(&eta), 1.0, 1.0, 0.4).unwrap();
        let base = GraphChart::on_surface(&s, &[1.3, 0.0], None, 1.0, 1.0, 0.69).unwrap();
        let re = GraphChart::reanchored(&base, &q, 1.0, 1.0, 0.4).unwrap();
        tr.validate(1e-9).unwrap();
        re.validate(1e-9).unwrap();
        for z in [-0.3, -0.1, 0.05, 0.2, 0.35] {
            let a = quad.phi(&[z]).unwrap();
            assert!((a - tr.phi(&[z]).unwrap()).abs() < 1e-10, "trace at {z}");
            assert!((a - re.phi(&[z]).unwrap()).abs() < 1e-10, "reanchored at {z}");
            let g = quad.grad_phi(&[z]).unwrap()[0];
            assert!((g - tr.grad_phi(&[z]).unwrap()[0]).abs() < 1e-7);
            assert!((g - re.grad_phi(&[z]).unwrap()[0]).abs() < 1e-10);
        }
        let found = locate_on_trace(&data, &q).unwrap();
        assert!(found.chord(&eta) < 1e-10);
    }

    #[test]
    fn identity_normal_component() {
        let eta = SpherePoint::axis(3, 2);
        let s = Surface::sphere(3);
        let c = GraphChart::on_surface(&s, eta.coords(), None, 1.0, 1.6, 0.6).unwrap();
        let data = BoundaryData::identity(3).unwrap();
        let nb = normal_component_bound(&c, &data, &eta, 1.0, 1.0, 0.5, &NormalSampler::default()).unwrap();
        assert!((nb.m_empirical - 0.5).abs() < 1e-9, "{}", nb.m_empirical);
        assert_eq!(nb.exponent, 2.0);
        assert_eq!(nb.violations, 0);
        assert!((nb.dyadic_exponent.unwrap() - 2.0).abs() < 1e-3);
        let k = BoundaryData::constant(3, vec![0.0, 0.0, 1.0]).unwrap();
        let nb = normal_component_bound(&c, &k, &eta, 1.0, 0.0, 0.5, &NormalSampler::default()).unwrap();
        assert_eq!(nb.m_empirical, 0.0);
    }

    #[test]
    fn propagation_helpers() {
        assert_eq!(qc_component_propagation((1.0, -0.5), 1.0).unwrap(), (1.0, -0.5));
        assert_eq!(qc_component_propagation((2.0, -0.25), 3.0).unwrap(), (6.0, -0.25));
        assert!(qc_component_propagation((1.0, 0.0), 0.5).is_err());
        let iso = Isometry::new(crate::qc::rotation2(std::f64::consts::FRAC_PI_2), vec![0.0, 0.0]).unwrap();
        let out = isometry_gradient_propagation(&[1.0, 1.0], &iso).unwrap();
        assert!(out.iter().all(|v| (v - 2f64.sqrt()).abs() < 1e-15));
    }

    #[test]
    fn atlas_round_trip() {
        let e = Ellipsoid::axes(&[1.3, 0.7]);
        let anchors: Vec<Vec<f64>> = spread_points(2, 8).iter().map(|p| vec![1.3 * p.coords()[0], 0.7 * p.coords()[1]]).collect();
        let d = ellipsoid_atlas(&e, &anchors, 1.0, 0.5, 0.15, 0.5).unwrap().with_reference(Similarity::scaling(2, 1.3));
        let text = d.to_json().unwrap();
        let back = DomainSpec::from_json(&text, None).unwrap();
        assert_eq!(back.charts.len(), 8);
        assert_eq!(back.lipschitz_g, Some(1.3));
        let p = [1.3 * 0.8, 0.7 * 0.6];
        let i = back.covering_chart(&p).unwrap();
        assert!(back.charts[i].graph_offset(&p).unwrap().abs() < 1e-12);
        assert!(matches!(back.covering_chart(&[0.0, 0.0]), Err(Error::Uncovered(_))));
        let sphere = r#"{"n":3,"charts":[{"anchor":[0,0,1],"normal":[0,0,1],"alpha":1,"C2":1.6,"radius":0.5,"phi":"sphere"}],"delta":0.2,"rho":0.5,"lipschitz_G":1}"#;
        let d = DomainSpec::from_json(sphere, None).unwrap();
        assert_eq!(d.charts[0].kind_name(), "quadric");
        let bad = r#"{"n":3,"charts":[{"anchor":[0,0,1],"normal":[1,0,0],"alpha":1,"C2":1.6,"radius":0.5,"phi":"sphere"}],"delta":0.2,"rho":0.5}"#;
        assert!(DomainSpec::from_json(bad, None).is_err());
    }

    #[test]
    fn transformed_domain_covers_moved_points() {
        let d = ellipsoid_atlas(&Ellipsoid::ball(3), &[vec![0.0, 0.0, 1.0], vec![1.0, 0.0, 0.0]], 1.0, 0.5, 0.2, 0.5).unwrap();
        let l = Isometry::new(crate::qc::rotation3(0.2, 0.4, -0.3), vec![0.5, -1.0, 2.0]).unwrap();
        let t = d.transformed(&l).unwrap();
        let p = SpherePoint::new(vec![0.1, 0.05, 1.0]).unwrap();
        let i = t.covering_chart(&l.apply(p.coords())).unwrap();
        assert!(t.charts[i].graph_offset(&l.apply(p.coords())).unwrap().abs() < 1e-12);
        let c = t.chart_at(&l.apply(p.coords()), None).unwrap();
        c.validate(1e-10).unwrap();
    }
}
