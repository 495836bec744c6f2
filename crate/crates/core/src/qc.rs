//! Maps of the unit ball: Jacobian singular values, distortion, Mori-type
//! Hölder checks, and a gallery of harmonic quasiconformal examples.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extension::{BoundaryData, FieldConfig, HarmonicField, HolderMeta};
use crate::sampling::{rng, uniform_ball, uniform_sphere};
use crate::sphere::{check_dimension, dist, norm, BallPoint, SpherePoint};

pub type MapFn = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;
pub type JacobianFn = Arc<dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync>;

/// The image of the closed ball is `{center + frame y : |y| <= 1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ellipsoid {
    pub center: Vec<f64>,
    pub frame: DMatrix<f64>,
}

impl Ellipsoid {
    pub fn ball(n: usize) -> Self {
        Self { center: vec![0.0; n], frame: DMatrix::identity(n, n) }
    }

    pub fn axes(axes: &[f64]) -> Self {
        Self { center: vec![0.0; axes.len()], frame: DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(axes)) }
    }
}

/// A map `f: B^n -> R^n`.
#[derive(Clone)]
pub struct BallMap {
    name: String,
    n: usize,
    eval: MapFn,
    jacobian: Option<JacobianFn>,
    trace: Option<BoundaryData>,
    image: Option<Ellipsoid>,
}

impl fmt::Debug for BallMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BallMap")
            .field("name", &self.name)
            .field("n", &self.n)
            .field("analytic_jacobian", &self.jacobian.is_some())
            .field("trace", &self.trace.as_ref().map(|t| t.label().to_string()))
            .field("image", &self.image)
            .finish()
    }
}

impl BallMap {
    pub fn new<F>(name: impl Into<String>, n: usize, f: F) -> Result<Self>
    where
        F: Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    {
        check_dimension(n)?;
        Ok(Self { name: name.into(), n, eval: Arc::new(f), jacobian: None, trace: None, image: None })
    }

    pub fn with_jacobian<J>(mut self, j: J) -> Self
    where
        J: Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static,
    {
        self.jacobian = Some(Arc::new(j));
        self
    }

    pub fn with_trace(mut self, trace: BoundaryData) -> Self {
        self.trace = Some(trace);
        self
    }

    pub fn with_image(mut self, image: Ellipsoid) -> Self {
        self.image = Some(image);
        self
    }

    /// `x -> A x + b`, with its Jacobian, trace and image.
    pub fn affine(name: impl Into<String>, a: DMatrix<f64>, b: Vec<f64>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n || b.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: a.ncols().max(b.len()) });
        }
        let (a1, b1) = (a.clone(), b.clone());
        let apply = move |x: &[f64], o: &mut [f64]| {
            for i in 0..n {
                o[i] = b1[i] + (0..n).map(|k| a1[(i, k)] * x[k]).sum::<f64>();
            }
        };
        let trace_apply = apply.clone();
        let l = a.clone().svd(false, false).singular_values.max();
        let trace = BoundaryData::new(n, n, "affine trace", trace_apply)?.with_holder(HolderMeta { exponent: 1.0, constant: l, anchor: None });
        let a2 = a.clone();
        Ok(Self::new(name, n, apply)?
            .with_jacobian(move |_| a2.clone())
            .with_trace(trace)
            .with_image(Ellipsoid { center: b, frame: a }))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn trace(&self) -> Option<&BoundaryData> {
        self.trace.as_ref()
    }

    pub fn image(&self) -> Option<&Ellipsoid> {
        self.image.as_ref()
    }

    pub fn has_analytic_jacobian(&self) -> bool {
        self.jacobian.is_some()
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        (self.eval)(x, &mut out);
        out
    }

    /// Values on the closed ball: the trace on the sphere when one is attached.
    pub fn eval_closed(&self, x: &[f64]) -> Vec<f64> {
        match &self.trace {
            Some(t) if norm(x) >= 1.0 - 1e-15 => t.eval(x),
            _ => self.eval(x),
        }
    }

    /// Central differences with step `max(1e-6, 1e-4 (1 - |x|))`.
    pub fn fd_jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        let n = self.n;
        let h = (1e-4 * (1.0 - norm(x))).max(1e-6);
        let mut jac = DMatrix::zeros(n, n);
        let mut xp = x.to_vec();
        let mut fp = vec![0.0; n];
        let mut fm = vec![0.0; n];
        for k in 0..n {
            xp[k] = x[k] + h;
            (self.eval)(&xp, &mut fp);
            xp[k] = x[k] - h;
            (self.eval)(&xp, &mut fm);
            xp[k] = x[k];
            for i in 0..n {
                jac[(i, k)] = (fp[i] - fm[i]) / (2.0 * h);
            }
        }
        jac
    }

    pub fn jacobian(&self, x: &[f64], source: JacobianSource) -> DMatrix<f64> {
        match (source, &self.jacobian) {
            (JacobianSource::Analytic, Some(j)) | (JacobianSource::Auto, Some(j)) => j(x),
            _ => self.fd_jacobian(x),
        }
    }

    /// `x -> A f(x) + b`.
    pub fn post_affine(&self, name: impl Into<String>, a: &DMatrix<f64>, b: &[f64]) -> Result<Self> {
        let n = self.n;
        if a.nrows() != n || a.ncols() != n || b.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: a.nrows() });
        }
        let inner = self.eval.clone();
        let (a1, b1) = (a.clone(), b.to_vec());
        let mut out = Self::new(name, n, move |x, o| {
            let mut v = vec![0.0; n];
            inner(x, &mut v);
            for i in 0..n {
                o[i] = b1[i] + (0..n).map(|k| a1[(i, k)] * v[k]).sum::<f64>();
            }
        })?;
        if let Some(j) = &self.jacobian {
            let j = j.clone();
            let a2 = a.clone();
            out.jacobian = Some(Arc::new(move |x| &a2 * j(x)));
        }
        if let Some(t) = &self.trace {
            let (a3, b3) = (a.clone(), b.to_vec());
            let mut mapped = t.map_values(n, format!("A·{}", t.label()), move |v, o| {
                for i in 0..n {
                    o[i] = b3[i] + (0..n).map(|k| a3[(i, k)] * v[k]).sum::<f64>();
                }
            })?;
            if let Some(h) = t.holder() {
                let l = a.clone().svd(false, false).singular_values.max();
                mapped = mapped.with_holder(HolderMeta { constant: h.constant * l, anchor: h.anchor.clone(), ..*h });
            }
            out.trace = Some(mapped);
        }
        if let Some(e) = &self.image {
            let center = (0..n).map(|i| b[i] + (0..n).map(|k| a[(i, k)] * e.center[k]).sum::<f64>()).collect();
            out.image = Some(Ellipsoid { center, frame: a * &e.frame });
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JacobianSource {
    /// Analytic when available, finite differences otherwise.
    Auto,
    Analytic,
    FiniteDifference,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistortionSample {
    pub x: Vec<f64>,
    pub sigma_max: f64,
    pub sigma_min: f64,
    pub k: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistortionReport {
    pub samples: Vec<DistortionSample>,
    pub k_global: f64,
    /// Sup of the largest singular value, the operator norm `|grad f|`.
    pub sup_operator_norm: f64,
}

pub fn singular_values(j: &DMatrix<f64>) -> (f64, f64) {
    let s = j.clone().svd(false, false).singular_values;
    (s.max(), s.min())
}

/// `sigma_max / sigma_min` of the Jacobian at each point.
pub fn distortion(map: &BallMap, points: &[BallPoint], source: JacobianSource) -> Result<DistortionReport> {
    if points.is_empty() {
        return Err(Error::EmptySample);
    }
    let samples: Vec<DistortionSample> = points
        .par_iter()
        .map(|x| {
            let j = map.jacobian(x.coords(), source);
            let (smax, smin) = singular_values(&j);
            if !(smin >= 1e-10) {
                return Err(Error::DegenerateJacobian { point: x.coords().to_vec(), sigma_min: smin });
            }
            Ok(DistortionSample { x: x.coords().to_vec(), sigma_max: smax, sigma_min: smin, k: smax / smin })
        })
        .collect::<Result<_>>()?;
    let k_global = samples.iter().map(|s| s.k).fold(1.0, f64::max);
    let sup_operator_norm = samples.iter().map(|s| s.sigma_max).fold(0.0, f64::max);
    Ok(DistortionReport { samples, k_global, sup_operator_norm })
}

/// Points for distortion sampling: the origin, `count` uniform points in the ball of
/// radius `max_radius`, and spread directions at dyadic gaps down to `1 - max_radius`.
pub fn distortion_grid(n: usize, count: usize, max_radius: f64, seed: u64) -> Vec<BallPoint> {
    let mut r = rng(seed);
    let mut out = vec![BallPoint::origin(n)];
    out.extend((0..count).map(|_| uniform_ball(&mut r, n, max_radius)));
    let dirs = crate::sampling::spread_points(n, if n == 2 { 32 } else { 64 });
    let mut gap = 0.5;
    while gap >= 1.0 - max_radius - 1e-15 {
        out.extend(dirs.iter().map(|d| BallPoint::at_gap(d, gap).expect("gap in (0, 1]")));
        gap *= 0.5;
    }
    out
}

/// `beta = K^{1/(1 - n)}`.
pub fn mori_exponent(k: f64, n: usize) -> Result<f64> {
    if !(k >= 1.0) || !k.is_finite() {
        return Err(Error::InvalidParameter(format!("distortion must be at least 1, got {k}")));
    }
    if n < 2 {
        return Err(Error::UnsupportedDimension(n));
    }
    Ok(k.powf(1.0 / (1.0 - n as f64)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MoriSampler {
    pub pairs: usize,
    pub seed: u64,
    /// Half the pairs are drawn at distance `2^-j`, `1 <= j <= near_levels`.
    pub near_levels: u32,
}

impl Default for MoriSampler {
    fn default() -> Self {
        Self { pairs: 100_000, seed: 0, near_levels: 20 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MoriCheck {
    pub beta: f64,
    pub m_empirical: f64,
    pub cap: f64,
    pub violations: usize,
    pub pair_count: usize,
    pub argmax_pair: Option<(Vec<f64>, Vec<f64>)>,
}

fn near_point<R: Rng>(rng: &mut R, x: &BallPoint, levels: u32) -> Vec<f64> {
    let n = x.dim();
    loop {
        let j = rng.random_range(1..=levels.max(1));
        let d = uniform_sphere(rng, n);
        let h = 2f64.powi(-(j as i32));
        let y: Vec<f64> = x.coords().iter().zip(d.coords()).map(|(a, b)| a + h * b).collect();
        if norm(&y) < 1.0 {
            return y;
        }
    }
}

/// Sup of `|g(x) - g(y)| / |x - y|^beta` over sampled pairs for a self-map of the
/// ball fixing the origin; pairs above `cap` (default: the sup itself) are violations.
pub fn mori_check(map: &BallMap, beta: f64, sampler: &MoriSampler, cap: Option<f64>) -> Result<MoriCheck> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::InvalidParameter(format!("Mori exponent must lie in (0, 1], got {beta}")));
    }
    if sampler.pairs == 0 {
        return Err(Error::EmptySample);
    }
    let n = map.n();
    let g0 = map.eval(&vec![0.0; n]);
    if norm(&g0) > 1e-8 {
        return Err(Error::InvalidParameter(format!("map must fix the origin, g(0) = {g0:?}")));
    }
    let mut r = rng(sampler.seed);
    let pairs: Vec<(Vec<f64>, Vec<f64>)> = (0..sampler.pairs)
        .map(|i| {
            let x = uniform_ball(&mut r, n, 1.0 - 1e-9);
            let y = if i % 2 == 0 { uniform_ball(&mut r, n, 1.0 - 1e-9).coords().to_vec() } else { near_point(&mut r, &x, sampler.near_levels) };
            (x.coords().to_vec(), y)
        })
        .collect();
    let ratios: Vec<f64> = pairs
        .par_iter()
        .map(|(x, y)| {
            let (gx, gy) = (map.eval(x), map.eval(y));
            for (p, g) in [(x, &gx), (y, &gy)] {
                let m = norm(g);
                if m > 1.0 + 1e-9 {
                    return Err(Error::NotSelfMap { point: p.clone(), norm: m });
                }
            }
            Ok(dist(&gx, &gy) / dist(x, y).powf(beta))
        })
        .collect::<Result<_>>()?;
    let (imax, m_empirical) = ratios.iter().copied().enumerate().fold((0, 0.0), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc });
    let cap = cap.unwrap_or(m_empirical);
    Ok(MoriCheck {
        beta,
        m_empirical,
        cap,
        violations: ratios.iter().filter(|&&v| v > cap).count(),
        pair_count: ratios.len(),
        argmax_pair: (m_empirical > 0.0).then(|| pairs[imax].clone()),
    })
}

/// `z -> z + c conj(z)`: the linear map `diag(1 + c, 1 - c)`.
pub fn z_plus_c_conj(c: f64) -> Result<BallMap> {
    if !(c.abs() < 1.0) {
        return Err(Error::InvalidParameter(format!("|c| must be below 1, got {c}")));
    }
    let a = DMatrix::from_row_slice(2, 2, &[1.0 + c, 0.0, 0.0, 1.0 - c]);
    BallMap::affine(format!("z+{c}conj(z)"), a, vec![0.0, 0.0])
}

pub fn identity(n: usize) -> Result<BallMap> {
    let mut m = BallMap::affine("identity", DMatrix::identity(n, n), vec![0.0; n])?;
    m.trace = Some(BoundaryData::identity(n)?);
    Ok(m)
}

pub fn linear(name: impl Into<String>, a: DMatrix<f64>) -> Result<BallMap> {
    let n = a.nrows();
    BallMap::affine(name, a, vec![0.0; n])
}

/// `x -> x + eps grad(x1 x2 x3)`; harmonic, with `K <= (1 + 2 eps/sqrt 3) / (1 - 2 eps/sqrt 3)`.
pub fn perturbed_identity(eps: f64) -> Result<BallMap> {
    let f = move |x: &[f64], o: &mut [f64]| {
        o[0] = x[0] + eps * x[1] * x[2];
        o[1] = x[1] + eps * x[0] * x[2];
        o[2] = x[2] + eps * x[0] * x[1];
    };
    let trace = BoundaryData::new(3, 3, format!("trace of x+{eps}grad(x1x2x3)"), f)?;
    Ok(BallMap::new(format!("x+{eps}grad(x1x2x3)"), 3, f)?
        .with_jacobian(move |x| {
            DMatrix::from_row_slice(3, 3, &[1.0, eps * x[2], eps * x[1], eps * x[2], 1.0, eps * x[0], eps * x[1], eps * x[0], 1.0])
        })
        .with_trace(trace))
}

/// Sup over the closed ball of `|I + eps Hess(x1 x2 x3)|`, reached at `(1,1,1)/sqrt 3`.
pub fn perturbed_identity_lipschitz(eps: f64) -> f64 {
    1.0 + 2.0 * eps.abs() / 3f64.sqrt()
}

/// The harmonic extension of the circle map `theta -> theta + a sin(theta)`, `|a| < 1`.
pub fn circle_diffeo_extension(a: f64) -> Result<BallMap> {
    if !(a.abs() < 1.0) {
        return Err(Error::InvalidParameter(format!("|a| must be below 1, got {a}")));
    }
    let trace = BoundaryData::new(2, 2, format!("theta+{a}sin(theta)"), move |x, o| {
        let t = x[1].atan2(x[0]);
        let p = t + a * t.sin();
        o[0] = p.cos();
        o[1] = p.sin();
    })?;
    let field = Arc::new(HarmonicField::with_config(trace.clone(), FieldConfig::default())?);
    let f1 = field.clone();
    let f2 = field;
    Ok(BallMap::new(format!("P[theta+{a}sin(theta)]"), 2, move |x, o| {
        let v = match BallPoint::new(x.to_vec()) {
            Ok(p) => f1.extend(&p).map(|e| e.value).unwrap_or_else(|_| vec![f64::NAN; 2]),
            Err(_) => f1.data().eval(x),
        };
        o.copy_from_slice(&v);
    })?
    .with_jacobian(move |x| match BallPoint::new(x.to_vec()) {
        Ok(p) => f2.gradient(&p, None).map(|g| g.jacobian).unwrap_or_else(|_| DMatrix::from_element(2, 2, f64::NAN)),
        Err(_) => DMatrix::from_element(2, 2, f64::NAN),
    })
    .with_trace(trace)
    .with_image(Ellipsoid::ball(2)))
}

/// Test maps: identity, linear maps, `z + c conj(z)` (n = 2), perturbed identities
/// (n = 3) and the extension of a circle diffeomorphism (n = 2).
pub fn gallery(n: usize) -> Result<Vec<BallMap>> {
    let mut out = vec![identity(n)?];
    match n {
        2 => {
            out.push(linear("diag(2,1)", DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(&[2.0, 1.0])))?);
            for c in [0.1, 0.3, 0.5] {
                out.push(z_plus_c_conj(c)?);
            }
            out.push(circle_diffeo_extension(0.2)?);
        }
        3 => {
            out.push(linear("diag(1.5,1,0.75)", DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(&[1.5, 1.0, 0.75])))?);
            let rot = rotation3(0.3, -0.7, 1.1);
            out.push(linear("rotation", rot)?);
            for eps in [0.05, 0.1] {
                out.push(perturbed_identity(eps)?);
            }
        }
        _ => return Err(Error::UnsupportedDimension(n)),
    }
    Ok(out)
}

pub fn gallery_map(n: usize, name: &str) -> Result<BallMap> {
    if let Some(c) = name.strip_prefix("zcz:") {
        return z_plus_c_conj(c.parse().map_err(|_| Error::Config(format!("bad coefficient in {name}")))?);
    }
    if let Some(e) = name.strip_prefix("perturbed:") {
        return perturbed_identity(e.parse().map_err(|_| Error::Config(format!("bad epsilon in {name}")))?);
    }
    if let Some(a) = name.strip_prefix("circle:") {
        return circle_diffeo_extension(a.parse().map_err(|_| Error::Config(format!("bad amplitude in {name}")))?);
    }
    gallery(n)?
        .into_iter()
        .find(|m| m.name() == name)
        .ok_or_else(|| Error::Config(format!("no gallery map named {name:?} for n = {n}")))
}

/// Rotation `R_z(a) R_y(b) R_x(c)`.
pub fn rotation3(a: f64, b: f64, c: f64) -> DMatrix<f64> {
    let (sa, ca) = a.sin_cos();
    let (sb, cb) = b.sin_cos();
    let (sc, cc) = c.sin_cos();
    let rz = DMatrix::from_row_slice(3, 3, &[ca, -sa, 0.0, sa, ca, 0.0, 0.0, 0.0, 1.0]);
    let ry = DMatrix::from_row_slice(3, 3, &[cb, 0.0, sb, 0.0, 1.0, 0.0, -sb, 0.0, cb]);
    let rx = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 0.0, cc, -sc, 0.0, sc, cc]);
    rz * ry * rx
}

pub fn rotation2(a: f64) -> DMatrix<f64> {
    let (s, c) = a.sin_cos();
    DMatrix::from_row_slice(2, 2, &[c, -s, s, c])
}

/// Largest component-wise 5-point (2n+1-point) Laplacian of `map` over `points`.
pub fn discrete_laplacian_max(map: &BallMap, points: &[BallPoint], h: f64) -> f64 {
    let n = map.n();
    points
        .par_iter()
        .map(|x| {
            let c = map.eval(x.coords());
            let mut lap = vec![-2.0 * n as f64; n];
            for (l, ci) in lap.iter_mut().zip(&c) {
                *l *= ci;
            }
            let mut y = x.coords().to_vec();
            for k in 0..n {
                for s in [h, -h] {
                    y[k] = x.coords()[k] + s;
                    let v = map.eval(&y);
                    for (l, vi) in lap.iter_mut().zip(&v) {
                        *l += vi;
                    }
                }
                y[k] = x.coords()[k];
            }
            lap.iter().map(|l| (l / (h * h)).abs()).fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max)
}

/// Equispaced points on the circle, or the spread set in higher dimension.
pub fn boundary_samples(n: usize, count: usize) -> Vec<SpherePoint> {
    crate::sampling::spread_points(n, count)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_and_linear_distortion() {
        let pts = distortion_grid(2, 50, 0.95, 1);
        let id = identity(2).unwrap();
        assert!((distortion(&id, &pts, JacobianSource::Auto).unwrap().k_global - 1.0).abs() < 1e-12);
        let lin = gallery_map(2, "diag(2,1)").unwrap();
        assert!((distortion(&lin, &pts, JacobianSource::Auto).unwrap().k_global - 2.0).abs() < 1e-12);
        let z = z_plus_c_conj(0.5).unwrap();
        let rep = distortion(&z, &pts, JacobianSource::Analytic).unwrap();
        assert!((rep.k_global - 3.0).abs() < 1e-12);
        for s in &rep.samples {
            assert!((s.sigma_max - 1.5).abs() < 1e-12 && (s.sigma_min - 0.5).abs() < 1e-12);
            assert!(s.sigma_max <= rep.k_global * s.sigma_min * (1.0 + 1e-12));
        }
    }

    #[test]
    fn degenerate_jacobian_is_reported() {
        let m = linear("flat", DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0])).unwrap();
        let err = distortion(&m, &[BallPoint::origin(2)], JacobianSource::Auto).unwrap_err();
        assert!(matches!(err, Error::DegenerateJacobian { .. }));
    }

    #[test]
    fn mori_exponents() {
        assert_eq!(mori_exponent(1.0, 3).unwrap(), 1.0);
        assert!((mori_exponent(3.0, 2).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!((mori_exponent(8.0, 3).unwrap() - 8f64.powf(-0.5)).abs() < 1e-15);
        assert!(mori_exponent(0.5, 2).is_err());
    }

    #[test]
    fn mori_identity_and_self_map_guard() {
        let s = MoriSampler { pairs: 2000, seed: 3, near_levels: 12 };
        let chk = mori_check(&identity(3).unwrap(), 1.0, &s, None).unwrap();
        assert!((chk.m_empirical - 1.0).abs() < 1e-12 && chk.violations == 0);
        let big = linear("2x", DMatrix::identity(2, 2) * 2.0).unwrap();
        assert!(matches!(mori_check(&big, 0.5, &s, None), Err(Error::NotSelfMap { .. })));
    }

    #[test]
    fn gallery_contents() {
        let g2 = gallery(2).unwrap();
        let z3 = g2.iter().find(|m| m.name() == "z+0.3conj(z)").unwrap();
        let rep = distortion(z3, &[BallPoint::origin(2)], JacobianSource::Auto).unwrap();
        assert!((rep.k_global - 13.0 / 7.0).abs() < 1e-12);
        let xi = [0.6, 0.8];
        assert_eq!(g2[0].trace().unwrap().eval(&xi), xi.to_vec());
        let p0 = perturbed_identity(0.0).unwrap();
        assert_eq!(p0.eval(&[0.1, 0.2, 0.3]), vec![0.1, 0.2, 0.3]);
        assert!(gallery(4).is_err());
    }

    #[test]
    fn analytic_jacobians_match_differences() {
        let pts = distortion_grid(3, 30, 0.9, 5);
        let m = perturbed_identity(0.1).unwrap();
        for x in &pts {
            let a = m.jacobian(x.coords(), JacobianSource::Analytic);
            let f = m.jacobian(x.coords(), JacobianSource::FiniteDifference);
            assert!((a - f).norm() < 1e-5);
        }
    }

    #[test]
    fn post_affine_composes() {
        let z = z_plus_c_conj(0.3).unwrap();
        let rot = rotation2(0.4);
        let m = z.post_affine("R z", &rot, &[0.1, -0.2]).unwrap();
        let x = [0.3, -0.5];
        let direct = m.eval(&x);
        let fz = z.eval(&x);
        let expect = [rot[(0, 0)] * fz[0] + rot[(0, 1)] * fz[1] + 0.1, rot[(1, 0)] * fz[0] + rot[(1, 1)] * fz[1] - 0.2];
        assert!(dist(&direct, &expect) < 1e-15);
        let e = m.image().unwrap();
        assert!(dist(&e.center, &[0.1, -0.2]) < 1e-15);
    }
}
