//! Empirical regularity measurements for boundary data and their harmonic
//! extensions: Hölder constants on the sphere, gradient growth along radii,
//! and the radial integration that turns gradient growth back into Hölder bounds.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extension::{BoundaryData, HarmonicField};
use crate::sampling::{rng, tangent_direction, uniform_ball, uniform_sphere};
use crate::sphere::{dist, dot, gauss_legendre_interval, norm, orthonormal_complement, AnchoredConfig, BallPoint, SpherePoint, ZonalRule};
use crate::sum::KahanSum;

/// How pairs `(xi, eta)` on the sphere are drawn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PairSampler {
    /// Independent uniform pairs.
    Uniform { pairs: usize, seed: u64 },
    /// Pairs `(xi, anchor)` at chords `2^-j`, `j = 0..=levels`, and chord 2, along the
    /// coordinate tangent directions plus `directions` random ones.
    Anchored { anchor: Vec<f64>, levels: u32, directions: usize, seed: u64 },
    /// Random base points, random tangents, chords `2^-j`.
    Dyadic { levels: u32, per_level: usize, seed: u64 },
}

impl PairSampler {
    pub fn pairs(&self, n: usize) -> Result<Vec<(SpherePoint, SpherePoint)>> {
        let out = match self {
            PairSampler::Uniform { pairs, seed } => {
                let mut r = rng(*seed);
                (0..*pairs).map(|_| (uniform_sphere(&mut r, n), uniform_sphere(&mut r, n))).collect()
            }
            PairSampler::Anchored { anchor, levels, directions, seed } => {
                if anchor.len() != n {
                    return Err(Error::DimensionMismatch { expected: n, got: anchor.len() });
                }
                let eta = SpherePoint::new(anchor.clone())?;
                let mut r = rng(*seed);
                let mut dirs = orthonormal_complement(eta.coords());
                dirs.extend(dirs.clone().into_iter().map(|d| d.into_iter().map(|v| -v).collect::<Vec<_>>()));
                dirs.extend((0..*directions).map(|_| tangent_direction(&mut r, &eta)));
                let mut out = vec![(eta.antipode(), eta.clone())];
                for d in &dirs {
                    for j in 0..=*levels {
                        out.push((eta.at_chord(2f64.powi(-(j as i32)), d), eta.clone()));
                    }
                }
                out
            }
            PairSampler::Dyadic { levels, per_level, seed } => {
                let mut r = rng(*seed);
                let mut out = Vec::with_capacity((*levels as usize + 1) * per_level);
                for j in 0..=*levels {
                    for _ in 0..*per_level {
                        let eta = uniform_sphere(&mut r, n);
                        let d = tangent_direction(&mut r, &eta);
                        out.push((eta.at_chord(2f64.powi(-(j as i32)), &d), eta));
                    }
                }
                out
            }
        };
        if out.is_empty() {
            return Err(Error::EmptySample);
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolderEstimate {
    pub exponent: f64,
    pub constant: f64,
    pub pair_count: usize,
    pub argmax_pair: Option<(Vec<f64>, Vec<f64>)>,
}

/// Largest `|v_i - v_j| / |p_i - p_j|^mu` over the given pairs of (point, value).
fn max_ratio<'a, I>(pairs: I, mu: f64) -> (f64, Option<(Vec<f64>, Vec<f64>)>, usize)
where
    I: Iterator<Item = (&'a [f64], &'a [f64], &'a [f64], &'a [f64])>,
{
    let mut best = 0.0;
    let mut arg = None;
    let mut count = 0;
    for (p, vp, q, vq) in pairs {
        let h = dist(p, q);
        if h == 0.0 {
            continue;
        }
        count += 1;
        let ratio = dist(vp, vq) / h.powf(mu);
        if ratio > best {
            best = ratio;
            arg = Some((p.to_vec(), q.to_vec()));
        }
    }
    (best, arg, count)
}

/// Sampled Hölder constant of `F` on the sphere; a lower bound for the true one.
pub fn holder_estimate(data: &BoundaryData, mu: f64, sampler: &PairSampler) -> Result<HolderEstimate> {
    if !(mu > 0.0) {
        return Err(Error::InvalidParameter(format!("Hölder exponent must be positive, got {mu}")));
    }
    let pairs = sampler.pairs(data.n())?;
    let values: Vec<(Vec<f64>, Vec<f64>)> = pairs.par_iter().map(|(a, b)| (data.eval_at(a), data.eval_at(b))).collect();
    let (constant, argmax_pair, count) = max_ratio(
        pairs.iter().zip(&values).map(|((a, b), (fa, fb))| (a.coords(), fa.as_slice(), b.coords(), fb.as_slice())),
        mu,
    );
    if count == 0 {
        return Err(Error::EmptySample);
    }
    Ok(HolderEstimate { exponent: mu, constant, pair_count: count, argmax_pair })
}

/// Radii `r = 1 - gap`, sorted increasing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialGrid {
    gaps: Vec<f64>,
}

impl RadialGrid {
    pub fn from_gaps(mut gaps: Vec<f64>) -> Result<Self> {
        if gaps.iter().any(|g| !(*g > 0.0 && *g <= 1.0)) {
            return Err(Error::InvalidParameter("radial gaps must lie in (0, 1]".into()));
        }
        gaps.sort_by(|a, b| b.partial_cmp(a).unwrap());
        gaps.dedup();
        if gaps.is_empty() {
            return Err(Error::EmptySample);
        }
        Ok(Self { gaps })
    }

    /// `1 - r = 2^{-k}`, `k = 0..=k_max`.
    pub fn dyadic(k_max: u32) -> Self {
        Self { gaps: (0..=k_max).map(|k| 2f64.powi(-(k as i32))).collect() }
    }

    /// `1 - r = 2^{-k / steps}`, `k = 0..=k_max * steps`.
    pub fn dyadic_refined(k_max: u32, steps: u32) -> Self {
        Self { gaps: (0..=k_max * steps).map(|k| 2f64.powf(-(k as f64) / steps as f64)).collect() }
    }

    /// `count` equispaced radii in `[0, r_max]`.
    pub fn linear(r_max: f64, count: usize) -> Result<Self> {
        Self::from_gaps((0..count).map(|i| 1.0 - r_max * i as f64 / (count.max(2) - 1) as f64).collect())
    }

    pub fn merge(&self, other: &RadialGrid) -> Self {
        let mut g = self.gaps.clone();
        g.extend_from_slice(&other.gaps);
        Self::from_gaps(g).expect("both grids valid")
    }

    pub fn gaps(&self) -> &[f64] {
        &self.gaps
    }

    pub fn radii(&self) -> Vec<f64> {
        self.gaps.iter().map(|g| 1.0 - g).collect()
    }

    pub fn len(&self) -> usize {
        self.gaps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gaps.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayRow {
    pub r: f64,
    pub gap: f64,
    pub grad_norm: f64,
    /// `|grad u| (1 - r)^{1 - mu}`
    pub normalized: f64,
    /// `M (2n + 2) int |xi - eta|^mu / ((1 - r)^2 + r |xi - eta|^2)^{n/2}`, when `M` is known.
    pub majorant: Option<f64>,
    pub accurate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayProfile {
    pub eta: Vec<f64>,
    pub mu: f64,
    pub rows: Vec<DecayRow>,
    /// Least-squares slope of `log |grad u|` against `log(1 - r)` over the
    /// `SLOPE_POINTS` radii nearest the boundary (among those with `r >= 1/2`).
    pub fitted_slope: Option<f64>,
    /// Sup of the normalized column.
    pub empirical_c: f64,
    pub accurate: bool,
}

impl DecayProfile {
    pub fn samples(&self) -> Vec<(f64, f64)> {
        self.rows.iter().map(|r| (r.r, r.grad_norm)).collect()
    }

    pub fn normalized(&self) -> Vec<(f64, f64)> {
        self.rows.iter().map(|r| (r.r, r.normalized)).collect()
    }

    /// Sup of the normalized values over rows with `r < r_max`.
    pub fn sup_below(&self, r_max: f64) -> f64 {
        self.rows.iter().filter(|r| r.r < r_max).map(|r| r.normalized).fold(0.0, f64::max)
    }
}

/// Radii used by the slope fit. The normalized profile approaches its limit only
/// like `(1 - r)^{1 - mu}`, so fits reaching back to `r = 1/2` overstate the decay.
pub const SLOPE_POINTS: usize = 4;

/// The explicit bound `M (2n + 2) 2^{n + mu}` on the normalized gradient for `|x| < 1/2`.
pub fn small_radius_bound(n: usize, mu: f64, m: f64) -> f64 {
    m * (2.0 * n as f64 + 2.0) * 2f64.powf(n as f64 + mu)
}

/// `M (2n + 2) int_S |xi - eta|^mu / ((1 - r)^2 + r |xi - eta|^2)^{n/2} dsigma(xi)`.
pub fn gradient_majorant(n: usize, mu: f64, m: f64, gap: f64) -> Result<f64> {
    let r = 1.0 - gap;
    let rule = ZonalRule::graded(n, gap, &AnchoredConfig::default())?;
    let v = rule.integrate(|z| {
        let c2 = z.chord2();
        c2.powf(0.5 * mu) / crate::kernels::half_power(gap * gap + r * c2, n)
    })?;
    Ok(m * (2.0 * n as f64 + 2.0) * v)
}

fn anchored_constant(data: &BoundaryData, eta: &SpherePoint, mu: f64) -> Option<f64> {
    let h = data.holder()?;
    if (h.exponent - mu).abs() > 1e-12 {
        return None;
    }
    match &h.anchor {
        None => Some(h.constant),
        Some(a) if dist(a, eta.coords()) < 1e-12 => Some(h.constant),
        _ => None,
    }
}

fn least_squares_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let k = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / k;
    let my = points.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Slope of `log y` against `log x` by least squares, skipping non-positive values.
pub fn log_log_slope(points: &[(f64, f64)]) -> Option<f64> {
    let logs: Vec<(f64, f64)> = points.iter().filter(|(x, y)| *x > 0.0 && *y > 0.0).map(|(x, y)| (x.ln(), y.ln())).collect();
    least_squares_slope(&logs)
}

fn ray_gradients(field: &HarmonicField, eta: &SpherePoint, gaps: &[f64]) -> Result<Vec<(f64, bool)>> {
    if field.data().arity() != 1 {
        return Err(Error::InvalidParameter("radial profiles need scalar data".into()));
    }
    gaps.par_iter()
        .map(|&g| {
            let x = if g >= 1.0 { BallPoint::origin(eta.dim()) } else { BallPoint::at_gap(eta, g)? };
            let ge = field.gradient(&x, Some(eta))?;
            Ok((ge.row_norm(0), ge.accurate))
        })
        .collect()
}

/// `|grad u(r eta)|` and its normalization by `(1 - r)^{1 - mu}` along the grid.
pub fn decay_profile(field: &HarmonicField, eta: &SpherePoint, mu: f64, grid: &RadialGrid) -> Result<DecayProfile> {
    if !(mu > 0.0 && mu < 1.0) {
        return Err(Error::InvalidParameter(format!("decay profiles need 0 < mu < 1, got {mu}")));
    }
    let n = eta.dim();
    let grads = ray_gradients(field, eta, grid.gaps())?;
    let m = anchored_constant(field.data(), eta, mu);
    let mut rows = Vec::with_capacity(grads.len());
    for (&gap, &(g, accurate)) in grid.gaps().iter().zip(&grads) {
        let majorant = m.map(|m| gradient_majorant(n, mu, m, gap)).transpose()?;
        rows.push(DecayRow { r: 1.0 - gap, gap, grad_norm: g, normalized: g * gap.powf(1.0 - mu), majorant, accurate });
    }
    if let Some(bad) = rows.iter().find(|r| !r.normalized.is_finite()) {
        return Err(Error::NonFinite { abscissa: bad.r });
    }
    let tail: Vec<(f64, f64)> = rows.iter().filter(|r| r.r >= 0.5).map(|r| (r.gap, r.grad_norm)).collect();
    let tail = &tail[tail.len().saturating_sub(SLOPE_POINTS)..];
    Ok(DecayProfile {
        eta: eta.coords().to_vec(),
        mu,
        fitted_slope: log_log_slope(&tail),
        empirical_c: rows.iter().map(|r| r.normalized).fold(0.0, f64::max),
        accurate: rows.iter().all(|r| r.accurate),
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundedGradient {
    pub sup_gradient: f64,
    /// Last grid value over the median is below 10: no blow-up toward the boundary.
    pub tail_bounded: bool,
    pub tail_ratio: f64,
    pub samples: Vec<(f64, f64)>,
    pub accurate: bool,
}

/// Sup of `|grad u(r eta)|` over the grid for data that is better than Lipschitz at `eta`.
pub fn bounded_gradient_check(field: &HarmonicField, eta: &SpherePoint, mu: f64, grid: &RadialGrid) -> Result<BoundedGradient> {
    if !(mu > 1.0) {
        return Err(Error::InvalidParameter(format!("bounded-gradient check needs mu > 1, got {mu}")));
    }
    let grads = ray_gradients(field, eta, grid.gaps())?;
    let samples: Vec<(f64, f64)> = grid.gaps().iter().zip(&grads).map(|(g, (v, _))| (1.0 - g, *v)).collect();
    let mut sorted: Vec<f64> = samples.iter().map(|s| s.1).collect();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = sorted[sorted.len() / 2];
    let last = samples.last().map(|s| s.1).unwrap_or(0.0);
    let tail_ratio = if median > 0.0 { last / median } else if last > 0.0 { f64::INFINITY } else { 0.0 };
    Ok(BoundedGradient {
        sup_gradient: sorted.last().copied().unwrap_or(0.0),
        tail_bounded: tail_ratio < 10.0,
        tail_ratio,
        accurate: grads.iter().all(|g| g.1),
        samples,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialHolderRow {
    pub r: f64,
    /// `int_r^1 <grad u(t eta), eta> dt`
    pub path: f64,
    /// `F(eta) - u(r eta)`
    pub endpoint: f64,
    /// `C (1 - r)^mu / mu`
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialHolder {
    pub mu: f64,
    /// The constant used in the `bound` column.
    pub c: f64,
    pub rows: Vec<RadialHolderRow>,
    /// Sup of `|grad u(t eta)| (1 - t)^{1 - mu}` over the integration nodes.
    pub path_c: f64,
    /// `c` dominates the normalized gradient at every node, grid and path alike.
    pub hypothesis_holds: bool,
    /// Gaps below this are covered by the closed-form tail.
    pub analytic_tail_below: f64,
    /// Sup of the profile's normalized column.
    pub grid_c: f64,
}

impl RadialHolder {
    /// The same comparison with another constant.
    pub fn rebound(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.c = c;
        out.hypothesis_holds = c >= self.measured_c();
        for row in out.rows.iter_mut() {
            row.bound = c * (1.0 - row.r).powf(self.mu) / self.mu;
        }
        out
    }

    /// Smallest constant dominating every sampled normalized gradient.
    pub fn measured_c(&self) -> f64 {
        self.path_c.max(self.grid_c)
    }

    pub fn max_disagreement(&self) -> f64 {
        self.rows.iter().map(|r| (r.path - r.endpoint).abs()).fold(0.0, f64::max)
    }

    pub fn violations(&self) -> usize {
        self.rows.iter().filter(|r| r.path.abs() > r.bound || r.endpoint.abs() > r.bound).count()
    }
}

const PATH_POINTS: usize = 10;
/// Nodes closer to the boundary than this are not evaluated.
const MIN_PATH_GAP: f64 = 1e-12;

/// Integrates `<grad u(t eta), eta>` from each grid radius to 1 and compares it with
/// the endpoint difference and with `C (1 - r)^mu / mu`.
///
/// With `s = (1 - t)^mu` the integrand `g(t)` becomes `g (1 - t)^{1 - mu} / mu`,
/// bounded when the gradient grows like `(1 - t)^{mu - 1}`.
pub fn radial_holder_from_gradient(field: &HarmonicField, profile: &DecayProfile, c: f64, mu: f64) -> Result<RadialHolder> {
    if !(mu > 0.0 && mu <= 1.0) {
        return Err(Error::InvalidParameter(format!("radial integration needs 0 < mu <= 1, got {mu}")));
    }
    let eta = SpherePoint::new(profile.eta.clone())?;
    let s_of = |gap: f64| gap.powf(mu);
    let gaps: Vec<f64> = profile.rows.iter().map(|r| r.gap).collect();
    // segment breaks in s, from the outermost radius down to s = 0
    let mut breaks: Vec<f64> = gaps.iter().map(|&g| s_of(g)).collect();
    let s_floor = s_of(MIN_PATH_GAP);
    let mut s = *breaks.last().unwrap();
    while s > s_floor {
        s = (0.25 * s).max(s_floor);
        breaks.push(s);
    }
    let mut nodes: Vec<(usize, f64, f64)> = Vec::new();
    for (seg, pair) in breaks.windows(2).enumerate() {
        let (ss, ws) = gauss_legendre_interval(PATH_POINTS, pair[1], pair[0]);
        nodes.extend(ss.into_iter().zip(ws).map(|(s, w)| (seg, s, w)));
    }
    let radial: Vec<(f64, f64)> = nodes
        .par_iter()
        .map(|&(_, s, _)| {
            let gap = s.powf(1.0 / mu);
            let x = BallPoint::at_gap(&eta, gap)?;
            let g = field.gradient(&x, Some(&eta))?;
            let jac = g.jacobian.row(0);
            let along: f64 = (0..eta.dim()).map(|k| jac[k] * eta.coords()[k]).sum();
            Ok((along, g.row_norm(0) * gap.powf(1.0 - mu)))
        })
        .collect::<Result<_>>()?;
    let path_c = radial.iter().map(|r| r.1).fold(0.0, f64::max);
    let mut seg_sums = vec![KahanSum::new(); breaks.len() - 1];
    for (&(seg, s, w), &(along, _)) in nodes.iter().zip(&radial) {
        // dt = s^{1/mu - 1} ds / mu
        seg_sums[seg].add(w * along * s.powf(1.0 / mu - 1.0) / mu);
    }
    // below s_floor: the normalized radial derivative at the innermost node, held constant
    let innermost = nodes.iter().zip(&radial).min_by(|a, b| a.0 .1.partial_cmp(&b.0 .1).unwrap()).unwrap();
    let inner_gap = innermost.0 .1.powf(1.0 / mu);
    let tail = innermost.1 .0 * inner_gap.powf(1.0 - mu) * s_floor / mu;
    let f_eta = field.data().eval_at(&eta)[0];
    let mut rows = Vec::with_capacity(gaps.len());
    let mut acc = KahanSum::new();
    acc.add(tail);
    for seg in (gaps.len() - 1..breaks.len() - 1).rev() {
        acc.add(seg_sums[seg].value());
    }
    let mut path_at = vec![0.0; gaps.len()];
    path_at[gaps.len() - 1] = acc.value();
    for i in (0..gaps.len() - 1).rev() {
        acc.add(seg_sums[i].value());
        path_at[i] = acc.value();
    }
    let endpoints: Vec<f64> = gaps
        .par_iter()
        .map(|&g| {
            let x = if g >= 1.0 { BallPoint::origin(eta.dim()) } else { BallPoint::at_gap(&eta, g)? };
            Ok(f_eta - field.extend(&x)?.value[0])
        })
        .collect::<Result<_>>()?;
    for (i, &g) in gaps.iter().enumerate() {
        rows.push(RadialHolderRow { r: 1.0 - g, path: path_at[i], endpoint: endpoints[i], bound: c * g.powf(mu) / mu });
    }
    Ok(RadialHolder {
        mu,
        c,
        rows,
        path_c,
        hypothesis_holds: c >= path_c && c >= profile.empirical_c,
        analytic_tail_below: MIN_PATH_GAP,
        grid_c: profile.empirical_c,
    })
}

/// Points drawn for the global Hölder check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointSampler {
    pub interior: usize,
    pub boundary: usize,
    /// Interior points are drawn uniformly from the ball of this radius.
    pub max_radius: f64,
    pub seed: u64,
}

impl Default for PointSampler {
    fn default() -> Self {
        Self { interior: 300, boundary: 100, max_radius: 0.99, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalHolder {
    pub exponent: f64,
    pub global_m: f64,
    pub consistent: bool,
    pub pair_count: usize,
    pub argmax_pair: Option<(Vec<f64>, Vec<f64>)>,
    /// Interior samples `x = r eta` where `|u(x) - F(eta)| > radial_c (1 - r)^mu`.
    pub radial_violations: usize,
}

/// `sup |u(x) - u(y)| / |x - y|^mu` over all pairs of sampled points of the closed
/// ball; boundary values are taken from `F` directly.
pub fn global_holder_check(field: &HarmonicField, mu: f64, radial_c: f64, sampler: &PointSampler) -> Result<GlobalHolder> {
    let data = field.data();
    let n = data.n();
    if sampler.interior + sampler.boundary < 2 {
        return Err(Error::EmptySample);
    }
    let mut r = rng(sampler.seed);
    let mut points: Vec<Vec<f64>> = (0..sampler.interior).map(|_| uniform_ball(&mut r, n, sampler.max_radius).coords().to_vec()).collect();
    points.extend((0..sampler.boundary).map(|_| uniform_sphere(&mut r, n).coords().to_vec()));
    let values: Vec<Vec<f64>> = points.par_iter().map(|p| field.value_closed(p)).collect::<Result<_>>()?;
    let (global_m, argmax_pair, count) = max_ratio(
        (0..points.len()).flat_map(|i| (i + 1..points.len()).map(move |j| (i, j))).map(|(i, j)| {
            (points[i].as_slice(), values[i].as_slice(), points[j].as_slice(), values[j].as_slice())
        }),
        mu,
    );
    let mut radial_violations = 0;
    for (p, v) in points.iter().zip(&values).take(sampler.interior) {
        let rad = norm(p);
        if rad == 0.0 {
            continue;
        }
        let f = data.eval(&p.iter().map(|c| c / rad).collect::<Vec<_>>());
        if dist(v, &f) > radial_c * (1.0 - rad).powf(mu) * (1.0 + 1e-9) {
            radial_violations += 1;
        }
    }
    Ok(GlobalHolder {
        exponent: mu,
        global_m,
        consistent: global_m.is_finite(),
        pair_count: count,
        argmax_pair,
        radial_violations,
    })
}

/// Hölder exponent of `F` at `eta` read off dyadic chords: slope of
/// `log max_dir |F(xi) - F(eta)|` against `log |xi - eta|`.
pub fn dyadic_exponent(data: &BoundaryData, eta: &SpherePoint, levels: std::ops::RangeInclusive<u32>, directions: &[Vec<f64>]) -> Option<f64> {
    let f0 = data.eval_at(eta);
    let pts: Vec<(f64, f64)> = levels
        .map(|j| {
            let h = 2f64.powi(-(j as i32));
            let worst = directions.iter().map(|d| dist(&data.eval_at(&eta.at_chord(h, d)), &f0)).fold(0.0, f64::max);
            (h, worst)
        })
        .collect();
    log_log_slope(&pts)
}

/// Tangent directions at `eta`: the coordinate frame of the tangent plane and its negatives.
pub fn frame_directions(eta: &SpherePoint) -> Vec<Vec<f64>> {
    let basis = orthonormal_complement(eta.coords());
    let mut out = basis.clone();
    out.extend(basis.into_iter().map(|b| b.into_iter().map(|v| -v).collect()));
    debug_assert!(out.iter().all(|d| dot(d, eta.coords()).abs() < 1e-12));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn holder_examples() {
        let eta = SpherePoint::new(vec![0.3, -0.2, 0.9]).unwrap();
        let f = BoundaryData::anchored_power(&eta, 0.5).unwrap();
        let s = PairSampler::Anchored { anchor: eta.coords().to_vec(), levels: 12, directions: 8, seed: 1 };
        let est = holder_estimate(&f, 0.5, &s).unwrap();
        assert!((est.constant - 1.0).abs() < 1e-12);

        let e2 = SpherePoint::axis(3, 1);
        let s = PairSampler::Anchored { anchor: e2.coords().to_vec(), levels: 24, directions: 0, seed: 1 };
        let est = holder_estimate(&BoundaryData::coordinate(3, 0).unwrap(), 1.0, &s).unwrap();
        assert!((est.constant - 1.0).abs() < 1e-12);
    }

    #[test]
    fn z_plus_c_conj_z_stretch() {
        let c = 0.5;
        let f = BoundaryData::new(2, 2, "z+cz̄", move |x, o| {
            o[0] = (1.0 + c) * x[0];
            o[1] = (1.0 - c) * x[1];
        })
        .unwrap();
        let est = holder_estimate(&f, 1.0, &PairSampler::Uniform { pairs: 20_000, seed: 5 }).unwrap();
        assert!((est.constant - 1.5).abs() < 0.02 * 1.5, "{}", est.constant);
        assert!(est.constant <= 1.5 + 1e-12);
    }

    #[test]
    fn empty_sampler_is_an_error() {
        let f = BoundaryData::coordinate(2, 0).unwrap();
        assert!(matches!(holder_estimate(&f, 1.0, &PairSampler::Uniform { pairs: 0, seed: 0 }), Err(Error::EmptySample)));
    }

    #[test]
    fn grids() {
        let g = RadialGrid::dyadic(3);
        assert_eq!(g.radii(), vec![0.0, 0.5, 0.75, 0.875]);
        let f = RadialGrid::dyadic_refined(3, 2);
        assert_eq!(f.len(), 7);
        let m = g.merge(&RadialGrid::linear(0.4, 5).unwrap());
        assert!(m.radii().windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn linear_data_profiles() {
        let eta = SpherePoint::axis(3, 1);
        let field = HarmonicField::new(BoundaryData::coordinate(3, 0).unwrap()).unwrap();
        let p = decay_profile(&field, &eta, 0.99, &RadialGrid::dyadic(10)).unwrap();
        assert!(p.rows.iter().all(|r| r.normalized <= 1.0 + 1e-9));
        let b = bounded_gradient_check(&field, &eta, 1.5, &RadialGrid::dyadic(12)).unwrap();
        assert!((b.sup_gradient - 1.0).abs() < 1e-9);
        assert!(b.tail_bounded);
    }

    #[test]
    fn rejects_exponents_out_of_range() {
        let eta = SpherePoint::axis(2, 0);
        let field = HarmonicField::new(BoundaryData::coordinate(2, 0).unwrap()).unwrap();
        assert!(decay_profile(&field, &eta, 1.2, &RadialGrid::dyadic(2)).is_err());
        assert!(bounded_gradient_check(&field, &eta, 0.5, &RadialGrid::dyadic(2)).is_err());
    }

    #[test]
    fn linear_radial_integration() {
        let eta = SpherePoint::new(vec![0.6, 0.8]).unwrap();
        let field = HarmonicField::new(BoundaryData::coordinate(2, 0).unwrap()).unwrap();
        let p = decay_profile(&field, &eta, 0.999, &RadialGrid::dyadic(8)).unwrap();
        let rh = radial_holder_from_gradient(&field, &p, 1.0, 1.0).unwrap();
        for row in &rh.rows {
            let exact = (1.0 - row.r) * 0.6;
            assert!((row.path - exact).abs() < 1e-10 && (row.endpoint - exact).abs() < 1e-10);
            assert!(row.path <= row.bound);
        }
    }

    #[test]
    fn global_check_on_simple_data() {
        let field = HarmonicField::new(BoundaryData::constant(2, vec![1.0]).unwrap()).unwrap();
        let s = PointSampler { interior: 40, boundary: 20, max_radius: 0.95, seed: 2 };
        assert!(global_holder_check(&field, 0.5, 0.0, &s).unwrap().global_m < 1e-12);
        let field = HarmonicField::new(BoundaryData::coordinate(2, 0).unwrap()).unwrap();
        let g = global_holder_check(&field, 1.0, 1.0, &PointSampler { interior: 150, boundary: 50, max_radius: 0.95, seed: 2 }).unwrap();
        assert!(g.global_m <= 1.0 + 1e-9 && g.global_m > 0.99, "{}", g.global_m);
        assert_eq!(g.radial_violations, 0);
    }
}
