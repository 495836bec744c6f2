//! The exponent ladder run as an experiment: an initial Hölder exponent from the
//! distortion of the map, then repeated upgrades `mu -> (1 + alpha) mu` checked
//! one boundary point at a time, ending in a Lipschitz certificate.

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::charts::{ellipsoid_atlas, normal_component_bound, qc_component_propagation, trace_atlas, DomainSpec, Isometry, NormalSampler, Similarity};
use crate::error::{Error, Result};
use crate::extension::{BoundaryData, FieldConfig, HarmonicField, HolderMeta};
use crate::qc::{discrete_laplacian_max, distortion, distortion_grid, mori_check, mori_exponent, BallMap, JacobianSource, MoriSampler};
use crate::regularity::{bounded_gradient_check, decay_profile, dyadic_exponent, frame_directions, global_holder_check, PointSampler, RadialGrid};
use crate::sampling::{rng, spread_points, uniform_ball, uniform_sphere};
use crate::sphere::{dist, norm, BallPoint, SpherePoint};

/// Ladder entries within this distance of 1 trigger a nudge of `beta`.
pub const LADDER_EPS: f64 = 1e-9;
const NUDGE: f64 = 0.99;
const MAX_NUDGES: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentLadder {
    pub alpha: f64,
    /// The exponent actually used, after any nudge.
    pub beta: f64,
    pub beta_input: f64,
    pub adjusted: bool,
    pub nudges: usize,
    /// `mu_0, ..., mu_{k0 + 1}`
    pub mu: Vec<f64>,
    pub k0: usize,
}

impl ExponentLadder {
    /// `(mu_k, mu_{k + 1})` for `k = 0..=k0`.
    pub fn steps(&self) -> impl Iterator<Item = (usize, f64, f64)> + '_ {
        self.mu.windows(2).enumerate().map(|(k, w)| (k, w[0], w[1]))
    }
}

fn ladder_from(alpha: f64, beta: f64) -> (Vec<f64>, bool) {
    let mut mu = vec![beta];
    let mut hits = (beta - 1.0).abs() < LADDER_EPS;
    while *mu.last().unwrap() < 1.0 {
        let next = mu.last().unwrap() * (1.0 + alpha);
        hits |= (next - 1.0).abs() < LADDER_EPS;
        mu.push(next);
    }
    (mu, hits)
}

pub fn make_ladder(alpha: f64, beta: f64) -> Result<ExponentLadder> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidParameter(format!("alpha must lie in (0, 1], got {alpha}")));
    }
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::InvalidParameter(format!("beta must lie in (0, 1), got {beta}")));
    }
    let mut b = beta;
    let mut nudges = 0;
    let (mut mu, mut hits) = ladder_from(alpha, b);
    while hits && nudges < MAX_NUDGES {
        b *= NUDGE;
        nudges += 1;
        (mu, hits) = ladder_from(alpha, b);
    }
    if hits || !(b > 0.0) {
        return Err(Error::InvalidParameter(format!("no admissible ladder near beta = {beta}")));
    }
    let k0 = mu.len() - 2;
    Ok(ExponentLadder { alpha, beta: b, beta_input: beta, adjusted: nudges > 0, nudges, mu, k0 })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialExponent {
    /// Distortion of `G^{-1} ∘ f`.
    pub k_prime: f64,
    pub beta: f64,
    /// Sampled Mori constant of `G^{-1} ∘ f`.
    pub mori_m: f64,
    pub lipschitz_g: f64,
    /// `mori_m * lipschitz_g`
    pub c1: f64,
}

/// The reference similarity of the domain, or the plain scaling by its Lipschitz constant.
pub fn reference_of(domain: &DomainSpec) -> Result<Similarity> {
    match (&domain.reference, domain.lipschitz_g) {
        (Some(g), _) => Ok(g.clone()),
        (None, Some(l)) if l > 0.0 => Ok(Similarity::scaling(domain.n, l)),
        _ => Err(Error::Config("the domain needs a reference map or its Lipschitz constant".into())),
    }
}

/// `G^{-1} ∘ f`, a self-map of the ball when `f(B)` lies in `G(B)`.
pub fn normalized_map(map: &BallMap, g: &Similarity) -> Result<BallMap> {
    let n = map.n();
    let (m1, g1) = (map.clone(), g.clone());
    let mut out = BallMap::new(format!("G^-1∘{}", map.name()), n, move |x, o| o.copy_from_slice(&g1.inverse_apply(&m1.eval(x))))?;
    if map.has_analytic_jacobian() {
        let (m2, rt) = (map.clone(), g.rotation.transpose() / g.scale);
        out = out.with_jacobian(move |x| &rt * m2.jacobian(x, JacobianSource::Analytic));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InitialConfig {
    pub distortion_points: usize,
    pub distortion_radius: f64,
    pub mori: MoriSampler,
    pub seed: u64,
}

impl Default for InitialConfig {
    fn default() -> Self {
        Self { distortion_points: 400, distortion_radius: 0.999, mori: MoriSampler { pairs: 20_000, seed: 0, near_levels: 20 }, seed: 0 }
    }
}

pub fn initial_exponent(map: &BallMap, domain: &DomainSpec, cfg: &InitialConfig) -> Result<InitialExponent> {
    let g = reference_of(domain)?;
    let gm = normalized_map(map, &g)?;
    let pts = distortion_grid(map.n(), cfg.distortion_points, cfg.distortion_radius, cfg.seed);
    let k_prime = distortion(&gm, &pts, JacobianSource::Auto)?.k_global;
    let beta = mori_exponent(k_prime, map.n())?;
    let mori = mori_check(&gm, beta, &cfg.mori, None)?;
    Ok(InitialExponent { k_prime, beta, mori_m: mori.m_empirical, lipschitz_g: g.scale, c1: mori.m_empirical * g.scale })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BootstrapConfig {
    pub eta_count: usize,
    /// Allowed shortfall of measured exponents.
    pub slack: f64,
    /// Relative inflation of measured constants.
    pub constant_slack: f64,
    /// Initial exponents are lowered to this value, below one half.
    pub beta_cap: f64,
    /// Radial grid `1 - r = 2^-k`, `k <= k_max`.
    pub k_max: u32,
    /// Chords `2^-j`, `j = 2..=map_levels`, for the dyadic exponent of the map.
    pub map_levels: u32,
    pub normal: NormalSampler,
    pub points: PointSampler,
    pub initial: InitialConfig,
    pub field: FieldConfig,
    /// Depth of the radial net of the final certificate.
    pub net_depth: u32,
    /// Difference quotients checked against the certificate.
    pub dominance_pairs: usize,
    pub harmonic_tol: f64,
    pub seed: u64,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self {
            eta_count: 16,
            slack: 0.05,
            constant_slack: 0.05,
            beta_cap: 0.49,
            k_max: 12,
            map_levels: 12,
            normal: NormalSampler::default(),
            points: PointSampler::default(),
            initial: InitialConfig::default(),
            field: FieldConfig::default(),
            net_depth: 12,
            dominance_pairs: 100_000,
            harmonic_tol: 1e-4,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EtaRecord {
    pub eta: Vec<f64>,
    pub image: Vec<f64>,
    pub chart: String,
    pub m_empirical: f64,
    pub m_theory: f64,
    pub normal_violations: usize,
    pub normal_exponent: Option<f64>,
    /// Sup of `|grad f_n(r eta)| (1 - r)^{1 - mu_out}`, or of `|grad f_n|` in the last stage.
    pub gradient_c: f64,
    pub fitted_slope: Option<f64>,
    pub majorant_violations: usize,
    /// Grid points where `|grad f| > K |grad f_n|`.
    pub qc_violations: usize,
    /// Grid points where `|f(r eta) - F(eta)| > K C (1 - r)^mu / mu`.
    pub radial_violations: usize,
    pub map_exponent: Option<f64>,
    pub accurate: bool,
    pub failures: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    pub k: usize,
    pub mu_in: f64,
    pub mu_out: f64,
    /// Hölder constant of the map at `mu_in` fed into the stage.
    pub c_in: f64,
    pub m_measured: f64,
    pub m_theory: f64,
    pub gradient_c: f64,
    /// `sqrt(n) K gradient_c`
    pub propagated_c: f64,
    /// Measured Hölder constant of the map at `mu_out`, inflated by the constant slack.
    pub c_out: Option<f64>,
    /// Interior points off the sampled rays violating the radial bound.
    pub off_sample_violations: usize,
    pub passed: bool,
    pub per_eta: Vec<EtaRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dominance {
    pub pairs: usize,
    pub sup_quotient: f64,
    pub argmax_pair: Option<(Vec<f64>, Vec<f64>)>,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapReport {
    pub map: String,
    pub n: usize,
    pub alpha: f64,
    pub qc_k: f64,
    pub harmonic_residual: f64,
    pub initial: InitialExponent,
    pub beta: f64,
    pub c1: f64,
    pub ladder: ExponentLadder,
    pub stages: Vec<StageReport>,
    /// Sup of `|grad f|` over the net.
    pub final_sup_gradient: f64,
    /// `final_sup_gradient` plus the continuity correction between net points.
    pub lipschitz_estimate: f64,
    /// `sqrt(n) K sup |grad f_n|` from the last stage.
    pub propagated_bound: f64,
    pub net_points: usize,
    pub dominance: Dominance,
    pub coverage_radius: f64,
    pub accuracy_flags: Vec<String>,
    pub passed: bool,
    pub config: BootstrapConfig,
}

fn eta_samples(n: usize, count: usize) -> Vec<SpherePoint> {
    spread_points(n, count)
}

/// The last coordinate of `iso(F)`, with anchored Hölder data at `eta`.
fn normal_component(trace: &BoundaryData, iso: &Isometry, eta: &SpherePoint, exponent: f64, m: f64) -> Result<BoundaryData> {
    let (t, iso) = (trace.clone(), iso.clone());
    let n = trace.n();
    let meta = HolderMeta { exponent, constant: m, anchor: Some(eta.coords().to_vec()) };
    Ok(BoundaryData::scalar(n, "normal component", move |x| iso.apply(&t.eval(x))[n - 1])?.with_holder(meta))
}

struct StageInput<'a> {
    trace: &'a BoundaryData,
    map_field: &'a HarmonicField,
    domain: &'a DomainSpec,
    k: f64,
    grid: &'a RadialGrid,
    cfg: &'a BootstrapConfig,
}

fn check_eta(inp: &StageInput, eta: &SpherePoint, mu_in: f64, mu_out: f64, c_in: f64) -> Result<EtaRecord> {
    let n = eta.dim();
    let cfg = inp.cfg;
    let q = inp.trace.eval_at(eta);
    let chart = inp.domain.chart_at(&q, Some(eta))?;
    let nb = normal_component_bound(&chart, inp.trace, eta, mu_in, c_in, inp.domain.delta, &cfg.normal)?;
    let mut failures = Vec::new();
    if nb.violations > 0 {
        failures.push(format!("{} samples exceed the normal-component bound", nb.violations));
    }
    if let Some(e) = nb.dyadic_exponent {
        if e < mu_out - cfg.slack {
            failures.push(format!("normal-component exponent {e:.4} below {mu_out:.4}"));
        }
    }
    let map_exponent = dyadic_exponent(inp.trace, eta, 2..=cfg.map_levels, &frame_directions(eta));
    if let Some(e) = map_exponent {
        if e < mu_in - cfg.slack {
            failures.push(format!("map exponent {e:.4} below {mu_in:.4}"));
        }
    }
    let fnorm = normal_component(inp.trace, chart.iso(), eta, mu_out, nb.m_theory)?;
    let field_n = HarmonicField::with_config(fnorm, cfg.field)?;
    let (gradient_c, fitted_slope, majorant_violations, mut accurate) = if mu_out < 1.0 {
        let p = decay_profile(&field_n, eta, mu_out, inp.grid)?;
        let bad = p.rows.iter().filter(|r| r.majorant.is_some_and(|m| r.grad_norm > m * (1.0 + 1e-9))).count();
        if let Some(s) = p.fitted_slope {
            if s < mu_out - 1.0 - cfg.slack {
                failures.push(format!("gradient slope {s:.4} below {:.4}", mu_out - 1.0));
            }
        }
        (p.empirical_c, p.fitted_slope, bad, p.accurate)
    } else {
        let b = bounded_gradient_check(&field_n, eta, mu_out, inp.grid)?;
        if !b.tail_bounded {
            failures.push(format!("gradient not bounded, tail ratio {:.3}", b.tail_ratio));
        }
        (b.sup_gradient, None, 0, b.accurate)
    };
    if majorant_violations > 0 {
        failures.push(format!("{majorant_violations} radii exceed the gradient majorant"));
    }
    let (c_grad, _) = qc_component_propagation((gradient_c, mu_out.min(1.0) - 1.0), inp.k)?;
    let f_eta = inp.trace.eval_at(eta);
    let rows: Vec<(usize, usize, bool)> = inp
        .grid
        .gaps()
        .par_iter()
        .map(|&gap| {
            let x = if gap >= 1.0 { BallPoint::origin(n) } else { BallPoint::at_gap(eta, gap)? };
            let full = inp.map_field.gradient(&x, Some(eta))?;
            let normal = field_n.gradient(&x, Some(eta))?;
            let qc_bad = full.operator_norm() > inp.k * normal.row_norm(0) * (1.0 + 1e-6) + 1e-12;
            let value = inp.map_field.extend(&x)?;
            let radial_bound = if mu_out < 1.0 { c_grad * gap.powf(mu_out) / mu_out } else { c_grad * gap };
            let radial_bad = dist(&value.value, &f_eta) > radial_bound * (1.0 + 1e-9) + 1e-12;
            Ok((qc_bad as usize, radial_bad as usize, full.accurate && value.accurate))
        })
        .collect::<Result<_>>()?;
    let qc_violations = rows.iter().map(|r| r.0).sum();
    let radial_violations = rows.iter().map(|r| r.1).sum();
    accurate &= rows.iter().all(|r| r.2);
    if qc_violations > 0 {
        failures.push(format!("{qc_violations} radii with |grad f| > K |grad f_n|"));
    }
    if radial_violations > 0 {
        failures.push(format!("{radial_violations} radii exceed the radial Hölder bound"));
    }
    Ok(EtaRecord {
        eta: eta.coords().to_vec(),
        image: q,
        chart: chart.kind_name().to_string(),
        m_empirical: nb.m_empirical,
        m_theory: nb.m_theory,
        normal_violations: nb.violations,
        normal_exponent: nb.dyadic_exponent,
        gradient_c,
        fitted_slope,
        majorant_violations,
        qc_violations,
        radial_violations,
        map_exponent,
        accurate,
        failures,
    })
}

/// Net of `|grad f|` over spread directions and dyadic radii, with the largest
/// change between neighbouring net points as a continuity correction.
fn lipschitz_net(field: &HarmonicField, n: usize, depth: u32) -> Result<(f64, f64, usize)> {
    let dirs = spread_points(n, if n == 2 { 64 } else { 256 });
    let mut gaps: Vec<f64> = (1..=9).map(|i| 1.0 - 0.1 * i as f64).collect();
    gaps.extend((1..=depth).map(|k| 2f64.powi(-(k as i32))));
    gaps.sort_by(|a, b| b.partial_cmp(a).unwrap());
    gaps.dedup();
    let mut points = vec![BallPoint::origin(n)];
    for d in &dirs {
        for &g in &gaps {
            points.push(BallPoint::at_gap(d, g)?);
        }
    }
    let ops: Vec<f64> = points.par_iter().map(|x| field.gradient(x, None).map(|g| g.operator_norm())).collect::<Result<_>>()?;
    let sup = ops.iter().copied().fold(0.0, f64::max);
    let per = gaps.len();
    let neighbours = |i: usize| -> Vec<usize> {
        let mut near: Vec<(f64, usize)> = dirs.iter().enumerate().filter(|(j, _)| *j != i).map(|(j, d)| (d.chord(&dirs[i]), j)).collect();
        near.sort_by(|a, b| a.partial_cmp(b).unwrap());
        near.into_iter().take(2 * (n - 1)).map(|p| p.1).collect()
    };
    let mut jump: f64 = 0.0;
    for i in 0..dirs.len() {
        let nb = neighbours(i);
        for g in 0..per {
            let v = ops[1 + i * per + g];
            for &j in &nb {
                jump = jump.max((v - ops[1 + j * per + g]).abs());
            }
            if g + 1 < per {
                jump = jump.max((v - ops[1 + i * per + g + 1]).abs());
            }
        }
    }
    Ok((sup, 0.5 * jump, points.len()))
}

fn dominance(map: &BallMap, pairs: usize, seed: u64) -> Dominance {
    let n = map.n();
    let mut r = rng(seed);
    let ps: Vec<(Vec<f64>, Vec<f64>)> = (0..pairs)
        .map(|i| {
            let x = uniform_ball(&mut r, n, 1.0 - 1e-12).coords().to_vec();
            let y = if i % 2 == 0 {
                uniform_ball(&mut r, n, 1.0 - 1e-12).coords().to_vec()
            } else {
                let h = 1e-3 * r.random::<f64>().max(1e-6);
                let d = uniform_sphere(&mut r, n);
                let y: Vec<f64> = x.iter().zip(d.coords()).map(|(a, b)| a + h * b).collect();
                let ny = norm(&y);
                if ny >= 1.0 { y.iter().map(|v| v / ny * (1.0 - 1e-12)).collect() } else { y }
            };
            (x, y)
        })
        .collect();
    let q: Vec<f64> = ps
        .par_iter()
        .map(|(x, y)| {
            let h = dist(x, y);
            if h == 0.0 { 0.0 } else { dist(&map.eval(x), &map.eval(y)) / h }
        })
        .collect();
    let (i, sup) = q.iter().copied().enumerate().fold((0, 0.0), |a, (i, v)| if v > a.1 { (i, v) } else { a });
    Dominance { pairs, sup_quotient: sup, argmax_pair: (sup > 0.0).then(|| ps[i].clone()), ok: true }
}

/// Runs the ladder for `map` onto `domain` at the given boundary points (spread
/// points by default).
pub fn bootstrap_verify(map: &BallMap, domain: &DomainSpec, etas: Option<&[SpherePoint]>, cfg: &BootstrapConfig) -> Result<BootstrapReport> {
    let n = map.n();
    if domain.n != n {
        return Err(Error::DimensionMismatch { expected: n, got: domain.n });
    }
    let trace = map.trace().ok_or_else(|| Error::Config(format!("map {} has no boundary trace", map.name())))?.clone();
    let own;
    let etas = match etas {
        Some(e) => e,
        None => {
            own = eta_samples(n, cfg.eta_count);
            &own
        }
    };
    if etas.is_empty() {
        return Err(Error::EmptySample);
    }
    let lap_points = distortion_grid(n, 40, 0.9, cfg.seed);
    let harmonic_residual = discrete_laplacian_max(map, &lap_points, 1e-3);
    if !(harmonic_residual <= cfg.harmonic_tol) {
        return Err(Error::InvalidParameter(format!("map {} is not harmonic: discrete Laplacian {harmonic_residual:.3e}", map.name())));
    }
    let grid = RadialGrid::dyadic(cfg.k_max);
    let mut grid_pts = distortion_grid(n, cfg.initial.distortion_points, cfg.initial.distortion_radius, cfg.seed);
    for eta in etas {
        for &g in grid.gaps().iter().filter(|g| **g < 1.0) {
            grid_pts.push(BallPoint::at_gap(eta, g)?);
        }
    }
    let qc_k = distortion(map, &grid_pts, JacobianSource::Auto)?.k_global;
    let initial = initial_exponent(map, domain, &InitialConfig { seed: cfg.seed, ..cfg.initial })?;
    let beta = initial.beta.min(cfg.beta_cap);
    let c1 = initial.c1 * 2f64.powf(initial.beta - beta);
    let alpha = domain.alpha();
    let ladder = make_ladder(alpha, beta)?;
    let map_field = HarmonicField::with_config(trace.clone(), cfg.field)?;
    let inp = StageInput { trace: &trace, map_field: &map_field, domain, k: qc_k, grid: &grid, cfg };
    let mut stages = Vec::new();
    let mut c_in = c1;
    let mut flags = Vec::new();
    let sqrt_n = (n as f64).sqrt();
    for (k, mu_in, mu_out) in ladder.steps() {
        let per_eta: Vec<EtaRecord> = etas.par_iter().map(|eta| check_eta(&inp, eta, mu_in, mu_out, c_in)).collect::<Result<_>>()?;
        let gradient_c = per_eta.iter().map(|r| r.gradient_c).fold(0.0, f64::max);
        let propagated_c = sqrt_n * qc_k * gradient_c;
        let (c_out, off_sample_violations) = if mu_out < 1.0 {
            let radial_c = qc_k * gradient_c * (1.0 + cfg.constant_slack) / mu_out;
            let sampler = PointSampler { seed: cfg.seed.wrapping_add(k as u64), ..cfg.points };
            let g = global_holder_check(&map_field, mu_out, radial_c, &sampler)?;
            (Some(g.global_m * (1.0 + cfg.constant_slack)), g.radial_violations)
        } else {
            (None, 0)
        };
        if off_sample_violations > 0 {
            flags.push(format!("stage {k}: {off_sample_violations} interior points off the sampled rays exceed the radial bound"));
        }
        for r in per_eta.iter().filter(|r| !r.accurate) {
            flags.push(format!("stage {k}: near-boundary quadrature flagged at eta = {:?}", r.eta));
        }
        let passed = per_eta.iter().all(|r| r.failures.is_empty());
        stages.push(StageReport {
            k,
            mu_in,
            mu_out,
            c_in,
            m_measured: per_eta.iter().map(|r| r.m_empirical).fold(0.0, f64::max),
            m_theory: per_eta.iter().map(|r| r.m_theory).fold(0.0, f64::max),
            gradient_c,
            propagated_c,
            c_out,
            off_sample_violations,
            passed,
            per_eta,
        });
        if let Some(c) = c_out {
            c_in = c;
        }
    }
    let (final_sup_gradient, correction, net_points) = lipschitz_net(&map_field, n, cfg.net_depth)?;
    let lipschitz_estimate = (final_sup_gradient + correction) * (1.0 + 1e-6);
    let propagated_bound = stages.last().map(|s| s.propagated_c).unwrap_or(f64::NAN);
    let mut dom = dominance(map, cfg.dominance_pairs, cfg.seed.wrapping_add(0x5eed));
    dom.ok = dom.sup_quotient <= lipschitz_estimate;
    let probe = spread_points(n, if n == 2 { 720 } else { 2000 });
    let coverage_radius = crate::sampling::covering_radius(etas, &probe);
    let passed = stages.iter().all(|s| s.passed) && dom.ok;
    Ok(BootstrapReport {
        map: map.name().to_string(),
        n,
        alpha,
        qc_k,
        harmonic_residual,
        initial,
        beta,
        c1,
        ladder,
        stages,
        final_sup_gradient,
        lipschitz_estimate,
        propagated_bound,
        net_points,
        dominance: dom,
        coverage_radius,
        accuracy_flags: flags,
        passed,
        config: *cfg,
    })
}

/// A default atlas for a gallery map: charts of the image ellipsoid when it is
/// known, charts of the image of the trace otherwise. The reference similarity is
/// centred at `f(0)`, so `G^{-1} ∘ f` fixes the origin.
pub fn standard_domain(map: &BallMap) -> Result<DomainSpec> {
    let n = map.n();
    let rho = 0.5;
    let anchors = spread_points(n, if n == 2 { 8 } else { 32 });
    let trace = map.trace().ok_or_else(|| Error::Config(format!("map {} has no boundary trace", map.name())))?;
    let center = map.eval(&vec![0.0; n]);
    let probe = spread_points(n, if n == 2 { 720 } else { 4000 });
    let reach = || probe.iter().map(|p| dist(&trace.eval_at(p), &center)).fold(0.0, f64::max) * 1.001;
    if let Some(e) = map.image() {
        let smax = e.frame.clone().svd(false, false).singular_values.max();
        let scale = if dist(&e.center, &center) < 1e-12 { smax } else { reach() };
        let pts: Vec<Vec<f64>> = anchors
            .iter()
            .map(|a| (0..n).map(|i| e.center[i] + (0..n).map(|k| e.frame[(i, k)] * a.coords()[k]).sum::<f64>()).collect())
            .collect();
        let delta = 0.9 * rho / (2.0 * smax);
        let g = Similarity { scale, rotation: DMatrix::identity(n, n), translation: center };
        return Ok(ellipsoid_atlas(e, &pts, 1.0, rho, delta, rho)?.with_reference(g));
    }
    let l = distortion(map, &distortion_grid(n, 200, 0.99, 0), JacobianSource::Auto)?.sup_operator_norm;
    let delta = 0.9 * rho / (2.0 * l);
    let g = Similarity { scale: reach(), rotation: DMatrix::identity(n, n), translation: center };
    Ok(trace_atlas(trace, &anchors, 1.0, rho, delta, rho)?.with_reference(g))
}

/// The map and domain moved by the rigid motion `x -> R x + b`.
pub fn moved(map: &BallMap, domain: &DomainSpec, rotation: &DMatrix<f64>, translation: &[f64]) -> Result<(BallMap, DomainSpec)> {
    let l = Isometry::new(rotation.clone(), translation.to_vec())?;
    let m = map.post_affine(format!("L∘{}", map.name()), rotation, translation)?;
    Ok((m, domain.transformed(&l)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ladder_examples() {
        let l = make_ladder(0.5, 0.3).unwrap();
        assert_eq!(l.k0, 2);
        for (a, b) in l.mu.iter().zip([0.3, 0.45, 0.675, 1.0125]) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!(!l.adjusted);
        let l = make_ladder(1.0, 0.25).unwrap();
        assert!(l.adjusted && l.nudges == 1);
        assert!((l.beta - 0.2475).abs() < 1e-15);
        for (a, b) in l.mu.iter().zip([0.2475, 0.495, 0.99, 1.98]) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(l.k0, 2);
        let l = make_ladder(1.0, 0.9).unwrap();
        assert_eq!(l.k0, 0);
        assert_eq!(l.mu.len(), 2);
        assert!(make_ladder(1.0, 1.0).is_err());
        assert!(make_ladder(0.0, 0.5).is_err());
        assert!(make_ladder(1.5, 0.5).is_err());
    }

    #[test]
    fn ladder_steps_multiply_exactly() {
        let l = make_ladder(0.3, 0.11).unwrap();
        for (_, a, b) in l.steps() {
            assert_eq!(b, a * 1.3);
        }
        assert!(l.mu[l.k0] < 1.0 && l.mu[l.k0 + 1] > 1.0);
    }

    #[test]
    fn identity_initial_exponent() {
        let m = crate::qc::identity(2).unwrap();
        let d = standard_domain(&m).unwrap();
        let cfg = InitialConfig { mori: MoriSampler { pairs: 2000, seed: 1, near_levels: 12 }, ..Default::default() };
        let ie = initial_exponent(&m, &d, &cfg).unwrap();
        assert!((ie.k_prime - 1.0).abs() < 1e-12);
        assert!((ie.beta - 1.0).abs() < 1e-12);
        assert!((ie.c1 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn missing_reference_is_a_config_error() {
        let m = crate::qc::identity(2).unwrap();
        let d = DomainSpec::new(2, 0.2, 0.5, None);
        assert!(matches!(initial_exponent(&m, &d, &InitialConfig::default()), Err(Error::Config(_))));
    }

    #[test]
    fn non_harmonic_map_is_rejected() {
        let m = BallMap::new("x|x|^2", 2, |x, o| {
            let r2 = x[0] * x[0] + x[1] * x[1];
            o[0] = x[0] * (1.0 + r2) / 2.0;
            o[1] = x[1] * (1.0 + r2) / 2.0;
        })
        .unwrap()
        .with_trace(BoundaryData::identity(2).unwrap())
        .with_image(crate::qc::Ellipsoid::ball(2));
        let d = standard_domain(&m).unwrap();
        assert!(matches!(bootstrap_verify(&m, &d, None, &BootstrapConfig::default()), Err(Error::InvalidParameter(_))));
    }
}
