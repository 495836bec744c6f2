//! Command-line harness: every experiment reads one JSON config (plus `--set`
//! overrides) and writes a CSV table or a JSON document.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage or configuration error.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::bootstrap::{bootstrap_verify, normalized_map, reference_of, standard_domain, BootstrapConfig, BootstrapReport};
use crate::charts::{c2_diagnostic, chart_pairs, chart_product_bound, DomainSpec};
use crate::error::{Error, Result};
use crate::extension::{oracle_harmonics, BoundaryData, FieldConfig, HarmonicField, OracleHarmonic};
use crate::poly::{Polynomial, Term};
use crate::qc::{distortion, distortion_grid, gallery_map, mori_check, mori_exponent, BallMap, JacobianSource, MoriSampler};
use crate::regularity::{bounded_gradient_check, decay_profile, holder_estimate, small_radius_bound, PairSampler, RadialGrid};
use crate::sampling::{rng, uniform_ball};
use crate::sphere::{SpherePoint, BallPoint};

pub const VERSION: &str = concat!("qclab ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Parser)]
#[command(name = "qclab", version, about = "Harmonic quasiconformal maps of the unit ball: numerical experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON experiment config; must contain `seed`.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Override a config key, e.g. `--set n=3` or `--set bootstrap.k_max=10`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Directory for output files; stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Poisson extension at sampled points.
    Extend,
    /// Jacobian of the extension at sampled points.
    Gradient,
    /// Gradient growth along a radius.
    Decay,
    /// Sampled Hölder constants of boundary data.
    Holder,
    /// Jacobian singular values and distortion of a map.
    Distortion,
    /// Mori exponent and constant of the normalized map.
    Mori,
    /// Atlas diagnostics: C2 and the chart product bound.
    Charts,
    /// The exponent ladder and the Lipschitz certificate.
    Bootstrap,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Extend => "extend",
            Command::Gradient => "gradient",
            Command::Decay => "decay",
            Command::Holder => "holder",
            Command::Distortion => "distortion",
            Command::Mori => "mori",
            Command::Charts => "charts",
            Command::Bootstrap => "bootstrap",
        }
    }
}

/// Everything an experiment reads. Unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub n: usize,
    /// Degree of the uniform quadrature rule.
    pub degree: Option<usize>,
    pub k_max: u32,
    /// Sample points for `extend`, `gradient` and `distortion`.
    pub samples: usize,
    pub pairs: usize,
    pub max_radius: f64,
    /// Gallery map name, or `zcz:C`, `perturbed:EPS`, `circle:A`.
    pub map: String,
    /// Boundary data selector; the trace of `map` when absent.
    pub data: Option<String>,
    pub atlas: Option<PathBuf>,
    pub mu: f64,
    /// Extra exponents for `holder`.
    pub mus: Vec<f64>,
    pub eta: Option<Vec<f64>>,
    pub bootstrap: BootstrapConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            n: 2,
            degree: None,
            k_max: 12,
            samples: 20,
            pairs: 10_000,
            max_radius: 0.9,
            map: "identity".into(),
            data: None,
            atlas: None,
            mu: 0.5,
            mus: Vec::new(),
            eta: None,
            bootstrap: BootstrapConfig::default(),
        }
    }
}

impl ExperimentConfig {
    /// Parses `text` (JSON), applies `KEY=VALUE` overrides and checks that a seed is given.
    pub fn load(text: Option<&str>, overrides: &[String]) -> Result<Self> {
        let mut v: Value = match text {
            Some(t) => serde_json::from_str(t)?,
            None => json!({}),
        };
        if !v.is_object() {
            return Err(Error::Config("config must be a JSON object".into()));
        }
        for o in overrides {
            let (key, raw) = o.split_once('=').ok_or_else(|| Error::Config(format!("override {o:?} is not KEY=VALUE")))?;
            let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
            set_path(&mut v, key, value)?;
        }
        if v.get("seed").is_none_or(|s| !s.is_u64()) {
            return Err(Error::Config("config needs an integer `seed`".into()));
        }
        let mut cfg: Self = serde_json::from_value(v).map_err(|e| Error::Config(e.to_string()))?;
        cfg.bootstrap.seed = cfg.seed;
        Ok(cfg)
    }

    fn field(&self) -> FieldConfig {
        FieldConfig { degree: self.degree, ..self.bootstrap.field }
    }

    fn eta(&self) -> Result<SpherePoint> {
        match &self.eta {
            Some(e) if e.len() == self.n => SpherePoint::new(e.clone()),
            Some(e) => Err(Error::DimensionMismatch { expected: self.n, got: e.len() }),
            None => Ok(SpherePoint::axis(self.n, 0)),
        }
    }
}

fn set_path(v: &mut Value, key: &str, value: Value) -> Result<()> {
    let mut cur = v;
    let parts: Vec<&str> = key.split('.').collect();
    for p in &parts[..parts.len() - 1] {
        let obj = cur.as_object_mut().ok_or_else(|| Error::Config(format!("{key}: {p} is not an object")))?;
        cur = obj.entry(p.to_string()).or_insert_with(|| json!({}));
    }
    cur.as_object_mut()
        .ok_or_else(|| Error::Config(format!("{key}: parent is not an object")))?
        .insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

/// One output file.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub body: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub artifacts: Vec<Artifact>,
    /// False when a verification failed; the exit code is then 1.
    pub passed: bool,
}

#[derive(Debug, Default)]
struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self { header: header.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    fn csv(&self, cmd: &str) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        let body = String::from_utf8(w.into_inner().map_err(|e| Error::Io(e.into_error()))?).expect("csv is utf-8");
        Ok(format!("# {VERSION} {cmd}\n{body}"))
    }

    fn json(&self) -> Value {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| {
                let obj = self.header.iter().zip(r).map(|(h, c)| (h.clone(), cell_value(c))).collect();
                Value::Object(obj)
            })
            .collect();
        Value::Array(rows)
    }
}

fn cell_value(c: &str) -> Value {
    match c.parse::<f64>() {
        Ok(f) if f.is_finite() => json!(f),
        _ if c == "true" || c == "false" => json!(c == "true"),
        _ => json!(c),
    }
}

fn num(x: f64) -> String {
    format!("{x:e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn coords(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("{prefix}{i}")).collect()
}

fn emit(cmd: &str, format: Format, table: Table, summary: Value) -> Result<Vec<Artifact>> {
    Ok(match format {
        Format::Csv => vec![
            Artifact { name: format!("{cmd}.csv"), body: table.csv(cmd)? },
            Artifact { name: format!("{cmd}.json"), body: json_doc(cmd, summary)? },
        ],
        Format::Json => {
            let mut s = summary;
            s["rows"] = table.json();
            vec![Artifact { name: format!("{cmd}.json"), body: json_doc(cmd, s)? }]
        }
    })
}

fn json_doc(cmd: &str, mut v: Value) -> Result<String> {
    if !v.is_object() {
        v = json!({ "result": v });
    }
    let mut doc = serde_json::Map::new();
    doc.insert("version".into(), json!(VERSION));
    doc.insert("command".into(), json!(cmd));
    for (k, val) in v.as_object().expect("object").clone() {
        doc.insert(k, val);
    }
    Ok(serde_json::to_string_pretty(&Value::Object(doc))? + "\n")
}

fn load_map(cfg: &ExperimentConfig) -> Result<BallMap> {
    let m = gallery_map(cfg.n, &cfg.map)?;
    if m.n() != cfg.n {
        return Err(Error::Config(format!("map {} lives in dimension {}, config has n = {}", cfg.map, m.n(), cfg.n)));
    }
    Ok(m)
}

/// Boundary data named by `cfg.data`:
/// `map:NAME`, `constant:V1,V2,..`, `coordinate:J` (1-based), `power:MU` (anchored at `eta`),
/// `harmonic:DEGREE:INDEX`, or `file:PATH` holding `{"polynomial": [terms]}`.
fn load_data(cfg: &ExperimentConfig) -> Result<(BoundaryData, Option<OracleHarmonic>)> {
    let n = cfg.n;
    let Some(sel) = cfg.data.as_deref() else {
        let m = load_map(cfg)?;
        let t = m.trace().cloned().ok_or_else(|| Error::Config(format!("map {} has no trace", cfg.map)))?;
        return Ok((t, None));
    };
    let (kind, arg) = sel.split_once(':').unwrap_or((sel, ""));
    let bad = |what: &str| Error::Config(format!("bad {what} in data selector {sel:?}"));
    Ok(match kind {
        "map" => {
            let m = gallery_map(n, arg)?;
            (m.trace().cloned().ok_or_else(|| Error::Config(format!("map {arg} has no trace")))?, None)
        }
        "constant" => {
            let vals: Vec<f64> = arg.split(',').map(|s| s.trim().parse().map_err(|_| bad("value"))).collect::<Result<_>>()?;
            (BoundaryData::constant(n, vals)?, None)
        }
        "coordinate" => {
            let j: usize = arg.parse().map_err(|_| bad("index"))?;
            if j == 0 {
                return Err(bad("index"));
            }
            (BoundaryData::coordinate(n, j - 1)?, None)
        }
        "power" => {
            let mu: f64 = if arg.is_empty() { cfg.mu } else { arg.parse().map_err(|_| bad("exponent"))? };
            (BoundaryData::anchored_power(&cfg.eta()?, mu)?, None)
        }
        "harmonic" => {
            let (d, i) = arg.split_once(':').ok_or_else(|| bad("degree:index"))?;
            let d: u32 = d.parse().map_err(|_| bad("degree"))?;
            let i: usize = i.parse().map_err(|_| bad("index"))?;
            let h = oracle_harmonics(n, d)?.into_iter().nth(i).ok_or_else(|| bad("index"))?;
            (h.data(), Some(h))
        }
        "file" => {
            #[derive(Deserialize)]
            struct PolyFile {
                polynomial: Vec<Term>,
            }
            let f: PolyFile = serde_json::from_str(&fs::read_to_string(arg)?)?;
            (BoundaryData::polynomial(Polynomial::from_terms(n, &f.polynomial))?.with_label(arg.to_string()), None)
        }
        _ => return Err(Error::Config(format!("unknown data selector {sel:?}"))),
    })
}

fn sample_points(cfg: &ExperimentConfig) -> Vec<BallPoint> {
    let mut r = rng(cfg.seed);
    (0..cfg.samples).map(|_| uniform_ball(&mut r, cfg.n, cfg.max_radius)).collect()
}

fn load_domain(cfg: &ExperimentConfig, map: &BallMap) -> Result<DomainSpec> {
    match &cfg.atlas {
        Some(p) => DomainSpec::from_json(&fs::read_to_string(p)?, map.trace()),
        None => standard_domain(map),
    }
}

fn cmd_extend(cfg: &ExperimentConfig, format: Format) -> Result<Outcome> {
    let (data, oracle) = load_data(cfg)?;
    let field = HarmonicField::with_config(data, cfg.field())?;
    let pts = sample_points(cfg);
    let evals = field.extend_many(&pts)?;
    let m = field.data().arity();
    let mut header = coords("x", cfg.n);
    header.extend(coords("u", m));
    if oracle.is_some() {
        header.extend(["oracle".to_string(), "error".to_string()]);
    }
    header.push("accurate".into());
    let mut t = Table::new(header);
    let mut worst: f64 = 0.0;
    for (x, e) in pts.iter().zip(&evals) {
        let mut row: Vec<String> = x.coords().iter().map(|v| num(*v)).collect();
        row.extend(e.value.iter().map(|v| num(*v)));
        if let Some(h) = &oracle {
            let exact = h.value(x.coords());
            worst = worst.max((exact - e.value[0]).abs());
            row.extend([num(exact), num((exact - e.value[0]).abs())]);
        }
        row.push(e.accurate.to_string());
        t.push(row);
    }
    let summary = json!({
        "data": field.data().label(), "points": pts.len(), "degree": field.config().degree_for(cfg.n),
        "max_oracle_error": oracle.as_ref().map(|_| worst),
    });
    Ok(Outcome { artifacts: emit("extend", format, t, summary)?, passed: true })
}

fn cmd_gradient(cfg: &ExperimentConfig, format: Format) -> Result<Outcome> {
    let (data, oracle) = load_data(cfg)?;
    let field = HarmonicField::with_config(data, cfg.field())?;
    let pts = sample_points(cfg);
    let grads = field.gradient_many(&pts)?;
    let (m, n) = (field.data().arity(), cfg.n);
    let mut header = coords("x", n);
    for j in 1..=m {
        header.extend((1..=n).map(|k| format!("du{j}_dx{k}")));
    }
    header.push("norm".into());
    if oracle.is_some() {
        header.push("error".into());
    }
    header.push("accurate".into());
    let mut t = Table::new(header);
    let mut worst: f64 = 0.0;
    for (x, g) in pts.iter().zip(&grads) {
        let mut row: Vec<String> = x.coords().iter().map(|v| num(*v)).collect();
        for j in 0..m {
            row.extend((0..n).map(|k| num(g.jacobian[(j, k)])));
        }
        row.push(num(g.operator_norm()));
        if let Some(h) = &oracle {
            let exact = h.gradient(x.coords());
            let err = (0..n).map(|k| (exact[k] - g.jacobian[(0, k)]).abs()).fold(0.0, f64::max);
            worst = worst.max(err);
            row.push(num(err));
        }
        row.push(g.accurate.to_string());
        t.push(row);
    }
    let summary = json!({ "data": field.data().label(), "points": pts.len(), "max_oracle_error": oracle.as_ref().map(|_| worst) });
    Ok(Outcome { artifacts: emit("gradient", format, t, summary)?, passed: true })
}

fn cmd_decay(cfg: &ExperimentConfig, format: Format) -> Result<Outcome> {
    let cfg = &ExperimentConfig { data: cfg.data.clone().or_else(|| Some("power:".into())), ..cfg.clone() };
    let (data, _) = load_data(cfg)?;
    let field = HarmonicField::with_config(data, cfg.field())?;
    let eta = cfg.eta()?;
    let grid = RadialGrid::dyadic(cfg.k_max).merge(&RadialGrid::linear(0.45, 4)?);
    if cfg.mu > 1.0 {
        let b = bounded_gradient_check(&field, &eta, cfg.mu, &grid)?;
        let mut t = Table::new(["r", "grad_norm"]);
        for (r, g) in &b.samples {
            t.push(vec![num(*r), num(*g)]);
        }
        let summary = json!({
            "data": field.data().label(), "eta": eta.coords(), "mu": cfg.mu, "sup_gradient": b.sup_gradient,
            "tail_ratio": b.tail_ratio, "tail_bounded": b.tail_bounded, "accurate": b.accurate,
        });
        return Ok(Outcome { artifacts: emit("decay", format, t, summary)?, passed: b.tail_bounded });
    }
    let p = decay_profile(&field, &eta, cfg.mu, &grid)?;
    let mut t = Table::new(["r", "grad_norm", "normalized", "majorant"]);
    for row in &p.rows {
        t.push(vec![num(row.r), num(row.grad_norm), num(row.normalized), opt(row.majorant)]);
    }
    let m = field.data().holder().map(|h| h.constant);
    let small = m.map(|m| small_radius_bound(cfg.n, cfg.mu, m));
    let below_half = p.sup_below(0.5);
    let passed = small.is_none_or(|b| below_half <= b);
    let summary = json!({
        "data": field.data().label(), "eta": eta.coords(), "mu": cfg.mu, "empirical_c": p.empirical_c,
        "fitted_slope": p.fitted_slope, "sup_below_half": below_half, "small_radius_bound": small, "accurate": p.accurate,
    });
    Ok(Outcome { artifacts: emit("decay", format, t, summary)?, passed })
}

fn cmd_holder(cfg: &ExperimentConfig, format: Format) -> Result<Outcome> {
    let (data, _) = load_data(cfg)?;
    let mut mus = vec![cfg.mu];
    mus.extend(cfg.mus.iter().copied());
    let sampler = PairSampler::Uniform { pairs: cfg.pairs, seed: cfg.seed };
    let mut t = Table::new(["exponent", "constant", "pairs"]);
    let mut all = Vec::new();
    for mu in mus {
        let e = holder_estimate(&data, mu, &sampler)?;
        t.push(vec![num(mu), num(e.constant), e.pair_count.to_string()]);
        all.push(e);
    }
    Ok(Outcome { artifacts: emit("holder", format, t, json!({ "data": data.label(), "estimates": all }))?, passed: true })
}

fn cmd_distortion(cfg: &ExperimentConfig, format: Format) -> Result<Outcome> {
    let map = load_map(cfg)?;
    let pts = distortion_grid(cfg.n, cfg.samples, cfg.max_radius, cfg.seed);
    let rep = distortion(&map, &pts, JacobianSource::Auto)?;
    let mut header = coords("x", cfg.n);
    header.extend(["sigma_max", "sigma_min", "k"].map(String::from));
    let mut t = Table::new(header);
    for s in &rep.samples {
        let mut row: Vec<String> = s.x.iter().map(|v| num(*v)).collect();
        row.extend([num(s.sigma_max), num(s.sigma_min), num(s.k)]);
        t.push(row);
    }
    let summary = json!({
        "map": map.name(), "points": pts.len(), "k_global": rep.k_global, "sup_operator_norm": rep.sup_operator_norm,
        "mori_beta": mori_exponent(rep.k_global, cfg.n)?,
    });
    Ok(Outcome { artifacts: emit("distortion", format, t, summary)?, passed: true })
}

fn cmd_mori(cfg: &ExperimentConfig, format: Format) -> Result<Outcome> {
    let map = load_map(cfg)?;
    let domain = load_domain(cfg, &map)?;
    let g = reference_of(&domain)?;
    let gm = normalized_map(&map, &g)?;
    let pts = distortion_grid(cfg.n, cfg.samples, cfg.max_radius, cfg.seed);
    let k = distortion(&gm, &pts, JacobianSource::Auto)?.k_global;
    let beta = mori_exponent(k, cfg.n)?;
    let chk = mori_check(&gm, beta, &MoriSampler { pairs: cfg.pairs, seed: cfg.seed, near_levels: 20 }, None)?;
    let mut t = Table::new(["k", "beta", "m_empirical", "violations", "pairs"]);
    t.push(vec![num(k), num(beta), num(chk.m_empirical), chk.violations.to_string(), chk.pair_count.to_string()]);
    let summary = json!({ "map": gm.name(), "reference_scale": g.scale, "k": k, "check": chk });
    Ok(Outcome { artifacts: emit("mori", format, t, summary)?, passed: chk.violations == 0 })
}

fn cmd_charts(cfg: &ExperimentConfig, format: Format) -> Result<Outcome> {
    let map = load_map(cfg)?;
    let domain = load_domain(cfg, &map)?;
    let mut header = vec!["chart".to_string(), "kind".into()];
    header.extend(coords("anchor", cfg.n));
    header.extend(["alpha", "C2", "radius", "c2_sampled", "pairs", "violations"].map(String::from));
    let mut t = Table::new(header);
    let mut total = 0;
    for (i, c) in domain.charts.iter().enumerate() {
        c.validate(1e-8)?;
        let seed = cfg.seed.wrapping_add(i as u64);
        let sampled = c2_diagnostic(c, cfg.pairs.min(2000), seed)?;
        let pairs = chart_pairs(c, cfg.pairs, seed);
        let mut bad = 0;
        for (z, w) in &pairs {
            let (lhs, rhs) = chart_product_bound(c, z, w)?;
            if lhs > rhs * (1.0 + 1e-12) + 1e-15 {
                bad += 1;
            }
        }
        total += bad;
        let mut row = vec![i.to_string(), c.kind_name().to_string()];
        row.extend(c.anchor().iter().map(|v| num(*v)));
        row.extend([num(c.alpha()), num(c.c2()), num(c.radius()), num(sampled), pairs.len().to_string(), bad.to_string()]);
        t.push(row);
    }
    let summary = json!({
        "map": map.name(), "charts": domain.charts.len(), "delta": domain.delta, "rho": domain.rho,
        "lipschitz_G": domain.lipschitz_g, "violations": total,
    });
    Ok(Outcome { artifacts: emit("charts", format, t, summary)?, passed: total == 0 })
}

fn stage_table(report: &BootstrapReport, k: usize) -> Table {
    let n = report.n;
    let mut header = coords("eta", n);
    header.extend(
        ["chart", "m_empirical", "m_theory", "normal_exponent", "gradient_c", "fitted_slope", "map_exponent", "violations", "accurate", "failures"]
            .map(String::from),
    );
    let mut t = Table::new(header);
    for r in &report.stages[k].per_eta {
        let mut row: Vec<String> = r.eta.iter().map(|v| num(*v)).collect();
        let violations = r.normal_violations + r.majorant_violations + r.qc_violations + r.radial_violations;
        row.extend([
            r.chart.clone(),
            num(r.m_empirical),
            num(r.m_theory),
            opt(r.normal_exponent),
            num(r.gradient_c),
            opt(r.fitted_slope),
            opt(r.map_exponent),
            violations.to_string(),
            r.accurate.to_string(),
            r.failures.join("; "),
        ]);
        t.push(row);
    }
    t
}

fn cmd_bootstrap(cfg: &ExperimentConfig, format: Format) -> Result<Outcome> {
    let map = load_map(cfg)?;
    let domain = load_domain(cfg, &map)?;
    let bcfg = BootstrapConfig { field: cfg.field(), k_max: cfg.k_max, ..cfg.bootstrap };
    let etas = cfg.eta.as_ref().map(|_| cfg.eta().map(|e| vec![e])).transpose()?;
    let report = bootstrap_verify(&map, &domain, etas.as_deref(), &bcfg)?;
    let mut artifacts = vec![Artifact { name: "bootstrap.json".into(), body: json_doc("bootstrap", serde_json::to_value(&report)?)? }];
    if format == Format::Csv {
        let mut t = Table::new(["k", "mu_in", "mu_out", "c_in", "m_measured", "m_theory", "gradient_c", "propagated_c", "c_out", "passed"]);
        for s in &report.stages {
            t.push(vec![
                s.k.to_string(),
                num(s.mu_in),
                num(s.mu_out),
                num(s.c_in),
                num(s.m_measured),
                num(s.m_theory),
                num(s.gradient_c),
                num(s.propagated_c),
                opt(s.c_out),
                s.passed.to_string(),
            ]);
        }
        artifacts.push(Artifact { name: "bootstrap.csv".into(), body: t.csv("bootstrap")? });
        for k in 0..report.stages.len() {
            artifacts.push(Artifact { name: format!("bootstrap_stage{k}.csv"), body: stage_table(&report, k).csv("bootstrap")? });
        }
    }
    Ok(Outcome { artifacts, passed: report.passed })
}

/// Runs one subcommand on an already loaded config.
pub fn run(command: Command, cfg: &ExperimentConfig, format: Format) -> Result<Outcome> {
    match command {
        Command::Extend => cmd_extend(cfg, format),
        Command::Gradient => cmd_gradient(cfg, format),
        Command::Decay => cmd_decay(cfg, format),
        Command::Holder => cmd_holder(cfg, format),
        Command::Distortion => cmd_distortion(cfg, format),
        Command::Mori => cmd_mori(cfg, format),
        Command::Charts => cmd_charts(cfg, format),
        Command::Bootstrap => cmd_bootstrap(cfg, format),
    }
}

fn write_outcome(out: Option<&Path>, outcome: &Outcome) -> Result<()> {
    match out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            for a in &outcome.artifacts {
                fs::write(dir.join(&a.name), &a.body)?;
            }
        }
        None => {
            for a in &outcome.artifacts {
                print!("{}", a.body);
            }
        }
    }
    Ok(())
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var("HRL_THREADS") {
        let t: usize = v.parse().map_err(|_| Error::Config(format!("HRL_THREADS={v:?} is not a thread count")))?;
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global().map_err(|e| Error::Config(e.to_string()))?;
    }
    Ok(())
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = (|| {
        configure_threads()?;
        let text = cli.config.as_ref().map(fs::read_to_string).transpose()?;
        let cfg = ExperimentConfig::load(text.as_deref(), &cli.set)?;
        let outcome = run(cli.command, &cfg, cli.format)?;
        write_outcome(cli.out.as_deref(), &outcome)?;
        Ok::<_, Error>(outcome.passed)
    })();
    match result {
        Ok(true) => 0,
        Ok(false) => {
            eprintln!("{}: verification failed", cli.command.name());
            1
        }
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_is_mandatory() {
        assert!(matches!(ExperimentConfig::load(Some("{}"), &[]), Err(Error::Config(_))));
        assert!(matches!(ExperimentConfig::load(Some(r#"{"seed": 1, "bogus": 2}"#), &[]), Err(Error::Config(_))));
        let c = ExperimentConfig::load(None, &["seed=7".into(), "n=3".into(), "bootstrap.k_max=9".into(), "map=rotation".into()]).unwrap();
        assert_eq!((c.seed, c.n, c.bootstrap.k_max, c.map.as_str(), c.bootstrap.seed), (7, 3, 9, "rotation", 7));
    }

    #[test]
    fn extend_identity_reproduces_points() {
        let cfg = ExperimentConfig { samples: 10, ..Default::default() };
        let out = run(Command::Extend, &cfg, Format::Json).unwrap();
        let v: Value = serde_json::from_str(&out.artifacts[0].body).unwrap();
        for row in v["rows"].as_array().unwrap() {
            for i in 1..=2 {
                let (x, u) = (row[format!("x{i}")].as_f64().unwrap(), row[format!("u{i}")].as_f64().unwrap());
                assert!((x - u).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn constant_data_gives_constant_column() {
        let cfg = ExperimentConfig { samples: 5, data: Some("constant:2.5".into()), ..Default::default() };
        let out = run(Command::Extend, &cfg, Format::Csv).unwrap();
        let body = &out.artifacts[0].body;
        assert!(body.starts_with("# qclab "));
        for line in body.lines().skip(2) {
            let u: f64 = line.split(',').nth(2).unwrap().parse().unwrap();
            assert!((u - 2.5).abs() < 1e-12);
        }
    }

    #[test]
    fn bad_selectors_are_config_errors() {
        for d in ["nope", "coordinate:0", "harmonic:2", "power:x"] {
            let cfg = ExperimentConfig { data: Some(d.into()), ..Default::default() };
            assert!(run(Command::Extend, &cfg, Format::Csv).is_err(), "{d}");
        }
        assert_eq!(main_with_args(["qclab", "extend", "--set", "seed=1", "--set", "map=nothing"]), 2);
        assert_eq!(main_with_args(["qclab", "frobnicate"]), 2);
    }
}
