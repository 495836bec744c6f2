//! Poisson extension `u = P[F]` of boundary data and its Jacobian.
//!
//! Points whose kernel is resolved by the uniform rule (`degree * (1 - r)`
//! large enough) use it directly. Everything else is integrated on a rule graded
//! toward the kernel peak `x/|x|`, with node offsets `xi - eta` kept exactly so
//! `x - xi` and `|x - xi|^2` never suffer cancellation.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::KernelPoint;
use crate::poly::Polynomial;
use crate::sphere::{anchored_rule, check_dimension, dist, make_quadrature, AnchoredConfig, BallPoint, QuadratureRule, SpherePoint};
use crate::sum::{KahanSum, KahanVec};

pub type EvalFn = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;

/// Known Hölder data `|F(xi) - F(eta)| <= constant |xi - eta|^exponent`,
/// for all pairs or, with `anchor`, for pairs through that point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolderMeta {
    pub exponent: f64,
    pub constant: f64,
    #[serde(default)]
    pub anchor: Option<Vec<f64>>,
}

/// A map `F: S^{n-1} -> R^m`.
#[derive(Clone)]
pub struct BoundaryData {
    n: usize,
    arity: usize,
    label: String,
    eval: EvalFn,
    holder: Option<HolderMeta>,
}

impl fmt::Debug for BoundaryData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BoundaryData")
            .field("n", &self.n)
            .field("arity", &self.arity)
            .field("label", &self.label)
            .field("holder", &self.holder)
            .finish()
    }
}

impl BoundaryData {
    pub fn new<F>(n: usize, arity: usize, label: impl Into<String>, f: F) -> Result<Self>
    where
        F: Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    {
        check_dimension(n)?;
        if arity == 0 {
            return Err(Error::InvalidParameter("boundary data needs at least one component".into()));
        }
        Ok(Self { n, arity, label: label.into(), eval: Arc::new(f), holder: None })
    }

    pub fn scalar<F>(n: usize, label: impl Into<String>, f: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        Self::new(n, 1, label, move |x, out| out[0] = f(x))
    }

    pub fn constant(n: usize, values: Vec<f64>) -> Result<Self> {
        let arity = values.len();
        let holder = HolderMeta { exponent: 1.0, constant: 0.0, anchor: None };
        Ok(Self::new(n, arity, "constant", move |_, out| out.copy_from_slice(&values))?.with_holder(holder))
    }

    /// `F(xi) = xi_j`.
    pub fn coordinate(n: usize, j: usize) -> Result<Self> {
        if j >= n {
            return Err(Error::InvalidParameter(format!("coordinate {j} out of range for n = {n}")));
        }
        let holder = HolderMeta { exponent: 1.0, constant: 1.0, anchor: None };
        Ok(Self::scalar(n, format!("x{}", j + 1), move |x| x[j])?.with_holder(holder))
    }

    /// The trace `F(xi) = xi` of the identity map.
    pub fn identity(n: usize) -> Result<Self> {
        let holder = HolderMeta { exponent: 1.0, constant: 1.0, anchor: None };
        Ok(Self::new(n, n, "identity", |x, out| out.copy_from_slice(x))?.with_holder(holder))
    }

    /// `F(xi) = |xi - eta|^mu`, anchored Hölder with constant one.
    pub fn anchored_power(eta: &SpherePoint, mu: f64) -> Result<Self> {
        if !(mu > 0.0) {
            return Err(Error::InvalidParameter(format!("exponent must be positive, got {mu}")));
        }
        let e = eta.coords().to_vec();
        let holder = HolderMeta { exponent: mu, constant: 1.0, anchor: Some(e.clone()) };
        Ok(Self::scalar(eta.dim(), format!("|xi-eta|^{mu}"), move |x| dist(x, &e).powf(mu))?.with_holder(holder))
    }

    pub fn polynomial(p: Polynomial) -> Result<Self> {
        let n = p.nvars();
        Self::scalar(n, "polynomial", move |x| p.eval(x))
    }

    pub fn with_holder(mut self, meta: HolderMeta) -> Self {
        self.holder = Some(meta);
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn holder(&self) -> Option<&HolderMeta> {
        self.holder.as_ref()
    }

    /// The point where the data is known to be least regular, if any.
    pub fn singular_anchor(&self) -> Option<SpherePoint> {
        self.holder.as_ref().and_then(|h| h.anchor.clone()).and_then(|a| SpherePoint::new(a).ok())
    }

    #[inline]
    pub fn eval_into(&self, xi: &[f64], out: &mut [f64]) {
        (self.eval)(xi, out)
    }

    pub fn eval(&self, xi: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.arity];
        (self.eval)(xi, &mut out);
        out
    }

    pub fn eval_at(&self, xi: &SpherePoint) -> Vec<f64> {
        self.eval(xi.coords())
    }

    /// Component `j` as scalar data; anchored Hölder metadata carries over.
    pub fn component(&self, j: usize) -> Result<Self> {
        if j >= self.arity {
            return Err(Error::InvalidParameter(format!("component {j} out of range for arity {}", self.arity)));
        }
        let inner = self.eval.clone();
        let m = self.arity;
        let mut out = Self::new(self.n, 1, format!("{}[{j}]", self.label), move |x, o| {
            with_buffer(m, |v| {
                inner(x, v);
                o[0] = v[j];
            })
        })?;
        out.holder = self.holder.clone();
        Ok(out)
    }

    /// `xi -> g(F(xi))` with `g: R^m -> R^k`.
    pub fn map_values<G>(&self, arity: usize, label: impl Into<String>, g: G) -> Result<Self>
    where
        G: Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    {
        let inner = self.eval.clone();
        let m = self.arity;
        Self::new(self.n, arity, label, move |x, o| {
            with_buffer(m, |v| {
                inner(x, v);
                g(v, o);
            })
        })
    }

    /// `xi -> F(R xi)` for an orthogonal `R` (row-major), so `u_new(x) = u(R x)`.
    pub fn precomposed(&self, rot: &DMatrix<f64>) -> Result<Self> {
        let inner = self.eval.clone();
        let n = self.n;
        let anchor_rot = rot.clone();
        let rot = rot.clone();
        let mut out = Self::new(n, self.arity, format!("{}∘R", self.label), move |x, o| {
            let y: Vec<f64> = (0..n).map(|i| (0..n).map(|k| rot[(i, k)] * x[k]).sum()).collect();
            inner(&y, o);
        })?;
        if let Some(h) = &self.holder {
            let anchor = h.anchor.as_ref().map(|a| (0..n).map(|k| (0..n).map(|i| anchor_rot[(i, k)] * a[i]).sum()).collect());
            out.holder = Some(HolderMeta { anchor, ..h.clone() });
        }
        Ok(out)
    }
}

#[inline]
fn with_buffer<R>(m: usize, f: impl FnOnce(&mut [f64]) -> R) -> R {
    if m <= 8 {
        let mut buf = [0.0; 8];
        f(&mut buf[..m])
    } else {
        f(&mut vec![0.0; m])
    }
}

/// Discretization settings for [`HarmonicField`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FieldConfig {
    /// Degree of the uniform rule; `None` picks 256 / 48 / 32 for n = 2 / 3 / 4.
    pub degree: Option<usize>,
    /// The uniform rule is used only when `degree * (1 - r) >= resolution`.
    pub resolution: f64,
    /// Beyond this radius the gradient is always subtracted at `x/|x|`.
    pub subtract_radius: f64,
    /// Gaps below this are computed but flagged.
    pub min_gap: f64,
    pub anchored: AnchoredConfig,
}

impl Default for FieldConfig {
    fn default() -> Self {
        Self { degree: None, resolution: 28.0, subtract_radius: 0.9, min_gap: 1e-13, anchored: AnchoredConfig::default() }
    }
}

impl FieldConfig {
    pub fn degree_for(&self, n: usize) -> usize {
        self.degree.unwrap_or(match n {
            2 => 256,
            3 => 48,
            _ => 32,
        })
    }
}

/// Which rule produced a value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Uniform,
    Anchored,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub value: Vec<f64>,
    pub method: Method,
    pub accurate: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradientEvaluation {
    /// `m x n`, row `j` is the gradient of component `j`.
    pub jacobian: DMatrix<f64>,
    pub method: Method,
    pub accurate: bool,
    pub subtracted: bool,
}

impl GradientEvaluation {
    pub fn row_norm(&self, j: usize) -> f64 {
        self.jacobian.row(j).norm()
    }

    pub fn operator_norm(&self) -> f64 {
        let svd = self.jacobian.clone().svd(false, false);
        svd.singular_values.max()
    }
}

enum Plan {
    Uniform,
    /// Rule anchored at `center`; `shift = center - x/|x|` when the kernel peak is slightly off.
    Anchored { rule: QuadratureRule, shift: Option<Vec<f64>> },
}

/// The Poisson extension of `data`, evaluated by quadrature.
#[derive(Debug, Clone)]
pub struct HarmonicField {
    data: BoundaryData,
    rule: QuadratureRule,
    cfg: FieldConfig,
}

impl HarmonicField {
    pub fn new(data: BoundaryData) -> Result<Self> {
        Self::with_config(data, FieldConfig::default())
    }

    pub fn with_config(data: BoundaryData, cfg: FieldConfig) -> Result<Self> {
        let rule = make_quadrature(data.n(), cfg.degree_for(data.n()))?;
        Ok(Self { data, rule, cfg })
    }

    pub fn data(&self) -> &BoundaryData {
        &self.data
    }

    pub fn rule(&self) -> &QuadratureRule {
        &self.rule
    }

    pub fn config(&self) -> &FieldConfig {
        &self.cfg
    }

    fn check(&self, x: &BallPoint) -> Result<()> {
        if x.dim() != self.data.n() {
            return Err(Error::DimensionMismatch { expected: self.data.n(), got: x.dim() });
        }
        Ok(())
    }

    fn uniform_ok(&self, x: &BallPoint) -> bool {
        self.rule.degree() as f64 * x.gap() >= self.cfg.resolution
    }

    /// Picks the rule for `x`, preferring `hint` (a point where the data is singular
    /// or the caller's subtraction anchor) when the kernel peak sits close to it.
    fn plan(&self, x: &BallPoint, hint: Option<&SpherePoint>) -> Result<Plan> {
        let gap = x.gap();
        let dir = x.direction();
        if let Some(h) = hint {
            let near = match &dir {
                None => true,
                Some(d) => dist(d.coords(), h.coords()) <= 0.25 * gap,
            };
            if near {
                let rule = anchored_rule(h, gap, &self.cfg.anchored)?;
                let shift = dir.map(|d| h.coords().iter().zip(d.coords()).map(|(a, b)| a - b).collect::<Vec<_>>());
                let shift = shift.filter(|s| s.iter().any(|v| v.abs() > 1e-15));
                return Ok(Plan::Anchored { rule, shift });
            }
        }
        if self.uniform_ok(x) {
            return Ok(Plan::Uniform);
        }
        let d = dir.expect("gap < 1 implies x != 0");
        Ok(Plan::Anchored { rule: anchored_rule(&d, gap, &self.cfg.anchored)?, shift: None })
    }

    fn accurate(&self, x: &BallPoint) -> bool {
        x.gap() >= self.cfg.min_gap
    }

    fn hint_for(&self, x: &BallPoint) -> Option<SpherePoint> {
        self.data.singular_anchor().filter(|a| match x.direction() {
            None => true,
            Some(d) => self.uniform_ok(x) || dist(d.coords(), a.coords()) <= 0.25 * x.gap(),
        })
    }

    /// Runs `visit(weight, diff = x - xi, d, xi)` over the nodes of `plan`.
    fn sweep<V: FnMut(f64, &[f64], f64, &[f64])>(&self, kp: &KernelPoint, plan: &Plan, mut visit: V) {
        let n = kp.n;
        let mut diff = vec![0.0; n];
        match plan {
            Plan::Uniform => {
                for (xi, w) in self.rule.iter() {
                    let d = kp.geometry(xi, &mut diff);
                    visit(w, &diff, d, xi);
                }
            }
            Plan::Anchored { rule, shift } => {
                let mut v = vec![0.0; n];
                for i in 0..rule.len() {
                    let off = rule.offset(i).expect("anchored rule keeps offsets");
                    let xi = rule.node(i);
                    let d = match (shift, kp.dir.is_some()) {
                        (_, false) => kp.geometry(xi, &mut diff),
                        (None, true) => kp.geometry_anchored(off, rule.chord2(i).unwrap(), &mut diff),
                        (Some(s), true) => {
                            for ((vi, o), si) in v.iter_mut().zip(off).zip(s) {
                                *vi = o + si;
                            }
                            let v2 = v.iter().map(|a| a * a).sum();
                            kp.geometry_anchored(&v, v2, &mut diff)
                        }
                    };
                    visit(rule.weight(i), &diff, d, xi);
                }
            }
        }
    }

    /// `u(x) = int P(x, xi) F(xi) dsigma(xi)`.
    pub fn extend(&self, x: &BallPoint) -> Result<Evaluation> {
        self.check(x)?;
        let hint = self.hint_for(x);
        let plan = self.plan(x, hint.as_ref())?;
        let kp = KernelPoint::new(x);
        let m = self.data.arity();
        let mut acc = KahanVec::zeros(m);
        let mut f = vec![0.0; m];
        self.sweep(&kp, &plan, |w, _, d, xi| {
            self.data.eval_into(xi, &mut f);
            let wp = w * kp.poisson(d);
            for (j, fj) in f.iter().enumerate() {
                acc.add(j, wp * fj);
            }
        });
        let value = acc.values();
        if let Some(i) = value.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { abscissa: x.coords()[i.min(x.dim() - 1)] });
        }
        let method = if matches!(plan, Plan::Uniform) { Method::Uniform } else { Method::Anchored };
        Ok(Evaluation { value, method, accurate: self.accurate(x) })
    }

    /// Jacobian `int Q(x, xi) [F(xi) - F(eta)]^T dsigma(xi)`. Without `anchor` the
    /// plain kernel integral is used for `r <= subtract_radius` and the subtraction
    /// at `eta = x/|x|` beyond it.
    pub fn gradient(&self, x: &BallPoint, anchor: Option<&SpherePoint>) -> Result<GradientEvaluation> {
        self.check(x)?;
        if let Some(a) = anchor {
            if a.dim() != x.dim() {
                return Err(Error::DimensionMismatch { expected: x.dim(), got: a.dim() });
            }
        }
        let own;
        let eta = match anchor {
            Some(a) => Some(a),
            None if x.radius() > self.cfg.subtract_radius => {
                own = x.direction().expect("r > 0");
                Some(&own)
            }
            None => None,
        };
        let hint = match eta {
            Some(e) => Some(e.clone()),
            None => self.hint_for(x),
        };
        let plan = self.plan(x, hint.as_ref())?;
        let kp = KernelPoint::new(x);
        let (m, n) = (self.data.arity(), x.dim());
        let base = eta.map(|e| self.data.eval_at(e)).unwrap_or_else(|| vec![0.0; m]);
        let mut acc = KahanVec::zeros(m * n);
        let mut f = vec![0.0; m];
        let mut q = vec![0.0; n];
        self.sweep(&kp, &plan, |w, diff, d, xi| {
            self.data.eval_into(xi, &mut f);
            kp.gradient(diff, d, &mut q);
            for j in 0..m {
                let fj = w * (f[j] - base[j]);
                for k in 0..n {
                    acc.add(j * n + k, fj * q[k]);
                }
            }
        });
        let vals = acc.values();
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { abscissa: x.radius() });
        }
        let method = if matches!(plan, Plan::Uniform) { Method::Uniform } else { Method::Anchored };
        Ok(GradientEvaluation {
            jacobian: DMatrix::from_row_slice(m, n, &vals),
            method,
            accurate: self.accurate(x),
            subtracted: eta.is_some(),
        })
    }

    pub fn extend_many(&self, xs: &[BallPoint]) -> Result<Vec<Evaluation>> {
        xs.par_iter().map(|x| self.extend(x)).collect()
    }

    pub fn gradient_many(&self, xs: &[BallPoint]) -> Result<Vec<GradientEvaluation>> {
        xs.par_iter().map(|x| self.gradient(x, None)).collect()
    }

    /// `u(x)` for `|x| <= 1`, taking `F` itself on the sphere.
    pub fn value_closed(&self, x: &[f64]) -> Result<Vec<f64>> {
        let r = crate::sphere::norm(x);
        if r >= 1.0 - 1e-15 {
            return Ok(self.data.eval_at(&SpherePoint::new(x.to_vec())?));
        }
        Ok(self.extend(&BallPoint::new(x.to_vec())?)?.value)
    }

    /// Plain average of `F` over the uniform rule nodes.
    pub fn node_average(&self) -> Vec<f64> {
        let m = self.data.arity();
        let mut acc: Vec<KahanSum> = vec![KahanSum::new(); m];
        for (xi, w) in self.rule.iter() {
            for (a, v) in acc.iter_mut().zip(self.data.eval(xi)) {
                a.add(w * v);
            }
        }
        acc.iter().map(|a| a.value()).collect()
    }
}

/// A homogeneous harmonic polynomial and its trace on the sphere.
#[derive(Debug, Clone)]
pub struct OracleHarmonic {
    pub label: String,
    pub degree: u32,
    pub poly: Polynomial,
    partials: Vec<Polynomial>,
}

impl OracleHarmonic {
    fn new(label: String, poly: Polynomial) -> Self {
        let partials = (0..poly.nvars()).map(|i| poly.partial(i)).collect();
        Self { label, degree: poly.degree(), poly, partials }
    }

    pub fn data(&self) -> BoundaryData {
        BoundaryData::polynomial(self.poly.clone()).expect("supported dimension").with_label(self.label.clone())
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.poly.eval(x)
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        self.partials.iter().map(|p| p.eval(x)).collect()
    }
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// A basis of solid harmonics of exactly `degree`: `Re z^d, Im z^d` in the plane,
/// harmonic projections of the monomials with `x_n`-degree at most one otherwise.
pub fn oracle_harmonics(n: usize, degree: u32) -> Result<Vec<OracleHarmonic>> {
    check_dimension(n)?;
    if degree > 6 {
        return Err(Error::InvalidParameter(format!("oracle degree {degree} exceeds 6")));
    }
    if n == 2 {
        let mut re = Polynomial::zero(2);
        let mut im = Polynomial::zero(2);
        for k in 0..=degree {
            // i^k
            let c = binomial(degree, k);
            let pw = vec![degree - k, k];
            match k % 4 {
                0 => re.add_term(c, pw),
                1 => im.add_term(c, pw),
                2 => re.add_term(-c, pw),
                _ => im.add_term(-c, pw),
            }
        }
        let mut out = vec![OracleHarmonic::new(format!("Re z^{degree}"), re)];
        if degree > 0 {
            out.push(OracleHarmonic::new(format!("Im z^{degree}"), im));
        }
        return Ok(out);
    }
    let mut out = Vec::new();
    for last in 0..=degree.min(1) {
        for pw in compositions(n - 1, degree - last) {
            let mut powers = pw;
            powers.push(last);
            let label = monomial_label(&powers);
            let h = Polynomial::monomial(1.0, powers).harmonic_projection();
            out.push(OracleHarmonic::new(format!("H[{label}]"), h));
        }
    }
    Ok(out)
}

fn compositions(parts: usize, total: u32) -> Vec<Vec<u32>> {
    if parts == 1 {
        return vec![vec![total]];
    }
    let mut out = Vec::new();
    for k in (0..=total).rev() {
        for mut rest in compositions(parts - 1, total - k) {
            rest.insert(0, k);
            out.push(rest);
        }
    }
    out
}

fn monomial_label(powers: &[u32]) -> String {
    let s: Vec<String> = powers
        .iter()
        .enumerate()
        .filter(|(_, &p)| p > 0)
        .map(|(i, &p)| if p == 1 { format!("x{}", i + 1) } else { format!("x{}^{p}", i + 1) })
        .collect();
    if s.is_empty() {
        "1".into()
    } else {
        s.join(" ")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{rng, uniform_ball};

    fn bp(c: &[f64]) -> BallPoint {
        BallPoint::new(c.to_vec()).unwrap()
    }

    #[test]
    fn constant_and_coordinate_data() {
        let f = HarmonicField::new(BoundaryData::constant(3, vec![2.5]).unwrap()).unwrap();
        for x in [[0.0, 0.0, 0.0], [0.3, 0.4, 0.0], [0.0, 0.0, 0.99]] {
            assert!((f.extend(&bp(&x)).unwrap().value[0] - 2.5).abs() < 1e-12);
        }
        for j in 0..3 {
            let f = HarmonicField::new(BoundaryData::coordinate(3, j).unwrap()).unwrap();
            let x = [0.3, 0.4, 0.0];
            assert!((f.extend(&bp(&x)).unwrap().value[0] - x[j]).abs() < 1e-12);
            let g = f.gradient(&bp(&x), None).unwrap();
            for k in 0..3 {
                let e = if k == j { 1.0 } else { 0.0 };
                assert!((g.jacobian[(0, k)] - e).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn quadratic_example() {
        let p = Polynomial::from_terms(
            3,
            &[crate::poly::Term { coef: 1.0, powers: vec![2, 0, 0] }, crate::poly::Term { coef: -1.0, powers: vec![0, 2, 0] }],
        );
        let f = HarmonicField::new(BoundaryData::polynomial(p).unwrap()).unwrap();
        let x = bp(&[0.5, 0.0, 0.0]);
        assert!((f.extend(&x).unwrap().value[0] - 0.25).abs() < 1e-12);
        let g = f.gradient(&x, None).unwrap();
        assert!((g.jacobian[(0, 0)] - 1.0).abs() < 1e-10);
        assert!(g.jacobian[(0, 1)].abs() < 1e-10 && g.jacobian[(0, 2)].abs() < 1e-10);
    }

    #[test]
    fn gradient_at_origin_is_first_moment() {
        let data = BoundaryData::scalar(3, "cubic", |x| x[0] * x[0] * x[1] + 0.3 * x[2]).unwrap();
        let f = HarmonicField::new(data.clone()).unwrap();
        let g = f.gradient(&BallPoint::origin(3), None).unwrap();
        for k in 0..3 {
            let m = 3.0 * f.rule().integrate(|xi| xi[k] * data.eval(xi)[0]);
            assert!((g.jacobian[(0, k)] - m).abs() < 1e-12);
        }
    }

    #[test]
    fn oracle_bases() {
        let h = oracle_harmonics(2, 3).unwrap();
        let x = [0.3, -0.4];
        assert!((h[0].value(&x) - (x[0].powi(3) - 3.0 * x[0] * x[1] * x[1])).abs() < 1e-15);
        assert!((h[1].value(&x) - (3.0 * x[0] * x[0] * x[1] - x[1].powi(3))).abs() < 1e-15);
        let h1 = oracle_harmonics(3, 1).unwrap();
        assert_eq!(h1.len(), 3);
        for d in 0..=4u32 {
            let hs = oracle_harmonics(3, d).unwrap();
            assert_eq!(hs.len(), (2 * d + 1) as usize);
            let h4 = oracle_harmonics(4, d).unwrap();
            assert_eq!(h4.len(), ((d + 1) * (d + 1)) as usize);
        }
        // x1^2 - x2^2 lies in the span; x1 x2 is itself a member
        let h2 = oracle_harmonics(3, 2).unwrap();
        let find = |l: &str| h2.iter().find(|h| h.label == l).unwrap();
        let y = [0.2, 0.7, -0.1];
        let diff = find("H[x1^2]").value(&y) - find("H[x2^2]").value(&y);
        assert!((diff - (y[0] * y[0] - y[1] * y[1])).abs() < 1e-15);
        assert!((find("H[x1 x2]").value(&y) - y[0] * y[1]).abs() < 1e-15);
        let z = -(find("H[x1^2]").value(&y) + find("H[x2^2]").value(&y)) * 3.0;
        assert!((z - (2.0 * y[2] * y[2] - y[0] * y[0] - y[1] * y[1])).abs() < 1e-14);
        assert!(oracle_harmonics(3, 7).is_err());
    }

    #[test]
    fn near_boundary_linear_data() {
        let eta = SpherePoint::new(vec![0.2, -0.5, 0.8]).unwrap();
        let f = HarmonicField::new(BoundaryData::coordinate(3, 0).unwrap()).unwrap();
        for k in [4, 10, 20, 30] {
            let x = BallPoint::at_gap(&eta, 2f64.powi(-k)).unwrap();
            let u = f.extend(&x).unwrap();
            assert_eq!(u.method, Method::Anchored);
            assert!((u.value[0] - x.coords()[0]).abs() < 1e-11, "k={k}");
            let g = f.gradient(&x, None).unwrap();
            assert!(g.subtracted);
            assert!((g.jacobian[(0, 0)] - 1.0).abs() < 1e-9, "k={k}: {}", g.jacobian);
        }
    }

    #[test]
    fn mean_value_and_subtraction() {
        let data = BoundaryData::scalar(3, "smooth", |x| (x[0] + 2.0 * x[1]).exp() * x[2]).unwrap();
        let f = HarmonicField::new(data).unwrap();
        let u0 = f.extend(&BallPoint::origin(3)).unwrap().value[0];
        assert!((u0 - f.node_average()[0]).abs() < 1e-10);
        let mut r = rng(11);
        for _ in 0..10 {
            let x = uniform_ball(&mut r, 3, 0.8);
            let plain = f.gradient(&x, None).unwrap().jacobian;
            let eta = crate::sampling::uniform_sphere(&mut r, 3);
            let sub = f.gradient(&x, Some(&eta)).unwrap().jacobian;
            assert!((plain - sub).norm() < 1e-7);
        }
    }

    #[test]
    fn anchored_power_data_on_its_ray() {
        // u(r eta) for |xi - eta|^2 = 2 - 2<xi, eta> is 2 - 2r
        let eta = SpherePoint::new(vec![0.0, 0.6, 0.8]).unwrap();
        let f = HarmonicField::new(BoundaryData::anchored_power(&eta, 2.0).unwrap()).unwrap();
        for gap in [0.7, 0.1, 1e-4, 1e-9] {
            let x = BallPoint::at_gap(&eta, gap).unwrap();
            let u = f.extend(&x).unwrap().value[0];
            assert!((u - 2.0 * gap).abs() < 1e-12 * (1.0 + 2.0 * gap) + 1e-15, "gap={gap}: {u}");
            let g = f.gradient(&x, Some(&eta)).unwrap();
            for k in 0..3 {
                assert!((g.jacobian[(0, k)] + 2.0 * eta.coords()[k]).abs() < 1e-9, "gap={gap}");
            }
        }
    }

    #[test]
    fn rejects_wrong_dimension() {
        let f = HarmonicField::new(BoundaryData::coordinate(2, 0).unwrap()).unwrap();
        assert!(f.extend(&BallPoint::origin(3)).is_err());
        assert!(BoundaryData::coordinate(2, 2).is_err());
    }
}
