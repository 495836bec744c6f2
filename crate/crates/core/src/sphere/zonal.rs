use std::f64::consts::PI;

use super::gauss::{gauss_jacobi_symmetric, gauss_legendre_interval};
use super::rule::AnchoredConfig;
use crate::error::{Error, Result};
use crate::sum::KahanSum;

/// The density `c_n (1 - t^2)^{(n-3)/2}` of `<xi, eta>` under normalized surface measure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZonalWeight {
    pub n: usize,
    pub exponent: f64,
    pub c_n: f64,
}

impl ZonalWeight {
    /// `c_n` is fixed by integrating the weight numerically: with `t = sin(phi)` the
    /// integral becomes `int cos^{n-2}(phi)` over `[-pi/2, pi/2]`, an entire integrand.
    pub fn new(n: usize) -> Result<Self> {
        super::check_dimension(n)?;
        let (phi, w) = gauss_legendre_interval(48, -0.5 * PI, 0.5 * PI);
        let total: KahanSum = phi.iter().zip(&w).map(|(p, w)| w * p.cos().powi(n as i32 - 2)).collect();
        Ok(Self { n, exponent: 0.5 * (n as f64 - 3.0), c_n: 1.0 / total.value() })
    }

    pub fn density(&self, t: f64) -> f64 {
        self.c_n * (1.0 - t * t).powf(self.exponent)
    }
}

/// One polar-angle node measured from the pole `eta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZonalNode {
    pub theta: f64,
    /// `<xi, eta> = cos(theta)`
    pub cos: f64,
    pub sin: f64,
    /// `1 - cos(theta)`, computed without cancellation
    pub one_minus_cos: f64,
}

impl ZonalNode {
    pub fn from_theta(theta: f64) -> Self {
        let (sin, cos) = theta.sin_cos();
        let h = (0.5 * theta).sin();
        Self { theta, cos, sin, one_minus_cos: 2.0 * h * h }
    }

    fn from_cos(t: f64) -> Self {
        Self { theta: t.clamp(-1.0, 1.0).acos(), cos: t, sin: (1.0 - t * t).max(0.0).sqrt(), one_minus_cos: 1.0 - t }
    }

    /// `|xi - eta|^2 = 2 - 2 cos(theta)`.
    pub fn chord2(&self) -> f64 {
        2.0 * self.one_minus_cos
    }
}

/// A rule for integrals of functions of the polar angle against normalized surface
/// measure on S^{n-1}; weights are positive and sum to one.
#[derive(Debug, Clone)]
pub struct ZonalRule {
    pub(crate) n: usize,
    pub(crate) nodes: Vec<ZonalNode>,
    pub(crate) weights: Vec<f64>,
}

impl ZonalRule {
    /// Gauss-Jacobi rule in `t = cos(theta)` with `m` nodes (n >= 3), or the
    /// trapezoidal rule on the circle with `m` nodes (n = 2).
    pub fn gauss_jacobi(n: usize, m: usize) -> Result<Self> {
        super::check_dimension(n)?;
        if m == 0 {
            return Err(Error::InvalidParameter("quadrature order must be positive".into()));
        }
        if n == 2 {
            let nodes = (0..m).map(|j| ZonalNode::from_theta(2.0 * PI * j as f64 / m as f64)).collect();
            return Ok(Self { n, nodes, weights: vec![1.0 / m as f64; m] });
        }
        let (t, w) = gauss_jacobi_symmetric(m, 0.5 * (n as f64 - 3.0));
        Ok(Self { n, nodes: t.into_iter().map(ZonalNode::from_cos).collect(), weights: w })
    }

    /// Composite Gauss-Legendre rule in theta on panels graded geometrically
    /// toward the pole at length scale `scale`.
    pub fn graded(n: usize, scale: f64, cfg: &AnchoredConfig) -> Result<Self> {
        super::check_dimension(n)?;
        let scale = scale.clamp(f64::MIN_POSITIVE, 1.0);
        let mut breaks = vec![0.0, scale * 2f64.powi(-(cfg.grading_depth as i32))];
        loop {
            let last = *breaks.last().unwrap();
            if last >= PI {
                break;
            }
            let next = (2.0 * last).min(last + cfg.max_panel_width).min(PI);
            breaks.push(next);
        }
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        for pair in breaks.windows(2) {
            let (th, w) = gauss_legendre_interval(cfg.panel_points, pair[0], pair[1]);
            for (th, w) in th.into_iter().zip(w) {
                let node = ZonalNode::from_theta(th);
                weights.push(w * node.sin.powi(n as i32 - 2));
                nodes.push(node);
            }
        }
        let total = crate::sum::kahan_sum(weights.iter().copied());
        for w in weights.iter_mut() {
            *w /= total;
        }
        Ok(Self { n, nodes, weights })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[ZonalNode] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn integrate<G: Fn(&ZonalNode) -> f64>(&self, g: G) -> Result<f64> {
        let mut acc = KahanSum::new();
        for (node, w) in self.nodes.iter().zip(&self.weights) {
            let v = g(node);
            if !v.is_finite() {
                return Err(Error::NonFinite { abscissa: node.cos });
            }
            acc.add(w * v);
        }
        Ok(acc.value())
    }
}

/// `c_n int_{-1}^{1} g(t) (1 - t^2)^{(n-3)/2} dt`, which equals `int_S g(<xi, eta>) dsigma(xi)`.
pub fn zonal_integrate<G: Fn(f64) -> f64>(n: usize, g: G, quad_order: usize) -> Result<f64> {
    ZonalRule::gauss_jacobi(n, quad_order)?.integrate(|node| g(node.cos))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalization_constants() {
        assert!((ZonalWeight::new(3).unwrap().c_n - 0.5).abs() < 1e-14);
        assert!((ZonalWeight::new(4).unwrap().c_n - 2.0 / PI).abs() < 1e-14);
        assert!((ZonalWeight::new(2).unwrap().c_n - 1.0 / PI).abs() < 1e-14);
        assert!(ZonalWeight::new(5).is_err());
    }

    #[test]
    fn zonal_examples_n3() {
        assert!((zonal_integrate(3, |_| 1.0, 8).unwrap() - 1.0).abs() < 1e-14);
        assert!(zonal_integrate(3, |t| t, 8).unwrap().abs() < 1e-15);
        assert!((zonal_integrate(3, |t| t * t, 8).unwrap() - 1.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn zonal_circle() {
        // int cos^2 over the circle = 1/2
        assert!((zonal_integrate(2, |t| t * t, 16).unwrap() - 0.5).abs() < 1e-15);
        // n = 4: E[t^2] = 1/4
        assert!((zonal_integrate(4, |t| t * t, 8).unwrap() - 0.25).abs() < 1e-14);
    }

    #[test]
    fn reports_non_finite_abscissa() {
        let err = zonal_integrate(3, |t| if t > 0.5 { f64::NAN } else { t }, 8).unwrap_err();
        match err {
            Error::NonFinite { abscissa } => assert!(abscissa > 0.5),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn graded_rule_resolves_narrow_peak() {
        // Poisson kernel along its own axis integrates to one at every radius.
        let cfg = AnchoredConfig::default();
        for n in 2..=4 {
            for gap in [0.5, 1e-2, 1e-5] {
                let r: f64 = 1.0 - gap;
                let rule = ZonalRule::graded(n, gap, &cfg).unwrap();
                let v = rule
                    .integrate(|z| {
                        let d = gap * gap + r * z.chord2();
                        gap * (1.0 + r) / d.powf(0.5 * n as f64)
                    })
                    .unwrap();
                assert!((v - 1.0).abs() < 1e-12, "n={n} gap={gap}: {v}");
            }
        }
    }
}
