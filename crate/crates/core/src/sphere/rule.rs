use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::zonal::ZonalRule;
use super::{check_dimension, orthonormal_complement, SpherePoint};
use crate::error::{Error, Result};
use crate::sum::KahanSum;

/// Panel layout for rules graded toward an anchor point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnchoredConfig {
    /// Gauss-Legendre points per polar-angle panel.
    pub panel_points: usize,
    /// The innermost panel is `[0, scale * 2^-grading_depth]`.
    pub grading_depth: u32,
    /// Panels stop doubling once they reach this width.
    pub max_panel_width: f64,
    /// Polynomial degree of the rule on the orthogonal sphere S^{n-2};
    /// `None` picks 32 for n = 3 and 12 for n = 4.
    pub azimuth_degree: Option<usize>,
}

impl Default for AnchoredConfig {
    fn default() -> Self {
        Self { panel_points: 12, grading_depth: 12, max_panel_width: PI / 16.0, azimuth_degree: None }
    }
}

impl AnchoredConfig {
    pub fn azimuth_degree_for(&self, n: usize) -> usize {
        self.azimuth_degree.unwrap_or(match n {
            2 => 32,
            3 => 32,
            _ => 12,
        })
    }
}

/// Extra per-node data kept by rules built around an anchor `eta`, so kernels
/// can form `xi - eta` and `|xi - eta|^2` without cancellation.
#[derive(Debug, Clone)]
struct AnchorData {
    eta: SpherePoint,
    offsets: Vec<f64>,
    chord2: Vec<f64>,
}

/// Nodes on S^{n-1} with positive weights summing to one (normalized surface measure).
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    n: usize,
    degree: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    anchor: Option<AnchorData>,
}

impl QuadratureRule {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn node(&self, i: usize) -> &[f64] {
        &self.nodes[i * self.n..(i + 1) * self.n]
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64], f64)> + '_ {
        self.nodes.chunks_exact(self.n).zip(self.weights.iter().copied())
    }

    pub fn anchor(&self) -> Option<&SpherePoint> {
        self.anchor.as_ref().map(|a| &a.eta)
    }

    /// `xi_i - eta` for anchored rules.
    pub fn offset(&self, i: usize) -> Option<&[f64]> {
        self.anchor.as_ref().map(|a| &a.offsets[i * self.n..(i + 1) * self.n])
    }

    /// `|xi_i - eta|^2` for anchored rules.
    pub fn chord2(&self, i: usize) -> Option<f64> {
        self.anchor.as_ref().map(|a| a.chord2[i])
    }

    pub fn integrate<F: Fn(&[f64]) -> f64>(&self, f: F) -> f64 {
        let mut acc = KahanSum::new();
        for (xi, w) in self.iter() {
            acc.add(w * f(xi));
        }
        acc.value()
    }
}

/// Nodes and weights on S^{m-1} ⊂ R^m used as the fibre of a product rule.
fn fibre_rule(m: usize, degree: usize) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    match m {
        1 => Ok((vec![vec![1.0], vec![-1.0]], vec![0.5, 0.5])),
        2 => {
            let count = degree + 1;
            let pts = (0..count)
                .map(|j| {
                    let phi = 2.0 * PI * j as f64 / count as f64;
                    vec![phi.cos(), phi.sin()]
                })
                .collect();
            Ok((pts, vec![1.0 / count as f64; count]))
        }
        3 => {
            let rule = make_quadrature(3, degree)?;
            Ok((rule.iter().map(|(x, _)| x.to_vec()).collect(), rule.weights.clone()))
        }
        _ => Err(Error::UnsupportedDimension(m + 1)),
    }
}

fn product_rule(
    n: usize,
    degree: usize,
    zonal: &ZonalRule,
    fibre: &(Vec<Vec<f64>>, Vec<f64>),
    eta: &SpherePoint,
    keep_anchor: bool,
) -> QuadratureRule {
    let basis = orthonormal_complement(eta.coords());
    let e = eta.coords();
    let count = zonal.len() * fibre.1.len();
    let mut nodes = Vec::with_capacity(count * n);
    let mut weights = Vec::with_capacity(count);
    let mut offsets = Vec::with_capacity(if keep_anchor { count * n } else { 0 });
    let mut chord2 = Vec::with_capacity(if keep_anchor { count } else { 0 });
    let mut dir = vec![0.0; n];
    for (z, wz) in zonal.nodes.iter().zip(&zonal.weights) {
        for (zeta, wf) in fibre.0.iter().zip(&fibre.1) {
            dir.iter_mut().for_each(|d| *d = 0.0);
            for (c, b) in zeta.iter().zip(&basis) {
                for (d, bi) in dir.iter_mut().zip(b) {
                    *d += c * bi;
                }
            }
            for i in 0..n {
                nodes.push(z.cos * e[i] + z.sin * dir[i]);
                if keep_anchor {
                    offsets.push(-z.one_minus_cos * e[i] + z.sin * dir[i]);
                }
            }
            if keep_anchor {
                chord2.push(z.chord2());
            }
            weights.push(wz * wf);
        }
    }
    let total = crate::sum::kahan_sum(weights.iter().copied());
    weights.iter_mut().for_each(|w| *w /= total);
    QuadratureRule {
        n,
        degree,
        nodes,
        weights,
        anchor: keep_anchor.then(|| AnchorData { eta: eta.clone(), offsets, chord2 }),
    }
}

/// A rule on S^{n-1} exact for polynomials of total degree <= `degree`.
///
/// n = 2: trapezoidal rule with `degree + 1` equispaced nodes.
/// n = 3: Gauss-Legendre in the polar coordinate times a uniform azimuth.
/// n = 4: Gauss-Jacobi (weight `sqrt(1 - t^2)`) times an S^2 rule on each slice.
pub fn make_quadrature(n: usize, degree: usize) -> Result<QuadratureRule> {
    check_dimension(n)?;
    if degree == 0 {
        return Err(Error::InvalidParameter("quadrature degree must be at least 1".into()));
    }
    if n == 2 {
        let count = degree + 1;
        let nodes = (0..count)
            .flat_map(|j| {
                let phi = 2.0 * PI * j as f64 / count as f64;
                [phi.cos(), phi.sin()]
            })
            .collect();
        return Ok(QuadratureRule { n, degree, nodes, weights: vec![1.0 / count as f64; count], anchor: None });
    }
    let zonal = ZonalRule::gauss_jacobi(n, degree / 2 + 1)?;
    let fibre = fibre_rule(n - 1, degree)?;
    Ok(product_rule(n, degree, &zonal, &fibre, &SpherePoint::axis(n, n - 1), false))
}

/// A rule graded toward `eta` at length scale `scale`, for integrands that
/// concentrate within distance ~`scale` of the anchor (Poisson-type kernels at
/// `x = (1 - scale) eta`). Exact to rounding for polynomials up to the azimuth degree.
pub fn anchored_rule(eta: &SpherePoint, scale: f64, cfg: &AnchoredConfig) -> Result<QuadratureRule> {
    let n = eta.dim();
    check_dimension(n)?;
    let degree = cfg.azimuth_degree_for(n);
    let zonal = ZonalRule::graded(n, scale, cfg)?;
    let fibre = fibre_rule(n - 1, degree)?;
    Ok(product_rule(n, degree, &zonal, &fibre, eta, true))
}
