//! Sparse multivariate polynomials with real coefficients.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub coef: f64,
    pub powers: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    nvars: usize,
    terms: BTreeMap<Vec<u32>, f64>,
}

impl Polynomial {
    pub fn zero(nvars: usize) -> Self {
        Self { nvars, terms: BTreeMap::new() }
    }

    pub fn monomial(coef: f64, powers: Vec<u32>) -> Self {
        let mut p = Self::zero(powers.len());
        p.add_term(coef, powers);
        p
    }

    pub fn from_terms(nvars: usize, terms: &[Term]) -> Self {
        let mut p = Self::zero(nvars);
        for t in terms {
            assert_eq!(t.powers.len(), nvars, "term arity does not match");
            p.add_term(t.coef, t.powers.clone());
        }
        p
    }

    /// `|x|^2` in `nvars` variables.
    pub fn radius_squared(nvars: usize) -> Self {
        let mut p = Self::zero(nvars);
        for i in 0..nvars {
            let mut pw = vec![0; nvars];
            pw[i] = 2;
            p.add_term(1.0, pw);
        }
        p
    }

    pub fn add_term(&mut self, coef: f64, powers: Vec<u32>) {
        let entry = self.terms.entry(powers).or_insert(0.0);
        *entry += coef;
        if *entry == 0.0 {
            self.terms.retain(|_, c| *c != 0.0);
        }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|p| p.iter().sum()).max().unwrap_or(0)
    }

    pub fn terms(&self) -> Vec<Term> {
        self.terms.iter().map(|(p, &c)| Term { coef: c, powers: p.clone() }).collect()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(p, c)| c * p.iter().zip(x).map(|(&k, &xi)| xi.powi(k as i32)).product::<f64>())
            .sum()
    }

    pub fn partial(&self, i: usize) -> Self {
        let mut out = Self::zero(self.nvars);
        for (p, &c) in &self.terms {
            if p[i] > 0 {
                let mut q = p.clone();
                q[i] -= 1;
                out.add_term(c * p[i] as f64, q);
            }
        }
        out
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        (0..self.nvars).map(|i| self.partial(i).eval(x)).collect()
    }

    pub fn laplacian(&self) -> Self {
        let mut out = Self::zero(self.nvars);
        for i in 0..self.nvars {
            out = out.add(&self.partial(i).partial(i));
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (p, &c) in &other.terms {
            out.add_term(c, p.clone());
        }
        out
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = Self::zero(self.nvars);
        if s != 0.0 {
            for (p, &c) in &self.terms {
                out.terms.insert(p.clone(), c * s);
            }
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero(self.nvars);
        for (p, &c) in &self.terms {
            for (q, &d) in &other.terms {
                let pw = p.iter().zip(q).map(|(a, b)| a + b).collect();
                out.add_term(c * d, pw);
            }
        }
        out
    }

    /// Harmonic part of a homogeneous polynomial of degree `d` in `n` variables:
    /// `sum_k (-1)^k |x|^{2k} Δ^k p / (2^k k! prod_{j=1..k} (n + 2d - 2 - 2j))`.
    pub fn harmonic_projection(&self) -> Self {
        let n = self.nvars as f64;
        let d = self.degree() as f64;
        let r2 = Self::radius_squared(self.nvars);
        let mut out = self.clone();
        let mut lap = self.clone();
        let mut rpow = Self::monomial(1.0, vec![0; self.nvars]);
        let mut denom = 1.0;
        let mut k = 0.0;
        loop {
            lap = lap.laplacian();
            if lap.is_zero() {
                break;
            }
            k += 1.0;
            rpow = rpow.mul(&r2);
            denom *= 2.0 * k * (n + 2.0 * d - 2.0 - 2.0 * k);
            let sign = if (k as i64) % 2 == 1 { -1.0 } else { 1.0 };
            out = out.add(&rpow.mul(&lap).scale(sign / denom));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn projection_of_square_is_trace_free() {
        let p = Polynomial::monomial(1.0, vec![2, 0, 0]).harmonic_projection();
        let x = [0.3, -0.2, 0.7];
        assert!(p.laplacian().eval(&x).abs() < 1e-14);
        let expect = x[0] * x[0] - (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]) / 3.0;
        assert!((p.eval(&x) - expect).abs() < 1e-15);
    }

    #[test]
    fn projections_are_harmonic() {
        for n in 2..=4 {
            for pw in [vec![4u32, 1], vec![3, 3], vec![2, 2]] {
                let mut pw = pw;
                pw.resize(n, 0);
                if n > 2 {
                    pw[n - 1] = 1;
                }
                let h = Polynomial::monomial(1.0, pw.clone()).harmonic_projection();
                let lap = h.laplacian();
                let x = vec![0.3; n];
                assert!(lap.eval(&x).abs() < 1e-12, "{pw:?}: {}", lap.eval(&x));
            }
        }
    }

    #[test]
    fn gradient_matches_partials() {
        let p = Polynomial::from_terms(2, &[Term { coef: 2.0, powers: vec![2, 1] }, Term { coef: -1.0, powers: vec![0, 3] }]);
        let g = p.gradient(&[1.0, 2.0]);
        assert_eq!(g, vec![8.0, 2.0 - 12.0]);
    }
}
