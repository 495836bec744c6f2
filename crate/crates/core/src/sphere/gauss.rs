//! Gauss rules on [-1, 1] for the symmetric Jacobi weight (1 - t^2)^a.
//!
//! Nodes come from the Golub-Welsch eigenproblem, are polished by Newton
//! steps on the orthonormal three-term recurrence, and weights are the
//! Christoffel numbers `1 / sum_k p_k(t_i)^2`. With `p_0 = 1` this is the
//! rule for the *normalized* weight, so the weights sum to one.

use nalgebra::{DMatrix, SymmetricEigen};

/// Squared off-diagonal of the Jacobi matrix for the normalized weight (1 - t^2)^a.
fn recurrence_beta(k: usize, a: f64) -> f64 {
    let k = k as f64;
    k * (k + 2.0 * a) / ((2.0 * k + 2.0 * a + 1.0) * (2.0 * k + 2.0 * a - 1.0))
}

/// Values of p_0..p_{m-1} summed in square, plus p_m and p_m'.
fn recurrence_eval(x: f64, m: usize, b: &[f64]) -> (f64, f64, f64) {
    let (mut p_prev, mut p) = (0.0, 1.0);
    let (mut dp_prev, mut dp) = (0.0, 0.0);
    let mut sum_sq = 0.0;
    for k in 0..m {
        sum_sq += p * p;
        let bk = if k == 0 { 0.0 } else { b[k] };
        let p_next = (x * p - bk * p_prev) / b[k + 1];
        let dp_next = (p + x * dp - bk * dp_prev) / b[k + 1];
        p_prev = p;
        p = p_next;
        dp_prev = dp;
        dp = dp_next;
    }
    (sum_sq, p, dp)
}

/// `m`-point Gauss rule for the normalized weight proportional to (1 - t^2)^a, a > -1/2.
///
/// Nodes are returned in increasing order and are exactly antisymmetric
/// about zero, so odd moments vanish to rounding.
pub fn gauss_jacobi_symmetric(m: usize, a: f64) -> (Vec<f64>, Vec<f64>) {
    assert!(m >= 1, "need at least one node");
    assert!(a > -0.5, "weight exponent must exceed -1/2");
    if m == 1 {
        return (vec![0.0], vec![1.0]);
    }
    // b[k] = sqrt(beta_k), b[0] unused.
    let b: Vec<f64> = (0..=m).map(|k| if k == 0 { 0.0 } else { recurrence_beta(k, a).sqrt() }).collect();

    let mut jac = DMatrix::<f64>::zeros(m, m);
    for k in 1..m {
        jac[(k - 1, k)] = b[k];
        jac[(k, k - 1)] = b[k];
    }
    let eig = SymmetricEigen::new(jac);
    let mut nodes: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    nodes.sort_by(|x, y| x.partial_cmp(y).unwrap());

    for x in nodes.iter_mut() {
        for _ in 0..3 {
            let (_, p, dp) = recurrence_eval(*x, m, &b);
            if dp != 0.0 {
                *x -= p / dp;
            }
        }
    }
    for i in 0..m / 2 {
        let j = m - 1 - i;
        let s = 0.5 * (nodes[j] - nodes[i]);
        nodes[i] = -s;
        nodes[j] = s;
    }
    if m % 2 == 1 {
        nodes[m / 2] = 0.0;
    }

    let mut weights: Vec<f64> = nodes.iter().map(|&x| 1.0 / recurrence_eval(x, m, &b).0).collect();
    for i in 0..m / 2 {
        let j = m - 1 - i;
        let w = 0.5 * (weights[i] + weights[j]);
        weights[i] = w;
        weights[j] = w;
    }
    let total = crate::sum::kahan_sum(weights.iter().copied());
    for w in weights.iter_mut() {
        *w /= total;
    }
    (nodes, weights)
}

/// Gauss-Legendre rule on `[lo, hi]` with weights summing to `hi - lo`.
pub fn gauss_legendre_interval(m: usize, lo: f64, hi: f64) -> (Vec<f64>, Vec<f64>) {
    let (t, w) = gauss_jacobi_symmetric(m, 0.0);
    let half = 0.5 * (hi - lo);
    let mid = 0.5 * (hi + lo);
    let nodes = t.iter().map(|&t| mid + half * t).collect();
    let weights = w.iter().map(|&w| 2.0 * half * w).collect();
    (nodes, weights)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_matches_tabulated_values() {
        let (x, w) = gauss_jacobi_symmetric(3, 0.0);
        assert!((x[2] - 0.774_596_669_241_483_4).abs() < 1e-15);
        assert!(x[1].abs() < 1e-300);
        // normalized weights are half the classical 5/9, 8/9
        assert!((w[0] - 5.0 / 18.0).abs() < 1e-15);
        assert!((w[1] - 8.0 / 18.0).abs() < 1e-15);
    }

    #[test]
    fn chebyshev_second_kind_closed_form() {
        // a = 1/2: nodes cos(k pi / (m+1)), weights (2/(m+1)) sin^2(k pi/(m+1))
        let m = 9;
        let (x, w) = gauss_jacobi_symmetric(m, 0.5);
        for k in 1..=m {
            let th = k as f64 * std::f64::consts::PI / (m + 1) as f64;
            let i = m - k;
            assert!((x[i] - th.cos()).abs() < 1e-14, "node {k}");
            assert!((w[i] - 2.0 / (m + 1) as f64 * th.sin().powi(2)).abs() < 1e-14);
        }
    }

    #[test]
    fn exact_moments_for_legendre() {
        let m = 10;
        let (x, w) = gauss_jacobi_symmetric(m, 0.0);
        for p in 0..(2 * m) {
            let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(p as i32)).sum();
            let exact = if p % 2 == 1 { 0.0 } else { 1.0 / (p as f64 + 1.0) };
            assert!((q - exact).abs() < 1e-14, "moment {p}: {q} vs {exact}");
        }
    }

    #[test]
    fn interval_rule_integrates_cubic() {
        let (x, w) = gauss_legendre_interval(2, 1.0, 3.0);
        let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(3)).sum();
        assert!((q - 20.0).abs() < 1e-13);
    }
}
