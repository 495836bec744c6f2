//! Poisson kernel `P(x, xi) = (1 - |x|^2) / |x - xi|^n` of the unit ball and
//! its x-gradient
//!
//! ```text
//! Q(x, xi) = [ -2x - n (1 - |x|^2) (x - xi) / d ] * d^{-n/2},   d = |x - xi|^2
//! ```
//!
//! evaluated in the factored form above (bounded bracket times `d^{-n/2}`).

use crate::error::{Error, Result};
use crate::sphere::{dist2, dot, norm, BallPoint, SpherePoint};

/// Radius beyond which `d` is formed from the chord identity
/// `d = (1 - r)^2 + r |xi - x/|x||^2` instead of `1 + |x|^2 - 2 <xi, x>`.
pub const CHORD_FORM_RADIUS: f64 = 0.9;

#[derive(Debug, Clone, PartialEq)]
pub struct KernelValue {
    pub p: f64,
    pub q: Vec<f64>,
    pub d: f64,
}

#[inline]
pub(crate) fn half_power(d: f64, n: usize) -> f64 {
    match n {
        2 => d,
        3 => d * d.sqrt(),
        4 => d * d,
        _ => d.powf(0.5 * n as f64),
    }
}

/// Per-point precomputation shared by all nodes of a quadrature sweep.
#[derive(Debug, Clone)]
pub(crate) struct KernelPoint {
    pub n: usize,
    pub x: Vec<f64>,
    pub r: f64,
    pub gap: f64,
    /// `1 - |x|^2 = gap (1 + r)`
    pub one_minus_r2: f64,
    pub dir: Option<Vec<f64>>,
}

impl KernelPoint {
    pub fn new(x: &BallPoint) -> Self {
        let r = x.radius();
        let gap = x.gap();
        Self {
            n: x.dim(),
            x: x.coords().to_vec(),
            r,
            gap,
            one_minus_r2: gap * (1.0 + r),
            dir: x.direction().map(|d| d.coords().to_vec()),
        }
    }

    /// Fills `diff = x - xi` and returns `d = |x - xi|^2`.
    #[inline]
    pub fn geometry(&self, xi: &[f64], diff: &mut [f64]) -> f64 {
        for ((d, x), s) in diff.iter_mut().zip(&self.x).zip(xi) {
            *d = x - s;
        }
        match &self.dir {
            Some(dir) if self.r > CHORD_FORM_RADIUS => self.gap * self.gap + self.r * dist2(xi, dir),
            _ => 1.0 + self.r * self.r - 2.0 * dot(xi, &self.x),
        }
    }

    /// Same as [`geometry`](Self::geometry) for a node given by its offset `xi - eta`
    /// from the point's own direction `eta`, with `|xi - eta|^2 = chord2`.
    #[inline]
    pub fn geometry_anchored(&self, offset: &[f64], chord2: f64, diff: &mut [f64]) -> f64 {
        let dir = self.dir.as_deref().expect("anchored geometry needs x != 0");
        for ((d, e), o) in diff.iter_mut().zip(dir).zip(offset) {
            *d = -self.gap * e - o;
        }
        self.gap * self.gap + self.r * chord2
    }

    #[inline]
    pub fn poisson(&self, d: f64) -> f64 {
        self.one_minus_r2 / half_power(d, self.n)
    }

    /// Writes `Q(x, xi)` into `out` given `diff = x - xi` and `d`.
    #[inline]
    pub fn gradient(&self, diff: &[f64], d: f64, out: &mut [f64]) {
        let scale = 1.0 / half_power(d, self.n);
        let c = self.n as f64 * self.one_minus_r2 / d;
        for ((o, x), df) in out.iter_mut().zip(&self.x).zip(diff) {
            *o = (-2.0 * x - c * df) * scale;
        }
    }
}

fn check_pair(x: &BallPoint, xi: &SpherePoint) -> Result<()> {
    if x.dim() != xi.dim() {
        return Err(Error::DimensionMismatch { expected: x.dim(), got: xi.dim() });
    }
    Ok(())
}

pub fn kernel_value(x: &BallPoint, xi: &SpherePoint) -> Result<KernelValue> {
    check_pair(x, xi)?;
    let kp = KernelPoint::new(x);
    let mut diff = vec![0.0; kp.n];
    let d = kp.geometry(xi.coords(), &mut diff);
    let mut q = vec![0.0; kp.n];
    kp.gradient(&diff, d, &mut q);
    Ok(KernelValue { p: kp.poisson(d), q, d })
}

pub fn poisson_kernel(x: &BallPoint, xi: &SpherePoint) -> Result<f64> {
    kernel_value(x, xi).map(|k| k.p)
}

/// Raw-coordinate variant that validates `|x| < 1`.
pub fn poisson_kernel_at(x: &[f64], xi: &[f64]) -> Result<f64> {
    let x = BallPoint::new(x.to_vec())?;
    let xi = SpherePoint::new(xi.to_vec())?;
    poisson_kernel(&x, &xi)
}

pub fn gradient_kernel(x: &BallPoint, xi: &SpherePoint) -> Result<Vec<f64>> {
    kernel_value(x, xi).map(|k| k.q)
}

/// `(|Q(x, xi)| d^{n/2}, 2n + 2)`; the first never exceeds the second.
pub fn kernel_bound_certificate(x: &BallPoint, xi: &SpherePoint) -> Result<(f64, f64)> {
    let k = kernel_value(x, xi)?;
    let n = x.dim();
    Ok((norm(&k.q) * half_power(k.d, n), 2.0 * n as f64 + 2.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sphere::make_quadrature;

    fn bp(c: &[f64]) -> BallPoint {
        BallPoint::new(c.to_vec()).unwrap()
    }

    fn sp(c: &[f64]) -> SpherePoint {
        SpherePoint::new(c.to_vec()).unwrap()
    }

    #[test]
    fn closed_form_values() {
        let xi = sp(&[0.2, -0.5, 0.4]);
        assert!((poisson_kernel(&BallPoint::origin(3), &xi).unwrap() - 1.0).abs() < 1e-15);
        let eta = SpherePoint::axis(3, 0);
        let x = BallPoint::on_ray(&eta, 0.5).unwrap();
        assert!((poisson_kernel(&x, &eta).unwrap() - 6.0).abs() < 1e-13);
        let q0 = gradient_kernel(&BallPoint::origin(3), &xi).unwrap();
        for (q, e) in q0.iter().zip(xi.coords()) {
            assert!((q - 3.0 * e).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_points_outside_ball() {
        assert!(poisson_kernel_at(&[1.0, 0.0], &[0.0, 1.0]).is_err());
        assert!(poisson_kernel(&bp(&[0.1, 0.1]), &sp(&[1.0, 0.0, 0.0])).is_err());
    }

    #[test]
    fn gradient_matches_central_differences() {
        let xi = SpherePoint::axis(3, 0);
        let x0 = [0.4, 0.1, 0.2];
        let q = gradient_kernel(&bp(&x0), &xi).unwrap();
        let h = 1e-5;
        for i in 0..3 {
            let mut xp = x0;
            let mut xm = x0;
            xp[i] += h;
            xm[i] -= h;
            let fd = (poisson_kernel(&bp(&xp), &xi).unwrap() - poisson_kernel(&bp(&xm), &xi).unwrap()) / (2.0 * h);
            assert!((fd - q[i]).abs() < 1e-6 * (1.0 + q[i].abs()), "component {i}: {fd} vs {}", q[i]);
        }
    }

    #[test]
    fn certificate_examples() {
        let xi = sp(&[0.0, 1.0, 0.0]);
        let (l, r) = kernel_bound_certificate(&BallPoint::origin(3), &xi).unwrap();
        assert!((l - 3.0).abs() < 1e-15 && r == 8.0);
        let eta = SpherePoint::axis(3, 0);
        let (l, r) = kernel_bound_certificate(&BallPoint::on_ray(&eta, 0.9).unwrap(), &eta).unwrap();
        assert!(l <= r, "{l} > {r}");
        let eta2 = SpherePoint::axis(2, 0);
        let (l, r) = kernel_bound_certificate(&BallPoint::on_ray(&eta2, 0.99).unwrap(), &eta2.antipode()).unwrap();
        assert!(l <= r && r == 6.0);
    }

    #[test]
    fn d_equals_squared_distance() {
        let xi = sp(&[0.3, 0.9, -0.1]);
        for x in [[0.1, 0.2, 0.3], [0.5, 0.7, 0.2], [0.05, 0.95, -0.01]] {
            let k = kernel_value(&bp(&x), &xi).unwrap();
            let d = dist2(&x, xi.coords());
            assert!((k.d - d).abs() < 1e-14 * d.max(1e-300) + 1e-16);
            assert!(k.p > 0.0 && k.d > 0.0);
        }
    }

    #[test]
    fn poisson_integral_of_one() {
        let rule = make_quadrature(3, 40).unwrap();
        let x = bp(&[0.3, 0.2, 0.0]);
        let kp = KernelPoint::new(&x);
        let v = rule.integrate(|xi| kp.poisson(kp.geometry(xi, &mut [0.0; 3])));
        assert!((v - 1.0).abs() < 1e-8);
    }
}
