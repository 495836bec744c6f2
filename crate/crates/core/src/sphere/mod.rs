//! Geometry of the unit sphere S^{n-1} and ball B^n, quadrature on the
//! sphere, and the zonal reduction of integrals that depend on one
//! coordinate only.

mod gauss;
mod rule;
mod zonal;

pub use gauss::{gauss_jacobi_symmetric, gauss_legendre_interval};
pub use rule::{anchored_rule, make_quadrature, AnchoredConfig, QuadratureRule};
pub use zonal::{zonal_integrate, ZonalNode, ZonalRule, ZonalWeight};

use crate::error::{Error, Result};

pub(crate) fn check_dimension(n: usize) -> Result<()> {
    if (2..=4).contains(&n) {
        Ok(())
    } else {
        Err(Error::UnsupportedDimension(n))
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[inline]
pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    dist2(a, b).sqrt()
}

/// A unit vector in R^n.
#[derive(Debug, Clone, PartialEq)]
pub struct SpherePoint(Vec<f64>);

impl SpherePoint {
    /// Normalizes `coords` onto the sphere.
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.len() < 2 {
            return Err(Error::UnsupportedDimension(coords.len()));
        }
        let r = norm(&coords);
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::ZeroVector);
        }
        Ok(Self(coords.into_iter().map(|x| x / r).collect()))
    }

    pub fn axis(n: usize, j: usize) -> Self {
        let mut c = vec![0.0; n];
        c[j] = 1.0;
        Self(c)
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn chord(&self, other: &SpherePoint) -> f64 {
        dist(&self.0, &other.0)
    }

    pub fn antipode(&self) -> Self {
        Self(self.0.iter().map(|x| -x).collect())
    }

    /// Point at chordal distance `chord` from `self` in the tangent direction `dir`
    /// (a unit vector orthogonal to `self`).
    pub fn at_chord(&self, chord: f64, dir: &[f64]) -> Self {
        let half = (0.5 * chord).clamp(0.0, 1.0);
        let theta = 2.0 * half.asin();
        let (s, c) = theta.sin_cos();
        Self(self.0.iter().zip(dir).map(|(e, d)| c * e + s * d).collect())
    }
}

/// A point of the open unit ball. The boundary gap `1 - |x|` is stored
/// separately so points on a ray near the sphere keep full relative precision.
#[derive(Debug, Clone, PartialEq)]
pub struct BallPoint {
    coords: Vec<f64>,
    radius: f64,
    gap: f64,
}

impl BallPoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        let r = norm(&coords);
        if !(r < 1.0) {
            return Err(Error::OutsideBall { point: coords, norm: r });
        }
        Ok(Self { coords, radius: r, gap: 1.0 - r })
    }

    pub fn origin(n: usize) -> Self {
        Self { coords: vec![0.0; n], radius: 0.0, gap: 1.0 }
    }

    /// The point `r * eta`, `0 <= r < 1`.
    pub fn on_ray(eta: &SpherePoint, r: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&r) {
            return Err(Error::OutsideBall { point: eta.coords().iter().map(|e| r * e).collect(), norm: r });
        }
        Ok(Self { coords: eta.coords().iter().map(|e| r * e).collect(), radius: r, gap: 1.0 - r })
    }

    /// The point `(1 - gap) * eta` with the gap kept exact.
    pub fn at_gap(eta: &SpherePoint, gap: f64) -> Result<Self> {
        if !(gap > 0.0 && gap <= 1.0) {
            return Err(Error::OutsideBall { point: eta.coords().to_vec(), norm: 1.0 - gap });
        }
        let r = 1.0 - gap;
        Ok(Self { coords: eta.coords().iter().map(|e| r * e).collect(), radius: r, gap })
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// `1 - |x|`.
    pub fn gap(&self) -> f64 {
        self.gap
    }

    pub fn direction(&self) -> Option<SpherePoint> {
        if self.radius > 0.0 {
            Some(SpherePoint(self.coords.iter().map(|x| x / self.radius).collect()))
        } else {
            None
        }
    }
}

/// Orthonormal basis of the hyperplane orthogonal to the unit vector `eta`,
/// taken from the columns of a Householder reflection that maps `e_n` to `±eta`.
pub fn orthonormal_complement(eta: &[f64]) -> Vec<Vec<f64>> {
    let n = eta.len();
    let mut v = eta.to_vec();
    if eta[n - 1] >= 0.0 {
        v[n - 1] += 1.0;
    } else {
        v[n - 1] -= 1.0;
    }
    let vv = dot(&v, &v);
    (0..n - 1)
        .map(|j| {
            let mut col = vec![0.0; n];
            col[j] = 1.0;
            let s = 2.0 * v[j] / vv;
            for (c, vi) in col.iter_mut().zip(&v) {
                *c -= s * vi;
            }
            col
        })
        .collect()
}

/// Both sides of `1 + r^2 - 2r<xi, eta> = (1 - r)^2 + r |xi - eta|^2` for the point `x = r eta`.
pub fn geodesic_chord_identity(r: f64, eta: &SpherePoint, xi: &SpherePoint) -> (f64, f64) {
    let lhs = 1.0 + r * r - 2.0 * r * dot(xi.coords(), eta.coords());
    let rhs = (1.0 - r) * (1.0 - r) + r * dist2(xi.coords(), eta.coords());
    (lhs, rhs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_point_is_normalized() {
        let p = SpherePoint::new(vec![3.0, 4.0]).unwrap();
        assert!((norm(p.coords()) - 1.0).abs() < 1e-15);
        assert!(matches!(SpherePoint::new(vec![0.0, 0.0]), Err(Error::ZeroVector)));
        assert!(SpherePoint::new(vec![1.0]).is_err());
    }

    #[test]
    fn ball_point_rejects_boundary() {
        assert!(BallPoint::new(vec![1.0, 0.0]).is_err());
        assert!(BallPoint::new(vec![0.6, 0.8]).is_err());
        let x = BallPoint::new(vec![0.3, 0.4]).unwrap();
        assert!((x.radius() - 0.5).abs() < 1e-15);
        let eta = SpherePoint::axis(3, 0);
        let y = BallPoint::at_gap(&eta, 2f64.powi(-40)).unwrap();
        assert_eq!(y.gap(), 2f64.powi(-40));
    }

    #[test]
    fn complement_is_orthonormal() {
        for eta in [vec![0.0, 0.0, 1.0], vec![0.0, 0.0, -1.0], vec![0.3, -0.5, 0.1], vec![1.0, 2.0, 3.0, 4.0]] {
            let e = SpherePoint::new(eta).unwrap();
            let basis = orthonormal_complement(e.coords());
            for (i, b) in basis.iter().enumerate() {
                assert!(dot(b, e.coords()).abs() < 1e-14);
                for (j, c) in basis.iter().enumerate() {
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert!((dot(b, c) - expect).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn chord_identity_examples() {
        let eta = SpherePoint::axis(2, 0);
        let xi = SpherePoint::new(vec![0.6, 0.8]).unwrap();
        assert_eq!(geodesic_chord_identity(0.0, &eta, &xi), (1.0, 1.0));
        let (l, r) = geodesic_chord_identity(0.5, &eta, &eta);
        assert!((l - 0.25).abs() < 1e-15 && (r - 0.25).abs() < 1e-15);
        let (l, r) = geodesic_chord_identity(0.5, &eta, &eta.antipode());
        assert!((l - 2.25).abs() < 1e-15 && (r - 2.25).abs() < 1e-15);
    }

    #[test]
    fn at_chord_hits_requested_distance() {
        let eta = SpherePoint::axis(3, 2);
        let dir = [1.0, 0.0, 0.0];
        for c in [1e-8, 0.25, 1.0, 1.9, 2.0] {
            let xi = eta.at_chord(c, &dir);
            assert!((xi.chord(&eta) - c).abs() < 1e-12 * (1.0 + c));
        }
    }
}
