//! Seeded random and deterministic point sets on the sphere and in the ball.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::sphere::{dot, norm, orthonormal_complement, BallPoint, SpherePoint};

pub type SampleRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SampleRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform_sphere<R: Rng>(rng: &mut R, n: usize) -> SpherePoint {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        if norm(&v) > 1e-12 {
            return SpherePoint::new(v).expect("nonzero gaussian vector");
        }
    }
}

/// Uniform in the ball of radius `max_radius`.
pub fn uniform_ball<R: Rng>(rng: &mut R, n: usize, max_radius: f64) -> BallPoint {
    let dir = uniform_sphere(rng, n);
    let u: f64 = rng.random();
    let r = max_radius * u.powf(1.0 / n as f64);
    BallPoint::on_ray(&dir, r.min(max_radius)).expect("radius below one")
}

/// Random unit vector orthogonal to `eta`.
pub fn tangent_direction<R: Rng>(rng: &mut R, eta: &SpherePoint) -> Vec<f64> {
    let basis = orthonormal_complement(eta.coords());
    let w = uniform_sphere(rng, basis.len().max(2));
    let mut out = vec![0.0; eta.dim()];
    for (c, b) in w.coords().iter().zip(&basis) {
        for (o, bi) in out.iter_mut().zip(b) {
            *o += c * bi;
        }
    }
    if basis.len() == 1 {
        // S^0 fibre: w is a random point of the circle, keep only its sign
        let s = if w.coords()[0] >= 0.0 { 1.0 } else { -1.0 };
        return basis[0].iter().map(|b| s * b).collect();
    }
    out
}

/// Well-spread deterministic points: equispaced on the circle, a Fibonacci
/// spiral on S^2, a Hopf-style torus lattice on S^3.
pub fn spread_points(n: usize, count: usize) -> Vec<SpherePoint> {
    let golden = (1.0 + 5f64.sqrt()) / 2.0;
    (0..count)
        .map(|i| {
            let t = (i as f64 + 0.5) / count as f64;
            let c = match n {
                2 => {
                    let a = 2.0 * PI * i as f64 / count as f64;
                    vec![a.cos(), a.sin()]
                }
                3 => {
                    let z = 1.0 - 2.0 * t;
                    let s = (1.0 - z * z).sqrt();
                    let a = 2.0 * PI * i as f64 / golden;
                    vec![s * a.cos(), s * a.sin(), z]
                }
                _ => {
                    let h = t.sqrt();
                    let k = (1.0 - t).sqrt();
                    let a = 2.0 * PI * i as f64 / golden;
                    let b = 2.0 * PI * i as f64 * 2f64.sqrt();
                    vec![h * a.cos(), h * a.sin(), k * b.cos(), k * b.sin()]
                }
            };
            SpherePoint::new(c).expect("unit vector")
        })
        .collect()
}

/// Largest angular gap proxy: the maximum over `probe` of the distance to the nearest point of `set`.
pub fn covering_radius(set: &[SpherePoint], probe: &[SpherePoint]) -> f64 {
    probe
        .iter()
        .map(|p| set.iter().map(|s| (2.0 - 2.0 * dot(p.coords(), s.coords())).max(0.0).sqrt()).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn samplers_stay_in_domain() {
        let mut r = rng(7);
        for n in 2..=4 {
            for _ in 0..200 {
                let s = uniform_sphere(&mut r, n);
                assert!((norm(s.coords()) - 1.0).abs() < 1e-12);
                let b = uniform_ball(&mut r, n, 0.9);
                assert!(b.radius() <= 0.9 + 1e-15);
                let t = tangent_direction(&mut r, &s);
                assert!(dot(&t, s.coords()).abs() < 1e-12);
                assert!((norm(&t) - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn same_seed_same_points() {
        let a: Vec<_> = (0..5).map(|_| 0).scan(rng(3), |r, _| Some(uniform_sphere(r, 3))).collect();
        let b: Vec<_> = (0..5).map(|_| 0).scan(rng(3), |r, _| Some(uniform_sphere(r, 3))).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn spread_points_cover_the_sphere() {
        let mut r = rng(1);
        for (n, count, bound) in [(2, 16, 0.4), (3, 64, 0.5), (4, 128, 0.9)] {
            let set = spread_points(n, count);
            let probe: Vec<_> = (0..500).map(|_| uniform_sphere(&mut r, n)).collect();
            assert!(covering_radius(&set, &probe) < bound, "n={n}");
        }
    }
}
