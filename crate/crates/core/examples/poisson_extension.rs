//! Poisson extension of a degree-3 harmonic polynomial, compared with its closed form.
use qclab::extension::{oracle_harmonics, BoundaryData, HarmonicField};
use qclab::sampling::{rng, uniform_ball};
use qclab::sphere::BallPoint;

fn main() -> qclab::Result<()> {
    for n in [2, 3] {
        let h = oracle_harmonics(n, 3)?.remove(0);
        let field = HarmonicField::new(BoundaryData::polynomial(h.poly.clone())?)?;
        let mut g = rng(7);
        let mut points: Vec<BallPoint> = (0..200).map(|_| uniform_ball(&mut g, n, 0.95)).collect();
        points.push(BallPoint::origin(n));
        let mut worst = 0.0f64;
        for x in &points {
            let v = field.extend(x)?.value[0];
            worst = worst.max((v - h.poly.eval(x.coords())).abs());
        }
        println!("n={n} {}: max |P[f] - h| = {worst:.2e} over {} points", h.label, points.len());
    }
    Ok(())
}
