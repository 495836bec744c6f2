//! Pointwise bound on the gradient of the Poisson kernel near the boundary.
use qclab::kernels::{kernel_bound_certificate, poisson_kernel};
use qclab::sampling::{rng, uniform_sphere};
use qclab::sphere::BallPoint;

fn main() -> qclab::Result<()> {
    let mut g = rng(1);
    for n in [2, 3, 4] {
        let mut worst = 0.0f64;
        let mut min_p = f64::INFINITY;
        for k in 1..=30 {
            let eta = uniform_sphere(&mut g, n);
            let x = BallPoint::at_gap(&eta, 2f64.powi(-k / 2))?;
            for _ in 0..50 {
                let xi = uniform_sphere(&mut g, n);
                let (lhs, rhs) = kernel_bound_certificate(&x, &xi)?;
                worst = worst.max(lhs / rhs);
                min_p = min_p.min(poisson_kernel(&x, &xi)?);
            }
        }
        println!("n={n}: max ratio to bound {worst:.4}, min P {min_p:.3e}");
    }
    Ok(())
}
