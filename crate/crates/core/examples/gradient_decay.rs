//! Gradient growth of the extension of |xi - eta|^mu along the ray to eta.
use qclab::extension::{BoundaryData, HarmonicField};
use qclab::regularity::{decay_profile, RadialGrid};
use qclab::sphere::SpherePoint;

fn main() -> qclab::Result<()> {
    let eta = SpherePoint::axis(3, 2);
    for mu in [0.3, 0.6, 0.9] {
        let field = HarmonicField::new(BoundaryData::anchored_power(&eta, mu)?)?;
        let p = decay_profile(&field, &eta, mu, &RadialGrid::dyadic(10))?;
        println!("mu={mu}: slope {:?} (limit {:.2}), C = {:.4}", p.fitted_slope, mu - 1.0, p.empirical_c);
        for row in p.rows.iter().step_by(3) {
            println!("  1-r={:.2e} |grad|={:.4e} normalized={:.4}", row.gap, row.grad_norm, row.normalized);
        }
    }
    Ok(())
}
