//! For exponents above one the gradient stays bounded up to the boundary.
use qclab::extension::{BoundaryData, HarmonicField};
use qclab::regularity::{bounded_gradient_check, RadialGrid};
use qclab::sphere::SpherePoint;

fn main() -> qclab::Result<()> {
    let eta = SpherePoint::axis(2, 0);
    for mu in [1.2, 1.5] {
        let field = HarmonicField::new(BoundaryData::anchored_power(&eta, mu)?)?;
        let b = bounded_gradient_check(&field, &eta, mu, &RadialGrid::dyadic(12))?;
        println!("mu={mu}: sup |grad| {:.4}, tail ratio {:.3}, bounded {}", b.sup_gradient, b.tail_ratio, b.tail_bounded);
    }
    Ok(())
}
