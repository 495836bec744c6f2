//! Radial Hölder estimate obtained by integrating the gradient bound along a ray.
use qclab::extension::{BoundaryData, HarmonicField};
use qclab::regularity::{decay_profile, radial_holder_from_gradient, RadialGrid};
use qclab::sphere::SpherePoint;

fn main() -> qclab::Result<()> {
    let eta = SpherePoint::axis(2, 1);
    let mu = 0.5;
    let field = HarmonicField::new(BoundaryData::anchored_power(&eta, mu)?)?;
    let profile = decay_profile(&field, &eta, mu, &RadialGrid::dyadic_refined(10, 2))?;
    let rh = radial_holder_from_gradient(&field, &profile, profile.empirical_c, mu)?;
    println!("grid constant {:.4}: hypothesis holds {}, violations {}", rh.c, rh.hypothesis_holds, rh.violations());
    let rh = rh.rebound(rh.measured_c());
    println!("C = {:.4}, grid C = {:.4}, path C = {:.4}, violations {}", rh.c, rh.grid_c, rh.path_c, rh.violations());
    for row in rh.rows.iter().step_by(4) {
        println!("  r={:.6} path={:.4e} endpoint={:.4e} bound={:.4e}", row.r, row.path, row.endpoint, row.bound);
    }
    Ok(())
}
