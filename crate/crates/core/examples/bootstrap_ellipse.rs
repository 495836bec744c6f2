//! Full exponent bootstrap for a linear map of the disk onto an ellipse.
use nalgebra::DMatrix;
use qclab::bootstrap::{bootstrap_verify, standard_domain, BootstrapConfig};
use qclab::qc::linear;

fn main() -> qclab::Result<()> {
    let map = linear("ellipse", DMatrix::from_row_slice(2, 2, &[1.3, 0.0, 0.0, 1.0]))?;
    let domain = standard_domain(&map)?;
    let report = bootstrap_verify(&map, &domain, None, &BootstrapConfig::default())?;
    println!("K = {:.6}, beta = {:.4}, ladder {:?}", report.qc_k, report.beta, report.ladder.mu);
    for s in &report.stages {
        println!("  k={} mu {:.4} -> {:.4}, C {:.4} -> {:?}, passed {}", s.k, s.mu_in, s.mu_out, s.c_in, s.c_out, s.passed);
    }
    println!("Lipschitz estimate {:.6}, passed {}", report.lipschitz_estimate, report.passed);
    Ok(())
}
