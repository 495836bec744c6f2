//! Bootstrap in three dimensions for a harmonic perturbation of the identity.
use qclab::bootstrap::{bootstrap_verify, standard_domain, BootstrapConfig};
use qclab::qc::{perturbed_identity, perturbed_identity_lipschitz};

fn main() -> qclab::Result<()> {
    let eps = 0.05;
    let map = perturbed_identity(eps)?;
    let domain = standard_domain(&map)?;
    let report = bootstrap_verify(&map, &domain, None, &BootstrapConfig::default())?;
    println!("K = {:.6}, stages {}, final mu {:.4}", report.qc_k, report.stages.len(), report.ladder.mu.last().copied().unwrap_or(f64::NAN));
    println!(
        "Lipschitz estimate {:.6} vs exact {:.6}; dominance ok {}; passed {}",
        report.lipschitz_estimate,
        perturbed_identity_lipschitz(eps),
        report.dominance.ok,
        report.passed
    );
    Ok(())
}
