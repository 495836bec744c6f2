//! Distortion constant of a planar qc harmonic map and the Mori-type Hölder check.
use qclab::bootstrap::normalized_map;
use qclab::charts::Similarity;
use qclab::qc::{distortion, distortion_grid, mori_check, mori_exponent, z_plus_c_conj, JacobianSource, MoriSampler};

fn main() -> qclab::Result<()> {
    for c in [0.0, 0.3, 0.6] {
        let map = z_plus_c_conj(c)?;
        let rep = distortion(&map, &distortion_grid(2, 400, 0.999, 3), JacobianSource::Auto)?;
        let beta = mori_exponent(rep.k_global, 2)?;
        // z + c conj(z) covers an ellipse with major semi-axis 1 + c
        let g = normalized_map(&map, &Similarity::scaling(2, 1.0 + c))?;
        let sampler = MoriSampler { pairs: 20000, seed: 3, near_levels: 20 };
        let m = mori_check(&g, beta, &sampler, None)?;
        println!(
            "c={c}: K={:.6} (exact {:.6}) beta={:.4} M={:.4} violations {}/{}",
            rep.k_global,
            (1.0 + c) / (1.0 - c),
            beta,
            m.m_empirical,
            m.violations,
            m.pair_count
        );
    }
    Ok(())
}
