//! Recover a classical coupling matrix from its own zeros and poles after a
//! tuning perturbation, respecting the intended coupling topology.
//!
//! Run with: cargo run -p emcm --example classical_fit

use emcm::basis::canonical_signs;
use emcm::fit::classical::{
    find_zeros, fit_classical, ClassicalFitOptions, FitTargets, TopologyMask,
};
use emcm::io::matrix_file::read_matrix;
use emcm::narrowband::ClassicalCouplingMatrix;

fn main() -> emcm::Result<()> {
    let path = format!(
        "{}/fixtures/dual_mode_classical.cm",
        env!("CARGO_MANIFEST_DIR")
    );
    let truth = read_matrix(&path)?.to_classical()?;

    // Targets: the prototype's own transmission/reflection zeros and poles.
    let targets = FitTargets::Zeros(find_zeros(&truth, 1.0, -10.0, 10.0, 2001)?);
    let mask = TopologyMask::from_nonzeros(&truth.full_matrix(), 2)?;

    // Detune a few couplings, as a mistuned assembly would.
    let mut detuned = truth.full_matrix();
    for (i, j, bump) in [(2usize, 3usize, 0.012), (4, 5, -0.008), (6, 9, 0.01)] {
        detuned[(i, j)] += bump;
        detuned[(j, i)] = detuned[(i, j)];
    }
    let init = ClassicalCouplingMatrix::from_full_matrix(&detuned, 2, *truth.band())?;
    let start_err = (init.full_matrix() - truth.full_matrix()).abs().max();

    let opts = ClassicalFitOptions {
        tol: 1e-8,
        ..Default::default()
    };
    let report = fit_classical(&targets, &mask, &init, &opts)?;
    let fitted = canonical_signs(&report.ccm.full_matrix(), 2);
    let reference = canonical_signs(&truth.full_matrix(), 2);
    let final_err = (&fitted - &reference).abs().max();

    println!("start entry error : {start_err:.3e}");
    println!("final entry error : {final_err:.3e}");
    println!(
        "zero/pole residual: {:.3e} after {} iterations (converged: {})",
        report.residual, report.iterations, report.converged
    );
    Ok(())
}
