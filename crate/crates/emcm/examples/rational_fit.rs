//! Fit a rank-1 pole-residue model to sampled impedance matrices, the entry
//! point for users with data from an external full-wave solver.
//!
//! Run with: cargo run -p emcm --example rational_fit

use emcm::fit::rational::{fit_pole_residue, SweepSamples, RANK1_WARN};
use emcm::impedance::eval_impedance;
use emcm::model::{frequency, wavenumber, PoleResidueModel, PoleResidueTerm};

fn main() -> emcm::Result<()> {
    // The "device": three in-band resonances, one higher-order mode above
    // the sweep and the static background.
    let device = PoleResidueModel::new(
        2,
        vec![
            PoleResidueTerm::new(0.0, vec![0.6, 0.4], false),
            PoleResidueTerm::new(205.4, vec![0.12, -0.06], true),
            PoleResidueTerm::new(210.2, vec![0.08, 0.11], true),
            PoleResidueTerm::new(215.7, vec![-0.05, 0.09], true),
            PoleResidueTerm::new(248.0, vec![0.5, 0.4], false),
        ],
    );

    // 151 impedance samples across the band; in practice these come from a
    // solver export, see `fit-model --samples`.
    let mut freqs = Vec::new();
    let mut mats = Vec::new();
    for i in 0..151 {
        let k = 200.0 + 21.0 * i as f64 / 150.0;
        freqs.push(frequency(k));
        mats.push(eval_impedance(&device, k)?);
    }
    let samples = SweepSamples::new(freqs, mats)?;

    let report = fit_pole_residue(&samples, 5, device.eta0, 40, 1e-10)?;
    println!(
        "converged: {} after {} iterations, residual {:.2e}",
        report.converged, report.iterations, report.residual
    );
    println!(
        "\n{:>12} {:>14} {:>10}",
        "k_n (rad/m)", "f_n (GHz)", "rank-1 q"
    );
    for (term, quality) in report.model.terms.iter().zip(&report.rank1_quality) {
        let flag = if *quality > RANK1_WARN {
            "  <- suspect"
        } else {
            ""
        };
        println!(
            "{:>12.6} {:>14.6} {:>10.1e}{flag}",
            term.k_n,
            frequency(term.k_n) / 1e9,
            quality
        );
    }

    // Cross-check the fitted model against a sample it never saw.
    let k_probe = wavenumber(samples.frequencies_hz()[0]) * 1.0007;
    let z_truth = eval_impedance(&device, k_probe)?;
    let z_fit = eval_impedance(&report.model, k_probe)?;
    let diff = (&z_truth - &z_fit)
        .iter()
        .map(|v| v.norm())
        .fold(0.0_f64, f64::max);
    println!("\noff-grid probe mismatch: {diff:.2e} ohm");
    Ok(())
}
