//! Build a model from a classical prototype through the exact spectral
//! inverse, add a static background term, sweep the scattering parameters
//! and export them as a Touchstone file.
//!
//! Everything here works in the unit-prototype convention (terminations and
//! eta0 normalized to 1), the same convention the shipped fixture matrices
//! use.
//!
//! Run with: cargo run -p emcm --example sweep_response

use emcm::basis::to_transversal;
use emcm::impedance::sweep_s_parameters;
use emcm::io::export::export_touchstone;
use emcm::model::{FrequencyBand, PoleResidueModel, PoleResidueTerm};
use emcm::narrowband::{inverse_reduce, ClassicalCouplingMatrix};
use nalgebra::DMatrix;

fn main() -> emcm::Result<()> {
    let band = FrequencyBand::new(3.60e9, 3.68e9)?;

    // Three-resonator ladder prototype: ports couple to the end resonators.
    let d = DMatrix::from_row_slice(2, 3, &[1.08, 0.0, 0.0, 0.0, 0.0, 1.08]);
    let mut m = DMatrix::zeros(3, 3);
    for (i, c) in [(0usize, 1.03), (1, 1.03)] {
        m[(i, i + 1)] = c;
        m[(i + 1, i)] = c;
    }
    let prototype = ClassicalCouplingMatrix::new(d, m, band)?;

    // Map to resonance wavenumbers and coupling vectors (the ladder gives a
    // dense resonator block, so diagonalize first), then append the static
    // background the prototype alone cannot represent.
    let (emcm, _) = to_transversal(&inverse_reduce(&prototype, 1.0)?);
    let mut terms: Vec<PoleResidueTerm> = (0..emcm.order())
        .map(|n| {
            let k_n = emcm.k()[(n, n)].sqrt();
            let c = (0..2).map(|p| emcm.c()[(p, n)]).collect();
            PoleResidueTerm::new(k_n, c, true)
        })
        .collect();
    terms.push(PoleResidueTerm::new(0.0, vec![0.6, 0.4], false));
    let model = PoleResidueModel::new(2, terms).with_eta0(1.0);

    let sweep = sweep_s_parameters(&model, 3.57e9, 3.71e9, 281, 1.0)?;
    println!("{:>10} {:>10} {:>10}", "f (GHz)", "|S11| dB", "|S21| dB");
    for (f, s) in sweep
        .frequencies_hz()
        .iter()
        .zip(sweep.matrices())
        .step_by(28)
    {
        println!(
            "{:>10.4} {:>10.2} {:>10.2}",
            f / 1e9,
            20.0 * s[(0, 0)].norm().log10(),
            20.0 * s[(1, 0)].norm().log10()
        );
    }

    let out = std::env::temp_dir().join("emcm_sweep_response.s2p");
    export_touchstone(&out, &sweep)?;
    println!("\nfull sweep written to {}", out.display());
    Ok(())
}
