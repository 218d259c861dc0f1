//! Reduce a pole-residue model to its classical coupling matrix over a band
//! and show the two properties that make the reduction trustworthy: it is
//! exact at the band center, and its in-band error shrinks quadratically
//! with the fractional bandwidth.
//!
//! Run with: cargo run -p emcm --example narrowband_reduction

use emcm::impedance::{em_coupling_from_inband, impedance_from_em, split_inband, z_to_s};
use emcm::model::{wavenumber, FrequencyBand, PoleResidueModel, PoleResidueTerm};
use emcm::narrowband::ClassicalCouplingMatrix;
use emcm::narrowband::{eval_classical, eval_total_s, inverse_reduce, reduce_to_classical};
use nalgebra::DMatrix;

fn main() -> emcm::Result<()> {
    let band = FrequencyBand::new(9.95e9, 10.05e9)?;
    let k0 = band.k0();
    let model = PoleResidueModel::new(
        2,
        vec![
            PoleResidueTerm::new(0.9992 * k0, vec![0.021, 0.009], true),
            PoleResidueTerm::new(1.0003 * k0, vec![0.014, -0.014], true),
            PoleResidueTerm::new(1.0007 * k0, vec![0.008, 0.020], true),
        ],
    );

    let (inband, _) = split_inband(&model, &band);
    let emcm = em_coupling_from_inband(&inband)?;
    let ccm = reduce_to_classical(&emcm, &band, model.eta0)?;

    println!("classical resonator block M:");
    for i in 0..ccm.order() {
        let row: Vec<String> = (0..ccm.order())
            .map(|j| format!("{:>8.4}", ccm.m()[(i, j)]))
            .collect();
        println!("  {}", row.join(" "));
    }

    // Center exactness: the reduced prototype reproduces the in-band
    // impedance exactly at k0.
    let exact = impedance_from_em(&emcm, model.eta0, k0)?;
    let reduced = eval_classical(&ccm, 0.0)?;
    let diff = (&exact - &reduced)
        .iter()
        .map(|v| v.norm())
        .fold(0.0_f64, f64::max);
    println!("\ncenter-frequency mismatch: {diff:.2e} ohm (exact up to roundoff)");

    // Convergence: the same normalized prototype instantiated at delta and
    // delta/2 through the exact spectral inverse.
    println!("\nnarrowband error vs fractional bandwidth:");
    for delta in [0.04, 0.02, 0.01] {
        let err = narrowband_error(delta)?;
        println!("  delta {delta:>5}: max in-band |S_exact - S_reduced| = {err:.3e}");
    }
    Ok(())
}

fn narrowband_error(delta: f64) -> emcm::Result<f64> {
    let f0 = 10.0e9;
    let f2 = f0 * (delta + (delta * delta + 4.0).sqrt()) / 2.0;
    let band = FrequencyBand::new(f2 - delta * f0, f2)?;
    let d = DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
    let mut m = DMatrix::zeros(3, 3);
    m[(0, 1)] = 0.9;
    m[(1, 0)] = 0.9;
    m[(1, 2)] = 0.9;
    m[(2, 1)] = 0.9;
    let proto = ClassicalCouplingMatrix::new(d, m, band)?;
    let emcm = inverse_reduce(&proto, 1.0)?;
    let reduced = reduce_to_classical(&emcm, &band, 1.0)?;
    let mut worst = 0.0_f64;
    for i in 0..101 {
        let f = band.f1_hz() + (band.f2_hz() - band.f1_hz()) * i as f64 / 100.0;
        let s_exact = z_to_s(&impedance_from_em(&emcm, 1.0, wavenumber(f))?, 1.0)?;
        let s_reduced = eval_total_s(&reduced, None, f, 1.0)?;
        let diff = (&s_exact - &s_reduced)
            .iter()
            .map(|v| v.norm())
            .fold(0.0_f64, f64::max);
        worst = worst.max(diff);
    }
    Ok(worst)
}
