//! Change of resonator basis: rotate a transversal coupling-matrix pair into
//! a dense one, verify the port response is untouched, and recover the
//! transversal form by diagonalization.
//!
//! Run with: cargo run -p emcm --example basis_change

use emcm::basis::{apply_basis, to_transversal, BasisTransform};
use emcm::impedance::{em_coupling_from_inband, impedance_from_em};
use emcm::model::PoleResidueTerm;
use nalgebra::DMatrix;

fn main() -> emcm::Result<()> {
    let terms = vec![
        PoleResidueTerm::new(209.3, vec![0.30, -0.10], true),
        PoleResidueTerm::new(210.1, vec![0.15, 0.25], true),
        PoleResidueTerm::new(211.2, vec![-0.20, 0.18], true),
    ];
    let transversal = em_coupling_from_inband(&terms)?;

    // A Givens rotation mixing resonators 1 and 3.
    let angle = 0.6_f64;
    let mut q = DMatrix::identity(3, 3);
    q[(0, 0)] = angle.cos();
    q[(2, 2)] = angle.cos();
    q[(0, 2)] = -angle.sin();
    q[(2, 0)] = angle.sin();
    let rotation = BasisTransform::new(q)?;
    let dense = apply_basis(&transversal, &rotation)?;

    println!("dense resonator block after rotation:");
    for i in 0..3 {
        let row: Vec<String> = (0..3)
            .map(|j| format!("{:>10.3}", dense.k()[(i, j)]))
            .collect();
        println!("  {}", row.join(" "));
    }

    // The response is invariant under the change of basis.
    let mut worst = 0.0_f64;
    for i in 0..101 {
        let k = 208.5 + 3.5 * i as f64 / 100.0;
        let z_a = impedance_from_em(&transversal, 1.0, k)?;
        let z_b = impedance_from_em(&dense, 1.0, k)?;
        let diff = (&z_a - &z_b)
            .iter()
            .map(|v| v.norm())
            .fold(0.0_f64, f64::max);
        let scale = z_a.iter().map(|v| v.norm()).fold(1e-30_f64, f64::max);
        worst = worst.max(diff / scale);
    }
    println!("\nmax relative impedance change over 101 points: {worst:.2e}");

    // Diagonalization recovers the eigenresonances in ascending order.
    let (recovered, _) = to_transversal(&dense);
    println!("\nrecovered squared eigenresonances:");
    for i in 0..3 {
        println!(
            "  {:>12.4}  (planted {:>12.4})",
            recovered.k()[(i, i)],
            transversal.k()[(i, i)]
        );
    }
    Ok(())
}
