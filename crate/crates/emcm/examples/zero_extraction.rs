//! Extract transmission and reflection zeros from a coupling-matrix file and
//! map them to physical frequencies through the band in its header.
//!
//! Run with: cargo run -p emcm --example zero_extraction

use emcm::fit::classical::find_zeros;
use emcm::io::matrix_file::read_matrix;
use emcm::narrowband::bandpass_map_hz;

fn main() -> emcm::Result<()> {
    let path = format!(
        "{}/fixtures/dual_mode_classical.cm",
        env!("CARGO_MANIFEST_DIR")
    );
    let file = read_matrix(&path)?;
    let ccm = file.to_classical()?;
    let band = *ccm.band();
    println!(
        "eighth-order dual-mode filter, band {:.3}-{:.3} GHz",
        band.f1_hz() / 1e9,
        band.f2_hz() / 1e9
    );

    let zeros = find_zeros(&ccm, 1.0, -10.0, 10.0, 2001)?;

    println!("\ntransmission zeros:");
    for tz in &zeros.transmission_zeros {
        println!(
            "  K = {tz:+.6}  ->  {:.6} GHz",
            bandpass_map_hz(*tz, &band) / 1e9
        );
    }
    println!("\nreflection zeros:");
    for rz in &zeros.reflection_zeros {
        println!(
            "  K = {rz:+.6}  ->  {:.6} GHz",
            bandpass_map_hz(*rz, &band) / 1e9
        );
    }
    println!("\nprototype poles:");
    for p in &zeros.prototype_poles {
        println!("  K = {:+.6} {:+.6}j", p.re, p.im);
    }
    Ok(())
}
