//! Tuning diagnostics: rank the coupling changes between two extractions of
//! the same device, before and after a physical adjustment.
//!
//! Run with: cargo run -p emcm --example matrix_diff

use emcm::basis::compare_coupling;
use emcm::io::matrix_file::read_matrix;

fn main() -> emcm::Result<()> {
    let dir = format!("{}/fixtures", env!("CARGO_MANIFEST_DIR"));

    println!("inline filter, iris between resonators 3 and 4 widened 0.2 mm:");
    let a = read_matrix(format!("{dir}/inline_dr_narrowband.cm"))?;
    let b = read_matrix(format!("{dir}/inline_dr_narrowband_iris.cm"))?;
    print_top(&compare_coupling(&a.matrix, &b.matrix, 4)?, a.ports);

    println!("\ncombline diplexer, screws moved in resonators 2 and 8:");
    let a = read_matrix(format!("{dir}/diplexer_narrowband.cm"))?;
    let b = read_matrix(format!("{dir}/diplexer_narrowband_screws.cm"))?;
    print_top(&compare_coupling(&a.matrix, &b.matrix, 4)?, a.ports);

    Ok(())
}

fn print_top(report: &emcm::ComparisonReport, ports: usize) {
    for entry in report.entries() {
        let name = |idx: usize| {
            if idx <= ports {
                format!("port {idx}")
            } else {
                format!("res {}", idx - ports)
            }
        };
        println!(
            "  {:<8} <-> {:<8} {:>9.4} -> {:>9.4}   |delta| {:.4}",
            name(entry.row),
            name(entry.col),
            entry.value_a,
            entry.value_b,
            entry.delta
        );
    }
}
