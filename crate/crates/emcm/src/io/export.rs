//! Sweep exports: Touchstone and CSV for S-parameter sweeps, plus a CSV
//! interchange format for sampled impedance matrices (the input to the
//! rational fit).
//!
//! Exports print 15 significant digits; re-importing an exported CSV
//! reproduces the sweep to better than 1e-14 relative.

use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{content_lines, parse_err, parse_f64};
use crate::error::{Error, Result};
use crate::fit::rational::SweepSamples;
use crate::impedance::SParameterSweep;

fn fmt(v: f64) -> String {
    format!("{v:.14e}")
}

/// Touchstone (version 1) text for an S-parameter sweep: option line
/// `# Hz S RI R <z_ref>`, one frequency per line. Two-port data uses the
/// conventional S11 S21 S12 S22 column order; other port counts are written
/// row-major.
pub fn touchstone_text(sweep: &SParameterSweep) -> Result<String> {
    if sweep.is_empty() {
        return Err(Error::InvalidArgument("empty sweep".into()));
    }
    let p = sweep.ports();
    let mut out = format!("# Hz S RI R {}\n", sweep.z_ref());
    out.push_str("! generated by emcm\n");
    for (f, s) in sweep.frequencies_hz().iter().zip(sweep.matrices()) {
        let mut line = fmt(*f);
        let pairs: Vec<(usize, usize)> = if p == 2 {
            vec![(0, 0), (1, 0), (0, 1), (1, 1)]
        } else {
            (0..p).flat_map(|i| (0..p).map(move |j| (i, j))).collect()
        };
        for (i, j) in pairs {
            line.push_str(&format!(" {} {}", fmt(s[(i, j)].re), fmt(s[(i, j)].im)));
        }
        out.push_str(&line);
        out.push('\n');
    }
    Ok(out)
}

/// CSV text for an S-parameter sweep: header `freq_hz,S11_re,S11_im,...`,
/// entries row-major.
pub fn csv_text(sweep: &SParameterSweep) -> Result<String> {
    if sweep.is_empty() {
        return Err(Error::InvalidArgument("empty sweep".into()));
    }
    Ok(complex_matrix_csv(
        "S",
        sweep.frequencies_hz(),
        sweep.matrices(),
    ))
}

fn complex_matrix_csv(prefix: &str, freqs: &[f64], mats: &[DMatrix<Complex64>]) -> String {
    let p = mats[0].nrows();
    let mut header = String::from("freq_hz");
    for i in 0..p {
        for j in 0..p {
            header.push_str(&format!(
                ",{prefix}{}{}_re,{prefix}{}{}_im",
                i + 1,
                j + 1,
                i + 1,
                j + 1
            ));
        }
    }
    let mut out = header;
    out.push('\n');
    for (f, m) in freqs.iter().zip(mats) {
        let mut line = fmt(*f);
        for i in 0..p {
            for j in 0..p {
                line.push_str(&format!(",{},{}", fmt(m[(i, j)].re), fmt(m[(i, j)].im)));
            }
        }
        out.push_str(&line);
        out.push('\n');
    }
    out
}

fn parse_complex_matrix_csv(text: &str) -> Result<(Vec<f64>, Vec<DMatrix<Complex64>>)> {
    let mut lines = content_lines(text);
    let (header_line, header) = lines.next().ok_or_else(|| parse_err(1, "empty document"))?;
    let columns = header.split(',').count();
    if columns < 3 || (columns - 1) % 2 != 0 {
        return Err(parse_err(header_line, "malformed CSV header"));
    }
    let entries = (columns - 1) / 2;
    let p = (entries as f64).sqrt().round() as usize;
    if p * p != entries {
        return Err(parse_err(header_line, "entry count is not a square"));
    }
    let mut freqs = Vec::new();
    let mut mats = Vec::new();
    for (line, content) in lines {
        let tokens: Vec<&str> = content.split(',').collect();
        if tokens.len() != columns {
            return Err(parse_err(line, format!("expected {columns} columns")));
        }
        freqs.push(parse_f64(line, tokens[0].trim(), "frequency")?);
        let mut m = DMatrix::zeros(p, p);
        for i in 0..p {
            for j in 0..p {
                let base = 1 + 2 * (i * p + j);
                let re = parse_f64(line, tokens[base].trim(), "re")?;
                let im = parse_f64(line, tokens[base + 1].trim(), "im")?;
                m[(i, j)] = Complex64::new(re, im);
            }
        }
        mats.push(m);
    }
    Ok((freqs, mats))
}

/// Parse an S-parameter CSV produced by [`csv_text`]; `z_ref` is not stored
/// in the CSV and must be supplied.
pub fn parse_csv_sweep(text: &str, z_ref: f64) -> Result<SParameterSweep> {
    let (freqs, mats) = parse_complex_matrix_csv(text)?;
    SParameterSweep::new(freqs, mats, z_ref)
}

/// CSV text for sampled impedance matrices, header `freq_hz,Z11_re,...`.
pub fn samples_csv_text(samples: &SweepSamples) -> Result<String> {
    if samples.is_empty() {
        return Err(Error::InvalidArgument("empty sample set".into()));
    }
    Ok(complex_matrix_csv(
        "Z",
        samples.frequencies_hz(),
        samples.z(),
    ))
}

/// Parse an impedance-sample CSV (the `fit-model` input format).
pub fn parse_csv_samples(text: &str) -> Result<SweepSamples> {
    let (freqs, mats) = parse_complex_matrix_csv(text)?;
    SweepSamples::new(freqs, mats)
}

pub fn export_touchstone(path: impl AsRef<Path>, sweep: &SParameterSweep) -> Result<()> {
    super::write_file(path, touchstone_text(sweep)?)
}

pub fn export_csv(path: impl AsRef<Path>, sweep: &SParameterSweep) -> Result<()> {
    super::write_file(path, csv_text(sweep)?)
}

pub fn export_samples_csv(path: impl AsRef<Path>, samples: &SweepSamples) -> Result<()> {
    super::write_file(path, samples_csv_text(samples)?)
}

pub fn read_csv_samples(path: impl AsRef<Path>) -> Result<SweepSamples> {
    parse_csv_samples(&super::read_file(path)?)
}
