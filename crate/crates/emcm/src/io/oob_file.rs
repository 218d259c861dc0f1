//! Out-of-band loading files: the affine model `Z0 + Z1 K` produced by the
//! narrowband reduction.
//!
//! ```text
//! ports 2
//! band 12.21e9 12.26e9
//! z0
//! <P rows of 2P numbers: re im re im ...>
//! z1
//! <P rows>
//! ```

use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{content_lines, parse_err, parse_f64, parse_usize};
use crate::error::{Error, Result};
use crate::model::FrequencyBand;
use crate::narrowband::AffineOutOfBand;

#[derive(Debug, Clone, PartialEq)]
pub struct OutOfBandFile {
    pub oob: AffineOutOfBand,
    pub band: FrequencyBand,
}

pub fn parse_oob(text: &str) -> Result<OutOfBandFile> {
    let mut ports = None;
    let mut band = None;
    let mut section: Option<usize> = None;
    let mut rows: [Vec<Vec<Complex64>>; 2] = [Vec::new(), Vec::new()];
    for (line, content) in content_lines(text) {
        let mut tokens = content.split_whitespace();
        let head = tokens.next().unwrap();
        match head {
            "ports" => {
                let tok = tokens
                    .next()
                    .ok_or_else(|| parse_err(line, "ports needs a value"))?;
                ports = Some(parse_usize(line, tok, "ports")?);
            }
            "band" => {
                let f1 = parse_f64(
                    line,
                    tokens
                        .next()
                        .ok_or_else(|| parse_err(line, "band needs f1 f2"))?,
                    "band f1",
                )?;
                let f2 = parse_f64(
                    line,
                    tokens
                        .next()
                        .ok_or_else(|| parse_err(line, "band needs f1 f2"))?,
                    "band f2",
                )?;
                band = Some(
                    FrequencyBand::new(f1, f2)
                        .map_err(|e| parse_err(line, format!("bad band: {e}")))?,
                );
            }
            "z0" => section = Some(0),
            "z1" => section = Some(1),
            _ => {
                let Some(s) = section else {
                    return Err(parse_err(line, "matrix row before z0/z1 marker"));
                };
                let values: Result<Vec<f64>> = content
                    .split_whitespace()
                    .map(|tok| parse_f64(line, tok, "matrix entry"))
                    .collect();
                let values = values?;
                if values.len() % 2 != 0 {
                    return Err(parse_err(line, "expected re/im pairs"));
                }
                let row: Vec<Complex64> = values
                    .chunks(2)
                    .map(|pair| Complex64::new(pair[0], pair[1]))
                    .collect();
                rows[s].push(row);
            }
        }
    }
    let ports = ports.ok_or_else(|| parse_err(1, "missing `ports` header"))?;
    let band = band.ok_or_else(|| parse_err(1, "missing `band` header"))?;
    let mut matrices = Vec::with_capacity(2);
    for (idx, section_rows) in rows.iter().enumerate() {
        if section_rows.len() != ports || section_rows.iter().any(|r| r.len() != ports) {
            return Err(Error::DimensionMismatch {
                expected: format!("{ports} x {ports} in section z{idx}"),
                found: format!("{} rows", section_rows.len()),
            });
        }
        matrices.push(DMatrix::from_fn(ports, ports, |i, j| section_rows[i][j]));
    }
    let z1 = matrices.pop().unwrap();
    let z0 = matrices.pop().unwrap();
    Ok(OutOfBandFile {
        oob: AffineOutOfBand::new(z0, z1)?,
        band,
    })
}

pub fn serialize_oob(oob: &AffineOutOfBand, band: &FrequencyBand) -> String {
    let p = oob.ports();
    let mut out = String::new();
    out.push_str(&format!("ports {p}\n"));
    out.push_str(&format!("band {} {}\n", band.f1_hz(), band.f2_hz()));
    for (name, m) in [("z0", oob.z0()), ("z1", oob.z1())] {
        out.push_str(name);
        out.push('\n');
        for i in 0..p {
            let row: Vec<String> = (0..p)
                .map(|j| format!("{} {}", m[(i, j)].re, m[(i, j)].im))
                .collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
    }
    out
}

pub fn read_oob(path: impl AsRef<Path>) -> Result<OutOfBandFile> {
    parse_oob(&super::read_file(path)?)
}

pub fn write_oob(
    path: impl AsRef<Path>,
    oob: &AffineOutOfBand,
    band: &FrequencyBand,
) -> Result<()> {
    super::write_file(path, serialize_oob(oob, band))
}
