//! Coupling-matrix files: a small header followed by the full ports-first
//! (P+N) x (P+N) symmetric matrix, the same layout the matrices are printed
//! in.
//!
//! ```text
//! ports 2
//! order 8
//! band 12.21e9 12.26e9
//! 0       0       0.9862  ...
//! ...
//! ```
//!
//! The body must be symmetric; either a classical prototype `[[0, D], [D', M]]`
//! or a coupling-matrix pair `[[0, C], [C', K]]` fits this container.

use std::path::Path;

use nalgebra::DMatrix;

use super::{content_lines, parse_err, parse_f64, parse_usize};
use crate::error::{Error, Result};
use crate::impedance::EmCouplingMatrix;
use crate::model::FrequencyBand;
use crate::narrowband::ClassicalCouplingMatrix;

/// Absolute asymmetry tolerance (relative to the largest entry for large
/// matrices).
const ASYMMETRY_TOL: f64 = 1e-9;

/// Parsed coupling-matrix file.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingMatrixFile {
    pub ports: usize,
    pub order: usize,
    pub band: FrequencyBand,
    /// Full symmetric (ports+order) x (ports+order) matrix, ports first.
    pub matrix: DMatrix<f64>,
}

impl CouplingMatrixFile {
    pub fn from_classical(ccm: &ClassicalCouplingMatrix) -> Self {
        Self {
            ports: ccm.ports(),
            order: ccm.order(),
            band: *ccm.band(),
            matrix: ccm.full_matrix(),
        }
    }

    pub fn from_em(emcm: &EmCouplingMatrix, band: FrequencyBand) -> Self {
        Self {
            ports: emcm.ports(),
            order: emcm.order(),
            band,
            matrix: emcm.full_matrix(),
        }
    }

    /// Interpret the body as a classical prototype (blocks `D`, `M`).
    pub fn to_classical(&self) -> Result<ClassicalCouplingMatrix> {
        ClassicalCouplingMatrix::from_full_matrix(&self.matrix, self.ports, self.band)
    }

    /// Interpret the body as a coupling-matrix pair (blocks `C`, `K`).
    pub fn to_em(&self) -> Result<EmCouplingMatrix> {
        EmCouplingMatrix::from_full_matrix(&self.matrix, self.ports)
    }
}

/// Parse a coupling-matrix document.
pub fn parse_matrix(text: &str) -> Result<CouplingMatrixFile> {
    let mut ports = None;
    let mut order = None;
    let mut band = None;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut body_line = 0;
    for (line, content) in content_lines(text) {
        let mut tokens = content.split_whitespace();
        let head = tokens.next().unwrap();
        match head {
            "ports" if rows.is_empty() => {
                let tok = tokens
                    .next()
                    .ok_or_else(|| parse_err(line, "ports needs a value"))?;
                ports = Some(parse_usize(line, tok, "ports")?);
            }
            "order" if rows.is_empty() => {
                let tok = tokens
                    .next()
                    .ok_or_else(|| parse_err(line, "order needs a value"))?;
                order = Some(parse_usize(line, tok, "order")?);
            }
            "band" if rows.is_empty() => {
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
            _ => {
                let row: Result<Vec<f64>> = content
                    .split_whitespace()
                    .map(|tok| parse_f64(line, tok, "matrix entry"))
                    .collect();
                rows.push(row?);
                body_line = line;
            }
        }
    }
    let ports = ports.ok_or_else(|| parse_err(1, "missing `ports` header"))?;
    let order = order.ok_or_else(|| parse_err(1, "missing `order` header"))?;
    let band = band.ok_or_else(|| parse_err(1, "missing `band` header"))?;
    let total = ports + order;
    if rows.len() != total {
        return Err(Error::DimensionMismatch {
            expected: format!("{total} matrix rows"),
            found: format!("{}", rows.len()),
        });
    }
    for row in &rows {
        if row.len() != total {
            return Err(Error::DimensionMismatch {
                expected: format!("{total} entries per row"),
                found: format!("{}", row.len()),
            });
        }
    }
    let matrix = DMatrix::from_fn(total, total, |i, j| rows[i][j]);
    let scale = matrix.iter().fold(1.0_f64, |acc, v| acc.max(v.abs()));
    let mut worst = 0.0_f64;
    for i in 0..total {
        for j in (i + 1)..total {
            worst = worst.max((matrix[(i, j)] - matrix[(j, i)]).abs());
        }
    }
    if worst > ASYMMETRY_TOL * scale {
        return Err(parse_err(
            body_line,
            format!("matrix asymmetric: max |a_ij - a_ji| = {worst}"),
        ));
    }
    Ok(CouplingMatrixFile {
        ports,
        order,
        band,
        matrix,
    })
}

/// Serialize with full round-trip precision.
pub fn serialize_matrix(file: &CouplingMatrixFile) -> String {
    let mut out = String::new();
    out.push_str(&format!("ports {}\n", file.ports));
    out.push_str(&format!("order {}\n", file.order));
    out.push_str(&format!(
        "band {} {}\n",
        file.band.f1_hz(),
        file.band.f2_hz()
    ));
    let total = file.ports + file.order;
    for i in 0..total {
        let row: Vec<String> = (0..total)
            .map(|j| format!("{}", file.matrix[(i, j)]))
            .collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

pub fn read_matrix(path: impl AsRef<Path>) -> Result<CouplingMatrixFile> {
    parse_matrix(&super::read_file(path)?)
}

pub fn write_matrix(path: impl AsRef<Path>, file: &CouplingMatrixFile) -> Result<()> {
    super::write_file(path, serialize_matrix(file))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture(name: &str) -> String {
        let path = format!("{}/fixtures/{name}", env!("CARGO_MANIFEST_DIR"));
        std::fs::read_to_string(path).unwrap()
    }

    #[test]
    fn parses_dual_mode_prototype() {
        let file = parse_matrix(&fixture("dual_mode_classical.cm")).unwrap();
        assert_eq!(file.ports, 2);
        assert_eq!(file.order, 8);
        // Entry (3,4) in 1-based positions is the resonator 1-2 coupling.
        assert_eq!(file.matrix[(2, 3)], 0.8058);
        assert_eq!(file.matrix[(0, 2)], 0.9862);
        let ccm = file.to_classical().unwrap();
        assert_eq!(ccm.order(), 8);
    }

    #[test]
    fn parses_diplexer() {
        let file = parse_matrix(&fixture("diplexer_narrowband.cm")).unwrap();
        assert_eq!(file.ports, 3);
        assert_eq!(file.order, 11);
        assert_eq!(file.matrix.nrows(), 14);
        // Port block is zero.
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(file.matrix[(i, j)], 0.0);
            }
        }
        assert_eq!(file.matrix[(4, 4)], 0.6392);
        assert_eq!(file.matrix[(10, 10)], -0.6354);
    }

    #[test]
    fn all_fixtures_parse_and_are_symmetric() {
        for name in [
            "dual_mode_classical.cm",
            "dual_mode_narrowband.cm",
            "inline_dr_classical.cm",
            "inline_dr_narrowband.cm",
            "inline_dr_narrowband_iris.cm",
            "diplexer_narrowband.cm",
            "diplexer_narrowband_screws.cm",
            "dual_passband_narrowband.cm",
        ] {
            let file = parse_matrix(&fixture(name)).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert_eq!(file.matrix.nrows(), file.ports + file.order, "{name}");
        }
    }

    #[test]
    fn round_trip_preserves_entries() {
        let file = parse_matrix(&fixture("dual_mode_narrowband.cm")).unwrap();
        let text = serialize_matrix(&file);
        let again = parse_matrix(&text).unwrap();
        assert_eq!(file.matrix, again.matrix);
        assert_eq!(file.band, again.band);
    }

    #[test]
    fn non_square_body_rejected() {
        let text = "ports 1\norder 1\nband 1e9 2e9\n0 1\n1";
        match parse_matrix(text) {
            Err(Error::DimensionMismatch { .. }) => {}
            other => panic!("expected DimensionMismatch, got {other:?}"),
        }
    }

    #[test]
    fn asymmetric_body_rejected() {
        let text = "ports 1\norder 1\nband 1e9 2e9\n0 1\n0.9 0";
        match parse_matrix(text) {
            Err(Error::Parse { .. }) => {}
            other => panic!("expected ParseError, got {other:?}"),
        }
    }

    #[test]
    fn missing_header_rejected() {
        let text = "order 1\nband 1e9 2e9\n0 1\n1 0";
        assert!(matches!(parse_matrix(text), Err(Error::Parse { .. })));
    }
}
