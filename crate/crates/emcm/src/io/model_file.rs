//! Pole-residue model files.
//!
//! ```text
//! version 1
//! ports 2
//! eta0 376.730313668
//! band 12.21e9 12.26e9          # optional
//! term 256.2788 0.5 0.25 inband
//! term 0 0.1 0.2 outband
//! ```
//!
//! Each `term` line carries the pole wavenumber in rad/m, the P coupling
//! coefficients (units such that the series evaluates to ohms) and the band
//! classification. Serialization uses shortest round-trip formatting, so
//! parse(serialize(model)) reproduces every field bit for bit.

use std::path::Path;

use super::{content_lines, parse_err, parse_f64, parse_usize};
use crate::error::Result;
use crate::model::{FrequencyBand, PoleResidueModel, PoleResidueTerm};

/// Parsed model document: the model plus its optional analysis band.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile {
    pub model: PoleResidueModel,
    pub band: Option<FrequencyBand>,
}

pub fn parse_model(text: &str) -> Result<ModelFile> {
    let mut version = None;
    let mut ports = None;
    let mut eta0 = None;
    let mut band = None;
    let mut terms = Vec::new();
    for (line, content) in content_lines(text) {
        let mut tokens = content.split_whitespace();
        let head = tokens.next().unwrap();
        match head {
            "version" => {
                let tok = tokens
                    .next()
                    .ok_or_else(|| parse_err(line, "version needs a value"))?;
                let v = parse_usize(line, tok, "version")?;
                if v != 1 {
                    return Err(parse_err(line, format!("unsupported version {v}")));
                }
                version = Some(v);
            }
            "ports" => {
                let tok = tokens
                    .next()
                    .ok_or_else(|| parse_err(line, "ports needs a value"))?;
                ports = Some(parse_usize(line, tok, "ports")?);
            }
            "eta0" => {
                let tok = tokens
                    .next()
                    .ok_or_else(|| parse_err(line, "eta0 needs a value"))?;
                eta0 = Some(parse_f64(line, tok, "eta0")?);
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
            "term" => {
                let p = ports.ok_or_else(|| parse_err(line, "`ports` must come before terms"))?;
                let k_n = parse_f64(
                    line,
                    tokens
                        .next()
                        .ok_or_else(|| parse_err(line, "term needs k_n"))?,
                    "k_n",
                )?;
                let rest: Vec<&str> = tokens.collect();
                if rest.len() != p + 1 {
                    return Err(parse_err(
                        line,
                        format!(
                            "term needs {p} coupling values and a band flag, found {} tokens",
                            rest.len()
                        ),
                    ));
                }
                let mut c = Vec::with_capacity(p);
                for tok in &rest[..p] {
                    c.push(parse_f64(line, tok, "coupling")?);
                }
                let inband = match rest[p] {
                    "inband" => true,
                    "outband" => false,
                    other => {
                        return Err(parse_err(
                            line,
                            format!("band flag must be `inband` or `outband`, found `{other}`"),
                        ))
                    }
                };
                terms.push(PoleResidueTerm::new(k_n, c, inband));
            }
            other => return Err(parse_err(line, format!("unknown field `{other}`"))),
        }
    }
    if version.is_none() {
        return Err(parse_err(1, "missing `version` field"));
    }
    let ports = ports.ok_or_else(|| parse_err(1, "missing `ports` field"))?;
    let mut model = PoleResidueModel::new(ports, terms);
    if let Some(e) = eta0 {
        model.eta0 = e;
    }
    let violations = model.validate();
    if !violations.is_empty() {
        return Err(parse_err(1, format!("invalid model: {}", violations[0])));
    }
    Ok(ModelFile { model, band })
}

pub fn serialize_model(model: &PoleResidueModel, band: Option<&FrequencyBand>) -> String {
    let mut out = String::from("version 1\n");
    out.push_str(&format!("ports {}\n", model.ports));
    out.push_str(&format!("eta0 {}\n", model.eta0));
    if let Some(band) = band {
        out.push_str(&format!("band {} {}\n", band.f1_hz(), band.f2_hz()));
    }
    for term in &model.terms {
        out.push_str(&format!("term {}", term.k_n));
        for c in term.c.iter() {
            out.push_str(&format!(" {c}"));
        }
        out.push_str(if term.inband {
            " inband\n"
        } else {
            " outband\n"
        });
    }
    out
}

pub fn read_model(path: impl AsRef<Path>) -> Result<ModelFile> {
    parse_model(&super::read_file(path)?)
}

pub fn write_model(
    path: impl AsRef<Path>,
    model: &PoleResidueModel,
    band: Option<&FrequencyBand>,
) -> Result<()> {
    super::write_file(path, serialize_model(model, band))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    #[test]
    fn round_trip_is_exact() {
        let model = PoleResidueModel::new(
            2,
            vec![
                PoleResidueTerm::new(256.278_123_456_789, vec![0.1 + 1e-15, -0.25], true),
                PoleResidueTerm::new(0.0, vec![1.0 / 3.0, 2.0 / 7.0], false),
            ],
        )
        .with_eta0(376.730_313_668);
        let band = FrequencyBand::new(12.21e9, 12.26e9).unwrap();
        let text = serialize_model(&model, Some(&band));
        let parsed = parse_model(&text).unwrap();
        // Bit-exact on every field.
        assert_eq!(parsed.model, model);
        assert_eq!(parsed.band.unwrap().f1_hz(), band.f1_hz());
    }

    #[test]
    fn missing_ports_is_named() {
        let text = "version 1\nterm 1.0 0.5 inband\n";
        match parse_model(text) {
            Err(Error::Parse { message, .. }) => assert!(message.contains("ports")),
            other => panic!("expected ParseError, got {other:?}"),
        }
    }

    #[test]
    fn wrong_coupling_count_rejected() {
        let text = "version 1\nports 2\nterm 1.0 0.5 inband\n";
        assert!(matches!(parse_model(text), Err(Error::Parse { .. })));
    }

    #[test]
    fn duplicate_inband_poles_rejected() {
        let text = "version 1\nports 1\nterm 1.0 0.5 inband\nterm 1.0 0.25 inband\n";
        match parse_model(text) {
            Err(Error::Parse { message, .. }) => assert!(message.contains("in-band")),
            other => panic!("expected ParseError, got {other:?}"),
        }
    }

    #[test]
    fn comments_and_blanks_ignored() {
        let text = "# a model\nversion 1\n\nports 1  # one port\nterm 2.5 0.125 outband\n";
        let parsed = parse_model(text).unwrap();
        assert_eq!(parsed.model.ports, 1);
        assert_eq!(parsed.model.terms.len(), 1);
        assert!(parsed.band.is_none());
    }
}
