//! Zero-set files: one `tz`, `rz` or `pole` line per entry, all in the
//! normalized low-pass frequency variable.
//!
//! ```text
//! tz -1.6819
//! rz -0.9651
//! pole -0.9143 0.0612
//! ```

use std::path::Path;

use num_complex::Complex64;

use super::{content_lines, parse_err, parse_f64};
use crate::error::Result;
use crate::fit::classical::ZeroSet;

pub fn parse_zeros(text: &str) -> Result<ZeroSet> {
    let mut zs = ZeroSet {
        transmission_zeros: Vec::new(),
        reflection_zeros: Vec::new(),
        prototype_poles: Vec::new(),
    };
    for (line, content) in content_lines(text) {
        let mut tokens = content.split_whitespace();
        let head = tokens.next().unwrap();
        match head {
            "tz" => {
                let tok = tokens
                    .next()
                    .ok_or_else(|| parse_err(line, "tz needs a value"))?;
                zs.transmission_zeros.push(parse_f64(line, tok, "tz")?);
            }
            "rz" => {
                let tok = tokens
                    .next()
                    .ok_or_else(|| parse_err(line, "rz needs a value"))?;
                zs.reflection_zeros.push(parse_f64(line, tok, "rz")?);
            }
            "pole" => {
                let re = parse_f64(
                    line,
                    tokens
                        .next()
                        .ok_or_else(|| parse_err(line, "pole needs re im"))?,
                    "pole re",
                )?;
                let im = parse_f64(
                    line,
                    tokens
                        .next()
                        .ok_or_else(|| parse_err(line, "pole needs re im"))?,
                    "pole im",
                )?;
                zs.prototype_poles.push(Complex64::new(re, im));
            }
            other => return Err(parse_err(line, format!("unknown entry `{other}`"))),
        }
    }
    zs.transmission_zeros
        .sort_by(|a, b| a.partial_cmp(b).unwrap());
    zs.reflection_zeros
        .sort_by(|a, b| a.partial_cmp(b).unwrap());
    zs.prototype_poles.sort_by(|a, b| {
        a.re.partial_cmp(&b.re)
            .unwrap()
            .then(a.im.partial_cmp(&b.im).unwrap())
    });
    Ok(zs)
}

pub fn serialize_zeros(zs: &ZeroSet) -> String {
    let mut out = String::new();
    for tz in &zs.transmission_zeros {
        out.push_str(&format!("tz {tz}\n"));
    }
    for rz in &zs.reflection_zeros {
        out.push_str(&format!("rz {rz}\n"));
    }
    for pole in &zs.prototype_poles {
        out.push_str(&format!("pole {} {}\n", pole.re, pole.im));
    }
    out
}

pub fn read_zeros(path: impl AsRef<Path>) -> Result<ZeroSet> {
    parse_zeros(&super::read_file(path)?)
}

pub fn write_zeros(path: impl AsRef<Path>, zs: &ZeroSet) -> Result<()> {
    super::write_file(path, serialize_zeros(zs))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let zs = ZeroSet {
            transmission_zeros: vec![-1.68, 1.71],
            reflection_zeros: vec![-0.96, -0.52, 0.17],
            prototype_poles: vec![Complex64::new(-0.9, 0.1), Complex64::new(0.4, 0.2)],
        };
        let parsed = parse_zeros(&serialize_zeros(&zs)).unwrap();
        assert_eq!(parsed, zs);
    }
}
