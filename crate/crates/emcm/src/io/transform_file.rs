//! Basis-transform files: an `order N` header and the N x N orthogonal
//! matrix, row by row.

use std::path::Path;

use nalgebra::DMatrix;

use super::{content_lines, parse_err, parse_f64, parse_usize};
use crate::basis::BasisTransform;
use crate::error::{Error, Result};

pub fn parse_transform(text: &str) -> Result<BasisTransform> {
    let mut order = None;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (line, content) in content_lines(text) {
        let mut tokens = content.split_whitespace();
        let head = tokens.next().unwrap();
        if head == "order" && rows.is_empty() {
            let tok = tokens
                .next()
                .ok_or_else(|| parse_err(line, "order needs a value"))?;
            order = Some(parse_usize(line, tok, "order")?);
        } else {
            let row: Result<Vec<f64>> = content
                .split_whitespace()
                .map(|tok| parse_f64(line, tok, "matrix entry"))
                .collect();
            rows.push(row?);
        }
    }
    let order = order.ok_or_else(|| parse_err(1, "missing `order` header"))?;
    if rows.len() != order || rows.iter().any(|r| r.len() != order) {
        return Err(Error::DimensionMismatch {
            expected: format!("{order} x {order}"),
            found: format!("{} rows", rows.len()),
        });
    }
    BasisTransform::new(DMatrix::from_fn(order, order, |i, j| rows[i][j]))
}

pub fn serialize_transform(transform: &BasisTransform) -> String {
    let n = transform.dim();
    let mut out = format!("order {n}\n");
    for i in 0..n {
        let row: Vec<String> = (0..n)
            .map(|j| format!("{}", transform.matrix()[(i, j)]))
            .collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

pub fn read_transform(path: impl AsRef<Path>) -> Result<BasisTransform> {
    parse_transform(&super::read_file(path)?)
}

pub fn write_transform(path: impl AsRef<Path>, transform: &BasisTransform) -> Result<()> {
    super::write_file(path, serialize_transform(transform))
}
