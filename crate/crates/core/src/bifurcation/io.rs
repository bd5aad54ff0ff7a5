//! Text field files.
//!
//! ```text
//! # bifcurrents-field v1
//! # box re0 re1 im0 im1 [re0' re1' im0' im1']
//! # resolution nx ny [n2re n2im]
//! # convention ddc-log-unit
//! # meta key=value
//! v,v,v,…
//! ```
//!
//! Each data row holds one line of the first axis (`nx` values); rows follow
//! the flat cell order. Values carry 17 significant digits and masked cells
//! are written `nan`. Scalar fields use the convention `scalar`.

use std::collections::BTreeMap;

use super::{BifurcationError, MassField, ScalarField};
use crate::families::Rect;

const MAGIC: &str = "# bifcurrents-field v1";
const SCALAR: &str = "scalar";

#[derive(Debug, Clone, PartialEq)]
pub enum FieldFile {
    Scalar(ScalarField),
    Mass(MassField),
}

impl FieldFile {
    pub fn field(&self) -> &ScalarField {
        match self {
            FieldFile::Scalar(f) => f,
            FieldFile::Mass(m) => &m.field,
        }
    }

    pub fn convention(&self) -> &str {
        match self {
            FieldFile::Scalar(_) => SCALAR,
            FieldFile::Mass(m) => &m.convention,
        }
    }
}

fn format_value(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        "nan".into()
    }
}

pub fn write_field(file: &FieldFile) -> String {
    let f = file.field();
    let mut out = String::new();
    out.push_str(MAGIC);
    out.push('\n');
    out.push_str("# box");
    for b in &f.boxes {
        for x in [b.re0, b.re1, b.im0, b.im1] {
            out.push(' ');
            out.push_str(&format!("{x:?}"));
        }
    }
    out.push_str("\n# resolution");
    for n in &f.shape {
        out.push_str(&format!(" {n}"));
    }
    out.push_str(&format!("\n# convention {}\n", file.convention()));
    for (k, v) in &f.meta {
        out.push_str(&format!("# meta {k}={v}\n"));
    }
    let nx = f.shape[0];
    for row in f.values.chunks(nx) {
        let line: Vec<String> = row.iter().map(|v| format_value(*v)).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

fn err(line: usize, message: impl Into<String>) -> BifurcationError {
    BifurcationError::Parse { line, message: message.into() }
}

fn parse_value(s: &str, line: usize) -> Result<f64, BifurcationError> {
    let s = s.trim();
    if s.eq_ignore_ascii_case("nan") {
        return Ok(f64::NAN);
    }
    s.parse::<f64>().map_err(|_| err(line, format!("bad value {s:?}")))
}

pub fn read_field(text: &str) -> Result<FieldFile, BifurcationError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    match lines.next() {
        Some((_, l)) if l.trim() == MAGIC => {}
        _ => return Err(err(1, "missing field header")),
    }
    let mut boxes = None;
    let mut shape: Option<Vec<usize>> = None;
    let mut convention = None;
    let mut meta = BTreeMap::new();
    let mut values = Vec::new();
    for (no, line) in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            let rest = rest.trim();
            let (key, body) = rest.split_once(' ').unwrap_or((rest, ""));
            match key {
                "box" => {
                    let xs: Vec<f64> =
                        body.split_whitespace().map(|s| parse_value(s, no)).collect::<Result<_, _>>()?;
                    if xs.is_empty() || xs.len() % 4 != 0 {
                        return Err(err(no, "box needs four numbers per parameter"));
                    }
                    boxes = Some(xs.chunks(4).map(|c| Rect::new(c[0], c[1], c[2], c[3])).collect::<Vec<_>>());
                }
                "resolution" => {
                    let ns: Vec<usize> = body
                        .split_whitespace()
                        .map(|s| s.parse().map_err(|_| err(no, format!("bad resolution {s:?}"))))
                        .collect::<Result<_, _>>()?;
                    if ns.iter().any(|&n| n == 0) {
                        return Err(err(no, "zero resolution"));
                    }
                    shape = Some(ns);
                }
                "convention" => convention = Some(body.trim().to_string()),
                "meta" => {
                    let (k, v) = body.split_once('=').ok_or_else(|| err(no, "meta needs key=value"))?;
                    meta.insert(k.trim().to_string(), v.trim().to_string());
                }
                _ => {}
            }
            continue;
        }
        for s in line.split(',') {
            values.push(parse_value(s, no)?);
        }
    }
    let boxes = boxes.ok_or_else(|| err(0, "missing box line"))?;
    let shape = shape.ok_or_else(|| err(0, "missing resolution line"))?;
    let convention = convention.ok_or_else(|| err(0, "missing convention line"))?;
    if shape.len() != 2 * boxes.len() {
        return Err(err(0, "resolution and box dimensions disagree"));
    }
    let n: usize = shape.iter().product();
    if values.len() != n {
        return Err(err(0, format!("expected {n} values, found {}", values.len())));
    }
    let field = ScalarField { boxes, shape, values, meta };
    if convention == SCALAR {
        return Ok(FieldFile::Scalar(field));
    }
    let clamped_negative = field.meta.get("clamped_negative").and_then(|s| s.parse().ok()).unwrap_or(0.0);
    Ok(FieldFile::Mass(MassField { field, convention, clamped_negative }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let mut f = ScalarField::from_fn(vec![Rect::new(-2.5, 1.5, -2.0, 2.0)], vec![7, 5], |p| {
            (p[0].re != 1.5).then(|| (p[0].norm() + 0.1).ln() / 3.0)
        });
        f.meta.insert("family".into(), "quadratic".into());
        let text = write_field(&FieldFile::Scalar(f.clone()));
        assert!(text.starts_with("# bifcurrents-field v1\n# box -2.5 1.5 -2.0 2.0\n# resolution 7 5\n"));
        let back = read_field(&text).unwrap();
        let g = back.field();
        assert_eq!(g.meta, f.meta);
        for (a, b) in f.values.iter().zip(&g.values) {
            assert!(a.to_bits() == b.to_bits() || (a.is_nan() && b.is_nan()));
        }
        assert_eq!(write_field(&back), text);
    }

    #[test]
    fn rejects_short_data() {
        let text = "# bifcurrents-field v1\n# box 0 1 0 1\n# resolution 2 2\n# convention scalar\n1,2\n3\n";
        assert!(matches!(read_field(text), Err(BifurcationError::Parse { .. })));
        assert!(read_field("garbage").is_err());
    }
}
