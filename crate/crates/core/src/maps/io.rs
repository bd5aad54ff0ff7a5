//! Map files:
//!
//! ```text
//! # comment
//! degree 2
//! P: -1 0 1
//! Q: 1 0 0
//! ```
//!
//! `P` and `Q` list the coefficients of the numerator and denominator in
//! ascending powers of the affine coordinate `z`, so the file above is
//! `z² − 1`. Missing trailing coefficients are zero. The homogeneous lift
//! is `P(z0, z1) = Σ p_i z0^i z1^{d−i}`, and likewise for `Q`.

use std::fmt::Write as _;

use num_complex::Complex64;

use super::expr::parse_complex;
use super::{MapError, RationalMap};

pub fn parse_map_file(text: &str) -> Result<RationalMap, MapError> {
    let mut degree: Option<usize> = None;
    let mut num: Option<Vec<Complex64>> = None;
    let mut den: Option<Vec<Complex64>> = None;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let err = |message: String| MapError::Parse { line: line_no, message };
        let line = raw.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("degree") {
            let d = rest.trim().parse::<usize>().map_err(|_| err(format!("bad degree '{}'", rest.trim())))?;
            degree = Some(d);
        } else if let Some((key, rest)) = line.split_once(':') {
            let coeffs = rest
                .split_whitespace()
                .map(|t| parse_complex(t).map_err(|e| err(format!("coefficient '{t}': {e}"))))
                .collect::<Result<Vec<_>, _>>()?;
            match key.trim() {
                "P" => num = Some(coeffs),
                "Q" => den = Some(coeffs),
                other => return Err(err(format!("unknown directive '{other}'"))),
            }
        } else {
            return Err(err(format!("unrecognized line '{line}'")));
        }
    }
    let missing = |what: &str| MapError::Parse { line: 0, message: format!("missing {what}") };
    let d = degree.ok_or_else(|| missing("degree"))?;
    let mut num = num.ok_or_else(|| missing("P"))?;
    let mut den = den.ok_or_else(|| missing("Q"))?;
    for (name, v) in [("P", &mut num), ("Q", &mut den)] {
        if v.len() > d + 1 {
            return Err(MapError::Parse { line: 0, message: format!("{name} has more than {} coefficients", d + 1) });
        }
        v.resize(d + 1, Complex64::new(0.0, 0.0));
    }
    RationalMap::from_affine(&num, &den)
}

/// Inverse of [`parse_map_file`]; coefficients are written with round-trip precision.
pub fn format_map_file(f: &RationalMap) -> String {
    let d = f.degree();
    let mut out = format!("degree {d}\n");
    for (name, form) in [("P", f.numerator()), ("Q", f.denominator())] {
        let _ = write!(out, "{name}:");
        // ascending affine powers are the form coefficients reversed
        for c in form.coeffs().iter().rev() {
            let _ = write!(out, " {}{:+}i", c.re, c.im);
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::point::P1Point;

    #[test]
    fn parses_quadratic() {
        let f = parse_map_file("# basilica\ndegree 2\nP: -1 0 1\nQ: 1\n").unwrap();
        let w = f.eval(&P1Point::from_affine(Complex64::new(0.5, 0.0)));
        assert!((w.to_affine().unwrap() - Complex64::new(-0.75, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn round_trip() {
        let f = parse_map_file("degree 2\nP: 0.1+0.2i -1 0.5i\nQ: 1 0.3-0.1i 0.25\n").unwrap();
        let g = parse_map_file(&format_map_file(&f)).unwrap();
        assert_eq!(f.numerator(), g.numerator());
        assert_eq!(f.denominator(), g.denominator());
    }

    #[test]
    fn reports_line_numbers() {
        match parse_map_file("degree 2\nP: 1 x 2\nQ: 1\n") {
            Err(MapError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_map_file("degree 2\nP: 1 0 0 0\nQ: 1\n"), Err(MapError::Parse { .. })));
        assert!(matches!(parse_map_file("degree 2\nP: 0 0 1\n"), Err(MapError::Parse { .. })));
    }
}
