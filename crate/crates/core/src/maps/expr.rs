//! Complex arithmetic expressions such as `0.5-1.2i`, `2*l1^2+i*l2` or `-(1+i)/3`.
//!
//! ```text
//! expr    = term { ("+" | "-") term } ;
//! term    = power { ("*" | "/") power } ;
//! power   = unary [ "^" integer ] ;
//! unary   = [ "-" | "+" ] unary | primary ;
//! primary = number [ "i" ] | "i" | ident | "(" expr ")" ;
//! ```

use std::collections::BTreeSet;

use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("unexpected '{found}' at offset {pos}")]
    Unexpected { pos: usize, found: String },
    #[error("unexpected end of expression")]
    UnexpectedEnd,
    #[error("unknown variable '{0}'")]
    UnknownVariable(String),
    #[error("exponent must be a nonnegative integer")]
    BadExponent,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Const(Complex64),
    Var(String),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, u32),
}

impl Expr {
    pub fn parse(s: &str) -> Result<Expr, ExprError> {
        let mut p = Parser { s: s.as_bytes(), pos: 0 };
        let e = p.expr()?;
        p.skip_ws();
        if p.pos < p.s.len() {
            return Err(p.unexpected());
        }
        Ok(e)
    }

    /// Evaluates with the given variable bindings.
    pub fn eval(&self, vars: &[(&str, Complex64)]) -> Result<Complex64, ExprError> {
        Ok(match self {
            Expr::Const(c) => *c,
            Expr::Var(v) => vars
                .iter()
                .find(|(n, _)| n == v)
                .map(|(_, x)| *x)
                .ok_or_else(|| ExprError::UnknownVariable(v.clone()))?,
            Expr::Neg(a) => -a.eval(vars)?,
            Expr::Add(a, b) => a.eval(vars)? + b.eval(vars)?,
            Expr::Sub(a, b) => a.eval(vars)? - b.eval(vars)?,
            Expr::Mul(a, b) => a.eval(vars)? * b.eval(vars)?,
            Expr::Div(a, b) => a.eval(vars)? / b.eval(vars)?,
            Expr::Pow(a, k) => a.eval(vars)?.powu(*k),
        })
    }

    pub fn variables(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Expr::Const(_) => {}
            Expr::Var(v) => {
                out.insert(v.clone());
            }
            Expr::Neg(a) | Expr::Pow(a, _) => a.collect_vars(out),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }
}

/// Parses a constant complex literal.
pub fn parse_complex(s: &str) -> Result<Complex64, ExprError> {
    Expr::parse(s)?.eval(&[])
}

struct Parser<'a> {
    s: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn skip_ws(&mut self) {
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.s.get(self.pos).copied()
    }

    fn unexpected(&self) -> ExprError {
        match self.s.get(self.pos) {
            Some(&c) => ExprError::Unexpected { pos: self.pos, found: (c as char).to_string() },
            None => ExprError::UnexpectedEnd,
        }
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Some(b'-') => {
                    self.pos += 1;
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.power()?;
        loop {
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.power()?));
                }
                Some(b'/') => {
                    self.pos += 1;
                    lhs = Expr::Div(Box::new(lhs), Box::new(self.power()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.unary()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            self.skip_ws();
            let start = self.pos;
            while self.pos < self.s.len() && self.s[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            let k: u32 = std::str::from_utf8(&self.s[start..self.pos])
                .unwrap()
                .parse()
                .map_err(|_| ExprError::BadExponent)?;
            return Ok(Expr::Pow(Box::new(base), k));
        }
        Ok(base)
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                Ok(Expr::Neg(Box::new(self.unary()?)))
            }
            Some(b'+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.primary(),
        }
    }

    fn primary(&mut self) -> Result<Expr, ExprError> {
        match self.peek() {
            None => Err(ExprError::UnexpectedEnd),
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(self.unexpected());
                }
                self.pos += 1;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => {
                let x = self.number()?;
                if self.s.get(self.pos) == Some(&b'i') && !self.ident_continues(self.pos + 1) {
                    self.pos += 1;
                    return Ok(Expr::Const(Complex64::new(0.0, x)));
                }
                Ok(Expr::Const(Complex64::new(x, 0.0)))
            }
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => {
                let start = self.pos;
                while self.ident_continues(self.pos) {
                    self.pos += 1;
                }
                let name = std::str::from_utf8(&self.s[start..self.pos]).unwrap();
                if name == "i" {
                    Ok(Expr::Const(Complex64::new(0.0, 1.0)))
                } else {
                    Ok(Expr::Var(name.to_string()))
                }
            }
            _ => Err(self.unexpected()),
        }
    }

    fn ident_continues(&self, pos: usize) -> bool {
        self.s.get(pos).is_some_and(|c| c.is_ascii_alphanumeric() || *c == b'_')
    }

    fn number(&mut self) -> Result<f64, ExprError> {
        let start = self.pos;
        while self.pos < self.s.len() && (self.s[self.pos].is_ascii_digit() || self.s[self.pos] == b'.') {
            self.pos += 1;
        }
        // exponent part, only if followed by a digit or sign+digit
        if matches!(self.s.get(self.pos), Some(b'e' | b'E')) {
            let mut p = self.pos + 1;
            if matches!(self.s.get(p), Some(b'+' | b'-')) {
                p += 1;
            }
            if self.s.get(p).is_some_and(u8::is_ascii_digit) {
                self.pos = p;
                while self.pos < self.s.len() && self.s[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
            }
        }
        std::str::from_utf8(&self.s[start..self.pos])
            .unwrap()
            .parse()
            .map_err(|_| ExprError::Unexpected { pos: start, found: "number".into() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn literals() {
        assert_eq!(parse_complex("0.5+0.31i").unwrap(), c(0.5, 0.31));
        assert_eq!(parse_complex("-2").unwrap(), c(-2.0, 0.0));
        assert_eq!(parse_complex("-i").unwrap(), c(0.0, -1.0));
        assert_eq!(parse_complex("1e-3-2.5e2i").unwrap(), c(1e-3, -250.0));
        assert_eq!(parse_complex("(1+i)^2").unwrap(), c(0.0, 2.0));
    }

    #[test]
    fn precedence_and_variables() {
        let e = Expr::parse("2*l1^2 - l2/(1+i)").unwrap();
        let v = e.eval(&[("l1", c(1.0, 1.0)), ("l2", c(2.0, 0.0))]).unwrap();
        assert!((v - (c(0.0, 4.0) - c(1.0, -1.0))).norm() < 1e-15);
        assert_eq!(e.variables().into_iter().collect::<Vec<_>>(), vec!["l1", "l2"]);
    }

    #[test]
    fn errors() {
        assert!(matches!(Expr::parse("1+"), Err(ExprError::UnexpectedEnd)));
        assert!(matches!(Expr::parse("(1"), Err(ExprError::UnexpectedEnd)));
        assert!(matches!(Expr::parse("1 2"), Err(ExprError::Unexpected { .. })));
        assert!(matches!(Expr::parse("x").unwrap().eval(&[]), Err(ExprError::UnknownVariable(_))));
    }
}
