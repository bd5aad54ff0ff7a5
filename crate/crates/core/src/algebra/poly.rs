use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

/// Dense univariate polynomial with complex coefficients in ascending degree.
///
/// Trailing zero coefficients are trimmed on construction, so the zero
/// polynomial is the empty coefficient list.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Poly1 {
    coeffs: Vec<Complex64>,
}

impl Poly1 {
    pub fn new(mut coeffs: Vec<Complex64>) -> Self {
        while coeffs.last().is_some_and(|c| c.norm_sqr() == 0.0) {
            coeffs.pop();
        }
        Poly1 { coeffs }
    }

    pub fn from_real(coeffs: &[f64]) -> Self {
        Self::new(coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect())
    }

    /// `lc · Π (z − r)`.
    pub fn from_roots(roots: &[Complex64], lc: Complex64) -> Self {
        let mut coeffs = vec![lc];
        for &r in roots {
            let mut next = vec![Complex64::new(0.0, 0.0); coeffs.len() + 1];
            for (i, &c) in coeffs.iter().enumerate() {
                next[i + 1] += c;
                next[i] -= c * r;
            }
            coeffs = next;
        }
        Self::new(coeffs)
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading(&self) -> Option<Complex64> {
        self.coeffs.last().copied()
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    /// Value and first derivative by Horner's scheme.
    pub fn eval_with_derivative(&self, z: Complex64) -> (Complex64, Complex64) {
        let zero = Complex64::new(0.0, 0.0);
        let mut p = zero;
        let mut dp = zero;
        for &c in self.coeffs.iter().rev() {
            dp = dp * z + p;
            p = p * z + c;
        }
        (p, dp)
    }

    /// `Σ |a_i| |z|^i`, the rounding scale of an evaluation at `z`.
    pub fn eval_scale(&self, z: Complex64) -> f64 {
        let r = z.norm();
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * r + c.norm())
    }

    pub fn derivative(&self) -> Poly1 {
        Poly1::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, &c)| c * i as f64)
                .collect(),
        )
    }

    pub fn scale(&self, s: Complex64) -> Poly1 {
        Poly1::new(self.coeffs.iter().map(|&c| c * s).collect())
    }

    /// Largest coefficient modulus.
    pub fn max_coeff(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }
}

impl Add for &Poly1 {
    type Output = Poly1;
    fn add(self, rhs: &Poly1) -> Poly1 {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        let get = |v: &[Complex64], i: usize| v.get(i).copied().unwrap_or_default();
        Poly1::new((0..n).map(|i| get(&self.coeffs, i) + get(&rhs.coeffs, i)).collect())
    }
}

impl Sub for &Poly1 {
    type Output = Poly1;
    fn sub(self, rhs: &Poly1) -> Poly1 {
        self + &rhs.scale(Complex64::new(-1.0, 0.0))
    }
}

impl Mul for &Poly1 {
    type Output = Poly1;
    fn mul(self, rhs: &Poly1) -> Poly1 {
        if self.is_zero() || rhs.is_zero() {
            return Poly1::default();
        }
        let mut out = vec![Complex64::new(0.0, 0.0); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly1::new(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn trims_and_evaluates() {
        let p = Poly1::new(vec![c(1.0), c(0.0), c(2.0), c(0.0)]);
        assert_eq!(p.degree(), Some(2));
        assert_eq!(p.eval(c(2.0)), c(9.0));
        let (v, dv) = p.eval_with_derivative(c(2.0));
        assert_eq!((v, dv), (c(9.0), c(8.0)));
        assert_eq!(Poly1::new(vec![c(0.0)]).degree(), None);
    }

    #[test]
    fn from_roots_matches_product() {
        let p = Poly1::from_roots(&[c(1.0), c(-1.0)], c(2.0));
        assert_eq!(p.coeffs(), &[c(-2.0), c(0.0), c(2.0)]);
        let q = &Poly1::from_real(&[-1.0, 1.0]) * &Poly1::from_real(&[1.0, 1.0]);
        assert_eq!(q, Poly1::from_real(&[-1.0, 0.0, 1.0]));
    }
}
