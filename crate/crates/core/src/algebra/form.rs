use num_complex::Complex64;

use super::roots::{root_approximations, CLUSTER_RADIUS};
use super::{AlgebraError, Poly1};
use crate::point::P1Point;

/// Homogeneous polynomial in `(z0, z1)`: `Σ_i coeffs[i] · z0^{d−i} z1^i`.
///
/// The degree is explicit, so a form whose top coefficients cancel keeps its
/// nominal degree (its missing roots sit at infinity).
#[derive(Clone, Debug, PartialEq)]
pub struct BinaryForm {
    coeffs: Vec<Complex64>,
}

impl BinaryForm {
    /// # Panics
    /// If `coeffs` is empty.
    pub fn new(coeffs: Vec<Complex64>) -> Self {
        assert!(!coeffs.is_empty(), "a binary form needs degree + 1 coefficients");
        BinaryForm { coeffs }
    }

    pub fn zero(degree: usize) -> Self {
        BinaryForm { coeffs: vec![Complex64::new(0.0, 0.0); degree + 1] }
    }

    /// `c · z0^{d−i} z1^i`.
    pub fn monomial(degree: usize, i: usize, c: Complex64) -> Self {
        let mut f = Self::zero(degree);
        f.coeffs[i] = c;
        f
    }

    /// The linear form `(a, b) ∧ (z0, z1) = a·z1 − b·z0`.
    pub fn wedge(a: Complex64, b: Complex64) -> Self {
        BinaryForm { coeffs: vec![-b, a] }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.norm_sqr() == 0.0)
    }

    pub fn max_coeff(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn eval(&self, z0: Complex64, z1: Complex64) -> Complex64 {
        // Horner in whichever variable is smaller in modulus
        if z0.norm_sqr() >= z1.norm_sqr() {
            let t = z1 / z0;
            let h = self.coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * t + c);
            h * z0.powu(self.degree() as u32)
        } else {
            let t = z0 / z1;
            let h = self.coeffs.iter().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * t + c);
            h * z1.powu(self.degree() as u32)
        }
    }

    /// Plain Horner evaluation without the chart switch; exact on `(0, 0)`.
    pub fn eval_direct(&self, z0: Complex64, z1: Complex64) -> Complex64 {
        let d = self.degree();
        let mut p0 = vec![Complex64::new(1.0, 0.0); d + 1];
        let mut p1 = vec![Complex64::new(1.0, 0.0); d + 1];
        for i in 1..=d {
            p0[i] = p0[i - 1] * z0;
            p1[i] = p1[i - 1] * z1;
        }
        self.coeffs.iter().enumerate().map(|(i, &c)| c * p0[d - i] * p1[i]).sum()
    }

    /// `Σ |c_i| |z0|^{d−i} |z1|^i`.
    pub fn eval_scale(&self, z0: Complex64, z1: Complex64) -> f64 {
        let d = self.degree() as i32;
        let (a, b) = (z0.norm(), z1.norm());
        self.coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| c.norm() * a.powi(d - i as i32) * b.powi(i as i32))
            .sum()
    }

    pub fn scale(&self, s: Complex64) -> Self {
        BinaryForm { coeffs: self.coeffs.iter().map(|&c| c * s).collect() }
    }

    /// # Panics
    /// If the degrees differ.
    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.degree(), other.degree(), "degree mismatch in form addition");
        BinaryForm { coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect() }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero(self.degree() + other.degree());
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in other.coeffs.iter().enumerate() {
                out.coeffs[i + j] += a * b;
            }
        }
        out
    }

    pub fn pow(&self, n: usize) -> Self {
        let mut out = BinaryForm::new(vec![Complex64::new(1.0, 0.0)]);
        for _ in 0..n {
            out = out.mul(self);
        }
        out
    }

    /// `∂/∂z0`.
    pub fn partial_z0(&self) -> Self {
        let d = self.degree();
        if d == 0 {
            return Self::zero(0);
        }
        BinaryForm { coeffs: (0..d).map(|i| self.coeffs[i] * (d - i) as f64).collect() }
    }

    /// `∂/∂z1`.
    pub fn partial_z1(&self) -> Self {
        let d = self.degree();
        if d == 0 {
            return Self::zero(0);
        }
        BinaryForm { coeffs: (1..=d).map(|i| self.coeffs[i] * i as f64).collect() }
    }

    /// `self(p, q)` for forms `p`, `q` of a common degree `e`; degree `d·e`.
    pub fn compose(&self, p: &Self, q: &Self) -> Self {
        assert_eq!(p.degree(), q.degree(), "substituted forms must share a degree");
        let d = self.degree();
        let e = p.degree();
        let ppow: Vec<Self> = std::iter::successors(Some(BinaryForm::new(vec![Complex64::new(1.0, 0.0)])), |x| {
            Some(x.mul(p))
        })
        .take(d + 1)
        .collect();
        let qpow: Vec<Self> = std::iter::successors(Some(BinaryForm::new(vec![Complex64::new(1.0, 0.0)])), |x| {
            Some(x.mul(q))
        })
        .take(d + 1)
        .collect();
        let mut out = Self::zero(d * e);
        for (i, &c) in self.coeffs.iter().enumerate() {
            if c.norm_sqr() == 0.0 {
                continue;
            }
            out = out.add(&ppow[d - i].mul(&qpow[i]).scale(c));
        }
        out
    }

    /// Dehomogenization in `w = z0 / z1`, ascending in `w`.
    pub fn affine_poly(&self) -> Poly1 {
        Poly1::new(self.coeffs.iter().rev().copied().collect())
    }

    /// Dehomogenization in `u = z1 / z0`, ascending in `u`.
    pub fn reciprocal_poly(&self) -> Poly1 {
        Poly1::new(self.coeffs.clone())
    }

    /// Zeros on P¹ with multiplicities (summing to the nominal degree).
    ///
    /// Roots are found in the affine chart; those outside the unit disc are
    /// Newton-polished in the reciprocal chart, and missing degree becomes a
    /// root at infinity.
    pub fn projective_roots(&self) -> Result<Vec<(P1Point, usize)>, AlgebraError> {
        Ok(cluster_points(&self.projective_root_approximations()?))
    }

    /// Unclustered zeros on P¹, repeated by multiplicity.
    pub fn projective_root_approximations(&self) -> Result<Vec<P1Point>, AlgebraError> {
        if self.is_zero() {
            return Err(AlgebraError::ZeroForm);
        }
        let d = self.degree();
        let affine = self.affine_poly();
        let finite_degree = affine.degree().unwrap_or(0);
        let at_infinity = d - finite_degree;
        let mut approx: Vec<P1Point> = Vec::with_capacity(d);
        if finite_degree > 0 {
            let recip = self.reciprocal_poly();
            for w in root_approximations(&affine)? {
                if w.norm_sqr() <= 1.0 {
                    approx.push(P1Point::Affine(newton_polish(&affine, w)));
                } else {
                    approx.push(P1Point::Reciprocal(newton_polish(&recip, w.inv())));
                }
            }
        }
        approx.extend(std::iter::repeat_n(P1Point::infinity(), at_infinity));
        Ok(approx)
    }
}

/// A few Newton steps that are only accepted while they reduce the residual.
pub(crate) fn newton_polish(p: &Poly1, mut z: Complex64) -> Complex64 {
    let mut best = p.eval(z).norm();
    for _ in 0..4 {
        let (v, dv) = p.eval_with_derivative(z);
        if dv.norm_sqr() == 0.0 || v.norm_sqr() == 0.0 {
            break;
        }
        let cand = z - v / dv;
        let r = p.eval(cand).norm();
        if r.is_finite() && r < best {
            best = r;
            z = cand;
        } else {
            break;
        }
    }
    z
}

/// Clusters points of P¹ by chordal distance `CLUSTER_RADIUS`.
pub(crate) fn cluster_points(points: &[P1Point]) -> Vec<(P1Point, usize)> {
    let mut out: Vec<(Vec<[Complex64; 2]>, usize)> = Vec::new();
    let mut reps: Vec<P1Point> = Vec::new();
    for p in points {
        match reps.iter().position(|r| r.chordal_distance(p) <= CLUSTER_RADIUS) {
            Some(k) => {
                out[k].0.push(p.unit_lift());
                out[k].1 += 1;
            }
            None => {
                reps.push(*p);
                out.push((vec![p.unit_lift()], 1));
            }
        }
    }
    out.into_iter()
        .zip(reps)
        .map(|((lifts, m), rep)| {
            if m == 1 {
                return (rep, 1);
            }
            // centroid of phase-aligned unit lifts
            let r = rep.unit_lift();
            let mut acc = [Complex64::new(0.0, 0.0); 2];
            for l in &lifts {
                let s = l[0] * r[0].conj() + l[1] * r[1].conj();
                let phase = if s.norm() > 0.0 { s.conj() / s.norm() } else { Complex64::new(1.0, 0.0) };
                acc[0] += l[0] * phase;
                acc[1] += l[1] * phase;
            }
            (P1Point::from_homogeneous(acc[0], acc[1]), m)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn partials_and_eval() {
        // z0^2 + 3 z0 z1
        let f = BinaryForm::new(vec![c(1.0), c(3.0), c(0.0)]);
        assert_eq!(f.eval(c(1.0), c(2.0)), c(7.0));
        assert_eq!(f.eval_direct(c(1.0), c(2.0)), c(7.0));
        assert_eq!(f.partial_z0().coeffs(), &[c(2.0), c(3.0)]);
        assert_eq!(f.partial_z1().coeffs(), &[c(3.0), c(0.0)]);
    }

    #[test]
    fn wedge_convention() {
        // (a, b) ∧ (z0, z1) = a z1 − b z0
        let l = BinaryForm::wedge(c(2.0), c(5.0));
        assert_eq!(l.eval(c(1.0), c(0.0)), c(-5.0));
        assert_eq!(l.eval(c(0.0), c(1.0)), c(2.0));
    }

    #[test]
    fn compose_matches_evaluation() {
        let f = BinaryForm::new(vec![c(1.0), c(-2.0), c(0.5)]);
        let p = BinaryForm::new(vec![c(1.0), c(0.0), c(1.0)]);
        let q = BinaryForm::new(vec![c(0.0), c(1.0), c(3.0)]);
        let h = f.compose(&p, &q);
        assert_eq!(h.degree(), 4);
        let (z0, z1) = (Complex64::new(0.3, -1.2), Complex64::new(0.7, 0.1));
        let direct = f.eval(p.eval(z0, z1), q.eval(z0, z1));
        assert!((h.eval(z0, z1) - direct).norm() < 1e-13);
    }

    #[test]
    fn projective_roots_include_infinity() {
        // z0 z1 vanishes at [0:1] and [1:0]
        let r = BinaryForm::new(vec![c(0.0), c(1.0), c(0.0)]).projective_roots().unwrap();
        assert_eq!(r.len(), 2);
        assert!(r.iter().any(|(p, m)| p.is_infinity() && *m == 1));
        assert!(r.iter().any(|(p, m)| p.to_affine() == Some(c(0.0)) && *m == 1));
        // z1^2 has a double root at infinity
        let r = BinaryForm::new(vec![c(0.0), c(0.0), c(1.0)]).projective_roots().unwrap();
        assert_eq!(r, vec![(P1Point::infinity(), 2)]);
        assert_eq!(BinaryForm::zero(2).projective_roots(), Err(AlgebraError::ZeroForm));
    }
}
