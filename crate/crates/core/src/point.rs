//! Points of the Riemann sphere P¹.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// A point of P¹ stored in whichever affine chart keeps the coordinate inside
/// the closed unit disc. The point at infinity is `Reciprocal(0)`; it is never
/// represented by a large float.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum P1Point {
    /// `z = z0 / z1` with `|z| <= 1`.
    Affine(Complex64),
    /// `u = z1 / z0` with `|u| <= 1`.
    Reciprocal(Complex64),
}

impl P1Point {
    pub fn infinity() -> Self {
        P1Point::Reciprocal(Complex64::new(0.0, 0.0))
    }

    /// Builds the point `z` of the affine chart, switching charts when `|z| > 1`.
    pub fn from_affine(z: Complex64) -> Self {
        if z.norm_sqr() <= 1.0 {
            P1Point::Affine(z)
        } else {
            P1Point::Reciprocal(z.inv())
        }
    }

    /// The class of a nonzero vector `(z0, z1)` of C².
    pub fn from_homogeneous(z0: Complex64, z1: Complex64) -> Self {
        if z1.norm_sqr() >= z0.norm_sqr() {
            P1Point::Affine(z0 / z1)
        } else {
            P1Point::Reciprocal(z1 / z0)
        }
    }

    /// Chart lift: `(z, 1)` or `(1, u)`.
    pub fn lift(&self) -> [Complex64; 2] {
        let one = Complex64::new(1.0, 0.0);
        match *self {
            P1Point::Affine(z) => [z, one],
            P1Point::Reciprocal(u) => [one, u],
        }
    }

    /// Lift of Euclidean norm one.
    pub fn unit_lift(&self) -> [Complex64; 2] {
        let [a, b] = self.lift();
        let n = (a.norm_sqr() + b.norm_sqr()).sqrt();
        [a / n, b / n]
    }

    /// The affine coordinate, or `None` at infinity.
    pub fn to_affine(&self) -> Option<Complex64> {
        match *self {
            P1Point::Affine(z) => Some(z),
            P1Point::Reciprocal(u) if u.norm_sqr() == 0.0 => None,
            P1Point::Reciprocal(u) => Some(u.inv()),
        }
    }

    pub fn is_infinity(&self) -> bool {
        matches!(*self, P1Point::Reciprocal(u) if u.norm_sqr() == 0.0)
    }

    /// Chordal distance `|v ∧ w| / (‖v‖ ‖w‖)`, in `[0, 1]`.
    pub fn chordal_distance(&self, other: &P1Point) -> f64 {
        let [a0, a1] = self.unit_lift();
        let [b0, b1] = other.unit_lift();
        (a0 * b1 - a1 * b0).norm()
    }

    /// Complex conjugate point.
    pub fn conj(&self) -> Self {
        match *self {
            P1Point::Affine(z) => P1Point::Affine(z.conj()),
            P1Point::Reciprocal(u) => P1Point::Reciprocal(u.conj()),
        }
    }
}

impl fmt::Display for P1Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.to_affine() {
            None => write!(f, "inf"),
            Some(z) => write!(f, "{}{:+}i", z.re, z.im),
        }
    }
}

/// Symmetric Hausdorff distance between two finite point sets in the chordal metric.
pub fn hausdorff_distance(a: &[P1Point], b: &[P1Point]) -> f64 {
    let one_way = |x: &[P1Point], y: &[P1Point]| {
        x.iter()
            .map(|p| y.iter().map(|q| p.chordal_distance(q)).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    one_way(a, b).max(one_way(b, a))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chart_switch_and_distance() {
        let p = P1Point::from_affine(Complex64::new(4.0, 0.0));
        assert!(matches!(p, P1Point::Reciprocal(_)));
        assert!((p.to_affine().unwrap() - Complex64::new(4.0, 0.0)).norm() < 1e-15);
        let inf = P1Point::infinity();
        assert!(inf.is_infinity());
        assert_eq!(inf.to_affine(), None);
        // 0 and infinity are antipodal
        let zero = P1Point::from_affine(Complex64::new(0.0, 0.0));
        assert!((zero.chordal_distance(&inf) - 1.0).abs() < 1e-15);
        assert!(p.chordal_distance(&p) < 1e-15);
    }
}
