use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{AlgebraError, BinaryForm};

/// `h(z) = Π_j (c_j ∧ z)` with `(a, b) ∧ (z0, z1) = a·z1 − b·z0`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearFactorization {
    /// Leading scalar before absorption; kept for diagnostics only.
    pub absorbed_scalar: Complex64,
    /// Remaining scalar factor; 1 after absorption.
    pub scalar: Complex64,
    /// One vector per linear factor, repeated by multiplicity. The first
    /// carries the absorbed scalar, the rest have unit norm.
    pub vectors: Vec<[Complex64; 2]>,
    /// Worst relative reconstruction error over the verification points.
    pub residual: f64,
}

impl LinearFactorization {
    /// `Π_j (c_j ∧ z)`.
    pub fn eval(&self, z0: Complex64, z1: Complex64) -> Complex64 {
        self.vectors.iter().fold(self.scalar, |acc, v| acc * (v[0] * z1 - v[1] * z0))
    }

    /// Expanded product as a binary form.
    pub fn to_form(&self) -> BinaryForm {
        self.vectors
            .iter()
            .fold(BinaryForm::new(vec![self.scalar]), |acc, v| acc.mul(&BinaryForm::wedge(v[0], v[1])))
    }
}

/// Number of random points at which a factorization is verified.
const CHECK_POINTS: usize = 10;

/// Factors a nonzero binary form into linear forms, including directions at
/// infinity, and absorbs the overall scalar into the first vector.
pub fn factor_linear(h: &BinaryForm) -> Result<LinearFactorization, AlgebraError> {
    if h.is_zero() {
        return Err(AlgebraError::ZeroForm);
    }
    let roots = h.projective_roots()?;
    let mut vectors: Vec<[Complex64; 2]> = Vec::with_capacity(h.degree());
    for (p, m) in &roots {
        // the form (a, b) ∧ z vanishes exactly at z ∝ (a, b)
        let v = p.unit_lift();
        vectors.extend(std::iter::repeat_n(v, *m));
    }
    let mut fact = LinearFactorization {
        absorbed_scalar: Complex64::new(1.0, 0.0),
        scalar: Complex64::new(1.0, 0.0),
        vectors,
        residual: 0.0,
    };
    // least-squares scalar a minimising ‖h − a·Π‖ over the coefficients
    let unit = fact.to_form();
    let num: Complex64 = unit.coeffs().iter().zip(h.coeffs()).map(|(u, c)| u.conj() * c).sum();
    let den: f64 = unit.coeffs().iter().map(|u| u.norm_sqr()).sum();
    let a = num / den;
    fact.absorbed_scalar = a;
    match fact.vectors.first_mut() {
        Some(v) => {
            v[0] *= a;
            v[1] *= a;
        }
        None => fact.scalar = a,
    }
    fact.residual = reconstruction_residual(&fact, h, CHECK_POINTS, 0x5eed);
    Ok(fact)
}

/// Worst relative error `|Π(c_j ∧ z) − h(z)| / Σ|h_i||z0|^{d−i}|z1|^i` over
/// seeded points on the unit sphere.
pub fn reconstruction_residual(fact: &LinearFactorization, h: &BinaryForm, points: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..points {
        let z0 = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let z1 = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let scale = h.eval_scale(z0, z1);
        worst = worst.max((fact.eval(z0, z1) - h.eval(z0, z1)).norm() / scale);
    }
    worst
}
