//! Escape rate `G_F = lim d^{-n} log‖F^n(z)‖` of a homogeneous lift and the
//! induced potential `g_F = G_F − log‖·‖` on projective space.
//!
//! The orbit is renormalized to the unit sphere at every step, so
//! `G_F(z) = log‖z‖ + Σ_m d^{-(m+1)} log‖F(û_m)‖` never overflows. With
//! `1/C ≤ ‖F(u)‖ ≤ C` on the unit sphere each term is bounded by
//! `log C / d^{m+1}`, and stopping after `n` terms leaves a tail of at most
//! `log C / (d^n (d − 1))`.

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::maps::{Lift, RationalMap};
use crate::point::P1Point;

pub const DEFAULT_TOL: f64 = 1e-12;

/// Number of sphere points used to estimate the escape constant.
const ESCAPE_SAMPLES: usize = 2000;
/// Below this norm the orbit is treated as having hit the zero set of `F`.
const DEGENERATE_NORM: f64 = 1e-300;
/// Largest supported `k + 1`.
pub const MAX_DIM: usize = 8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GreenError {
    #[error("orbit renormalization reached ‖F(u)‖ = {norm:e}; the map is nearly degenerate")]
    DegenerateNearZero { norm: f64 },
    #[error("tolerance must be positive and finite, got {0}")]
    InvalidTolerance(f64),
    #[error("G_F is undefined at the origin")]
    ZeroVector,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GreenEvaluation {
    pub value: f64,
    /// Bound on the truncation error.
    pub error_bound: f64,
    pub iterations_used: usize,
    pub map_id: u64,
}

/// Number of renormalized steps after which the tail bound is below `tol`.
pub fn iterations_for(escape_constant: f64, degree: usize, tol: f64) -> usize {
    let d = degree as f64;
    let ratio = escape_constant.ln() / (tol * (d - 1.0));
    if ratio <= 1.0 {
        return 1;
    }
    ((ratio.ln() / d.ln()).ceil() as usize).max(1)
}

/// Truncation bound after `n` steps.
pub fn tail_bound(escape_constant: f64, degree: usize, n: usize) -> f64 {
    let d = degree as f64;
    escape_constant.ln() / (d.powi(n as i32) * (d - 1.0))
}

fn norm(z: &[Complex64]) -> f64 {
    z.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

/// `G_F(z)` with tail bound below `tol`.
pub fn green<L: Lift + ?Sized>(f: &L, z: &[Complex64], tol: f64) -> Result<GreenEvaluation, GreenError> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(GreenError::InvalidTolerance(tol));
    }
    let c = f.escape_constant();
    let n = iterations_for(c, f.degree(), tol);
    let value = green_with_iterations(f, z, n)?;
    Ok(GreenEvaluation {
        value,
        error_bound: tail_bound(c, f.degree(), n),
        iterations_used: n,
        map_id: f.fingerprint(),
    })
}

/// The escape-rate sum truncated after `n` renormalized steps.
pub fn green_with_iterations<L: Lift + ?Sized>(f: &L, z: &[Complex64], n: usize) -> Result<f64, GreenError> {
    let k = f.dim();
    assert!(k == z.len() && k <= MAX_DIM, "dimension mismatch");
    let r = norm(z);
    if r == 0.0 || !r.is_finite() {
        return Err(GreenError::ZeroVector);
    }
    let mut u = [Complex64::new(0.0, 0.0); MAX_DIM];
    let mut w = [Complex64::new(0.0, 0.0); MAX_DIM];
    for (a, b) in u.iter_mut().zip(z) {
        *a = b / r;
    }
    let d = f.degree() as f64;
    let mut weight = 1.0 / d;
    let mut value = r.ln();
    for _ in 0..n {
        f.apply(&u[..k], &mut w[..k]);
        let s = norm(&w[..k]);
        if !(s >= DEGENERATE_NORM) || !s.is_finite() {
            return Err(GreenError::DegenerateNearZero { norm: s });
        }
        value += weight * s.ln();
        weight /= d;
        for (a, b) in u[..k].iter_mut().zip(&w[..k]) {
            *a = b / s;
        }
    }
    Ok(value)
}

/// `g_F(w) = G_F(v) − log‖v‖` for a chart lift `v` of `w`.
pub fn green_p1(f: &RationalMap, w: &P1Point, tol: f64) -> Result<GreenEvaluation, GreenError> {
    let v = w.lift();
    let mut g = green(f, &v, tol)?;
    g.value -= norm(&v).ln();
    Ok(g)
}

/// A lift of `w` on the level set `{G_F = 0}`.
pub fn lift_to_zero_level(f: &RationalMap, w: &P1Point, tol: f64) -> Result<[Complex64; 2], GreenError> {
    let v = w.unit_lift();
    let g = green(f, &v, tol)?.value;
    let s = (-g).exp();
    Ok([v[0] * s, v[1] * s])
}

/// `C = max(2 sup ‖F(u)‖, 2 / inf ‖F(u)‖)` over a fixed quasi-random set of
/// unit vectors (Kronecker sequence pushed through Box–Muller).
pub fn estimate_escape_constant<L: Lift + ?Sized>(f: &L) -> f64 {
    let k = f.dim();
    assert!(k <= MAX_DIM);
    let alphas: Vec<f64> = PRIMES[..2 * k].iter().map(|&p| (p as f64).sqrt().fract()).collect();
    let mut sup = 0.0f64;
    let mut inf = f64::INFINITY;
    let mut u = [Complex64::new(0.0, 0.0); MAX_DIM];
    let mut w = [Complex64::new(0.0, 0.0); MAX_DIM];
    for i in 1..=ESCAPE_SAMPLES {
        for j in 0..k {
            let a = (0.5 + i as f64 * alphas[2 * j]).fract();
            let b = (0.5 + i as f64 * alphas[2 * j + 1]).fract();
            let rad = (-2.0 * (1.0 - a).ln()).sqrt();
            let th = std::f64::consts::TAU * b;
            u[j] = Complex64::new(rad * th.cos(), rad * th.sin());
        }
        let r = norm(&u[..k]);
        for x in &mut u[..k] {
            *x /= r;
        }
        f.apply(&u[..k], &mut w[..k]);
        let s = norm(&w[..k]);
        sup = sup.max(s);
        inf = inf.min(s);
    }
    (2.0 * sup).max(2.0 / inf)
}

const PRIMES: [u32; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];
