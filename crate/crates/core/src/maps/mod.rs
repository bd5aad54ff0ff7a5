//! Homogeneous lifts on C^{k+1}, rational maps of P¹, and their periodic
//! cycles, preimages and conjugates.

mod cycles;
mod expr;
mod homogeneous;
mod io;
mod rational;

pub use cycles::{
    all_cycles_dividing, cycle_multiplier, fixed_points_of_iterate, orbit_in_chart, periodic_cycles, refine_cycle, Cycle,
    CycleConfig, CycleKind,
};
pub use expr::{parse_complex, Expr, ExprError};
pub use homogeneous::{HomogeneousMap, HomogeneousPoly};
pub use io::{format_map_file, parse_map_file};
pub use rational::{Mobius, RationalMap};

use num_complex::Complex64;
use thiserror::Error;

use crate::algebra::AlgebraError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MapError {
    #[error("degenerate map: resultant {resultant:e} vanishes relative to coefficient scale")]
    Degenerate { resultant: f64 },
    #[error("numerator and denominator degrees differ ({0} vs {1})")]
    DegreeMismatch(usize, usize),
    #[error("degree {0} is below 2")]
    DegreeTooLow(usize),
    #[error("component is not homogeneous of degree {0}")]
    NotHomogeneous(usize),
    #[error("iterate needs {needed} roots, above the cap of {cap}")]
    DegreeOverflow { needed: usize, cap: usize },
    #[error("two period-{period} points are {distance:e} apart, inside the clustering radius")]
    ClusterAmbiguity { period: usize, distance: f64 },
    #[error("singular Möbius matrix")]
    SingularMatrix,
    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

/// A homogeneous polynomial self-map of C^{k+1}.
pub trait Lift: Sync {
    /// `k + 1`.
    fn dim(&self) -> usize;
    fn degree(&self) -> usize;
    /// Writes `F(z)` into `out`; both slices have length `dim()`.
    fn apply(&self, z: &[Complex64], out: &mut [Complex64]);
    fn det_jacobian(&self, z: &[Complex64]) -> Complex64;
    /// Cached bound `C` with `1/C ≤ ‖F(u)‖ ≤ C` on the unit sphere.
    fn escape_constant(&self) -> f64;
    /// Stable identifier derived from the coefficients.
    fn fingerprint(&self) -> u64;
}

pub(crate) fn fingerprint_of(coeffs: impl Iterator<Item = Complex64>) -> u64 {
    // FNV-1a over the raw bits
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for c in coeffs {
        for b in c.re.to_bits().to_le_bytes().into_iter().chain(c.im.to_bits().to_le_bytes()) {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    h
}
