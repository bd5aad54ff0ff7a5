//! Complex polynomial arithmetic on univariate polynomials and binary forms:
//! roots, resultants, Jacobian determinants and linear factorization.

mod factor;
mod form;
mod poly;
pub mod resultant;
pub mod roots;

pub use factor::{factor_linear, reconstruction_residual, LinearFactorization};
pub use form::BinaryForm;
pub(crate) use form::cluster_points;
pub use poly::Poly1;
pub use resultant::{determinant, sylvester_resultant};
pub use roots::{roots, Root};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AlgebraError {
    #[error("polynomial is identically zero")]
    ZeroPolynomial,
    #[error("polynomial is a nonzero constant")]
    ConstantPolynomial,
    #[error("binary form is identically zero")]
    ZeroForm,
    #[error("root iteration did not converge (worst relative residual {residual:e})")]
    NonConvergence { residual: f64 },
    #[error("degree mismatch: {left} vs {right}")]
    DegreeMismatch { left: usize, right: usize },
}

/// `det F′` of the planar map `F = (p, q)`: the determinant of the 2×2
/// Jacobian, a form of nominal degree `2d − 2`.
pub fn jacobian_det(p: &BinaryForm, q: &BinaryForm) -> BinaryForm {
    p.partial_z0().mul(&q.partial_z1()).sub(&p.partial_z1().mul(&q.partial_z0()))
}
