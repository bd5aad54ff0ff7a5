//! Green functions, Lyapunov exponents and bifurcation currents of rational
//! maps of P¹ and of diagonal maps of Pᵏ.

pub mod algebra;
pub mod bifurcation;
pub mod corpus;
pub mod families;
pub mod greenfn;
pub mod lyapunov;
pub mod maps;
pub mod point;
pub mod sampling;
pub mod verify;

pub use point::P1Point;
