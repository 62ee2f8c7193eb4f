//! Radial solutions of `Δu + h(|x|)/|x|² u + f(u, |x|) = 0` through the
//! Fowler change of variables: exponents, coordinate maps, the
//! non-autonomous planar flow, its invariant manifolds and shooting.

pub mod error;
pub mod exponents;
pub mod fowler;
pub mod problem;
pub mod dynamics;
pub mod manifolds;
pub mod shooting;
mod ode;

pub use error::{Error, Result};
