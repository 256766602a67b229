//! Numerical laboratory for entire large solutions of the radial semilinear
//! elliptic equation `Δu = ρ(|x|) f(u)` in `R^D`.

pub mod bounds;
pub mod cli;
pub mod error;
pub mod nonlinearity;
pub mod ode;
pub mod quad;
pub mod potential;
pub mod roots;
pub mod shooting;
pub mod transformed;

pub use error::{Error, Result};
