//! Simulator and verification lab for the nonlocal diffusion `u_t = div(A[u]∇u)`
//! with the Landau-Coulomb coefficient `A[u]`.

pub mod degiorgi;
pub mod error;
pub mod fft;
pub mod functionals;
pub mod grid;
pub mod harness;
pub mod kernel;
pub mod snapshot;
pub mod solver;

pub use error::{Error, Result};
