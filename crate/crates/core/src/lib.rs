//! Numerical homogenization of convex Hamiltonians on `T^*T^n` (`n = 1, 2`), Mather's `α`/`β`
//! functions, and the Hofer and spectral-metric bounds built on them.

pub mod cell;
pub mod counterexample;
pub mod error;
pub mod grid;
pub mod hamiltonian;
pub mod lbfgs;
pub mod mather;
pub mod metrics;
pub mod quad;
pub mod smooth;
pub mod suite;

pub use error::{HomogError, Result};
