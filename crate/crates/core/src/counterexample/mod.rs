//! The plateau bump Hamiltonian `γ(q)(|p|^2 - 1)` and the certificate that its asymptotic
//! spectral distance is strictly below its asymptotic Hofer distance.

mod bump;
mod certificate;
mod lagrangian;

pub use bump::{make_gamma_bump, BumpProfile};
pub use certificate::{
    calabi_lower_bound_counterexample, sufficiency_threshold, unit_ball_moment,
    unit_ball_moment_quadrature, verify_strict_inequality, CounterexampleCertificate,
    CounterexampleConfig, Parameters, Smoothing, TruncatedVariant,
};
pub use lagrangian::{cutoff_collar, test_lagrangian_bound, TestCorrector};
