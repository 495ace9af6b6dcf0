//! Hamiltonians on `T^*T^n`, the scalar fields they are built from, and energy cutoffs.

mod field;
mod local;
mod oscillation;
mod spec;
mod truncation;

pub use field::{FourierMode, SampledScalar, ScalarField};
pub use local::LocalHamiltonian;
pub use oscillation::{oscillation, OscRegion, Oscillation};
pub use spec::{
    FiberFunction, HamiltonianSpec, LegendrePoint, SpecMetadata, TabulatedHamiltonian,
};
pub use truncation::{ProfileShape, TruncationProfile};

use crate::counterexample::BumpProfile;
use crate::error::{HomogError, Result};

/// Names accepted by [`builtin_spec`].
pub const BUILTIN_NAMES: [&str; 3] = ["integrable", "pendulum", "bump"];

/// `integrable` is `½|p|^2`, `pendulum` is `½|p|^2 + cos 2πq` and `bump` is the plateau product
/// with `δ = 0.25`, `C = 10`, `c = 0.05`; `n` picks the dimension.
pub fn builtin_spec(name: &str, n: usize) -> Result<HamiltonianSpec> {
    match name {
        "integrable" => HamiltonianSpec::fiber_only(n, FiberFunction::half_square()),
        "pendulum" => {
            let modes = (0..n)
                .map(|a| {
                    let mut k = vec![0; n];
                    k[a] = 1;
                    FourierMode { k, cos: 1.0, sin: 0.0 }
                })
                .collect();
            HamiltonianSpec::mechanical(n, ScalarField::Fourier { modes })
        }
        "bump" => HamiltonianSpec::product(n, ScalarField::Bump(BumpProfile::new(0.25, 10.0, 0.05)?)),
        other => Err(HomogError::InvalidSpec(format!(
            "unknown built-in {other:?}; expected one of {}",
            BUILTIN_NAMES.join(", ")
        ))),
    }
}
