//! One-dimensional effective Hamiltonian from level-set averages of the fiber roots.

use serde::{Deserialize, Serialize};

use crate::error::{HomogError, Result};
use crate::hamiltonian::{FiberFunction, HamiltonianSpec};
use crate::quad::integrate;

const REL_TOL: f64 = 1e-9;
const LEVEL_TOL: f64 = 1e-10;

/// The flat part `{p : H̄(p) = λ₀}` of a one-dimensional effective Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlatPart {
    /// `λ₀ = max_q min_p H(q, p)`.
    pub level: f64,
    /// `P⁻(λ₀)`.
    pub lo: f64,
    /// `P⁺(λ₀)`.
    pub hi: f64,
}

/// `max_q min_p H(q, p)` for specs with closed-form fiber minima.
fn critical_level(spec: &HamiltonianSpec) -> Result<f64> {
    match spec {
        HamiltonianSpec::Mechanical { potential, .. } => Ok(potential.extrema(1).1),
        HamiltonianSpec::Product { gamma, .. } => {
            let (lo, _) = gamma.extrema(1);
            if lo <= 0.0 {
                return Err(HomogError::UnsupportedSpec(
                    "product form with a vanishing gamma has no closed-form fiber roots".into(),
                ));
            }
            Ok(-lo)
        }
        HamiltonianSpec::FiberOnly { fiber, .. } => {
            let FiberFunction::Quadratic { offset, .. } = fiber;
            Ok(*offset)
        }
        HamiltonianSpec::Sheared { base, .. } => critical_level(base),
        _ => Err(HomogError::UnsupportedSpec(
            "the quadrature oracle needs mechanical, product or quadratic fibers".into(),
        )),
    }
}

/// Where the integrands `p^±(·, λ)` may lose smoothness.
fn kinks(spec: &HamiltonianSpec) -> Vec<f64> {
    let mut b = spec.q_breakpoints();
    let argmax_of_fiber_min = match spec {
        HamiltonianSpec::Mechanical { potential, .. } => Some(potential.argmax(1)),
        HamiltonianSpec::Product { gamma, .. } => Some(gamma.argmin(1)),
        HamiltonianSpec::Sheared { base, .. } => return {
            b.extend(kinks(base));
            b
        },
        _ => None,
    };
    if let Some(q) = argmax_of_fiber_min {
        b.push(q[0]);
    }
    b
}

struct LevelSets<'a> {
    spec: &'a HamiltonianSpec,
    breakpoints: Vec<f64>,
}

impl LevelSets<'_> {
    /// `(P⁻(λ), P⁺(λ))`.
    fn averages(&self, level: f64) -> Result<(f64, f64)> {
        let mut failure = None;
        let mut root = |q: f64, upper: bool| -> f64 {
            let local = self.spec.localize(&[q]);
            let floor = local.fiber_min();
            if floor > level + 1e-9 * (1.0 + level.abs()) {
                failure.get_or_insert(HomogError::RootBracketingFailure { q, level });
                return 0.0;
            }
            match local.fiber_roots_1d(level.max(floor)) {
                Some((lo, hi)) => {
                    if upper {
                        hi
                    } else {
                        lo
                    }
                }
                None => {
                    failure.get_or_insert(HomogError::RootBracketingFailure { q, level });
                    0.0
                }
            }
        };
        let hi = integrate(|q| root(q, true), 0.0, 1.0, &self.breakpoints, REL_TOL, 1e-13)?;
        let lo = integrate(|q| root(q, false), 0.0, 1.0, &self.breakpoints, REL_TOL, 1e-13)?;
        if let Some(e) = failure {
            return Err(e);
        }
        Ok((lo.value, hi.value))
    }
}

fn check_1d(spec: &HamiltonianSpec) -> Result<()> {
    if spec.dim() != 1 {
        return Err(HomogError::DimensionNot1(spec.dim()));
    }
    Ok(())
}

/// `λ₀` and the momentum interval on which `H̄ = λ₀`.
pub fn flat_part_1d(spec: &HamiltonianSpec) -> Result<FlatPart> {
    check_1d(spec)?;
    let level = critical_level(spec)?;
    let sets = LevelSets {
        spec,
        breakpoints: kinks(spec),
    };
    let (lo, hi) = sets.averages(level)?;
    Ok(FlatPart { level, lo, hi })
}

/// `H̄(p)` for a one-dimensional spec: `λ₀` on the flat part, otherwise the level `λ` whose
/// averaged fiber root equals `p`.
pub fn homogenize_1d_quadrature(spec: &HamiltonianSpec, p: f64) -> Result<f64> {
    check_1d(spec)?;
    if !p.is_finite() {
        return Err(HomogError::InvalidSpec(format!("non-finite momentum {p}")));
    }
    let level = critical_level(spec)?;
    let sets = LevelSets {
        spec,
        breakpoints: kinks(spec),
    };
    let (lo, hi) = sets.averages(level)?;
    if lo <= p && p <= hi {
        return Ok(level);
    }
    let upper = p > hi;
    let reach = |lam: f64| -> Result<f64> {
        let (a, b) = sets.averages(lam)?;
        Ok(if upper { b } else { -a })
    };
    let target = if upper { p } else { -p };
    // P^+ increases and P^- decreases with the level.
    let mut a = level;
    let mut step = 1.0_f64.max(level.abs());
    let mut b = level + step;
    while reach(b)? < target {
        a = b;
        step *= 2.0;
        b = level + step;
        if !b.is_finite() {
            return Err(HomogError::RootBracketingFailure { q: 0.0, level: b });
        }
    }
    while b - a > LEVEL_TOL * (1.0 + a.abs().min(b.abs())) {
        let mid = 0.5 * (a + b);
        if reach(mid)? < target {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(0.5 * (a + b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::counterexample::BumpProfile;
    use crate::hamiltonian::ScalarField;
    use std::f64::consts::PI;

    fn pendulum() -> HamiltonianSpec {
        HamiltonianSpec::mechanical(1, ScalarField::cosine(1.0)).unwrap()
    }

    #[test]
    fn pendulum_flat_part_edges() {
        let f = flat_part_1d(&pendulum()).unwrap();
        assert!((f.level - 1.0).abs() < 1e-14);
        assert!((f.hi - 4.0 / PI).abs() < 1e-9, "{f:?}");
        assert!((f.lo + 4.0 / PI).abs() < 1e-9);
        assert!((homogenize_1d_quadrature(&pendulum(), 0.0).unwrap() - 1.0).abs() < 1e-14);
        assert!((homogenize_1d_quadrature(&pendulum(), 4.0 / PI).unwrap() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn pendulum_large_momentum_approaches_free_motion() {
        // H̄(p) = p²/2 + O(p⁻²)
        let v = homogenize_1d_quadrature(&pendulum(), 6.0).unwrap();
        assert!((v - 18.0).abs() < 0.02, "{v}");
        let sym = homogenize_1d_quadrature(&pendulum(), -6.0).unwrap();
        assert!((v - sym).abs() < 1e-9);
    }

    #[test]
    fn level_inverts_the_average() {
        let spec = pendulum();
        let lam = homogenize_1d_quadrature(&spec, 2.0).unwrap();
        let avg = integrate(
            |q| (2.0 * (lam - (2.0 * PI * q).cos())).sqrt(),
            0.0,
            1.0,
            &[],
            1e-12,
            0.0,
        )
        .unwrap();
        assert!((avg.value - 2.0).abs() < 1e-9);
    }

    #[test]
    fn product_examples() {
        let one = HamiltonianSpec::product(1, ScalarField::constant(1.0)).unwrap();
        assert!((homogenize_1d_quadrature(&one, 0.0).unwrap() + 1.0).abs() < 1e-14);
        let b = BumpProfile::new(0.25, 10.0, 0.05).unwrap();
        let bump = HamiltonianSpec::product(1, ScalarField::Bump(b)).unwrap();
        assert!((homogenize_1d_quadrature(&bump, 0.0).unwrap() + 0.05).abs() < 1e-12);
        assert!(homogenize_1d_quadrature(&bump, 1.0).unwrap().abs() < 1e-8);
    }

    #[test]
    fn rejects_two_dimensions() {
        let h = HamiltonianSpec::fiber_only(2, FiberFunction::half_square()).unwrap();
        assert_eq!(
            homogenize_1d_quadrature(&h, 0.0),
            Err(HomogError::DimensionNot1(2))
        );
    }
}
