//! The test Lagrangian graph `{(q, p + df(q))}` with `p + df ≡ u` on `U_{2δ}`.

use super::BumpProfile;
use crate::grid::{fold, TorusGrid};
use crate::error::{HomogError, Result};
use crate::hamiltonian::{HamiltonianSpec, ScalarField};
use crate::smooth::Smoothstep;

/// Width of the smoothstep collar around `U_{2δ}` in which `f` is cut off.
pub fn cutoff_collar(delta: f64) -> Result<f64> {
    let w = (0.5 * delta).min(0.25 * (1.0 - 2.0 * delta));
    if !(w > 0.0) || delta + w >= 0.5 {
        return Err(HomogError::CutoffOverlap(delta));
    }
    Ok(w)
}

/// `f(q) = ⟨u - p, q - q_0⟩ φ(q)` with `q_0` the cube center and `φ` equal to 1 on `U_{2δ}`.
pub struct TestCorrector {
    shift: [f64; 2],
    n: usize,
    delta: f64,
    collar: f64,
    step: Smoothstep,
}

impl TestCorrector {
    pub fn new(profile: &BumpProfile, p: &[f64], u: &[f64]) -> Result<Self> {
        let n = p.len();
        if u.len() != n || !(1..=2).contains(&n) {
            return Err(HomogError::DimensionMismatch {
                expected: n,
                got: u.len(),
            });
        }
        let collar = cutoff_collar(profile.delta)?;
        let mut shift = [0.0; 2];
        for a in 0..n {
            shift[a] = u[a] - p[a];
        }
        Ok(TestCorrector {
            shift,
            n,
            delta: profile.delta,
            collar,
            step: Smoothstep::new(2),
        })
    }

    fn axis_cut(&self, x: f64) -> (f64, f64, f64) {
        let y = fold(x) - 0.5;
        let d = y.abs();
        if d <= self.delta {
            return (y, 1.0, 0.0);
        }
        let t = (d - self.delta) / self.collar;
        (y, 1.0 - self.step.value(t), -self.step.d1(t) / self.collar * y.signum())
    }

    /// `df(q)`.
    pub fn differential(&self, q: &[f64]) -> [f64; 2] {
        let cuts: Vec<(f64, f64, f64)> = q[..self.n].iter().map(|&x| self.axis_cut(x)).collect();
        let phi: f64 = cuts.iter().map(|c| c.1).product();
        let linear: f64 = (0..self.n).map(|a| self.shift[a] * cuts[a].0).sum();
        let mut out = [0.0; 2];
        for a in 0..self.n {
            let others: f64 = (0..self.n).filter(|&b| b != a).map(|b| cuts[b].1).product();
            out[a] = self.shift[a] * phi + linear * cuts[a].2 * others;
        }
        out
    }
}

/// `sup_q -H(q, p + df(q))` from a torus grid plus a curvature allowance, an upper bound for
/// `-H̄(p)`.
///
/// `u` is `p/|p|`, or `e_1` when `p = 0`.
pub fn test_lagrangian_bound(spec: &HamiltonianSpec, p: &[f64]) -> Result<f64> {
    let profile = match spec {
        HamiltonianSpec::Product {
            gamma: ScalarField::Bump(b),
            ..
        } => b,
        _ => {
            return Err(HomogError::UnsupportedSpec(
                "the test Lagrangian needs a bump product Hamiltonian".into(),
            ))
        }
    };
    let n = spec.dim();
    if p.len() != n {
        return Err(HomogError::DimensionMismatch {
            expected: n,
            got: p.len(),
        });
    }
    let norm = p.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut u = vec![0.0; n];
    if norm > 0.0 {
        u.iter_mut().zip(p).for_each(|(u, p)| *u = p / norm);
    } else {
        u[0] = 1.0;
    }
    let f = TestCorrector::new(profile, p, &u)?;
    let grid = TorusGrid::new(n, if n == 1 { 2048 } else { 256 })?;
    let mut values = Vec::with_capacity(grid.len());
    for i in 0..grid.len() {
        let q = grid.coords(i);
        let df = f.differential(&q[..n]);
        let m: Vec<f64> = (0..n).map(|a| p[a] + df[a]).collect();
        values.push(-spec.eval(&q[..n], &m)?);
    }
    // a maximum between nodes exceeds the node values by at most |second difference| / 8
    let mut worst = f64::NEG_INFINITY;
    for (i, v) in values.iter().enumerate() {
        let bend: f64 = (0..n)
            .map(|a| {
                let (l, r) = (grid.shift(i, a, -1), grid.shift(i, a, 1));
                (values[l] - 2.0 * v + values[r]).abs()
            })
            .sum();
        worst = worst.max(v + bend / 8.0);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cell::{homogenize_1d_quadrature, supersolution_certificate, CorrectorField};
    use crate::grid::{DiffScheme, PeriodicField};

    fn bump(n: usize) -> HamiltonianSpec {
        let b = BumpProfile::new(0.25, 10.0, 0.05).unwrap();
        HamiltonianSpec::product(n, ScalarField::Bump(b)).unwrap()
    }

    #[test]
    fn differential_integrates_to_zero() {
        let b = BumpProfile::new(0.25, 10.0, 0.05).unwrap();
        let f = TestCorrector::new(&b, &[0.3], &[1.0]).unwrap();
        let m = 20000;
        let mean: f64 = (0..m).map(|i| f.differential(&[i as f64 / m as f64])[0]).sum::<f64>() / m as f64;
        assert!(mean.abs() < 1e-6, "{mean}");
        // p + df is the unit vector on U_{2δ}
        assert!((0.3 + f.differential(&[0.3])[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn bound_at_rest_and_on_the_sphere() {
        let c = 0.05;
        let b0 = test_lagrangian_bound(&bump(1), &[0.0]).unwrap();
        assert!(b0 <= c + 1e-3, "{b0}");
        let b1 = test_lagrangian_bound(&bump(1), &[1.0]).unwrap();
        assert!(b1.abs() < 1e-12, "{b1}");
        let b2 = test_lagrangian_bound(&bump(2), &[0.0, 0.0]).unwrap();
        assert!(b2 <= c + 1e-3, "{b2}");
    }

    #[test]
    fn dominates_the_quadrature_oracle() {
        let spec = bump(1);
        for &p in &[0.0, 0.25, 0.5, 0.9, 1.2] {
            let bound = test_lagrangian_bound(&spec, &[p]).unwrap();
            let oracle = homogenize_1d_quadrature(&spec, p).unwrap();
            assert!(-oracle <= bound + 1e-9, "p = {p}: {oracle} vs {bound}");
            assert!(bound <= 0.05 + 1e-3);
        }
    }

    #[test]
    fn sampled_corrector_certifies_the_bound() {
        let spec = bump(1);
        let b = BumpProfile::new(0.25, 10.0, 0.05).unwrap();
        let f = TestCorrector::new(&b, &[0.5], &[1.0]).unwrap();
        let grid = TorusGrid::new(1, 4096).unwrap();
        // integrate df by the trapezoid rule to get f on the grid
        let h = grid.spacing();
        let mut vals = vec![0.0; grid.len()];
        for i in 1..grid.len() {
            let a = f.differential(&[(i - 1) as f64 * h])[0];
            let c = f.differential(&[i as f64 * h])[0];
            vals[i] = vals[i - 1] + 0.5 * h * (a + c);
        }
        let u = CorrectorField::new(PeriodicField::new(grid, vals).unwrap(), DiffScheme::Centered);
        let bound = test_lagrangian_bound(&spec, &[0.5]).unwrap();
        assert!(supersolution_certificate(&spec, &[0.5], &u, -bound));
    }

    #[test]
    fn rejects_other_specs() {
        let pend = HamiltonianSpec::mechanical(1, ScalarField::cosine(1.0)).unwrap();
        assert!(matches!(
            test_lagrangian_bound(&pend, &[0.0]),
            Err(HomogError::UnsupportedSpec(_))
        ));
        assert_eq!(cutoff_collar(0.6), Err(HomogError::CutoffOverlap(0.6)));
        assert_eq!(cutoff_collar(0.25), Ok(0.125));
    }
}
