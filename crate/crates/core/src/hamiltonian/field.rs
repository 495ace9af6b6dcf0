//! Closed-form and sampled periodic functions `T^n → R` (potentials, plateau profiles, shears).

use std::f64::consts::PI;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::counterexample::BumpProfile;
use crate::error::{HomogError, Result};
use crate::grid::{fold, PeriodicField, TrigInterpolant};

/// One term `a cos(2π k·q) + b sin(2π k·q)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourierMode {
    pub k: Vec<i32>,
    #[serde(default)]
    pub cos: f64,
    #[serde(default)]
    pub sin: f64,
}

/// Grid samples evaluated off-grid through their trigonometric interpolant.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampledScalar {
    pub field: PeriodicField,
    #[serde(skip)]
    interp: OnceLock<TrigInterpolant>,
}

impl SampledScalar {
    pub fn new(field: PeriodicField) -> Self {
        SampledScalar {
            field,
            interp: OnceLock::new(),
        }
    }

    fn interpolant(&self) -> &TrigInterpolant {
        self.interp.get_or_init(|| self.field.interpolant())
    }
}

impl PartialEq for SampledScalar {
    fn eq(&self, other: &Self) -> bool {
        self.field == other.field
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ScalarField {
    Constant { value: f64 },
    Fourier { modes: Vec<FourierMode> },
    Bump(BumpProfile),
    Sampled(SampledScalar),
}

impl ScalarField {
    pub fn constant(value: f64) -> Self {
        ScalarField::Constant { value }
    }

    /// `amplitude · cos(2π q)` on the circle.
    pub fn cosine(amplitude: f64) -> Self {
        ScalarField::Fourier {
            modes: vec![FourierMode {
                k: vec![1],
                cos: amplitude,
                sin: 0.0,
            }],
        }
    }

    pub fn sampled(field: PeriodicField) -> Self {
        ScalarField::Sampled(SampledScalar::new(field))
    }

    pub(crate) fn validate(&self, n: usize) -> Result<()> {
        match self {
            ScalarField::Constant { value } if !value.is_finite() => {
                Err(HomogError::InvalidField(format!("constant {value}")))
            }
            ScalarField::Fourier { modes } => {
                for m in modes {
                    if m.k.len() != n {
                        return Err(HomogError::DimensionMismatch {
                            expected: n,
                            got: m.k.len(),
                        });
                    }
                    if !(m.cos.is_finite() && m.sin.is_finite()) {
                        return Err(HomogError::InvalidField("non-finite coefficient".into()));
                    }
                }
                Ok(())
            }
            ScalarField::Bump(b) => b.validate(),
            ScalarField::Sampled(s) if s.field.grid().dim() != n => {
                Err(HomogError::DimensionMismatch {
                    expected: n,
                    got: s.field.grid().dim(),
                })
            }
            _ => Ok(()),
        }
    }

    pub fn value(&self, q: &[f64]) -> f64 {
        match self {
            ScalarField::Constant { value } => *value,
            ScalarField::Fourier { modes } => modes
                .iter()
                .map(|m| {
                    let phase = 2.0 * PI * dot_k(&m.k, q);
                    m.cos * phase.cos() + m.sin * phase.sin()
                })
                .sum(),
            ScalarField::Bump(b) => b.value(q),
            ScalarField::Sampled(s) => {
                let folded: Vec<f64> = q.iter().map(|&x| fold(x)).collect();
                s.interpolant().value(&folded)
            }
        }
    }

    pub fn gradient(&self, q: &[f64]) -> [f64; 2] {
        match self {
            ScalarField::Constant { .. } => [0.0; 2],
            ScalarField::Fourier { modes } => {
                let mut g = [0.0; 2];
                for m in modes {
                    let phase = 2.0 * PI * dot_k(&m.k, q);
                    let d = 2.0 * PI * (-m.cos * phase.sin() + m.sin * phase.cos());
                    for (a, &k) in m.k.iter().enumerate() {
                        g[a] += d * k as f64;
                    }
                }
                g
            }
            ScalarField::Bump(b) => b.gradient(q),
            ScalarField::Sampled(s) => {
                let folded: Vec<f64> = q.iter().map(|&x| fold(x)).collect();
                s.interpolant().value_and_gradient(&folded).1
            }
        }
    }

    /// Hessian; analytic for Fourier fields, centered differences of the gradient otherwise.
    pub fn hessian(&self, q: &[f64]) -> [[f64; 2]; 2] {
        match self {
            ScalarField::Constant { .. } => [[0.0; 2]; 2],
            ScalarField::Fourier { modes } => {
                let mut h = [[0.0; 2]; 2];
                for m in modes {
                    let phase = 2.0 * PI * dot_k(&m.k, q);
                    let d2 = -4.0 * PI * PI * (m.cos * phase.cos() + m.sin * phase.sin());
                    for (a, &ka) in m.k.iter().enumerate() {
                        for (b, &kb) in m.k.iter().enumerate() {
                            h[a][b] += d2 * (ka * kb) as f64;
                        }
                    }
                }
                h
            }
            _ => {
                let n = q.len();
                let step = 1e-5;
                let mut h = [[0.0; 2]; 2];
                for b in 0..n {
                    let mut qp = q.to_vec();
                    let mut qm = q.to_vec();
                    qp[b] += step;
                    qm[b] -= step;
                    let (gp, gm) = (self.gradient(&qp), self.gradient(&qm));
                    for a in 0..n {
                        h[a][b] = (gp[a] - gm[a]) / (2.0 * step);
                    }
                }
                h
            }
        }
    }

    /// `(min, max)` over the torus. Exact for constants and plateaus; otherwise a dense
    /// sample followed by a compass-search polish of the best node.
    pub fn extrema(&self, n: usize) -> (f64, f64) {
        match self {
            ScalarField::Constant { value } => (*value, *value),
            ScalarField::Bump(b) => (b.low, b.high),
            _ => {
                let min = -polish_max(|q| -self.value(q), n);
                let max = polish_max(|q| self.value(q), n);
                (min, max)
            }
        }
    }

    /// Location of the maximum (used to place quadrature breakpoints at kinks).
    pub fn argmax(&self, n: usize) -> Vec<f64> {
        match self {
            ScalarField::Bump(_) => vec![0.5; n],
            ScalarField::Constant { .. } => vec![0.0; n],
            _ => best_point(|q| self.value(q), n),
        }
    }

    pub fn argmin(&self, n: usize) -> Vec<f64> {
        match self {
            ScalarField::Bump(_) => vec![0.0; n],
            ScalarField::Constant { .. } => vec![0.0; n],
            _ => best_point(|q| -self.value(q), n),
        }
    }

    /// Per-axis coordinates where the field is only finitely smooth.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            ScalarField::Bump(b) => b.breakpoints(),
            _ => Vec::new(),
        }
    }

    /// `∫_{T^n}` of the field; exact for closed forms.
    pub fn integral(&self, n: usize) -> f64 {
        match self {
            ScalarField::Constant { value } => *value,
            ScalarField::Fourier { modes } => modes
                .iter()
                .filter(|m| m.k.iter().all(|&k| k == 0))
                .map(|m| m.cos)
                .sum(),
            ScalarField::Bump(b) => b.integral(n),
            ScalarField::Sampled(s) => s.field.mean(),
        }
    }
}

fn dot_k(k: &[i32], q: &[f64]) -> f64 {
    k.iter().zip(q).map(|(&k, &x)| k as f64 * x).sum()
}

fn best_point(f: impl Fn(&[f64]) -> f64, n: usize) -> Vec<f64> {
    let samples: usize = if n == 1 { 4096 } else { 256 };
    let mut best = (f64::NEG_INFINITY, vec![0.0; n]);
    let total = samples.pow(n as u32);
    for idx in 0..total {
        let q: Vec<f64> = if n == 1 {
            vec![idx as f64 / samples as f64]
        } else {
            vec![
                (idx / samples) as f64 / samples as f64,
                (idx % samples) as f64 / samples as f64,
            ]
        };
        let v = f(&q);
        if v > best.0 {
            best = (v, q);
        }
    }
    let mut q = best.1;
    let mut val = best.0;
    let mut step = 1.0 / samples as f64;
    while step > 1e-13 {
        let mut improved = false;
        for a in 0..n {
            for dir in [-1.0, 1.0] {
                let mut trial = q.clone();
                trial[a] += dir * step;
                let v = f(&trial);
                if v > val {
                    val = v;
                    q = trial;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    q.iter().map(|&x| fold(x)).collect()
}

fn polish_max(f: impl Fn(&[f64]) -> f64, n: usize) -> f64 {
    let q = best_point(&f, n);
    f(&q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::TorusGrid;

    #[test]
    fn cosine_extrema() {
        let v = ScalarField::cosine(1.0);
        let (lo, hi) = v.extrema(1);
        assert!((hi - 1.0).abs() < 1e-15);
        assert!((lo + 1.0).abs() < 1e-12);
        assert!((v.argmin(1)[0] - 0.5).abs() < 1e-6);
    }

    #[test]
    fn fourier_gradient_and_hessian() {
        let v = ScalarField::Fourier {
            modes: vec![
                FourierMode { k: vec![1, 0], cos: 1.0, sin: 0.0 },
                FourierMode { k: vec![1, -2], cos: 0.3, sin: 0.2 },
            ],
        };
        let q = [0.17, 0.61];
        let h = 1e-6;
        let g = v.gradient(&q);
        let hess = v.hessian(&q);
        for a in 0..2 {
            let mut qp = q;
            let mut qm = q;
            qp[a] += h;
            qm[a] -= h;
            assert!((g[a] - (v.value(&qp) - v.value(&qm)) / (2.0 * h)).abs() < 1e-6);
            let gp = v.gradient(&qp);
            let gm = v.gradient(&qm);
            for b in 0..2 {
                assert!((hess[b][a] - (gp[b] - gm[b]) / (2.0 * h)).abs() < 1e-4);
            }
        }
    }

    #[test]
    fn sampled_matches_source() {
        let grid = TorusGrid::new(1, 32).unwrap();
        let field = PeriodicField::from_fn(grid, |q| (2.0 * PI * q[0]).cos()).unwrap();
        let s = ScalarField::sampled(field);
        assert!((s.value(&[0.3]) - (2.0 * PI * 0.3).cos()).abs() < 1e-12);
        assert!((s.value(&[1.3]) - (2.0 * PI * 0.3).cos()).abs() < 1e-12);
        let json = serde_json::to_string(&s).unwrap();
        let back: ScalarField = serde_json::from_str(&json).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn fourier_dimension_checked() {
        let v = ScalarField::cosine(1.0);
        assert!(v.validate(1).is_ok());
        assert!(v.validate(2).is_err());
    }
}
