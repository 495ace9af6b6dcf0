//! Minimal average action over periodic configurations of the discrete mechanical Lagrangian.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{HomogError, Result};
use crate::hamiltonian::{HamiltonianSpec, ScalarField};
use crate::lbfgs::{minimize, LbfgsOptions};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AubryConfig {
    /// Number of configurations `M`.
    pub points: usize,
    /// Time step `τ`.
    pub tau: f64,
    pub restarts: usize,
    pub seed: u64,
    pub max_iter: usize,
}

impl Default for AubryConfig {
    fn default() -> Self {
        AubryConfig {
            points: 400,
            tau: 0.05,
            restarts: 20,
            seed: 42,
            max_iter: 2000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AubryEstimate {
    /// Minimal average action, an upper estimate of `β(h)`.
    pub value: f64,
    pub winding: i64,
    /// Which restart won.
    pub restart: usize,
    /// The minimizing configuration `q_0, …, q_{M-1}`.
    pub configuration: Vec<f64>,
}

/// `(1/(Mτ)) Σ_i [(q_{i+1} - q_i)²/(2τ) - τ V(q_i)]` minimized over `q_{i+M} = q_i + w`,
/// `w = h·M·τ`.
///
/// Configurations are written `q_i = w·i/M + x_i` with `x` periodic; each restart starts from
/// a random shift plus noise and runs preconditioned L-BFGS.
pub fn aubry_beta_estimate(spec: &HamiltonianSpec, h: f64, config: &AubryConfig) -> Result<AubryEstimate> {
    let potential = match spec {
        HamiltonianSpec::Mechanical { n: 1, potential } => potential,
        HamiltonianSpec::Mechanical { n, .. } => return Err(HomogError::DimensionNot1(*n)),
        _ => {
            return Err(HomogError::UnsupportedSpec(
                "the action estimate needs a mechanical spec".into(),
            ))
        }
    };
    let (m, tau) = (config.points, config.tau);
    if m < 8 || !(tau > 0.0 && tau <= 0.1) || (m as f64) * tau < 20.0 - 1e-12 {
        return Err(HomogError::InvalidConfig(format!(
            "need M >= 8, 0 < tau <= 0.1 and M*tau >= 20, got M = {m}, tau = {tau}"
        )));
    }
    if config.restarts == 0 {
        return Err(HomogError::InvalidConfig("restarts must be positive".into()));
    }
    let target = h * m as f64 * tau;
    let w = target.round();
    if !target.is_finite() || (target - w).abs() > 1e-9 * target.abs().max(1.0) {
        return Err(HomogError::InfeasibleWinding(target));
    }
    let problem = Chain {
        potential,
        m,
        tau,
        w,
    };
    let precondition = problem.preconditioner();
    let opts = LbfgsOptions {
        memory: 10,
        max_iter: config.max_iter,
        grad_tol: 1e-12,
        f_tol: 1e-15,
    };
    let runs: Vec<(f64, Vec<f64>)> = (0..config.restarts)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(k as u64));
            let shift: f64 = rng.gen();
            let x0: Vec<f64> = (0..m).map(|_| shift + 0.25 * (rng.gen::<f64>() - 0.5)).collect();
            let out = minimize(|x, g| problem.action(x, g), x0, &opts, Some(&precondition));
            (out.value, out.x)
        })
        .collect();
    let (restart, (value, x)) = runs
        .into_iter()
        .enumerate()
        .min_by(|a, b| a.1 .0.total_cmp(&b.1 .0).then(a.0.cmp(&b.0)))
        .expect("at least one restart");
    let configuration = (0..m).map(|i| problem.drift(i) + x[i]).collect();
    Ok(AubryEstimate {
        value,
        winding: w as i64,
        restart,
        configuration,
    })
}

struct Chain<'a> {
    potential: &'a ScalarField,
    m: usize,
    tau: f64,
    w: f64,
}

impl Chain<'_> {
    fn drift(&self, i: usize) -> f64 {
        self.w * i as f64 / self.m as f64
    }

    fn action(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        let (m, tau) = (self.m, self.tau);
        let scale = 1.0 / (m as f64 * tau);
        let step = self.w / m as f64;
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut total = 0.0;
        for i in 0..m {
            let j = (i + 1) % m;
            let dq = step + x[j] - x[i];
            let q = self.drift(i) + x[i];
            total += dq * dq / (2.0 * tau) - tau * self.potential.value(&[q]);
            let pull = dq / tau;
            grad[j] += scale * pull;
            grad[i] -= scale * pull;
            grad[i] -= scale * tau * self.potential.gradient(&[q])[0];
        }
        scale * total
    }

    /// Inverse of `(1/(Mτ)) (L/τ + τ I)` with `L` the periodic second difference.
    fn preconditioner(&self) -> impl Fn(&mut [f64]) + Sync + '_ {
        let m = self.m;
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(m);
        let inverse = planner.plan_fft_inverse(m);
        let scale = m as f64 * self.tau;
        let symbol: Vec<f64> = (0..m)
            .map(|k| {
                let lam = 2.0 - 2.0 * (2.0 * std::f64::consts::PI * k as f64 / m as f64).cos();
                scale / (lam / self.tau + self.tau) / m as f64
            })
            .collect();
        move |v: &mut [f64]| {
            let mut buf: Vec<Complex64> = v.iter().map(|&x| Complex64::new(x, 0.0)).collect();
            forward.process(&mut buf);
            for (b, s) in buf.iter_mut().zip(&symbol) {
                *b *= s;
            }
            inverse.process(&mut buf);
            for (x, b) in v.iter_mut().zip(&buf) {
                *x = b.re;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::FiberFunction;

    fn pendulum() -> HamiltonianSpec {
        HamiltonianSpec::mechanical(1, ScalarField::cosine(1.0)).unwrap()
    }

    #[test]
    fn free_particle() {
        let spec = HamiltonianSpec::mechanical(1, ScalarField::constant(0.0)).unwrap();
        let e = aubry_beta_estimate(&spec, 1.0, &AubryConfig::default()).unwrap();
        assert_eq!(e.winding, 20);
        assert!((e.value - 0.5).abs() < 1e-3, "{e:?}");
    }

    #[test]
    fn pendulum_rest_point() {
        let cfg = AubryConfig {
            points: 200,
            tau: 0.1,
            ..AubryConfig::default()
        };
        let e = aubry_beta_estimate(&pendulum(), 0.0, &cfg).unwrap();
        assert!((e.value + 1.0).abs() < 1e-2, "{}", e.value);
        // the chain sits at the maximum of V
        assert!(e.configuration.iter().all(|q| (q - q.round()).abs() < 1e-3));
    }

    #[test]
    fn deterministic_in_the_seed() {
        let cfg = AubryConfig {
            points: 200,
            tau: 0.1,
            restarts: 4,
            ..AubryConfig::default()
        };
        let a = aubry_beta_estimate(&pendulum(), 0.5, &cfg).unwrap();
        let b = aubry_beta_estimate(&pendulum(), 0.5, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn preconditions() {
        let cfg = AubryConfig::default();
        assert!(matches!(
            aubry_beta_estimate(&pendulum(), 0.01, &cfg),
            Err(HomogError::InfeasibleWinding(_))
        ));
        let short = AubryConfig {
            points: 100,
            ..cfg
        };
        assert!(matches!(
            aubry_beta_estimate(&pendulum(), 1.0, &short),
            Err(HomogError::InvalidConfig(_))
        ));
        let free = HamiltonianSpec::fiber_only(1, FiberFunction::half_square()).unwrap();
        assert!(matches!(
            aubry_beta_estimate(&free, 1.0, &cfg),
            Err(HomogError::UnsupportedSpec(_))
        ));
    }
}
