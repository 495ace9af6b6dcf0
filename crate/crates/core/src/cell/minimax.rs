//! Log-sum-exp smoothed minimax over mean-zero correctors with a dual certificate.

use super::{CorrectorField, SolverConfig};
use crate::error::{HomogError, Result};
use crate::grid::{DiffScheme, FourierMultiplier, PeriodicField, TorusGrid};
use crate::hamiltonian::{HamiltonianSpec, LocalHamiltonian};
use crate::lbfgs::{minimize, LbfgsOptions};

/// Outcome of [`homogenize_minimax`].
#[derive(Debug, Clone, PartialEq)]
pub struct MinimaxResult {
    /// `max_q H(q, p + du(q))` at the best corrector found; an upper bound.
    pub value: f64,
    /// Certified lower bound on the discrete cell problem.
    pub lower: f64,
    pub gap: f64,
    pub corrector: CorrectorField,
    /// `gap <= config.tol`.
    pub converged: bool,
    pub iterations: usize,
}

impl MinimaxResult {
    /// Turns an unconverged result into [`HomogError::NoConvergence`].
    pub fn require_converged(self, p: &[f64]) -> Result<Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(HomogError::NoConvergence {
                p: p.to_vec(),
                value: self.value,
                gap: self.gap,
            })
        }
    }
}

pub fn homogenize_minimax(
    spec: &HamiltonianSpec,
    p: &[f64],
    config: &SolverConfig,
) -> Result<MinimaxResult> {
    homogenize_minimax_from(spec, p, config, None)
}

/// As [`homogenize_minimax`], starting the descent from `warm` instead of `u = 0`.
pub fn homogenize_minimax_from(
    spec: &HamiltonianSpec,
    p: &[f64],
    config: &SolverConfig,
    warm: Option<&PeriodicField>,
) -> Result<MinimaxResult> {
    config.validate()?;
    let n = spec.dim();
    if p.len() != n {
        return Err(HomogError::DimensionMismatch {
            expected: n,
            got: p.len(),
        });
    }
    if p.iter().any(|x| !x.is_finite()) {
        return Err(HomogError::InvalidSpec(format!("non-finite momentum {p:?}")));
    }
    let grid = config.grid(n)?;
    if let Some(w) = warm {
        if *w.grid() != grid {
            return Err(HomogError::InvalidConfig(
                "warm start lives on a different grid".into(),
            ));
        }
    }
    if spec.metadata().fiber_convex {
        let locals = spec.localize_grid(&grid);
        let cell = Cell::new(grid, p, &locals);
        let start = warm.map(|w| w.values().to_vec());
        let (value, u, iterations) = cell.solve(config, start);
        let lower = cell.dual_bound(&u, config);
        return Ok(finish(grid, value, lower, u, iterations, config));
    }
    match spec {
        HamiltonianSpec::Truncated { base, profile } if base.metadata().fiber_convex => {
            // Solve the convex problem first and start the truncated descent from its corrector.
            let inner = homogenize_minimax_from(base, p, config, warm)?;
            let locals = spec.localize_grid(&grid);
            let cell = Cell::new(grid, p, &locals);
            let (value, u, iterations) =
                cell.solve(config, Some(inner.corrector.u.values().to_vec()));
            // f(s) >= min(s, r) and min(., r) commutes with inf-sup.
            let lower = inner.lower.min(profile.r);
            Ok(finish(
                grid,
                value,
                lower,
                u,
                iterations + inner.iterations,
                config,
            ))
        }
        _ => Err(HomogError::NonConvexSpec),
    }
}

fn finish(
    grid: TorusGrid,
    value: f64,
    lower: f64,
    u: Vec<f64>,
    iterations: usize,
    config: &SolverConfig,
) -> MinimaxResult {
    let lower = lower.min(value);
    let gap = value - lower;
    let field = PeriodicField::new(grid, u).expect("finite corrector");
    MinimaxResult {
        value,
        lower,
        gap,
        corrector: CorrectorField::new(field, DiffScheme::Forward),
        converged: gap <= config.tol,
        iterations,
    }
}

/// Discrete cell problem on a fixed grid with forward differences.
struct Cell<'a> {
    grid: TorusGrid,
    n: usize,
    h: f64,
    p: [f64; 2],
    locals: &'a [LocalHamiltonian],
    next: [Vec<usize>; 2],
    prev: [Vec<usize>; 2],
    pseudo_inverse: FourierMultiplier,
}

/// Per-node energies and `p`-gradients along the graph of `p + du`.
struct GraphValues {
    energy: Vec<f64>,
    grad: Vec<[f64; 2]>,
    momentum: Vec<[f64; 2]>,
}

impl<'a> Cell<'a> {
    fn new(grid: TorusGrid, p: &[f64], locals: &'a [LocalHamiltonian]) -> Self {
        let n = grid.dim();
        let len = grid.len();
        let mut pp = [0.0; 2];
        pp[..n].copy_from_slice(p);
        let mut next = [Vec::new(), Vec::new()];
        let mut prev = [Vec::new(), Vec::new()];
        for a in 0..n {
            next[a] = (0..len).map(|i| grid.shift(i, a, 1)).collect();
            prev[a] = (0..len).map(|i| grid.shift(i, a, -1)).collect();
        }
        let points = grid.points_per_axis() as f64;
        let h = grid.spacing();
        // (D^T D)^+ for forward differences; the zero mode is dropped.
        let pseudo_inverse = FourierMultiplier::new(grid, |k0, k1| {
            let lam = (2.0 - 2.0 * (2.0 * std::f64::consts::PI * k0 / points).cos())
                + (2.0 - 2.0 * (2.0 * std::f64::consts::PI * k1 / points).cos());
            if lam > 1e-14 {
                h * h / lam
            } else {
                0.0
            }
        });
        Cell {
            grid,
            n,
            h,
            p: pp,
            locals,
            next,
            prev,
            pseudo_inverse,
        }
    }

    fn graph(&self, u: &[f64]) -> Option<GraphValues> {
        let len = u.len();
        let mut out = GraphValues {
            energy: vec![0.0; len],
            grad: vec![[0.0; 2]; len],
            momentum: vec![[0.0; 2]; len],
        };
        let n = self.n;
        for i in 0..len {
            let mut m = [0.0; 2];
            for a in 0..n {
                m[a] = self.p[a] + (u[self.next[a][i]] - u[i]) / self.h;
            }
            let mut g = [0.0; 2];
            let e = self.locals[i].eval_grad(&m[..n], &mut g[..n]).ok()?;
            if !e.is_finite() {
                return None;
            }
            out.energy[i] = e;
            out.grad[i] = g;
            out.momentum[i] = m;
        }
        Some(out)
    }

    /// `D^T v` for a node-wise vector field `v`.
    fn divergence_adjoint(&self, v: &[[f64; 2]], out: &mut [f64]) {
        out.iter_mut().for_each(|x| *x = 0.0);
        for a in 0..self.n {
            for (i, o) in out.iter_mut().enumerate() {
                *o += (v[self.prev[a][i]][a] - v[i][a]) / self.h;
            }
        }
    }

    fn softmax(energy: &[f64], beta: f64) -> (f64, f64, Vec<f64>) {
        let m = energy.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut w: Vec<f64> = energy.iter().map(|e| (beta * (e - m)).exp()).collect();
        let s: f64 = w.iter().sum();
        w.iter_mut().for_each(|x| *x /= s);
        let smooth = m + (s / energy.len() as f64).ln() / beta;
        (m, smooth, w)
    }

    /// Anneals through the temperature schedule; returns the best hard max, its corrector and
    /// the total number of descent iterations.
    fn solve(&self, config: &SolverConfig, start: Option<Vec<f64>>) -> (f64, Vec<f64>, usize) {
        let len = self.grid.len();
        let mut u = start.unwrap_or_else(|| vec![0.0; len]);
        let mean = u.iter().sum::<f64>() / len as f64;
        u.iter_mut().for_each(|x| *x -= mean);
        let mut best = match self.graph(&u) {
            Some(g) => (g.energy.iter().copied().fold(f64::NEG_INFINITY, f64::max), u.clone()),
            None => (f64::INFINITY, u.clone()),
        };
        let opts = LbfgsOptions {
            memory: config.memory,
            max_iter: config.max_iter,
            grad_tol: 1e-12,
            f_tol: 1e-15,
        };
        let precondition = |v: &mut [f64]| self.pseudo_inverse.apply(v);
        let mut iterations = 0;
        for beta in config.temperatures() {
            let mut weighted = vec![[0.0; 2]; len];
            let objective = |x: &[f64], grad: &mut [f64]| -> f64 {
                let Some(g) = self.graph(x) else {
                    return f64::INFINITY;
                };
                let (hard, smooth, w) = Cell::softmax(&g.energy, beta);
                if hard < best.0 {
                    best = (hard, x.to_vec());
                }
                for i in 0..len {
                    for a in 0..self.n {
                        weighted[i][a] = w[i] * g.grad[i][a];
                    }
                }
                self.divergence_adjoint(&weighted, grad);
                smooth
            };
            let out = minimize(objective, u, &opts, Some(&precondition));
            iterations += out.iterations;
            u = out.x;
        }
        let (value, mut u) = best;
        let mean = u.iter().sum::<f64>() / len as f64;
        u.iter_mut().for_each(|x| *x -= mean);
        (value, u, iterations)
    }

    /// Largest of the available lower bounds on `inf_u max_i H_i(p + Du_i)`.
    fn dual_bound(&self, u: &[f64], config: &SolverConfig) -> f64 {
        // Every node satisfies H_i >= min_p H_i.
        let mut lower = self
            .locals
            .iter()
            .map(|l| l.fiber_min())
            .fold(f64::NEG_INFINITY, f64::max);
        let Some(g) = self.graph(u) else {
            return lower;
        };
        let len = self.grid.len();
        if self.n == 1 {
            // Tangent planes weighted by μ ∝ 1/H_p: the linear part sums to zero.
            let slopes: Vec<f64> = g.grad.iter().map(|x| x[0]).collect();
            let same_sign = slopes.iter().all(|&s| s > 1e-300) || slopes.iter().all(|&s| s < -1e-300);
            if same_sign {
                let inv_sum: f64 = slopes.iter().map(|s| 1.0 / s).sum();
                let b: f64 = (0..len)
                    .map(|i| g.energy[i] / slopes[i] / inv_sum)
                    .sum();
                if b.is_finite() {
                    lower = lower.max(b);
                }
            }
        }
        let last_beta = *config.temperatures().last().expect("at least one stage");
        for beta in [last_beta, last_beta / 4.0, last_beta * 4.0] {
            let (_, _, mu) = Cell::softmax(&g.energy, beta);
            for eta in [0.0, 1e-8, 1e-4] {
                let mu: Vec<f64> = mu.iter().map(|m| (1.0 - eta) * m + eta / len as f64).collect();
                if let Some(b) = self.fenchel_bound(&g, &mu) {
                    lower = lower.max(b);
                }
            }
        }
        lower
    }

    /// `⟨Σ w, p⟩ - Σ μ_i L_i(w_i / μ_i)` for `w` the divergence-free part of `μ ⊙ H_p`.
    fn fenchel_bound(&self, g: &GraphValues, mu: &[f64]) -> Option<f64> {
        let len = self.grid.len();
        let n = self.n;
        let mut w: Vec<[f64; 2]> = (0..len)
            .map(|i| [mu[i] * g.grad[i][0], mu[i] * g.grad[i][1]])
            .collect();
        let mut div = vec![0.0; len];
        self.divergence_adjoint(&w, &mut div);
        self.pseudo_inverse.apply(&mut div);
        for i in 0..len {
            for a in 0..n {
                w[i][a] -= (div[self.next[a][i]] - div[i]) / self.h;
            }
        }
        let mut total = 0.0;
        let mut flux = [0.0; 2];
        for i in 0..len {
            for a in 0..n {
                flux[a] += w[i][a];
            }
            if mu[i] == 0.0 {
                if w[i][..n].iter().any(|x| x.abs() > 0.0) {
                    return None;
                }
                continue;
            }
            let v: Vec<f64> = (0..n).map(|a| w[i][a] / mu[i]).collect();
            let l = self.locals[i].lagrangian(&v).ok()?;
            total += mu[i] * l.value;
        }
        let b = (0..n).map(|a| flux[a] * self.p[a]).sum::<f64>() - total;
        b.is_finite().then_some(b)
    }
}
