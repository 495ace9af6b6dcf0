//! Large-time limit of `u_t + H(q, p + Du) = 0` with a monotone local Lax–Friedrichs scheme.

use serde::{Deserialize, Serialize};

use crate::error::{HomogError, Result};
use crate::grid::TorusGrid;
use crate::hamiltonian::{HamiltonianSpec, LocalHamiltonian};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LaxOleinikConfig {
    /// Final time `T`.
    pub horizon: f64,
    /// Points per axis.
    pub grid_points: usize,
    /// Courant number, at most 0.45.
    pub cfl: f64,
}

impl Default for LaxOleinikConfig {
    fn default() -> Self {
        LaxOleinikConfig {
            horizon: 200.0,
            grid_points: 512,
            cfl: 0.45,
        }
    }
}

/// Outcome of [`homogenize_laxoleinik`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaxOleinikResult {
    /// `-mean(u(T) - u(T/2)) / (T/2)`.
    pub value: f64,
    /// Difference to the quotient over `[3T/4, T]`.
    pub drift: f64,
    pub steps: usize,
}

pub const MAX_CFL: f64 = 0.45;

pub fn homogenize_laxoleinik(
    spec: &HamiltonianSpec,
    p: &[f64],
    config: &LaxOleinikConfig,
) -> Result<LaxOleinikResult> {
    let n = spec.dim();
    if p.len() != n {
        return Err(HomogError::DimensionMismatch {
            expected: n,
            got: p.len(),
        });
    }
    if !(config.cfl > 0.0) || config.cfl > MAX_CFL {
        return Err(HomogError::CflViolation {
            cfl: config.cfl,
            limit: MAX_CFL,
        });
    }
    if !(config.horizon > 0.0 && config.horizon.is_finite()) {
        return Err(HomogError::InvalidConfig(format!(
            "horizon T = {}",
            config.horizon
        )));
    }
    let grid = TorusGrid::new(n, config.grid_points)?;
    let locals = spec.localize_grid(&grid);
    let march = March::new(grid, p, &locals);
    march.run(config)
}

struct March<'a> {
    n: usize,
    h: f64,
    p: [f64; 2],
    locals: &'a [LocalHamiltonian],
    next: [Vec<usize>; 2],
    prev: [Vec<usize>; 2],
}

impl<'a> March<'a> {
    fn new(grid: TorusGrid, p: &[f64], locals: &'a [LocalHamiltonian]) -> Self {
        let n = grid.dim();
        let mut pp = [0.0; 2];
        pp[..n].copy_from_slice(p);
        let mut next = [Vec::new(), Vec::new()];
        let mut prev = [Vec::new(), Vec::new()];
        for a in 0..n {
            next[a] = (0..grid.len()).map(|i| grid.shift(i, a, 1)).collect();
            prev[a] = (0..grid.len()).map(|i| grid.shift(i, a, -1)).collect();
        }
        March {
            n,
            h: grid.spacing(),
            p: pp,
            locals,
            next,
            prev,
        }
    }

    /// Numerical Hamiltonian at every node and the largest wave speed per axis.
    fn flux(&self, u: &[f64], out: &mut [f64]) -> Result<[f64; 2]> {
        let n = self.n;
        let mut speed = [0.0_f64; 2];
        let mut g = [0.0; 2];
        for (i, o) in out.iter_mut().enumerate() {
            let mut minus = [0.0; 2];
            let mut plus = [0.0; 2];
            let mut mid = [0.0; 2];
            for a in 0..n {
                minus[a] = (u[i] - u[self.prev[a][i]]) / self.h;
                plus[a] = (u[self.next[a][i]] - u[i]) / self.h;
                mid[a] = self.p[a] + 0.5 * (minus[a] + plus[a]);
            }
            let local = &self.locals[i];
            let value = local.eval(&mid[..n])?;
            // Local wave speed: |H_p| is largest at the corners of the one-sided box.
            let mut alpha = [0.0_f64; 2];
            for corner in 0..(1usize << n) {
                let mut c = [0.0; 2];
                for a in 0..n {
                    let d = if (corner >> a) & 1 == 1 { plus[a] } else { minus[a] };
                    c[a] = self.p[a] + d;
                }
                local.eval_grad(&c[..n], &mut g[..n])?;
                for a in 0..n {
                    alpha[a] = alpha[a].max(g[a].abs());
                }
            }
            let mut num = value;
            for a in 0..n {
                num -= 0.5 * alpha[a] * (plus[a] - minus[a]);
                speed[a] = speed[a].max(alpha[a]);
            }
            *o = num;
        }
        Ok(speed)
    }

    fn run(&self, config: &LaxOleinikConfig) -> Result<LaxOleinikResult> {
        let len = self.locals.len();
        let t_end = config.horizon;
        let mut u = vec![0.0; len];
        let mut flux = vec![0.0; len];
        let h0 = self
            .locals
            .iter()
            .map(|l| l.eval(&self.p[..self.n]).map(f64::abs))
            .collect::<Result<Vec<f64>>>()?
            .into_iter()
            .fold(1.0_f64, f64::max);
        let bound = 10.0 * t_end * h0;
        let checkpoints = [0.5 * t_end, 0.75 * t_end, t_end];
        let mut means = [0.0; 3];
        let mut next_mark = 0;
        let mut t = 0.0;
        let mut steps = 0;
        while next_mark < checkpoints.len() {
            let speed = self.flux(&u, &mut flux)?;
            let rate: f64 = speed[..self.n].iter().sum::<f64>() / self.h;
            // While u is nearly flat the wave speed says little; also cap how far the
            // slopes can move in one step.
            let (lo, hi) = flux
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &f| (a.min(f), b.max(f)));
            let spread = (hi - lo) / self.h;
            let rate = rate.max(spread / self.h);
            let mut dt = if rate > 0.0 {
                config.cfl / rate
            } else {
                checkpoints[next_mark] - t
            };
            let mut hit = false;
            if t + dt >= checkpoints[next_mark] {
                dt = checkpoints[next_mark] - t;
                hit = true;
            }
            for (ui, fi) in u.iter_mut().zip(&flux) {
                *ui -= dt * fi;
            }
            t += dt;
            steps += 1;
            if u.iter().any(|x| !(x.abs() <= bound)) {
                return Err(HomogError::UnstableBlowup { t });
            }
            if hit {
                means[next_mark] = u.iter().sum::<f64>() / len as f64;
                next_mark += 1;
            }
        }
        let value = -(means[2] - means[0]) / (0.5 * t_end);
        let late = -(means[2] - means[1]) / (0.25 * t_end);
        Ok(LaxOleinikResult {
            value,
            drift: (late - value).abs(),
            steps,
        })
    }
}
