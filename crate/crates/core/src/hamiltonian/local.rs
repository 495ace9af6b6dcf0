//! Fiber functions `p ↦ H(q, p)` at a frozen base point.

use super::spec::fiber_coords;
use super::truncation::TruncationProfile;
use crate::error::{HomogError, Result};

/// `H(q, ·)` with every `q`-dependent coefficient already evaluated.
#[derive(Debug, Clone, PartialEq)]
pub enum LocalHamiltonian {
    Mechanical {
        v: f64,
    },
    Product {
        gamma: f64,
    },
    Quadratic {
        scale: f64,
        center: [f64; 2],
        offset: f64,
    },
    Tabulated {
        p_max: f64,
        p_points: usize,
        table: Vec<f64>,
    },
    Truncated {
        base: Box<LocalHamiltonian>,
        profile: TruncationProfile,
    },
    Sheared {
        base: Box<LocalHamiltonian>,
        shift: [f64; 2],
    },
}

const BOX_SLACK: f64 = 1e-12;

impl LocalHamiltonian {
    pub fn eval(&self, p: &[f64]) -> Result<f64> {
        let mut g = [0.0; 2];
        self.eval_grad(p, &mut g[..p.len()])
    }

    /// Value and `p`-gradient (written into `grad`).
    pub fn eval_grad(&self, p: &[f64], grad: &mut [f64]) -> Result<f64> {
        match self {
            LocalHamiltonian::Mechanical { v } => {
                grad.copy_from_slice(p);
                Ok(0.5 * norm2(p) + v)
            }
            LocalHamiltonian::Product { gamma } => {
                for (g, x) in grad.iter_mut().zip(p) {
                    *g = 2.0 * gamma * x;
                }
                Ok(gamma * (norm2(p) - 1.0))
            }
            LocalHamiltonian::Quadratic {
                scale,
                center,
                offset,
            } => {
                let mut s = 0.0;
                for (a, g) in grad.iter_mut().enumerate() {
                    let d = p[a] - center[a];
                    *g = scale * d;
                    s += d * d;
                }
                Ok(0.5 * scale * s + offset)
            }
            LocalHamiltonian::Tabulated {
                p_max,
                p_points,
                table,
            } => multilinear(*p_max, *p_points, table, p, grad),
            LocalHamiltonian::Truncated { base, profile } => {
                let h = base.eval_grad(p, grad)?;
                let (f, d, _) = profile.value_d1_d2(h);
                for g in grad.iter_mut() {
                    *g *= d;
                }
                Ok(f)
            }
            LocalHamiltonian::Sheared { base, shift } => {
                let mut big = [0.0; 2];
                for a in 0..p.len() {
                    big[a] = p[a] + shift[a];
                }
                base.eval_grad(&big[..p.len()], grad)
            }
        }
    }

    /// `min_p H(q, p)`.
    pub fn fiber_min(&self) -> f64 {
        match self {
            LocalHamiltonian::Mechanical { v } => *v,
            LocalHamiltonian::Product { gamma } => -gamma,
            LocalHamiltonian::Quadratic { offset, .. } => *offset,
            LocalHamiltonian::Tabulated { table, .. } => {
                table.iter().copied().fold(f64::INFINITY, f64::min)
            }
            LocalHamiltonian::Truncated { base, profile } => base.fiber_min().min(profile.r),
            LocalHamiltonian::Sheared { base, .. } => base.fiber_min(),
        }
    }

    /// `L(v) = sup_p ⟨p, v⟩ - H(p)` with its maximiser.
    pub fn lagrangian(&self, v: &[f64]) -> Result<super::spec::LegendrePoint> {
        use super::spec::LegendrePoint;
        let n = v.len();
        match self {
            LocalHamiltonian::Mechanical { v: pot } => Ok(LegendrePoint {
                value: 0.5 * norm2(v) - pot,
                momentum: v.to_vec(),
            }),
            LocalHamiltonian::Product { gamma } => {
                if *gamma <= 0.0 {
                    return Err(HomogError::NotSuperlinear(format!(
                        "gamma = {gamma} at this point"
                    )));
                }
                Ok(LegendrePoint {
                    value: norm2(v) / (4.0 * gamma) + gamma,
                    momentum: v.iter().map(|x| x / (2.0 * gamma)).collect(),
                })
            }
            LocalHamiltonian::Quadratic {
                scale,
                center,
                offset,
            } => {
                let momentum: Vec<f64> = (0..n).map(|a| center[a] + v[a] / scale).collect();
                let dot: f64 = (0..n).map(|a| center[a] * v[a]).sum();
                Ok(LegendrePoint {
                    value: dot + norm2(v) / (2.0 * scale) - offset,
                    momentum,
                })
            }
            LocalHamiltonian::Tabulated {
                p_max,
                p_points,
                table,
            } => tabulated_legendre(*p_max, *p_points, table, v),
            LocalHamiltonian::Truncated { .. } => Err(HomogError::NotSuperlinear(
                "truncated Hamiltonians are bounded".into(),
            )),
            LocalHamiltonian::Sheared { base, shift } => {
                let lp = base.lagrangian(v)?;
                let dot: f64 = (0..n).map(|a| shift[a] * v[a]).sum();
                Ok(LegendrePoint {
                    value: lp.value - dot,
                    momentum: (0..n).map(|a| lp.momentum[a] - shift[a]).collect(),
                })
            }
        }
    }

    /// The two momenta with `H(p) = level` on a circle fiber, `p_- ≤ p_+`, when they exist in
    /// closed form. `None` when the level is below the fiber minimum or no closed form exists.
    pub fn fiber_roots_1d(&self, level: f64) -> Option<(f64, f64)> {
        match self {
            LocalHamiltonian::Mechanical { v } => {
                let s = 2.0 * (level - v);
                (s >= 0.0).then(|| (-s.sqrt(), s.sqrt()))
            }
            LocalHamiltonian::Product { gamma } => {
                if *gamma <= 0.0 {
                    return None;
                }
                let s = 1.0 + level / gamma;
                (s >= 0.0).then(|| (-s.sqrt(), s.sqrt()))
            }
            LocalHamiltonian::Quadratic {
                scale,
                center,
                offset,
            } => {
                let s = 2.0 * (level - offset) / scale;
                (s >= 0.0).then(|| (center[0] - s.sqrt(), center[0] + s.sqrt()))
            }
            LocalHamiltonian::Sheared { base, shift } => base
                .fiber_roots_1d(level)
                .map(|(lo, hi)| (lo - shift[0], hi - shift[0])),
            _ => None,
        }
    }

    /// Whether [`Self::fiber_roots_1d`] has a closed form for this fiber.
    pub fn has_closed_roots(&self) -> bool {
        match self {
            LocalHamiltonian::Mechanical { .. } | LocalHamiltonian::Quadratic { .. } => true,
            LocalHamiltonian::Product { gamma } => *gamma > 0.0,
            LocalHamiltonian::Sheared { base, .. } => base.has_closed_roots(),
            _ => false,
        }
    }
}

fn norm2(p: &[f64]) -> f64 {
    p.iter().map(|x| x * x).sum()
}

fn multilinear(p_max: f64, m: usize, table: &[f64], p: &[f64], grad: &mut [f64]) -> Result<f64> {
    let n = p.len();
    let dp = 2.0 * p_max / (m - 1) as f64;
    let mut base = [0usize; 2];
    let mut frac = [0.0; 2];
    for a in 0..n {
        if !(p[a].abs() <= p_max * (1.0 + BOX_SLACK)) {
            return Err(HomogError::OutOfFiberBox {
                p: p.to_vec(),
                p_max,
            });
        }
        let x = ((p[a] + p_max) / dp).clamp(0.0, (m - 1) as f64);
        let i0 = (x.floor() as usize).min(m - 2);
        base[a] = i0;
        frac[a] = x - i0 as f64;
    }
    let idx = |c: [usize; 2]| if n == 1 { c[0] } else { c[0] * m + c[1] };
    let mut value = 0.0;
    grad.iter_mut().for_each(|g| *g = 0.0);
    for corner in 0..(1usize << n) {
        let mut c = [0usize; 2];
        let mut w = [0.0; 2];
        let mut dw = [0.0; 2];
        for a in 0..n {
            let bit = (corner >> a) & 1;
            c[a] = base[a] + bit;
            w[a] = if bit == 1 { frac[a] } else { 1.0 - frac[a] };
            dw[a] = if bit == 1 { 1.0 / dp } else { -1.0 / dp };
        }
        let h = table[idx(c)];
        let weight: f64 = w[..n].iter().product();
        value += weight * h;
        for a in 0..n {
            let partial: f64 = (0..n).map(|b| if b == a { dw[b] } else { w[b] }).product();
            grad[a] += partial * h;
        }
    }
    Ok(value)
}

fn tabulated_legendre(
    p_max: f64,
    m: usize,
    table: &[f64],
    v: &[f64],
) -> Result<super::spec::LegendrePoint> {
    let n = v.len();
    let dp = 2.0 * p_max / (m - 1) as f64;
    let mut best = (f64::NEG_INFINITY, 0usize);
    for (j, &h) in table.iter().enumerate() {
        let p = fiber_coords(j, m, n, p_max, dp);
        let s: f64 = (0..n).map(|a| p[a] * v[a]).sum::<f64>() - h;
        if s > best.0 {
            best = (s, j);
        }
    }
    let on_edge = |j: usize| {
        let along = if n == 1 { [j, 1] } else { [j / m, j % m] };
        along[..n].iter().any(|&i| i == 0 || i == m - 1)
    };
    if on_edge(best.1) {
        let p = fiber_coords(best.1, m, n, p_max, dp);
        return Err(HomogError::NotSuperlinear(format!(
            "maximiser reaches the fiber box edge at p = {:?}",
            &p[..n]
        )));
    }
    // The interpolant is piecewise multilinear, so a compass search from the best node can
    // only gain on cells where it bends.
    let start = fiber_coords(best.1, m, n, p_max, dp);
    let mut p = start[..n].to_vec();
    let mut g = [0.0; 2];
    let objective = |p: &[f64], g: &mut [f64]| -> f64 {
        match multilinear(p_max, m, table, p, g) {
            Ok(h) => (0..n).map(|a| p[a] * v[a]).sum::<f64>() - h,
            Err(_) => f64::NEG_INFINITY,
        }
    };
    let mut val = objective(&p, &mut g[..n]);
    let mut step = 0.5 * dp;
    while step > 1e-12 * dp {
        let mut improved = false;
        for a in 0..n {
            for dir in [-1.0, 1.0] {
                let mut trial = p.clone();
                trial[a] += dir * step;
                let t = objective(&trial, &mut g[..n]);
                if t > val {
                    val = t;
                    p = trial;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    Ok(super::spec::LegendrePoint {
        value: val,
        momentum: p,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn truncated_gradient_vanishes_above_cutoff() {
        let prof = TruncationProfile::new(1.0, 0.5).unwrap();
        let h = LocalHamiltonian::Truncated {
            base: Box::new(LocalHamiltonian::Mechanical { v: 0.0 }),
            profile: prof,
        };
        let mut g = [0.0];
        assert_eq!(h.eval_grad(&[3.0], &mut g).unwrap(), 1.0);
        assert_eq!(g[0], 0.0);
        assert_eq!(h.eval_grad(&[1.0], &mut g).unwrap(), 0.5);
        assert_eq!(g[0], 1.0);
        assert_eq!(h.fiber_min(), 0.0);
    }

    #[test]
    fn multilinear_gradient_matches_difference() {
        let m = 9;
        let table: Vec<f64> = (0..m * m)
            .map(|j| {
                let p = fiber_coords(j, m, 2, 2.0, 0.5);
                p[0] * p[0] + 0.3 * p[0] * p[1] + p[1] * p[1]
            })
            .collect();
        let h = LocalHamiltonian::Tabulated {
            p_max: 2.0,
            p_points: m,
            table,
        };
        let p = [0.3, -0.7];
        let mut g = [0.0; 2];
        let v = h.eval_grad(&p, &mut g).unwrap();
        let eps = 1e-7;
        for a in 0..2 {
            let mut pp = p;
            pp[a] += eps;
            let fd = (h.eval(&pp).unwrap() - v) / eps;
            assert!((fd - g[a]).abs() < 1e-5);
        }
    }

    #[test]
    fn sheared_roots_shift() {
        let h = LocalHamiltonian::Sheared {
            base: Box::new(LocalHamiltonian::Mechanical { v: 0.0 }),
            shift: [0.5, 0.0],
        };
        let (lo, hi) = h.fiber_roots_1d(2.0).unwrap();
        assert_eq!((lo, hi), (-2.5, 1.5));
        assert!(h.fiber_roots_1d(-1.0).is_none());
    }
}
