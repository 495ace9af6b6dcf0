//! Limited-memory BFGS with an optional linear preconditioner and backtracking line search.

use std::collections::VecDeque;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LbfgsOptions {
    pub memory: usize,
    pub max_iter: usize,
    /// Stop when the (preconditioned) gradient norm falls below this.
    pub grad_tol: f64,
    /// Stop when the objective decrease over one step falls below `f_tol · (1 + |f|)`.
    pub f_tol: f64,
}

impl Default for LbfgsOptions {
    fn default() -> Self {
        LbfgsOptions {
            memory: 10,
            max_iter: 500,
            grad_tol: 1e-10,
            f_tol: 1e-14,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LbfgsOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Minimises `f`, which returns the objective and writes its gradient.
///
/// `precondition` applies a symmetric positive semidefinite approximation of the inverse
/// Hessian in place.
pub fn minimize(
    mut f: impl FnMut(&[f64], &mut [f64]) -> f64,
    x0: Vec<f64>,
    opts: &LbfgsOptions,
    precondition: Option<&dyn Fn(&mut [f64])>,
) -> LbfgsOutcome {
    let n = x0.len();
    let mut x = x0;
    let mut g = vec![0.0; n];
    let mut fx = f(&x, &mut g);
    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(opts.memory);
    let apply_m = |v: &mut [f64]| {
        if let Some(p) = precondition {
            p(v);
        }
    };
    let mut trial = vec![0.0; n];
    let mut g_trial = vec![0.0; n];
    let mut converged = false;
    let mut iterations = 0;
    for it in 0..opts.max_iter {
        iterations = it + 1;
        let mut pg = g.clone();
        apply_m(&mut pg);
        if dot(&g, &pg).max(0.0).sqrt() < opts.grad_tol || !fx.is_finite() {
            converged = fx.is_finite();
            break;
        }
        // two-loop recursion
        let mut d = g.clone();
        let mut alphas = Vec::with_capacity(history.len());
        for (s, y, rho) in history.iter().rev() {
            let a = rho * dot(s, &d);
            for (di, yi) in d.iter_mut().zip(y) {
                *di -= a * yi;
            }
            alphas.push(a);
        }
        apply_m(&mut d);
        if let Some((s, y, _)) = history.back() {
            let mut my = y.clone();
            apply_m(&mut my);
            let scale = dot(s, y) / dot(y, &my).max(1e-300);
            d.iter_mut().for_each(|v| *v *= scale);
        }
        for ((s, y, rho), a) in history.iter().zip(alphas.iter().rev()) {
            let b = rho * dot(y, &d);
            for (di, si) in d.iter_mut().zip(s) {
                *di += (a - b) * si;
            }
        }
        d.iter_mut().for_each(|v| *v = -*v);
        let mut slope = dot(&g, &d);
        if slope >= 0.0 {
            history.clear();
            d = pg.iter().map(|v| -v).collect();
            slope = dot(&g, &d);
            if slope >= 0.0 {
                converged = true;
                break;
            }
        }
        let mut step = if history.is_empty() {
            (1.0 / dot(&d, &d).sqrt().max(1e-300)).min(1.0)
        } else {
            1.0
        };
        let mut accepted = false;
        let mut f_new = fx;
        for _ in 0..60 {
            for i in 0..n {
                trial[i] = x[i] + step * d[i];
            }
            f_new = f(&trial, &mut g_trial);
            if f_new.is_finite() && f_new <= fx + 1e-4 * step * slope {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            if history.is_empty() {
                converged = true;
                break;
            }
            history.clear();
            continue;
        }
        let s: Vec<f64> = (0..n).map(|i| trial[i] - x[i]).collect();
        let y: Vec<f64> = (0..n).map(|i| g_trial[i] - g[i]).collect();
        let sy = dot(&s, &y);
        if sy > 1e-16 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() && sy > 0.0 {
            if history.len() == opts.memory {
                history.pop_front();
            }
            history.push_back((s, y, 1.0 / sy));
        }
        let decrease = fx - f_new;
        std::mem::swap(&mut x, &mut trial);
        std::mem::swap(&mut g, &mut g_trial);
        fx = f_new;
        if decrease <= opts.f_tol * (1.0 + fx.abs()) {
            converged = true;
            break;
        }
    }
    LbfgsOutcome {
        x,
        value: fx,
        iterations,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock() {
        let f = |x: &[f64], g: &mut [f64]| {
            let (a, b) = (x[0], x[1]);
            g[0] = -2.0 * (1.0 - a) - 400.0 * a * (b - a * a);
            g[1] = 200.0 * (b - a * a);
            (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2)
        };
        let out = minimize(f, vec![-1.2, 1.0], &LbfgsOptions::default(), None);
        assert!((out.x[0] - 1.0).abs() < 1e-6 && (out.x[1] - 1.0).abs() < 1e-6, "{out:?}");
    }

    #[test]
    fn preconditioned_quadratic() {
        let diag = [1.0, 1e4, 1e-2];
        let f = |x: &[f64], g: &mut [f64]| {
            let mut v = 0.0;
            for i in 0..3 {
                g[i] = diag[i] * (x[i] - 1.0);
                v += 0.5 * diag[i] * (x[i] - 1.0).powi(2);
            }
            v
        };
        let pre = |v: &mut [f64]| {
            for i in 0..3 {
                v[i] /= diag[i];
            }
        };
        let out = minimize(f, vec![0.0; 3], &LbfgsOptions::default(), Some(&pre));
        assert!(out.iterations <= 3, "{out:?}");
        assert!(out.x.iter().all(|x| (x - 1.0).abs() < 1e-9));
    }
}
