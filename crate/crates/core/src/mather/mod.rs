//! Mather's `α` and `β` functions from sampled `H̄`, and a direct action-minimization estimate of `β`.

mod aubry;
mod fenchel;

use serde::Serialize;

use crate::cell::{AxisLabel, EffectiveHamiltonian, SampleGrid, SampledFunction};
use crate::error::{HomogError, Result};

pub use aubry::{aubry_beta_estimate, AubryConfig, AubryEstimate};
pub use fenchel::{
    conjugate_1d, conjugate_1d_brute, conjugate_2d_brute, fenchel_transform, slope_grid,
};
pub(crate) use fenchel::conjugate_sorted;

/// `α = H̄` on the cohomology grid.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaFunction {
    pub samples: SampledFunction,
    /// Boundary slopes strictly exceed the interior ones along every grid line.
    pub superlinear: bool,
}

impl AlphaFunction {
    pub fn from_effective(eff: &EffectiveHamiltonian) -> Self {
        let samples = eff.relabel(AxisLabel::C);
        let superlinear = boundary_slopes_dominate(&samples);
        AlphaFunction {
            samples,
            superlinear,
        }
    }
}

fn boundary_slopes_dominate(f: &SampledFunction) -> bool {
    f.grid.lines().iter().all(|line| {
        if line.len() < 4 {
            return false;
        }
        let axis = if f.dim() == 1 || line[1] == line[0] + 1 { f.dim() - 1 } else { 0 };
        let x = |i: usize| f.grid.point(line[i])[axis];
        let slopes: Vec<f64> = (1..line.len())
            .map(|i| (f.value[line[i]] - f.value[line[i - 1]]) / (x(i) - x(i - 1)))
            .collect();
        let m = slopes.len();
        let interior = &slopes[1..m - 1];
        let lo = interior.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = interior.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        slopes[0] < lo && slopes[m - 1] > hi
    })
}

/// `β = α*` on a rotation-vector grid.
#[derive(Debug, Clone, PartialEq)]
pub struct BetaFunction {
    pub samples: SampledFunction,
    /// The cohomology grid `β` was computed from.
    pub dual_grid: SampleGrid,
}

impl BetaFunction {
    /// `β` on `h_grid`, or on [`slope_grid`] of `α` when `None`.
    pub fn from_alpha(alpha: &AlphaFunction, h_grid: Option<SampleGrid>) -> Result<Self> {
        let grid = match h_grid {
            Some(g) => g,
            None => slope_grid(&alpha.samples)?,
        };
        let samples = fenchel_transform(&alpha.samples, &grid, AxisLabel::H)?;
        Ok(BetaFunction {
            samples,
            dual_grid: alpha.samples.grid.clone(),
        })
    }
}

/// `β(0) = -min α`, with the location of the minimum and the certification gap there.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BetaZero {
    pub value: f64,
    pub argmin: Vec<f64>,
    pub gap: f64,
}

/// Minimum of the parabola through three points, when it opens upward.
fn parabola_drop(x: [f64; 3], v: [f64; 3]) -> f64 {
    let (d0, d1) = (x[1] - x[0], x[2] - x[1]);
    let f01 = (v[1] - v[0]) / d0;
    let f12 = (v[2] - v[1]) / d1;
    let a = (f12 - f01) / (x[2] - x[0]);
    if !(a > 0.0) {
        return 0.0;
    }
    let b = (f01 * d1 + f12 * d0) / (d0 + d1);
    b * b / (4.0 * a)
}

/// How far below `v[k]` a convex function through the samples can reach on
/// `[x[k-1], x[k+1]]`, from the chords of the neighbouring intervals extended inward.
fn convex_drop_bound(x: &[f64], v: &[f64], k: usize) -> f64 {
    let line = |a: usize, b: usize| {
        let s = (v[b] - v[a]) / (x[b] - x[a]);
        (s, v[a] - s * x[a])
    };
    let n = x.len();
    // (interval, chord entering from the near side, chord entering from the far side)
    let right = ((k, k + 1), line(k - 1, k), (k + 2 < n).then(|| line(k + 1, k + 2)));
    let left = ((k - 1, k), line(k, k + 1), (k >= 2).then(|| line(k - 2, k - 1)));
    let mut lowest = v[k];
    for ((lo, hi), near, far) in [right, left] {
        let at = |t: f64| {
            let a = near.0 * t + near.1;
            far.map_or(a, |f| a.max(f.0 * t + f.1))
        };
        let mut m = at(x[lo]).min(at(x[hi]));
        if let Some(f) = far {
            if near.0 != f.0 {
                let t = (f.1 - near.1) / (near.0 - f.0);
                if t > x[lo] && t < x[hi] {
                    m = m.min(at(t));
                }
            }
        }
        lowest = lowest.min(m);
    }
    (v[k] - lowest).max(0.0)
}

/// `β(0) = -inf α`, with a 3-point quadratic refinement along each axis around the discrete
/// minimizer. The refinement never drops below what convexity of the neighbouring samples
/// allows, which keeps it inert at kinks such as the edge of a flat part.
pub fn beta_zero(alpha: &AlphaFunction) -> Result<BetaZero> {
    let f = &alpha.samples;
    if f.is_empty() {
        return Err(HomogError::EmptyInput);
    }
    let (i, v) = f.argmin();
    let shape = f.grid.shape();
    let p = f.grid.point(i);
    let mut idx = vec![i];
    if shape.len() == 2 {
        idx = vec![i / shape[1], i % shape[1]];
    }
    let mut drop = 0.0;
    for (a, &k) in idx.iter().enumerate() {
        if k == 0 || k + 1 == shape[a] {
            return Err(HomogError::MinimumOnBoundary { p });
        }
        let stride = if a + 1 == shape.len() { 1 } else { shape[1] };
        let axis = &f.grid.axes()[a];
        let first = i - k * stride;
        let line: Vec<f64> = (0..shape[a]).map(|j| f.value[first + j * stride]).collect();
        let fit = parabola_drop([axis[k - 1], axis[k], axis[k + 1]], [line[k - 1], v, line[k + 1]]);
        drop += fit.min(convex_drop_bound(axis, &line, k));
    }
    Ok(BetaZero {
        value: -(v - drop),
        argmin: p,
        gap: f.gap(i),
    })
}

/// Outcome of [`biconjugate_check`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BiconjugateReport {
    pub max_gap: f64,
    pub passed: bool,
}

pub const BICONJUGATE_TOL: f64 = 1e-8;

/// `max |β** - β|` over the samples of `β`.
///
/// In 1D the intermediate transform is evaluated at the edge slopes of the lower hull of `β`,
/// which contain a subgradient of the hull at every sample, so `β**` is exactly the lower convex
/// envelope of the samples.
/// In 2D it is evaluated on the grid `β` was computed from.
pub fn biconjugate_check(beta: &BetaFunction) -> Result<BiconjugateReport> {
    let f = &beta.samples;
    let twice = match f.dim() {
        1 => {
            let x = &f.grid.axes()[0];
            let hull = fenchel::lower_hull(x, &f.value);
            let slopes: Vec<f64> = hull
                .windows(2)
                .map(|e| (f.value[e[1]] - f.value[e[0]]) / (x[e[1]] - x[e[0]]))
                .collect();
            let star = conjugate_sorted(x, &f.value, &slopes);
            conjugate_sorted(&slopes, &star, x)
        }
        _ => {
            let star = fenchel::conjugate_on(&f.grid, &f.value, &beta.dual_grid)?;
            fenchel::conjugate_on(&beta.dual_grid, &star, &f.grid)?
        }
    };
    let max_gap = twice
        .iter()
        .zip(&f.value)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok(BiconjugateReport {
        max_gap,
        passed: max_gap <= BICONJUGATE_TOL,
    })
}

/// `max over sample pairs of ⟨c, h⟩ - α(c) - β(h)`; Fenchel–Young says this is `≤ 0`.
pub fn fenchel_young_defect(alpha: &AlphaFunction, beta: &BetaFunction) -> f64 {
    let (a, b) = (&alpha.samples, &beta.samples);
    let cs = a.grid.points();
    let hs = b.grid.points();
    let mut worst = f64::NEG_INFINITY;
    for (c, ac) in cs.iter().zip(&a.value) {
        for (h, bh) in hs.iter().zip(&b.value) {
            let pair: f64 = c.iter().zip(h).map(|(x, y)| x * y).sum();
            worst = worst.max(pair - ac - bh);
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sampled(grid: SampleGrid, f: impl Fn(&[f64]) -> f64) -> SampledFunction {
        let value: Vec<f64> = grid.points().iter().map(|p| f(p)).collect();
        SampledFunction {
            label: AxisLabel::P,
            grid,
            lower: value.clone(),
            upper: value.clone(),
            value,
            method: "exact".into(),
            spec_digest: String::new(),
        }
    }

    fn half_square_alpha(grid: SampleGrid) -> AlphaFunction {
        AlphaFunction::from_effective(&sampled(grid, |p| 0.5 * p.iter().map(|x| x * x).sum::<f64>()))
    }

    #[test]
    fn quadratic_alpha_gives_quadratic_beta() {
        let alpha = half_square_alpha(SampleGrid::line(-4.0, 4.0, 257).unwrap());
        assert!(alpha.superlinear);
        assert_eq!(alpha.samples.label, AxisLabel::C);
        let beta = BetaFunction::from_alpha(&alpha, Some(SampleGrid::line(-3.0, 3.0, 193).unwrap())).unwrap();
        for (h, b) in beta.samples.grid.axes()[0].iter().zip(&beta.samples.value) {
            assert!((b - 0.5 * h * h).abs() < 1e-4);
        }
        let z = beta_zero(&alpha).unwrap();
        assert!(z.value.abs() < 1e-15);
        assert!((z.value - beta.samples.value[96]).abs() < 1e-12);
        let r = biconjugate_check(&beta).unwrap();
        assert!(r.passed && r.max_gap < 1e-12, "{r:?}");
        assert!(fenchel_young_defect(&alpha, &beta) <= 1e-12);
    }

    #[test]
    fn default_h_grid_spans_the_slopes() {
        let alpha = half_square_alpha(SampleGrid::line(-2.0, 2.0, 65).unwrap());
        let beta = BetaFunction::from_alpha(&alpha, None).unwrap();
        let h = &beta.samples.grid.axes()[0];
        assert!((h[0] + 2.0 - 1.0 / 32.0).abs() < 1e-6, "{}", h[0]);
        assert_eq!(beta.samples.label, AxisLabel::H);
        assert!(biconjugate_check(&beta).unwrap().passed);
    }

    #[test]
    fn refinement_recovers_an_off_grid_minimum() {
        let grid = SampleGrid::line(-1.0, 1.0, 21).unwrap();
        let alpha = AlphaFunction::from_effective(&sampled(grid, |p| (p[0] - 0.03).powi(2) - 0.5));
        let z = beta_zero(&alpha).unwrap();
        assert!((z.value - 0.5).abs() < 1e-12, "{z:?}");
    }

    #[test]
    fn no_refinement_at_the_edge_of_a_flat_part() {
        let grid = SampleGrid::line(-1.0, 1.0, 21).unwrap();
        let alpha = AlphaFunction::from_effective(&sampled(grid, |p| (-3.0 * (p[0] + 0.5)).max(0.0) + 1.0));
        let z = beta_zero(&alpha).unwrap();
        assert!((z.argmin[0] + 0.5).abs() < 1e-12);
        assert_eq!(z.value, -1.0);
    }

    #[test]
    fn boundary_minimum_is_rejected() {
        let grid = SampleGrid::line(0.0, 1.0, 11).unwrap();
        let alpha = AlphaFunction::from_effective(&sampled(grid, |p| p[0]));
        assert!(matches!(beta_zero(&alpha), Err(HomogError::MinimumOnBoundary { .. })));
    }

    #[test]
    fn perturbed_samples_report_their_hull_distance() {
        let grid = SampleGrid::line(-1.0, 1.0, 21).unwrap();
        let mut f = sampled(grid, |p| p[0] * p[0]).relabel(AxisLabel::H);
        f.value[10] += 0.3;
        let beta = BetaFunction {
            dual_grid: f.grid.clone(),
            samples: f.clone(),
        };
        let r = biconjugate_check(&beta).unwrap();
        // hull at 0 is the chord between ±0.1: 0.01
        assert!((r.max_gap - 0.29).abs() < 1e-12, "{r:?}");
        assert!(!r.passed);
    }

    #[test]
    fn two_dimensional_pipeline() {
        let alpha = half_square_alpha(SampleGrid::square(-2.0, 2.0, 33).unwrap());
        let beta = BetaFunction::from_alpha(&alpha, Some(SampleGrid::square(-1.0, 1.0, 17).unwrap())).unwrap();
        for (h, b) in beta.samples.grid.points().iter().zip(&beta.samples.value) {
            assert!((b - 0.5 * (h[0] * h[0] + h[1] * h[1])).abs() < 1e-12);
        }
        assert!(biconjugate_check(&beta).unwrap().max_gap < 1e-12);
        assert!(beta_zero(&alpha).unwrap().value.abs() < 1e-15);
    }
}
