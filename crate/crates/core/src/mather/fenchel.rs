//! Discrete Legendre–Fenchel transform `g*(y) = max_x (⟨x, y⟩ - g(x))`.

use crate::cell::{SampleGrid, SampledFunction};
use crate::error::{HomogError, Result};

/// Vertices of the lower convex hull of `(x_i, g_i)`; `x` strictly increasing.
pub(crate) fn lower_hull(x: &[f64], g: &[f64]) -> Vec<usize> {
    let mut hull: Vec<usize> = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        while hull.len() >= 2 {
            let a = hull[hull.len() - 2];
            let b = hull[hull.len() - 1];
            // drop b when it lies on or above the chord a -> i
            let cross = (x[b] - x[a]) * (g[i] - g[a]) - (g[b] - g[a]) * (x[i] - x[a]);
            if cross <= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(i);
    }
    hull
}

/// Conjugate over arbitrary strictly increasing abscissae, evaluated at `y` in any order.
pub(crate) fn conjugate_sorted(x: &[f64], g: &[f64], y: &[f64]) -> Vec<f64> {
    let hull = lower_hull(x, g);
    let mut order: Vec<usize> = (0..y.len()).collect();
    order.sort_by(|&a, &b| y[a].total_cmp(&y[b]));
    let mut out = vec![0.0; y.len()];
    let mut k = 0;
    for j in order {
        let s = y[j];
        let score = |k: usize| x[hull[k]] * s - g[hull[k]];
        while k + 1 < hull.len() && score(k + 1) >= score(k) {
            k += 1;
        }
        out[j] = score(k);
    }
    out
}

fn check_axis(x: &[f64], g: &[f64]) -> Result<()> {
    if x.is_empty() || g.len() != x.len() {
        return Err(HomogError::EmptyInput);
    }
    if g.iter().chain(x).any(|v| !v.is_finite()) {
        return Err(HomogError::InvalidConfig("non-finite sample".into()));
    }
    if x.windows(2).any(|w| w[1] <= w[0]) {
        return Err(HomogError::UnsortedGrid);
    }
    if x.len() >= 3 {
        let step = (x[x.len() - 1] - x[0]) / (x.len() - 1) as f64;
        if x.windows(2).any(|w| ((w[1] - w[0]) - step).abs() > 1e-9 * step) {
            return Err(HomogError::NonUniformGrid);
        }
    }
    Ok(())
}

/// Linear-time conjugate of samples `g` on the uniform sorted grid `x`, evaluated at `y`.
pub fn conjugate_1d(x: &[f64], g: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    check_axis(x, g)?;
    Ok(conjugate_sorted(x, g, y))
}

/// `O(N·M)` reference for [`conjugate_1d`].
pub fn conjugate_1d_brute(x: &[f64], g: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    if x.is_empty() || g.len() != x.len() {
        return Err(HomogError::EmptyInput);
    }
    Ok(y
        .iter()
        .map(|&s| {
            x.iter()
                .zip(g)
                .map(|(xi, gi)| xi * s - gi)
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect())
}

/// Separable 2D conjugate; `g` is row-major on `x1 × x2`, output row-major on `y1 × y2`.
///
/// `max_{x1} [x1·y1 + max_{x2} (x2·y2 - g(x1, x2))]`: one pass along each axis.
pub(crate) fn conjugate_2d_sorted(
    x1: &[f64],
    x2: &[f64],
    g: &[f64],
    y1: &[f64],
    y2: &[f64],
) -> Vec<f64> {
    let (n1, n2) = (x1.len(), x2.len());
    let mut inner = vec![0.0; n1 * y2.len()];
    for i in 0..n1 {
        let row = conjugate_sorted(x2, &g[i * n2..(i + 1) * n2], y2);
        inner[i * y2.len()..(i + 1) * y2.len()].copy_from_slice(&row);
    }
    let mut out = vec![0.0; y1.len() * y2.len()];
    let mut column = vec![0.0; n1];
    for j in 0..y2.len() {
        for (i, c) in column.iter_mut().enumerate() {
            *c = -inner[i * y2.len() + j];
        }
        for (k, v) in conjugate_sorted(x1, &column, y1).into_iter().enumerate() {
            out[k * y2.len() + j] = v;
        }
    }
    out
}

/// `O(N·M)` reference for the 2D transform.
pub fn conjugate_2d_brute(x1: &[f64], x2: &[f64], g: &[f64], y1: &[f64], y2: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(y1.len() * y2.len());
    for &s1 in y1 {
        for &s2 in y2 {
            let mut best = f64::NEG_INFINITY;
            for (i, a) in x1.iter().enumerate() {
                for (j, b) in x2.iter().enumerate() {
                    best = best.max(a * s1 + b * s2 - g[i * x2.len() + j]);
                }
            }
            out.push(best);
        }
    }
    out
}

/// Conjugate of `values` sampled on `grid`, evaluated on `out`.
pub(crate) fn conjugate_on(grid: &SampleGrid, values: &[f64], out: &SampleGrid) -> Result<Vec<f64>> {
    if grid.dim() != out.dim() {
        return Err(HomogError::DimensionMismatch {
            expected: grid.dim(),
            got: out.dim(),
        });
    }
    let axes = grid.axes();
    let ys = out.axes();
    match grid.dim() {
        1 => conjugate_1d(&axes[0], values, &ys[0]),
        _ => {
            for a in axes {
                check_axis(a, a)?;
            }
            if values.iter().any(|v| !v.is_finite()) {
                return Err(HomogError::InvalidConfig("non-finite sample".into()));
            }
            Ok(conjugate_2d_sorted(&axes[0], &axes[1], values, &ys[0], &ys[1]))
        }
    }
}

/// The conjugate of a sampled function, with bounds: the transform is order-reversing, so the
/// upper input bound yields the lower output bound.
pub fn fenchel_transform(
    f: &SampledFunction,
    out: &SampleGrid,
    label: crate::cell::AxisLabel,
) -> Result<SampledFunction> {
    let value = conjugate_on(&f.grid, &f.value, out)?;
    let lower = conjugate_on(&f.grid, &f.upper, out)?;
    let upper = conjugate_on(&f.grid, &f.lower, out)?;
    Ok(SampledFunction {
        label,
        grid: out.clone(),
        value,
        lower,
        upper,
        method: f.method.clone(),
        spec_digest: f.spec_digest.clone(),
    })
}

/// Uniform grid between the boundary slopes of `f` along each axis, with the same shape.
///
/// Outside that range the discrete conjugate is affine and carries no information. In 2D the
/// range is the one shared by every grid line.
pub fn slope_grid(f: &SampledFunction) -> Result<SampleGrid> {
    let shape = f.grid.shape();
    let mut axes = Vec::with_capacity(shape.len());
    for (a, x) in f.grid.axes().iter().enumerate() {
        if x.len() < 2 {
            return Err(HomogError::EmptyInput);
        }
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        for line in f.grid.lines() {
            let along = line.len() == x.len()
                && (f.dim() == 1 || (a == 1) == (line[1] == line[0] + 1));
            if !along {
                continue;
            }
            let m = line.len();
            lo = lo.max((f.value[line[1]] - f.value[line[0]]) / (x[1] - x[0]));
            hi = hi.min((f.value[line[m - 1]] - f.value[line[m - 2]]) / (x[m - 1] - x[m - 2]));
        }
        if !(hi > lo) {
            return Err(HomogError::InvalidConfig(format!(
                "degenerate slope range along axis {a}"
            )));
        }
        // shrink by a hair so the end points stay inside the slope range
        let pad = 1e-9 * (hi - lo);
        let count = x.len();
        let step = (hi - lo - 2.0 * pad) / (count - 1) as f64;
        axes.push((0..count).map(|i| lo + pad + step * i as f64).collect());
    }
    SampleGrid::new(axes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn half_square_is_self_dual() {
        let x = linspace(-4.0, 4.0, 257);
        let g: Vec<f64> = x.iter().map(|v| 0.5 * v * v).collect();
        let y = linspace(-3.0, 3.0, 193);
        let c = conjugate_1d(&x, &g, &y).unwrap();
        for (s, v) in y.iter().zip(&c) {
            assert!((v - 0.5 * s * s).abs() < 1e-4);
        }
    }

    #[test]
    fn input_validation() {
        assert_eq!(conjugate_1d(&[], &[], &[0.0]), Err(HomogError::EmptyInput));
        assert_eq!(
            conjugate_1d(&[0.0, 1.0, 3.0], &[0.0; 3], &[0.0]),
            Err(HomogError::NonUniformGrid)
        );
        assert_eq!(
            conjugate_1d(&[0.0, 2.0, 1.0], &[0.0; 3], &[0.0]),
            Err(HomogError::UnsortedGrid)
        );
    }

    #[test]
    fn non_convex_input_uses_its_hull() {
        let x = linspace(-1.0, 1.0, 5);
        let g = [1.0, 0.0, 5.0, 0.0, 1.0];
        let y = linspace(-3.0, 3.0, 13);
        let fast = conjugate_1d(&x, &g, &y).unwrap();
        let brute = conjugate_1d_brute(&x, &g, &y).unwrap();
        for (a, b) in fast.iter().zip(&brute) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn separable_2d_matches_brute_force() {
        let x = linspace(-2.0, 2.0, 21);
        let mut g = Vec::new();
        for a in &x {
            for b in &x {
                g.push(0.5 * a * a + 0.25 * a * b + b * b + (3.0 * a).sin() * 0.1);
            }
        }
        let y1 = linspace(-1.5, 1.5, 9);
        let y2 = linspace(-2.5, 2.5, 11);
        let fast = conjugate_2d_sorted(&x, &x, &g, &y1, &y2);
        let brute = conjugate_2d_brute(&x, &x, &g, &y1, &y2);
        for (a, b) in fast.iter().zip(&brute) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn fast_equals_brute(
            curv in proptest::collection::vec(0.0f64..5.0, 2..60),
            y in proptest::collection::vec(-20.0f64..20.0, 1..40),
            start in -3.0f64..3.0,
        ) {
            let n = curv.len() + 1;
            let x = linspace(-2.0, 2.0, n);
            let mut slope = start;
            let mut g = vec![0.0];
            for c in &curv {
                slope += c;
                g.push(g.last().unwrap() + slope * (x[1] - x[0]));
            }
            let fast = conjugate_1d(&x, &g, &y).unwrap();
            let brute = conjugate_1d_brute(&x, &g, &y).unwrap();
            for (a, b) in fast.iter().zip(&brute) {
                prop_assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()));
            }
        }
    }
}
