//! Uniform grids on the torus `R^n / Z^n` and periodic scalar fields sampled on them.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{HomogError, Result};

/// Smallest admissible number of points per axis.
pub const MIN_POINTS: usize = 16;

/// Uniform grid with `N` points per axis on the `n`-torus, `n ∈ {1, 2}`.
///
/// Nodes are stored row-major with axis 0 varying slowest; node `(N, ..)` is node `(0, ..)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawGrid", into = "RawGrid")]
pub struct TorusGrid {
    dim: usize,
    points: usize,
}

#[derive(Serialize, Deserialize)]
struct RawGrid {
    n: usize,
    #[serde(rename = "N")]
    points: usize,
}

impl TryFrom<RawGrid> for TorusGrid {
    type Error = HomogError;
    fn try_from(raw: RawGrid) -> Result<Self> {
        TorusGrid::new(raw.n, raw.points)
    }
}

impl From<TorusGrid> for RawGrid {
    fn from(g: TorusGrid) -> Self {
        RawGrid {
            n: g.dim,
            points: g.points,
        }
    }
}

impl TorusGrid {
    pub fn new(dim: usize, points: usize) -> Result<Self> {
        if !(1..=2).contains(&dim) {
            return Err(HomogError::InvalidGrid(format!(
                "dimension {dim} not supported (1 or 2)"
            )));
        }
        if points < MIN_POINTS || !points.is_power_of_two() {
            return Err(HomogError::InvalidGrid(format!(
                "{points} points per axis; need a power of two >= {MIN_POINTS}"
            )));
        }
        Ok(TorusGrid { dim, points })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points_per_axis(&self) -> usize {
        self.points
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.points as f64
    }

    /// Total number of nodes, `N^n`.
    pub fn len(&self) -> usize {
        self.points.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Same dimension, twice the resolution.
    pub fn refined(&self) -> Self {
        TorusGrid {
            dim: self.dim,
            points: self.points * 2,
        }
    }

    /// Coordinates of node `idx`, written into the first `n` entries of the result.
    pub fn coords(&self, idx: usize) -> [f64; 2] {
        let h = self.spacing();
        match self.dim {
            1 => [idx as f64 * h, 0.0],
            _ => [
                (idx / self.points) as f64 * h,
                (idx % self.points) as f64 * h,
            ],
        }
    }

    /// Index of the neighbour of `idx` shifted by `step` along `axis`, with wrap-around.
    pub fn shift(&self, idx: usize, axis: usize, step: isize) -> usize {
        let n = self.points as isize;
        match (self.dim, axis) {
            (1, _) => (idx as isize + step).rem_euclid(n) as usize,
            (_, 0) => {
                let i = (idx / self.points) as isize;
                let j = idx % self.points;
                ((i + step).rem_euclid(n) as usize) * self.points + j
            }
            _ => {
                let i = idx / self.points;
                let j = (idx % self.points) as isize;
                i * self.points + (j + step).rem_euclid(n) as usize
            }
        }
    }
}

/// Folds a coordinate into `[0, 1)`.
pub fn fold(x: f64) -> f64 {
    let r = x - x.floor();
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// How discrete derivatives of periodic fields are taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiffScheme {
    /// `(u[i+1] - u[i]) / h`; its range is exactly the mean-zero (discrete exact) fields.
    #[default]
    Forward,
    /// `(u[i+1] - u[i-1]) / 2h`.
    Centered,
    /// Exact derivative of the trigonometric interpolant.
    Spectral,
}

/// Real values on every node of a [`TorusGrid`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawField", into = "RawField")]
pub struct PeriodicField {
    grid: TorusGrid,
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawField {
    grid: TorusGrid,
    values: Vec<f64>,
}

impl TryFrom<RawField> for PeriodicField {
    type Error = HomogError;
    fn try_from(raw: RawField) -> Result<Self> {
        PeriodicField::new(raw.grid, raw.values)
    }
}

impl From<PeriodicField> for RawField {
    fn from(f: PeriodicField) -> Self {
        RawField {
            grid: f.grid,
            values: f.values,
        }
    }
}

impl PeriodicField {
    pub fn new(grid: TorusGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(HomogError::InvalidField(format!(
                "{} values for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(HomogError::InvalidField(format!(
                "non-finite value at node {i}"
            )));
        }
        Ok(PeriodicField { grid, values })
    }

    pub fn from_fn(grid: TorusGrid, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let n = grid.dim();
        let values = (0..grid.len()).map(|i| f(&grid.coords(i)[..n])).collect();
        PeriodicField::new(grid, values)
    }

    pub fn constant(grid: TorusGrid, value: f64) -> Result<Self> {
        PeriodicField::new(grid, vec![value; grid.len()])
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn oscillation(&self) -> f64 {
        self.max() - self.min()
    }

    /// Copy with the mean removed.
    pub fn centered(&self) -> Self {
        let m = self.mean();
        PeriodicField {
            grid: self.grid,
            values: self.values.iter().map(|v| v - m).collect(),
        }
    }

    /// Discrete partial derivative along `axis`.
    pub fn derivative(&self, axis: usize, scheme: DiffScheme) -> Vec<f64> {
        assert!(axis < self.grid.dim());
        let h = self.grid.spacing();
        let g = &self.grid;
        match scheme {
            DiffScheme::Forward => (0..g.len())
                .map(|i| (self.values[g.shift(i, axis, 1)] - self.values[i]) / h)
                .collect(),
            DiffScheme::Centered => (0..g.len())
                .map(|i| {
                    (self.values[g.shift(i, axis, 1)] - self.values[g.shift(i, axis, -1)])
                        / (2.0 * h)
                })
                .collect(),
            DiffScheme::Spectral => spectral_derivative(g, &self.values, axis),
        }
    }

    /// Trigonometric interpolant through the nodal values.
    pub fn interpolant(&self) -> TrigInterpolant {
        TrigInterpolant::new(self)
    }
}

/// Wave number of FFT bin `k` on `n` points, with the Nyquist bin mapped to zero.
fn wavenumber(k: usize, n: usize) -> f64 {
    if k < n / 2 {
        k as f64
    } else if k == n / 2 {
        0.0
    } else {
        k as f64 - n as f64
    }
}

fn signed_bin(k: usize, n: usize) -> f64 {
    if k <= n / 2 {
        k as f64
    } else {
        k as f64 - n as f64
    }
}

/// In-place forward or inverse FFT over all axes of a grid-shaped buffer.
pub(crate) fn fft_nd(grid: &TorusGrid, data: &mut [Complex64], inverse: bool) {
    let n = grid.points_per_axis();
    let mut planner = FftPlanner::new();
    let fft = if inverse {
        planner.plan_fft_inverse(n)
    } else {
        planner.plan_fft_forward(n)
    };
    match grid.dim() {
        1 => fft.process(data),
        _ => {
            for row in data.chunks_mut(n) {
                fft.process(row);
            }
            let mut col = vec![Complex64::new(0.0, 0.0); n];
            for j in 0..n {
                for i in 0..n {
                    col[i] = data[i * n + j];
                }
                fft.process(&mut col);
                for i in 0..n {
                    data[i * n + j] = col[i];
                }
            }
        }
    }
}

/// Multiplies each Fourier mode by `symbol(kx, ky)` and transforms back.
pub(crate) fn apply_fourier_symbol(
    grid: &TorusGrid,
    values: &[f64],
    symbol: impl Fn(usize, usize) -> Complex64,
) -> Vec<f64> {
    let n = grid.points_per_axis();
    let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft_nd(grid, &mut buf, false);
    for (idx, c) in buf.iter_mut().enumerate() {
        let (k0, k1) = match grid.dim() {
            1 => (idx, 0),
            _ => (idx / n, idx % n),
        };
        *c *= symbol(k0, k1);
    }
    fft_nd(grid, &mut buf, true);
    let scale = 1.0 / grid.len() as f64;
    buf.iter().map(|c| c.re * scale).collect()
}

/// Cached FFT plans for repeatedly applying a real Fourier multiplier on one grid.
pub(crate) struct FourierMultiplier {
    grid: TorusGrid,
    forward: std::sync::Arc<dyn rustfft::Fft<f64>>,
    inverse: std::sync::Arc<dyn rustfft::Fft<f64>>,
    symbol: Vec<f64>,
}

impl FourierMultiplier {
    /// `symbol(k0, k1)` receives signed bin numbers in `(-N/2, N/2]`.
    pub(crate) fn new(grid: TorusGrid, symbol: impl Fn(f64, f64) -> f64) -> Self {
        let n = grid.points_per_axis();
        let mut planner = FftPlanner::new();
        let table = (0..grid.len())
            .map(|idx| match grid.dim() {
                1 => symbol(signed_bin(idx, n), 0.0),
                _ => symbol(signed_bin(idx / n, n), signed_bin(idx % n, n)),
            })
            .collect();
        FourierMultiplier {
            grid,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
            symbol: table,
        }
    }

    fn transform(&self, data: &mut [Complex64], inverse: bool) {
        let n = self.grid.points_per_axis();
        let fft = if inverse { &self.inverse } else { &self.forward };
        match self.grid.dim() {
            1 => fft.process(data),
            _ => {
                for row in data.chunks_mut(n) {
                    fft.process(row);
                }
                let mut col = vec![Complex64::new(0.0, 0.0); n];
                for j in 0..n {
                    for i in 0..n {
                        col[i] = data[i * n + j];
                    }
                    fft.process(&mut col);
                    for i in 0..n {
                        data[i * n + j] = col[i];
                    }
                }
            }
        }
    }

    pub(crate) fn apply(&self, values: &mut [f64]) {
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.transform(&mut buf, false);
        for (c, s) in buf.iter_mut().zip(&self.symbol) {
            *c *= s;
        }
        self.transform(&mut buf, true);
        let scale = 1.0 / self.grid.len() as f64;
        for (v, c) in values.iter_mut().zip(&buf) {
            *v = c.re * scale;
        }
    }
}

fn spectral_derivative(grid: &TorusGrid, values: &[f64], axis: usize) -> Vec<f64> {
    let n = grid.points_per_axis();
    apply_fourier_symbol(grid, values, |k0, k1| {
        let k = if axis == 0 { k0 } else { k1 };
        Complex64::new(0.0, 2.0 * PI * wavenumber(k, n))
    })
}

/// Band-limited interpolant of a [`PeriodicField`], evaluable anywhere on the torus.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigInterpolant {
    dim: usize,
    points: usize,
    coeffs: Vec<Complex64>,
}

impl TrigInterpolant {
    fn new(field: &PeriodicField) -> Self {
        let grid = field.grid();
        let mut buf: Vec<Complex64> = field
            .values()
            .iter()
            .map(|&v| Complex64::new(v, 0.0))
            .collect();
        fft_nd(grid, &mut buf, false);
        let scale = 1.0 / grid.len() as f64;
        buf.iter_mut().for_each(|c| *c *= scale);
        TrigInterpolant {
            dim: grid.dim(),
            points: grid.points_per_axis(),
            coeffs: buf,
        }
    }

    /// Symmetric mode range `-N/2..=N/2` with the Nyquist coefficient split in halves.
    fn modes(&self) -> impl Iterator<Item = (i64, usize, f64)> + '_ {
        let n = self.points as i64;
        (-n / 2..=n / 2).map(move |k| {
            let w = if k.abs() == n / 2 { 0.5 } else { 1.0 };
            (k, k.rem_euclid(n) as usize, w)
        })
    }

    pub fn value(&self, q: &[f64]) -> f64 {
        self.value_and_gradient(q).0
    }

    /// Value and gradient of the interpolant at `q`.
    pub fn value_and_gradient(&self, q: &[f64]) -> (f64, [f64; 2]) {
        let mut val = 0.0;
        let mut grad = [0.0; 2];
        match self.dim {
            1 => {
                for (k, bin, w) in self.modes() {
                    let e = Complex64::from_polar(1.0, 2.0 * PI * k as f64 * q[0]);
                    let term = self.coeffs[bin] * e * w;
                    val += term.re;
                    grad[0] += (term * Complex64::new(0.0, 2.0 * PI * k as f64)).re;
                }
            }
            _ => {
                let n = self.points;
                let modes: Vec<_> = self.modes().collect();
                for &(k0, b0, w0) in &modes {
                    for &(k1, b1, w1) in &modes {
                        let phase = 2.0 * PI * (k0 as f64 * q[0] + k1 as f64 * q[1]);
                        let term = self.coeffs[b0 * n + b1] * Complex64::from_polar(w0 * w1, phase);
                        val += term.re;
                        grad[0] += (term * Complex64::new(0.0, 2.0 * PI * k0 as f64)).re;
                        grad[1] += (term * Complex64::new(0.0, 2.0 * PI * k1 as f64)).re;
                    }
                }
            }
        }
        (val, grad)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_rejects_bad_sizes() {
        assert!(TorusGrid::new(1, 8).is_err());
        assert!(TorusGrid::new(1, 24).is_err());
        assert!(TorusGrid::new(3, 16).is_err());
        let g = TorusGrid::new(2, 16).unwrap();
        assert_eq!(g.len(), 256);
        assert_eq!(g.spacing(), 1.0 / 16.0);
    }

    #[test]
    fn shift_wraps() {
        let g = TorusGrid::new(2, 16).unwrap();
        assert_eq!(g.shift(0, 0, -1), 15 * 16);
        assert_eq!(g.shift(15, 1, 1), 0);
        let g1 = TorusGrid::new(1, 16).unwrap();
        assert_eq!(g1.shift(15, 0, 1), 0);
    }

    #[test]
    fn grid_json_shape() {
        let g = TorusGrid::new(1, 64).unwrap();
        assert_eq!(serde_json::to_string(&g).unwrap(), r#"{"n":1,"N":64}"#);
        assert!(serde_json::from_str::<TorusGrid>(r#"{"n":1,"N":10}"#).is_err());
    }

    #[test]
    fn field_rejects_non_finite() {
        let g = TorusGrid::new(1, 16).unwrap();
        let mut v = vec![0.0; 16];
        v[3] = f64::NAN;
        assert!(PeriodicField::new(g, v).is_err());
    }

    #[test]
    fn derivatives_of_a_sine() {
        let g = TorusGrid::new(1, 64).unwrap();
        let f = PeriodicField::from_fn(g, |q| (2.0 * PI * q[0]).sin()).unwrap();
        let exact: Vec<f64> = (0..64)
            .map(|i| 2.0 * PI * (2.0 * PI * i as f64 / 64.0).cos())
            .collect();
        let spec = f.derivative(0, DiffScheme::Spectral);
        let cen = f.derivative(0, DiffScheme::Centered);
        for i in 0..64 {
            assert!((spec[i] - exact[i]).abs() < 1e-10);
            assert!((cen[i] - exact[i]).abs() < 0.02);
        }
        let fwd = f.derivative(0, DiffScheme::Forward);
        assert!(fwd.iter().sum::<f64>().abs() < 1e-10);
    }

    #[test]
    fn interpolant_reproduces_trig_polynomial_off_grid() {
        let g = TorusGrid::new(2, 16).unwrap();
        let f = |q: &[f64]| (2.0 * PI * q[0]).cos() + 0.5 * (2.0 * PI * (q[0] + 2.0 * q[1])).sin();
        let field = PeriodicField::from_fn(g, f).unwrap();
        let interp = field.interpolant();
        let q = [0.123, 0.771];
        let (v, grad) = interp.value_and_gradient(&q);
        assert!((v - f(&q)).abs() < 1e-12);
        let h = 1e-6;
        let fd = (f(&[q[0], q[1] + h]) - f(&[q[0], q[1] - h])) / (2.0 * h);
        assert!((grad[1] - fd).abs() < 1e-6);
    }
}
