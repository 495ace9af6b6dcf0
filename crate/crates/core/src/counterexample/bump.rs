use serde::{Deserialize, Serialize};

use crate::error::{HomogError, Result};
use crate::grid::{fold, PeriodicField, TorusGrid};
use crate::smooth::Smoothstep;

fn default_order() -> u32 {
    2
}

/// Plateau profile `γ(q)`: equal to `high` on the cube `U_δ = [(1-δ)/2, (1+δ)/2]^n`, equal to `low`
/// outside `U_{2δ}`, with a monotone smoothstep in between along every axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BumpProfile {
    pub delta: f64,
    pub high: f64,
    pub low: f64,
    /// Smoothstep order of the transition; 2 gives a `C^2` quintic.
    #[serde(default = "default_order")]
    pub order: u32,
}

impl BumpProfile {
    pub fn new(delta: f64, high: f64, low: f64) -> Result<Self> {
        let b = BumpProfile {
            delta,
            high,
            low,
            order: default_order(),
        };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta.is_finite() && self.delta > 0.0) {
            return Err(HomogError::InvalidProfile(format!(
                "delta = {} must be positive",
                self.delta
            )));
        }
        if self.delta >= 1.0 / 3.0 {
            return Err(HomogError::DeltaTooLarge(self.delta));
        }
        if !(self.low > 0.0 && self.high > self.low && self.high.is_finite()) {
            return Err(HomogError::InvalidProfile(format!(
                "need C > c > 0, got C = {}, c = {}",
                self.high, self.low
            )));
        }
        if !(1..=7).contains(&self.order) {
            return Err(HomogError::InvalidProfile(format!(
                "smoothstep order {} not in 1..=7",
                self.order
            )));
        }
        Ok(())
    }

    /// One-axis plateau factor in `[0, 1]` and its derivative.
    fn axis_factor(&self, x: f64) -> (f64, f64) {
        let x = fold(x);
        let d = (x - 0.5).abs();
        let half = 0.5 * self.delta;
        if d <= half {
            return (1.0, 0.0);
        }
        if d >= self.delta {
            return (0.0, 0.0);
        }
        let s = Smoothstep::new(self.order);
        let t = (d - half) / half;
        let sign = if x >= 0.5 { 1.0 } else { -1.0 };
        (1.0 - s.value(t), -s.d1(t) / half * sign)
    }

    pub fn value(&self, q: &[f64]) -> f64 {
        let prod: f64 = q.iter().map(|&x| self.axis_factor(x).0).product();
        self.low + (self.high - self.low) * prod
    }

    pub fn gradient(&self, q: &[f64]) -> [f64; 2] {
        let f: Vec<(f64, f64)> = q.iter().map(|&x| self.axis_factor(x)).collect();
        let mut g = [0.0; 2];
        for a in 0..q.len() {
            let others: f64 = (0..q.len()).filter(|&b| b != a).map(|b| f[b].0).product();
            g[a] = (self.high - self.low) * f[a].1 * others;
        }
        g
    }

    /// Per-axis coordinates where the profile changes regime.
    pub fn breakpoints(&self) -> Vec<f64> {
        let d = self.delta;
        vec![0.5 - d, 0.5 - 0.5 * d, 0.5 + 0.5 * d, 0.5 + d]
    }

    /// `∫_{T^n} γ`. The transition factor integrates to `δ/2` per side for any smoothstep,
    /// so the axis factor has integral `3δ/2`.
    pub fn integral(&self, n: usize) -> f64 {
        self.low + (self.high - self.low) * (1.5 * self.delta).powi(n as i32)
    }
}

/// Samples the smooth plateau `γ` on `grid` and checks its defining properties there.
pub fn make_gamma_bump(profile: &BumpProfile, grid: &TorusGrid) -> Result<PeriodicField> {
    profile.validate()?;
    let field = PeriodicField::from_fn(*grid, |q| profile.value(q))?;
    let n = grid.dim();
    for (i, &v) in field.values().iter().enumerate() {
        let q = grid.coords(i);
        let sup_dist = q[..n]
            .iter()
            .map(|&x| (fold(x) - 0.5).abs())
            .fold(0.0, f64::max);
        let ok = v >= profile.low - 1e-12
            && v <= profile.high + 1e-12
            && (sup_dist > 0.5 * profile.delta || v == profile.high)
            && (sup_dist < profile.delta || v == profile.low);
        if !ok {
            return Err(HomogError::InvalidProfile(format!(
                "plateau property fails at node {i} (value {v})"
            )));
        }
    }
    Ok(field)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn default_bump() -> BumpProfile {
        BumpProfile::new(0.25, 10.0, 0.05).unwrap()
    }

    #[test]
    fn plateau_and_floor() {
        let b = default_bump();
        assert_eq!(b.value(&[0.5]), 10.0);
        assert_eq!(b.value(&[0.0]), 0.05);
        assert_eq!(b.value(&[0.5, 0.5]), 10.0);
        assert_eq!(b.value(&[0.5, 0.1]), 0.05);
    }

    #[test]
    fn rejects_wide_delta() {
        assert_eq!(
            BumpProfile::new(0.4, 10.0, 0.05),
            Err(HomogError::DeltaTooLarge(0.4))
        );
        assert!(BumpProfile::new(0.2, 0.05, 0.05).is_err());
    }

    #[test]
    fn integral_within_plateau_bounds() {
        let b = default_bump();
        let grid = TorusGrid::new(1, 4096).unwrap();
        let field = make_gamma_bump(&b, &grid).unwrap();
        let riemann = field.mean();
        assert!((riemann - b.integral(1)).abs() < 1e-6);
        let lo = b.delta * b.high + b.low * (1.0 - 2.0 * b.delta);
        let hi = 2.0 * b.delta * b.high + b.low;
        assert!(lo <= riemann && riemann <= hi);
    }

    #[test]
    fn gradient_matches_finite_difference() {
        let b = default_bump();
        let h = 1e-6;
        for &x in &[0.3, 0.33, 0.36, 0.64, 0.7, 0.1] {
            let fd = (b.value(&[x + h]) - b.value(&[x - h])) / (2.0 * h);
            assert!((b.gradient(&[x])[0] - fd).abs() < 1e-4, "x = {x}");
        }
        let q = [0.34, 0.66];
        let g = b.gradient(&q);
        let fd = (b.value(&[q[0], q[1] + h]) - b.value(&[q[0], q[1] - h])) / (2.0 * h);
        assert!((g[1] - fd).abs() < 1e-4);
    }

    #[test]
    fn monotone_transition() {
        let b = default_bump();
        let mut prev = b.value(&[0.5]);
        for i in 0..=1000 {
            let x = 0.5 + 0.5 * i as f64 / 1000.0;
            let v = b.value(&[x]);
            assert!(v <= prev + 1e-14);
            prev = v;
        }
    }
}
