//! Energy cutoffs `f_{r,ε}`: identity below `r`, constant `r` above `r + ε`, bounded by `r + ε`,
//! 1-Lipschitz and `C^2`.

use serde::{Deserialize, Serialize};

use crate::error::{HomogError, Result};
use crate::smooth::Smoothstep;

/// Shape of the transition on `[r, r + ε]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileShape {
    /// `t (1 - S5(t))` with the quintic smoothstep `S5`.
    #[default]
    Quintic,
    /// `t (1 - S7(t))` with the septic smoothstep.
    Septic,
    /// `min(s, r)`; Lipschitz but not `C^2`. Only used as the `ε → 0` reference.
    Clip,
}

impl ProfileShape {
    fn smoothstep(self) -> Option<Smoothstep> {
        match self {
            ProfileShape::Quintic => Some(Smoothstep::new(2)),
            ProfileShape::Septic => Some(Smoothstep::new(3)),
            ProfileShape::Clip => None,
        }
    }

    /// Maximiser `t*` and maximum of the normalized bump `φ(t) = t (1 - S(t))`.
    ///
    /// `φ' = 1 - S - t S'` decreases through zero exactly once on `(0, 1)`.
    fn bump_peak(self) -> (f64, f64) {
        let Some(s) = self.smoothstep() else {
            return (0.0, 0.0);
        };
        let dphi = |t: f64| 1.0 - s.value(t) - t * s.d1(t);
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if dphi(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let t = 0.5 * (lo + hi);
        (t, t * (1.0 - s.value(t)))
    }
}

/// The cutoff function `f_{r,ε}` applied to energies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationProfile {
    pub r: f64,
    pub eps: f64,
    #[serde(default)]
    pub shape: ProfileShape,
}

impl TruncationProfile {
    /// Smooth profile with the default quintic transition.
    pub fn new(r: f64, eps: f64) -> Result<Self> {
        TruncationProfile::with_shape(r, eps, ProfileShape::Quintic)
    }

    pub fn with_shape(r: f64, eps: f64, shape: ProfileShape) -> Result<Self> {
        if !r.is_finite() {
            return Err(HomogError::InvalidSpec(format!("truncation level {r}")));
        }
        if shape == ProfileShape::Clip {
            return Ok(TruncationProfile::clip(r));
        }
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(HomogError::InvalidWidth(eps));
        }
        Ok(TruncationProfile { r, eps, shape })
    }

    /// The hard cutoff `min(s, r)`.
    pub fn clip(r: f64) -> Self {
        TruncationProfile {
            r,
            eps: 0.0,
            shape: ProfileShape::Clip,
        }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        match self.shape {
            ProfileShape::Clip => Ok(()),
            _ => TruncationProfile::with_shape(self.r, self.eps, self.shape).map(|_| ()),
        }
    }

    pub fn apply(&self, s: f64) -> f64 {
        self.value_d1_d2(s).0
    }

    pub fn derivative(&self, s: f64) -> f64 {
        self.value_d1_d2(s).1
    }

    /// `(f(s), f'(s), f''(s))`.
    pub fn value_d1_d2(&self, s: f64) -> (f64, f64, f64) {
        if s <= self.r {
            return (s, 1.0, 0.0);
        }
        let Some(step) = self.shape.smoothstep() else {
            return (self.r, 0.0, 0.0);
        };
        if s >= self.r + self.eps {
            return (self.r, 0.0, 0.0);
        }
        let t = (s - self.r) / self.eps;
        let (sv, s1, s2) = (step.value(t), step.d1(t), step.d2(t));
        let phi = t * (1.0 - sv);
        let dphi = 1.0 - sv - t * s1;
        let ddphi = -2.0 * s1 - t * s2;
        (self.r + self.eps * phi, dphi, ddphi / self.eps)
    }

    /// `sup_s f(s)`.
    pub fn max_value(&self) -> f64 {
        self.r + self.eps * self.shape.bump_peak().1
    }

    /// Energy at which `f` peaks.
    pub fn argmax(&self) -> f64 {
        self.r + self.eps * self.shape.bump_peak().0
    }

    /// Smallest and largest value of `f` over the energy interval `[lo, hi]`.
    ///
    /// `f` increases up to its peak and is non-increasing afterwards.
    pub fn image_of_interval(&self, lo: f64, hi: f64) -> (f64, f64) {
        let (a, b) = (self.apply(lo), self.apply(hi));
        let peak = self.argmax();
        let max = if lo <= peak && peak <= hi {
            self.max_value()
        } else {
            a.max(b)
        };
        (a.min(b), max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn identity_and_plateau() {
        let f = TruncationProfile::new(1.0, 0.1).unwrap();
        assert_eq!(f.apply(0.5), 0.5);
        assert_eq!(f.apply(2.0), 1.0);
        assert_eq!(f.apply(1.1), 1.0);
    }

    #[test]
    fn invalid_width() {
        assert_eq!(
            TruncationProfile::new(1.0, 0.0),
            Err(HomogError::InvalidWidth(0.0))
        );
        assert!(TruncationProfile::new(1.0, -1.0).is_err());
    }

    #[test]
    fn lipschitz_sweep() {
        for shape in [ProfileShape::Quintic, ProfileShape::Septic] {
            let f = TruncationProfile::with_shape(1.0, 0.1, shape).unwrap();
            let mut max_slope: f64 = 0.0;
            for i in 0..100_000 {
                let s = 0.9 + 0.3 * i as f64 / 100_000.0;
                max_slope = max_slope.max(f.derivative(s).abs());
            }
            assert!(max_slope <= 1.0, "{shape:?}: {max_slope}");
        }
    }

    #[test]
    fn c2_at_the_joins() {
        let f = TruncationProfile::new(0.0, 0.5).unwrap();
        let h = 1e-7;
        for s in [0.0, 0.5] {
            let (v_l, d_l, dd_l) = f.value_d1_d2(s - h);
            let (v_r, d_r, dd_r) = f.value_d1_d2(s + h);
            assert!((v_l - v_r).abs() < 1e-6);
            assert!((d_l - d_r).abs() < 1e-5);
            assert!((dd_l - dd_r).abs() < 1e-4);
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let f = TruncationProfile::with_shape(2.0, 0.3, ProfileShape::Septic).unwrap();
        let h = 1e-6;
        for i in 1..30 {
            let s = 2.0 + 0.3 * i as f64 / 30.0;
            let fd = (f.apply(s + h) - f.apply(s - h)) / (2.0 * h);
            let fdd = (f.derivative(s + h) - f.derivative(s - h)) / (2.0 * h);
            let (_, d, dd) = f.value_d1_d2(s);
            assert!((d - fd).abs() < 1e-6);
            assert!((dd - fdd).abs() < 1e-4);
        }
    }

    #[test]
    fn peak_is_the_maximum() {
        let f = TruncationProfile::new(0.0, 1.0).unwrap();
        let sampled = (0..10_001)
            .map(|i| f.apply(i as f64 / 10_000.0))
            .fold(f64::NEG_INFINITY, f64::max);
        assert!((sampled - f.max_value()).abs() < 1e-7);
        assert!(f.max_value() <= 1.0);
    }

    #[test]
    fn interval_image() {
        let f = TruncationProfile::new(1.0, 0.2).unwrap();
        let (lo, hi) = f.image_of_interval(0.5, 3.0);
        assert_eq!(lo, 0.5);
        assert!((hi - f.max_value()).abs() < 1e-15);
        let (lo, hi) = f.image_of_interval(1.25, 3.0);
        assert_eq!((lo, hi), (1.0, 1.0));
    }

    proptest! {
        #[test]
        fn profile_invariants(r in -5.0..5.0f64, eps in 1e-3..2.0f64, x in -10.0..10.0f64, septic: bool) {
            let shape = if septic { ProfileShape::Septic } else { ProfileShape::Quintic };
            let f = TruncationProfile::with_shape(r, eps, shape).unwrap();
            let (v, d, _) = f.value_d1_d2(x);
            prop_assert!(v <= r + eps);
            prop_assert!(d.abs() <= 1.0);
            if x <= r { prop_assert_eq!(v, x); }
            if x >= r + eps { prop_assert_eq!(v, r); }
            if x >= r { prop_assert!(v >= r); }
        }
    }
}
