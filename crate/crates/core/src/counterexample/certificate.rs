//! Assembles every side of `γ_∞(id, φ) < d^H_∞(id, φ)` for the bump Hamiltonian.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use super::lagrangian::{cutoff_collar, test_lagrangian_bound};
use super::BumpProfile;
use crate::cell::{effective_on_grid, homogenize_1d_quadrature, EffectiveConfig, Method, SampleGrid};
use crate::error::{HomogError, Result};
use crate::hamiltonian::{HamiltonianSpec, ScalarField, TruncationProfile};
use crate::mather::{beta_zero, AlphaFunction};
use crate::metrics::{calabi_compact, calabi_invariant, gamma_asymptotic, unit_ball_volume, RegionSpec};
use crate::quad::integrate;

/// `k = ∫_{|p|≤1} (1 - |p|^2) dp = 2 V_n / (n + 2)`.
pub fn unit_ball_moment(n: usize) -> f64 {
    2.0 * unit_ball_volume(n) / (n as f64 + 2.0)
}

/// `k` by adaptive quadrature, in polar form for `n = 2`.
pub fn unit_ball_moment_quadrature(n: usize) -> Result<f64> {
    match n {
        1 => Ok(integrate(|p| 1.0 - p * p, -1.0, 1.0, &[], 1e-13, 1e-15)?.value),
        2 => Ok(integrate(
            |r| 2.0 * std::f64::consts::PI * r * (1.0 - r * r),
            0.0,
            1.0,
            &[],
            1e-13,
            1e-15,
        )?
        .value),
        _ => Err(HomogError::DimensionMismatch { expected: 2, got: n }),
    }
}

/// `[δ^n C + c(1 - 2^n δ^n)]·k`, the Calabi lower bound of the piecewise plateau.
pub fn calabi_lower_bound_counterexample(profile: &BumpProfile, n: usize) -> f64 {
    let dn = profile.delta.powi(n as i32);
    let wide = (2.0 * profile.delta).powi(n as i32);
    (dn * profile.high + profile.low * (1.0 - wide)) * unit_ball_moment(n)
}

/// `δ^n C k / V_n`; the floor `c` must lie below it.
pub fn sufficiency_threshold(profile: &BumpProfile, n: usize) -> f64 {
    profile.delta.powi(n as i32) * profile.high * unit_ball_moment(n) / unit_ball_volume(n)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CounterexampleConfig {
    pub n: usize,
    /// Momentum samples; `None` uses 129 points on `[-1.5, 1.5]` (17 per axis in 2D).
    pub p_grid: Option<SampleGrid>,
    pub effective: EffectiveConfig,
    /// Width of the level-0 truncation in the compactly supported variant.
    pub truncation_eps: f64,
}

impl Default for CounterexampleConfig {
    fn default() -> Self {
        CounterexampleConfig {
            n: 1,
            p_grid: None,
            effective: EffectiveConfig::default(),
            truncation_eps: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Parameters {
    pub n: usize,
    pub delta: f64,
    pub high: f64,
    pub low: f64,
}

/// How `γ` and the corrector cutoff were smoothed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Smoothing {
    pub gamma_transition: String,
    pub gamma_smoothstep_order: u32,
    pub corrector_collar: f64,
    pub corrector_smoothstep_order: u32,
}

/// The same certificate for `f_{0,ε}(H)`, which is compactly supported.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TruncatedVariant {
    pub eps: f64,
    pub gamma_inf: f64,
    pub gamma_gap: f64,
    pub calabi: f64,
    pub hofer_lower: f64,
    pub verdict: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CounterexampleCertificate {
    pub parameters: Parameters,
    pub smoothing: Smoothing,
    pub p_samples: usize,
    pub c_plus_inf: f64,
    pub c_minus_inf: f64,
    pub gamma_inf_upper: f64,
    pub gamma_gap: f64,
    /// `max_p sup_q -H(q, p + df)` over the samples; bounds `-inf H̄` from above.
    pub test_lagrangian_bound: f64,
    /// Largest `-H̄(p) - bound(p)` over the samples; not positive when the two agree.
    pub test_lagrangian_excess: f64,
    /// Largest minimax/quadrature disagreement, `n = 1` only.
    pub quadrature_disagreement: Option<f64>,
    pub unit_ball_moment: f64,
    pub calabi: f64,
    pub calabi_error: f64,
    pub calabi_analytic_bound: f64,
    pub hofer_lower: f64,
    pub hofer_lower_source: String,
    pub sufficiency_threshold: f64,
    pub sufficiency: bool,
    pub beta0: f64,
    pub beta0_gap: f64,
    pub margin: f64,
    pub verdict: bool,
    /// `d^H_∞ > β(0)`.
    pub corollary: bool,
    pub truncated_variant: TruncatedVariant,
    pub provenance: BTreeMap<String, String>,
}

impl CounterexampleCertificate {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("certificate serializes")
    }

    /// Fixed-width table of the headline numbers.
    pub fn summary_table(&self) -> String {
        let p = &self.parameters;
        let rows: Vec<(&str, String)> = vec![
            ("n, delta, C, c", format!("{}, {}, {}, {}", p.n, p.delta, p.high, p.low)),
            ("gamma_inf (upper)", format!("{:.6} (+{:.1e})", self.gamma_inf_upper, self.gamma_gap)),
            ("test Lagrangian bound", format!("{:.6}", self.test_lagrangian_bound)),
            ("Calabi (quadrature)", format!("{:.6}", self.calabi)),
            ("Calabi (analytic bound)", format!("{:.6}", -self.calabi_analytic_bound)),
            ("Hofer lower bound", format!("{:.6} ({})", self.hofer_lower, self.hofer_lower_source)),
            ("beta(0)", format!("{:.6}", self.beta0)),
            ("margin", format!("{:.6}", self.margin)),
            ("verdict gamma < d^H", self.verdict.to_string()),
            ("corollary d^H > beta(0)", self.corollary.to_string()),
            ("truncated variant", self.truncated_variant.verdict.to_string()),
        ];
        let width = rows.iter().map(|r| r.0.len()).max().unwrap_or(0);
        rows.iter()
            .map(|(k, v)| format!("{k:<width$}  {v}\n"))
            .collect()
    }
}

/// Runs minimax, the quadrature oracle, `β(0)` and the Calabi quadrature on the bump
/// Hamiltonian `γ(q)(|p|^2 - 1)` and checks `γ_∞ < |Cal|/V_n` and `|Cal|/V_n > β(0)`.
pub fn verify_strict_inequality(
    profile: &BumpProfile,
    config: &CounterexampleConfig,
) -> Result<CounterexampleCertificate> {
    let n = config.n;
    if !(1..=2).contains(&n) {
        return Err(HomogError::DimensionMismatch { expected: 1, got: n });
    }
    if !(profile.delta > 0.0 && profile.delta < 1.0 / 3.0) {
        profile.validate()?;
    }
    let threshold = sufficiency_threshold(profile, n);
    if !(profile.low < threshold) {
        return Err(HomogError::SufficiencyViolated {
            c: profile.low,
            threshold,
        });
    }
    profile.validate()?;
    let collar = cutoff_collar(profile.delta)?;
    let spec = HamiltonianSpec::product(n, ScalarField::Bump(*profile))?;
    let grid = match &config.p_grid {
        Some(g) if g.dim() != n => {
            return Err(HomogError::DimensionMismatch {
                expected: n,
                got: g.dim(),
            })
        }
        Some(g) => g.clone(),
        None if n == 1 => SampleGrid::line(-1.5, 1.5, 129)?,
        None => SampleGrid::square(-1.5, 1.5, 17)?,
    };

    let (eff, cal) = rayon::join(
        || effective_on_grid(&spec, &grid, Method::Minimax, &config.effective),
        || calabi_invariant(&spec, RegionSpec::UnitBall),
    );
    let (eff, cal) = (eff?, cal?);
    let points = grid.points();
    let quadrature_disagreement = if n == 1 {
        let oracle: Vec<f64> = points
            .par_iter()
            .map(|p| homogenize_1d_quadrature(&spec, p[0]))
            .collect::<Result<_>>()?;
        Some(
            oracle
                .iter()
                .zip(&eff.value)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max),
        )
    } else {
        None
    };
    let bounds: Vec<f64> = points
        .par_iter()
        .map(|p| test_lagrangian_bound(&spec, p))
        .collect::<Result<_>>()?;
    let test_bound = bounds.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let excess = bounds
        .iter()
        .zip(&eff.lower)
        .map(|(b, lo)| -lo - b)
        .fold(f64::NEG_INFINITY, f64::max);

    let gamma = gamma_asymptotic(&eff, RegionSpec::UnitBall)?;
    let b0 = beta_zero(&AlphaFunction::from_effective(&eff))?;

    let volume = unit_ball_volume(n);
    let analytic = calabi_lower_bound_counterexample(profile, n);
    let (hofer_lower, source, lower_error) = if cal.value.abs() >= analytic {
        (cal.value.abs() / volume, "quadrature", cal.error / volume)
    } else {
        (analytic / volume, "analytic", 0.0)
    };
    let gamma_upper = gamma.gamma;
    let margin = hofer_lower - gamma_upper;
    let verdict = gamma_upper + gamma.gap < hofer_lower - lower_error;
    let corollary = hofer_lower - lower_error > b0.value + b0.gap;

    let eps = config.truncation_eps;
    let truncated = spec.truncate(&TruncationProfile::new(0.0, eps)?)?;
    let eff_t = effective_on_grid(&truncated, &grid, Method::Minimax, &config.effective)?;
    let gamma_t = gamma_asymptotic(&eff_t, RegionSpec::UnitBall)?;
    let cal_t = calabi_compact(&truncated)?;
    let hofer_t = cal_t.value.abs() / volume;
    let truncated_variant = TruncatedVariant {
        eps,
        gamma_inf: gamma_t.gamma,
        gamma_gap: gamma_t.gap,
        calabi: cal_t.value,
        hofer_lower: hofer_t,
        verdict: gamma_t.gamma + gamma_t.gap < hofer_t - cal_t.error / volume,
    };

    let provenance = [
        ("gamma_inf_upper", "minimax solver on the p-grid"),
        ("quadrature_disagreement", "level-set quadrature oracle"),
        ("test_lagrangian_bound", "grid evaluation of the cut-off linear corrector"),
        ("calabi", "adaptive phase-space quadrature"),
        ("calabi_analytic_bound", "closed form"),
        ("unit_ball_moment", "closed form"),
        ("beta0", "discrete Fenchel conjugate of the sampled effective Hamiltonian"),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v.to_string()))
    .collect();

    Ok(CounterexampleCertificate {
        parameters: Parameters {
            n,
            delta: profile.delta,
            high: profile.high,
            low: profile.low,
        },
        smoothing: Smoothing {
            gamma_transition: "product of per-axis smoothsteps in |q_i - 1/2| from delta/2 to delta"
                .into(),
            gamma_smoothstep_order: profile.order,
            corrector_collar: collar,
            corrector_smoothstep_order: 2,
        },
        p_samples: grid.len(),
        c_plus_inf: gamma.pair.c_plus,
        c_minus_inf: gamma.pair.c_minus,
        gamma_inf_upper: gamma_upper,
        gamma_gap: gamma.gap,
        test_lagrangian_bound: test_bound,
        test_lagrangian_excess: excess,
        quadrature_disagreement,
        unit_ball_moment: unit_ball_moment(n),
        calabi: cal.value,
        calabi_error: cal.error,
        calabi_analytic_bound: analytic,
        hofer_lower,
        hofer_lower_source: source.into(),
        sufficiency_threshold: threshold,
        sufficiency: true,
        beta0: b0.value,
        beta0_gap: b0.gap,
        margin,
        verdict,
        corollary,
        truncated_variant,
        provenance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ball_moments() {
        assert!((unit_ball_moment(1) - 4.0 / 3.0).abs() < 1e-15);
        assert!((unit_ball_moment(2) - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
        for n in 1..=2 {
            let q = unit_ball_moment_quadrature(n).unwrap();
            assert!((q - unit_ball_moment(n)).abs() < 1e-10);
        }
    }

    #[test]
    fn analytic_bound() {
        let b = BumpProfile::new(0.25, 10.0, 0.05).unwrap();
        let v = calabi_lower_bound_counterexample(&b, 1);
        assert!((v - 2.525 * 4.0 / 3.0).abs() < 1e-12);
        let zero = BumpProfile {
            high: 0.0,
            low: 0.0,
            ..b
        };
        assert_eq!(calabi_lower_bound_counterexample(&zero, 1), 0.0);
    }

    #[test]
    fn insufficient_parameters() {
        let b = BumpProfile {
            delta: 0.25,
            high: 0.05,
            low: 0.05,
            order: 2,
        };
        match verify_strict_inequality(&b, &CounterexampleConfig::default()) {
            Err(HomogError::SufficiencyViolated { threshold, .. }) => {
                assert!((threshold - 0.05 / 6.0).abs() < 1e-12)
            }
            other => panic!("{other:?}"),
        }
        let wide = BumpProfile { delta: 0.4, ..b };
        assert_eq!(
            verify_strict_inequality(&wide, &CounterexampleConfig::default()),
            Err(HomogError::DeltaTooLarge(0.4))
        );
    }

    #[test]
    fn default_certificate() {
        let b = BumpProfile::new(0.25, 10.0, 0.05).unwrap();
        let c = verify_strict_inequality(&b, &CounterexampleConfig::default()).unwrap();
        assert!(c.gamma_inf_upper <= 0.052, "{c:?}");
        assert!(c.hofer_lower >= 1.683);
        assert!(c.margin >= 1.6);
        assert!(c.verdict && c.corollary && c.truncated_variant.verdict);
        assert!((c.beta0 - 0.05).abs() < 1e-3);
        assert!(c.test_lagrangian_bound <= 0.05 + 2e-3);
        assert!(c.test_lagrangian_excess <= 2e-3);
        assert!(c.quadrature_disagreement.unwrap() < 1e-2);
    }
}
