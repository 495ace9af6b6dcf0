//! Hofer length, Calabi invariant, asymptotic spectral invariants and the report tying them
//! to `β(0)`.

mod calabi;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::cell::{effective_on_grid, EffectiveConfig, EffectiveHamiltonian, Method, SampleGrid};
use crate::error::{HomogError, Result};
use crate::hamiltonian::{oscillation, HamiltonianSpec, OscRegion, Oscillation, TruncationProfile};
use crate::mather::{beta_zero, AlphaFunction};

pub use calabi::{
    calabi_compact, calabi_extension_limit, calabi_invariant, default_eps_sequence, region_volume,
    richardson, CalabiValue, ExtensionLimit, EXTENSION_TOL,
};

/// Where the flow is considered.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum RegionSpec {
    /// `S_r = {H ≤ r}`.
    Sublevel { r: f64 },
    /// `B*T^n = {‖p‖ ≤ 1}`.
    UnitBall,
}

impl fmt::Display for RegionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RegionSpec::Sublevel { r } => write!(f, "sublevel:{r}"),
            RegionSpec::UnitBall => f.write_str("unit-ball"),
        }
    }
}

impl FromStr for RegionSpec {
    type Err = HomogError;
    fn from_str(s: &str) -> Result<Self> {
        if s == "unit-ball" || s == "unit_ball" {
            return Ok(RegionSpec::UnitBall);
        }
        if let Some(r) = s.strip_prefix("sublevel:") {
            let r: f64 = r
                .parse()
                .map_err(|_| HomogError::InvalidRegion(format!("bad level in {s:?}")))?;
            if r.is_finite() {
                return Ok(RegionSpec::Sublevel { r });
            }
        }
        Err(HomogError::InvalidRegion(format!(
            "expected sublevel:<r> or unit-ball, got {s:?}"
        )))
    }
}

/// Volume of the unit ball in `R^n`: `2` and `π`.
pub fn unit_ball_volume(n: usize) -> f64 {
    match n {
        1 => 2.0,
        2 => std::f64::consts::PI,
        _ => f64::NAN,
    }
}

/// `ℓ(H) = Osc H` over the support of an autonomous compactly supported spec.
pub fn hofer_length(spec: &HamiltonianSpec) -> Result<Oscillation> {
    match spec {
        HamiltonianSpec::Truncated { .. } => {
            oscillation(spec, OscRegion::Support).map_err(|e| match e {
                HomogError::UnboundedRegion => HomogError::NotCompactlySupported,
                other => other,
            })
        }
        _ => Err(HomogError::NotCompactlySupported),
    }
}

/// `|Cal| / Vol(B*T^n)`.
pub fn hofer_lower_bound_calabi(cal: f64, n: usize) -> Result<f64> {
    if !(1..=2).contains(&n) {
        return Err(HomogError::DimensionMismatch { expected: 2, got: n });
    }
    Ok(cal.abs() / unit_ball_volume(n))
}

/// `c_{+,∞}` and `c_{-,∞}` with the certification gaps of the samples they come from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectralPair {
    pub c_plus: f64,
    pub c_minus: f64,
    pub c_plus_gap: f64,
    pub c_minus_gap: f64,
}

const PLATEAU_TOL: f64 = 1e-6;

fn boundary_samples(eff: &EffectiveHamiltonian) -> Vec<usize> {
    let shape = eff.grid.shape();
    (0..eff.len())
        .filter(|&i| match shape.len() {
            1 => i == 0 || i + 1 == shape[0],
            _ => {
                let (a, b) = (i / shape[1], i % shape[1]);
                a == 0 || b == 0 || a + 1 == shape[0] || b + 1 == shape[1]
            }
        })
        .collect()
}

/// `(sup, inf)` of `min{H̄, r}` on `S_r`, or of `min{H̄, 0}` on the unit ball where the sup is `0`.
pub fn c_pm_asymptotic(eff: &EffectiveHamiltonian, region: RegionSpec) -> Result<SpectralPair> {
    if eff.is_empty() {
        return Err(HomogError::EmptyInput);
    }
    let top = match region {
        RegionSpec::Sublevel { r } => r,
        RegionSpec::UnitBall => 0.0,
    };
    let (imin, vmin) = eff.argmin();
    if let RegionSpec::Sublevel { r } = region {
        if r <= vmin {
            return Err(HomogError::InvalidRegion(format!(
                "level r = {r} does not exceed inf H̄ = {vmin}"
            )));
        }
    }
    for i in boundary_samples(eff) {
        if eff.value[i] < top - PLATEAU_TOL {
            return Err(HomogError::PlateauNotReached(format!(
                "H̄ = {} < {top} at p = {:?}; enlarge the p-range",
                eff.value[i],
                eff.grid.point(i)
            )));
        }
    }
    let plateau_gap = boundary_samples(eff)
        .into_iter()
        .map(|i| (top - eff.lower[i].min(top)).max(0.0))
        .fold(0.0, f64::max);
    Ok(SpectralPair {
        c_plus: top,
        c_minus: vmin.min(top),
        c_plus_gap: plateau_gap,
        c_minus_gap: eff.gap(imin),
    })
}

/// `γ_∞ = c_{+,∞} - c_{-,∞}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GammaAsymptotic {
    pub gamma: f64,
    pub pair: SpectralPair,
    /// Sum of both certification gaps.
    pub gap: f64,
}

pub fn gamma_asymptotic(eff: &EffectiveHamiltonian, region: RegionSpec) -> Result<GammaAsymptotic> {
    let pair = c_pm_asymptotic(eff, region)?;
    Ok(GammaAsymptotic {
        gamma: pair.c_plus - pair.c_minus,
        pair,
        gap: pair.c_plus_gap + pair.c_minus_gap,
    })
}

/// Settings for [`metrics_report`].
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsConfig {
    /// Momentum samples; `None` picks a range on which the plateau is reached.
    pub p_grid: Option<SampleGrid>,
    pub method: Method,
    pub effective: EffectiveConfig,
    pub eps: Vec<f64>,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        MetricsConfig {
            p_grid: None,
            method: Method::Minimax,
            effective: EffectiveConfig::default(),
            eps: default_eps_sequence(),
        }
    }
}

pub const RESIDUAL_TOL: f64 = 2e-2;
pub const ORDERING_TOL: f64 = 1e-3;

/// A momentum grid wide enough for `c_{+,∞}` to stabilize.
pub fn default_p_grid(spec: &HamiltonianSpec, region: RegionSpec) -> Result<SampleGrid> {
    let reach = match region {
        RegionSpec::UnitBall => 1.5,
        RegionSpec::Sublevel { r } => spec
            .radius_above(r)
            .map_or(3.0, |radius| (1.25 * radius + 0.25).max(1.5)),
    };
    match spec.dim() {
        1 => SampleGrid::line(-reach, reach, 129),
        _ => SampleGrid::square(-reach, reach, 17),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AxisSummary {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Tolerances {
    pub residual: f64,
    pub ordering: f64,
    pub extension: f64,
}

/// Every metric of one spec and region.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub region: RegionSpec,
    pub spec_digest: String,
    pub dim: usize,
    pub method: String,
    pub p_grid: Vec<AxisSummary>,
    pub eps_sequence: Vec<f64>,
    pub calabi: f64,
    pub calabi_error: f64,
    /// Phase-space volume dividing the Calabi invariant.
    pub volume: f64,
    /// Volumes and Calabi integrals use `ωⁿ`, not `ωⁿ/n!`; the two differ by `n!` when `n = 2`.
    pub volume_form: String,
    pub extension: ExtensionLimit,
    pub hofer_lower: f64,
    pub hofer_upper: f64,
    /// Width used for the compactly supported generator behind `hofer_upper`.
    pub hofer_upper_eps: f64,
    pub hofer_resolution_gap: f64,
    pub c_plus_inf: f64,
    pub c_minus_inf: f64,
    pub gamma_inf: f64,
    pub gamma_gap: f64,
    pub beta0: f64,
    pub beta0_gap: f64,
    pub identity_residuals: BTreeMap<String, f64>,
    pub tolerances: Tolerances,
    pub passed: bool,
}

impl MetricsReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Rows `quantity,value,lower,upper`.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| HomogError::InvalidConfig(format!("CSV: {e}"));
        w.write_record(["quantity", "value", "lower", "upper"]).map_err(io)?;
        let mut row = |name: &str, v: f64, lo: f64, hi: f64| {
            w.write_record([name.to_string(), v.to_string(), lo.to_string(), hi.to_string()])
        };
        let e = self.calabi_error;
        row("calabi", self.calabi, self.calabi - e, self.calabi + e).map_err(io)?;
        row("hofer_lower", self.hofer_lower, self.hofer_lower, self.hofer_lower).map_err(io)?;
        let g = self.hofer_resolution_gap;
        row("hofer_upper", self.hofer_upper, self.hofer_upper - g, self.hofer_upper + g).map_err(io)?;
        row("c_plus_inf", self.c_plus_inf, self.c_plus_inf, self.c_plus_inf).map_err(io)?;
        row("c_minus_inf", self.c_minus_inf, self.c_minus_inf - self.gamma_gap, self.c_minus_inf)
            .map_err(io)?;
        let gg = self.gamma_gap;
        row("gamma_inf", self.gamma_inf, self.gamma_inf, self.gamma_inf + gg).map_err(io)?;
        let bg = self.beta0_gap;
        row("beta0", self.beta0, self.beta0 - bg, self.beta0 + bg).map_err(io)?;
        for (k, v) in &self.identity_residuals {
            row(k, *v, *v, *v).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| HomogError::InvalidConfig(format!("CSV: {e}")))?;
        Ok(String::from_utf8(bytes).expect("CSV is UTF-8"))
    }
}

/// Homogenizes `spec`, then assembles `β(0)`, `c_{±,∞}`, `γ_∞`, the Calabi invariant and the
/// Hofer interval `[|Cal|/Vol, ℓ]` for `region`.
pub fn metrics_report(
    spec: &HamiltonianSpec,
    region: RegionSpec,
    config: &MetricsConfig,
) -> Result<MetricsReport> {
    let n = spec.dim();
    if config.eps.is_empty() {
        return Err(HomogError::InvalidConfig("empty width sequence".into()));
    }
    let grid = match &config.p_grid {
        Some(g) => g.clone(),
        None => default_p_grid(spec, region)?,
    };
    let eff = effective_on_grid(spec, &grid, config.method, &config.effective)?;
    let alpha = AlphaFunction::from_effective(&eff);
    let b0 = beta_zero(&alpha)?;
    let gamma = gamma_asymptotic(&eff, region)?;

    let cal = calabi_invariant(spec, region)?;
    let volume = region_volume(spec, region)?;
    let extension = calabi_extension_limit(spec, region, &config.eps)?;
    let eps_min = config.eps.iter().copied().fold(f64::INFINITY, f64::min);
    let level = match region {
        RegionSpec::Sublevel { r } => r,
        RegionSpec::UnitBall => 0.0,
    };
    let generator = spec.truncate(&TruncationProfile::new(level, eps_min)?)?;
    let length = hofer_length(&generator)?;
    let hofer_lower = cal.value.abs() / volume;

    let mut residuals = BTreeMap::new();
    let identity = match region {
        RegionSpec::Sublevel { r } => ("gamma_minus_r_plus_beta0", gamma.gamma - (r + b0.value)),
        RegionSpec::UnitBall => ("gamma_minus_beta0", gamma.gamma - b0.value),
    };
    residuals.insert(identity.0.to_string(), identity.1.abs());
    residuals.insert("gamma_minus_hofer_upper".to_string(), gamma.gamma - length.value);
    residuals.insert("hofer_lower_minus_upper".to_string(), hofer_lower - length.value);
    let passed = identity.1.abs() <= RESIDUAL_TOL
        && gamma.gamma <= length.value + ORDERING_TOL
        && hofer_lower <= length.value + ORDERING_TOL;

    Ok(MetricsReport {
        region,
        spec_digest: spec.digest(),
        dim: n,
        method: config.method.name().to_string(),
        p_grid: grid
            .axes()
            .iter()
            .map(|a| AxisSummary {
                min: a[0],
                max: a[a.len() - 1],
                count: a.len(),
            })
            .collect(),
        eps_sequence: config.eps.clone(),
        calabi: cal.value,
        calabi_error: cal.error,
        volume,
        volume_form: if n == 1 {
            "omega".to_string()
        } else {
            "omega^n (not omega^n/n!)".to_string()
        },
        extension,
        hofer_lower,
        hofer_upper: length.value,
        hofer_upper_eps: eps_min,
        hofer_resolution_gap: length.resolution_gap,
        c_plus_inf: gamma.pair.c_plus,
        c_minus_inf: gamma.pair.c_minus,
        gamma_inf: gamma.gamma,
        gamma_gap: gamma.gap,
        beta0: b0.value,
        beta0_gap: b0.gap,
        identity_residuals: residuals,
        tolerances: Tolerances {
            residual: RESIDUAL_TOL,
            ordering: ORDERING_TOL,
            extension: EXTENSION_TOL,
        },
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cell::{AxisLabel, SampledFunction};
    use crate::counterexample::BumpProfile;
    use crate::hamiltonian::{FiberFunction, ScalarField};

    fn pendulum() -> HamiltonianSpec {
        HamiltonianSpec::mechanical(1, ScalarField::cosine(1.0)).unwrap()
    }

    fn sampled(grid: SampleGrid, f: impl Fn(f64) -> f64) -> EffectiveHamiltonian {
        let value: Vec<f64> = grid.axes()[0].iter().map(|&p| f(p)).collect();
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

    #[test]
    fn region_parsing() {
        assert_eq!("unit-ball".parse::<RegionSpec>().unwrap(), RegionSpec::UnitBall);
        assert_eq!(
            "sublevel:2".parse::<RegionSpec>().unwrap(),
            RegionSpec::Sublevel { r: 2.0 }
        );
        assert!("sublevel:x".parse::<RegionSpec>().is_err());
        assert_eq!(RegionSpec::Sublevel { r: 2.0 }.to_string(), "sublevel:2");
    }

    #[test]
    fn hofer_lengths() {
        let free = HamiltonianSpec::fiber_only(1, FiberFunction::half_square()).unwrap();
        let t = free.truncate(&TruncationProfile::new(1.0, 1e-3).unwrap()).unwrap();
        assert!((hofer_length(&t).unwrap().value - 1.0).abs() < 1e-3);
        let t = pendulum().truncate(&TruncationProfile::new(2.0, 0.1).unwrap()).unwrap();
        let l = hofer_length(&t).unwrap().value;
        assert!((3.0..=3.1).contains(&l), "{l}");
        let b = BumpProfile::new(0.25, 10.0, 0.05).unwrap();
        let bump = HamiltonianSpec::product(1, ScalarField::Bump(b)).unwrap();
        let t = bump.truncate(&TruncationProfile::new(0.0, 0.01).unwrap()).unwrap();
        assert!((hofer_length(&t).unwrap().value - 10.0).abs() <= 0.01);
        assert_eq!(hofer_length(&pendulum()), Err(HomogError::NotCompactlySupported));
    }

    #[test]
    fn calabi_lower_bound_examples() {
        assert_eq!(hofer_lower_bound_calabi(0.0, 1).unwrap(), 0.0);
        assert!((hofer_lower_bound_calabi(-4.0 / 3.0, 1).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!(hofer_lower_bound_calabi(1.0, 3).is_err());
    }

    #[test]
    fn clipped_spectral_values() {
        let grid = SampleGrid::line(-2.0, 2.0, 41).unwrap();
        let eff = sampled(grid.clone(), |p| 0.5 * p * p);
        let g = gamma_asymptotic(&eff, RegionSpec::Sublevel { r: 1.0 }).unwrap();
        assert_eq!((g.pair.c_plus, g.pair.c_minus, g.gamma), (1.0, 0.0, 1.0));
        assert!(matches!(
            c_pm_asymptotic(&eff, RegionSpec::Sublevel { r: 3.0 }),
            Err(HomogError::PlateauNotReached(_))
        ));
        assert!(matches!(
            c_pm_asymptotic(&eff, RegionSpec::Sublevel { r: -1.0 }),
            Err(HomogError::InvalidRegion(_))
        ));
        let siburg = sampled(grid, |p| 0.05 * (p * p - 1.0));
        let g = gamma_asymptotic(&siburg, RegionSpec::UnitBall).unwrap();
        assert_eq!(g.pair.c_plus, 0.0);
        assert!((g.gamma - 0.05).abs() < 1e-15);
    }

    #[test]
    fn integrable_report() {
        let free = HamiltonianSpec::fiber_only(1, FiberFunction::half_square()).unwrap();
        let r = metrics_report(&free, RegionSpec::Sublevel { r: 1.0 }, &MetricsConfig::default()).unwrap();
        assert!((r.gamma_inf - 1.0).abs() < 1e-6, "{r:?}");
        assert!(r.beta0.abs() < 1e-6);
        assert!(r.passed, "{r:?}");
        assert!(r.hofer_lower <= r.hofer_upper);
        assert!(r.to_csv().unwrap().starts_with("quantity,value,lower,upper\n"));
    }
}
