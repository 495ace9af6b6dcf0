//! Phase-space integrals `∫_{T^n} ∫ F(q, p) dp dq` over fiberwise star-shaped regions.

use serde::Serialize;

use super::RegionSpec;
use crate::error::{HomogError, Result};
use crate::hamiltonian::{HamiltonianSpec, LocalHamiltonian, TruncationProfile};
use crate::quad::integrate;

const OUTER_TOL: f64 = 1e-10;
const INNER_TOL: f64 = 1e-12;

/// An integral value with its estimated absolute error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CalabiValue {
    pub value: f64,
    pub error: f64,
}

/// The fiber set integrated over at each `q`.
#[derive(Clone, Copy)]
pub(crate) enum Domain<'a> {
    /// `‖p‖ ≤ 1`.
    Ball,
    /// `{p : H(q, p) ≤ level}`.
    Below { spec: &'a HamiltonianSpec, level: f64 },
}

/// A point inside every sublevel set of the fiber that is non-empty.
fn fiber_center(local: &LocalHamiltonian) -> [f64; 2] {
    match local {
        LocalHamiltonian::Quadratic { center, .. } => *center,
        LocalHamiltonian::Truncated { base, .. } => fiber_center(base),
        LocalHamiltonian::Sheared { base, shift } => {
            let c = fiber_center(base);
            [c[0] - shift[0], c[1] - shift[1]]
        }
        _ => [0.0; 2],
    }
}

/// Distance from `c` along `dir` to the level set `H = level`; `H(c) ≤ level` is assumed.
fn ray_root(local: &LocalHamiltonian, n: usize, c: [f64; 2], dir: [f64; 2], level: f64) -> Result<f64> {
    let at = |rho: f64| -> Result<f64> {
        let p = [c[0] + rho * dir[0], c[1] + rho * dir[1]];
        local.eval(&p[..n])
    };
    let mut lo = 0.0;
    let mut hi = 1.0;
    while at(hi)? <= level {
        lo = hi;
        hi *= 2.0;
        if hi > 1e6 {
            return Err(HomogError::UnboundedRegion);
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if at(mid)? <= level {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `∫_0^{ρ_max} F(q, c + ρ·dir) ρ^{n-1} dρ` with the break levels of `breaks` resolved as knots.
#[allow(clippy::too_many_arguments)]
fn radial(
    q: &[f64],
    n: usize,
    c: [f64; 2],
    dir: [f64; 2],
    extent: f64,
    breaks: &[(&LocalHamiltonian, f64)],
    integrand: &dyn Fn(&[f64], &[f64]) -> f64,
) -> Result<f64> {
    let mut knots = Vec::new();
    for &(local, level) in breaks {
        let p = &c[..n];
        if local.eval(p)? < level {
            let rho = ray_root(local, n, c, dir, level)?;
            if rho > 0.0 && rho < extent {
                knots.push(rho);
            }
        }
    }
    let f = |rho: f64| {
        let p = [c[0] + rho * dir[0], c[1] + rho * dir[1]];
        let jac = if n == 2 { rho } else { 1.0 };
        integrand(q, &p[..n]) * jac
    };
    Ok(integrate(f, 0.0, extent, &knots, INNER_TOL, 1e-15)?.value)
}

/// Fiber integral at one base point.
fn fiber_integral(
    q: &[f64],
    domain: Domain,
    break_specs: &[(&HamiltonianSpec, f64)],
    integrand: &dyn Fn(&[f64], &[f64]) -> f64,
) -> Result<f64> {
    let n = q.len();
    let (center, region_local) = match domain {
        Domain::Ball => ([0.0; 2], None),
        Domain::Below { spec, level } => {
            let local = spec.localize(q);
            let c = fiber_center(&local);
            if local.eval(&c[..n])? > level {
                if local.fiber_min() > level {
                    return Ok(0.0);
                }
                return Err(HomogError::UnsupportedSpec(
                    "sublevel set does not contain the fiber center".into(),
                ));
            }
            (c, Some((local, level)))
        }
    };
    let locals: Vec<(LocalHamiltonian, f64)> = break_specs
        .iter()
        .map(|(s, level)| (s.localize(q), *level))
        .collect();
    let breaks: Vec<(&LocalHamiltonian, f64)> = locals.iter().map(|(l, v)| (l, *v)).collect();
    let extent = |dir: [f64; 2]| -> Result<f64> {
        match &region_local {
            None => Ok(1.0),
            Some((local, level)) => ray_root(local, n, center, dir, *level),
        }
    };
    if n == 1 {
        let mut total = 0.0;
        for dir in [[1.0, 0.0], [-1.0, 0.0]] {
            total += radial(q, 1, center, dir, extent(dir)?, &breaks, integrand)?;
        }
        return Ok(total);
    }
    // periodic trapezoid in the angle, doubled until it settles
    let mut count = 16;
    let mut sum = 0.0;
    for k in 0..count {
        let t = 2.0 * std::f64::consts::PI * k as f64 / count as f64;
        let dir = [t.cos(), t.sin()];
        sum += radial(q, 2, center, dir, extent(dir)?, &breaks, integrand)?;
    }
    let mut estimate = sum * 2.0 * std::f64::consts::PI / count as f64;
    while count < 4096 {
        let mut extra = 0.0;
        for k in 0..count {
            let t = 2.0 * std::f64::consts::PI * (k as f64 + 0.5) / count as f64;
            let dir = [t.cos(), t.sin()];
            extra += radial(q, 2, center, dir, extent(dir)?, &breaks, integrand)?;
        }
        sum += extra;
        count *= 2;
        let next = sum * 2.0 * std::f64::consts::PI / count as f64;
        let settled = (next - estimate).abs() <= 1e-11 * (1.0 + next.abs());
        estimate = next;
        if settled {
            return Ok(estimate);
        }
    }
    Err(HomogError::QuadratureNotConverged(estimate))
}

/// `∫_{T^n} ∫_{domain(q)} F(q, p) dp dq`.
///
/// `break_specs` lists `(G, level)` pairs whose level sets `G(q, ·) = level` are kinks of `F`;
/// `q_breaks` are per-axis kinks in `q`.
pub(crate) fn phase_integral(
    n: usize,
    domain: Domain,
    q_breaks: &[f64],
    break_specs: &[(&HamiltonianSpec, f64)],
    integrand: &dyn Fn(&[f64], &[f64]) -> f64,
) -> Result<CalabiValue> {
    let mut failure: Option<HomogError> = None;
    let mut inner_failure: Option<HomogError> = None;
    let result = match n {
        1 => integrate(
            |x| match fiber_integral(&[x], domain, break_specs, integrand) {
                Ok(v) => v,
                Err(e) => {
                    failure.get_or_insert(e);
                    0.0
                }
            },
            0.0,
            1.0,
            q_breaks,
            OUTER_TOL,
            1e-14,
        )?,
        2 => integrate(
            |x| {
                let row = integrate(
                    |y| match fiber_integral(&[x, y], domain, break_specs, integrand) {
                        Ok(v) => v,
                        Err(e) => {
                            inner_failure.get_or_insert(e);
                            0.0
                        }
                    },
                    0.0,
                    1.0,
                    q_breaks,
                    OUTER_TOL,
                    1e-14,
                );
                match row {
                    Ok(v) => v.value,
                    Err(e) => {
                        failure.get_or_insert(e);
                        0.0
                    }
                }
            },
            0.0,
            1.0,
            q_breaks,
            OUTER_TOL,
            1e-14,
        )?,
        d => return Err(HomogError::DimensionMismatch { expected: 2, got: d }),
    };
    if let Some(e) = failure.or(inner_failure) {
        return Err(e);
    }
    Ok(CalabiValue {
        value: result.value,
        error: result.error,
    })
}

/// `Cal = ∫∫ H ωⁿ` of an autonomous spec over `region`.
///
/// On `UnitBall` the integrand is `H` itself. On `Sublevel { r }` it is `H - r`, the generator
/// normalized to vanish outside `S_r`.
pub fn calabi_invariant(spec: &HamiltonianSpec, region: RegionSpec) -> Result<CalabiValue> {
    let n = spec.dim();
    let q_breaks = spec.q_breakpoints();
    match region {
        RegionSpec::UnitBall => phase_integral(n, Domain::Ball, &q_breaks, &[], &|q, p| {
            spec.eval(q, p).unwrap_or(f64::NAN)
        }),
        RegionSpec::Sublevel { r } => phase_integral(
            n,
            Domain::Below { spec, level: r },
            &q_breaks,
            &[],
            &|q, p| spec.eval(q, p).unwrap_or(f64::NAN) - r,
        ),
    }
    .and_then(finite)
}

fn finite(v: CalabiValue) -> Result<CalabiValue> {
    if v.value.is_finite() {
        Ok(v)
    } else {
        Err(HomogError::QuadratureNotConverged(v.value))
    }
}

/// Phase-space volume of `region`.
pub fn region_volume(spec: &HamiltonianSpec, region: RegionSpec) -> Result<f64> {
    match region {
        RegionSpec::UnitBall => Ok(super::unit_ball_volume(spec.dim())),
        RegionSpec::Sublevel { r } => Ok(phase_integral(
            spec.dim(),
            Domain::Below { spec, level: r },
            &spec.q_breakpoints(),
            &[],
            &|_, _| 1.0,
        )?
        .value),
    }
}

/// `∫∫ (f_{r,ε}(H) - r)` for a truncated spec, whose integrand vanishes outside
/// `{H ≤ r + ε}`.
pub fn calabi_compact(spec: &HamiltonianSpec) -> Result<CalabiValue> {
    let HamiltonianSpec::Truncated { base, profile } = spec else {
        return Err(HomogError::NotCompactlySupported);
    };
    compact_integral(base, profile)
}

fn compact_integral(base: &HamiltonianSpec, profile: &TruncationProfile) -> Result<CalabiValue> {
    let top = profile.r + profile.eps;
    phase_integral(
        base.dim(),
        Domain::Below { spec: base, level: top },
        &base.q_breakpoints(),
        &[(base, profile.r)],
        &|q, p| profile.apply(base.eval(q, p).unwrap_or(f64::NAN)) - profile.r,
    )
    .and_then(finite)
}

/// Outcome of [`calabi_extension_limit`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtensionLimit {
    pub eps: Vec<f64>,
    /// `Cal(H_ε)` per width.
    pub calabi: Vec<f64>,
    /// `|Cal(H_ε) - Cal(H)|`.
    pub differences: Vec<f64>,
    /// `Cal(H)` over the region.
    pub reference: f64,
    /// Richardson extrapolation of the last three `Cal(H_ε)`.
    pub extrapolated: f64,
    pub monotone: bool,
    pub passed: bool,
}

pub const EXTENSION_TOL: f64 = 1e-3;

/// The widths `0.1·2^{-k}`, `k = 0..=6`.
pub fn default_eps_sequence() -> Vec<f64> {
    (0..7).map(|k| 0.1 * 0.5f64.powi(k)).collect()
}

/// Limit of a sequence sampled at `ε, ε/2, ε/4` with error `Aε + Bε²`.
pub fn richardson(a: [f64; 3]) -> f64 {
    (a[0] - 6.0 * a[1] + 8.0 * a[2]) / 3.0
}

/// `Cal(H_ε) → Cal(H)` along `eps`.
///
/// On the unit ball `H_ε = f_{0,ε}(H)` is the extension of a spec vanishing on `‖p‖ = 1`; it must
/// stay within `ε` of zero outside the ball. On `S_r` it is the truncation `f_{r,ε}(H)`.
pub fn calabi_extension_limit(
    spec: &HamiltonianSpec,
    region: RegionSpec,
    eps: &[f64],
) -> Result<ExtensionLimit> {
    if eps.is_empty() || eps.iter().any(|e| !(*e > 0.0)) {
        return Err(HomogError::InvalidConfig("widths must be positive".into()));
    }
    let reference = calabi_invariant(spec, region)?.value;
    let level = match region {
        RegionSpec::UnitBall => 0.0,
        RegionSpec::Sublevel { r } => r,
    };
    let mut calabi = Vec::with_capacity(eps.len());
    for &e in eps {
        let profile = TruncationProfile::new(level, e)?;
        if region == RegionSpec::UnitBall {
            check_vanishing(spec, &profile)?;
        }
        calabi.push(compact_integral(spec, &profile)?.value);
    }
    let differences: Vec<f64> = calabi.iter().map(|c| (c - reference).abs()).collect();
    let monotone = differences.windows(2).all(|w| w[1] <= w[0]);
    let m = calabi.len();
    let extrapolated = if m >= 3 {
        richardson([calabi[m - 3], calabi[m - 2], calabi[m - 1]])
    } else {
        calabi[m - 1]
    };
    let passed = monotone && differences[m - 1] <= EXTENSION_TOL;
    Ok(ExtensionLimit {
        eps: eps.to_vec(),
        calabi,
        differences,
        reference,
        extrapolated,
        monotone,
        passed,
    })
}

/// `|f_{0,ε}(H)| ≤ ε` outside the unit ball, on a sampled shell out to the support radius.
fn check_vanishing(spec: &HamiltonianSpec, profile: &TruncationProfile) -> Result<()> {
    let n = spec.dim();
    let outer = spec
        .radius_above(profile.r + profile.eps)
        .unwrap_or(4.0)
        .max(1.0)
        * 1.05;
    let (q_count, angles) = if n == 1 { (256usize, 2) } else { (32usize, 32) };
    let q_total = q_count.pow(n as u32);
    for i in 0..q_total {
        let q: Vec<f64> = match n {
            1 => vec![i as f64 / q_count as f64],
            _ => vec![(i / q_count) as f64 / q_count as f64, (i % q_count) as f64 / q_count as f64],
        };
        for a in 0..angles {
            let t = 2.0 * std::f64::consts::PI * a as f64 / angles as f64;
            let dir = if n == 1 { [if a == 0 { 1.0 } else { -1.0 }, 0.0] } else { [t.cos(), t.sin()] };
            for k in 0..=64 {
                let rho = 1.0 + (outer - 1.0) * k as f64 / 64.0;
                let p = [rho * dir[0], rho * dir[1]];
                let v = profile.apply(spec.eval(&q, &p[..n])?);
                if v.abs() > profile.eps * (1.0 + 1e-12) {
                    return Err(HomogError::ExtensionNotVanishing {
                        eps: profile.eps,
                        found: v,
                    });
                }
            }
        }
    }
    Ok(())
}
