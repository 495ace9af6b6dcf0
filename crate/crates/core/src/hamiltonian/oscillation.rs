use serde::{Deserialize, Serialize};

use super::spec::HamiltonianSpec;
use crate::error::{HomogError, Result};
use crate::grid::TorusGrid;

/// Phase-space region over which an oscillation is taken.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "region", rename_all = "snake_case")]
pub enum OscRegion {
    /// `T^n × [-P, P]^n`.
    FiberBox { p_max: f64 },
    /// The whole phase space of a compactly supported (truncated) spec.
    Support,
}

/// `max - min` of a spec over a region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Oscillation {
    pub value: f64,
    pub max: f64,
    pub min: f64,
    /// Change of the value between the coarse and the fine sampling level.
    pub resolution_gap: f64,
}

struct Extremum {
    value: f64,
    q: [f64; 2],
    p: [f64; 2],
}

pub fn oscillation(spec: &HamiltonianSpec, region: OscRegion) -> Result<Oscillation> {
    let n = spec.dim();
    let (p_max, outside) = match region {
        OscRegion::FiberBox { p_max } => {
            if !(p_max > 0.0 && p_max.is_finite()) {
                return Err(HomogError::InvalidRegion(format!("fiber box P = {p_max}")));
            }
            (p_max, None)
        }
        OscRegion::Support => match spec {
            HamiltonianSpec::Truncated { profile, .. } => {
                let radius = spec.support_radius().map_err(|_| HomogError::UnboundedRegion)?;
                (1.05 * radius + 1e-3, Some(profile.r))
            }
            _ => return Err(HomogError::UnboundedRegion),
        },
    };
    let levels = if n == 1 { [(64, 257), (128, 513)] } else { [(16, 33), (32, 65)] };
    let mut results = Vec::with_capacity(2);
    for (q_points, p_points) in levels {
        let (mut lo, mut hi) = sample_extrema(spec, n, q_points, p_points, p_max)?;
        polish(spec, n, p_max, &mut hi, 1.0);
        polish(spec, n, p_max, &mut lo, -1.0);
        let (mut max, mut min) = (hi.value, lo.value);
        if let Some(r) = outside {
            max = max.max(r);
            min = min.min(r);
        }
        results.push((max, min));
    }
    let (max, min) = results[1];
    let coarse = results[0].0 - results[0].1;
    Ok(Oscillation {
        value: max - min,
        max,
        min,
        resolution_gap: ((max - min) - coarse).abs(),
    })
}

fn sample_extrema(
    spec: &HamiltonianSpec,
    n: usize,
    q_points: usize,
    p_points: usize,
    p_max: f64,
) -> Result<(Extremum, Extremum)> {
    let grid = TorusGrid::new(n, q_points)?;
    let dp = 2.0 * p_max / (p_points - 1) as f64;
    let fiber_len = p_points.pow(n as u32);
    let mut lo = Extremum {
        value: f64::INFINITY,
        q: [0.0; 2],
        p: [0.0; 2],
    };
    let mut hi = Extremum {
        value: f64::NEG_INFINITY,
        q: [0.0; 2],
        p: [0.0; 2],
    };
    for qi in 0..grid.len() {
        let q = grid.coords(qi);
        let local = spec.localize(&q[..n]);
        for j in 0..fiber_len {
            let p = super::spec::fiber_coords(j, p_points, n, p_max, dp);
            let v = local.eval(&p[..n])?;
            if v > hi.value {
                hi = Extremum { value: v, q, p };
            }
            if v < lo.value {
                lo = Extremum { value: v, q, p };
            }
        }
    }
    Ok((lo, hi))
}

/// Compass search on `sign · H` in the `2n` phase-space coordinates, staying inside the box.
fn polish(spec: &HamiltonianSpec, n: usize, p_max: f64, ext: &mut Extremum, sign: f64) {
    let eval = |q: &[f64; 2], p: &[f64; 2]| -> f64 {
        if p[..n].iter().any(|x| x.abs() > p_max) {
            return f64::NEG_INFINITY;
        }
        spec.eval(&q[..n], &p[..n])
            .map(|v| sign * v)
            .unwrap_or(f64::NEG_INFINITY)
    };
    let mut best = sign * ext.value;
    let mut step = 0.02;
    while step > 1e-10 {
        let mut improved = false;
        for coord in 0..2 * n {
            for dir in [-1.0, 1.0] {
                let (mut q, mut p) = (ext.q, ext.p);
                if coord < n {
                    q[coord] += dir * step;
                } else {
                    p[coord - n] += dir * step * p_max;
                }
                let v = eval(&q, &p);
                if v > best {
                    best = v;
                    ext.q = q;
                    ext.p = p;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    ext.value = sign * best;
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::counterexample::BumpProfile;
    use crate::hamiltonian::{ScalarField, TruncationProfile};

    #[test]
    fn constant_spec_has_zero_oscillation() {
        let h = HamiltonianSpec::product(1, ScalarField::constant(0.0)).unwrap();
        let o = oscillation(&h, OscRegion::FiberBox { p_max: 2.0 }).unwrap();
        assert_eq!(o.value, 0.0);
    }

    #[test]
    fn truncated_pendulum() {
        let h = HamiltonianSpec::mechanical(1, ScalarField::cosine(1.0))
            .unwrap()
            .truncate(&TruncationProfile::new(2.0, 0.1).unwrap())
            .unwrap();
        let o = oscillation(&h, OscRegion::Support).unwrap();
        assert!((3.0..=3.1).contains(&o.value), "{o:?}");
        assert!((o.min + 1.0).abs() < 1e-12);
    }

    #[test]
    fn bump_on_unit_ball() {
        let b = BumpProfile::new(0.25, 10.0, 0.05).unwrap();
        let h = HamiltonianSpec::product(1, ScalarField::Bump(b)).unwrap();
        let o = oscillation(&h, OscRegion::FiberBox { p_max: 1.0 }).unwrap();
        assert!((o.value - 10.0).abs() < 1e-12, "{o:?}");
    }

    #[test]
    fn unbounded_region_rejected() {
        let h = HamiltonianSpec::mechanical(1, ScalarField::cosine(1.0)).unwrap();
        assert_eq!(
            oscillation(&h, OscRegion::Support),
            Err(HomogError::UnboundedRegion)
        );
    }
}
