use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::field::ScalarField;
use super::local::LocalHamiltonian;
use super::truncation::TruncationProfile;
use crate::error::{HomogError, Result};
use crate::grid::{fold, TorusGrid};

/// Convex closed-form fiber functions `h(p)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum FiberFunction {
    /// `scale/2 · |p - center|^2 + offset`.
    Quadratic {
        scale: f64,
        #[serde(default)]
        center: Vec<f64>,
        #[serde(default)]
        offset: f64,
    },
}

impl FiberFunction {
    /// `½|p|^2`.
    pub fn half_square() -> Self {
        FiberFunction::Quadratic {
            scale: 1.0,
            center: Vec::new(),
            offset: 0.0,
        }
    }

    fn validate(&self, n: usize) -> Result<()> {
        let FiberFunction::Quadratic {
            scale,
            center,
            offset,
        } = self;
        if !(*scale > 0.0 && scale.is_finite() && offset.is_finite()) {
            return Err(HomogError::InvalidSpec(format!(
                "quadratic fiber needs a positive scale, got {scale}"
            )));
        }
        if !center.is_empty() && center.len() != n {
            return Err(HomogError::DimensionMismatch {
                expected: n,
                got: center.len(),
            });
        }
        Ok(())
    }
}

fn default_p_max() -> f64 {
    4.0
}

fn default_true() -> bool {
    true
}

/// Hamiltonian values on a `q`-grid times a uniform `p`-grid on the fiber box `[-P, P]^n`.
///
/// `values` are row-major with the `q` index outermost, then the `p` axes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabulatedHamiltonian {
    pub grid: TorusGrid,
    #[serde(default = "default_p_max")]
    pub p_max: f64,
    pub p_points: usize,
    pub values: Vec<f64>,
    /// Claims fiberwise convexity; checked on construction when set.
    #[serde(default = "default_true")]
    pub convex: bool,
}

impl TabulatedHamiltonian {
    pub fn new(grid: TorusGrid, p_max: f64, p_points: usize, values: Vec<f64>) -> Result<Self> {
        let t = TabulatedHamiltonian {
            grid,
            p_max,
            p_points,
            values,
            convex: true,
        };
        t.validate()?;
        Ok(t)
    }

    /// Tabulates `f(q, p)` over the grid and fiber box.
    pub fn from_fn(
        grid: TorusGrid,
        p_max: f64,
        p_points: usize,
        f: impl Fn(&[f64], &[f64]) -> f64,
    ) -> Result<Self> {
        let n = grid.dim();
        let fiber_len = p_points.pow(n as u32);
        let dp = 2.0 * p_max / (p_points - 1) as f64;
        let mut values = Vec::with_capacity(grid.len() * fiber_len);
        for qi in 0..grid.len() {
            let q = grid.coords(qi);
            for pj in 0..fiber_len {
                let p = fiber_coords(pj, p_points, n, p_max, dp);
                values.push(f(&q[..n], &p[..n]));
            }
        }
        TabulatedHamiltonian::new(grid, p_max, p_points, values)
    }

    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    pub fn fiber_spacing(&self) -> f64 {
        2.0 * self.p_max / (self.p_points - 1) as f64
    }

    fn fiber_len(&self) -> usize {
        self.p_points.pow(self.dim() as u32)
    }

    fn validate(&self) -> Result<()> {
        if !(self.p_max > 0.0 && self.p_max.is_finite()) || self.p_points < 3 {
            return Err(HomogError::InvalidSpec(format!(
                "fiber box needs P > 0 and at least 3 points, got P = {}, M = {}",
                self.p_max, self.p_points
            )));
        }
        let expected = self.grid.len() * self.fiber_len();
        if self.values.len() != expected {
            return Err(HomogError::InvalidSpec(format!(
                "{} tabulated values, expected {expected}",
                self.values.len()
            )));
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(HomogError::InvalidSpec("non-finite tabulated value".into()));
        }
        if self.convex {
            let defect = self.convexity_defect();
            if defect > 1e-10 {
                return Err(HomogError::InvalidSpec(format!(
                    "tabulated values are not fiber-convex (second difference {:e})",
                    -defect
                )));
            }
        }
        Ok(())
    }

    /// Largest negative second difference along any fiber axis (0 when convex).
    pub fn convexity_defect(&self) -> f64 {
        let n = self.dim();
        let m = self.p_points;
        let fl = self.fiber_len();
        let mut worst: f64 = 0.0;
        for qi in 0..self.grid.len() {
            let fiber = &self.values[qi * fl..(qi + 1) * fl];
            for axis in 0..n {
                let stride = if n == 1 || axis == 1 { 1 } else { m };
                for j in 0..fl {
                    let along = if n == 1 || axis == 1 { j % m } else { j / m };
                    if along == 0 || along == m - 1 {
                        continue;
                    }
                    let d2 = fiber[j - stride] - 2.0 * fiber[j] + fiber[j + stride];
                    worst = worst.max(-d2);
                }
            }
        }
        worst
    }

    /// The fiber table at `q`, linearly interpolated between the periodic `q` nodes.
    pub(crate) fn fiber_at(&self, q: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let npts = self.grid.points_per_axis();
        let fl = self.fiber_len();
        let mut out = vec![0.0; fl];
        let mut base = [0usize; 2];
        let mut frac = [0.0; 2];
        for a in 0..n {
            let x = fold(q[a]) * npts as f64;
            let i0 = x.floor();
            base[a] = (i0 as usize) % npts;
            frac[a] = x - i0;
        }
        for corner in 0..(1usize << n) {
            let mut w = 1.0;
            let mut idx = [0usize; 2];
            for a in 0..n {
                let bit = (corner >> a) & 1;
                w *= if bit == 1 { frac[a] } else { 1.0 - frac[a] };
                idx[a] = (base[a] + bit) % npts;
            }
            if w == 0.0 {
                continue;
            }
            let qi = if n == 1 { idx[0] } else { idx[0] * npts + idx[1] };
            for (o, v) in out.iter_mut().zip(&self.values[qi * fl..(qi + 1) * fl]) {
                *o += w * v;
            }
        }
        out
    }
}

pub(crate) fn fiber_coords(j: usize, m: usize, n: usize, p_max: f64, dp: f64) -> [f64; 2] {
    match n {
        1 => [-p_max + j as f64 * dp, 0.0],
        _ => [-p_max + (j / m) as f64 * dp, -p_max + (j % m) as f64 * dp],
    }
}

/// A Hamiltonian `H(q, p)` on `T^*T^n`, `n ∈ {1, 2}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HamiltonianSpec {
    /// `½|p|^2 + V(q)`.
    Mechanical { n: usize, potential: ScalarField },
    /// `γ(q)(|p|^2 - 1)` with `γ ≥ 0`.
    Product { n: usize, gamma: ScalarField },
    /// `h(p)`, independent of `q`.
    FiberOnly { n: usize, fiber: FiberFunction },
    Tabulated(TabulatedHamiltonian),
    /// `f_{r,ε}(H)`.
    Truncated {
        base: Box<HamiltonianSpec>,
        profile: TruncationProfile,
    },
    /// `H(q, p + dg(q))`, the pull-back by the exact shear `(q, p) ↦ (q, p + dg(q))`.
    Sheared {
        base: Box<HamiltonianSpec>,
        shift: ScalarField,
    },
}

/// Structural flags used to gate solvers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpecMetadata {
    pub fiber_convex: bool,
    pub superlinear: bool,
}

/// Maximiser of `⟨p, v⟩ - H(q, p)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LegendrePoint {
    pub value: f64,
    pub momentum: Vec<f64>,
}

impl HamiltonianSpec {
    pub fn mechanical(n: usize, potential: ScalarField) -> Result<Self> {
        let s = HamiltonianSpec::Mechanical { n, potential };
        s.validate()?;
        Ok(s)
    }

    pub fn product(n: usize, gamma: ScalarField) -> Result<Self> {
        let s = HamiltonianSpec::Product { n, gamma };
        s.validate()?;
        Ok(s)
    }

    pub fn fiber_only(n: usize, fiber: FiberFunction) -> Result<Self> {
        let s = HamiltonianSpec::FiberOnly { n, fiber };
        s.validate()?;
        Ok(s)
    }

    pub fn sheared(base: HamiltonianSpec, shift: ScalarField) -> Result<Self> {
        let s = HamiltonianSpec::Sheared {
            base: Box::new(base),
            shift,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn dim(&self) -> usize {
        match self {
            HamiltonianSpec::Mechanical { n, .. }
            | HamiltonianSpec::Product { n, .. }
            | HamiltonianSpec::FiberOnly { n, .. } => *n,
            HamiltonianSpec::Tabulated(t) => t.dim(),
            HamiltonianSpec::Truncated { base, .. } | HamiltonianSpec::Sheared { base, .. } => {
                base.dim()
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let check_dim = |n: usize| {
            if (1..=2).contains(&n) {
                Ok(())
            } else {
                Err(HomogError::InvalidSpec(format!("dimension {n} not supported")))
            }
        };
        match self {
            HamiltonianSpec::Mechanical { n, potential } => {
                check_dim(*n)?;
                potential.validate(*n)
            }
            HamiltonianSpec::Product { n, gamma } => {
                check_dim(*n)?;
                gamma.validate(*n)?;
                let (lo, _) = gamma.extrema(*n);
                if lo < -1e-12 {
                    return Err(HomogError::InvalidSpec(format!(
                        "product form needs gamma >= 0, found {lo}"
                    )));
                }
                Ok(())
            }
            HamiltonianSpec::FiberOnly { n, fiber } => {
                check_dim(*n)?;
                fiber.validate(*n)
            }
            HamiltonianSpec::Tabulated(t) => t.validate(),
            HamiltonianSpec::Truncated { base, profile } => {
                profile.validate()?;
                base.validate()
            }
            HamiltonianSpec::Sheared { base, shift } => {
                base.validate()?;
                shift.validate(base.dim())
            }
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: HamiltonianSpec = serde_json::from_str(text)
            .map_err(|e| HomogError::InvalidSpec(format!("JSON: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("specs always serialize")
    }

    /// SHA-256 of the canonical JSON form, hex encoded.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.to_json().as_bytes()))
    }

    pub fn metadata(&self) -> SpecMetadata {
        match self {
            HamiltonianSpec::Mechanical { .. } | HamiltonianSpec::FiberOnly { .. } => SpecMetadata {
                fiber_convex: true,
                superlinear: true,
            },
            HamiltonianSpec::Product { n, gamma } => SpecMetadata {
                fiber_convex: true,
                superlinear: gamma.extrema(*n).0 > 0.0,
            },
            HamiltonianSpec::Tabulated(t) => SpecMetadata {
                fiber_convex: t.convex,
                superlinear: false,
            },
            HamiltonianSpec::Truncated { .. } => SpecMetadata {
                fiber_convex: false,
                superlinear: false,
            },
            HamiltonianSpec::Sheared { base, .. } => base.metadata(),
        }
    }

    fn check_point(&self, q: &[f64], p: &[f64]) -> Result<()> {
        let n = self.dim();
        for len in [q.len(), p.len()] {
            if len != n {
                return Err(HomogError::DimensionMismatch {
                    expected: n,
                    got: len,
                });
            }
        }
        if p.iter().any(|x| !x.is_finite()) {
            return Err(HomogError::InvalidSpec(format!("non-finite momentum {p:?}")));
        }
        Ok(())
    }

    /// Freezes `q` and returns the fiber function `H(q, ·)`.
    pub fn localize(&self, q: &[f64]) -> LocalHamiltonian {
        let n = self.dim();
        let q: Vec<f64> = q.iter().map(|&x| fold(x)).collect();
        match self {
            HamiltonianSpec::Mechanical { potential, .. } => LocalHamiltonian::Mechanical {
                v: potential.value(&q),
            },
            HamiltonianSpec::Product { gamma, .. } => LocalHamiltonian::Product {
                gamma: gamma.value(&q),
            },
            HamiltonianSpec::FiberOnly { fiber, .. } => {
                let FiberFunction::Quadratic {
                    scale,
                    center,
                    offset,
                } = fiber;
                let mut c = [0.0; 2];
                for (a, x) in center.iter().enumerate() {
                    c[a] = *x;
                }
                LocalHamiltonian::Quadratic {
                    scale: *scale,
                    center: c,
                    offset: *offset,
                }
            }
            HamiltonianSpec::Tabulated(t) => LocalHamiltonian::Tabulated {
                p_max: t.p_max,
                p_points: t.p_points,
                table: t.fiber_at(&q),
            },
            HamiltonianSpec::Truncated { base, profile } => LocalHamiltonian::Truncated {
                base: Box::new(base.localize(&q)),
                profile: *profile,
            },
            HamiltonianSpec::Sheared { base, shift } => {
                let g = shift.gradient(&q);
                LocalHamiltonian::Sheared {
                    base: Box::new(base.localize(&q)),
                    shift: [g[0], if n > 1 { g[1] } else { 0.0 }],
                }
            }
        }
    }

    /// One [`LocalHamiltonian`] per grid node.
    pub fn localize_grid(&self, grid: &TorusGrid) -> Vec<LocalHamiltonian> {
        let n = grid.dim();
        (0..grid.len())
            .map(|i| self.localize(&grid.coords(i)[..n]))
            .collect()
    }

    pub fn eval(&self, q: &[f64], p: &[f64]) -> Result<f64> {
        self.check_point(q, p)?;
        self.localize(q).eval(p)
    }

    pub fn grad_p(&self, q: &[f64], p: &[f64]) -> Result<Vec<f64>> {
        self.check_point(q, p)?;
        let mut g = vec![0.0; p.len()];
        self.localize(q).eval_grad(p, &mut g)?;
        Ok(g)
    }

    pub fn grad_q(&self, q: &[f64], p: &[f64]) -> Result<Vec<f64>> {
        self.check_point(q, p)?;
        let n = self.dim();
        match self {
            HamiltonianSpec::Mechanical { potential, .. } => {
                Ok(potential.gradient(q)[..n].to_vec())
            }
            HamiltonianSpec::Product { gamma, .. } => {
                let s: f64 = p.iter().map(|x| x * x).sum::<f64>() - 1.0;
                Ok(gamma.gradient(q)[..n].iter().map(|g| g * s).collect())
            }
            HamiltonianSpec::FiberOnly { .. } => Ok(vec![0.0; n]),
            HamiltonianSpec::Tabulated(t) => {
                let h = t.grid.spacing();
                let mut g = vec![0.0; n];
                for a in 0..n {
                    let mut qp = q.to_vec();
                    let mut qm = q.to_vec();
                    qp[a] += h;
                    qm[a] -= h;
                    g[a] = (self.eval(&qp, p)? - self.eval(&qm, p)?) / (2.0 * h);
                }
                Ok(g)
            }
            HamiltonianSpec::Truncated { base, profile } => {
                let d = profile.derivative(base.eval(q, p)?);
                Ok(base.grad_q(q, p)?.iter().map(|g| g * d).collect())
            }
            HamiltonianSpec::Sheared { base, shift } => {
                let dg = shift.gradient(q);
                let hess = shift.hessian(q);
                let big_p: Vec<f64> = (0..n).map(|a| p[a] + dg[a]).collect();
                let gq = base.grad_q(q, &big_p)?;
                let gp = base.grad_p(q, &big_p)?;
                Ok((0..n)
                    .map(|a| gq[a] + (0..n).map(|b| hess[b][a] * gp[b]).sum::<f64>())
                    .collect())
            }
        }
    }

    /// `L(q, v) = sup_p ⟨p, v⟩ - H(q, p)` and its maximiser.
    pub fn legendre_lagrangian(&self, q: &[f64], v: &[f64]) -> Result<LegendrePoint> {
        self.check_point(q, v)?;
        let meta = self.metadata();
        if !meta.fiber_convex {
            return Err(HomogError::NonConvexSpec);
        }
        self.localize(q).lagrangian(v)
    }

    /// `apply_truncation`: `f_{r,ε} ∘ H`, tabulated again when `H` is tabulated.
    pub fn truncate(&self, profile: &TruncationProfile) -> Result<HamiltonianSpec> {
        profile.validate()?;
        match self {
            HamiltonianSpec::Tabulated(t) => Ok(HamiltonianSpec::Tabulated(TabulatedHamiltonian {
                grid: t.grid,
                p_max: t.p_max,
                p_points: t.p_points,
                values: t.values.iter().map(|&v| profile.apply(v)).collect(),
                convex: false,
            })),
            other => Ok(HamiltonianSpec::Truncated {
                base: Box::new(other.clone()),
                profile: *profile,
            }),
        }
    }

    /// Per-axis `q` coordinates where the spec is only finitely smooth.
    pub fn q_breakpoints(&self) -> Vec<f64> {
        match self {
            HamiltonianSpec::Mechanical { potential, .. } => potential.breakpoints(),
            HamiltonianSpec::Product { gamma, .. } => gamma.breakpoints(),
            HamiltonianSpec::Truncated { base, .. } => base.q_breakpoints(),
            HamiltonianSpec::Sheared { base, shift } => {
                let mut b = base.q_breakpoints();
                b.extend(shift.breakpoints());
                b
            }
            _ => Vec::new(),
        }
    }

    /// `inf_{q,p} H`.
    pub fn global_min(&self) -> Result<f64> {
        let n = self.dim();
        match self {
            HamiltonianSpec::Mechanical { potential, .. } => Ok(potential.extrema(n).0),
            HamiltonianSpec::Product { gamma, .. } => Ok(-gamma.extrema(n).1),
            HamiltonianSpec::FiberOnly { fiber, .. } => {
                let FiberFunction::Quadratic { offset, .. } = fiber;
                Ok(*offset)
            }
            HamiltonianSpec::Tabulated(t) => Ok(t.values.iter().copied().fold(f64::INFINITY, f64::min)),
            HamiltonianSpec::Truncated { base, profile } => Ok(base.global_min()?.min(profile.r)),
            HamiltonianSpec::Sheared { base, .. } => base.global_min(),
        }
    }

    /// A radius `R` such that `H(q, p) ≥ level` for all `q` whenever `|p| ≥ R`.
    pub fn radius_above(&self, level: f64) -> Option<f64> {
        let n = self.dim();
        match self {
            HamiltonianSpec::Mechanical { potential, .. } => {
                let vmin = potential.extrema(n).0;
                Some((2.0 * (level - vmin)).max(0.0).sqrt())
            }
            HamiltonianSpec::Product { gamma, .. } => {
                let gmin = gamma.extrema(n).0;
                if gmin <= 0.0 {
                    return None;
                }
                Some((1.0 + level / gmin).max(0.0).sqrt())
            }
            HamiltonianSpec::FiberOnly { fiber, .. } => {
                let FiberFunction::Quadratic {
                    scale,
                    center,
                    offset,
                } = fiber;
                let c = center.iter().map(|x| x * x).sum::<f64>().sqrt();
                Some(c + (2.0 * (level - offset) / scale).max(0.0).sqrt())
            }
            HamiltonianSpec::Sheared { base, shift } => {
                let r = base.radius_above(level)?;
                let g = crate::grid::TorusGrid::new(n, 64).ok()?;
                let gmax = (0..g.len())
                    .map(|i| {
                        let d = shift.gradient(&g.coords(i)[..n]);
                        d[..n].iter().map(|x| x * x).sum::<f64>().sqrt()
                    })
                    .fold(0.0, f64::max);
                Some(r + 1.1 * gmax)
            }
            HamiltonianSpec::Tabulated(_) | HamiltonianSpec::Truncated { .. } => None,
        }
    }

    /// Radius of the fiber ball outside which a truncated spec is constant.
    pub fn support_radius(&self) -> Result<f64> {
        match self {
            HamiltonianSpec::Truncated { base, profile } => base
                .radius_above(profile.r + profile.eps)
                .ok_or(HomogError::NotCompactlySupported),
            _ => Err(HomogError::NotCompactlySupported),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn pendulum() -> HamiltonianSpec {
        HamiltonianSpec::mechanical(1, ScalarField::cosine(1.0)).unwrap()
    }

    #[test]
    fn eval_examples() {
        let free = HamiltonianSpec::fiber_only(1, FiberFunction::half_square()).unwrap();
        assert_eq!(free.eval(&[0.3], &[0.0]).unwrap(), 0.0);
        let prod = HamiltonianSpec::product(1, ScalarField::constant(1.0)).unwrap();
        assert_eq!(prod.eval(&[0.5], &[1.0]).unwrap(), 0.0);
        assert_eq!(pendulum().eval(&[0.0], &[1.0]).unwrap(), 1.5);
    }

    #[test]
    fn grad_examples() {
        let free = HamiltonianSpec::fiber_only(1, FiberFunction::half_square()).unwrap();
        assert_eq!(free.grad_p(&[0.1], &[2.0]).unwrap(), vec![2.0]);
        let c = 3.5;
        let prod = HamiltonianSpec::product(1, ScalarField::constant(c)).unwrap();
        assert_eq!(prod.grad_p(&[0.7], &[1.0]).unwrap(), vec![2.0 * c]);
        let h = 1e-5;
        let fd = (pendulum().eval(&[0.25 + h], &[0.0]).unwrap()
            - pendulum().eval(&[0.25 - h], &[0.0]).unwrap())
            / (2.0 * h);
        let g = pendulum().grad_q(&[0.25], &[0.0]).unwrap()[0];
        assert!((g + 2.0 * PI).abs() < 1e-12);
        assert!((g - fd).abs() < 1e-6);
    }

    #[test]
    fn legendre_examples() {
        let free = HamiltonianSpec::mechanical(1, ScalarField::constant(0.0)).unwrap();
        assert_eq!(free.legendre_lagrangian(&[0.2], &[1.0]).unwrap().value, 0.5);
        let l = pendulum().legendre_lagrangian(&[0.0], &[0.0]).unwrap();
        assert_eq!(l.value, -1.0);
        let prod = HamiltonianSpec::product(1, ScalarField::constant(1.0)).unwrap();
        let l = prod.legendre_lagrangian(&[0.0], &[0.0]).unwrap();
        assert_eq!(l.value, 1.0);
        assert_eq!(l.momentum, vec![0.0]);
    }

    #[test]
    fn product_rejects_negative_gamma() {
        assert!(HamiltonianSpec::product(1, ScalarField::cosine(1.0)).is_err());
    }

    #[test]
    fn tabulated_matches_symbolic_on_nodes() {
        let grid = TorusGrid::new(1, 32).unwrap();
        let spec = pendulum();
        let tab = TabulatedHamiltonian::from_fn(grid, 4.0, 65, |q, p| spec.eval(q, p).unwrap()).unwrap();
        let tspec = HamiltonianSpec::Tabulated(tab);
        assert!((tspec.eval(&[0.25], &[0.5]).unwrap() - spec.eval(&[0.25], &[0.5]).unwrap()).abs() < 1e-12);
        let err = tspec.eval(&[0.25], &[4.5]).unwrap_err();
        assert!(matches!(err, HomogError::OutOfFiberBox { .. }));
        let l = tspec.legendre_lagrangian(&[0.0], &[0.0]).unwrap();
        assert!((l.value + 1.0).abs() < 1e-9);
    }

    #[test]
    fn tabulated_rejects_concave_fibers() {
        let grid = TorusGrid::new(1, 16).unwrap();
        let r = TabulatedHamiltonian::from_fn(grid, 2.0, 9, |_, p| -p[0] * p[0]);
        assert!(r.is_err());
    }

    #[test]
    fn tabulated_legendre_detects_boundary_max() {
        let grid = TorusGrid::new(1, 16).unwrap();
        let tab = TabulatedHamiltonian::from_fn(grid, 2.0, 9, |_, p| 0.5 * p[0] * p[0]).unwrap();
        let spec = HamiltonianSpec::Tabulated(tab);
        assert!(matches!(
            spec.legendre_lagrangian(&[0.0], &[3.0]),
            Err(HomogError::NotSuperlinear(_))
        ));
    }

    #[test]
    fn truncation_agrees_below_level() {
        let prof = TruncationProfile::new(2.0, 0.1).unwrap();
        let t = pendulum().truncate(&prof).unwrap();
        for i in 0..50 {
            let q = [i as f64 / 50.0];
            let p = [-2.0 + 4.0 * i as f64 / 50.0];
            let h = pendulum().eval(&q, &p).unwrap();
            let ht = t.eval(&q, &p).unwrap();
            if h <= 2.0 {
                assert_eq!(h, ht);
            } else {
                assert!((2.0..=2.1).contains(&ht));
            }
        }
        assert!(!t.metadata().fiber_convex);
        assert!(t.support_radius().unwrap() >= (2.0f64 * 3.1).sqrt());
    }

    #[test]
    fn json_round_trip_with_kind_tag() {
        let spec = pendulum().truncate(&TruncationProfile::new(2.0, 0.1).unwrap()).unwrap();
        let json = spec.to_json();
        assert!(json.contains(r#""kind":"truncated""#));
        assert!(json.contains(r#""kind":"mechanical""#));
        assert_eq!(HamiltonianSpec::from_json(&json).unwrap(), spec);
        assert_eq!(spec.digest().len(), 64);
        let bad = r#"{"kind":"product","n":1,"gamma":{"type":"constant","value":-1.0}}"#;
        assert!(HamiltonianSpec::from_json(bad).is_err());
    }

    #[test]
    fn sheared_grad_q_matches_finite_difference() {
        let shift = ScalarField::Fourier {
            modes: vec![super::super::field::FourierMode { k: vec![1], cos: 0.0, sin: 0.1 }],
        };
        let s = HamiltonianSpec::sheared(pendulum(), shift).unwrap();
        let (q, p) = (0.3, 0.7);
        let h = 1e-5;
        let fd = (s.eval(&[q + h], &[p]).unwrap() - s.eval(&[q - h], &[p]).unwrap()) / (2.0 * h);
        assert!((s.grad_q(&[q], &[p]).unwrap()[0] - fd).abs() < 1e-6);
    }
}
