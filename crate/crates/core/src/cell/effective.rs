//! Batch evaluation of `H̄` on momentum grids and the sampled-function file formats.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::lax_oleinik::{homogenize_laxoleinik, LaxOleinikConfig};
use super::minimax::homogenize_minimax_from;
use super::quadrature::homogenize_1d_quadrature;
use super::SolverConfig;
use crate::error::{HomogError, Result};
use crate::grid::PeriodicField;
use crate::hamiltonian::HamiltonianSpec;

/// How `H̄(p)` is computed at each sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Smoothed minimax; truncated specs are solved untruncated and clipped at `r`.
    Minimax,
    /// Smoothed minimax applied to the truncated spec itself.
    MinimaxDirect,
    /// Level-set quadrature (1D only).
    Quadrature,
    LaxOleinik,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Minimax => "minimax",
            Method::MinimaxDirect => "minimax-direct",
            Method::Quadrature => "quadrature",
            Method::LaxOleinik => "lax-oleinik",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = HomogError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "minimax" => Ok(Method::Minimax),
            "minimax-direct" => Ok(Method::MinimaxDirect),
            "quadrature" => Ok(Method::Quadrature),
            "lax-oleinik" | "laxoleinik" => Ok(Method::LaxOleinik),
            other => Err(HomogError::InvalidConfig(format!("unknown method {other:?}"))),
        }
    }
}

/// Name of the independent variable of a sampled function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AxisLabel {
    /// Momentum, for `H̄`.
    P,
    /// Cohomology class, for `α`.
    C,
    /// Rotation vector, for `β`.
    H,
}

impl AxisLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            AxisLabel::P => "p",
            AxisLabel::C => "c",
            AxisLabel::H => "h",
        }
    }
}

/// Sorted sample coordinates per axis; the samples are their tensor product.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleGrid {
    axes: Vec<Vec<f64>>,
}

impl SampleGrid {
    pub fn new(axes: Vec<Vec<f64>>) -> Result<Self> {
        if axes.is_empty() || axes.len() > 2 || axes.iter().any(|a| a.is_empty()) {
            return Err(HomogError::EmptyInput);
        }
        for a in &axes {
            if a.iter().any(|x| !x.is_finite()) {
                return Err(HomogError::InvalidConfig("non-finite sample".into()));
            }
            if a.windows(2).any(|w| w[1] <= w[0]) {
                return Err(HomogError::UnsortedGrid);
            }
        }
        Ok(SampleGrid { axes })
    }

    /// `count` equispaced samples of `[lo, hi]`.
    pub fn line(lo: f64, hi: f64, count: usize) -> Result<Self> {
        SampleGrid::new(vec![linspace(lo, hi, count)?])
    }

    /// `count × count` equispaced samples of `[lo, hi]^2`.
    pub fn square(lo: f64, hi: f64, count: usize) -> Result<Self> {
        let a = linspace(lo, hi, count)?;
        SampleGrid::new(vec![a.clone(), a])
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Vec<f64>] {
        &self.axes
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(Vec::len).collect()
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(Vec::len).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Sample `idx` in row-major order (last axis fastest).
    pub fn point(&self, idx: usize) -> Vec<f64> {
        match self.axes.len() {
            1 => vec![self.axes[0][idx]],
            _ => {
                let m = self.axes[1].len();
                vec![self.axes[0][idx / m], self.axes[1][idx % m]]
            }
        }
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|i| self.point(i)).collect()
    }

    /// Whether every axis is equispaced to relative precision `1e-9`.
    pub fn is_uniform(&self) -> bool {
        self.axes.iter().all(|a| {
            if a.len() < 3 {
                return true;
            }
            let step = (a[a.len() - 1] - a[0]) / (a.len() - 1) as f64;
            a.windows(2)
                .all(|w| ((w[1] - w[0]) - step).abs() <= 1e-9 * step.abs().max(1e-300))
        })
    }

    /// Index lists of every grid line (runs along each axis).
    pub(crate) fn lines(&self) -> Vec<Vec<usize>> {
        match self.axes.len() {
            1 => vec![(0..self.axes[0].len()).collect()],
            _ => {
                let (r, c) = (self.axes[0].len(), self.axes[1].len());
                let mut out: Vec<Vec<usize>> = (0..r).map(|i| (0..c).map(|j| i * c + j).collect()).collect();
                out.extend((0..c).map(|j| (0..r).map(|i| i * c + j).collect()));
                out
            }
        }
    }
}

fn linspace(lo: f64, hi: f64, count: usize) -> Result<Vec<f64>> {
    if count == 0 {
        return Err(HomogError::EmptyInput);
    }
    if !(lo.is_finite() && hi.is_finite()) || (count > 1 && hi <= lo) {
        return Err(HomogError::InvalidConfig(format!("range {lo}:{hi}")));
    }
    if count == 1 {
        return Ok(vec![lo]);
    }
    let step = (hi - lo) / (count - 1) as f64;
    Ok((0..count)
        .map(|i| if i + 1 == count { hi } else { lo + step * i as f64 })
        .collect())
}

/// A function sampled on a [`SampleGrid`] with per-sample lower and upper bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledFunction {
    pub label: AxisLabel,
    pub grid: SampleGrid,
    pub value: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub method: String,
    pub spec_digest: String,
}

/// `H̄` sampled on a momentum grid.
pub type EffectiveHamiltonian = SampledFunction;

impl SampledFunction {
    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    pub fn len(&self) -> usize {
        self.value.len()
    }

    pub fn is_empty(&self) -> bool {
        self.value.is_empty()
    }

    pub fn gap(&self, idx: usize) -> f64 {
        self.upper[idx] - self.lower[idx]
    }

    pub fn max_gap(&self) -> f64 {
        (0..self.len()).map(|i| self.gap(i)).fold(0.0, f64::max)
    }

    /// Same samples under another axis name.
    pub fn relabel(&self, label: AxisLabel) -> Self {
        SampledFunction {
            label,
            ..self.clone()
        }
    }

    /// Index and value of the smallest sample.
    pub fn argmin(&self) -> (usize, f64) {
        self.value
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::INFINITY), |b, (i, v)| if v < b.1 { (i, v) } else { b })
    }

    /// Largest violation `v_i - (w v_{i-1} + (1-w) v_{i+1})` of convexity along any grid line,
    /// in excess of twice the local certification gap.
    pub fn convexity_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for line in self.grid.lines() {
            for k in 1..line.len().saturating_sub(1) {
                let (a, b, c) = (line[k - 1], line[k], line[k + 1]);
                let axis = if self.dim() == 1 || line[1] - line[0] == 1 { self.dim() - 1 } else { 0 };
                let (xa, xb, xc) = (
                    self.grid.point(a)[axis],
                    self.grid.point(b)[axis],
                    self.grid.point(c)[axis],
                );
                let w = (xc - xb) / (xc - xa);
                let chord = w * self.value[a] + (1.0 - w) * self.value[c];
                let slack = 2.0 * self.gap(a).max(self.gap(b)).max(self.gap(c));
                worst = worst.max(self.value[b] - chord - slack);
            }
        }
        worst
    }

    fn coordinate_json(&self) -> serde_json::Value {
        match self.dim() {
            1 => json!(self.grid.axes()[0]),
            _ => json!(self.grid.points()),
        }
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        let mut map = serde_json::Map::new();
        map.insert(self.label.as_str().into(), self.coordinate_json());
        map.insert("shape".into(), json!(self.grid.shape()));
        map.insert("value".into(), json!(self.value));
        map.insert("lower".into(), json!(self.lower));
        map.insert("upper".into(), json!(self.upper));
        map.insert("method".into(), json!(self.method));
        map.insert("spec_digest".into(), json!(self.spec_digest));
        serde_json::Value::Object(map)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_json_value()).expect("finite samples serialize")
    }

    /// Columns `label[,label2],value,lower,upper`.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let label = self.label.as_str();
        let mut header: Vec<String> = match self.dim() {
            1 => vec![label.to_string()],
            _ => vec![format!("{label}1"), format!("{label}2")],
        };
        header.extend(["value", "lower", "upper"].map(String::from));
        let io = |e: csv::Error| HomogError::InvalidConfig(format!("CSV: {e}"));
        w.write_record(&header).map_err(io)?;
        for i in 0..self.len() {
            let mut rec: Vec<String> = self.grid.point(i).iter().map(|x| x.to_string()).collect();
            rec.push(self.value[i].to_string());
            rec.push(self.lower[i].to_string());
            rec.push(self.upper[i].to_string());
            w.write_record(&rec).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| HomogError::InvalidConfig(format!("CSV: {e}")))?;
        Ok(String::from_utf8(bytes).expect("CSV is UTF-8"))
    }
}

/// Settings for [`effective_on_grid`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EffectiveConfig {
    pub solver: SolverConfig,
    pub lax_oleinik: LaxOleinikConfig,
    /// Samples per warm-started block; blocks run in parallel.
    pub block: usize,
}

impl Default for EffectiveConfig {
    fn default() -> Self {
        EffectiveConfig {
            solver: SolverConfig::default(),
            lax_oleinik: LaxOleinikConfig::default(),
            block: 8,
        }
    }
}

struct Sample {
    value: f64,
    lower: f64,
    upper: f64,
}

/// `H̄` at every sample of `grid` by `method`.
///
/// Samples are grouped in fixed blocks along the last axis; inside a block each minimax solve
/// starts from its predecessor's corrector. The result does not depend on the thread count.
pub fn effective_on_grid(
    spec: &HamiltonianSpec,
    grid: &SampleGrid,
    method: Method,
    config: &EffectiveConfig,
) -> Result<EffectiveHamiltonian> {
    if grid.dim() != spec.dim() {
        return Err(HomogError::DimensionMismatch {
            expected: spec.dim(),
            got: grid.dim(),
        });
    }
    config.solver.validate()?;
    let block = config.block.max(1);
    let (work_spec, clip) = match (spec, method) {
        (HamiltonianSpec::Truncated { base, profile }, Method::Minimax | Method::Quadrature) => {
            (base.as_ref(), Some(profile.r))
        }
        _ => (spec, None),
    };
    let inner = if method == Method::MinimaxDirect {
        Method::Minimax
    } else {
        method
    };
    if inner == Method::Quadrature && spec.dim() != 1 {
        return Err(HomogError::DimensionNot1(spec.dim()));
    }
    let row = *grid.shape().last().expect("non-empty grid");
    let blocks: Vec<(usize, usize)> = (0..grid.len())
        .step_by(row)
        .flat_map(|start| {
            (start..start + row)
                .step_by(block)
                .map(move |b| (b, (b + block).min(start + row)))
        })
        .collect();
    let solved: Vec<Vec<Sample>> = blocks
        .par_iter()
        .map(|&(from, to)| {
            let mut warm: Option<PeriodicField> = None;
            let mut out = Vec::with_capacity(to - from);
            for idx in from..to {
                let p = grid.point(idx);
                let sample = solve_one(work_spec, &p, inner, config, &mut warm)
                    .map_err(|e| e.at_sample(&p))?;
                out.push(match clip {
                    Some(r) => Sample {
                        value: sample.value.min(r),
                        lower: sample.lower.min(r),
                        upper: sample.upper.min(r),
                    },
                    None => sample,
                });
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    let samples: Vec<Sample> = solved.into_iter().flatten().collect();
    let eff = SampledFunction {
        label: AxisLabel::P,
        grid: grid.clone(),
        value: samples.iter().map(|s| s.value).collect(),
        lower: samples.iter().map(|s| s.lower).collect(),
        upper: samples.iter().map(|s| s.upper).collect(),
        method: method.name().to_string(),
        spec_digest: spec.digest(),
    };
    // H̄ is convex; a truncated spec's H̄ is not, so only convex inputs are checked.
    if spec.metadata().fiber_convex {
        let defect = eff.convexity_defect();
        if defect > 1e-6 {
            return Err(HomogError::ConvexityViolated { defect });
        }
    }
    Ok(eff)
}

fn solve_one(
    spec: &HamiltonianSpec,
    p: &[f64],
    method: Method,
    config: &EffectiveConfig,
    warm: &mut Option<PeriodicField>,
) -> Result<Sample> {
    match method {
        Method::Minimax | Method::MinimaxDirect => {
            let r = homogenize_minimax_from(spec, p, &config.solver, warm.as_ref())?;
            *warm = Some(r.corrector.u.clone());
            Ok(Sample {
                value: r.value,
                lower: r.lower,
                upper: r.value,
            })
        }
        Method::Quadrature => {
            let v = homogenize_1d_quadrature(spec, p[0])?;
            let err = 1e-9 * (1.0 + v.abs());
            Ok(Sample {
                value: v,
                lower: v - err,
                upper: v + err,
            })
        }
        Method::LaxOleinik => {
            let r = homogenize_laxoleinik(spec, p, &config.lax_oleinik)?;
            Ok(Sample {
                value: r.value,
                lower: r.value - r.drift,
                upper: r.value + r.drift,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{FiberFunction, ScalarField};

    #[test]
    fn sample_grid_validation() {
        assert_eq!(SampleGrid::new(vec![]), Err(HomogError::EmptyInput));
        assert_eq!(
            SampleGrid::new(vec![vec![0.0, 2.0, 1.0]]),
            Err(HomogError::UnsortedGrid)
        );
        let g = SampleGrid::line(-2.0, 2.0, 65).unwrap();
        assert_eq!(g.len(), 65);
        assert_eq!(g.point(32), vec![0.0]);
        assert!(g.is_uniform());
        let sq = SampleGrid::square(-1.0, 1.0, 3).unwrap();
        assert_eq!(sq.point(5), vec![0.0, 1.0]);
        assert_eq!(sq.lines().len(), 6);
    }

    #[test]
    fn integrable_on_a_line() {
        let h = HamiltonianSpec::fiber_only(1, FiberFunction::half_square()).unwrap();
        let g = SampleGrid::line(-2.0, 2.0, 65).unwrap();
        let eff = effective_on_grid(&h, &g, Method::Minimax, &EffectiveConfig::default()).unwrap();
        for (i, p) in g.axes()[0].iter().enumerate() {
            assert!((eff.value[i] - 0.5 * p * p).abs() <= 1e-6);
            assert!(eff.lower[i] <= eff.value[i] && eff.value[i] <= eff.upper[i]);
        }
        let csv = eff.to_csv().unwrap();
        assert!(csv.starts_with("p,value,lower,upper\n"));
        let json: serde_json::Value = serde_json::from_str(&eff.to_json()).unwrap();
        assert_eq!(json["p"].as_array().unwrap().len(), 65);
        assert_eq!(json["method"], "minimax");
    }

    #[test]
    fn quadrature_rejects_2d_grids() {
        let h = HamiltonianSpec::fiber_only(2, FiberFunction::half_square()).unwrap();
        let g = SampleGrid::square(-1.0, 1.0, 3).unwrap();
        let r = effective_on_grid(&h, &g, Method::Quadrature, &EffectiveConfig::default());
        assert_eq!(r, Err(HomogError::DimensionNot1(2)));
    }

    #[test]
    fn sample_errors_carry_the_momentum() {
        let h = HamiltonianSpec::mechanical(1, ScalarField::cosine(1.0)).unwrap();
        let g = SampleGrid::line(0.0, 1.0, 2).unwrap();
        let cfg = EffectiveConfig {
            lax_oleinik: LaxOleinikConfig {
                cfl: 0.9,
                ..LaxOleinikConfig::default()
            },
            ..EffectiveConfig::default()
        };
        match effective_on_grid(&h, &g, Method::LaxOleinik, &cfg) {
            Err(HomogError::AtSample { p, source }) => {
                assert_eq!(p, vec![0.0]);
                assert!(matches!(*source, HomogError::CflViolation { .. }));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn concave_samples_are_flagged() {
        let f = SampledFunction {
            label: AxisLabel::P,
            grid: SampleGrid::line(0.0, 2.0, 3).unwrap(),
            value: vec![0.0, 1.0, 0.0],
            lower: vec![0.0, 1.0, 0.0],
            upper: vec![0.0, 1.0, 0.0],
            method: "test".into(),
            spec_digest: String::new(),
        };
        assert!(f.convexity_defect() > 0.0);
    }
}
