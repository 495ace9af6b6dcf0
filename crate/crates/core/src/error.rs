use thiserror::Error;

/// Every failure mode of the toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum HomogError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid field: {0}")]
    InvalidField(String),
    #[error("invalid Hamiltonian: {0}")]
    InvalidSpec(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("momentum {p:?} lies outside the tabulated fiber box [-{p_max}, {p_max}]^n")]
    OutOfFiberBox { p: Vec<f64>, p_max: f64 },
    #[error("Legendre transform does not stabilize: {0}")]
    NotSuperlinear(String),
    #[error("truncation width must be positive, got {0}")]
    InvalidWidth(f64),
    #[error("oscillation requested on an unbounded region")]
    UnboundedRegion,
    #[error("Hamiltonian is not fiberwise convex")]
    NonConvexSpec,
    #[error("minimax did not converge at p = {p:?}: value {value}, gap {gap}")]
    NoConvergence { p: Vec<f64>, value: f64, gap: f64 },
    #[error("operation needs a one-dimensional Hamiltonian, got n = {0}")]
    DimensionNot1(usize),
    #[error("operation does not support this Hamiltonian: {0}")]
    UnsupportedSpec(String),
    #[error("fiber root bracketing failed at q = {q} (level {level})")]
    RootBracketingFailure { q: f64, level: f64 },
    #[error("CFL number {cfl} exceeds the stability bound {limit}")]
    CflViolation { cfl: f64, limit: f64 },
    #[error("Hamilton-Jacobi march blew up at t = {t}")]
    UnstableBlowup { t: f64 },
    #[error("sample at p = {p:?} failed: {source}")]
    AtSample {
        p: Vec<f64>,
        #[source]
        source: Box<HomogError>,
    },
    #[error("sampled effective Hamiltonian violates convexity by {defect:e}")]
    ConvexityViolated { defect: f64 },
    #[error("empty input")]
    EmptyInput,
    #[error("grid is not uniform")]
    NonUniformGrid,
    #[error("output grid is not sorted")]
    UnsortedGrid,
    #[error("minimum attained on the sample boundary at p = {p:?}; enlarge the range")]
    MinimumOnBoundary { p: Vec<f64> },
    #[error("winding h*M*tau = {0} is not an integer")]
    InfeasibleWinding(f64),
    #[error("Hamiltonian is not compactly supported")]
    NotCompactlySupported,
    #[error("quadrature did not reach the requested tolerance (last change {0:e})")]
    QuadratureNotConverged(f64),
    #[error("extension exceeds {eps} outside the unit ball (found {found})")]
    ExtensionNotVanishing { eps: f64, found: f64 },
    #[error("sampled range never reaches the plateau: {0}")]
    PlateauNotReached(String),
    #[error("region is invalid: {0}")]
    InvalidRegion(String),
    #[error("delta = {0} must lie in (0, 1/3)")]
    DeltaTooLarge(f64),
    #[error("invalid bump profile: {0}")]
    InvalidProfile(String),
    #[error("cutoff collar wraps around the torus for delta = {0}")]
    CutoffOverlap(f64),
    #[error("sufficiency condition fails: c = {c} is not below delta^n C k / V_n = {threshold}")]
    SufficiencyViolated { c: f64, threshold: f64 },
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
}

impl HomogError {
    pub(crate) fn at_sample(self, p: &[f64]) -> Self {
        HomogError::AtSample {
            p: p.to_vec(),
            source: Box::new(self),
        }
    }

    /// Strips `AtSample` wrappers.
    pub fn root_cause(&self) -> &HomogError {
        match self {
            HomogError::AtSample { source, .. } => source.root_cause(),
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, HomogError>;
