use thiserror::Error;

pub type Result<T, E = LabError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("field contains non-finite samples")]
    NonFinite,
    #[error("spectrum violates Hermitian symmetry (relative defect {0:.3e})")]
    NotHermitian(f64),
    #[error("axis {axis} out of range for a {dim}-dimensional grid")]
    AxisOutOfRange { axis: usize, dim: usize },
    #[error("invalid exponent: {0}")]
    InvalidExponent(String),
    #[error("grid mismatch between operands")]
    GridMismatch,
    #[error("component mismatch: expected {expected}, found {found}")]
    ComponentMismatch { expected: usize, found: usize },
    #[error("dyadic block {j} outside resolved range [{j_min}, {j_max}]")]
    BlockOutOfRange { j: i32, j_min: i32, j_max: i32 },
    #[error("grid too coarse: {0}")]
    TooCoarse(String),
    #[error("index constraint violated for {id}: {detail}")]
    ConstraintViolated { id: String, detail: String },
    #[error("unknown estimate id {0}")]
    UnknownEstimate(String),
    #[error("degenerate ratio: {0}")]
    Degenerate(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("density {min_rho:.3e} below vacuum guard at t = {t}")]
    VacuumGuard { t: f64, min_rho: f64 },
    #[error("non-finite state at t = {t}")]
    NonFiniteState { t: f64 },
    #[error("time step {dt} exceeds stability bound {bound}")]
    CflViolation { dt: f64, bound: f64 },
    #[error("ellipticity violated: {0}")]
    Ellipticity(String),
    #[error("pressure law rejected: {0}")]
    PressureLaw(String),
    #[error("density {rho} outside admissible band [{lo}, {hi}]")]
    OutOfBand { rho: f64, lo: f64, hi: f64 },
    #[error("not enough samples: {0}")]
    TooFewSamples(String),
    #[error("input not mean-zero (relative mean {0:.3e})")]
    NotMeanZero(f64),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("unresolvable oscillation: {0}")]
    Unresolvable(String),
    #[error("{phase}: {source}")]
    Phase {
        phase: String,
        #[source]
        source: Box<LabError>,
    },
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl LabError {
    pub fn in_phase(self, phase: impl Into<String>) -> Self {
        LabError::Phase { phase: phase.into(), source: Box::new(self) }
    }

    /// Innermost error, looking through run-phase wrappers.
    pub fn root(&self) -> &LabError {
        match self {
            LabError::Phase { source, .. } => source.root(),
            other => other,
        }
    }
}
