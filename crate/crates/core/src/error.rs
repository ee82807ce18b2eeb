use thiserror::Error;

/// Every failure a construction or an operation can report.
///
/// Law violations are never errors: checkers return them as data in a
/// [`LawReport`](crate::transport::LawReport).
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid interval [{lo}, {hi}]")]
    InvalidInterval { lo: f64, hi: f64 },
    #[error("interval [{lo}, {hi}] is not contained in the path domain [{domain_lo}, {domain_hi}]")]
    IntervalNotContained {
        lo: f64,
        hi: f64,
        domain_lo: f64,
        domain_hi: f64,
    },
    #[error("reparameterization target does not match the path domain")]
    DomainMismatch,
    #[error("path domain is not [0, 1]; supply an orientation-reversing map explicitly")]
    NonCanonicalDomain,
    #[error("end of the first path does not coincide with the beginning of the second")]
    EndpointMismatch,
    #[error("chi parameter incompatible with the paths: {0}")]
    ChiIncompatible(String),
    #[error("invalid reparameterization: {0}")]
    InvalidReparameterization(String),
    #[error("invalid path: {0}")]
    InvalidPath(String),
    #[error("path lives in base `{path}` but the bundle base is `{bundle}`")]
    BaseMismatch { path: String, bundle: String },

    #[error("point {0} is not in the base space")]
    PointNotInBase(String),
    #[error("fibre elements lie over different base points")]
    BasePointMismatch,
    #[error("operation requires a {expected} bundle")]
    WrongBundleKind { expected: &'static str },
    #[error("operation requires a {expected} fibre")]
    WrongFibreKind { expected: &'static str },
    #[error("invalid bundle: {0}")]
    InvalidBundle(String),

    #[error("parameter {0} is outside the path domain")]
    ParameterOutOfDomain(f64),
    #[error("fibre element is not over the path point at parameter {0}")]
    ElementNotOverPathPoint(f64),
    #[error("section is undefined at a point of the path")]
    SectionUndefinedOnPath,
    #[error("element lies on none of the defining sections")]
    ElementNotOnAnySection,

    #[error("parameter {0} is not on the factorization grid")]
    ParameterNotInFamily(f64),
    #[error("factorizations describe different transports (deviation {0:e})")]
    NotSameTransport(f64),
    #[error("gauge map depends on the parameter (deviation {0:e})")]
    GaugeInconsistent(f64),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("map is not invertible")]
    NotInvertible,

    #[error("base point of the element is not on the path")]
    PointNotOnPath,
    #[error("anchor parameter {0} is not in the occurrence set")]
    AnchorNotInOccurrenceSet(f64),
    #[error("lift assignment violates re-anchoring consistency (deviation {0:e})")]
    LiftInconsistent(f64),
    #[error("lifting is not unique along the path (deviation {0:e})")]
    HypothesisNotSatisfied(f64),

    #[error("parallelization violates the cocycle law (deviation {0:e})")]
    CocycleViolation(f64),
    #[error("consecutive nodes {from} -> {to} are not joined by an edge")]
    PathNotEdgeConsistent { from: String, to: String },
    #[error("path leaves the admitted chart region at theta = {0}")]
    ChartExit(f64),
    #[error("connection coefficients are not finite at ({0}, {1})")]
    NonFiniteCoefficients(f64, f64),
    #[error("loop is not closed")]
    LoopNotClosed,

    #[error("unknown instance `{0}`")]
    UnknownInstance(String),
    #[error("unknown law `{0}`")]
    UnknownLaw(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("json: {0}")]
    Json(String),
    #[error("io: {0}")]
    Io(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e.to_string())
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
