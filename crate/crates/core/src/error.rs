use thiserror::Error;

/// Whether a failure reflects bad input or a computation that contradicts
/// the theory (the latter is a regression alarm).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Input,
    Inconsistency,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("zero matrix has no rank-one factorization")]
    ZeroMatrix,

    #[error("tuple is not in general position ({0})")]
    GeneralPosition(String),

    #[error("degenerate quintuple: invariant {name} = {value} is too close to 0 or 1")]
    DegenerateQuintuple { name: &'static str, value: String },

    #[error("borderline numerical decision: {0}")]
    Borderline(String),

    #[error("quintuple is not regular (class {0}); no unique sixth product state")]
    NotRegular(String),

    #[error("span has dimension {found}, expected {expected}")]
    SpanDimension { expected: usize, found: usize },

    #[error("symbol {found} is not NPNPpP")]
    WrongSymbol { found: String },

    #[error("invariants are not real")]
    NonRealInvariants,

    #[error("symbol {0} is not a UPB symbol")]
    NotUpbSymbol(String),

    #[error("parameter out of domain: {0}")]
    OutOfDomain(String),

    #[error("quintuple is not orthonormal (Gram deviation {0:e})")]
    NonOrthogonal(f64),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("subspace is not of UPB type")]
    NotUpbType,

    #[error("found {found} product states in a 5-dimensional subspace (at most 6 are possible)")]
    BezoutViolation { found: usize },

    #[error("expected 6 product states in the kernel, found {found}")]
    KernelProductCount { found: usize },

    #[error("state is not a rank-4 PPT entangled state: {0}")]
    NotPptes(String),

    #[error("reconstruction residual {residual:e} exceeds tolerance {tolerance:e}")]
    ResidualTooLarge { residual: f64, tolerance: f64 },

    #[error("witness is degenerate: epsilon = {0:e} (the complement contains a product state)")]
    DegenerateWitness(f64),

    #[error("fixture {name}: expected {expected} product states, found {found}")]
    FixtureMismatch {
        name: String,
        expected: usize,
        found: usize,
    },

    #[error("reconstruction failed at {stage}: {source}")]
    Reconstruction {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::BezoutViolation { .. }
            | Error::FixtureMismatch { .. }
            | Error::Reconstruction { .. } => ErrorKind::Inconsistency,
            _ => ErrorKind::Input,
        }
    }

    pub(crate) fn at_stage(self, stage: &'static str) -> Error {
        Error::Reconstruction {
            stage,
            source: Box::new(self),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
