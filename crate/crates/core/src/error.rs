use alloc::string::String;

/// Failures raised while building or evaluating the geometric model.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("unknown catalog id `{0}`")]
    UnknownCatalog(String),
    #[error("commutator leaves the span: residual {residual:.3e} exceeds {tol:.3e}")]
    NotClosed { residual: f64, tol: f64 },
    #[error("trace form is not positive-definite on the span (smallest eigenvalue {min_eigenvalue:.3e})")]
    Degenerate { min_eigenvalue: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid subspace: {0}")]
    InvalidSubspace(String),
    #[error("vector has a k-component of norm {0:.3e}")]
    NotInP(f64),
    #[error("vector is not horizontal (off-m component {0:.3e})")]
    NotHorizontal(f64),
    #[error("vector is not vertical (off-q component {0:.3e})")]
    NotVertical(f64),
    #[error("zero vector where a direction is required")]
    ZeroVector,
    #[error("finite-difference step {0:e} is below 1e-9")]
    StepTooSmall(f64),
    #[error("not a flat pair: |A*_x nu0| / |nu0| = {0:.3e}")]
    InvalidFlatPair(f64),
    #[error("inadmissible vertical tensor: {0}")]
    InvalidP(String),
}

pub type Result<T> = core::result::Result<T, Error>;
