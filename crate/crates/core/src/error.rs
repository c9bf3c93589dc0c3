use thiserror::Error;

/// Errors raised by model construction, spectral solvers and verifiers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("site {site:?} lies outside the lattice {axis_lengths:?}")]
    SiteOutOfRange {
        site: Vec<usize>,
        axis_lengths: Vec<usize>,
    },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("local term is not Hermitian (deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("local term flagged as projector but ||M^2 - M|| = {deviation:.3e}")]
    NotProjector { deviation: f64 },

    #[error("term support contains a repeated site")]
    RepeatedSite,

    #[error("operator is not positive semidefinite: min eigenvalue {min_eigenvalue:.3e} below -{tolerance:.3e}")]
    NotPsd { min_eigenvalue: f64, tolerance: f64 },

    #[error("spectral gap undefined: operator has no eigenvalue above the zero threshold")]
    UndefinedGap,

    #[error("kernel is ill-separated: smallest nonzero eigenvalue {gap:.3e} < 10 x threshold {threshold:.3e}")]
    IllSeparatedKernel { gap: f64, threshold: f64 },

    #[error("Krylov solver did not converge: {0}")]
    NoConvergence(String),

    #[error("eigendecomposition failed")]
    Eigendecomposition,

    #[error("Hilbert space too large for this operation: {0}")]
    TooLarge(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("layer commutation check failed between terms {0} and {1}")]
    LayerCommutation(usize, usize),

    #[error("model file: {0}")]
    ModelFile(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
