use thiserror::Error;

/// Errors raised anywhere in the library.
///
/// [`Error::is_config`] separates bad inputs from construction failures; the
/// CLI maps the two classes to different exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("flat body: covariance eigenvalues span [{min_eig:e}, {max_eig:e}]")]
    FlatBody { min_eig: f64, max_eig: f64 },

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NonSymmetric(f64),

    #[error("empty slab: no interior point remains")]
    EmptySlab,

    #[error("unbounded in direction {0:?}")]
    Unbounded(Vec<f64>),

    #[error("containment check failed: {0}")]
    Containment(String),

    #[error("no jolly-good triplet after {attempts} candidates (best fraction {best_fraction:.4})")]
    NoTriplet { attempts: usize, best_fraction: f64 },

    #[error("cover construction failed; {} uncovered directions, e.g. {:?}", .uncovered.len(), .uncovered.first())]
    CoverFailure { uncovered: Vec<Vec<f64>> },

    #[error("minimum-norm point has norm {norm:.6} > gamma {gamma:.6}")]
    MinNormTooLarge { norm: f64, gamma: f64 },

    #[error("re-verification failed: {0}")]
    Reverification(String),

    #[error("did not converge: {0}")]
    NonConvergence(String),

    #[error("fiber sampling failed: {0}")]
    EmptyFiber(String),

    #[error("observation inconsistent with every scenario at round {t}")]
    InconsistentObservation { t: usize },

    #[error("net index {0} has zero posterior mass")]
    UndefinedIndex(usize),

    #[error("exploration failure: {0}")]
    ExplorationFailure(String),

    #[error("conic solver: {0}")]
    Solver(String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by the caller's input rather than by a
    /// construction that was started and then failed.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::DimensionMismatch { .. }
                | Error::InvalidArgument(_)
                | Error::Precondition(_)
                | Error::NonSymmetric(_)
                | Error::Io(_)
                | Error::Json(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}
