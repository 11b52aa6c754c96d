use num_complex::Complex64;
use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed model document: {0}")]
    Parse(String),

    #[error("dimension mismatch in {matrix}: {detail}")]
    Dimension { matrix: &'static str, detail: String },

    #[error("non-finite entry in {matrix} at ({row}, {col})")]
    NonFinite {
        matrix: &'static str,
        row: usize,
        col: usize,
    },

    #[error("invalid station partition: {0}")]
    Partition(String),

    #[error("eigenvalue computation did not converge")]
    EigenSolver,

    #[error("{0} is not an eigenvalue of A")]
    NotAnEigenvalue(Complex64),

    #[error("mode {sigma} has multiplicity {multiplicity}; only unrepeated modes are supported")]
    RepeatedMode {
        sigma: Complex64,
        multiplicity: usize,
    },

    #[error("internal inconsistency: {0}")]
    Internal(String),

    #[error("{stations} stations exceed the subset enumeration cap of {cap}")]
    BudgetExceeded { stations: usize, cap: usize },

    #[error("no bipartition is admissible at epsilon = {epsilon:e} (smallest admissible epsilon: {minimal:e})")]
    NoCandidate { epsilon: f64, minimal: f64 },

    #[error("bipartition {0} is not admissible at the requested epsilon")]
    NotACandidate(String),

    #[error("resemblant fixed-mode construction requires a real mode, got {0}")]
    ComplexMode(Complex64),

    #[error("perturbation verification failed: {0}")]
    Verification(String),

    #[error("invalid interaction pattern: {0}")]
    Pattern(String),

    #[error("I - D*K stayed numerically singular after {0} resampling attempts")]
    FeedbackSingular(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
