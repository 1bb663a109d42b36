//! Error types shared across the crate.

use thiserror::Error;

/// Errors produced by model construction, spectral analysis, Krylov/Nielsen
/// computations and the lattice solvers.
#[derive(Debug, Error)]
pub enum Error {
    /// Dimension out of the supported range (e.g. `D = 0`, too many spin sites).
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    /// Malformed or inconsistent input (unnormalized seed, mismatched lengths, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A numerical procedure failed to meet its accuracy contract.
    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    /// The energy spectrum has (near-)degenerate levels; the all-time average
    /// and the q-matrix are only defined for nondegenerate spectra.
    #[error("degenerate spectrum: {0}")]
    DegenerateSpectrum(String),

    /// A matrix expected to be positive semidefinite is not.
    #[error("matrix is not positive semidefinite: {0}")]
    NotPsd(String),

    /// Lattice basis too ill-conditioned to reduce reliably.
    #[error("ill-conditioned basis: {0}")]
    IllConditioned(String),

    /// Exact enumeration requested above the configured dimension cap.
    #[error("solver cap exceeded: {0}")]
    SolverCap(String),

    /// A requested computation exceeds a resource bound (e.g. brute-force box).
    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),

    /// Bad run configuration or CLI usage.
    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code for the CLI: 1 usage/config, 2 hard numerical
    /// failure, 3 resource/cap.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidDimension(_)
            | Error::InvalidInput(_)
            | Error::Config(_)
            | Error::Io(_)
            | Error::Json(_) => 1,
            Error::NumericalFailure(_)
            | Error::DegenerateSpectrum(_)
            | Error::NotPsd(_)
            | Error::IllConditioned(_) => 2,
            Error::SolverCap(_) | Error::ResourceLimit(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
