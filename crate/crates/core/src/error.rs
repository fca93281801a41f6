use thiserror::Error;

/// Coarse classification used by front ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Validation,
    Numerical,
    Io,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("non-finite sample {value} at node {node} (x = {coords:?}, t = {t})")]
    NonFiniteSample {
        node: usize,
        coords: Vec<f64>,
        t: f64,
        value: f64,
    },
    #[error("hypothesis {hypothesis} violated: {detail}")]
    Hypothesis { hypothesis: &'static str, detail: String },
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("linear solve failed: {0}")]
    LinearSolve(String),
    #[error("Newton iteration failed at time step {step} (t = {t}): {detail}")]
    NewtonDivergence { step: usize, t: f64, detail: String },
    #[error("root-find failed at t = {t}: {detail}")]
    RootFind { t: f64, detail: String },
    #[error("ill-conditioned observation matrix at t = {t}: condition number {condition:e}")]
    IllConditioned { t: f64, condition: f64 },
    #[error("kernel construction failed: {0}")]
    KernelConstruction(String),
    #[error("Picard iteration not contracting: {0}")]
    NonContraction(String),
    #[error("malformed data: {0}")]
    Format(String),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::InvalidInput(_)
            | Error::Domain(_)
            | Error::NonFiniteSample { .. }
            | Error::Hypothesis { .. }
            | Error::Precondition(_) => ErrorCategory::Validation,
            Error::LinearSolve(_)
            | Error::NewtonDivergence { .. }
            | Error::RootFind { .. }
            | Error::IllConditioned { .. }
            | Error::KernelConstruction(_)
            | Error::NonContraction(_) => ErrorCategory::Numerical,
            Error::Format(_) | Error::Io(_) | Error::Csv(_) => ErrorCategory::Io,
        }
    }
}
