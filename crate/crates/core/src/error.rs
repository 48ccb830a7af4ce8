use thiserror::Error;

/// Errors produced anywhere in the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter error: {0}")]
    Parameter(String),

    #[error("no admissible hole center: {0}")]
    EmptyLayout(String),

    #[error("resolution error: {0}")]
    Resolution(String),

    #[error("meshing error: {message} (worst cell {worst_cell}, radius ratio {worst_quality:.4})")]
    Meshing {
        message: String,
        worst_cell: usize,
        worst_quality: f64,
    },

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("nonlinear iteration did not converge after {} iterations (last residual {:.3e})", .history.len(), .history.last().copied().unwrap_or(f64::NAN))]
    NonConvergence { history: Vec<f64> },

    #[error("linear solver error: {0}")]
    Solver(String),

    #[error("eigen-solver stagnation: {0}")]
    Eigen(String),

    #[error("infeasible divergence data: {0}")]
    Infeasible(String),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Coarse classification used for process exit codes.
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Parameter(_)
            | Error::EmptyLayout(_)
            | Error::Resolution(_)
            | Error::Configuration(_)
            | Error::Format(_) => ErrorKind::Config,
            Error::Meshing { .. }
            | Error::NonConvergence { .. }
            | Error::Solver(_)
            | Error::Eigen(_)
            | Error::Infeasible(_) => ErrorKind::Numerical,
            Error::Io(_) => ErrorKind::Io,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Numerical,
    Io,
}

impl ErrorKind {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorKind::Config => 2,
            ErrorKind::Numerical => 3,
            ErrorKind::Io => 4,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ErrorKind::Config => "config",
            ErrorKind::Numerical => "numerical",
            ErrorKind::Io => "io",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
