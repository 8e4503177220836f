use thiserror::Error;

/// Everything that can go wrong inside the toolkit.
///
/// Variants fall into three families which the command-line front end maps
/// onto distinct exit codes: contract violations on the inputs
/// ([`ErrorKind::Validation`]), numerical accuracy failures that mean the
/// grid or truncation is too small for the request ([`ErrorKind::Numerical`]),
/// and I/O problems ([`ErrorKind::Io`]).
#[derive(Debug, Error)]
pub enum Error {
    #[error("index out of range: level {level} not below truncation {dim}")]
    OutOfRange { level: usize, dim: usize },

    #[error("degenerate space: dimension {dim} is below the minimum {min}")]
    DegenerateSpace { dim: usize, min: usize },

    #[error("length scale mismatch: {left} vs {right}")]
    ScaleMismatch { left: f64, right: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("axis mismatch: {0}")]
    AxisMismatch(String),

    #[error("truncation contamination: {0}")]
    Truncation(String),

    #[error("accuracy violation: {what} (measured {measured:e}, allowed {allowed:e})")]
    Accuracy {
        what: String,
        measured: f64,
        allowed: f64,
    },

    #[error("grid coverage: {what} (mass deficit {deficit:e})")]
    MassDeficit { what: String, deficit: f64 },

    #[error("unitarity violation: norm drift {drift:e}")]
    Unitarity { drift: f64 },

    #[error("unreliable supremum: eigenvector concentrates at level {level:.2} of {dim}")]
    UnreliableSup { level: f64, dim: usize },

    #[error("invalid kernel: {0}")]
    InvalidKernel(String),

    #[error("conditioning failed: region probability {p_region:e}")]
    Conditioning { p_region: f64 },

    #[error("range error: {0}")]
    Range(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Validation,
    Numerical,
    Io,
}

impl Error {
    pub fn invalid(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.into(),
            reason: reason.into(),
        }
    }

    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::OutOfRange { .. }
            | Error::DegenerateSpace { .. }
            | Error::ScaleMismatch { .. }
            | Error::InvalidParameter { .. }
            | Error::AxisMismatch(_)
            | Error::InvalidKernel(_)
            | Error::Parse(_)
            | Error::Json(_)
            | Error::Range(_) => ErrorKind::Validation,
            Error::Truncation(_)
            | Error::Accuracy { .. }
            | Error::MassDeficit { .. }
            | Error::Unitarity { .. }
            | Error::UnreliableSup { .. }
            | Error::Conditioning { .. } => ErrorKind::Numerical,
            Error::Io { .. } => ErrorKind::Io,
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self.kind() {
            ErrorKind::Validation => 1,
            ErrorKind::Numerical => 2,
            ErrorKind::Io => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
