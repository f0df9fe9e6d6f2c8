use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid {field}: {message}")]
    Validation { field: &'static str, message: String },

    #[error("unstable: AoI infinite (xi = {xi}, critical xi = {xi_c})")]
    Unstable { xi: f64, xi_c: f64 },

    #[error("unstable queue: arrival rate {xi} is not below service rate {service}")]
    UnstableQueue { xi: f64, service: f64 },

    #[error("{what} did not converge after {iterations} iterations (residual {residual:e}){hint}")]
    NonConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
        hint: &'static str,
    },

    #[error("no non-empty deployment after {attempts} resampling attempts (mean point count {mean})")]
    EmptyDeployment { attempts: u32, mean: f64 },

    #[error("unknown figure `{0}` (valid: cdf, stability, aoi_vs_xi, aoi_vs_p, aoi_vs_lambda)")]
    UnknownFigure(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn validation(field: &'static str, message: impl Into<String>) -> Self {
        Error::Validation {
            field,
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Validation { .. } | Error::Parse(_) | Error::UnknownFigure(_) => 2,
            Error::NonConvergence { .. }
            | Error::Unstable { .. }
            | Error::UnstableQueue { .. }
            | Error::EmptyDeployment { .. } => 3,
            Error::Io { .. } | Error::Csv(_) | Error::Json(_) => 4,
        }
    }
}
