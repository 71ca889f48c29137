use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised anywhere in the estimation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: row {row}, column {column}: {message}")]
    Load {
        path: String,
        row: usize,
        column: String,
        message: String,
    },

    #[error("missing column `{column}` in {path}")]
    MissingColumn { path: String, column: String },

    #[error("no reference intake for nutrient `{0}`")]
    UnknownNutrient(String),

    #[error("empty (week, type) cells: {}", format_gaps(.0))]
    MissingCells(Vec<(u32, String)>),

    #[error("collinear regressors: {}", .0.join(", "))]
    RankDeficient(Vec<String>),

    #[error("attribute sets differ: {}", .0.join(", "))]
    AttributeMismatch(Vec<String>),

    #[error("residual covariance is singular")]
    SingularCovariance,

    #[error("FGLS did not converge after {iterations} iterations (last changes: {trace})")]
    NonConvergence { iterations: usize, trace: String },

    #[error("unknown distance `{0}`")]
    UnknownDistance(String),

    #[error("dimension mismatch for {what}: expected {expected}, got {actual}")]
    DimensionMismatch {
        what: String,
        expected: usize,
        actual: usize,
    },

    #[error("{0}")]
    Invalid(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn dims(what: impl Into<String>, expected: usize, actual: usize) -> Self {
        Error::DimensionMismatch {
            what: what.into(),
            expected,
            actual,
        }
    }

    /// Stable short identifier, used by the CLI's machine-readable error line.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Load { .. } => "load",
            Error::MissingColumn { .. } => "missing_column",
            Error::UnknownNutrient(_) => "unknown_nutrient",
            Error::MissingCells(_) => "missing_cells",
            Error::RankDeficient(_) => "rank_deficient",
            Error::AttributeMismatch(_) => "attribute_mismatch",
            Error::SingularCovariance => "singular_covariance",
            Error::NonConvergence { .. } => "non_convergence",
            Error::UnknownDistance(_) => "unknown_distance",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::Invalid(_) => "invalid",
            Error::Io { .. } => "io",
            Error::Csv(_) => "csv",
            Error::Json(_) => "json",
        }
    }
}

fn format_gaps(gaps: &[(u32, String)]) -> String {
    gaps.iter()
        .map(|(w, t)| format!("week {w}/{t}"))
        .collect::<Vec<_>>()
        .join(", ")
}
