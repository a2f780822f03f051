use thiserror::Error;

use crate::datamodel::Dimension;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("matrix is singular or not positive definite (smallest pivot {smallest_pivot:e})")]
    Singular { smallest_pivot: f64 },

    #[error("eigen solver did not converge after {sweeps} sweeps")]
    NoConvergence { sweeps: usize },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("no rows")]
    NoRows,

    #[error("degenerate design: {0}")]
    DegenerateDesign(String),

    #[error("F is undefined: within-group variance is zero for {0}")]
    UndefinedF(String),

    #[error("column {0} has zero variance")]
    DegenerateColumn(Dimension),

    #[error("software {0:?} has no qualitative type")]
    MissingType(String),

    #[error("missing agreement cells: {}", format_cells(.0))]
    MissingCells(Vec<(String, Dimension)>),

    #[error(
        "no score dimension has nonsingular covariance in every group; homogeneity is untestable"
    )]
    UntestableHomogeneity,

    #[error("held-out fit without case {case:?} is singular")]
    HeldOutSingular { case: String },

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn in_stage(self, stage: &'static str) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// Data and validation failures, as opposed to I/O problems.
    pub fn is_data_error(&self) -> bool {
        match self {
            Error::Io(_) | Error::Json(_) => false,
            Error::Stage { source, .. } => source.is_data_error(),
            _ => true,
        }
    }
}

fn format_cells(cells: &[(String, Dimension)]) -> String {
    cells
        .iter()
        .map(|(sw, d)| format!("{sw}/{}", d.column_name()))
        .collect::<Vec<_>>()
        .join(", ")
}
