use std::path::PathBuf;

use thiserror::Error;

use crate::solver::ConvergenceReport;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid material: {0}")]
    InvalidMaterial(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("degenerate element {element} (signed area {area:e})")]
    DegenerateElement { element: usize, area: f64 },

    #[error("{path}:{line}: {msg}")]
    Parse { path: String, line: usize, msg: String },

    #[error("Dirichlet boundary is empty: at least one edge must be labeled GAMMA0")]
    EmptyDirichlet,

    #[error("linear solver did not converge after {} iterations (relative residual {:e})", report.iterations, report.relative_residual)]
    NotConverged { report: ConvergenceReport, best: Vec<f64> },

    #[error("dense solve rejected: {0}")]
    DenseSolve(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
