use std::fmt;

use crate::optimizer::OptimizeReport;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Invalid arguments, inconsistent sizes, mismatched grids.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("conjugate gradient did not converge{} after {iterations} iterations (relative residual {residual:.3e})", SlabSuffix(*.slab))]
    LinearSolver {
        iterations: usize,
        residual: f64,
        slab: Option<usize>,
    },

    #[error("Newton iteration failed on slab {slab} (residual history {history:?})")]
    Newton { slab: usize, history: Vec<f64> },

    #[error("eigen solver stagnated after {iterations} iterations (residual {residual:.3e})")]
    Eigen { iterations: usize, residual: f64 },

    #[error("optimizer did not converge within {} iterations (last residual {:.3e})", .0.iterations(), .0.last_residual())]
    NotConverged(Box<OptimizeReport>),

    #[error("line search stalled at iteration {}", .0.iterations())]
    Stalled(Box<OptimizeReport>),

    #[error("parse error at line {line}, field `{field}`: {message}")]
    Parse {
        line: usize,
        field: String,
        message: String,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// Machine-readable category, printed by the command line front end.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::LinearSolver { .. } | Error::Newton { .. } | Error::Eigen { .. } => "solver",
            Error::NotConverged(_) => "not-converged",
            Error::Stalled(_) => "stalled",
            Error::Parse { .. } => "parse",
            Error::Io(_) => "io",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Domain(_) => 2,
            Error::Parse { .. } => 3,
            Error::LinearSolver { .. } | Error::Newton { .. } | Error::Eigen { .. } => 4,
            Error::NotConverged(_) | Error::Stalled(_) => 5,
            Error::Io(_) => 6,
        }
    }

    pub(crate) fn on_slab(self, slab: usize) -> Self {
        match self {
            Error::LinearSolver {
                iterations,
                residual,
                ..
            } => Error::LinearSolver {
                iterations,
                residual,
                slab: Some(slab),
            },
            other => other,
        }
    }
}

struct SlabSuffix(Option<usize>);

impl fmt::Display for SlabSuffix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Some(n) => write!(f, " on slab {n}"),
            None => Ok(()),
        }
    }
}
