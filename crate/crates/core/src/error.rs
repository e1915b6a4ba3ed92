use std::path::PathBuf;

use thiserror::Error;

use crate::formulation::Plan;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("mesh has no vertices left after removing blocked cells")]
    EmptyMesh,

    #[error("unknown vertex {0}")]
    UnknownVertex(u32),

    #[error("invalid scenario field `{field}`: {message}")]
    InvalidScenario { field: String, message: String },

    #[error("instance generation failed: {0}")]
    GenerationFailed(String),

    #[error("parse error at line {line}, field `{field}`: {message}")]
    Parse {
        line: usize,
        field: String,
        message: String,
    },

    #[error("unsupported format version {found} (expected {expected})")]
    UnsupportedVersion { found: u32, expected: u32 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("target unreachable by every agent within the horizon")]
    InfeasibleByReduction,

    #[error("no feasible plan exists")]
    Infeasible,

    #[error("resource limit reached: {reason}")]
    ResourceLimit {
        reason: String,
        incumbent: Option<Box<Plan>>,
    },

    #[error("heuristic found no feasible plan")]
    HeuristicInfeasible,

    #[error("invalid solution: {0}")]
    InvalidSolution(String),

    #[error("external solver failed: {0}")]
    ExternalSolver(String),

    #[error("instance refused: {0}")]
    Refused(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::InvalidScenario {
            field: field.into(),
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
            Error::Infeasible | Error::InfeasibleByReduction | Error::HeuristicInfeasible => 2,
            Error::ResourceLimit { .. } => 3,
            _ => 1,
        }
    }
}
