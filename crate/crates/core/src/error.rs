use thiserror::Error;

use crate::scenario::NodeId;

/// Errors surfaced by the contact-plan pipeline.
#[derive(Debug, Error)]
pub enum CpdError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("scenario parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid `{field}`: {message}")]
    Invalid { field: String, message: String },

    #[error("walker constellation: {total} satellites cannot be split into {planes} planes")]
    WalkerDivisibility { total: u32, planes: u32 },

    #[error("logical user {0} has no members")]
    EmptyLogicalUser(NodeId),

    #[error("unknown node {0}")]
    UnknownNode(NodeId),

    #[error("big-M constant {m_big} must exceed the slot count {slots}")]
    BigMTooSmall { m_big: u32, slots: u32 },

    #[error("model infeasible at fsa {fsa}, superframe {superframe}; families implicated: {families:?}")]
    Infeasible {
        fsa: u32,
        superframe: u32,
        families: Vec<String>,
    },

    #[error("solver hit its limit without an incumbent at fsa {fsa}, superframe {superframe}")]
    NoIncumbent { fsa: u32, superframe: u32 },

    #[error("solver backend failure: {0}")]
    Solver(String),

    #[error("no solution to extract: status {0}")]
    NoSolution(String),

    #[error("solution for user {0} lacks a deficit value")]
    MissingDeficit(NodeId),

    #[error("scheduler capability: {0}")]
    Capability(String),

    #[error("plan csv: {0}")]
    PlanCsv(String),

    #[error("{count} failures over the horizon; first: {first}")]
    Horizon { count: usize, first: Box<CpdError> },
}

impl CpdError {
    pub fn invalid(field: impl Into<String>, message: impl Into<String>) -> Self {
        CpdError::Invalid {
            field: field.into(),
            message: message.into(),
        }
    }

    /// Stable machine-readable category, used for error JSON and exit codes.
    pub fn kind(&self) -> &'static str {
        match self {
            CpdError::Io { .. } => "io",
            CpdError::Parse { .. } => "parse",
            CpdError::Invalid { .. }
            | CpdError::WalkerDivisibility { .. }
            | CpdError::EmptyLogicalUser(_)
            | CpdError::UnknownNode(_)
            | CpdError::BigMTooSmall { .. } => "config",
            CpdError::Infeasible { .. } => "infeasible",
            CpdError::NoIncumbent { .. } => "no-incumbent",
            CpdError::Solver(_) | CpdError::NoSolution(_) | CpdError::MissingDeficit(_) => {
                "solver"
            }
            CpdError::Capability(_) => "capability",
            CpdError::PlanCsv(_) => "parse",
            CpdError::Horizon { first, .. } => first.kind(),
        }
    }
}

pub type Result<T, E = CpdError> = std::result::Result<T, E>;
