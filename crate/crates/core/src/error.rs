//! Error types shared across the simulator.

use thiserror::Error;

use crate::server::VmId;

#[derive(Debug, Error)]
pub enum SimError {
    /// Rejected configuration, trace, or argument values.
    #[error("validation: {0}")]
    Validation(String),

    /// Malformed trace input, with the offending line when known.
    #[error("trace parse error at line {line}: {msg}")]
    TraceParse { line: u64, msg: String },

    /// Placement requested on a server without enough free awake cores.
    #[error("server {server} cannot host {requested} cores ({free} free awake)")]
    Capacity {
        server: u32,
        requested: u32,
        free: u32,
    },

    /// Operation referenced a VM that is not placed.
    #[error("unknown vm {0}")]
    UnknownVm(VmId),

    /// Core counts that do not add up (m + l > n, or l beyond the subset).
    #[error("core accounting: {0}")]
    CoreAccounting(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl SimError {
    pub fn validation(msg: impl Into<String>) -> Self {
        SimError::Validation(msg.into())
    }

    /// True for errors caused by bad inputs rather than internal state.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            SimError::Validation(_) | SimError::TraceParse { .. } | SimError::Io(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, SimError>;
