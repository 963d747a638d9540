//! Run manifest: what was run, with which solver, and a hash of the inputs.

use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Serialize)]
pub struct SolverInfo {
    pub scheduler: String,
    pub backend: Option<String>,
    pub version: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub tool_version: &'static str,
    pub scenario: String,
    pub preset: Option<String>,
    pub fsa_start: u32,
    pub fsa_end: u32,
    /// SHA-256 of the resolved scenario JSON and run options.
    pub config_hash: String,
    pub solver: SolverInfo,
    pub solver_seed: u32,
    pub time_limit_s: f64,
    pub gap: f64,
    pub outputs: Vec<String>,
}

/// Hex SHA-256 over the parts, each length-prefixed so boundaries are unambiguous.
pub fn config_hash(parts: &[&str]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p.as_bytes());
    }
    hex::encode(h.finalize())
}
