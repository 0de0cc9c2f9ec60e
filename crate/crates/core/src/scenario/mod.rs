//! Scenario files: schema, validation and world construction.

mod build;
mod config;
mod validate;

use std::path::Path;

pub use build::{
    apply_mitigations, default_agent_rule, default_bindings, plan_population, prepare, schedule,
    CitizenPlan, Prepared, Variant, BASELINE, RISK,
};
pub use config::*;
pub use validate::{structural, validate};

use crate::kernel::BuildError;

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{0}")]
    Parse(String),
    #[error("invalid scenario:\n  {}", .0.join("\n  "))]
    Invalid(Vec<String>),
    #[error("unknown variant or mitigation `{0}`")]
    UnknownVariant(String),
    #[error(transparent)]
    Build(#[from] BuildError),
}

impl ScenarioError {
    /// 3 for I/O failures, 2 for anything wrong with the scenario itself.
    pub fn exit_code(&self) -> i32 {
        match self {
            ScenarioError::Io { .. } => 3,
            _ => 2,
        }
    }
}

pub fn parse(text: &str) -> Result<ScenarioConfig, ScenarioError> {
    serde_json::from_str(text).map_err(|e| ScenarioError::Parse(format!("scenario: {e}")))
}

pub fn load(path: &Path) -> Result<(ScenarioConfig, String), ScenarioError> {
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok((parse(&text)?, text))
}
