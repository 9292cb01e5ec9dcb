use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;

const BUILTIN: &str = include_str!("../../data/replies.toml");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayEntry {
    pub scenario: String,
    pub backend: String,
    /// Absent: answers every trial.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trial: Option<u32>,
    pub text: String,
}

/// `(scenario, backend, trial) → response text` table for the offline backend.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReplayFixtures {
    #[serde(default, rename = "reply")]
    pub entries: Vec<ReplayEntry>,
}

impl ReplayFixtures {
    pub fn builtin() -> Self {
        Self::from_toml(BUILTIN).expect("built-in replay table parses")
    }

    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::new(format!("replay fixtures: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::new(format!("replay fixtures {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Exact-trial entry first, then the all-trials entry.
    pub fn get(&self, scenario: &str, backend: &str, trial: u32) -> Option<&str> {
        let mut any = None;
        for e in &self.entries {
            if e.scenario != scenario || e.backend != backend {
                continue;
            }
            match e.trial {
                Some(t) if t == trial => return Some(&e.text),
                None if any.is_none() => any = Some(e.text.as_str()),
                _ => {}
            }
        }
        any
    }
}
