use std::path::Path;

use serde::{Deserialize, Serialize};

use super::types::AttributeExtraction;
use crate::error::ConfigError;

const BUILTIN: &str = include_str!("../../data/adjudications.toml");

/// A hand-scored reading that replaces the extractor's output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adjudication {
    pub scenario: String,
    pub backend: String,
    /// Absent: every trial of the pair.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trial: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    #[serde(flatten)]
    pub extraction: AttributeExtraction,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Adjudications {
    #[serde(default, rename = "adjudication")]
    pub rows: Vec<Adjudication>,
}

impl Adjudications {
    pub fn builtin() -> Self {
        Self::from_toml(BUILTIN).expect("built-in adjudications parse")
    }

    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let a: Adjudications = toml::from_str(text).map_err(|e| ConfigError::new(format!("adjudications: {e}")))?;
        for r in &a.rows {
            if r.extraction.claims_no_signal
                && r.extraction.classes() != (None, None, None, None, None, true)
            {
                return Err(ConfigError::new(format!(
                    "adjudication {}/{}: a no-signal claim cannot carry attribute classes",
                    r.scenario, r.backend
                )));
            }
        }
        Ok(a)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::new(format!("adjudications {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Exact-trial row first, then the all-trials row.
    pub fn get(&self, scenario: &str, backend: &str, trial: u32) -> Option<&Adjudication> {
        let mut any = None;
        for r in &self.rows {
            if r.scenario != scenario || r.backend != backend {
                continue;
            }
            match r.trial {
                Some(t) if t == trial => return Some(r),
                None if any.is_none() => any = Some(r),
                _ => {}
            }
        }
        any
    }
}
