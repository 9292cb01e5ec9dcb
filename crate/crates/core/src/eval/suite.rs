use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::types::GroundTruth;
use crate::error::{ensure, ConfigError};
use crate::source::{CaptureSettings, SceneSpec};

const BUILTIN: &str = include_str!("../../data/suite.toml");

/// One capture scenario: tuning (inside the scene), the simulated stand-in
/// for the RF environment, the reference labels and the repeat count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub id: String,
    pub environment: String,
    #[serde(default = "three")]
    pub trials: u32,
    #[serde(default)]
    pub ood: bool,
    pub scene: SceneSpec,
    pub ground_truth: GroundTruth,
}

fn three() -> u32 {
    3
}

impl ScenarioSpec {
    pub fn settings(&self) -> &CaptureSettings {
        &self.scene.settings
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Suite {
    #[serde(rename = "scenario")]
    pub scenarios: Vec<ScenarioSpec>,
}

impl Suite {
    pub fn builtin() -> Self {
        Self::from_toml(BUILTIN).expect("built-in suite parses")
    }

    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let s: Suite = toml::from_str(text).map_err(|e| ConfigError::new(format!("suite file: {e}")))?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::new(format!("suite file {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        ensure(!self.scenarios.is_empty(), || "suite has no scenarios".into())?;
        let mut seen = BTreeSet::new();
        for s in &self.scenarios {
            ensure(!s.id.trim().is_empty(), || "scenario id must not be empty".into())?;
            ensure(seen.insert(s.id.as_str()), || format!("duplicate scenario id {}", s.id))?;
            ensure(s.trials >= 1, || format!("{}: trials must be >= 1", s.id))?;
            s.scene.validate().map_err(|e| ConfigError::new(format!("{}: {}", s.id, e.0)))?;
            s.ground_truth
                .validate()
                .map_err(|e| ConfigError::new(format!("{}: {}", s.id, e.0)))?;
        }
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<&ScenarioSpec> {
        self.scenarios.iter().find(|s| s.id == id)
    }

    /// Scenario tuned exactly to this center frequency and sample rate.
    pub fn matching(&self, center_freq_hz: f64, sample_rate_hz: f64) -> Option<&ScenarioSpec> {
        self.scenarios.iter().find(|s| {
            (s.settings().center_freq_hz - center_freq_hz).abs() < 0.5
                && (s.settings().sample_rate_hz - sample_rate_hz).abs() < 0.5
        })
    }
}
