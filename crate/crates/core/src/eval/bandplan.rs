use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::source::CaptureSettings;

const BUILTIN: &str = include_str!("../../data/bandplan.toml");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub name: String,
    pub low_mhz: f64,
    pub high_mhz: f64,
    pub labels: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BandPlan {
    #[serde(default, rename = "band")]
    pub bands: Vec<Band>,
}

impl BandPlan {
    pub fn builtin() -> Self {
        Self::from_toml(BUILTIN).expect("built-in band plan parses")
    }

    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let p: BandPlan = toml::from_str(text).map_err(|e| ConfigError::new(format!("band plan: {e}")))?;
        for b in &p.bands {
            if !(b.low_mhz < b.high_mhz) {
                return Err(ConfigError::new(format!("band plan: {} has low >= high", b.name)));
            }
        }
        Ok(p)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::new(format!("band plan {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Bands overlapping the captured span.
    pub fn covering(&self, settings: &CaptureSettings) -> Vec<&Band> {
        let lo = (settings.center_freq_hz - settings.sample_rate_hz / 2.0) / 1e6;
        let hi = (settings.center_freq_hz + settings.sample_rate_hz / 2.0) / 1e6;
        self.bands.iter().filter(|b| b.low_mhz < hi && b.high_mhz > lo).collect()
    }

    /// `Some(false)` when the label fits none of the covering bands, `None`
    /// when no band covers the capture.
    pub fn is_plausible(&self, label: &str, settings: &CaptureSettings) -> Option<bool> {
        let bands = self.covering(settings);
        if bands.is_empty() {
            return None;
        }
        Some(
            bands
                .iter()
                .any(|b| b.labels.iter().any(|l| l.eq_ignore_ascii_case(label))),
        )
    }
}
