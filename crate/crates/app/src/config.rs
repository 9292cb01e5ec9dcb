use std::net::SocketAddr;
use std::path::Path;

use anyhow::{bail, Context};
use rfscope_core::dsp::PipelineConfig;
use rfscope_core::source::CaptureSettings;
use rfscope_core::vlm::BackendProfile;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Preset {
    pub name: String,
    pub center_freq_hz: f64,
    pub sample_rate_hz: f64,
}

fn preset(name: &str, fc_mhz: f64, sr_mhz: f64) -> Preset {
    Preset {
        name: name.into(),
        center_freq_hz: fc_mhz * 1e6,
        sample_rate_hz: sr_mhz * 1e6,
    }
}

/// Quick-tune list shown by the console.
pub fn presets() -> Vec<Preset> {
    vec![
        preset("FM 98 MHz", 98.0, 10.0),
        preset("ISM 433.92 MHz", 433.92, 5.0),
        preset("LTE 806 MHz", 806.0, 20.0),
        preset("GSM 950 MHz", 950.0, 20.0),
        preset("Wi-Fi 2437 MHz", 2437.0, 40.0),
        preset("BT 2400 MHz", 2400.0, 40.0),
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceKind {
    Simulator,
    /// No receiver attached; stream, snapshot and analysis requests get 409.
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AppConfig {
    pub bind: SocketAddr,
    pub default_preset: String,
    pub source: SourceKind,
    pub fft_size: usize,
    pub gain_db: f64,
    pub fps: u32,
    /// Acquisition pace of the live source.
    pub blocks_per_s: f64,
    pub session_idle_s: u64,
    pub pipeline: PipelineConfig,
    #[serde(rename = "backend")]
    pub backends: Vec<BackendProfile>,
}

impl Default for AppConfig {
    fn default() -> Self {
        Self {
            bind: "127.0.0.1:8080".parse().unwrap(),
            default_preset: "LTE 806 MHz".into(),
            source: SourceKind::Simulator,
            fft_size: rfscope_core::source::DEFAULT_FFT_SIZE,
            gain_db: 30.0,
            fps: 10,
            blocks_per_s: 50.0,
            session_idle_s: 30 * 60,
            pipeline: PipelineConfig::default(),
            backends: ["rf-gpt", "qwen-base", "llama-3.2v"]
                .into_iter()
                .map(BackendProfile::mock)
                .collect(),
        }
    }
}

pub const MAX_FPS: u32 = 60;

impl AppConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let cfg: AppConfig = toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load_or_default(path: Option<&Path>) -> anyhow::Result<Self> {
        match path {
            Some(p) => Self::load(p),
            None => Ok(Self::default()),
        }
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if self.preset().is_none() {
            bail!("default_preset {:?} is not a known preset", self.default_preset);
        }
        if !(1..=MAX_FPS).contains(&self.fps) {
            bail!("fps must be in 1..={MAX_FPS}");
        }
        if !(self.blocks_per_s > 0.0) {
            bail!("blocks_per_s must be > 0");
        }
        self.pipeline.validate()?;
        self.initial_settings().validate()?;
        let mut names = std::collections::BTreeSet::new();
        for b in &self.backends {
            b.validate()?;
            if !names.insert(b.name.as_str()) {
                bail!("duplicate backend name {}", b.name);
            }
        }
        Ok(())
    }

    pub fn preset(&self) -> Option<Preset> {
        presets().into_iter().find(|p| p.name == self.default_preset)
    }

    pub fn initial_settings(&self) -> CaptureSettings {
        let p = self.preset().unwrap_or_else(|| presets()[2].clone());
        CaptureSettings::new(p.center_freq_hz, p.sample_rate_hz)
            .with_gain(self.gain_db)
            .with_fft_size(self.fft_size)
    }

    pub fn backend(&self, name: &str) -> Option<&BackendProfile> {
        self.backends.iter().find(|b| b.name == name)
    }
}
