//! IQ sample sources.
//!
//! Everything downstream consumes [`IQBlock`]s and never cares whether they
//! came from the simulator ([`generate_scene`]), a replayed capture file
//! ([`capture`]) or a hardware adapter ([`hardware`]).

pub mod capture;
pub mod hardware;
mod scene;

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::{ensure, ConfigError};

pub use hardware::{open_hardware_source, HardwareAdapter, HardwareRegistry, ReplayAdapter};
pub use scene::{generate_scene, SceneGenerator};

pub const DEFAULT_FFT_SIZE: usize = 2048;

/// Boxed stream of blocks, as handed out by hardware adapters and replays.
pub type BlockStream = Box<dyn Iterator<Item = Result<IQBlock, SourceError>> + Send>;

#[derive(Debug, Error)]
pub enum SourceError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("hardware source not available: {0}")]
    Unsupported(String),
    #[error("capture file: {0}")]
    Format(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// Receiver tuning for one capture.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CaptureSettings {
    pub center_freq_hz: f64,
    pub sample_rate_hz: f64,
    #[serde(default)]
    pub gain_db: f64,
    #[serde(default = "default_fft_size")]
    pub fft_size: usize,
}

fn default_fft_size() -> usize {
    DEFAULT_FFT_SIZE
}

impl CaptureSettings {
    pub fn new(center_freq_hz: f64, sample_rate_hz: f64) -> Self {
        Self {
            center_freq_hz,
            sample_rate_hz,
            gain_db: 0.0,
            fft_size: DEFAULT_FFT_SIZE,
        }
    }

    pub fn with_gain(mut self, gain_db: f64) -> Self {
        self.gain_db = gain_db;
        self
    }

    pub fn with_fft_size(mut self, fft_size: usize) -> Self {
        self.fft_size = fft_size;
        self
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        ensure(
            self.center_freq_hz.is_finite() && self.center_freq_hz >= 0.0,
            || format!("center_freq_hz must be finite and >= 0 (got {})", self.center_freq_hz),
        )?;
        ensure(
            self.sample_rate_hz.is_finite() && self.sample_rate_hz > 0.0,
            || format!("sample_rate_hz must be > 0 (got {})", self.sample_rate_hz),
        )?;
        ensure(self.gain_db.is_finite(), || "gain_db must be finite".into())?;
        ensure(
            self.fft_size >= 64 && self.fft_size.is_power_of_two(),
            || format!("fft_size must be a power of two >= 64 (got {})", self.fft_size),
        )
    }

    /// Width of one FFT bin in Hz.
    pub fn bin_hz(&self) -> f64 {
        self.sample_rate_hz / self.fft_size as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmitterKind {
    /// Carrier with sinusoidal frequency deviation.
    FmLike,
    /// Flat band-limited noise, always on.
    LteLike,
    /// On-off keyed carrier, gated in multi-block pulses.
    PulsedOok,
    /// Flat band-limited noise in single-block bursts.
    WifiBurst,
    /// Narrow bursts that re-draw their channel on every burst.
    HopBurst,
}

impl EmitterKind {
    pub fn is_continuous(self) -> bool {
        matches!(self, EmitterKind::FmLike | EmitterKind::LteLike)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmitterSpec {
    pub kind: EmitterKind,
    #[serde(default)]
    pub offset_hz: f64,
    pub bandwidth_hz: f64,
    pub snr_db: f64,
    #[serde(default = "one")]
    pub duty: f64,
    #[serde(default = "one_u32")]
    pub hop_channels: u32,
    #[serde(default)]
    pub seed: u64,
}

fn one() -> f64 {
    1.0
}

fn one_u32() -> u32 {
    1
}

impl EmitterSpec {
    pub fn new(kind: EmitterKind, offset_hz: f64, bandwidth_hz: f64, snr_db: f64) -> Self {
        Self {
            kind,
            offset_hz,
            bandwidth_hz,
            snr_db,
            duty: 1.0,
            hop_channels: 1,
            seed: 0,
        }
    }

    pub fn with_duty(mut self, duty: f64) -> Self {
        self.duty = duty;
        self
    }

    pub fn with_hop_channels(mut self, n: u32) -> Self {
        self.hop_channels = n;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    fn validate(&self, idx: usize, settings: &CaptureSettings) -> Result<(), ConfigError> {
        ensure(self.bandwidth_hz.is_finite() && self.bandwidth_hz > 0.0, || {
            format!("emitter {idx}: bandwidth_hz must be > 0")
        })?;
        ensure(self.snr_db.is_finite() && self.offset_hz.is_finite(), || {
            format!("emitter {idx}: snr_db and offset_hz must be finite")
        })?;
        ensure((0.0..=1.0).contains(&self.duty), || {
            format!("emitter {idx}: duty must lie in [0, 1] (got {})", self.duty)
        })?;
        ensure(!self.kind.is_continuous() || self.duty == 1.0, || {
            format!("emitter {idx}: duty must be 1.0 for continuous kind {:?}", self.kind)
        })?;
        ensure(self.hop_channels >= 1, || {
            format!("emitter {idx}: hop_channels must be >= 1")
        })?;
        let half_span = settings.sample_rate_hz / 2.0;
        // one part in 1e9 of slack so an emitter spanning exactly the capture still fits
        ensure(
            self.offset_hz.abs() + self.bandwidth_hz / 2.0 <= half_span * (1.0 + 1e-9),
            || {
                format!(
                    "emitter {idx}: |offset_hz| + bandwidth_hz/2 = {} Hz exceeds sample_rate_hz/2 = {} Hz",
                    self.offset_hz.abs() + self.bandwidth_hz / 2.0,
                    half_span
                )
            },
        )
    }
}

/// A simulated capture: noise floor plus a list of emitters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub settings: CaptureSettings,
    pub noise_floor_db: f64,
    #[serde(default)]
    pub emitters: Vec<EmitterSpec>,
    pub duration_blocks: u64,
    /// Seed for the receiver noise; emitters carry their own.
    #[serde(default)]
    pub seed: u64,
}

impl SceneSpec {
    pub fn new(settings: CaptureSettings, noise_floor_db: f64, duration_blocks: u64) -> Self {
        Self {
            settings,
            noise_floor_db,
            emitters: Vec::new(),
            duration_blocks,
            seed: 0,
        }
    }

    pub fn with_emitter(mut self, emitter: EmitterSpec) -> Self {
        self.emitters.push(emitter);
        self
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.settings.validate()?;
        ensure(self.noise_floor_db.is_finite(), || "noise_floor_db must be finite".into())?;
        ensure(self.duration_blocks >= 1, || "duration_blocks must be >= 1".into())?;
        for (i, e) in self.emitters.iter().enumerate() {
            e.validate(i, &self.settings)?;
        }
        Ok(())
    }

    /// Copy of this scene with every seed shifted, used for repeated captures
    /// of the same scenario.
    pub fn reseeded(&self, salt: u64) -> Self {
        let mix = |s: u64| s ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
        let mut out = self.clone();
        out.seed = mix(self.seed);
        for e in &mut out.emitters {
            e.seed = mix(e.seed);
        }
        out
    }

    /// Mixed scene with an FM-like carrier, an LTE-like block and a pulsed
    /// emitter, scaled to the capture span. Used for live operation when no
    /// scenario matches the tuning.
    pub fn demo(settings: CaptureSettings) -> Self {
        let sr = settings.sample_rate_hz;
        Self::new(settings, -80.0, 1 << 40)
            .with_emitter(EmitterSpec::new(EmitterKind::FmLike, -0.3 * sr, sr / 50.0, 18.0).with_seed(1))
            .with_emitter(EmitterSpec::new(EmitterKind::LteLike, 0.15 * sr, 0.25 * sr, 12.0).with_seed(2))
            .with_emitter(
                EmitterSpec::new(EmitterKind::PulsedOok, -0.1 * sr, sr / 40.0, 15.0)
                    .with_duty(0.3)
                    .with_seed(3),
            )
    }

    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let spec: SceneSpec =
            toml::from_str(text).map_err(|e| ConfigError::new(format!("scene file: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("scene spec serializes")
    }
}

/// One block of `fft_size` complex baseband samples.
#[derive(Debug, Clone, PartialEq)]
pub struct IQBlock {
    pub samples: Vec<Complex64>,
    pub block_index: u64,
    pub settings: CaptureSettings,
}

impl IQBlock {
    pub fn new(samples: Vec<Complex64>, block_index: u64, settings: CaptureSettings) -> Self {
        debug_assert_eq!(samples.len(), settings.fft_size);
        Self {
            samples,
            block_index,
            settings,
        }
    }

    pub fn mean_power(&self) -> f64 {
        self.samples.iter().map(|s| s.norm_sqr()).sum::<f64>() / self.samples.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn settings_validation() {
        assert!(CaptureSettings::new(806e6, 20e6).validate().is_ok());
        let err = CaptureSettings::new(806e6, 20e6).with_fft_size(0).validate().unwrap_err();
        assert!(err.0.contains("fft_size"));
        assert!(CaptureSettings::new(806e6, 20e6).with_fft_size(1000).validate().is_err());
        assert!(CaptureSettings::new(806e6, 20e6).with_fft_size(32).validate().is_err());
        assert!(CaptureSettings::new(806e6, 0.0).validate().is_err());
        assert!(CaptureSettings::new(-1.0, 1e6).validate().is_err());
    }

    #[test]
    fn emitter_must_fit_span() {
        let s = CaptureSettings::new(806e6, 20e6);
        let ok = SceneSpec::new(s, -80.0, 10).with_emitter(EmitterSpec::new(EmitterKind::LteLike, 0.0, 20e6, 20.0));
        assert!(ok.validate().is_ok());
        let bad = SceneSpec::new(s, -80.0, 10).with_emitter(EmitterSpec::new(EmitterKind::LteLike, 1e6, 20e6, 20.0));
        let err = bad.validate().unwrap_err();
        assert!(err.0.contains("exceeds sample_rate_hz/2"), "{err}");
    }

    #[test]
    fn continuous_kinds_need_full_duty() {
        let s = CaptureSettings::new(98e6, 10e6);
        let bad = SceneSpec::new(s, -80.0, 10)
            .with_emitter(EmitterSpec::new(EmitterKind::FmLike, 0.0, 2e5, 20.0).with_duty(0.5));
        assert!(bad.validate().unwrap_err().0.contains("duty must be 1.0"));
        let bad = SceneSpec::new(s, -80.0, 10)
            .with_emitter(EmitterSpec::new(EmitterKind::PulsedOok, 0.0, 2e5, 20.0).with_duty(1.5));
        assert!(bad.validate().is_err());
    }

    #[test]
    fn zero_duration_rejected() {
        let s = CaptureSettings::new(98e6, 10e6);
        assert!(SceneSpec::new(s, -80.0, 0).validate().is_err());
    }

    #[test]
    fn scene_toml_uses_field_names() {
        let spec = SceneSpec::new(CaptureSettings::new(433.92e6, 5e6), -80.0, 50).with_emitter(
            EmitterSpec::new(EmitterKind::PulsedOok, 1e5, 5e5, 15.0).with_duty(0.3).with_seed(7),
        );
        let text = spec.to_toml();
        for key in [
            "center_freq_hz",
            "sample_rate_hz",
            "gain_db",
            "fft_size",
            "noise_floor_db",
            "duration_blocks",
            "kind = \"pulsed_ook\"",
            "offset_hz",
            "bandwidth_hz",
            "snr_db",
            "duty",
            "hop_channels",
        ] {
            assert!(text.contains(key), "missing {key} in\n{text}");
        }
        assert_eq!(SceneSpec::from_toml(&text).unwrap(), spec);
    }
}
