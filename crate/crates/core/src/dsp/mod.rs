//! Block spectra, averaging, the waterfall buffer and the peak detector.
//!
//! [`spectrum`] transforms the block exactly as given; windowing is a separate
//! step ([`window_hann`]) so the transform can be checked against a plain DFT
//! and against Parseval. [`Pipeline`] chains window, transform, averaging and
//! waterfall the way live operation uses them.

mod peaks;
mod pipeline;
mod transform;
mod waterfall;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::{ensure, ConfigError};
use crate::source::IQBlock;

pub use peaks::{detect_peaks, Peak};
pub use pipeline::Pipeline;
pub use transform::{hann_window, window_hann, RustFftTransform, Transform};
pub use waterfall::{WaterfallBuffer, WATERFALL_ROWS};

#[derive(Debug, Error, PartialEq)]
pub enum DspError {
    #[error("calibration mismatch: {0}")]
    CalibrationMismatch(String),
    #[error("no frames to average")]
    Empty,
    #[error(transparent)]
    Config(#[from] ConfigError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub averaging_frames: usize,
    pub threshold_db: f64,
    pub db_floor: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            averaging_frames: 4,
            threshold_db: -60.0,
            db_floor: -120.0,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        ensure(self.averaging_frames >= 1, || "averaging_frames must be >= 1".into())?;
        ensure(self.threshold_db.is_finite() && self.db_floor.is_finite(), || {
            "threshold_db and db_floor must be finite".into()
        })
    }

    fn floor_lin(&self) -> f64 {
        10f64.powf(self.db_floor / 10.0)
    }
}

/// Frequency axis shared by frames: bin `k` sits at `freq_start_hz + k * freq_step_hz`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub freq_start_hz: f64,
    pub freq_step_hz: f64,
    pub bins: usize,
}

impl Calibration {
    pub fn center_freq_hz(&self) -> f64 {
        self.freq_start_hz + self.span_hz() / 2.0
    }

    pub fn span_hz(&self) -> f64 {
        self.freq_step_hz * self.bins as f64
    }

    pub fn bin_freq(&self, k: usize) -> f64 {
        self.freq_start_hz + k as f64 * self.freq_step_hz
    }
}

/// One dB power spectrum, centered on the tuning frequency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumFrame {
    pub power_db: Vec<f64>,
    pub freq_start_hz: f64,
    pub freq_step_hz: f64,
    pub block_index: u64,
}

impl SpectrumFrame {
    pub fn calibration(&self) -> Calibration {
        Calibration {
            freq_start_hz: self.freq_start_hz,
            freq_step_hz: self.freq_step_hz,
            bins: self.power_db.len(),
        }
    }

    pub fn bin_freq(&self, k: usize) -> f64 {
        self.freq_start_hz + k as f64 * self.freq_step_hz
    }

    pub(crate) fn ensure_same_calibration(&self, other: &SpectrumFrame) -> Result<(), DspError> {
        if self.calibration() == other.calibration() {
            Ok(())
        } else {
            Err(DspError::CalibrationMismatch(format!(
                "{:?} vs {:?}",
                self.calibration(),
                other.calibration()
            )))
        }
    }
}

/// `10·log10(max(|X[k]|², floor))` of the block as given, rotated so bin 0 is
/// `fc − SR/2`.
pub fn spectrum(block: &IQBlock, cfg: &PipelineConfig) -> SpectrumFrame {
    let transform = RustFftTransform::new(block.samples.len());
    spectrum_with(&transform, block, cfg)
}

pub fn spectrum_with(transform: &dyn Transform, block: &IQBlock, cfg: &PipelineConfig) -> SpectrumFrame {
    let n = block.samples.len();
    let mut buf = block.samples.clone();
    transform.forward(&mut buf);
    let floor = cfg.floor_lin();
    let half = n / 2;
    let power_db = (0..n)
        .map(|k| {
            let p = buf[(k + half) % n].norm_sqr();
            10.0 * p.max(floor).log10()
        })
        .collect();
    let s = &block.settings;
    SpectrumFrame {
        power_db,
        freq_start_hz: s.center_freq_hz - s.sample_rate_hz / 2.0,
        freq_step_hz: s.sample_rate_hz / n as f64,
        block_index: block.block_index,
    }
}

/// Per-bin mean in linear power, converted back to dB.
pub fn average(frames: &[SpectrumFrame], cfg: &PipelineConfig) -> Result<SpectrumFrame, DspError> {
    let (first, rest) = frames.split_first().ok_or(DspError::Empty)?;
    for f in rest {
        first.ensure_same_calibration(f)?;
    }
    let k = frames.len() as f64;
    let floor = cfg.floor_lin();
    let power_db = (0..first.power_db.len())
        .map(|bin| {
            let sum: f64 = frames.iter().map(|f| 10f64.powf(f.power_db[bin] / 10.0)).sum();
            10.0 * (sum / k).max(floor).log10()
        })
        .collect();
    Ok(SpectrumFrame {
        power_db,
        freq_start_hz: first.freq_start_hz,
        freq_step_hz: first.freq_step_hz,
        block_index: frames.last().unwrap().block_index,
    })
}
