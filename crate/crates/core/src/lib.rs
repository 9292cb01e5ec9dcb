//! Hardware-optional spectrum capture, waterfall rendering, and
//! vision-language-model evaluation.
//!
//! The crate is organized as a single analysis chain:
//!
//! * [`source`] produces blocks of complex baseband samples, either from the
//!   deterministic scene simulator or a registered hardware adapter.
//! * [`dsp`] windows and transforms blocks into dB spectra, averages them and
//!   maintains the 200-row waterfall.
//! * [`render`] rasterizes a waterfall snapshot into the PNG sent to models.
//! * [`vlm`] builds the analysis prompt and talks to model endpoints.
//! * [`eval`] scores model responses (PAES, prompt leakage, hallucinations)
//!   and runs whole scenario suites.

pub mod dsp;
pub mod error;
pub mod eval;
pub mod render;
pub mod source;
pub mod vlm;

pub use error::ConfigError;
pub use rustfft::num_complex;

/// Formats a frequency in Hz as MHz with at most two decimals, trailing
/// zeros trimmed (`806`, `433.92`, `2437`).
pub fn format_mhz(hz: f64) -> String {
    let s = format!("{:.2}", hz / 1e6);
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".to_string()
    } else {
        s.to_string()
    }
}
