use serde::{Deserialize, Serialize};

use super::{PipelineConfig, SpectrumFrame};

/// A run of contiguous bins above the detection threshold. Operator display
/// only; never part of a model prompt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub center_hz: f64,
    pub bandwidth_hz: f64,
    pub peak_db: f64,
    /// Inclusive `[lo, hi]` bin indices.
    pub bin_range: (usize, usize),
}

pub fn detect_peaks(frame: &SpectrumFrame, cfg: &PipelineConfig) -> Vec<Peak> {
    let mut peaks = Vec::new();
    let mut start = None;
    let n = frame.power_db.len();
    for k in 0..=n {
        let above = k < n && frame.power_db[k] > cfg.threshold_db;
        match (above, start) {
            (true, None) => start = Some(k),
            (false, Some(lo)) => {
                peaks.push(make_peak(frame, lo, k - 1));
                start = None;
            }
            _ => {}
        }
    }
    peaks
}

fn make_peak(frame: &SpectrumFrame, lo: usize, hi: usize) -> Peak {
    let run = &frame.power_db[lo..=hi];
    let peak_db = run.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    // weights relative to the run maximum so a constant dB offset cancels
    let (mut wsum, mut fsum) = (0.0, 0.0);
    for (i, &db) in run.iter().enumerate() {
        let w = 10f64.powf((db - peak_db) / 10.0);
        wsum += w;
        fsum += w * frame.bin_freq(lo + i);
    }
    Peak {
        center_hz: fsum / wsum,
        bandwidth_hz: (hi - lo + 1) as f64 * frame.freq_step_hz,
        peak_db,
        bin_range: (lo, hi),
    }
}
