use std::collections::VecDeque;

use super::transform::apply_window;
use super::{
    average, detect_peaks, hann_window, spectrum_with, DspError, Peak, PipelineConfig, RustFftTransform,
    SpectrumFrame, Transform, WaterfallBuffer,
};
use crate::error::ConfigError;
use crate::source::IQBlock;

/// Single-writer chain: window → FFT → moving linear average over the last
/// `averaging_frames` spectra → waterfall. The averaged frame feeds both the
/// live display and the waterfall.
pub struct Pipeline {
    cfg: PipelineConfig,
    transform: Box<dyn Transform>,
    window: Vec<f64>,
    recent: VecDeque<SpectrumFrame>,
    waterfall: WaterfallBuffer,
}

impl Pipeline {
    pub fn new(fft_size: usize, cfg: PipelineConfig) -> Result<Self, ConfigError> {
        Self::with_transform(Box::new(RustFftTransform::new(fft_size)), cfg)
    }

    pub fn with_transform(transform: Box<dyn Transform>, cfg: PipelineConfig) -> Result<Self, ConfigError> {
        cfg.validate()?;
        Ok(Self {
            window: hann_window(transform.len()),
            transform,
            recent: VecDeque::new(),
            waterfall: WaterfallBuffer::new(),
            cfg,
        })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.cfg
    }

    pub fn set_config(&mut self, cfg: PipelineConfig) -> Result<(), ConfigError> {
        cfg.validate()?;
        while self.recent.len() > cfg.averaging_frames {
            self.recent.pop_front();
        }
        self.cfg = cfg;
        Ok(())
    }

    /// Drops averaging history and the waterfall; required after a retune.
    pub fn reset(&mut self) {
        self.recent.clear();
        self.waterfall.clear();
    }

    /// Processes one block and returns the averaged frame that was appended to
    /// the waterfall.
    pub fn process(&mut self, block: &IQBlock) -> Result<SpectrumFrame, DspError> {
        if block.samples.len() != self.transform.len() {
            if !self.waterfall.is_empty() {
                return Err(DspError::CalibrationMismatch(format!(
                    "block has {} samples, pipeline runs N={}; reset before changing FFT size",
                    block.samples.len(),
                    self.transform.len()
                )));
            }
            self.transform = Box::new(RustFftTransform::new(block.samples.len()));
            self.window = hann_window(block.samples.len());
        }
        let raw = spectrum_with(self.transform.as_ref(), &apply_window(block, &self.window), &self.cfg);
        if let Some(last) = self.recent.back() {
            last.ensure_same_calibration(&raw)?;
        }
        if self.recent.len() == self.cfg.averaging_frames {
            self.recent.pop_front();
        }
        self.recent.push_back(raw);
        let avg = average(self.recent.make_contiguous(), &self.cfg)?;
        self.waterfall.push(avg.clone())?;
        Ok(avg)
    }

    pub fn peaks(&self, frame: &SpectrumFrame) -> Vec<Peak> {
        detect_peaks(frame, &self.cfg)
    }

    pub fn waterfall(&self) -> &WaterfallBuffer {
        &self.waterfall
    }

    pub fn snapshot(&self) -> WaterfallBuffer {
        self.waterfall.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::source::{generate_scene, CaptureSettings, SceneSpec};

    #[test]
    fn retune_requires_reset() {
        let a = SceneSpec::new(CaptureSettings::new(98e6, 10e6).with_fft_size(128), -80.0, 3);
        let b = SceneSpec::new(CaptureSettings::new(99e6, 10e6).with_fft_size(128), -80.0, 3);
        let mut p = Pipeline::new(128, PipelineConfig::default()).unwrap();
        for blk in generate_scene(&a).unwrap() {
            p.process(&blk).unwrap();
        }
        let other = generate_scene(&b).unwrap().next().unwrap();
        assert!(p.process(&other).is_err());
        p.reset();
        p.process(&other).unwrap();
        assert_eq!(p.waterfall().len(), 1);
    }

    #[test]
    fn fft_size_change_after_reset() {
        let a = SceneSpec::new(CaptureSettings::new(98e6, 10e6).with_fft_size(128), -80.0, 2);
        let b = SceneSpec::new(CaptureSettings::new(98e6, 10e6).with_fft_size(256), -80.0, 2);
        let mut p = Pipeline::new(128, PipelineConfig::default()).unwrap();
        p.process(&generate_scene(&a).unwrap().next().unwrap()).unwrap();
        let big = generate_scene(&b).unwrap().next().unwrap();
        assert!(p.process(&big).is_err());
        p.reset();
        assert_eq!(p.process(&big).unwrap().power_db.len(), 256);
    }

    #[test]
    fn moving_average_window() {
        let spec = SceneSpec::new(CaptureSettings::new(98e6, 10e6).with_fft_size(64), -80.0, 10);
        let blocks: Vec<_> = generate_scene(&spec).unwrap().collect();
        let cfg = PipelineConfig {
            averaging_frames: 3,
            ..Default::default()
        };
        let mut p = Pipeline::new(64, cfg.clone()).unwrap();
        let mut last = None;
        for b in &blocks {
            last = Some(p.process(b).unwrap());
        }
        let raw: Vec<_> = blocks[7..]
            .iter()
            .map(|b| crate::dsp::spectrum(&crate::dsp::window_hann(b), &cfg))
            .collect();
        let expect = average(&raw, &cfg).unwrap();
        let got = last.unwrap();
        assert_eq!(got.block_index, 9);
        for (a, b) in got.power_db.iter().zip(&expect.power_db) {
            assert!((a - b).abs() < 1e-9);
        }
        assert_eq!(p.waterfall().len(), 10);
    }
}
