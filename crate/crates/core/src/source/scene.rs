//! Deterministic scene simulator.
//!
//! Emitters are spectral-shape surrogates, not standards-compliant
//! modulators. All of them are synthesized on exact FFT bins so each block is
//! periodic in `fft_size`; after the periodic Hann window their energy leaks
//! into at most one neighbouring bin on either side.
//!
//! Power scale: `noise_floor_db` is the expected per-bin power of the
//! Hann-windowed, unnormalized FFT of the noise. An emitter with `snr_db = S`
//! adds `S` dB on top of that per occupied bin (signal power alone).

use std::sync::Arc;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::{EmitterKind, EmitterSpec, IQBlock, SceneSpec};
use crate::error::ConfigError;

/// Windowed power of a bin inside a flat random band, relative to its
/// unwindowed variance: 0.5² + 2·0.25².
const HANN_NOISE_GAIN: f64 = 0.375;
/// Slots per gating window; each window holds exactly round(duty·W) active slots.
const GATE_WINDOW_SLOTS: usize = 20;

/// Starts generating `spec`. Yields exactly `spec.duration_blocks` blocks.
pub fn generate_scene(spec: &SceneSpec) -> Result<SceneGenerator, ConfigError> {
    spec.validate()?;
    Ok(SceneGenerator::new(spec.clone(), Some(spec.duration_blocks)))
}

pub struct SceneGenerator {
    spec: SceneSpec,
    limit: Option<u64>,
    next_index: u64,
    noise_rng: ChaCha8Rng,
    noise_std: f64,
    emitters: Vec<EmitterState>,
    ifft: Arc<dyn Fft<f64>>,
    spectrum: Vec<Complex64>,
}

impl SceneGenerator {
    /// Generator that ignores `duration_blocks` and runs forever (live mode).
    pub fn unbounded(spec: &SceneSpec) -> Result<Self, ConfigError> {
        spec.validate()?;
        Ok(Self::new(spec.clone(), None))
    }

    fn new(spec: SceneSpec, limit: Option<u64>) -> Self {
        let n = spec.settings.fft_size;
        let floor = db_to_lin(spec.noise_floor_db);
        // E|n|^2 * sum(w^2) = floor with sum(w^2) = 3N/8
        let noise_var = floor * 8.0 / (3.0 * n as f64);
        let emitters = spec
            .emitters
            .iter()
            .map(|e| EmitterState::new(e, &spec))
            .collect();
        Self {
            noise_rng: ChaCha8Rng::seed_from_u64(spec.seed),
            noise_std: (noise_var / 2.0).sqrt(),
            emitters,
            ifft: FftPlanner::new().plan_fft_inverse(n),
            spectrum: vec![Complex64::new(0.0, 0.0); n],
            spec,
            limit,
            next_index: 0,
        }
    }

    pub fn spec(&self) -> &SceneSpec {
        &self.spec
    }

    fn next_block(&mut self) -> IQBlock {
        let n = self.spec.settings.fft_size;
        let index = self.next_index;
        self.next_index += 1;

        let mut samples: Vec<Complex64> = (0..n)
            .map(|_| {
                let re: f64 = self.noise_rng.sample(StandardNormal);
                let im: f64 = self.noise_rng.sample(StandardNormal);
                Complex64::new(re, im) * self.noise_std
            })
            .collect();

        self.spectrum.iter_mut().for_each(|c| *c = Complex64::new(0.0, 0.0));
        let mut any_band = false;
        for em in &mut self.emitters {
            any_band |= em.render(index, &mut samples, &mut self.spectrum);
        }
        if any_band {
            self.ifft.process(&mut self.spectrum);
            let scale = 1.0 / n as f64;
            for (s, x) in samples.iter_mut().zip(&self.spectrum) {
                *s += x * scale;
            }
        }
        IQBlock::new(samples, index, self.spec.settings)
    }
}

impl Iterator for SceneGenerator {
    type Item = IQBlock;

    fn next(&mut self) -> Option<IQBlock> {
        if self.limit.is_some_and(|l| self.next_index >= l) {
            return None;
        }
        Some(self.next_block())
    }
}

fn db_to_lin(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Signed bin range `[lo, hi]` covering `bandwidth_hz` around `center_hz`.
fn band_bins(center_hz: f64, bandwidth_hz: f64, bin_hz: f64, n: usize) -> (i64, i64) {
    let min = -(n as i64) / 2;
    let max = n as i64 / 2 - 1;
    let lo = ((center_hz - bandwidth_hz / 2.0) / bin_hz).round() as i64;
    let hi = ((center_hz + bandwidth_hz / 2.0) / bin_hz).round() as i64 - 1;
    let (lo, hi) = if hi < lo {
        let c = (center_hz / bin_hz).round() as i64;
        (c, c)
    } else {
        (lo, hi)
    };
    (lo.clamp(min, max), hi.clamp(min, max))
}

enum Shape {
    Tone { bin: i64, amp: f64, phase: f64 },
    Fm { bin: i64, amp: f64, beta: f64, phase: f64 },
    Band { variance: f64 },
}

struct Gate {
    slot_blocks: u64,
    duty: f64,
    active: Vec<bool>,
}

impl Gate {
    fn is_on(&mut self, block: u64, rng: &mut ChaCha8Rng) -> bool {
        if self.duty >= 1.0 {
            return true;
        }
        let slot = (block / self.slot_blocks) as usize;
        let in_window = slot % GATE_WINDOW_SLOTS;
        if in_window == 0 && block % self.slot_blocks == 0 {
            let k = (self.duty * GATE_WINDOW_SLOTS as f64).round() as usize;
            self.active = vec![false; GATE_WINDOW_SLOTS];
            for i in sample(rng, GATE_WINDOW_SLOTS, k) {
                self.active[i] = true;
            }
        }
        self.active.get(in_window).copied().unwrap_or(false)
    }
}

struct EmitterState {
    kind: EmitterKind,
    n: usize,
    rng: ChaCha8Rng,
    shape: Shape,
    gate: Gate,
    /// Candidate bin ranges; more than one only for hop_burst.
    channels: Vec<(i64, i64)>,
    current: (i64, i64),
}

impl EmitterState {
    fn new(spec: &EmitterSpec, scene: &SceneSpec) -> Self {
        let n = scene.settings.fft_size;
        let nf = n as f64;
        let bin_hz = scene.settings.bin_hz();
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let target = db_to_lin(scene.noise_floor_db + spec.snr_db);
        let range = band_bins(spec.offset_hz, spec.bandwidth_hz, bin_hz, n);
        let width = (range.1 - range.0 + 1) as f64;
        let center = ((spec.offset_hz / bin_hz).round() as i64).clamp(-(n as i64) / 2, n as i64 / 2 - 1);
        let phase = rng.gen::<f64>() * std::f64::consts::TAU;
        // |X_w[k]|^2 = (A N / 2)^2 for an on-bin tone
        let tone = Shape::Tone {
            bin: center,
            amp: 2.0 * target.sqrt() / nf,
            phase,
        };

        let shape = match spec.kind {
            EmitterKind::FmLike => {
                let half = width / 2.0;
                // keep Bessel tails inside the nominal band
                let margin = 3.0 * (half / 2.0).cbrt() + 3.0;
                let beta = (half - margin).floor();
                if beta < 1.0 {
                    tone
                } else {
                    let occupied = 2.0 * (beta + 1.0);
                    Shape::Fm {
                        bin: center,
                        amp: (target * occupied / HANN_NOISE_GAIN).sqrt() / nf,
                        beta,
                        phase,
                    }
                }
            }
            EmitterKind::PulsedOok if width <= 2.0 => tone,
            _ => Shape::Band {
                variance: target / HANN_NOISE_GAIN,
            },
        };

        let channels = if spec.kind == EmitterKind::HopBurst && spec.hop_channels > 1 {
            let sr = scene.settings.sample_rate_hz;
            let half_span = (sr / 2.0 - spec.offset_hz.abs() - spec.bandwidth_hz / 2.0).max(0.0);
            let step = 2.0 * half_span / (spec.hop_channels - 1) as f64;
            (0..spec.hop_channels)
                .map(|c| {
                    let f = spec.offset_hz - half_span + c as f64 * step;
                    band_bins(f, spec.bandwidth_hz, bin_hz, n)
                })
                .collect()
        } else {
            vec![range]
        };

        let slot_blocks = match spec.kind {
            EmitterKind::PulsedOok => 2,
            _ => 1,
        };
        Self {
            kind: spec.kind,
            n,
            current: channels[0],
            channels,
            shape,
            gate: Gate {
                slot_blocks,
                duty: spec.duty,
                active: Vec::new(),
            },
            rng,
        }
    }

    /// Adds this emitter's contribution for block `index`. Time-domain shapes
    /// go straight into `samples`; band shapes are accumulated into
    /// `spectrum` (returns true when it did so).
    fn render(&mut self, index: u64, samples: &mut [Complex64], spectrum: &mut [Complex64]) -> bool {
        if !self.gate.is_on(index, &mut self.rng) {
            return false;
        }
        if self.kind == EmitterKind::HopBurst
            && self.channels.len() > 1
            && index % self.gate.slot_blocks == 0
        {
            self.current = self.channels[self.rng.gen_range(0..self.channels.len())];
        }
        let n = self.n as f64;
        match self.shape {
            Shape::Tone { bin, amp, phase } => {
                for (i, s) in samples.iter_mut().enumerate() {
                    let arg = std::f64::consts::TAU * bin as f64 * i as f64 / n + phase;
                    *s += Complex64::from_polar(amp, arg);
                }
                false
            }
            Shape::Fm {
                bin,
                amp,
                beta,
                phase,
            } => {
                for (i, s) in samples.iter_mut().enumerate() {
                    let t = std::f64::consts::TAU * i as f64 / n;
                    let arg = bin as f64 * t + beta * (t + phase).sin();
                    *s += Complex64::from_polar(amp, arg);
                }
                false
            }
            Shape::Band { variance } => {
                let std = (variance / 2.0).sqrt();
                let (lo, hi) = self.current;
                for k in lo..=hi {
                    let re: f64 = self.rng.sample(StandardNormal);
                    let im: f64 = self.rng.sample(StandardNormal);
                    spectrum[k.rem_euclid(self.n as i64) as usize] += Complex64::new(re, im) * std;
                }
                true
            }
        }
    }
}
