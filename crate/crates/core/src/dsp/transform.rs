use std::f64::consts::TAU;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::source::IQBlock;

/// Forward DFT, in place, unnormalized. Implementations are interchangeable
/// (CPU reference today, an accelerated one could slot in here).
pub trait Transform: Send + Sync {
    fn len(&self) -> usize;
    fn forward(&self, buf: &mut [Complex64]);
}

pub struct RustFftTransform {
    plan: Arc<dyn Fft<f64>>,
}

impl RustFftTransform {
    pub fn new(n: usize) -> Self {
        Self {
            plan: FftPlanner::new().plan_fft_forward(n),
        }
    }
}

impl Transform for RustFftTransform {
    fn len(&self) -> usize {
        self.plan.len()
    }

    fn forward(&self, buf: &mut [Complex64]) {
        self.plan.process(buf);
    }
}

/// Periodic Hann window, `w[n] = 0.5·(1 − cos(2πn/N))`.
pub fn hann_window(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| {
            if 2 * i == n {
                // cos(π) is not exactly −1 in floating point
                1.0
            } else {
                0.5 * (1.0 - (TAU * i as f64 / n as f64).cos())
            }
        })
        .collect()
}

pub fn window_hann(block: &IQBlock) -> IQBlock {
    let w = hann_window(block.samples.len());
    apply_window(block, &w)
}

pub(crate) fn apply_window(block: &IQBlock, w: &[f64]) -> IQBlock {
    IQBlock {
        samples: block.samples.iter().zip(w).map(|(s, &g)| s * g).collect(),
        block_index: block.block_index,
        settings: block.settings,
    }
}
