use std::collections::VecDeque;

use super::{Calibration, DspError, SpectrumFrame};

pub const WATERFALL_ROWS: usize = 200;

/// Rolling time–frequency matrix, oldest row first. Readers get clones.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct WaterfallBuffer {
    rows: VecDeque<SpectrumFrame>,
}

impl WaterfallBuffer {
    pub fn new() -> Self {
        Self {
            rows: VecDeque::with_capacity(WATERFALL_ROWS),
        }
    }

    pub fn push(&mut self, frame: SpectrumFrame) -> Result<(), DspError> {
        if let Some(last) = self.rows.back() {
            last.ensure_same_calibration(&frame)?;
        }
        if self.rows.len() == WATERFALL_ROWS {
            self.rows.pop_front();
        }
        self.rows.push_back(frame);
        Ok(())
    }

    pub fn clear(&mut self) {
        self.rows.clear();
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn capacity(&self) -> usize {
        WATERFALL_ROWS
    }

    /// Rows oldest first; the newest row is last.
    pub fn rows(&self) -> impl ExactSizeIterator<Item = &SpectrumFrame> + DoubleEndedIterator {
        self.rows.iter()
    }

    pub fn newest(&self) -> Option<&SpectrumFrame> {
        self.rows.back()
    }

    pub fn calibration(&self) -> Option<Calibration> {
        self.rows.front().map(SpectrumFrame::calibration)
    }

    /// Copy holding only the newest `n` rows.
    pub fn tail(&self, n: usize) -> WaterfallBuffer {
        let skip = self.rows.len().saturating_sub(n);
        WaterfallBuffer {
            rows: self.rows.iter().skip(skip).cloned().collect(),
        }
    }

    pub fn from_frames(frames: impl IntoIterator<Item = SpectrumFrame>) -> Result<Self, DspError> {
        let mut buf = Self::new();
        for f in frames {
            buf.push(f)?;
        }
        Ok(buf)
    }
}
