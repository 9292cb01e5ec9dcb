//! Capture replay file.
//!
//! Layout (all little-endian):
//!
//! ```text
//! "RFA1" | center_freq_hz f64 | sample_rate_hz f64 | gain_db f64 | fft_size u32
//! then interleaved I,Q f32 pairs, fft_size pairs per block
//! ```

use std::io::{self, Read, Write};

use rustfft::num_complex::Complex64;

use super::{CaptureSettings, IQBlock, SourceError};

pub const MAGIC: &[u8; 4] = b"RFA1";
pub const HEADER_LEN: usize = 4 + 8 * 3 + 4;

pub fn write_header<W: Write>(w: &mut W, settings: &CaptureSettings) -> io::Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&settings.center_freq_hz.to_le_bytes())?;
    w.write_all(&settings.sample_rate_hz.to_le_bytes())?;
    w.write_all(&settings.gain_db.to_le_bytes())?;
    let n = u32::try_from(settings.fft_size)
        .map_err(|_| io::Error::new(io::ErrorKind::InvalidInput, "fft_size exceeds u32"))?;
    w.write_all(&n.to_le_bytes())
}

pub fn write_block<W: Write>(w: &mut W, block: &IQBlock) -> io::Result<()> {
    let mut buf = Vec::with_capacity(block.samples.len() * 8);
    for s in &block.samples {
        buf.extend_from_slice(&(s.re as f32).to_le_bytes());
        buf.extend_from_slice(&(s.im as f32).to_le_bytes());
    }
    w.write_all(&buf)
}

/// Writes a header followed by every block; returns the block count.
pub fn write_capture<W, I>(w: &mut W, settings: &CaptureSettings, blocks: I) -> io::Result<u64>
where
    W: Write,
    I: IntoIterator<Item = IQBlock>,
{
    write_header(w, settings)?;
    let mut count = 0;
    for block in blocks {
        write_block(w, &block)?;
        count += 1;
    }
    Ok(count)
}

/// Streaming reader over a capture file.
pub struct CaptureReader<R> {
    inner: R,
    settings: CaptureSettings,
    next_index: u64,
    buf: Vec<u8>,
    done: bool,
}

impl<R: Read> CaptureReader<R> {
    pub fn new(mut inner: R) -> Result<Self, SourceError> {
        let mut header = [0u8; HEADER_LEN];
        inner
            .read_exact(&mut header)
            .map_err(|_| SourceError::Format("file shorter than header".into()))?;
        if &header[..4] != MAGIC {
            return Err(SourceError::Format("bad magic, expected \"RFA1\"".into()));
        }
        let f64_at = |o: usize| f64::from_le_bytes(header[o..o + 8].try_into().unwrap());
        let fft_size = u32::from_le_bytes(header[28..32].try_into().unwrap()) as usize;
        let settings = CaptureSettings {
            center_freq_hz: f64_at(4),
            sample_rate_hz: f64_at(12),
            gain_db: f64_at(20),
            fft_size,
        };
        settings.validate()?;
        Ok(Self {
            inner,
            settings,
            next_index: 0,
            buf: vec![0u8; fft_size * 8],
            done: false,
        })
    }

    pub fn settings(&self) -> &CaptureSettings {
        &self.settings
    }

    fn read_block(&mut self) -> Result<Option<IQBlock>, SourceError> {
        let mut filled = 0;
        while filled < self.buf.len() {
            match self.inner.read(&mut self.buf[filled..]) {
                Ok(0) => break,
                Ok(k) => filled += k,
                Err(e) if e.kind() == io::ErrorKind::Interrupted => continue,
                Err(e) => return Err(e.into()),
            }
        }
        if filled == 0 {
            return Ok(None);
        }
        if filled < self.buf.len() {
            return Err(SourceError::Format(format!(
                "truncated block {}: {} of {} bytes",
                self.next_index,
                filled,
                self.buf.len()
            )));
        }
        let samples = self
            .buf
            .chunks_exact(8)
            .map(|c| {
                let re = f32::from_le_bytes(c[..4].try_into().unwrap());
                let im = f32::from_le_bytes(c[4..].try_into().unwrap());
                Complex64::new(re as f64, im as f64)
            })
            .collect();
        let block = IQBlock::new(samples, self.next_index, self.settings);
        self.next_index += 1;
        Ok(Some(block))
    }
}

impl<R: Read> Iterator for CaptureReader<R> {
    type Item = Result<IQBlock, SourceError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        match self.read_block() {
            Ok(Some(b)) => Some(Ok(b)),
            Ok(None) => {
                self.done = true;
                None
            }
            Err(e) => {
                self.done = true;
                Some(Err(e))
            }
        }
    }
}
