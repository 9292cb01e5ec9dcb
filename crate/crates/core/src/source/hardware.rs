//! Hardware source seam. No radio driver ships with this crate; embedders
//! register an adapter, and tests use [`ReplayAdapter`].

use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;

use super::capture::CaptureReader;
use super::{BlockStream, CaptureSettings, SourceError};

pub trait HardwareAdapter: Send + Sync {
    fn name(&self) -> &str;
    fn open(&self, settings: &CaptureSettings) -> Result<BlockStream, SourceError>;
}

#[derive(Default)]
pub struct HardwareRegistry {
    adapter: Option<Box<dyn HardwareAdapter>>,
}

impl HardwareRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(&mut self, adapter: Box<dyn HardwareAdapter>) {
        self.adapter = Some(adapter);
    }

    pub fn adapter(&self) -> Option<&dyn HardwareAdapter> {
        self.adapter.as_deref()
    }
}

pub fn open_hardware_source(
    registry: &HardwareRegistry,
    settings: &CaptureSettings,
) -> Result<BlockStream, SourceError> {
    settings.validate()?;
    match registry.adapter() {
        Some(a) => a.open(settings),
        None => Err(SourceError::Unsupported("no hardware adapter registered".into())),
    }
}

/// Adapter that replays a capture file. The file's own header must agree with
/// the requested tuning.
pub struct ReplayAdapter {
    path: PathBuf,
}

impl ReplayAdapter {
    pub fn new(path: impl Into<PathBuf>) -> Self {
        Self { path: path.into() }
    }
}

impl HardwareAdapter for ReplayAdapter {
    fn name(&self) -> &str {
        "replay"
    }

    fn open(&self, settings: &CaptureSettings) -> Result<BlockStream, SourceError> {
        let reader = CaptureReader::new(BufReader::new(File::open(&self.path)?))?;
        let file = reader.settings();
        if file.center_freq_hz != settings.center_freq_hz
            || file.sample_rate_hz != settings.sample_rate_hz
            || file.fft_size != settings.fft_size
        {
            return Err(SourceError::Unsupported(format!(
                "replay file is tuned to {} Hz / {} Hz / N={}, requested {} Hz / {} Hz / N={}",
                file.center_freq_hz,
                file.sample_rate_hz,
                file.fft_size,
                settings.center_freq_hz,
                settings.sample_rate_hz,
                settings.fft_size
            )));
        }
        Ok(Box::new(reader))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::source::capture::write_capture;
    use crate::source::{generate_scene, EmitterKind, EmitterSpec, SceneSpec};

    #[test]
    fn no_adapter_is_unsupported() {
        let reg = HardwareRegistry::new();
        let err = open_hardware_source(&reg, &CaptureSettings::new(806e6, 20e6)).err().unwrap();
        assert!(matches!(err, SourceError::Unsupported(_)));
        assert!(err.to_string().contains("hardware source not available"));
    }

    #[test]
    fn zero_fft_size_is_config_error() {
        let reg = HardwareRegistry::new();
        let err = open_hardware_source(&reg, &CaptureSettings::new(806e6, 20e6).with_fft_size(0))
            .err()
            .unwrap();
        assert!(matches!(err, SourceError::Config(_)));
    }

    #[test]
    fn replay_adapter_returns_file_content() {
        let settings = CaptureSettings::new(98e6, 10e6).with_fft_size(256);
        let spec = SceneSpec::new(settings, -70.0, 4)
            .with_emitter(EmitterSpec::new(EmitterKind::FmLike, 1e6, 2e5, 20.0).with_seed(9));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cap.rfa");
        let mut f = File::create(&path).unwrap();
        write_capture(&mut f, &settings, generate_scene(&spec).unwrap()).unwrap();
        drop(f);

        let bytes = std::fs::read(&path).unwrap();
        let expected: Vec<_> = CaptureReader::new(bytes.as_slice()).unwrap().map(Result::unwrap).collect();

        let mut reg = HardwareRegistry::new();
        reg.register(Box::new(ReplayAdapter::new(&path)));
        let got: Vec<_> = open_hardware_source(&reg, &settings).unwrap().map(Result::unwrap).collect();
        assert_eq!(got, expected);

        let retuned = CaptureSettings::new(99e6, 10e6).with_fft_size(256);
        assert!(open_hardware_source(&reg, &retuned).is_err());
    }
}
