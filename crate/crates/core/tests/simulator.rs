use std::io::Cursor;

use rfscope_core::dsp::{detect_peaks, spectrum, window_hann, PipelineConfig, SpectrumFrame};
use rfscope_core::eval::{classify_occupancy, Occupancy};
use rfscope_core::source::capture::{write_capture, CaptureReader};
use rfscope_core::source::{generate_scene, CaptureSettings, EmitterKind, EmitterSpec, SceneSpec};

const FLOOR: f64 = -80.0;

fn cfg() -> PipelineConfig {
    PipelineConfig {
        db_floor: -300.0,
        ..Default::default()
    }
}

fn raw_frames(spec: &SceneSpec) -> Vec<SpectrumFrame> {
    generate_scene(spec)
        .unwrap()
        .map(|b| spectrum(&window_hann(&b), &cfg()))
        .collect()
}

fn lin(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

fn db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Per-bin linear mean over all frames, in dB.
fn mean_db(frames: &[SpectrumFrame]) -> Vec<f64> {
    let n = frames[0].power_db.len();
    (0..n)
        .map(|k| db(frames.iter().map(|f| lin(f.power_db[k])).sum::<f64>() / frames.len() as f64))
        .collect()
}

fn band_mean_db(v: &[f64], lo: usize, hi: usize) -> f64 {
    db(v[lo..=hi].iter().map(|&d| lin(d)).sum::<f64>() / (hi - lo + 1) as f64)
}

/// Bin index of `offset_hz` in a centered spectrum.
fn bin_of(s: &CaptureSettings, offset_hz: f64) -> usize {
    ((offset_hz / s.bin_hz()).round() as i64 + s.fft_size as i64 / 2) as usize
}

/// Width of the widest run above `FLOOR + snr/2` in the time-averaged spectrum.
fn measured_bandwidth_mhz(spec: &SceneSpec, snr_db: f64) -> f64 {
    let frames = raw_frames(spec);
    let frame = SpectrumFrame {
        power_db: mean_db(&frames),
        ..frames[0].clone()
    };
    let pc = PipelineConfig {
        threshold_db: FLOOR + snr_db / 2.0,
        ..cfg()
    };
    detect_peaks(&frame, &pc)
        .iter()
        .map(|p| p.bandwidth_hz)
        .fold(0.0, f64::max)
        / 1e6
}

#[test]
fn noise_floor_is_calibrated() {
    let s = CaptureSettings::new(98e6, 10e6).with_fft_size(1024);
    let frames = raw_frames(&SceneSpec::new(s, FLOOR, 100));
    let m = mean_db(&frames);
    let overall = band_mean_db(&m, 0, 1023);
    assert!((overall - FLOOR).abs() < 0.2, "{overall}");
}

#[test]
fn band_power_matches_snr() {
    let s = CaptureSettings::new(806e6, 20e6).with_fft_size(2048);
    for (kind, snr) in [(EmitterKind::LteLike, 12.0), (EmitterKind::LteLike, 25.0), (EmitterKind::FmLike, 15.0)] {
        let bw = if kind == EmitterKind::FmLike { 0.4e6 } else { 5e6 };
        let spec = SceneSpec::new(s, FLOOR, 100).with_emitter(EmitterSpec::new(kind, 3e6, bw, snr).with_seed(9));
        let m = mean_db(&raw_frames(&spec));
        let (lo, hi) = (bin_of(&s, 3e6 - bw / 2.0), bin_of(&s, 3e6 + bw / 2.0) - 1);
        // FM occupies its Carson band rather than the whole nominal band
        let got = if kind == EmitterKind::FmLike {
            let total: f64 = m[lo..=hi].iter().map(|&d| lin(d) - lin(FLOOR)).sum();
            let occupied = m[lo..=hi].iter().filter(|&&d| d > FLOOR + 3.0).count() as f64;
            db(total / occupied)
        } else {
            db(lin(band_mean_db(&m, lo, hi)) - lin(FLOOR))
        };
        assert!((got - (FLOOR + snr)).abs() <= 1.5, "{kind:?} snr {snr}: {got}");
    }
}

#[test]
fn tone_power_matches_snr() {
    let s = CaptureSettings::new(433.92e6, 5e6).with_fft_size(2048);
    let spec = SceneSpec::new(s, FLOOR, 50).with_emitter(EmitterSpec::new(EmitterKind::PulsedOok, -1e6, 1.0, 20.0));
    let m = mean_db(&raw_frames(&spec));
    let k = bin_of(&s, -1e6);
    assert!((m[k] - (FLOOR + 20.0)).abs() <= 1.5, "{}", m[k]);
}

#[test]
fn energy_stays_in_band() {
    let s = CaptureSettings::new(806e6, 20e6).with_fft_size(2048);
    let spec = SceneSpec::new(s, FLOOR, 100).with_emitter(EmitterSpec::new(EmitterKind::LteLike, 3e6, 5e6, 20.0));
    let m = mean_db(&raw_frames(&spec));
    let (lo, hi) = (bin_of(&s, 0.5e6), bin_of(&s, 5.5e6) - 1);
    let outside: Vec<f64> = m
        .iter()
        .enumerate()
        .filter(|(k, _)| *k + 2 < lo || *k > hi + 2)
        .map(|(_, &v)| lin(v))
        .collect();
    let out_db = db(outside.iter().sum::<f64>() / outside.len() as f64);
    assert!((out_db - FLOOR).abs() < 0.3, "{out_db}");
    for k in lo..=hi {
        assert!(m[k] > FLOOR + 15.0, "bin {k}: {}", m[k]);
    }
}

#[test]
fn occupancy_classes_from_measured_width() {
    let s20 = CaptureSettings::new(806e6, 20e6).with_fft_size(2048);
    let lte = SceneSpec::new(s20, FLOOR, 50).with_emitter(EmitterSpec::new(EmitterKind::LteLike, 0.0, 20e6, 12.0));
    let w = measured_bandwidth_mhz(&lte, 12.0);
    assert!((w - 20.0).abs() < 0.1, "{w}");
    assert_eq!(classify_occupancy(w).unwrap(), Occupancy::Wide);

    let s10 = CaptureSettings::new(98e6, 10e6).with_fft_size(2048);
    let fm = SceneSpec::new(s10, FLOOR, 50).with_emitter(EmitterSpec::new(EmitterKind::FmLike, 0.0, 0.2e6, 15.0));
    let w = measured_bandwidth_mhz(&fm, 15.0);
    assert!(w > 0.0 && w <= 0.25, "{w}");
    assert_eq!(classify_occupancy(w).unwrap(), Occupancy::Narrow);
}

/// Fraction of frames whose in-band power clears the midpoint between the
/// floor and the on-level.
fn measured_duty(spec: &SceneSpec, e: &EmitterSpec) -> f64 {
    let s = &spec.settings;
    let (lo, hi) = (
        bin_of(s, e.offset_hz - e.bandwidth_hz / 2.0),
        bin_of(s, e.offset_hz + e.bandwidth_hz / 2.0) - 1,
    );
    let frames = raw_frames(spec);
    let on = frames
        .iter()
        .filter(|f| band_mean_db(&f.power_db, lo, hi) > FLOOR + e.snr_db / 2.0)
        .count();
    on as f64 / frames.len() as f64
}

#[test]
fn pulsed_duty_cycle() {
    let s = CaptureSettings::new(433.92e6, 5e6).with_fft_size(2048);
    for seed in [1, 2, 3] {
        let e = EmitterSpec::new(EmitterKind::PulsedOok, 0.0, 0.4e6, 15.0).with_duty(0.3).with_seed(seed);
        let spec = SceneSpec::new(s, FLOOR, 500).with_emitter(e.clone());
        let d = measured_duty(&spec, &e);
        assert!((d - 0.3).abs() <= 0.05, "seed {seed}: {d}");
    }
    let s40 = CaptureSettings::new(2437e6, 40e6).with_fft_size(2048);
    let e = EmitterSpec::new(EmitterKind::WifiBurst, 0.0, 20e6, 8.0).with_duty(0.25);
    let d = measured_duty(&SceneSpec::new(s40, FLOOR, 500).with_emitter(e.clone()), &e);
    assert!((d - 0.25).abs() <= 0.05, "{d}");
}

#[test]
fn same_seed_same_blocks() {
    let s = CaptureSettings::new(2400e6, 40e6).with_fft_size(512);
    let spec = SceneSpec::new(s, FLOOR, 20).with_emitter(
        EmitterSpec::new(EmitterKind::HopBurst, 11e6, 1e6, 3.0)
            .with_duty(0.5)
            .with_hop_channels(19),
    );
    let a: Vec<_> = generate_scene(&spec).unwrap().collect();
    let b: Vec<_> = generate_scene(&spec).unwrap().collect();
    assert_eq!(a, b);
    let c: Vec<_> = generate_scene(&spec.reseeded(2)).unwrap().collect();
    assert_ne!(a, c);
}

#[test]
fn scene_toml_round_trip() {
    let spec = SceneSpec::demo(CaptureSettings::new(98e6, 10e6));
    assert_eq!(SceneSpec::from_toml(&spec.to_toml()).unwrap(), spec);
}

#[test]
fn capture_file_round_trip() {
    let s = CaptureSettings::new(98e6, 10e6).with_gain(25.0).with_fft_size(256);
    let spec = SceneSpec::new(s, FLOOR, 12).with_emitter(EmitterSpec::new(EmitterKind::FmLike, 1e6, 0.2e6, 15.0));
    let mut bytes = Vec::new();
    assert_eq!(write_capture(&mut bytes, &s, generate_scene(&spec).unwrap()).unwrap(), 12);
    let reader = CaptureReader::new(Cursor::new(bytes)).unwrap();
    assert_eq!(*reader.settings(), s);
    let back: Vec<_> = reader.map(Result::unwrap).collect();
    let orig: Vec<_> = generate_scene(&spec).unwrap().collect();
    assert_eq!(back.len(), orig.len());
    for (a, b) in back.iter().zip(&orig) {
        assert_eq!(a.block_index, b.block_index);
        for (x, y) in a.samples.iter().zip(&b.samples) {
            assert!((x - y).norm() <= 1e-6 * y.norm().max(1e-6));
        }
    }
}

#[test]
fn truncated_capture_is_an_error() {
    let s = CaptureSettings::new(98e6, 10e6).with_fft_size(64);
    let mut bytes = Vec::new();
    write_capture(&mut bytes, &s, generate_scene(&SceneSpec::new(s, FLOOR, 2)).unwrap()).unwrap();
    bytes.truncate(bytes.len() - 3);
    let results: Vec<_> = CaptureReader::new(Cursor::new(bytes)).unwrap().collect();
    assert!(results[0].is_ok());
    assert!(results[1].is_err());
}
