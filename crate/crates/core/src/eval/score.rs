use std::collections::BTreeSet;

use super::bandplan::BandPlan;
use super::types::{
    AttributeExtraction, GroundTruth, Hallucination, HallucinationKind, Leakage, Occupancy, TrialScore,
};
use crate::error::ConfigError;
use crate::source::CaptureSettings;

pub const NARROW_BELOW_MHZ: f64 = 5.0;
pub const WIDE_ABOVE_MHZ: f64 = 15.0;
/// A bandwidth this close to the prompt's sample rate is suspect.
pub const LEAK_TOLERANCE_MHZ: f64 = 1.0;

/// `< 5` narrow, `5..=15` medium, `> 15` wide.
pub fn classify_occupancy(bandwidth_mhz: f64) -> Result<Occupancy, ConfigError> {
    if !(bandwidth_mhz > 0.0) || !bandwidth_mhz.is_finite() {
        return Err(ConfigError::new(format!("bandwidth must be > 0 MHz (got {bandwidth_mhz})")));
    }
    Ok(if bandwidth_mhz < NARROW_BELOW_MHZ {
        Occupancy::Narrow
    } else if bandwidth_mhz <= WIDE_ABOVE_MHZ {
        Occupancy::Medium
    } else {
        Occupancy::Wide
    })
}

fn hit<T: Ord>(x: Option<T>, set: &BTreeSet<T>) -> u8 {
    x.is_some_and(|v| set.contains(&v)) as u8
}

/// a1..a5 and their sum. A no-signal claim against a present signal scores 0.
pub fn score_paes(x: &AttributeExtraction, gt: &GroundTruth) -> ([u8; 5], u8) {
    if x.claims_no_signal && gt.signal_present {
        return ([0; 5], 0);
    }
    let bits = [
        hit(x.temporal, &gt.temporal),
        hit(x.occupancy, &gt.occupancy),
        hit(x.snr, &gt.snr),
        hit(x.isolation, &gt.isolation),
        hit(x.tech_family, &gt.tech_family),
    ];
    (bits, bits.iter().sum())
}

/// Leaked when the stated width sits within 1 MHz of the sample rate and the
/// response either cites the settings or shows no image-based evidence.
pub fn detect_leakage(x: &AttributeExtraction, settings: &CaptureSettings, _gt: &GroundTruth) -> Leakage {
    let Some(bw) = x.bandwidth_mhz else {
        return Leakage::NoBandwidthEstimate;
    };
    let sr_mhz = settings.sample_rate_hz / 1e6;
    if (bw - sr_mhz).abs() <= LEAK_TOLERANCE_MHZ && (x.references_settings || !x.image_grounded_evidence) {
        Leakage::Leaked
    } else {
        Leakage::Grounded
    }
}

/// At most one record of each kind.
pub fn count_hallucinations(
    x: &AttributeExtraction,
    gt: &GroundTruth,
    settings: &CaptureSettings,
    plan: &BandPlan,
) -> Vec<Hallucination> {
    let mut out = Vec::new();
    if x.claims_no_signal && gt.signal_present {
        out.push(Hallucination {
            kind: HallucinationKind::FalseNegative,
            note: "claims no signal while one is present".into(),
        });
    }
    if let Some(label) = &x.raw_tech_label {
        if plan.is_plausible(label, settings) == Some(false) {
            let bands: Vec<_> = plan.covering(settings).iter().map(|b| b.name.as_str()).collect();
            out.push(Hallucination {
                kind: HallucinationKind::TechLabel,
                note: format!("{label} is implausible in {}", bands.join(", ")),
            });
        }
    }
    out
}

pub fn score_trial(
    x: &AttributeExtraction,
    gt: &GroundTruth,
    settings: &CaptureSettings,
    plan: &BandPlan,
) -> TrialScore {
    let (bits, paes) = score_paes(x, gt);
    TrialScore {
        bits,
        paes,
        leakage: detect_leakage(x, settings, gt),
        hallucinations: count_hallucinations(x, gt, settings, plan),
    }
}
