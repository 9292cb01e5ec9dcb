//! Guards the analysis request against leaking what the model is scored on:
//! attribute class names, band/technology names, scenario identifiers and any
//! number other than the two tuning values.

use regex::Regex;

use super::{AnalysisRequest, VlmError};
use crate::eval::class_vocabulary;
use crate::format_mhz;

/// Band and technology words that would give the answer away.
pub const TECH_TERMS: &[&str] = &[
    "lte", "gsm", "umts", "5g", "nr", "fm", "dab", "dvb", "dvb-s2", "dvb-t", "wi-fi", "wifi", "wlan", "bluetooth",
    "ble", "ook", "ask", "fsk", "gfsk", "ofdm", "qpsk", "bpsk", "downlink", "uplink", "hopping", "mouse",
];

const SCENARIO_IDS: &str = r"(?i)\b(?:S[0-9]+|KT|OOD)\b";

pub struct HygieneFilter {
    vocab: Regex,
    ids: Regex,
    numbers: Regex,
}

impl Default for HygieneFilter {
    fn default() -> Self {
        Self::new()
    }
}

impl HygieneFilter {
    pub fn new() -> Self {
        let mut words: Vec<String> = class_vocabulary().iter().map(|w| regex::escape(w)).collect();
        words.extend(TECH_TERMS.iter().map(|w| regex::escape(w)));
        Self {
            vocab: Regex::new(&format!(r"(?i)\b(?:{})\b", words.join("|"))).unwrap(),
            ids: Regex::new(SCENARIO_IDS).unwrap(),
            numbers: Regex::new(r"\d+(?:\.\d+)?").unwrap(),
        }
    }

    /// Forbidden words and identifiers found in `text`.
    pub fn violations(&self, text: &str) -> Vec<String> {
        let mut out: Vec<String> = self.vocab.find_iter(text).map(|m| m.as_str().to_string()).collect();
        out.extend(self.ids.find_iter(text).map(|m| format!("scenario id {}", m.as_str())));
        out
    }

    /// Checks both prompt texts; the user text may only carry the center
    /// frequency, the sample rate and the list numbering as numerals.
    pub fn check_request(&self, req: &AnalysisRequest) -> Result<(), VlmError> {
        let mut bad = self.violations(&req.system_text);
        bad.extend(self.violations(&req.user_text));
        let allowed = [
            format_mhz(req.settings.center_freq_hz),
            format_mhz(req.settings.sample_rate_hz),
            "1".into(),
            "2".into(),
            "3".into(),
            "4".into(),
        ];
        for m in self.numbers.find_iter(&req.system_text).chain(self.numbers.find_iter(&req.user_text)) {
            if !allowed.iter().any(|a| a == m.as_str()) {
                bad.push(format!("numeral {}", m.as_str()));
            }
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(VlmError::Hygiene(bad.join(", ")))
        }
    }

    /// Checks a serialized request body whose image has been replaced by a
    /// placeholder.
    pub fn check_body(&self, redacted: &str) -> Result<(), VlmError> {
        let bad = self.violations(redacted);
        if bad.is_empty() {
            Ok(())
        } else {
            Err(VlmError::Hygiene(bad.join(", ")))
        }
    }
}
