use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::types::{AttributeExtraction, HallucinationKind, Leakage, TrialScore};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtractionSource {
    Adjudicated,
    Extracted,
    /// The backend call failed; the trial scores zero.
    Failed,
}

/// One scenario × backend × trial, as archived.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub scenario: String,
    pub backend: String,
    pub trial: u32,
    pub trial_id: String,
    pub center_freq_hz: f64,
    pub sample_rate_hz: f64,
    pub image_sha256: String,
    pub image_file: String,
    pub system_text: String,
    pub user_text: String,
    pub response: String,
    pub latency_s: f64,
    pub timestamp: Option<DateTime<Utc>>,
    pub error: Option<String>,
    pub extraction_source: ExtractionSource,
    pub extraction: AttributeExtraction,
    pub score: TrialScore,
    pub full_span_occupied: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioScore {
    pub scenario: String,
    pub backend: String,
    pub trials: u32,
    pub mean_paes: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendMetrics {
    pub backend: String,
    pub responses: u32,
    pub failed: u32,
    pub leaked: u32,
    pub grounded: u32,
    pub no_bandwidth_estimate: u32,
    /// Leaked share of bandwidth-bearing responses; `None` when there are none.
    pub plr: Option<f64>,
    pub false_negative_count: u32,
    pub tech_label_count: u32,
    pub total_hallucinations: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub scenarios: Vec<String>,
    pub backends: Vec<String>,
    pub paes: Vec<ScenarioScore>,
    pub metrics: Vec<BackendMetrics>,
}

impl EvalReport {
    pub fn mean_paes(&self, scenario: &str, backend: &str) -> Option<f64> {
        self.paes
            .iter()
            .find(|s| s.scenario == scenario && s.backend == backend)
            .map(|s| s.mean_paes)
    }

    pub fn backend(&self, name: &str) -> Option<&BackendMetrics> {
        self.metrics.iter().find(|m| m.backend == name)
    }
}

fn push_unique(v: &mut Vec<String>, s: &str) {
    if !v.iter().any(|x| x == s) {
        v.push(s.to_string());
    }
}

/// Scenario and backend order follow first appearance in `records`.
pub fn aggregate(records: &[TrialRecord]) -> EvalReport {
    let mut scenarios = Vec::new();
    let mut backends = Vec::new();
    for r in records {
        push_unique(&mut scenarios, &r.scenario);
        push_unique(&mut backends, &r.backend);
    }
    let mut paes = Vec::new();
    for s in &scenarios {
        for b in &backends {
            let scores: Vec<u8> = records
                .iter()
                .filter(|r| &r.scenario == s && &r.backend == b)
                .map(|r| r.score.paes)
                .collect();
            if scores.is_empty() {
                continue;
            }
            paes.push(ScenarioScore {
                scenario: s.clone(),
                backend: b.clone(),
                trials: scores.len() as u32,
                mean_paes: scores.iter().map(|&p| p as f64).sum::<f64>() / scores.len() as f64,
            });
        }
    }
    let metrics = backends
        .iter()
        .map(|b| {
            let mine: Vec<&TrialRecord> = records.iter().filter(|r| &r.backend == b).collect();
            let count = |l: Leakage| mine.iter().filter(|r| r.score.leakage == l).count() as u32;
            let halluc = |k: HallucinationKind| mine.iter().map(|r| r.score.count(k) as u32).sum::<u32>();
            let (leaked, grounded) = (count(Leakage::Leaked), count(Leakage::Grounded));
            let (fnc, tlc) = (halluc(HallucinationKind::FalseNegative), halluc(HallucinationKind::TechLabel));
            BackendMetrics {
                backend: b.clone(),
                responses: mine.len() as u32,
                failed: mine.iter().filter(|r| r.error.is_some()).count() as u32,
                leaked,
                grounded,
                no_bandwidth_estimate: count(Leakage::NoBandwidthEstimate),
                plr: (leaked + grounded > 0).then(|| leaked as f64 / (leaked + grounded) as f64),
                false_negative_count: fnc,
                tech_label_count: tlc,
                total_hallucinations: fnc + tlc,
            }
        })
        .collect();
    EvalReport {
        scenarios,
        backends,
        paes,
        metrics,
    }
}
