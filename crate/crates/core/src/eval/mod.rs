//! Scenario suites, response scoring and report aggregation.
//!
//! A trial's response is read into an [`AttributeExtraction`] (by the
//! keyword [`Lexicon`] or, when present, a hand [`Adjudication`]), scored
//! against the scenario's [`GroundTruth`] and rolled up per scenario and
//! backend by [`aggregate`].

mod adjudication;
mod aggregate;
mod bandplan;
mod extract;
pub mod report;
mod runner;
mod score;
mod suite;
mod types;

use thiserror::Error;

pub use adjudication::{Adjudication, Adjudications};
pub use aggregate::{aggregate, BackendMetrics, EvalReport, ExtractionSource, ScenarioScore, TrialRecord};
pub use bandplan::{Band, BandPlan};
pub use extract::{extract_attributes, Lexicon};
pub use runner::{
    capture, read_transcripts, run_suite, write_report, write_run, Capture, Scoring, SuiteRun, IMAGES_DIR,
    METRICS_CSV, PAES_CSV, REPORT_FILE, TRANSCRIPTS_FILE,
};
pub use score::{
    classify_occupancy, count_hallucinations, detect_leakage, score_paes, score_trial, LEAK_TOLERANCE_MHZ,
};
pub use suite::{ScenarioSpec, Suite};
pub use types::{
    class_vocabulary, AttributeExtraction, GroundTruth, Hallucination, HallucinationKind, Isolation, Leakage,
    Occupancy, Snr, TechFamily, Temporal, TrialScore,
};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error(transparent)]
    Config(#[from] crate::ConfigError),
    #[error(transparent)]
    Dsp(#[from] crate::dsp::DspError),
    #[error(transparent)]
    Render(#[from] crate::render::RenderError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("transcript archive: {0}")]
    Archive(String),
}
