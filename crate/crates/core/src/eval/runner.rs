use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use super::adjudication::Adjudications;
use super::aggregate::{aggregate, EvalReport, ExtractionSource, TrialRecord};
use super::bandplan::BandPlan;
use super::extract::Lexicon;
use super::report::{render_text, write_metrics_csv, write_paes_csv};
use super::score::score_trial;
use super::suite::{ScenarioSpec, Suite};
use super::types::AttributeExtraction;
use super::EvalError;
use crate::dsp::{Pipeline, PipelineConfig};
use crate::render::{render_waterfall, RenderSpec};
use crate::source::generate_scene;
use crate::vlm::client::image_sha256;
use crate::vlm::{AnalysisRequest, BackendClient, DispatchContext};

pub const TRANSCRIPTS_FILE: &str = "transcripts.jsonl";
pub const REPORT_FILE: &str = "report.txt";
pub const PAES_CSV: &str = "paes.csv";
pub const METRICS_CSV: &str = "metrics.csv";
pub const IMAGES_DIR: &str = "images";

/// Everything scoring needs besides the suite and the backends.
pub struct Scoring {
    pub lexicon: Lexicon,
    pub band_plan: BandPlan,
    pub adjudications: Option<Adjudications>,
}

impl Default for Scoring {
    fn default() -> Self {
        Self {
            lexicon: Lexicon::builtin(),
            band_plan: BandPlan::builtin(),
            adjudications: None,
        }
    }
}

/// One rendered capture, shared by every backend.
pub struct Capture {
    pub scenario: String,
    pub trial: u32,
    pub image_file: String,
    pub request: AnalysisRequest,
}

pub struct SuiteRun {
    pub captures: Vec<Capture>,
    pub records: Vec<TrialRecord>,
    pub report: EvalReport,
}

/// Simulates trial `trial` of `scenario`, fills the waterfall and renders it.
pub fn capture(scenario: &ScenarioSpec, trial: u32) -> Result<Capture, EvalError> {
    let scene = scenario.scene.reseeded(trial as u64);
    let mut pipeline = Pipeline::new(scene.settings.fft_size, PipelineConfig::default())?;
    for block in generate_scene(&scene)? {
        pipeline.process(&block)?;
    }
    let snap = pipeline.snapshot();
    let png = render_waterfall(&snap, &RenderSpec::auto(&snap)?)?;
    Ok(Capture {
        scenario: scenario.id.clone(),
        trial,
        image_file: format!("{IMAGES_DIR}/{}_t{trial}.png", scenario.id),
        request: AnalysisRequest::new(png, scene.settings),
    })
}

/// Renders every scenario × trial once, sends each image to every backend
/// (backends in parallel, trials in order per backend), scores and
/// aggregates. Backend failures become zero-score trials.
pub fn run_suite(suite: &Suite, backends: &[BackendClient], scoring: &Scoring) -> Result<SuiteRun, EvalError> {
    suite.validate()?;
    let mut captures = Vec::new();
    for s in &suite.scenarios {
        for t in 1..=s.trials {
            captures.push(capture(s, t)?);
        }
    }
    let per_backend: Vec<Vec<TrialRecord>> = std::thread::scope(|scope| {
        let handles: Vec<_> = backends
            .iter()
            .map(|b| {
                let captures = &captures;
                scope.spawn(move || {
                    captures
                        .iter()
                        .map(|c| {
                            let s = suite.get(&c.scenario).expect("capture of a suite scenario");
                            run_trial(s, c, b, scoring)
                        })
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("backend worker panicked")).collect()
    });
    // scenario, then backend, then trial
    let mut records = Vec::new();
    for s in &suite.scenarios {
        for recs in &per_backend {
            records.extend(recs.iter().filter(|r| r.scenario == s.id).cloned());
        }
    }
    let report = aggregate(&records);
    Ok(SuiteRun {
        captures,
        records,
        report,
    })
}

fn run_trial(s: &ScenarioSpec, c: &Capture, backend: &BackendClient, scoring: &Scoring) -> TrialRecord {
    let name = &backend.profile().name;
    let trial_id = format!("{}-t{}", c.scenario, c.trial);
    let ctx = DispatchContext::new(trial_id.clone()).with_replay(c.scenario.clone(), c.trial);
    let (response, latency_s, timestamp, error) = match backend.analyze(&c.request, &ctx) {
        Ok(r) => (r.text, r.latency_s, Some(r.timestamp), None),
        Err(e) => (String::new(), 0.0, None, Some(e.to_string())),
    };
    let adjudicated = scoring
        .adjudications
        .as_ref()
        .and_then(|a| a.get(&c.scenario, name, c.trial));
    let (source, extraction) = match (&error, adjudicated) {
        (Some(_), _) => (ExtractionSource::Failed, AttributeExtraction::default()),
        (None, Some(a)) => (ExtractionSource::Adjudicated, a.extraction.clone()),
        (None, None) => (ExtractionSource::Extracted, scoring.lexicon.extract(&response)),
    };
    let settings = s.settings();
    let score = score_trial(&extraction, &s.ground_truth, settings, &scoring.band_plan);
    TrialRecord {
        scenario: c.scenario.clone(),
        backend: name.clone(),
        trial: c.trial,
        trial_id,
        center_freq_hz: settings.center_freq_hz,
        sample_rate_hz: settings.sample_rate_hz,
        image_sha256: image_sha256(&c.request.image_png),
        image_file: c.image_file.clone(),
        system_text: c.request.system_text.clone(),
        user_text: c.request.user_text.clone(),
        response,
        latency_s,
        timestamp,
        error,
        extraction_source: source,
        extraction,
        score,
        full_span_occupied: s.ground_truth.full_span_occupied,
    }
}

/// Writes transcripts, images, the text report and both CSV tables to `dir`.
pub fn write_run(dir: &Path, run: &SuiteRun) -> Result<(), EvalError> {
    fs::create_dir_all(dir.join(IMAGES_DIR))?;
    for c in &run.captures {
        fs::write(dir.join(&c.image_file), &c.request.image_png)?;
    }
    let mut w = BufWriter::new(fs::File::create(dir.join(TRANSCRIPTS_FILE))?);
    for r in &run.records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    write_report(dir, &run.report)
}

pub fn write_report(dir: &Path, report: &EvalReport) -> Result<(), EvalError> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(REPORT_FILE), render_text(report))?;
    write_paes_csv(fs::File::create(dir.join(PAES_CSV))?, report)?;
    write_metrics_csv(fs::File::create(dir.join(METRICS_CSV))?, report)?;
    Ok(())
}

/// Reads `transcripts.jsonl` from a run directory (or the file itself).
pub fn read_transcripts(path: &Path) -> Result<Vec<TrialRecord>, EvalError> {
    let file: PathBuf = if path.is_dir() {
        path.join(TRANSCRIPTS_FILE)
    } else {
        path.to_path_buf()
    };
    let mut out = Vec::new();
    for (i, line) in BufReader::new(fs::File::open(&file)?).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line)
                .map_err(|e| EvalError::Archive(format!("{}:{}: {e}", file.display(), i + 1)))?,
        );
    }
    Ok(out)
}
