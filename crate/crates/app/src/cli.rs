use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use rfscope_core::dsp::Pipeline;
use rfscope_core::eval::{self, Adjudications, Scoring, Suite};
use rfscope_core::render::{render_waterfall, RenderSpec};
use rfscope_core::source::capture::{write_capture, CaptureReader};
use rfscope_core::source::{generate_scene, CaptureSettings, SceneSpec};
use rfscope_core::vlm::{AnalysisRequest, BackendClient, DispatchContext};

use crate::config::AppConfig;

#[derive(Debug, Parser)]
#[command(name = "rfscope", version, about = "Spectrum capture, waterfall rendering and model-assisted analysis")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the scene generator and write a capture file.
    Simulate {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a capture through the pipeline and render the waterfall.
    Render {
        #[arg(long)]
        capture: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Newest rows to render.
        #[arg(long, default_value_t = 200)]
        rows: usize,
    },
    /// One-shot analysis of a waterfall image.
    Analyze(AnalyzeArgs),
    /// Run the benchmark suite and write transcripts and reports.
    Evaluate {
        /// Suite file, or "builtin".
        #[arg(long)]
        suite: String,
        /// Comma-separated backend names.
        #[arg(long, value_delimiter = ',', required = true)]
        backends: Vec<String>,
        /// Adjudication file, or "builtin".
        #[arg(long)]
        adjudications: Option<String>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Re-aggregate an archived run without querying any backend.
    Report {
        /// Run directory or transcripts file.
        #[arg(long)]
        transcripts: PathBuf,
        /// Where to write the report files; defaults to stdout only.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Start the HTTP service.
    Serve {
        #[arg(long)]
        bind: Option<std::net::SocketAddr>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub image: PathBuf,
    /// Center frequency in MHz.
    #[arg(long)]
    pub fc: f64,
    /// Sample rate in MHz.
    #[arg(long)]
    pub sr: f64,
    #[arg(long)]
    pub backend: String,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Replay key for mock backends; defaults to the suite scenario tuned to --fc/--sr.
    #[arg(long)]
    pub scenario: Option<String>,
    #[arg(long, default_value_t = 1)]
    pub trial: u32,
}

/// Parses `argv` and runs the verb. Returns the process exit code.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    }
}

pub fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Simulate { scene, out } => simulate(&scene, &out),
        Command::Render { capture, out, rows } => render(&capture, &out, rows),
        Command::Analyze(args) => analyze(&args),
        Command::Evaluate {
            suite,
            backends,
            adjudications,
            out,
            config,
        } => evaluate(&suite, &backends, adjudications.as_deref(), &out, config.as_deref()),
        Command::Report { transcripts, out } => report(&transcripts, out.as_deref()),
        Command::Serve { bind, config } => {
            let mut cfg = AppConfig::load_or_default(config.as_deref())?;
            if let Some(b) = bind {
                cfg.bind = b;
            }
            tokio::runtime::Runtime::new()?.block_on(crate::service::serve(cfg))
        }
    }
}

fn simulate(scene: &Path, out: &Path) -> anyhow::Result<()> {
    let text = fs::read_to_string(scene).with_context(|| format!("reading {}", scene.display()))?;
    let spec = SceneSpec::from_toml(&text)?;
    let mut w = BufWriter::new(fs::File::create(out).with_context(|| format!("creating {}", out.display()))?);
    let n = write_capture(&mut w, &spec.settings, generate_scene(&spec)?)?;
    w.flush()?;
    eprintln!("wrote {n} blocks to {}", out.display());
    Ok(())
}

fn render(capture: &Path, out: &Path, rows: usize) -> anyhow::Result<()> {
    if rows == 0 {
        bail!("--rows must be at least 1");
    }
    let f = fs::File::open(capture).with_context(|| format!("opening {}", capture.display()))?;
    let reader = CaptureReader::new(BufReader::new(f))?;
    let mut pipeline = Pipeline::new(reader.settings().fft_size, Default::default())?;
    for block in reader {
        pipeline.process(&block?)?;
    }
    let buf = pipeline.waterfall().tail(rows);
    if buf.is_empty() {
        bail!("{} holds no blocks", capture.display());
    }
    let png = render_waterfall(&buf, &RenderSpec::auto(&buf)?)?;
    fs::write(out, png).with_context(|| format!("writing {}", out.display()))?;
    Ok(())
}

fn analyze(a: &AnalyzeArgs) -> anyhow::Result<()> {
    let cfg = AppConfig::load_or_default(a.config.as_deref())?;
    let profile = cfg
        .backend(&a.backend)
        .with_context(|| format!("unknown backend {:?}", a.backend))?;
    let client = BackendClient::new(profile.clone())?;
    let png = fs::read(&a.image).with_context(|| format!("reading {}", a.image.display()))?;
    let settings = CaptureSettings::new(a.fc * 1e6, a.sr * 1e6);
    settings.validate()?;
    let mut ctx = DispatchContext::new(format!("cli-{}", a.backend));
    let scenario = match &a.scenario {
        Some(s) => Some(s.clone()),
        None => Suite::builtin()
            .matching(settings.center_freq_hz, settings.sample_rate_hz)
            .map(|s| s.id.clone()),
    };
    if let Some(s) = scenario {
        ctx = ctx.with_replay(s, a.trial);
    }
    let resp = client.analyze(&AnalysisRequest::new(png, settings), &ctx)?;
    println!("{}", resp.text);
    eprintln!("{}: {:.2} s", resp.backend_name, resp.latency_s);
    Ok(())
}

fn evaluate(
    suite: &str,
    backends: &[String],
    adjudications: Option<&str>,
    out: &Path,
    config: Option<&Path>,
) -> anyhow::Result<()> {
    let suite = match suite {
        "builtin" => Suite::builtin(),
        p => Suite::load(Path::new(p))?,
    };
    let cfg = AppConfig::load_or_default(config)?;
    let clients = backends
        .iter()
        .map(|name| {
            let p = cfg.backend(name).with_context(|| format!("unknown backend {name:?}"))?;
            Ok(BackendClient::new(p.clone())?)
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    let scoring = Scoring {
        adjudications: match adjudications {
            None => None,
            Some("builtin") => Some(Adjudications::builtin()),
            Some(p) => Some(Adjudications::load(Path::new(p))?),
        },
        ..Scoring::default()
    };
    let run = eval::run_suite(&suite, &clients, &scoring)?;
    eval::write_run(out, &run)?;
    print!("{}", eval::report::render_text(&run.report));
    Ok(())
}

fn report(transcripts: &Path, out: Option<&Path>) -> anyhow::Result<()> {
    let records = eval::read_transcripts(transcripts)?;
    let report = eval::aggregate(&records);
    if let Some(dir) = out {
        eval::write_report(dir, &report)?;
    }
    print!("{}", eval::report::render_text(&report));
    Ok(())
}
