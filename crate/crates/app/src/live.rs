//! The acquisition thread. It alone owns the generator, pipeline and
//! waterfall; everything else talks to it through commands and reads the
//! newest frame from a watch channel.

use std::sync::mpsc::{self, RecvTimeoutError};
use std::sync::Arc;
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

use rfscope_core::dsp::{Peak, Pipeline, PipelineConfig, SpectrumFrame, WaterfallBuffer};
use rfscope_core::source::{CaptureSettings, SceneGenerator, SceneSpec};
use tokio::sync::{oneshot, watch};

/// Picks the simulated scene for a tuning.
pub type SceneFor = Box<dyn Fn(&CaptureSettings) -> SceneSpec + Send>;

#[derive(Debug, Clone)]
pub struct LiveFrame {
    /// Bumped on every retune; frames of an older generation are never published after it.
    pub generation: u64,
    pub settings: CaptureSettings,
    pub frame: SpectrumFrame,
    pub peaks: Vec<Peak>,
}

#[derive(Debug, Clone)]
pub struct Snapshot {
    pub generation: u64,
    pub settings: CaptureSettings,
    pub buffer: WaterfallBuffer,
}

enum Command {
    Tune(CaptureSettings, oneshot::Sender<Result<u64, String>>),
    SetPipeline(PipelineConfig, oneshot::Sender<Result<(), String>>),
    Snapshot(oneshot::Sender<Snapshot>),
    Stop,
}

pub struct LiveSource {
    cmd: mpsc::Sender<Command>,
    frames: watch::Receiver<Option<Arc<LiveFrame>>>,
    thread: Option<JoinHandle<()>>,
}

#[derive(Debug)]
pub enum LiveError {
    Stopped,
    Rejected(String),
}

impl std::error::Error for LiveError {}

impl std::fmt::Display for LiveError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LiveError::Stopped => f.write_str("live source is not running"),
            LiveError::Rejected(m) => f.write_str(m),
        }
    }
}

impl LiveSource {
    pub fn start(
        settings: CaptureSettings,
        cfg: PipelineConfig,
        blocks_per_s: f64,
        scene_for: SceneFor,
    ) -> Result<Self, String> {
        settings.validate().map_err(|e| e.to_string())?;
        let generator = SceneGenerator::unbounded(&scene_for(&settings)).map_err(|e| e.to_string())?;
        let pipeline = Pipeline::new(settings.fft_size, cfg).map_err(|e| e.to_string())?;
        let (cmd, rx) = mpsc::channel();
        let (tx_frames, frames) = watch::channel(None);
        let worker = Worker {
            rx,
            frames: tx_frames,
            settings,
            pipeline,
            generator,
            scene_for,
            generation: 1,
            period: Duration::from_secs_f64(1.0 / blocks_per_s),
            waiting: Vec::new(),
        };
        let thread = std::thread::Builder::new()
            .name("live-pipeline".into())
            .spawn(move || worker.run())
            .map_err(|e| e.to_string())?;
        Ok(Self {
            cmd,
            frames,
            thread: Some(thread),
        })
    }

    pub fn frames(&self) -> watch::Receiver<Option<Arc<LiveFrame>>> {
        self.frames.clone()
    }

    /// Retunes and resets the buffers; returns the new generation.
    pub async fn tune(&self, settings: CaptureSettings) -> Result<u64, LiveError> {
        let (tx, rx) = oneshot::channel();
        self.cmd.send(Command::Tune(settings, tx)).map_err(|_| LiveError::Stopped)?;
        rx.await.map_err(|_| LiveError::Stopped)?.map_err(LiveError::Rejected)
    }

    pub async fn set_pipeline(&self, cfg: PipelineConfig) -> Result<(), LiveError> {
        let (tx, rx) = oneshot::channel();
        self.cmd.send(Command::SetPipeline(cfg, tx)).map_err(|_| LiveError::Stopped)?;
        rx.await.map_err(|_| LiveError::Stopped)?.map_err(LiveError::Rejected)
    }

    /// Copy of the waterfall; waits for the first row after a retune.
    pub async fn snapshot(&self) -> Result<Snapshot, LiveError> {
        let (tx, rx) = oneshot::channel();
        self.cmd.send(Command::Snapshot(tx)).map_err(|_| LiveError::Stopped)?;
        rx.await.map_err(|_| LiveError::Stopped)
    }
}

impl Drop for LiveSource {
    fn drop(&mut self) {
        let _ = self.cmd.send(Command::Stop);
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

struct Worker {
    rx: mpsc::Receiver<Command>,
    frames: watch::Sender<Option<Arc<LiveFrame>>>,
    settings: CaptureSettings,
    pipeline: Pipeline,
    generator: SceneGenerator,
    scene_for: SceneFor,
    generation: u64,
    period: Duration,
    waiting: Vec<oneshot::Sender<Snapshot>>,
}

impl Worker {
    fn run(mut self) {
        let mut next = Instant::now();
        loop {
            let timeout = next.saturating_duration_since(Instant::now());
            match self.rx.recv_timeout(timeout) {
                Ok(Command::Stop) | Err(RecvTimeoutError::Disconnected) => return,
                Ok(cmd) => {
                    self.handle(cmd);
                    continue;
                }
                Err(RecvTimeoutError::Timeout) => {}
            }
            next += self.period;
            // don't try to catch up after a stall
            if next < Instant::now() {
                next = Instant::now() + self.period;
            }
            self.step();
        }
    }

    fn handle(&mut self, cmd: Command) {
        match cmd {
            Command::Tune(settings, reply) => {
                let _ = reply.send(self.retune(settings));
            }
            Command::SetPipeline(cfg, reply) => {
                let _ = reply.send(self.pipeline.set_config(cfg).map_err(|e| e.to_string()));
            }
            Command::Snapshot(reply) => {
                if self.pipeline.waterfall().is_empty() {
                    self.waiting.push(reply);
                } else {
                    let _ = reply.send(self.snapshot());
                }
            }
            Command::Stop => {}
        }
    }

    fn retune(&mut self, settings: CaptureSettings) -> Result<u64, String> {
        settings.validate().map_err(|e| e.to_string())?;
        let generator = SceneGenerator::unbounded(&(self.scene_for)(&settings)).map_err(|e| e.to_string())?;
        let pipeline = Pipeline::new(settings.fft_size, self.pipeline.config().clone()).map_err(|e| e.to_string())?;
        self.generator = generator;
        self.pipeline = pipeline;
        self.settings = settings;
        self.generation += 1;
        self.frames.send_replace(None);
        Ok(self.generation)
    }

    fn snapshot(&self) -> Snapshot {
        Snapshot {
            generation: self.generation,
            settings: self.settings,
            buffer: self.pipeline.snapshot(),
        }
    }

    fn step(&mut self) {
        let Some(block) = self.generator.next() else {
            return;
        };
        let frame = match self.pipeline.process(&block) {
            Ok(f) => f,
            Err(e) => {
                tracing::error!("pipeline rejected block: {e}");
                return;
            }
        };
        let peaks = self.pipeline.peaks(&frame);
        self.frames.send_replace(Some(Arc::new(LiveFrame {
            generation: self.generation,
            settings: self.settings,
            frame,
            peaks,
        })));
        if !self.waiting.is_empty() {
            let snap = self.snapshot();
            for w in self.waiting.drain(..) {
                let _ = w.send(snap.clone());
            }
        }
    }
}
