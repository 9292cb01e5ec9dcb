//! HTTP API used by the operator console. Handlers never touch the pipeline
//! directly: they send commands to the acquisition thread and work on
//! snapshot copies. Model calls run on the blocking pool.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU32, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use axum::body::{Body, Bytes};
use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use futures_util::stream;
use rfscope_core::dsp::PipelineConfig;
use rfscope_core::eval::Suite;
use rfscope_core::render::{render_waterfall, RenderSpec};
use rfscope_core::source::{CaptureSettings, SceneSpec};
use rfscope_core::vlm::{AnalysisRequest, BackendClient, ChatSession, DispatchContext, VlmError};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::{json, Value};
use uuid::Uuid;

use crate::config::{presets, AppConfig, SourceKind, MAX_FPS};
use crate::live::{LiveError, LiveSource};

pub struct AppState {
    config: AppConfig,
    live: Option<LiveSource>,
    backends: Vec<Arc<BackendClient>>,
    settings: Mutex<CaptureSettings>,
    pipeline: Mutex<PipelineConfig>,
    fps: AtomicU32,
    sessions: Mutex<HashMap<String, Arc<Session>>>,
    suite: Suite,
}

struct Session {
    backend: Arc<BackendClient>,
    chat: Mutex<ChatSession>,
    last_used: Mutex<Instant>,
}

impl AppState {
    pub fn new(config: AppConfig) -> anyhow::Result<Arc<Self>> {
        config.validate()?;
        let suite = Suite::builtin();
        let settings = config.initial_settings();
        let live = match config.source {
            SourceKind::Simulator => {
                let suite = suite.clone();
                let scene_for = Box::new(move |s: &CaptureSettings| scene_for(&suite, s));
                Some(
                    LiveSource::start(settings, config.pipeline.clone(), config.blocks_per_s, scene_for)
                        .map_err(anyhow::Error::msg)?,
                )
            }
            SourceKind::None => None,
        };
        let backends = config
            .backends
            .iter()
            .map(|p| BackendClient::new(p.clone()).map(Arc::new))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Arc::new(Self {
            fps: AtomicU32::new(config.fps),
            pipeline: Mutex::new(config.pipeline.clone()),
            settings: Mutex::new(settings),
            sessions: Mutex::new(HashMap::new()),
            live,
            backends,
            suite,
            config,
        }))
    }

    fn live(&self) -> Result<&LiveSource, ApiError> {
        self.live
            .as_ref()
            .ok_or_else(|| ApiError::new(StatusCode::CONFLICT, "no live source is running"))
    }

    fn backend(&self, name: &str) -> Option<Arc<BackendClient>> {
        self.backends.iter().find(|b| b.profile().name == name).cloned()
    }

    /// Drops sessions idle for longer than the configured limit.
    fn evict_idle(&self) {
        let limit = Duration::from_secs(self.config.session_idle_s);
        self.sessions
            .lock()
            .unwrap()
            .retain(|_, s| s.last_used.lock().unwrap().elapsed() < limit);
    }

    fn session(&self, id: &str) -> Result<Arc<Session>, ApiError> {
        self.evict_idle();
        let s = self
            .sessions
            .lock()
            .unwrap()
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, format!("unknown session {id}")))?;
        *s.last_used.lock().unwrap() = Instant::now();
        Ok(s)
    }
}

/// The live scene: the suite scenario tuned to exactly these settings if
/// there is one, otherwise a generic demo scene.
fn scene_for(suite: &Suite, settings: &CaptureSettings) -> SceneSpec {
    match suite.matching(settings.center_freq_hz, settings.sample_rate_hz) {
        Some(s) => SceneSpec {
            settings: *settings,
            ..s.scene.clone()
        },
        None => SceneSpec::demo(*settings),
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        Self {
            status,
            message: message.into(),
        }
    }

    fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({"error": self.message}))).into_response()
    }
}

impl From<LiveError> for ApiError {
    fn from(e: LiveError) -> Self {
        match e {
            LiveError::Stopped => Self::new(StatusCode::CONFLICT, e.to_string()),
            LiveError::Rejected(m) => Self::bad_request(m),
        }
    }
}

impl From<VlmError> for ApiError {
    fn from(e: VlmError) -> Self {
        let status = match e {
            VlmError::Timeout { .. } | VlmError::Transport(_) | VlmError::Protocol(_) | VlmError::NoFixture(_) => {
                StatusCode::BAD_GATEWAY
            }
            VlmError::Precondition(_) => StatusCode::CONFLICT,
            VlmError::Hygiene(_) | VlmError::Config(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        Self::new(status, e.to_string())
    }
}

/// Parses a JSON body; any syntax, type or unknown-field problem is a 400
/// naming the offending field.
fn parse<T: DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request(format!("malformed body: {e}")))
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/api/config", get(get_config))
        .route("/api/presets", get(get_presets))
        .route("/api/tune", post(post_tune))
        .route("/api/pipeline", post(post_pipeline))
        .route("/api/stream", get(get_stream))
        .route("/api/waterfall.png", get(get_waterfall))
        .route("/api/analyze", post(post_analyze))
        .route("/api/chat", post(post_chat))
        .route("/api/backends", get(get_backends))
        .route("/api/sessions/{id}/image.png", get(get_session_image))
        .with_state(state)
}

pub async fn serve(config: AppConfig) -> anyhow::Result<()> {
    let bind = config.bind;
    let state = AppState::new(config)?;
    let listener = tokio::net::TcpListener::bind(bind).await?;
    tracing::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}

fn config_json(state: &AppState) -> Value {
    json!({
        "settings": *state.settings.lock().unwrap(),
        "pipeline": *state.pipeline.lock().unwrap(),
        "fps": state.fps.load(Ordering::Relaxed),
        "source": state.config.source,
        "presets": presets(),
    })
}

async fn get_config(State(state): State<Arc<AppState>>) -> Json<Value> {
    Json(config_json(&state))
}

async fn get_presets() -> Json<Value> {
    Json(json!(presets()))
}

async fn get_backends(State(state): State<Arc<AppState>>) -> Json<Value> {
    let profiles: Vec<_> = state.backends.iter().map(|b| b.profile().clone()).collect();
    Json(json!(profiles))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TuneBody {
    center_freq_hz: f64,
    sample_rate_hz: f64,
    gain_db: f64,
    fft_size: Option<usize>,
}

async fn post_tune(State(state): State<Arc<AppState>>, body: Bytes) -> Result<Json<Value>, ApiError> {
    let b: TuneBody = parse(&body)?;
    let current = *state.settings.lock().unwrap();
    let settings = CaptureSettings::new(b.center_freq_hz, b.sample_rate_hz)
        .with_gain(b.gain_db)
        .with_fft_size(b.fft_size.unwrap_or(current.fft_size));
    settings
        .validate()
        .map_err(|e| ApiError::bad_request(e.to_string()))?;
    let generation = match &state.live {
        Some(live) => Some(live.tune(settings).await?),
        None => None,
    };
    *state.settings.lock().unwrap() = settings;
    Ok(Json(json!({"settings": settings, "generation": generation})))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PipelineBody {
    averaging_frames: Option<usize>,
    threshold_db: Option<f64>,
    fps: Option<u32>,
}

async fn post_pipeline(State(state): State<Arc<AppState>>, body: Bytes) -> Result<Json<Value>, ApiError> {
    let b: PipelineBody = parse(&body)?;
    if let Some(fps) = b.fps {
        if !(1..=MAX_FPS).contains(&fps) {
            return Err(ApiError::bad_request(format!("fps: must be in 1..={MAX_FPS}")));
        }
    }
    let mut cfg = state.pipeline.lock().unwrap().clone();
    if let Some(k) = b.averaging_frames {
        cfg.averaging_frames = k;
    }
    if let Some(t) = b.threshold_db {
        cfg.threshold_db = t;
    }
    cfg.validate().map_err(|e| ApiError::bad_request(e.to_string()))?;
    if let Some(live) = &state.live {
        live.set_pipeline(cfg.clone()).await?;
    }
    *state.pipeline.lock().unwrap() = cfg;
    if let Some(fps) = b.fps {
        state.fps.store(fps, Ordering::Relaxed);
    }
    Ok(Json(config_json(&state)))
}

/// Newline-delimited JSON, one event per display tick. A frame is sent at
/// most once; ticks with nothing new are skipped. After a retune the watch
/// channel is emptied before the tune call returns, so no frame with the old
/// calibration can follow it.
async fn get_stream(State(state): State<Arc<AppState>>) -> Result<Response, ApiError> {
    let rx = state.live()?.frames();
    let st = state.clone();
    let events = stream::unfold((rx, None::<(u64, u64)>), move |(mut rx, mut last)| {
        let st = st.clone();
        async move {
            loop {
                let fps = st.fps.load(Ordering::Relaxed).max(1);
                tokio::time::sleep(Duration::from_secs_f64(1.0 / fps as f64)).await;
                let current = rx.borrow_and_update().clone();
                let Some(f) = current else {
                    if rx.has_changed().is_err() {
                        return None;
                    }
                    continue;
                };
                let key = (f.generation, f.frame.block_index);
                if last == Some(key) {
                    continue;
                }
                last = Some(key);
                let cal = f.frame.calibration();
                let event = json!({
                    "generation": f.generation,
                    "block_index": f.frame.block_index,
                    "calibration": {
                        "freq_start_hz": cal.freq_start_hz,
                        "freq_step_hz": cal.freq_step_hz,
                        "bins": cal.bins,
                        "center_freq_hz": cal.center_freq_hz(),
                        "span_hz": cal.span_hz(),
                    },
                    "spectrum": f.frame.power_db,
                    "peaks": f.peaks,
                });
                let mut line = event.to_string();
                line.push('\n');
                return Some((Ok::<_, std::io::Error>(Bytes::from(line)), (rx, last)));
            }
        }
    });
    Ok(Response::builder()
        .header(header::CONTENT_TYPE, "application/x-ndjson")
        .header(header::CACHE_CONTROL, "no-cache")
        .body(Body::from_stream(events))
        .unwrap())
}

fn png_response(png: Vec<u8>) -> Response {
    ([(header::CONTENT_TYPE, "image/png"), (header::CACHE_CONTROL, "no-store")], png).into_response()
}

async fn render_snapshot(state: &AppState) -> Result<(Vec<u8>, CaptureSettings), ApiError> {
    let snap = state.live()?.snapshot().await?;
    let png = tokio::task::spawn_blocking(move || {
        let spec = RenderSpec::auto(&snap.buffer)?;
        render_waterfall(&snap.buffer, &spec)
    })
    .await
    .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?
    .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?;
    Ok((png, snap.settings))
}

async fn get_waterfall(State(state): State<Arc<AppState>>) -> Result<Response, ApiError> {
    let (png, _) = render_snapshot(&state).await?;
    Ok(png_response(png))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AnalyzeBody {
    backend: String,
}

async fn post_analyze(State(state): State<Arc<AppState>>, body: Bytes) -> Result<Json<Value>, ApiError> {
    let b: AnalyzeBody = parse(&body)?;
    let backend = state
        .backend(&b.backend)
        .ok_or_else(|| ApiError::bad_request(format!("backend: unknown backend {:?}", b.backend)))?;
    let (png, settings) = render_snapshot(&state).await?;
    let session_id = Uuid::new_v4().to_string();
    let mut ctx = DispatchContext::new(session_id.clone());
    if let Some(s) = state.suite.matching(settings.center_freq_hz, settings.sample_rate_hz) {
        ctx = ctx.with_replay(s.id.clone(), 1);
    }
    let request = AnalysisRequest::new(png, settings);
    let client = backend.clone();
    let (request, prepared, resp) = tokio::task::spawn_blocking(move || {
        let prepared = client.prepare_analysis(&request)?;
        let resp = client.dispatch(&prepared, &ctx, None)?;
        Ok::<_, VlmError>((request, prepared, resp))
    })
    .await
    .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))??;

    let chat = ChatSession::from_analysis(request, &resp);
    state.evict_idle();
    state.sessions.lock().unwrap().insert(
        session_id.clone(),
        Arc::new(Session {
            backend,
            chat: Mutex::new(chat),
            last_used: Mutex::new(Instant::now()),
        }),
    );
    Ok(Json(json!({
        "session_id": session_id,
        "backend": resp.backend_name,
        "response": resp.text,
        "latency_s": resp.latency_s,
        "timestamp": resp.timestamp,
        "settings": settings,
        "image_sha256": prepared.image_sha256,
        "image_url": format!("/api/sessions/{session_id}/image.png"),
        "request_url": prepared.url,
        "prompt_preview": prepared.redacted,
    })))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ChatBody {
    session_id: String,
    question: String,
}

async fn post_chat(State(state): State<Arc<AppState>>, body: Bytes) -> Result<Json<Value>, ApiError> {
    let b: ChatBody = parse(&body)?;
    if b.question.trim().is_empty() {
        return Err(ApiError::bad_request("question: must not be empty"));
    }
    let session = state.session(&b.session_id)?;
    let id = b.session_id.clone();
    let (resp, turns) = tokio::task::spawn_blocking(move || {
        let mut chat = session.chat.lock().unwrap();
        let resp = session
            .backend
            .chat_continue(&mut chat, &b.question, &DispatchContext::new(b.session_id))?;
        Ok::<_, VlmError>((resp, chat.turns.clone()))
    })
    .await
    .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))??;
    Ok(Json(json!({
        "session_id": id,
        "backend": resp.backend_name,
        "response": resp.text,
        "latency_s": resp.latency_s,
        "timestamp": resp.timestamp,
        "turns": turns,
    })))
}

async fn get_session_image(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let session = state.session(&id)?;
    let png = session.chat.lock().unwrap().base_request.image_png.clone();
    Ok(png_response(png))
}
