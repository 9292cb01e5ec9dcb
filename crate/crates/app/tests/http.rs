use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use rfscope::config::{AppConfig, SourceKind};
use rfscope::service::{router, AppState};
use rfscope_core::vlm::client::image_sha256;
use rfscope_core::vlm::{ApiFlavor, BackendProfile, ReplayFixtures};
use serde_json::{json, Value};
use tower::ServiceExt;

fn config() -> AppConfig {
    let mut c = AppConfig {
        blocks_per_s: 400.0,
        fps: 60,
        ..Default::default()
    };
    c.backends.push(BackendProfile {
        name: "offline".into(),
        endpoint_url: "http://127.0.0.1:9".into(),
        model_id: "m".into(),
        api_flavor: ApiFlavor::OpenaiChatImage,
        timeout_s: 2.0,
        max_tokens: 64,
        api_key: Some("sk-secret".into()),
        fixture_path: None,
    });
    c
}

fn app(c: AppConfig) -> Router {
    router(AppState::new(c).unwrap())
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<&str>) -> (StatusCode, Vec<u8>) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(body.map(|b| Body::from(b.to_string())).unwrap_or_default())
        .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes().to_vec();
    (status, bytes)
}

async fn call_json(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let text = body.map(|b| b.to_string());
    let (s, b) = call(app, method, uri, text.as_deref()).await;
    (s, serde_json::from_slice(&b).unwrap_or(Value::Null))
}

fn png_title(png: &[u8]) -> String {
    let dec = png::Decoder::new(std::io::Cursor::new(png));
    let reader = dec.read_info().unwrap();
    let info = reader.info();
    info.utf8_text
        .iter()
        .find(|t| t.keyword == "Title")
        .map(|t| t.get_text().unwrap())
        .unwrap()
}

#[tokio::test]
async fn config_and_presets() {
    let app = app(config());
    let (s, v) = call_json(&app, "GET", "/api/config", None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["settings"]["center_freq_hz"], 806e6);
    assert_eq!(v["pipeline"]["averaging_frames"], 4);
    assert_eq!(v["presets"].as_array().unwrap().len(), 6);

    let (_, p) = call_json(&app, "GET", "/api/presets", None).await;
    let pairs: Vec<(f64, f64)> = p
        .as_array()
        .unwrap()
        .iter()
        .map(|x| {
            (
                x["center_freq_hz"].as_f64().unwrap() / 1e6,
                x["sample_rate_hz"].as_f64().unwrap() / 1e6,
            )
        })
        .collect();
    let expect = [(98.0, 10.0), (433.92, 5.0), (806.0, 20.0), (950.0, 20.0), (2437.0, 40.0), (2400.0, 40.0)];
    for ((a, b), (x, y)) in pairs.iter().zip(expect) {
        assert!((a - x).abs() < 1e-9 && (b - y).abs() < 1e-9);
    }
}

#[tokio::test]
async fn backends_hide_secrets() {
    let app = app(config());
    let (s, b) = call(&app, "GET", "/api/backends", None).await;
    assert_eq!(s, StatusCode::OK);
    let text = String::from_utf8(b).unwrap();
    assert!(text.contains("offline"));
    assert!(!text.contains("sk-secret"));
    assert!(!text.contains("api_key"));
}

#[tokio::test]
async fn tune_then_waterfall_title() {
    let app = app(config());
    let (s, v) = call_json(
        &app,
        "POST",
        "/api/tune",
        Some(json!({"center_freq_hz": 98e6, "sample_rate_hz": 10e6, "gain_db": 25.0})),
    )
    .await;
    assert_eq!(s, StatusCode::OK, "{v}");
    let (s, png) = call(&app, "GET", "/api/waterfall.png", None).await;
    assert_eq!(s, StatusCode::OK);
    let title = png_title(&png);
    assert!(title.contains("98") && title.contains("10"), "{title}");
    let (_, cfg) = call_json(&app, "GET", "/api/config", None).await;
    assert_eq!(cfg["settings"]["center_freq_hz"], 98e6);
}

#[tokio::test]
async fn malformed_bodies_are_400() {
    let app = app(config());
    let (s, _) = call(&app, "POST", "/api/tune", Some("{not json")).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    let (s, v) = call_json(&app, "POST", "/api/tune", Some(json!({"center_freq_hz": 98e6}))).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert!(v["error"].as_str().unwrap().contains("sample_rate_hz"), "{v}");
    let (s, _) = call_json(
        &app,
        "POST",
        "/api/tune",
        Some(json!({"center_freq_hz": 98e6, "sample_rate_hz": -1.0, "gain_db": 0.0})),
    )
    .await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    let (s, v) = call_json(&app, "POST", "/api/pipeline", Some(json!({"fps": 0}))).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert!(v["error"].as_str().unwrap().contains("fps"));
    let (s, _) = call_json(&app, "POST", "/api/pipeline", Some(json!({"averaging_frames": 0}))).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    let (s, v) = call_json(&app, "POST", "/api/pipeline", Some(json!({"averagng_frames": 2}))).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert!(v["error"].as_str().unwrap().contains("averagng_frames"));
    let (s, _) = call_json(&app, "POST", "/api/analyze", Some(json!({}))).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    let (s, _) = call_json(&app, "POST", "/api/analyze", Some(json!({"backend": "nope"}))).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn pipeline_update_applies() {
    let app = app(config());
    let (s, v) = call_json(
        &app,
        "POST",
        "/api/pipeline",
        Some(json!({"averaging_frames": 8, "threshold_db": -70.0, "fps": 5})),
    )
    .await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["pipeline"]["averaging_frames"], 8);
    assert_eq!(v["pipeline"]["threshold_db"], -70.0);
    assert_eq!(v["fps"], 5);
}

#[tokio::test]
async fn analyze_with_mock_returns_fixture_and_pins_image() {
    let app = app(config());
    let (s, v) = call_json(&app, "POST", "/api/analyze", Some(json!({"backend": "rf-gpt"}))).await;
    assert_eq!(s, StatusCode::OK, "{v}");
    let expect = ReplayFixtures::builtin().get("S1", "rf-gpt", 1).unwrap().to_string();
    assert_eq!(v["response"], expect);
    assert!(v["latency_s"].is_number());

    let sha = v["image_sha256"].as_str().unwrap();
    let (s, img) = call(&app, "GET", v["image_url"].as_str().unwrap(), None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(image_sha256(&img), sha);

    // the preview is the dispatched body with the image replaced by its hash
    let preview = v["prompt_preview"].as_str().unwrap();
    assert_eq!(preview.matches(&format!("<image sha256:{sha}>")).count(), 1);
    let body: Value = serde_json::from_str(preview).unwrap();
    let user = body["messages"][1]["content"][1]["text"].as_str().unwrap();
    assert!(user.contains("Center frequency: 806 MHz"));
    assert!(user.contains("Sample rate: 20 MHz"));
    assert!(!preview.contains("LTE"));

    let id = v["session_id"].as_str().unwrap();
    let (s, c) = call_json(
        &app,
        "POST",
        "/api/chat",
        Some(json!({"session_id": id, "question": "How wide is it?"})),
    )
    .await;
    assert_eq!(s, StatusCode::OK, "{c}");
    assert_eq!(c["turns"].as_array().unwrap().len(), 3);
    assert_eq!(c["turns"][2]["role"], "assistant");
    assert_eq!(c["response"], "Follow-up received; transcript has 2 turns.");
}

#[tokio::test]
async fn unknown_session_is_404() {
    let app = app(config());
    let (s, _) = call_json(
        &app,
        "POST",
        "/api/chat",
        Some(json!({"session_id": "00000000-0000-0000-0000-000000000000", "question": "hi"})),
    )
    .await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    let (s, _) = call(&app, "GET", "/api/sessions/nope/image.png", None).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn backend_failure_is_502() {
    let app = app(config());
    let (s, v) = call_json(&app, "POST", "/api/analyze", Some(json!({"backend": "offline"}))).await;
    assert_eq!(s, StatusCode::BAD_GATEWAY, "{v}");
    assert!(v["error"].as_str().unwrap().contains("transport"));
}

#[tokio::test]
async fn mock_without_fixture_is_502() {
    let app = app(config());
    let (s, _) = call_json(
        &app,
        "POST",
        "/api/tune",
        Some(json!({"center_freq_hz": 100e6, "sample_rate_hz": 2e6, "gain_db": 0.0})),
    )
    .await;
    assert_eq!(s, StatusCode::OK);
    let (s, v) = call_json(&app, "POST", "/api/analyze", Some(json!({"backend": "qwen-base"}))).await;
    assert_eq!(s, StatusCode::BAD_GATEWAY, "{v}");
}

#[tokio::test]
async fn no_source_is_409() {
    let app = app(AppConfig {
        source: SourceKind::None,
        ..config()
    });
    let (s, _) = call(&app, "GET", "/api/stream", None).await;
    assert_eq!(s, StatusCode::CONFLICT);
    let (s, _) = call_json(&app, "POST", "/api/analyze", Some(json!({"backend": "rf-gpt"}))).await;
    assert_eq!(s, StatusCode::CONFLICT);
    let (s, _) = call(&app, "GET", "/api/waterfall.png", None).await;
    assert_eq!(s, StatusCode::CONFLICT);
    let (s, _) = call(&app, "GET", "/api/config", None).await;
    assert_eq!(s, StatusCode::OK);
}

async fn next_event(body: &mut Body, pending: &mut String) -> Value {
    loop {
        if let Some(i) = pending.find('\n') {
            let line: String = pending.drain(..=i).collect();
            return serde_json::from_str(&line).unwrap();
        }
        let frame = body.frame().await.unwrap().unwrap();
        pending.push_str(std::str::from_utf8(frame.data_ref().unwrap()).unwrap());
    }
}

#[tokio::test]
async fn stream_never_shows_stale_calibration() {
    let state = AppState::new(config()).unwrap();
    let app = router(Arc::clone(&state));
    let resp = app
        .clone()
        .oneshot(Request::get("/api/stream").body(Body::empty()).unwrap())
        .await
        .unwrap();
    assert_eq!(resp.status(), StatusCode::OK);
    assert_eq!(resp.headers()["content-type"], "application/x-ndjson");
    let mut body = resp.into_body();
    let mut pending = String::new();
    let mut last_block = None;
    for _ in 0..3 {
        let e = next_event(&mut body, &mut pending).await;
        assert_eq!(e["calibration"]["center_freq_hz"], 806e6);
        assert_eq!(e["spectrum"].as_array().unwrap().len(), 2048);
        assert!(e["peaks"].is_array());
        let b = e["block_index"].as_u64().unwrap();
        assert!(last_block.map_or(true, |l| b > l));
        last_block = Some(b);
    }
    let (s, v) = call_json(
        &app,
        "POST",
        "/api/tune",
        Some(json!({"center_freq_hz": 98e6, "sample_rate_hz": 10e6, "gain_db": 25.0, "fft_size": 1024})),
    )
    .await;
    assert_eq!(s, StatusCode::OK);
    let generation = v["generation"].as_u64().unwrap();
    for _ in 0..5 {
        let e = next_event(&mut body, &mut pending).await;
        assert_eq!(e["generation"].as_u64().unwrap(), generation);
        assert_eq!(e["calibration"]["center_freq_hz"], 98e6);
        assert_eq!(e["spectrum"].as_array().unwrap().len(), 1024);
    }
}
