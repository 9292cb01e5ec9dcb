use std::sync::Arc;
use std::time::{Duration, Instant};

use base64::Engine;
use chrono::{DateTime, Utc};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use super::{
    AnalysisRequest, ApiFlavor, BackendProfile, ChatSession, DispatchContext, HygieneFilter, ModelResponse,
    ReplayFixtures, Role, Turn, VlmError,
};

/// A request body ready to send. The image is kept out of `redacted` (a
/// placeholder stands in) so the body can be shown and checked cheaply;
/// [`Prepared::body`] splices it back.
#[derive(Debug, Clone, PartialEq)]
pub struct Prepared {
    pub url: String,
    pub redacted: String,
    pub image_sha256: String,
    image_b64: String,
    placeholder: String,
}

impl Prepared {
    /// The exact bytes put on the wire.
    pub fn body(&self) -> String {
        self.redacted.replacen(&self.placeholder, &self.image_b64, 1)
    }
}

pub fn image_sha256(png: &[u8]) -> String {
    hex::encode(Sha256::digest(png))
}

/// One configured backend. Holds no connection state; every call builds its
/// own HTTP client so calls can run from any thread.
pub struct BackendClient {
    profile: BackendProfile,
    fixtures: Option<Arc<ReplayFixtures>>,
    hygiene: HygieneFilter,
}

impl BackendClient {
    pub fn new(profile: BackendProfile) -> Result<Self, VlmError> {
        profile.validate()?;
        let fixtures = match (profile.api_flavor, &profile.fixture_path) {
            (ApiFlavor::MockReplay, Some(p)) => Some(Arc::new(ReplayFixtures::load(p)?)),
            (ApiFlavor::MockReplay, None) => Some(Arc::new(ReplayFixtures::builtin())),
            _ => None,
        };
        Ok(Self {
            profile,
            fixtures,
            hygiene: HygieneFilter::new(),
        })
    }

    pub fn profile(&self) -> &BackendProfile {
        &self.profile
    }

    /// Builds and screens the first-turn request.
    pub fn prepare_analysis(&self, req: &AnalysisRequest) -> Result<Prepared, VlmError> {
        self.hygiene.check_request(req)?;
        let p = self.prepare(req, &[], None);
        self.hygiene.check_body(&p.redacted)?;
        Ok(p)
    }

    pub fn analyze(&self, req: &AnalysisRequest, ctx: &DispatchContext) -> Result<ModelResponse, VlmError> {
        let prepared = self.prepare_analysis(req)?;
        self.dispatch(&prepared, ctx, None)
    }

    /// Sends the original image, the whole transcript and `question`; on
    /// success both the question and the answer are appended to `session`.
    pub fn chat_continue(
        &self,
        session: &mut ChatSession,
        question: &str,
        ctx: &DispatchContext,
    ) -> Result<ModelResponse, VlmError> {
        if !session.has_assistant_turn() {
            return Err(VlmError::Precondition(
                "chat needs a completed first analysis in the session".into(),
            ));
        }
        self.hygiene.check_request(&session.base_request)?;
        let prepared = self.prepare(&session.base_request, &session.turns, Some(question));
        let resp = self.dispatch(&prepared, ctx, Some(session.turns.len() + 1))?;
        session.turns.push(Turn {
            role: Role::User,
            text: question.to_string(),
        });
        session.turns.push(Turn {
            role: Role::Assistant,
            text: resp.text.clone(),
        });
        Ok(resp)
    }

    pub fn dispatch(
        &self,
        prepared: &Prepared,
        ctx: &DispatchContext,
        chat_turns: Option<usize>,
    ) -> Result<ModelResponse, VlmError> {
        if self.profile.api_flavor == ApiFlavor::MockReplay {
            return self.replay(ctx, chat_turns);
        }
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs_f64(self.profile.timeout_s))
            .build()
            .map_err(|e| VlmError::Transport(e.to_string()))?;
        let mut rb = client
            .post(&prepared.url)
            .header(reqwest::header::CONTENT_TYPE, "application/json")
            .body(prepared.body());
        if let Some(key) = &self.profile.api_key {
            rb = rb.bearer_auth(key);
        }
        let started = Instant::now();
        let timestamp = Utc::now();
        let classify = |e: reqwest::Error| {
            if e.is_timeout() {
                VlmError::Timeout {
                    elapsed_s: started.elapsed().as_secs_f64(),
                }
            } else {
                VlmError::Transport(e.to_string())
            }
        };
        let resp = rb.send().map_err(classify)?;
        let status = resp.status();
        let body = resp.text().map_err(classify)?;
        let latency_s = started.elapsed().as_secs_f64();
        if !status.is_success() {
            return Err(VlmError::Transport(format!("HTTP {status}: {}", truncate(&body, 300))));
        }
        let v: Value = serde_json::from_str(&body).map_err(|e| VlmError::Protocol(format!("response is not JSON: {e}")))?;
        let text = match self.profile.api_flavor {
            ApiFlavor::OpenaiChatImage => openai_text(&v)?,
            ApiFlavor::OllamaGenerateImage => v
                .get("response")
                .and_then(Value::as_str)
                .map(str::to_string)
                .ok_or_else(|| VlmError::Protocol("missing \"response\" field".into()))?,
            ApiFlavor::MockReplay => unreachable!(),
        };
        Ok(ModelResponse {
            backend_name: self.profile.name.clone(),
            text,
            latency_s,
            timestamp,
            trial_id: ctx.trial_id.clone(),
        })
    }

    fn replay(&self, ctx: &DispatchContext, chat_turns: Option<usize>) -> Result<ModelResponse, VlmError> {
        let text = match chat_turns {
            Some(n) => format!("Follow-up received; transcript has {n} turns."),
            None => {
                let key = ctx
                    .replay_key
                    .as_ref()
                    .ok_or_else(|| VlmError::NoFixture(format!("{} (no replay key)", self.profile.name)))?;
                self.fixtures
                    .as_ref()
                    .and_then(|f| f.get(&key.scenario, &self.profile.name, key.trial))
                    .ok_or_else(|| {
                        VlmError::NoFixture(format!("({}, {}, {})", key.scenario, self.profile.name, key.trial))
                    })?
                    .to_string()
            }
        };
        Ok(ModelResponse {
            backend_name: self.profile.name.clone(),
            text,
            latency_s: 0.0,
            timestamp: DateTime::<Utc>::UNIX_EPOCH,
            trial_id: ctx.trial_id.clone(),
        })
    }

    fn prepare(&self, req: &AnalysisRequest, history: &[Turn], question: Option<&str>) -> Prepared {
        let image_sha256 = image_sha256(&req.image_png);
        let placeholder = format!("<image sha256:{image_sha256}>");
        let p = &self.profile;
        let base = p.endpoint_url.trim_end_matches('/');
        let (url, body) = match p.api_flavor {
            ApiFlavor::OllamaGenerateImage => {
                let mut prompt = req.user_text.clone();
                for t in history {
                    let who = match t.role {
                        Role::User => "User",
                        Role::Assistant => "Assistant",
                    };
                    prompt.push_str(&format!("\n\n{who}: {}", t.text));
                }
                if let Some(q) = question {
                    prompt.push_str(&format!("\n\nUser: {q}"));
                }
                (
                    format!("{base}/api/generate"),
                    json!({
                        "model": p.model_id,
                        "system": req.system_text,
                        "prompt": prompt,
                        "images": [placeholder],
                        "stream": false,
                        "options": {"num_predict": p.max_tokens},
                    }),
                )
            }
            // the mock shares the OpenAI shape so previews look like a real call
            ApiFlavor::OpenaiChatImage | ApiFlavor::MockReplay => {
                let mut messages = vec![
                    json!({"role": "system", "content": req.system_text}),
                    json!({"role": "user", "content": [
                        {"type": "image_url", "image_url": {"url": format!("data:image/png;base64,{placeholder}")}},
                        {"type": "text", "text": req.user_text},
                    ]}),
                ];
                for t in history {
                    let role = match t.role {
                        Role::User => "user",
                        Role::Assistant => "assistant",
                    };
                    messages.push(json!({"role": role, "content": t.text}));
                }
                if let Some(q) = question {
                    messages.push(json!({"role": "user", "content": q}));
                }
                let url = if p.api_flavor == ApiFlavor::MockReplay {
                    format!("mock://{}", p.name)
                } else {
                    format!("{base}/v1/chat/completions")
                };
                (
                    url,
                    json!({"model": p.model_id, "max_tokens": p.max_tokens, "messages": messages}),
                )
            }
        };
        Prepared {
            url,
            redacted: body.to_string(),
            image_sha256,
            image_b64: base64::engine::general_purpose::STANDARD.encode(&req.image_png),
            placeholder,
        }
    }
}

fn openai_text(v: &Value) -> Result<String, VlmError> {
    let msg = v
        .pointer("/choices/0/message")
        .ok_or_else(|| VlmError::Protocol("missing choices[0].message".into()))?;
    Ok(match msg.get("content") {
        Some(Value::String(s)) => s.clone(),
        Some(Value::Array(parts)) => parts
            .iter()
            .filter_map(|p| p.get("text").and_then(Value::as_str))
            .collect::<Vec<_>>()
            .join(""),
        // null content is a legitimate empty answer
        _ => String::new(),
    })
}

fn truncate(s: &str, n: usize) -> &str {
    match s.char_indices().nth(n) {
        Some((i, _)) => &s[..i],
        None => s,
    }
}
