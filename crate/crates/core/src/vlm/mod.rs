//! Vision-language model backends: the fixed analysis prompt, wire formats for
//! OpenAI-style and Ollama-style servers, offline replay, and follow-up chat.

pub mod client;
pub mod hygiene;
mod prompt;
pub mod replay;

use std::path::PathBuf;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::{ensure, ConfigError};
use crate::source::CaptureSettings;

pub use client::{BackendClient, Prepared};
pub use hygiene::HygieneFilter;
pub use prompt::{build_prompt, SYSTEM_TEXT};
pub use replay::ReplayFixtures;

#[derive(Debug, Error)]
pub enum VlmError {
    #[error("backend timed out after {elapsed_s:.2} s")]
    Timeout { elapsed_s: f64 },
    #[error("transport error: {0}")]
    Transport(String),
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("request rejected before dispatch: {0}")]
    Hygiene(String),
    #[error("no replay fixture for {0}")]
    NoFixture(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ApiFlavor {
    OpenaiChatImage,
    OllamaGenerateImage,
    MockReplay,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendProfile {
    pub name: String,
    #[serde(default)]
    pub endpoint_url: String,
    #[serde(default)]
    pub model_id: String,
    pub api_flavor: ApiFlavor,
    #[serde(default = "default_timeout")]
    pub timeout_s: f64,
    #[serde(default = "default_max_tokens")]
    pub max_tokens: u32,
    /// Bearer token for OpenAI-style servers. Never serialized back out.
    #[serde(default, skip_serializing)]
    pub api_key: Option<String>,
    /// Replay file for `mock_replay`; the built-in set when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixture_path: Option<PathBuf>,
}

fn default_timeout() -> f64 {
    60.0
}

fn default_max_tokens() -> u32 {
    512
}

impl BackendProfile {
    pub fn mock(name: &str) -> Self {
        Self {
            name: name.to_string(),
            endpoint_url: String::new(),
            model_id: name.to_string(),
            api_flavor: ApiFlavor::MockReplay,
            timeout_s: default_timeout(),
            max_tokens: default_max_tokens(),
            api_key: None,
            fixture_path: None,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        ensure(!self.name.trim().is_empty(), || "backend name must not be empty".into())?;
        ensure(self.timeout_s.is_finite() && self.timeout_s > 0.0, || {
            format!("{}: timeout_s must be > 0", self.name)
        })?;
        ensure(self.max_tokens > 0, || format!("{}: max_tokens must be > 0", self.name))?;
        if self.api_flavor != ApiFlavor::MockReplay {
            let ok = reqwest::Url::parse(&self.endpoint_url)
                .map(|u| matches!(u.scheme(), "http" | "https") && u.host().is_some())
                .unwrap_or(false);
            ensure(ok, || format!("{}: endpoint_url {:?} is not an http(s) URL", self.name, self.endpoint_url))?;
        }
        Ok(())
    }
}

/// What one analysis sends: the rendered image plus the two prompt texts.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisRequest {
    pub image_png: Vec<u8>,
    pub settings: CaptureSettings,
    pub system_text: String,
    pub user_text: String,
}

impl AnalysisRequest {
    pub fn new(image_png: Vec<u8>, settings: CaptureSettings) -> Self {
        let (system_text, user_text) = build_prompt(&settings);
        Self {
            image_png,
            settings,
            system_text,
            user_text,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelResponse {
    pub backend_name: String,
    pub text: String,
    pub latency_s: f64,
    pub timestamp: DateTime<Utc>,
    pub trial_id: String,
}

/// Selects a canned response for `mock_replay`. Travels beside the request,
/// never inside it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReplayKey {
    pub scenario: String,
    pub trial: u32,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DispatchContext {
    pub trial_id: String,
    pub replay_key: Option<ReplayKey>,
}

impl DispatchContext {
    pub fn new(trial_id: impl Into<String>) -> Self {
        Self {
            trial_id: trial_id.into(),
            replay_key: None,
        }
    }

    pub fn with_replay(mut self, scenario: impl Into<String>, trial: u32) -> Self {
        self.replay_key = Some(ReplayKey {
            scenario: scenario.into(),
            trial,
        });
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Turn {
    pub role: Role,
    pub text: String,
}

/// Follow-up conversation about one rendered image. `turns` starts with the
/// assistant's first analysis and then alternates user/assistant.
#[derive(Debug, Clone, PartialEq)]
pub struct ChatSession {
    pub base_request: AnalysisRequest,
    pub turns: Vec<Turn>,
}

impl ChatSession {
    /// Session with no turns yet; follow-ups fail until a first analysis lands.
    pub fn new(base_request: AnalysisRequest) -> Self {
        Self {
            base_request,
            turns: Vec::new(),
        }
    }

    pub fn from_analysis(base_request: AnalysisRequest, first: &ModelResponse) -> Self {
        Self {
            base_request,
            turns: vec![Turn {
                role: Role::Assistant,
                text: first.text.clone(),
            }],
        }
    }

    pub fn has_assistant_turn(&self) -> bool {
        self.turns.iter().any(|t| t.role == Role::Assistant)
    }
}
