//! HTTP adapter for hosted chat-completion models.
//!
//! Speaks the common JSON chat-completion protocol: a `messages` array with
//! roles, `temperature`, `max_tokens` and an optional `tools` list. Harness
//! regulation messages are sent in user turns tagged `[environment]`.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{ModelView, PolicyError};
use crate::call::ToolCall;
use crate::trajectory::RawModelOutput;

pub const ENV_ENDPOINT: &str = "HARNESS_ENDPOINT";
pub const ENV_API_KEY: &str = "HARNESS_API_KEY";
pub const ENV_MODEL: &str = "HARNESS_MODEL";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemoteConfig {
    #[serde(default)]
    pub temperature: f64,
    #[serde(default = "default_max_tokens")]
    pub max_tokens: u32,
    #[serde(default = "default_retries")]
    pub retries: u32,
    #[serde(default = "default_backoff_ms")]
    pub backoff_ms: u64,
    #[serde(default = "default_timeout_s")]
    pub timeout_s: u64,
}

fn default_max_tokens() -> u32 {
    4096
}
fn default_retries() -> u32 {
    2
}
fn default_backoff_ms() -> u64 {
    1000
}
fn default_timeout_s() -> u64 {
    120
}

impl Default for RemoteConfig {
    fn default() -> Self {
        Self {
            temperature: 0.0,
            max_tokens: default_max_tokens(),
            retries: default_retries(),
            backoff_ms: default_backoff_ms(),
            timeout_s: default_timeout_s(),
        }
    }
}

/// Chat transcript for a view: system contract, user task, then
/// assistant/user pairs per turn.
pub fn chat_messages(view: &ModelView) -> Vec<Value> {
    let mut msgs = vec![
        json!({"role": "system", "content": view.contract_text}),
        json!({"role": "user", "content": format!("{}\n\n{}", view.instruction, view.initial_observation)}),
    ];
    for t in &view.turns {
        msgs.push(json!({"role": "assistant", "content": t.output}));
        let mut content = t.observation.clone();
        if !t.regulation.is_empty() {
            content.push_str(&format!("\n[environment] {}", t.regulation));
        }
        msgs.push(json!({"role": "user", "content": content}));
    }
    msgs
}

/// Pull text and the first structured tool call out of a completion body.
pub fn parse_completion(body: &Value) -> Result<RawModelOutput, PolicyError> {
    let msg = body
        .pointer("/choices/0/message")
        .ok_or_else(|| PolicyError::RemoteUnavailable("response has no choices".into()))?;
    let text = msg.get("content").and_then(Value::as_str).unwrap_or("").to_string();
    let tool_call = msg.pointer("/tool_calls/0/function").and_then(|f| {
        let name = f.get("name")?.as_str()?.to_string();
        let args: Value = match f.get("arguments")? {
            Value::String(s) => serde_json::from_str(s).ok()?,
            v => v.clone(),
        };
        let args = args
            .as_object()?
            .values()
            .map(|v| v.as_str().map_or_else(|| v.to_string(), str::to_string))
            .collect();
        Some(ToolCall { name, args })
    });
    Ok(RawModelOutput { text, tool_call })
}

pub struct RemoteSession {
    config: RemoteConfig,
    endpoint: String,
    api_key: String,
    model: String,
    client: reqwest::blocking::Client,
}

impl RemoteSession {
    pub fn from_env(config: RemoteConfig) -> Result<Self, PolicyError> {
        let var = |k: &str| std::env::var(k).map_err(|_| PolicyError::Config(format!("environment variable {k} is not set")));
        let endpoint = var(ENV_ENDPOINT)?;
        let api_key = std::env::var(ENV_API_KEY).unwrap_or_default();
        let model = var(ENV_MODEL)?;
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(config.timeout_s))
            .build()
            .map_err(|e| PolicyError::Config(e.to_string()))?;
        Ok(Self { config, endpoint, api_key, model, client })
    }

    fn request(&self, body: &Value) -> Result<Value, String> {
        let mut req = self.client.post(&self.endpoint).json(body);
        if !self.api_key.is_empty() {
            req = req.bearer_auth(&self.api_key);
        }
        let resp = req.send().map_err(|e| e.to_string())?;
        let status = resp.status();
        if !status.is_success() {
            return Err(format!("HTTP {status}"));
        }
        resp.json().map_err(|e| e.to_string())
    }

    pub fn next_action(&mut self, view: &ModelView) -> Result<RawModelOutput, PolicyError> {
        let body = json!({
            "model": self.model,
            "messages": chat_messages(view),
            "temperature": self.config.temperature,
            "max_tokens": self.config.max_tokens,
        });
        let mut last_err = String::new();
        for attempt in 0..=self.config.retries {
            if attempt > 0 {
                std::thread::sleep(Duration::from_millis(self.config.backoff_ms));
            }
            match self.request(&body) {
                Ok(v) => return parse_completion(&v),
                Err(e) => last_err = e,
            }
        }
        Err(PolicyError::RemoteUnavailable(last_err))
    }
}
