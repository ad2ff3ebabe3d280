//! Blocking client for OpenAI-compatible `/chat/completions` endpoints.
//!
//! Failed attempts (non-2xx or transport errors) are retried with
//! exponential backoff. [`mock`] serves scripted responses for tests.

pub mod mock;

use std::thread;
use std::time::{Duration, Instant};

use kgrat_core::synth::{Backend, BackendError, RationaleRequest};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GatewayConfig {
    pub base_url: String,
    pub model: String,
    /// Environment variable holding the API key. `None` sends no
    /// `Authorization` header.
    pub api_key_env: Option<String>,
    #[serde(with = "secs")]
    pub timeout: Duration,
    pub max_retries: u32,
    pub temperature: f64,
    /// Delay before the first retry; doubles on each further retry.
    #[serde(with = "secs")]
    pub backoff_base: Duration,
}

impl Default for GatewayConfig {
    fn default() -> Self {
        GatewayConfig {
            base_url: "http://127.0.0.1:8000/v1".into(),
            model: "gpt-4o".into(),
            api_key_env: Some("OPENAI_API_KEY".into()),
            timeout: Duration::from_secs(60),
            max_retries: 3,
            temperature: 0.0,
            backoff_base: Duration::from_secs(1),
        }
    }
}

mod secs {
    use std::time::Duration;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(d.as_secs_f64())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        let v = f64::deserialize(d)?;
        Duration::try_from_secs_f64(v).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Usage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
    pub total_tokens: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Completion {
    pub text: String,
    pub usage: Option<Usage>,
    pub latency: Duration,
    /// Requests sent, including the successful one.
    pub attempts: u32,
}

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("HTTP {status} after {attempts} attempts: {body}")]
    Http { status: u16, body: String, attempts: u32 },
    #[error("transport failure after {attempts} attempts: {message}")]
    Transport { message: String, attempts: u32 },
    #[error("undecodable response: {0}")]
    Decode(String),
}

impl GatewayError {
    pub fn attempts(&self) -> u32 {
        match self {
            GatewayError::Http { attempts, .. } | GatewayError::Transport { attempts, .. } => *attempts,
            GatewayError::Config(_) => 0,
            GatewayError::Decode(_) => 1,
        }
    }
}

#[derive(Serialize)]
struct Message<'a> {
    role: &'a str,
    content: &'a str,
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    temperature: serde_json::Number,
    messages: [Message<'a>; 2],
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
    #[serde(default)]
    usage: Option<Usage>,
}

#[derive(Deserialize)]
struct Choice {
    message: ResponseMessage,
}

#[derive(Deserialize)]
struct ResponseMessage {
    #[serde(default)]
    content: Option<String>,
}

/// Integral temperatures are written without a fractional part.
fn temperature_number(t: f64) -> serde_json::Number {
    if t.fract() == 0.0 && t.abs() < 1e15 {
        serde_json::Number::from(t as i64)
    } else {
        serde_json::Number::from_f64(t).unwrap_or_else(|| serde_json::Number::from(0))
    }
}

/// The JSON request body. Field order is fixed, so equal inputs give equal bytes.
pub fn request_body(cfg: &GatewayConfig, system: &str, user: &str) -> String {
    let req = ChatRequest {
        model: &cfg.model,
        temperature: temperature_number(cfg.temperature),
        messages: [
            Message { role: "system", content: system },
            Message { role: "user", content: user },
        ],
    };
    serde_json::to_string(&req).expect("request serializes")
}

pub fn parse_response(body: &str) -> Result<(String, Option<Usage>), GatewayError> {
    let r: ChatResponse = serde_json::from_str(body).map_err(|e| GatewayError::Decode(e.to_string()))?;
    let text = r
        .choices
        .into_iter()
        .next()
        .and_then(|c| c.message.content)
        .ok_or_else(|| GatewayError::Decode("no choices[0].message.content".into()))?;
    Ok((text, r.usage))
}

/// Delay before retry number `retry` (1-based).
pub fn backoff(base: Duration, retry: u32) -> Duration {
    base.saturating_mul(1u32 << (retry.saturating_sub(1)).min(20))
}

enum Failure {
    Status(u16, String),
    Transport(String),
}

#[derive(Debug, Clone)]
pub struct Gateway {
    cfg: GatewayConfig,
    key: Option<String>,
    agent: ureq::Agent,
}

impl Gateway {
    /// Resolves the API key now, so a missing variable fails before any request.
    pub fn new(cfg: GatewayConfig) -> Result<Self, GatewayError> {
        if !cfg.temperature.is_finite() || cfg.temperature < 0.0 {
            return Err(GatewayError::Config(format!("temperature {} out of range", cfg.temperature)));
        }
        if cfg.base_url.trim().is_empty() {
            return Err(GatewayError::Config("base_url is empty".into()));
        }
        let key = match &cfg.api_key_env {
            None => None,
            Some(var) => match std::env::var(var) {
                Ok(k) if !k.is_empty() => Some(k),
                _ => return Err(GatewayError::Config(format!("environment variable {var} is not set"))),
            },
        };
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(cfg.timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Ok(Gateway { cfg, key, agent })
    }

    pub fn config(&self) -> &GatewayConfig {
        &self.cfg
    }

    pub fn endpoint(&self) -> String {
        format!("{}/chat/completions", self.cfg.base_url.trim_end_matches('/'))
    }

    fn attempt(&self, body: &str) -> Result<String, Failure> {
        let mut req = self
            .agent
            .post(&self.endpoint())
            .header("Content-Type", "application/json");
        if let Some(k) = &self.key {
            req = req.header("Authorization", &format!("Bearer {k}"));
        }
        let mut resp = req.send(body).map_err(|e| Failure::Transport(e.to_string()))?;
        let status = resp.status().as_u16();
        let text = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| Failure::Transport(e.to_string()))?;
        if (200..300).contains(&status) {
            Ok(text)
        } else {
            Err(Failure::Status(status, text))
        }
    }

    pub fn complete(&self, system: &str, user: &str) -> Result<Completion, GatewayError> {
        let body = request_body(&self.cfg, system, user);
        let started = Instant::now();
        let mut attempts = 0;
        loop {
            attempts += 1;
            match self.attempt(&body) {
                Ok(text) => {
                    let (text, usage) = parse_response(&text)?;
                    return Ok(Completion { text, usage, latency: started.elapsed(), attempts });
                }
                Err(f) => {
                    if attempts > self.cfg.max_retries {
                        return Err(match f {
                            Failure::Status(status, body) => GatewayError::Http { status, body, attempts },
                            Failure::Transport(message) => GatewayError::Transport { message, attempts },
                        });
                    }
                    match &f {
                        Failure::Status(s, _) => log::warn!("attempt {attempts}: HTTP {s}"),
                        Failure::Transport(m) => log::warn!("attempt {attempts}: {m}"),
                    }
                    thread::sleep(backoff(self.cfg.backoff_base, attempts));
                }
            }
        }
    }
}

/// Rationale generation through a [`Gateway`].
#[derive(Debug, Clone)]
pub struct HttpBackend {
    pub gateway: Gateway,
}

impl Backend for HttpBackend {
    fn name(&self) -> String {
        format!("http:{}", self.gateway.cfg.model)
    }

    fn generate(&self, request: &RationaleRequest) -> Result<String, BackendError> {
        self.gateway
            .complete(&request.prompt.system, &request.prompt.user)
            .map(|c| c.text)
            .map_err(|e| BackendError(e.to_string()))
    }
}
