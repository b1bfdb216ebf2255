//! Chat-completion and embedding clients: OpenAI-compatible HTTP endpoints
//! and deterministic offline stubs.

use std::time::Duration;

use log::{debug, warn};
use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::vector::EmbeddingVector;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum EndpointError {
    /// Worth retrying: transport failure, timeout, 429 or 5xx.
    #[error("transient endpoint failure: {0}")]
    Transient(String),
    #[error("endpoint failure: {0}")]
    Permanent(String),
}

pub trait Embedder: Send + Sync {
    /// Identifies the embedding space (model name for live endpoints).
    fn id(&self) -> &str;
    fn embed(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, EndpointError>;
}

pub trait ChatClient: Send + Sync {
    fn model(&self) -> &str;
    fn complete(&self, prompt: &str) -> Result<String, EndpointError>;
}

/// Runs `f`, retrying transient failures up to `retries` extra times with
/// doubling backoff.
pub fn with_retries<T>(
    retries: u32,
    backoff: Duration,
    mut f: impl FnMut() -> Result<T, EndpointError>,
) -> Result<T, EndpointError> {
    let mut delay = backoff;
    let mut attempt = 0;
    loop {
        match f() {
            Err(EndpointError::Transient(msg)) if attempt < retries => {
                attempt += 1;
                warn!("transient failure (attempt {attempt}/{retries}): {msg}");
                if !delay.is_zero() {
                    std::thread::sleep(delay);
                    delay *= 2;
                }
            }
            other => return other,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndpointConfig {
    /// Base URL up to and including the API version, e.g. `http://localhost:8000/v1`.
    pub base_url: String,
    pub model: String,
    #[serde(skip)]
    pub api_key: Option<String>,
    pub timeout_secs: u64,
    pub temperature: f64,
    pub max_tokens: u32,
}

impl EndpointConfig {
    pub fn new(base_url: impl Into<String>, model: impl Into<String>) -> Self {
        Self {
            base_url: base_url.into(),
            model: model.into(),
            api_key: None,
            timeout_secs: 60,
            temperature: 0.0,
            max_tokens: 512,
        }
    }

    fn url(&self, path: &str) -> String {
        format!("{}/{}", self.base_url.trim_end_matches('/'), path)
    }

    fn agent(&self) -> ureq::Agent {
        ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(self.timeout_secs)))
            .http_status_as_error(false)
            .build()
            .into()
    }
}

fn classify(err: ureq::Error) -> EndpointError {
    match err {
        ureq::Error::Json(e) => EndpointError::Permanent(format!("bad response body: {e}")),
        ureq::Error::BadUri(u) => EndpointError::Permanent(format!("bad uri {u}")),
        other => EndpointError::Transient(other.to_string()),
    }
}

fn post_json<T: for<'de> Deserialize<'de>>(
    cfg: &EndpointConfig,
    agent: &ureq::Agent,
    path: &str,
    body: &serde_json::Value,
) -> Result<T, EndpointError> {
    let url = cfg.url(path);
    debug!("POST {url}");
    let mut req = agent.post(&url);
    if let Some(key) = &cfg.api_key {
        req = req.header("Authorization", format!("Bearer {key}"));
    }
    let mut resp = req.send_json(body).map_err(classify)?;
    let status = resp.status().as_u16();
    if status == 429 || status >= 500 {
        return Err(EndpointError::Transient(format!("HTTP {status} from {url}")));
    }
    if !(200..300).contains(&status) {
        let text = resp.body_mut().read_to_string().unwrap_or_default();
        return Err(EndpointError::Permanent(format!(
            "HTTP {status} from {url}: {}",
            text.chars().take(200).collect::<String>()
        )));
    }
    resp.body_mut().read_json::<T>().map_err(classify)
}

/// Chat client for any `/chat/completions` endpoint.
pub struct OpenAiChat {
    cfg: EndpointConfig,
    agent: ureq::Agent,
}

impl OpenAiChat {
    pub fn new(cfg: EndpointConfig) -> Self {
        let agent = cfg.agent();
        Self { cfg, agent }
    }
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatMessage,
}

#[derive(Deserialize)]
struct ChatMessage {
    #[serde(default)]
    content: Option<String>,
}

impl ChatClient for OpenAiChat {
    fn model(&self) -> &str {
        &self.cfg.model
    }

    fn complete(&self, prompt: &str) -> Result<String, EndpointError> {
        let body = json!({
            "model": self.cfg.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": self.cfg.temperature,
            "max_tokens": self.cfg.max_tokens,
        });
        let resp: ChatResponse = post_json(&self.cfg, &self.agent, "chat/completions", &body)?;
        resp.choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .ok_or_else(|| EndpointError::Permanent("response has no message content".into()))
    }
}

/// Embedding client for any `/embeddings` endpoint.
pub struct OpenAiEmbedder {
    cfg: EndpointConfig,
    agent: ureq::Agent,
}

impl OpenAiEmbedder {
    pub fn new(cfg: EndpointConfig) -> Self {
        let agent = cfg.agent();
        Self { cfg, agent }
    }
}

#[derive(Deserialize)]
struct EmbeddingResponse {
    data: Vec<EmbeddingDatum>,
}

#[derive(Deserialize)]
struct EmbeddingDatum {
    #[serde(default)]
    index: usize,
    embedding: Vec<f32>,
}

impl Embedder for OpenAiEmbedder {
    fn id(&self) -> &str {
        &self.cfg.model
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, EndpointError> {
        if texts.is_empty() {
            return Ok(Vec::new());
        }
        let body = json!({ "model": self.cfg.model, "input": texts });
        let mut resp: EmbeddingResponse = post_json(&self.cfg, &self.agent, "embeddings", &body)?;
        if resp.data.len() != texts.len() {
            return Err(EndpointError::Permanent(format!(
                "asked for {} embeddings, got {}",
                texts.len(),
                resp.data.len()
            )));
        }
        resp.data.sort_by_key(|d| d.index);
        resp.data
            .into_iter()
            .map(|d| EmbeddingVector::new(d.embedding).map_err(|e| EndpointError::Permanent(e.to_string())))
            .collect()
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

/// Deterministic bag-of-words embedder: each lowercase word is hashed to a
/// signed bucket and the result is L2-normalized. Identical texts map to
/// identical vectors; texts with no words map to the zero vector.
#[derive(Debug, Clone)]
pub struct HashEmbedder {
    dim: usize,
    id: String,
}

impl HashEmbedder {
    pub fn new(dim: usize) -> Self {
        assert!(dim > 0, "embedding dimension must be positive");
        Self {
            dim,
            id: format!("stub-hash-{dim}"),
        }
    }

    pub fn embed_one(&self, text: &str) -> EmbeddingVector {
        let mut v = vec![0f64; self.dim];
        for word in text
            .split(|c: char| !c.is_alphanumeric())
            .filter(|w| !w.is_empty())
        {
            let h = fnv1a(word.to_lowercase().as_bytes());
            let bucket = (h % self.dim as u64) as usize;
            let sign = if h >> 63 == 1 { -1.0 } else { 1.0 };
            v[bucket] += sign;
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let values = v
            .into_iter()
            .map(|x| if norm > 0.0 { (x / norm) as f32 } else { 0.0 })
            .collect();
        EmbeddingVector::new(values).expect("hash embedding is finite")
    }
}

impl Default for HashEmbedder {
    fn default() -> Self {
        Self::new(256)
    }
}

impl Embedder for HashEmbedder {
    fn id(&self) -> &str {
        &self.id
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, EndpointError> {
        Ok(texts.iter().map(|t| self.embed_one(t)).collect())
    }
}

/// Offline chat stand-in whose answer is the context section of the prompt,
/// or a fixed refusal when the prompt carries no context.
#[derive(Debug, Clone, Default)]
pub struct EchoChat;

pub const ECHO_REFUSAL: &str = "I don't know.";

impl ChatClient for EchoChat {
    fn model(&self) -> &str {
        "stub-echo"
    }

    fn complete(&self, prompt: &str) -> Result<String, EndpointError> {
        let context = crate::qa::prompt_context(prompt).trim();
        if context.is_empty() {
            Ok(ECHO_REFUSAL.to_string())
        } else {
            Ok(context.to_string())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::cell::Cell;

    #[test]
    fn hash_embedder_is_deterministic_and_normalized() {
        let e = HashEmbedder::new(32);
        let a = e.embed_one("The Dali hit the bridge");
        let b = e.embed_one("the dali HIT the bridge");
        assert_eq!(a, b);
        let n: f64 = a.values().iter().map(|&x| f64::from(x) * f64::from(x)).sum();
        assert!((n - 1.0).abs() < 1e-6);
        assert!(e.embed_one("").values().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn retries_only_transient() {
        let calls = Cell::new(0);
        let r: Result<(), _> = with_retries(2, Duration::ZERO, || {
            calls.set(calls.get() + 1);
            Err(EndpointError::Transient("x".into()))
        });
        assert!(r.is_err());
        assert_eq!(calls.get(), 3);

        calls.set(0);
        let r: Result<(), _> = with_retries(5, Duration::ZERO, || {
            calls.set(calls.get() + 1);
            Err(EndpointError::Permanent("x".into()))
        });
        assert!(r.is_err());
        assert_eq!(calls.get(), 1);
    }
}
