//! Run configuration: one TOML document, overridable from the environment
//! and then from command-line flags. Secrets are read only from the
//! environment variables the document names.

use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fetch::{FetchPolicy, Fixtures};
use crate::llm::{ChatClient, EchoChat, Embedder, EndpointConfig, HashEmbedder, OpenAiChat, OpenAiEmbedder};
use crate::qa::QaOptions;

pub const ENV_PREFIX: &str = "GDELT_KG_";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EndpointSettings {
    pub base_url: String,
    pub model: String,
    /// Name of the environment variable holding the API key.
    pub api_key_env: String,
    pub timeout_secs: u64,
}

impl Default for EndpointSettings {
    fn default() -> Self {
        Self {
            base_url: "http://localhost:8000/v1".into(),
            model: String::new(),
            api_key_env: String::new(),
            timeout_secs: 60,
        }
    }
}

impl EndpointSettings {
    fn new(model: &str, key_env: &str) -> Self {
        Self {
            model: model.into(),
            api_key_env: key_env.into(),
            ..Self::default()
        }
    }

    /// Fills fields a partial file section left empty.
    fn fill_from(&mut self, defaults: &EndpointSettings) {
        if self.model.trim().is_empty() {
            self.model = defaults.model.clone();
        }
        if self.api_key_env.trim().is_empty() {
            self.api_key_env = defaults.api_key_env.clone();
        }
    }

    fn endpoint(&self, env: &dyn Fn(&str) -> Option<String>, what: &str) -> Result<EndpointConfig> {
        if self.api_key_env.trim().is_empty() {
            return Err(Error::Config(format!("live {what} endpoint has no api_key_env")));
        }
        let key = env(&self.api_key_env).ok_or_else(|| {
            Error::Config(format!(
                "live {what} endpoint needs an API key in ${} (or run with --stub)",
                self.api_key_env
            ))
        })?;
        let mut cfg = EndpointConfig::new(&self.base_url, &self.model);
        cfg.api_key = (!key.is_empty()).then_some(key);
        cfg.timeout_secs = self.timeout_secs;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StubSwitches {
    pub chat: bool,
    pub embedding: bool,
    pub eval_embedding: bool,
}

impl StubSwitches {
    pub fn all() -> Self {
        Self {
            chat: true,
            embedding: true,
            eval_embedding: true,
        }
    }

    pub fn any(self) -> bool {
        self.chat || self.embedding || self.eval_embedding
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QaSettings {
    pub k: usize,
    pub max_sentences: usize,
    pub max_chunks: usize,
    pub temperature: f64,
    pub max_tokens: u32,
    pub retries: u32,
    pub backoff_ms: u64,
    pub parallelism: usize,
}

impl Default for QaSettings {
    fn default() -> Self {
        let q = QaOptions::default();
        Self {
            k: q.k,
            max_sentences: q.max_sentences,
            max_chunks: q.max_chunks,
            temperature: 0.0,
            max_tokens: 512,
            retries: q.retries,
            backoff_ms: q.backoff.as_millis() as u64,
            parallelism: q.parallelism,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FetchSettings {
    pub timeout_secs: u64,
    pub max_bytes: u64,
    pub max_redirects: u32,
    pub parallelism: usize,
    pub per_host_delay_ms: u64,
    pub offline: bool,
    /// Directory holding `fixtures.toml`.
    pub fixtures: Option<PathBuf>,
}

impl Default for FetchSettings {
    fn default() -> Self {
        let p = FetchPolicy::default();
        Self {
            timeout_secs: p.timeout.as_secs(),
            max_bytes: p.max_bytes,
            max_redirects: p.max_redirects,
            parallelism: p.parallelism,
            per_host_delay_ms: p.per_host_delay.as_millis() as u64,
            offline: false,
            fixtures: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterSettings {
    pub keywords: Vec<String>,
    pub case_sensitive: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathSettings {
    /// Column map replacing the bundled GDELT v2 schema.
    pub schema: Option<PathBuf>,
    pub ontology_extensions: Vec<PathBuf>,
    pub extra_triples: Vec<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub chat: EndpointSettings,
    pub embedding: EndpointSettings,
    pub eval_embedding: EndpointSettings,
    pub stub: StubSwitches,
    pub stub_dim: usize,
    pub qa: QaSettings,
    pub fetch: FetchSettings,
    pub filter: FilterSettings,
    pub paths: PathSettings,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            chat: EndpointSettings::new("Mistral-7B", "GDELT_KG_CHAT_API_KEY"),
            embedding: EndpointSettings::new("E5-large-v2", "GDELT_KG_EMBED_API_KEY"),
            eval_embedding: EndpointSettings::new(
                "sentence-transformers/all-MiniLM-L6-v2",
                "GDELT_KG_EVAL_API_KEY",
            ),
            stub: StubSwitches::default(),
            stub_dim: 256,
            qa: QaSettings::default(),
            fetch: FetchSettings::default(),
            filter: FilterSettings::default(),
            paths: PathSettings::default(),
        }
    }
}

fn parse_env<T: std::str::FromStr>(name: &str, v: &str) -> Result<T> {
    v.trim()
        .parse()
        .map_err(|_| Error::Config(format!("${name}: cannot parse `{v}`")))
}

fn parse_bool(name: &str, v: &str) -> Result<bool> {
    match v.trim().to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" | "on" => Ok(true),
        "0" | "false" | "no" | "off" | "" => Ok(false),
        _ => Err(Error::Config(format!("${name}: expected a boolean, got `{v}`"))),
    }
}

impl Config {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let mut cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let d = Self::default();
        cfg.chat.fill_from(&d.chat);
        cfg.embedding.fill_from(&d.embedding);
        cfg.eval_embedding.fill_from(&d.eval_embedding);
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Defaults, then the file (if any), then `GDELT_KG_*` variables.
    /// Command-line flags are applied by the caller afterwards.
    pub fn resolve(file: Option<&Path>, env: &dyn Fn(&str) -> Option<String>) -> Result<Self> {
        let mut cfg = match file {
            Some(p) => Self::load(p)?,
            None => Self::default(),
        };
        cfg.apply_env(env)?;
        Ok(cfg)
    }

    /// Overrides from the environment. Recognized variables:
    ///
    /// | variable | field |
    /// |---|---|
    /// | `GDELT_KG_STUB` | all stub switches |
    /// | `GDELT_KG_CHAT_BASE_URL`, `GDELT_KG_CHAT_MODEL` | chat endpoint |
    /// | `GDELT_KG_EMBED_BASE_URL`, `GDELT_KG_EMBED_MODEL` | retrieval embedder |
    /// | `GDELT_KG_EVAL_BASE_URL`, `GDELT_KG_EVAL_MODEL` | evaluation embedder |
    /// | `GDELT_KG_K` | chunks retrieved per question |
    /// | `GDELT_KG_FETCH_OFFLINE` | fetch without network |
    pub fn apply_env(&mut self, env: &dyn Fn(&str) -> Option<String>) -> Result<()> {
        let get = |suffix: &str| {
            let name = format!("{ENV_PREFIX}{suffix}");
            env(&name).map(|v| (name, v))
        };
        if let Some((n, v)) = get("STUB") {
            if parse_bool(&n, &v)? {
                self.stub = StubSwitches::all();
            }
        }
        for (prefix, ep) in [
            ("CHAT", &mut self.chat),
            ("EMBED", &mut self.embedding),
            ("EVAL", &mut self.eval_embedding),
        ] {
            if let Some((_, v)) = get(&format!("{prefix}_BASE_URL")) {
                ep.base_url = v;
            }
            if let Some((_, v)) = get(&format!("{prefix}_MODEL")) {
                ep.model = v;
            }
        }
        if let Some((n, v)) = get("K") {
            self.qa.k = parse_env(&n, &v)?;
        }
        if let Some((n, v)) = get("FETCH_OFFLINE") {
            self.fetch.offline = parse_bool(&n, &v)?;
        }
        Ok(())
    }

    pub fn qa_options(&self) -> QaOptions {
        QaOptions {
            k: self.qa.k,
            max_sentences: self.qa.max_sentences,
            max_chunks: self.qa.max_chunks,
            retries: self.qa.retries,
            backoff: Duration::from_millis(self.qa.backoff_ms),
            parallelism: self.qa.parallelism,
            record_timing: !self.stub.chat,
        }
    }

    pub fn fetch_policy(&self) -> Result<FetchPolicy> {
        let fixtures = self.fetch.fixtures.as_deref().map(Fixtures::load).transpose()?;
        Ok(FetchPolicy {
            timeout: Duration::from_secs(self.fetch.timeout_secs),
            max_bytes: self.fetch.max_bytes,
            max_redirects: self.fetch.max_redirects,
            parallelism: self.fetch.parallelism,
            per_host_delay: Duration::from_millis(self.fetch.per_host_delay_ms),
            fixtures,
            offline: self.fetch.offline,
            ..FetchPolicy::default()
        })
    }

    pub fn chat_client(&self, env: &dyn Fn(&str) -> Option<String>) -> Result<Box<dyn ChatClient>> {
        if self.stub.chat {
            return Ok(Box::new(EchoChat));
        }
        let mut cfg = self.chat.endpoint(env, "chat")?;
        cfg.temperature = self.qa.temperature;
        cfg.max_tokens = self.qa.max_tokens;
        Ok(Box::new(OpenAiChat::new(cfg)))
    }

    pub fn embedder(&self, env: &dyn Fn(&str) -> Option<String>) -> Result<Box<dyn Embedder>> {
        if self.stub.embedding {
            return Ok(Box::new(HashEmbedder::new(self.stub_dim)));
        }
        Ok(Box::new(OpenAiEmbedder::new(
            self.embedding.endpoint(env, "embedding")?,
        )))
    }

    pub fn eval_embedder(&self, env: &dyn Fn(&str) -> Option<String>) -> Result<Box<dyn Embedder>> {
        if self.stub.eval_embedding {
            return Ok(Box::new(HashEmbedder::new(self.stub_dim)));
        }
        Ok(Box::new(OpenAiEmbedder::new(
            self.eval_embedding.endpoint(env, "evaluation embedding")?,
        )))
    }
}

/// Reads the process environment.
pub fn process_env(name: &str) -> Option<String> {
    std::env::var(name).ok()
}
