//! Article body retrieval for the subset's document URLs, with an offline
//! fixture mode and a resumable on-disk corpus.

mod extract;

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use chrono::{DateTime, Utc};
use log::{debug, info, warn};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use extract::{extract_main_text, normalize_whitespace};

use crate::error::{Error, Result};
use crate::ingest::CaseStudySubset;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum FetchStatus {
    Ok,
    HttpError(u16),
    /// No response was received (timeout or connection failure).
    Timeout,
    ParseFailed,
    Fixture,
    /// Offline mode and no fixture for this URL.
    Offline,
}

impl FetchStatus {
    pub fn has_body(self) -> bool {
        matches!(self, FetchStatus::Ok | FetchStatus::Fixture)
    }
}

impl fmt::Display for FetchStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FetchStatus::Ok => f.write_str("ok"),
            FetchStatus::HttpError(c) => write!(f, "http_error:{c}"),
            FetchStatus::Timeout => f.write_str("timeout"),
            FetchStatus::ParseFailed => f.write_str("parse_failed"),
            FetchStatus::Fixture => f.write_str("fixture"),
            FetchStatus::Offline => f.write_str("offline"),
        }
    }
}

impl std::str::FromStr for FetchStatus {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "ok" => FetchStatus::Ok,
            "timeout" => FetchStatus::Timeout,
            "parse_failed" => FetchStatus::ParseFailed,
            "fixture" => FetchStatus::Fixture,
            "offline" => FetchStatus::Offline,
            other => match other.strip_prefix("http_error:").map(str::parse::<u16>) {
                Some(Ok(code)) => FetchStatus::HttpError(code),
                _ => return Err(Error::InvalidArgument(format!("unknown fetch status `{s}`"))),
            },
        })
    }
}

impl From<FetchStatus> for String {
    fn from(s: FetchStatus) -> Self {
        s.to_string()
    }
}

impl TryFrom<String> for FetchStatus {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArticleText {
    pub document_identifier: String,
    /// Plain text; empty unless the status is `ok` or `fixture`.
    pub body: String,
    pub fetch_status: FetchStatus,
    pub fetched_at: DateTime<Utc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl ArticleText {
    fn failed(url: &str, status: FetchStatus, detail: impl Into<String>) -> Self {
        Self {
            document_identifier: url.to_string(),
            body: String::new(),
            fetch_status: status,
            fetched_at: Utc::now(),
            detail: Some(detail.into()),
        }
    }
}

/// URL -> local file map read from `<dir>/fixtures.toml`:
///
/// ```toml
/// [urls]
/// "https://example.com/story" = "story.html"
/// ```
#[derive(Debug, Clone, Default)]
pub struct Fixtures {
    files: BTreeMap<String, PathBuf>,
}

#[derive(Deserialize)]
struct FixtureIndex {
    urls: BTreeMap<String, String>,
}

impl Fixtures {
    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join("fixtures.toml");
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let idx: FixtureIndex =
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Ok(Self {
            files: idx.urls.into_iter().map(|(u, f)| (u, dir.join(f))).collect(),
        })
    }

    pub fn insert(&mut self, url: impl Into<String>, file: impl Into<PathBuf>) {
        self.files.insert(url.into(), file.into());
    }

    pub fn get(&self, url: &str) -> Option<&Path> {
        self.files.get(url).map(PathBuf::as_path)
    }
}

#[derive(Debug, Clone)]
pub struct FetchPolicy {
    pub timeout: Duration,
    pub max_bytes: u64,
    pub max_redirects: u32,
    pub user_agent: String,
    /// Upper bound on concurrent requests across all hosts.
    pub parallelism: usize,
    /// Pause between consecutive requests to the same host.
    pub per_host_delay: Duration,
    pub fixtures: Option<Fixtures>,
    /// Never touch the network; URLs without a fixture get status `offline`.
    pub offline: bool,
}

impl Default for FetchPolicy {
    fn default() -> Self {
        Self {
            timeout: Duration::from_secs(10),
            max_bytes: 2 * 1024 * 1024,
            max_redirects: 5,
            user_agent: concat!("gdelt-kg/", env!("CARGO_PKG_VERSION")).to_string(),
            parallelism: 4,
            per_host_delay: Duration::from_millis(500),
            fixtures: None,
            offline: false,
        }
    }
}

/// Fixture files carry no fetch time; they are stamped with the epoch so a
/// fixture corpus is byte-reproducible.
fn fixture_time() -> DateTime<Utc> {
    DateTime::<Utc>::UNIX_EPOCH
}

pub struct Fetcher {
    policy: FetchPolicy,
    agent: ureq::Agent,
    network_requests: AtomicUsize,
}

impl Fetcher {
    pub fn new(policy: FetchPolicy) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(policy.timeout))
            .max_redirects(policy.max_redirects)
            .max_redirects_will_error(false)
            .http_status_as_error(false)
            .user_agent(policy.user_agent.as_str())
            .build()
            .into();
        Self {
            policy,
            agent,
            network_requests: AtomicUsize::new(0),
        }
    }

    pub fn policy(&self) -> &FetchPolicy {
        &self.policy
    }

    /// Number of HTTP requests issued so far.
    pub fn network_requests(&self) -> usize {
        self.network_requests.load(Ordering::SeqCst)
    }

    pub fn fetch(&self, url: &str) -> ArticleText {
        if let Some(path) = self.policy.fixtures.as_ref().and_then(|f| f.get(url)) {
            return fetch_fixture(url, path);
        }
        if self.policy.offline {
            return ArticleText {
                fetched_at: fixture_time(),
                ..ArticleText::failed(url, FetchStatus::Offline, "offline mode, no fixture")
            };
        }
        if !(url.starts_with("http://") || url.starts_with("https://")) {
            return ArticleText::failed(url, FetchStatus::ParseFailed, "not an http(s) URL");
        }
        self.fetch_http(url)
    }

    fn fetch_http(&self, url: &str) -> ArticleText {
        self.network_requests.fetch_add(1, Ordering::SeqCst);
        debug!("GET {url}");
        let mut resp = match self.agent.get(url).call() {
            Ok(r) => r,
            Err(ureq::Error::StatusCode(code)) => {
                return ArticleText::failed(url, FetchStatus::HttpError(code), format!("HTTP {code}"))
            }
            Err(e) => return ArticleText::failed(url, FetchStatus::Timeout, e.to_string()),
        };
        let status = resp.status().as_u16();
        if !(200..300).contains(&status) {
            return ArticleText::failed(url, FetchStatus::HttpError(status), format!("HTTP {status}"));
        }
        let content_type = resp
            .headers()
            .get("content-type")
            .and_then(|v| v.to_str().ok())
            .unwrap_or("text/html")
            .to_ascii_lowercase();
        if !(content_type.contains("html") || content_type.contains("text") || content_type.contains("xml")) {
            return ArticleText::failed(
                url,
                FetchStatus::ParseFailed,
                format!("unsupported content type `{content_type}`"),
            );
        }
        let mut raw = Vec::new();
        let read = resp
            .body_mut()
            .as_reader()
            .take(self.policy.max_bytes)
            .read_to_end(&mut raw);
        if let Err(e) = read {
            return ArticleText::failed(url, FetchStatus::Timeout, e.to_string());
        }
        let text = String::from_utf8_lossy(&raw);
        let body = if content_type.contains("text/plain") {
            normalize_whitespace(&text)
        } else {
            extract_main_text(&text)
        };
        if body.is_empty() {
            return ArticleText::failed(url, FetchStatus::ParseFailed, "no extractable text");
        }
        ArticleText {
            document_identifier: url.to_string(),
            body,
            fetch_status: FetchStatus::Ok,
            fetched_at: Utc::now(),
            detail: None,
        }
    }
}

fn fetch_fixture(url: &str, path: &Path) -> ArticleText {
    let failed = |detail: String| ArticleText {
        fetched_at: fixture_time(),
        ..ArticleText::failed(url, FetchStatus::ParseFailed, detail)
    };
    let raw = match std::fs::read(path) {
        Ok(r) => r,
        Err(e) => return failed(format!("fixture {}: {e}", path.display())),
    };
    let text = String::from_utf8_lossy(&raw);
    let is_html = matches!(path.extension().and_then(|e| e.to_str()), Some("html" | "htm"));
    let body = if is_html {
        extract_main_text(&text)
    } else {
        text.trim_end().to_string()
    };
    if body.is_empty() {
        return failed(format!("fixture {} has no text", path.display()));
    }
    ArticleText {
        document_identifier: url.to_string(),
        body,
        fetch_status: FetchStatus::Fixture,
        fetched_at: fixture_time(),
        detail: None,
    }
}

/// Single fetch with a throwaway [`Fetcher`].
pub fn fetch_article(url: &str, policy: &FetchPolicy) -> ArticleText {
    Fetcher::new(policy.clone()).fetch(url)
}

/// Stable file stem for a URL in the corpus directory.
pub fn url_hash(url: &str) -> String {
    let digest = Sha256::digest(url.as_bytes());
    hex::encode(&digest[..16])
}

fn host_of(url: &str) -> &str {
    let rest = url.split_once("://").map_or(url, |(_, r)| r);
    let end = rest.find(['/', '?', '#']).unwrap_or(rest.len());
    &rest[..end]
}

#[derive(Debug, Clone, Default)]
pub struct CorpusSummary {
    pub texts: Vec<ArticleText>,
    pub by_status: BTreeMap<String, usize>,
    /// Entries reused from an earlier run.
    pub reused: usize,
    pub network_requests: usize,
}

const MANIFEST: &str = "manifest";
const MANIFEST_HEADER: &str = "# gdelt-kg corpus v1\turl\thash\tstatus\tfetched_at";

#[derive(Debug, Clone)]
struct ManifestEntry {
    hash: String,
    status: FetchStatus,
    fetched_at: DateTime<Utc>,
}

fn read_manifest(dir: &Path) -> Result<BTreeMap<String, ManifestEntry>> {
    let path = dir.join(MANIFEST);
    let text = match std::fs::read_to_string(&path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(BTreeMap::new()),
        Err(e) => return Err(Error::io(&path, e)),
    };
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        let bad = |why: &str| Error::Corrupt {
            what: "corpus manifest",
            reason: format!("line {}: {why}", i + 1),
        };
        if cols.len() != 4 {
            return Err(bad("expected 4 columns"));
        }
        let fetched_at = DateTime::parse_from_rfc3339(cols[3])
            .map_err(|_| bad("bad timestamp"))?
            .with_timezone(&Utc);
        out.insert(
            cols[0].to_string(),
            ManifestEntry {
                hash: cols[1].to_string(),
                status: cols[2].parse().map_err(|_| bad("bad status"))?,
                fetched_at,
            },
        );
    }
    Ok(out)
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

fn write_manifest(dir: &Path, entries: &BTreeMap<String, ManifestEntry>) -> Result<()> {
    let mut out = String::from(MANIFEST_HEADER);
    out.push('\n');
    for (url, e) in entries {
        out.push_str(&format!(
            "{url}\t{}\t{}\t{}\n",
            e.hash,
            e.status,
            e.fetched_at.to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
        ));
    }
    write_atomic(&dir.join(MANIFEST), out.as_bytes())
}

/// Loads a corpus directory written by [`fetch_corpus`]; one entry per URL in
/// manifest (URL) order.
pub fn load_corpus(dir: &Path) -> Result<Vec<ArticleText>> {
    let manifest = read_manifest(dir)?;
    if manifest.is_empty() && !dir.join(MANIFEST).exists() {
        return Err(Error::io(
            dir.join(MANIFEST),
            std::io::Error::new(std::io::ErrorKind::NotFound, "corpus manifest missing"),
        ));
    }
    manifest
        .into_iter()
        .map(|(url, e)| {
            let body = if e.status.has_body() {
                let p = dir.join(format!("{}.txt", e.hash));
                std::fs::read_to_string(&p).map_err(|err| Error::io(&p, err))?
            } else {
                String::new()
            };
            Ok(ArticleText {
                document_identifier: url,
                body,
                fetch_status: e.status,
                fetched_at: e.fetched_at,
                detail: None,
            })
        })
        .collect()
}

/// Fetches each distinct URL once, at most one request in flight per host
/// and `policy.parallelism` overall, persisting bodies under `out_dir`.
/// URLs already stored with status `ok` are not fetched again.
pub fn fetch_urls<'a>(
    urls: impl IntoIterator<Item = &'a str>,
    policy: &FetchPolicy,
    out_dir: &Path,
) -> Result<CorpusSummary> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut order: Vec<String> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for u in urls {
        if seen.insert(u.to_string()) {
            order.push(u.to_string());
        }
    }

    let mut manifest = read_manifest(out_dir)?;
    let mut results: HashMap<String, ArticleText> = HashMap::new();
    let mut reused = 0;
    for url in &order {
        if let Some(e) = manifest.get(url).filter(|e| e.status == FetchStatus::Ok) {
            let p = out_dir.join(format!("{}.txt", e.hash));
            if let Ok(body) = std::fs::read_to_string(&p) {
                results.insert(
                    url.clone(),
                    ArticleText {
                        document_identifier: url.clone(),
                        body,
                        fetch_status: FetchStatus::Ok,
                        fetched_at: e.fetched_at,
                        detail: None,
                    },
                );
                reused += 1;
            }
        }
    }

    let mut by_host: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for url in order.iter().filter(|u| !results.contains_key(*u)) {
        by_host
            .entry(host_of(url).to_string())
            .or_default()
            .push(url.clone());
    }
    let queue: Mutex<VecDeque<Vec<String>>> = Mutex::new(by_host.into_values().collect());
    let fetched: Mutex<Vec<ArticleText>> = Mutex::new(Vec::new());
    let fetcher = Fetcher::new(policy.clone());
    let workers = policy.parallelism.max(1);
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let Some(host_urls) = queue.lock().expect("queue poisoned").pop_front() else {
                    break;
                };
                for (i, url) in host_urls.iter().enumerate() {
                    let before = fetcher.network_requests();
                    let text = fetcher.fetch(url);
                    let used_network = fetcher.network_requests() > before;
                    if used_network && i + 1 < host_urls.len() && !policy.per_host_delay.is_zero() {
                        std::thread::sleep(policy.per_host_delay);
                    }
                    fetched.lock().expect("results poisoned").push(text);
                }
            });
        }
    });

    for text in fetched.into_inner().expect("results poisoned") {
        let hash = url_hash(&text.document_identifier);
        if text.fetch_status.has_body() {
            write_atomic(&out_dir.join(format!("{hash}.txt")), text.body.as_bytes())?;
        } else if let Some(d) = &text.detail {
            warn!("{}: {} ({d})", text.document_identifier, text.fetch_status);
        }
        manifest.insert(
            text.document_identifier.clone(),
            ManifestEntry {
                hash,
                status: text.fetch_status,
                fetched_at: text.fetched_at,
            },
        );
        results.insert(text.document_identifier.clone(), text);
    }
    write_manifest(out_dir, &manifest)?;

    let mut summary = CorpusSummary {
        reused,
        network_requests: fetcher.network_requests(),
        ..Default::default()
    };
    for url in &order {
        let t = results.remove(url).expect("every URL has a result");
        *summary.by_status.entry(t.fetch_status.to_string()).or_default() += 1;
        summary.texts.push(t);
    }
    info!(
        "fetched {} documents ({} reused, {} network requests)",
        summary.texts.len(),
        reused,
        summary.network_requests
    );
    Ok(summary)
}

/// One [`ArticleText`] per distinct article URL of the subset.
pub fn fetch_corpus(subset: &CaseStudySubset, policy: &FetchPolicy, out_dir: &Path) -> Result<CorpusSummary> {
    if subset.articles.is_empty() {
        return Err(Error::InvalidArgument("subset has no articles to fetch".into()));
    }
    fetch_urls(
        subset.articles.iter().map(|a| a.document_identifier.as_str()),
        policy,
        out_dir,
    )
}
