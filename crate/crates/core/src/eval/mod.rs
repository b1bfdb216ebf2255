//! Answer scoring by embedding cosine similarity against ground truth,
//! per-method five-number summaries, external answer import and reports.

mod report;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;

use log::warn;
use serde::{Deserialize, Serialize};

pub use report::{emit_report, render_report, ReportFormat, QUARTILE_CONVENTION};

use crate::error::{Error, Result};
use crate::llm::{with_retries, Embedder};
use crate::qa::{Method, QAResult};
use crate::text::KeywordMatcher;
use crate::vector::EmbeddingVector;

const DEFAULT_TRUTH: &str = include_str!("../../data/ground_truth.toml");
pub const IMPORT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub question_id: String,
    pub answer: String,
}

#[derive(Deserialize)]
struct TruthFile {
    version: u32,
    #[serde(default, rename = "truth")]
    truths: Vec<GroundTruth>,
}

pub fn parse_ground_truth(text: &str) -> Result<Vec<GroundTruth>> {
    let f: TruthFile = toml::from_str(text).map_err(|e| Error::Config(format!("ground truth: {e}")))?;
    if f.version != 1 {
        return Err(Error::VersionMismatch {
            what: "ground truth",
            found: f.version,
            expected: 1,
        });
    }
    let mut seen = HashSet::new();
    for t in &f.truths {
        if !seen.insert(t.question_id.as_str()) {
            return Err(Error::Config(format!(
                "ground truth: duplicate question id `{}`",
                t.question_id
            )));
        }
    }
    Ok(f.truths)
}

pub fn load_ground_truth(path: &Path) -> Result<Vec<GroundTruth>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_ground_truth(&text)
}

/// Reference answers for the bundled question set.
pub fn default_ground_truth() -> Vec<GroundTruth> {
    parse_ground_truth(DEFAULT_TRUTH).expect("bundled ground truth is valid")
}

/// `dot(a, b) / (|a| |b|)`, computed in f64 and clamped to [-1, 1].
pub fn cosine_similarity(a: &EmbeddingVector, b: &EmbeddingVector) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    let (mut dot, mut na, mut nb) = (0f64, 0f64, 0f64);
    for (&x, &y) in a.values().iter().zip(b.values()) {
        let (x, y) = (f64::from(x), f64::from(y));
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return Err(Error::UndefinedSimilarity("zero vector"));
    }
    Ok((dot / (na.sqrt() * nb.sqrt())).clamp(-1.0, 1.0))
}

/// Case-insensitive substrings marking non-answers. Flagged answers are
/// still scored.
#[derive(Debug, Clone)]
pub struct RefusalPatterns {
    matcher: Option<KeywordMatcher>,
}

pub const DEFAULT_REFUSALS: &[&str] = &[
    "i don't know",
    "i do not know",
    "cannot answer",
    "can't answer",
    "not mentioned",
    "no mention",
    "not provided",
    "not present in",
    "don't have enough",
];

impl RefusalPatterns {
    pub fn new<S: AsRef<str>>(patterns: &[S]) -> Self {
        Self {
            matcher: KeywordMatcher::new(patterns, false),
        }
    }

    pub fn none() -> Self {
        Self { matcher: None }
    }

    pub fn is_refusal(&self, answer: &str) -> bool {
        self.matcher.as_ref().is_some_and(|m| m.is_match(answer))
    }
}

impl Default for RefusalPatterns {
    fn default() -> Self {
        Self::new(DEFAULT_REFUSALS)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalScore {
    pub question_id: String,
    pub method: Method,
    pub cosine_similarity: f64,
    pub embedder_id: String,
    pub refusal: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MissingScore {
    pub question_id: String,
    pub method: Method,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub scores: Vec<EvalScore>,
    /// Results that could not be scored; `scores.len() + missing.len()`
    /// equals the number of results.
    pub missing: Vec<MissingScore>,
}

#[derive(Debug, Clone)]
pub struct ScoreOptions {
    pub batch_size: usize,
    pub retries: u32,
    pub backoff: std::time::Duration,
    pub refusals: RefusalPatterns,
}

impl Default for ScoreOptions {
    fn default() -> Self {
        Self {
            batch_size: 32,
            retries: 2,
            backoff: std::time::Duration::from_millis(500),
            refusals: RefusalPatterns::default(),
        }
    }
}

/// Scores each answered result against its question's ground truth.
/// Error results and results without ground truth become missing entries.
pub fn score_run(
    results: &[QAResult],
    truths: &[GroundTruth],
    embedder: &dyn Embedder,
    opts: &ScoreOptions,
) -> Result<ScoreReport> {
    let truth: HashMap<&str, &str> = truths
        .iter()
        .map(|t| (t.question_id.as_str(), t.answer.as_str()))
        .collect();
    let mut report = ScoreReport::default();
    let mut pairs: Vec<(&QAResult, &str, &str)> = Vec::new();
    for r in results {
        let miss = |reason: String| MissingScore {
            question_id: r.question_id.clone(),
            method: r.method.clone(),
            reason,
        };
        match (&r.answer, truth.get(r.question_id.as_str())) {
            (_, None) => report.missing.push(miss("no ground truth for question".into())),
            (None, _) => report.missing.push(miss(format!(
                "no answer: {}",
                r.error.as_deref().unwrap_or("unknown error")
            ))),
            (Some(a), Some(t)) => {
                if r.error.is_some() {
                    report.missing.push(miss(format!(
                        "error result: {}",
                        r.error.as_deref().unwrap_or_default()
                    )));
                } else {
                    pairs.push((r, a.as_str(), t));
                }
            }
        }
    }

    let mut texts: Vec<String> = Vec::new();
    let mut slot: HashMap<&str, usize> = HashMap::new();
    for (_, a, t) in &pairs {
        for s in [*a, *t] {
            if !slot.contains_key(s) {
                slot.insert(s, texts.len());
                texts.push(s.to_string());
            }
        }
    }
    let mut vectors: Vec<EmbeddingVector> = Vec::with_capacity(texts.len());
    for batch in texts.chunks(opts.batch_size.max(1)) {
        let got = with_retries(opts.retries, opts.backoff, || embedder.embed(batch))
            .map_err(|e| Error::Endpoint(e.to_string()))?;
        if got.len() != batch.len() {
            return Err(Error::Endpoint(format!(
                "embedder returned {} vectors for {} texts",
                got.len(),
                batch.len()
            )));
        }
        vectors.extend(got);
    }

    for (r, a, t) in pairs {
        let va = &vectors[slot[a]];
        let vt = &vectors[slot[t]];
        match cosine_similarity(va, vt) {
            Ok(sim) => report.scores.push(EvalScore {
                question_id: r.question_id.clone(),
                method: r.method.clone(),
                cosine_similarity: sim,
                embedder_id: embedder.id().to_string(),
                refusal: opts.refusals.is_refusal(a),
            }),
            Err(e) => {
                warn!("{} / {}: {e}", r.question_id, r.method);
                report.missing.push(MissingScore {
                    question_id: r.question_id.clone(),
                    method: r.method.clone(),
                    reason: e.to_string(),
                });
            }
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiveNumber {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

fn median_sorted(v: &[f64]) -> f64 {
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Tukey five-number summary: quartiles are medians of the lower and upper
/// halves, the overall median excluded from both halves when `n` is odd.
/// `None` for empty input or any NaN.
pub fn five_number(values: &[f64]) -> Option<FiveNumber> {
    if values.is_empty() || values.iter().any(|v| v.is_nan()) {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    let median = median_sorted(&v);
    let (q1, q3) = if n == 1 {
        (median, median)
    } else {
        (median_sorted(&v[..n / 2]), median_sorted(&v[n - n / 2..]))
    };
    Some(FiveNumber {
        min: v[0],
        q1,
        median,
        q3,
        max: v[n - 1],
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: Method,
    #[serde(flatten)]
    pub stats: FiveNumber,
    pub n: usize,
}

/// One summary per method, in method order.
pub fn summarize(scores: &[EvalScore]) -> Vec<MethodSummary> {
    let mut groups: BTreeMap<&Method, Vec<f64>> = BTreeMap::new();
    for s in scores {
        groups.entry(&s.method).or_default().push(s.cosine_similarity);
    }
    groups
        .into_iter()
        .filter_map(|(m, v)| match five_number(&v) {
            Some(stats) => Some(MethodSummary {
                method: m.clone(),
                stats,
                n: v.len(),
            }),
            None => {
                warn!("method {m}: no usable scores, omitted from summary");
                None
            }
        })
        .collect()
}

#[derive(Debug, Deserialize)]
struct ImportRecord {
    question_id: String,
    method: String,
    answer: String,
    #[serde(default)]
    model: Option<String>,
}

/// Reads answers produced by external pipelines.
///
/// JSON (`.json`):
///
/// ```json
/// {"version": 1, "answers": [{"question_id": "ship_name", "method": "graphrag", "answer": "..."}]}
/// ```
///
/// TOML (any other extension): `version = 1` and `[[answer]]` tables with
/// the same fields. `model` is optional. An empty file gives no answers.
pub fn import_external_answers(path: &Path) -> Result<Vec<QAResult>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let is_json = path.extension().and_then(|e| e.to_str()) == Some("json");
    parse_external_answers(&text, is_json)
}

pub fn parse_external_answers(text: &str, json: bool) -> Result<Vec<QAResult>> {
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    let doc: serde_json::Value = if json {
        serde_json::from_str(text)?
    } else {
        let t: toml::Value = toml::from_str(text).map_err(|e| Error::Serde(e.to_string()))?;
        serde_json::to_value(t)?
    };
    let version = doc
        .get("version")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| Error::Import {
            record: 0,
            reason: "missing `version`".into(),
        })?;
    if version != u64::from(IMPORT_VERSION) {
        return Err(Error::VersionMismatch {
            what: "answer import",
            found: version as u32,
            expected: IMPORT_VERSION,
        });
    }
    let key = if json { "answers" } else { "answer" };
    let records = match doc.get(key) {
        None => return Ok(Vec::new()),
        Some(serde_json::Value::Array(a)) => a,
        Some(_) => {
            return Err(Error::Import {
                record: 0,
                reason: format!("`{key}` must be a list"),
            })
        }
    };
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(records.len());
    for (i, raw) in records.iter().enumerate() {
        let record = i + 1;
        let r: ImportRecord = serde_json::from_value(raw.clone()).map_err(|e| Error::Import {
            record,
            reason: e.to_string(),
        })?;
        let name = r.method.strip_prefix("imported:").unwrap_or(&r.method).trim();
        if name.is_empty() || r.question_id.trim().is_empty() {
            return Err(Error::Import {
                record,
                reason: "empty question_id or method".into(),
            });
        }
        if !seen.insert((r.question_id.clone(), name.to_string())) {
            return Err(Error::Import {
                record,
                reason: format!("duplicate answer for ({}, {name})", r.question_id),
            });
        }
        out.push(QAResult {
            question_id: r.question_id,
            method: Method::Imported(name.to_string()),
            prompt: String::new(),
            answer: Some(r.answer),
            error: None,
            context_size: 0,
            truncated_from: None,
            context_refs: Vec::new(),
            elapsed_ms: None,
            model: r.model.unwrap_or_else(|| name.to_string()),
        });
    }
    Ok(out)
}
