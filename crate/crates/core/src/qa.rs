//! Prompt assembly and the question-answering routes (graph query and
//! vector RAG) over a question set, with persisted benchmark runs.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use chrono::{DateTime, Utc};
use log::{info, warn};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kg::KnowledgeGraph;
use crate::llm::{with_retries, ChatClient, Embedder};
use crate::query::{keyword_edge_search, Subgraph};
use crate::vector::{nearest_chunks, Chunk, VectorStore};

pub const PROMPT_PREFIX: &str = "Please answer the question given the following information:";
pub const RUN_FORMAT: &str = "gdelt-kg-run";
pub const RUN_VERSION: u32 = 1;

const DEFAULT_QUESTIONS: &str = include_str!("../data/questions.toml");

/// Context section of a prompt built by this module: everything after the
/// first blank line.
pub fn prompt_context(prompt: &str) -> &str {
    prompt.split_once("\n\n").map_or("", |(_, ctx)| ctx)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Question {
    pub id: String,
    pub text: String,
    #[serde(default)]
    pub keywords: Vec<String>,
}

#[derive(Deserialize)]
struct QuestionFile {
    version: u32,
    #[serde(default, rename = "question")]
    questions: Vec<Question>,
}

/// Parses a question-set TOML document (`[[question]]` tables with `id`,
/// `text` and `keywords`). Ids must be unique.
pub fn parse_questions(text: &str) -> Result<Vec<Question>> {
    let f: QuestionFile = toml::from_str(text).map_err(|e| Error::Config(format!("question set: {e}")))?;
    if f.version != 1 {
        return Err(Error::VersionMismatch {
            what: "question set",
            found: f.version,
            expected: 1,
        });
    }
    let mut seen = HashSet::new();
    for q in &f.questions {
        if q.id.trim().is_empty() || q.text.trim().is_empty() {
            return Err(Error::Config("question set: empty id or text".into()));
        }
        if !seen.insert(q.id.as_str()) {
            return Err(Error::Config(format!("question set: duplicate id `{}`", q.id)));
        }
    }
    Ok(f.questions)
}

pub fn load_questions(path: &Path) -> Result<Vec<Question>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_questions(&text)
}

/// The seven Baltimore bridge questions with their graph-route keywords.
pub fn default_questions() -> Vec<Question> {
    parse_questions(DEFAULT_QUESTIONS).expect("bundled question set is valid")
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Method {
    GraphQuery,
    VectorRag,
    /// Answers produced elsewhere, named by their source pipeline.
    Imported(String),
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::GraphQuery => f.write_str("graph_query"),
            Method::VectorRag => f.write_str("vector_rag"),
            Method::Imported(name) => write!(f, "imported:{name}"),
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "graph_query" | "graph" => Ok(Method::GraphQuery),
            "vector_rag" | "rag" => Ok(Method::VectorRag),
            other => match other.strip_prefix("imported:") {
                Some(name) if !name.is_empty() => Ok(Method::Imported(name.to_string())),
                _ => Err(Error::InvalidArgument(format!("unknown method `{s}`"))),
            },
        }
    }
}

impl From<Method> for String {
    fn from(m: Method) -> Self {
        m.to_string()
    }
}

impl TryFrom<String> for Method {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QAResult {
    pub question_id: String,
    pub method: Method,
    /// Exactly what was sent to the model.
    pub prompt: String,
    pub answer: Option<String>,
    pub error: Option<String>,
    /// Distinct edge sentences or chunks in the prompt.
    pub context_size: usize,
    /// Size of the retrieved context before the cap, when the cap applied.
    pub truncated_from: Option<usize>,
    /// Edge triples (`source\tlabel\ttarget`) or chunk ids (`doc#index`)
    /// the context was rendered from.
    pub context_refs: Vec<String>,
    pub elapsed_ms: Option<u64>,
    pub model: String,
}

impl QAResult {
    pub fn is_error(&self) -> bool {
        self.error.is_some() || self.answer.is_none()
    }

    fn failed(question: &Question, method: Method, model: &str, error: impl fmt::Display) -> Self {
        Self {
            question_id: question.id.clone(),
            method,
            prompt: String::new(),
            answer: None,
            error: Some(error.to_string()),
            context_size: 0,
            truncated_from: None,
            context_refs: Vec::new(),
            elapsed_ms: None,
            model: model.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptBuild {
    pub prompt: String,
    pub context_size: usize,
    pub truncated_from: Option<usize>,
    pub context_refs: Vec<String>,
}

fn assemble(question: &str, context: &[&str]) -> String {
    let q = question.split_whitespace().collect::<Vec<_>>().join(" ");
    let mut p = format!("{PROMPT_PREFIX}\n{q}\n\n");
    p.push_str(&context.join("\n"));
    p
}

/// Prefix, question, then one triple sentence per line in edge order,
/// keeping at most `max_sentences`.
pub fn build_graph_prompt(question: &str, subgraph: &Subgraph<'_>, max_sentences: usize) -> PromptBuild {
    let sentences = subgraph.sentences();
    let total = sentences.len();
    let kept = &sentences[..total.min(max_sentences)];
    let g = subgraph.graph();
    let refs = kept
        .iter()
        .map(|t| {
            let e = g.edge(t.edge);
            format!("{}\t{}\t{}", e.source, e.label, e.target)
        })
        .collect();
    let text: Vec<&str> = kept.iter().map(|t| t.sentence.as_str()).collect();
    PromptBuild {
        prompt: assemble(question, &text),
        context_size: kept.len(),
        truncated_from: (total > kept.len()).then_some(total),
        context_refs: refs,
    }
}

/// Same layout as [`build_graph_prompt`] with chunk texts separated by blank
/// lines. Chunks with identical text appear once.
pub fn build_rag_prompt(question: &str, chunks: &[&Chunk], max_chunks: usize) -> PromptBuild {
    let mut seen = HashSet::new();
    let distinct: Vec<&Chunk> = chunks
        .iter()
        .copied()
        .filter(|c| seen.insert(c.text.as_str()))
        .collect();
    let total = distinct.len();
    let kept = &distinct[..total.min(max_chunks)];
    let mut context: Vec<&str> = Vec::new();
    for (i, c) in kept.iter().enumerate() {
        if i > 0 {
            context.push("");
        }
        context.push(c.text.as_str());
    }
    PromptBuild {
        prompt: assemble(question, &context),
        context_size: kept.len(),
        truncated_from: (total > kept.len()).then_some(total),
        context_refs: kept
            .iter()
            .map(|c| format!("{}#{}", c.document_identifier, c.chunk_index))
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QaOptions {
    /// Chunks retrieved for the RAG route.
    pub k: usize,
    pub max_sentences: usize,
    pub max_chunks: usize,
    pub retries: u32,
    #[serde(with = "millis")]
    pub backoff: Duration,
    /// Concurrent benchmark cells.
    pub parallelism: usize,
    /// Record wall-clock timings and run timestamps. Off gives byte-identical
    /// runs for deterministic clients.
    pub record_timing: bool,
}

impl Default for QaOptions {
    fn default() -> Self {
        Self {
            k: 5,
            max_sentences: 500,
            max_chunks: 20,
            retries: 2,
            backoff: Duration::from_millis(500),
            parallelism: 1,
            record_timing: true,
        }
    }
}

mod millis {
    use serde::{Deserialize, Deserializer, Serializer};
    use std::time::Duration;

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u64(d.as_millis() as u64)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        u64::deserialize(d).map(Duration::from_millis)
    }
}

/// What the routes may draw on. A route whose resource is absent yields an
/// error result.
#[derive(Clone, Copy)]
pub struct Resources<'a> {
    pub kg: Option<&'a KnowledgeGraph>,
    pub store: Option<&'a VectorStore>,
    pub embedder: Option<&'a dyn Embedder>,
    pub chat: &'a dyn ChatClient,
    pub options: &'a QaOptions,
}

fn retrieve(question: &Question, method: &Method, res: &Resources<'_>) -> Result<PromptBuild> {
    let opts = res.options;
    match method {
        Method::GraphQuery => {
            let kg = res
                .kg
                .ok_or_else(|| Error::InvalidArgument("graph route needs a knowledge graph".into()))?;
            if question.keywords.iter().all(|k| k.trim().is_empty()) {
                return Err(Error::InvalidArgument(format!(
                    "question `{}` has no keywords for the graph route",
                    question.id
                )));
            }
            let sub = keyword_edge_search(kg, &question.keywords)?;
            Ok(build_graph_prompt(&question.text, &sub, opts.max_sentences))
        }
        Method::VectorRag => {
            let store = res
                .store
                .ok_or_else(|| Error::InvalidArgument("rag route needs a vector store".into()))?;
            if store.is_empty() {
                return Err(Error::StoreEmpty);
            }
            if opts.k == 0 {
                return Ok(build_rag_prompt(&question.text, &[], opts.max_chunks));
            }
            let embedder = res
                .embedder
                .ok_or_else(|| Error::InvalidArgument("rag route needs an embedder".into()))?;
            let hits = nearest_chunks(store, &question.text, opts.k, embedder)?;
            let chunks: Vec<&Chunk> = hits.iter().map(|h| h.chunk).collect();
            Ok(build_rag_prompt(&question.text, &chunks, opts.max_chunks))
        }
        Method::Imported(name) => Err(Error::InvalidArgument(format!(
            "imported method `{name}` cannot be run here"
        ))),
    }
}

/// Runs one route for one question. Failures become error results; an
/// answer is never substituted.
pub fn answer(question: &Question, method: Method, res: &Resources<'_>) -> QAResult {
    let model = res.chat.model();
    let start = Instant::now();
    let built = match retrieve(question, &method, res) {
        Ok(b) => b,
        Err(e) => return QAResult::failed(question, method, model, e),
    };
    let reply = with_retries(res.options.retries, res.options.backoff, || {
        res.chat.complete(&built.prompt)
    });
    let elapsed = res
        .options
        .record_timing
        .then(|| start.elapsed().as_millis() as u64);
    let (answer, error) = match reply {
        Ok(a) => (Some(a), None),
        Err(e) => {
            warn!("{} / {method}: {e}", question.id);
            (None, Some(e.to_string()))
        }
    };
    QAResult {
        question_id: question.id.clone(),
        method,
        prompt: built.prompt,
        answer,
        error,
        context_size: built.context_size,
        truncated_from: built.truncated_from,
        context_refs: built.context_refs,
        elapsed_ms: elapsed,
        model: model.to_string(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub format: String,
    pub version: u32,
    pub started_at: Option<DateTime<Utc>>,
    pub finished_at: Option<DateTime<Utc>>,
    pub chat_model: String,
    pub embedder_id: Option<String>,
    pub store_embedder_id: Option<String>,
    pub options: QaOptions,
    pub questions: Vec<Question>,
    pub methods: Vec<Method>,
    /// Cell file names in (question, method) order.
    pub cells: Vec<String>,
    pub errors: usize,
}

fn cell_file(question_id: &str, method: &Method) -> String {
    let clean = |s: &str| -> String {
        s.chars()
            .map(|c| {
                if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                    c
                } else {
                    '_'
                }
            })
            .collect()
    };
    format!("{}__{}.json", clean(question_id), clean(&method.to_string()))
}

pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

fn to_json_pretty<T: Serialize>(v: &T) -> Result<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(v)?;
    out.push(b'\n');
    Ok(out)
}

/// Answers every (question, method) cell. With `out`, each cell is written
/// to `out/cells/` as it completes and `out/manifest.json` last.
pub fn run_benchmark(
    questions: &[Question],
    methods: &[Method],
    res: &Resources<'_>,
    out: Option<&Path>,
) -> Result<(RunManifest, Vec<QAResult>)> {
    let started_at = res.options.record_timing.then(Utc::now);
    if let Some(dir) = out {
        let cells = dir.join("cells");
        std::fs::create_dir_all(&cells).map_err(|e| Error::io(&cells, e))?;
    }
    let jobs: Vec<(usize, &Question, &Method)> = questions
        .iter()
        .flat_map(|q| methods.iter().map(move |m| (q, m)))
        .enumerate()
        .map(|(i, (q, m))| (i, q, m))
        .collect();
    let next = Mutex::new(0usize);
    let done: Mutex<Vec<Option<QAResult>>> = Mutex::new(vec![None; jobs.len()]);
    let write_err: Mutex<Option<Error>> = Mutex::new(None);
    std::thread::scope(|s| {
        for _ in 0..res.options.parallelism.max(1).min(jobs.len().max(1)) {
            s.spawn(|| loop {
                let i = {
                    let mut n = next.lock().expect("job counter poisoned");
                    if *n >= jobs.len() {
                        break;
                    }
                    *n += 1;
                    *n - 1
                };
                let (_, q, m) = jobs[i];
                let r = answer(q, m.clone(), res);
                if let Some(dir) = out {
                    let path = dir.join("cells").join(cell_file(&q.id, m));
                    if let Err(e) = to_json_pretty(&r).and_then(|b| write_atomic(&path, &b)) {
                        write_err.lock().expect("error slot poisoned").get_or_insert(e);
                    }
                }
                done.lock().expect("results poisoned")[i] = Some(r);
            });
        }
    });
    if let Some(e) = write_err.into_inner().expect("error slot poisoned") {
        return Err(e);
    }
    let results: Vec<QAResult> = done
        .into_inner()
        .expect("results poisoned")
        .into_iter()
        .map(|r| r.expect("every cell ran"))
        .collect();
    let manifest = RunManifest {
        format: RUN_FORMAT.to_string(),
        version: RUN_VERSION,
        started_at,
        finished_at: res.options.record_timing.then(Utc::now),
        chat_model: res.chat.model().to_string(),
        embedder_id: res.embedder.map(|e| e.id().to_string()),
        store_embedder_id: res.store.map(|s| s.embedder_id().to_string()),
        options: res.options.clone(),
        questions: questions.to_vec(),
        methods: methods.to_vec(),
        cells: jobs.iter().map(|(_, q, m)| cell_file(&q.id, m)).collect(),
        errors: results.iter().filter(|r| r.is_error()).count(),
    };
    if let Some(dir) = out {
        write_atomic(&dir.join("manifest.json"), &to_json_pretty(&manifest)?)?;
    }
    info!("benchmark: {} cells, {} errors", results.len(), manifest.errors);
    Ok((manifest, results))
}

/// Reads a run directory written by [`run_benchmark`].
pub fn load_run(dir: &Path) -> Result<(RunManifest, Vec<QAResult>)> {
    let path = dir.join("manifest.json");
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let manifest: RunManifest = serde_json::from_str(&text)?;
    if manifest.format != RUN_FORMAT {
        return Err(Error::Corrupt {
            what: "run manifest",
            reason: format!("unexpected format `{}`", manifest.format),
        });
    }
    if manifest.version != RUN_VERSION {
        return Err(Error::VersionMismatch {
            what: "run manifest",
            found: manifest.version,
            expected: RUN_VERSION,
        });
    }
    let results = manifest
        .cells
        .iter()
        .map(|c| {
            let p = dir.join("cells").join(c);
            let t = std::fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?;
            Ok(serde_json::from_str(&t)?)
        })
        .collect::<Result<Vec<QAResult>>>()?;
    Ok((manifest, results))
}
