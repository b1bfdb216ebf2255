//! Chunked, embedded article text with exact Euclidean nearest-neighbour
//! retrieval.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use log::{info, warn};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fetch::ArticleText;
use crate::llm::{with_retries, Embedder, EndpointError};

pub const DEFAULT_MAX_TOKENS: usize = 500;
pub const STORE_FORMAT: &str = "gdelt-kg-store";
pub const STORE_VERSION: u32 = 1;

pub trait Tokenizer: Send + Sync {
    fn tokenize(&self, text: &str) -> Vec<String>;
    /// Inverse of `tokenize` up to whitespace: `tokenize(join(t)) == t`.
    fn join(&self, tokens: &[String]) -> String;
}

/// Splits on Unicode whitespace; joins with single spaces.
#[derive(Debug, Clone, Copy, Default)]
pub struct WhitespaceTokenizer;

impl Tokenizer for WhitespaceTokenizer {
    fn tokenize(&self, text: &str) -> Vec<String> {
        text.split_whitespace().map(str::to_string).collect()
    }

    fn join(&self, tokens: &[String]) -> String {
        tokens.join(" ")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f32>", into = "Vec<f32>")]
pub struct EmbeddingVector(Vec<f32>);

impl EmbeddingVector {
    pub fn new(values: Vec<f32>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidArgument("embedding has zero dimensions".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("embedding has non-finite entries".into()));
        }
        Ok(Self(values))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &[f32] {
        &self.0
    }

    pub fn euclidean(&self, other: &Self) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| {
                let d = f64::from(*a) - f64::from(*b);
                d * d
            })
            .sum::<f64>()
            .sqrt()
    }
}

impl TryFrom<Vec<f32>> for EmbeddingVector {
    type Error = Error;

    fn try_from(v: Vec<f32>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<EmbeddingVector> for Vec<f32> {
    fn from(v: EmbeddingVector) -> Self {
        v.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chunk {
    pub document_identifier: String,
    pub chunk_index: usize,
    pub text: String,
    pub token_count: usize,
}

/// Greedy left-to-right packing of tokens into chunks of at most
/// `max_tokens`. An empty body gives no chunks.
pub fn chunk_body(
    document_identifier: &str,
    body: &str,
    max_tokens: usize,
    tokenizer: &dyn Tokenizer,
) -> Vec<Chunk> {
    assert!(max_tokens > 0, "max_tokens must be positive");
    tokenizer
        .tokenize(body)
        .chunks(max_tokens)
        .enumerate()
        .map(|(i, toks)| Chunk {
            document_identifier: document_identifier.to_string(),
            chunk_index: i,
            text: tokenizer.join(toks),
            token_count: toks.len(),
        })
        .collect()
}

pub fn chunk_text(doc: &ArticleText, max_tokens: usize, tokenizer: &dyn Tokenizer) -> Vec<Chunk> {
    chunk_body(&doc.document_identifier, &doc.body, max_tokens, tokenizer)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoreEntry {
    pub chunk: Chunk,
    pub vector: EmbeddingVector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VectorStore {
    embedder_id: String,
    dim: usize,
    entries: Vec<StoreEntry>,
}

impl VectorStore {
    pub fn new(embedder_id: impl Into<String>, dim: usize) -> Self {
        Self {
            embedder_id: embedder_id.into(),
            dim,
            entries: Vec::new(),
        }
    }

    pub fn push(&mut self, chunk: Chunk, vector: EmbeddingVector) -> Result<()> {
        if vector.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: vector.dim(),
            });
        }
        self.entries.push(StoreEntry { chunk, vector });
        Ok(())
    }

    pub fn embedder_id(&self) -> &str {
        &self.embedder_id
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[StoreEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct StoreOptions {
    pub max_tokens: usize,
    pub batch_size: usize,
    pub parallelism: usize,
    pub retries: u32,
    pub backoff: Duration,
}

impl Default for StoreOptions {
    fn default() -> Self {
        Self {
            max_tokens: DEFAULT_MAX_TOKENS,
            batch_size: 32,
            parallelism: 4,
            retries: 2,
            backoff: Duration::from_millis(500),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailedChunk {
    pub document_identifier: String,
    pub chunk_index: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoreBuildReport {
    pub documents: usize,
    /// Documents with an empty body (failed fetches); nothing to chunk.
    pub empty_documents: Vec<String>,
    pub chunks: usize,
    /// Chunks whose embedding still failed after retries.
    pub failed: Vec<FailedChunk>,
}

/// Chunks and embeds every document, batching requests and running up to
/// `parallelism` batches at once. Entries keep corpus order.
pub fn build_store(
    corpus: &[ArticleText],
    embedder: &dyn Embedder,
    tokenizer: &dyn Tokenizer,
    opts: &StoreOptions,
) -> Result<(VectorStore, StoreBuildReport)> {
    if corpus.is_empty() {
        return Err(Error::NothingToIndex);
    }
    let mut report = StoreBuildReport {
        documents: corpus.len(),
        ..Default::default()
    };
    let mut chunks = Vec::new();
    for doc in corpus {
        let c = chunk_text(doc, opts.max_tokens, tokenizer);
        if c.is_empty() {
            report.empty_documents.push(doc.document_identifier.clone());
        }
        chunks.extend(c);
    }
    report.chunks = chunks.len();
    if chunks.is_empty() {
        return Err(Error::NothingToIndex);
    }

    let batches: Vec<&[Chunk]> = chunks.chunks(opts.batch_size.max(1)).collect();
    type BatchResult = std::result::Result<Vec<EmbeddingVector>, EndpointError>;
    let results: Mutex<Vec<Option<BatchResult>>> = Mutex::new(vec![None; batches.len()]);
    let next = AtomicUsize::new(0);
    std::thread::scope(|s| {
        for _ in 0..opts.parallelism.max(1).min(batches.len()) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(batch) = batches.get(i) else { break };
                let texts: Vec<String> = batch.iter().map(|c| c.text.clone()).collect();
                let r = with_retries(opts.retries, opts.backoff, || {
                    let v = embedder.embed(&texts)?;
                    if v.len() != texts.len() {
                        return Err(EndpointError::Permanent(format!(
                            "asked for {} embeddings, got {}",
                            texts.len(),
                            v.len()
                        )));
                    }
                    Ok(v)
                });
                results.lock().expect("result slots poisoned")[i] = Some(r);
            });
        }
    });

    let mut store: Option<VectorStore> = None;
    for (batch, result) in batches
        .iter()
        .zip(results.into_inner().expect("result slots poisoned"))
    {
        match result.expect("every batch is processed") {
            Ok(vectors) => {
                for (chunk, v) in batch.iter().zip(vectors) {
                    let st = store.get_or_insert_with(|| VectorStore::new(embedder.id(), v.dim()));
                    st.push(chunk.clone(), v)?;
                }
            }
            Err(e) => {
                warn!("embedding batch failed: {e}");
                report.failed.extend(batch.iter().map(|c| FailedChunk {
                    document_identifier: c.document_identifier.clone(),
                    chunk_index: c.chunk_index,
                    reason: e.to_string(),
                }));
            }
        }
    }
    let store = store
        .ok_or_else(|| Error::Endpoint(format!("all {} embedding request(s) failed", report.failed.len())))?;
    info!(
        "indexed {} chunks from {} documents ({} failed)",
        store.len(),
        report.documents,
        report.failed.len()
    );
    Ok((store, report))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Neighbor<'s> {
    pub entry: usize,
    pub chunk: &'s Chunk,
    pub distance: f64,
}

/// Exhaustive top-k by Euclidean distance; ties broken by
/// (document identifier, chunk index) ascending.
pub fn nearest_by_vector<'s>(
    store: &'s VectorStore,
    query: &EmbeddingVector,
    k: usize,
) -> Result<Vec<Neighbor<'s>>> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    if store.is_empty() {
        return Err(Error::StoreEmpty);
    }
    if query.dim() != store.dim {
        return Err(Error::DimensionMismatch {
            expected: store.dim,
            found: query.dim(),
        });
    }
    let mut hits: Vec<Neighbor<'s>> = store
        .entries
        .iter()
        .enumerate()
        .map(|(i, e)| Neighbor {
            entry: i,
            chunk: &e.chunk,
            distance: e.vector.euclidean(query),
        })
        .collect();
    hits.sort_by(|a, b| {
        a.distance
            .total_cmp(&b.distance)
            .then_with(|| a.chunk.document_identifier.cmp(&b.chunk.document_identifier))
            .then_with(|| a.chunk.chunk_index.cmp(&b.chunk.chunk_index))
    });
    hits.truncate(k);
    Ok(hits)
}

/// Embeds `query` with the store's embedder and returns the `k` nearest chunks.
pub fn nearest_chunks<'s>(
    store: &'s VectorStore,
    query: &str,
    k: usize,
    embedder: &dyn Embedder,
) -> Result<Vec<Neighbor<'s>>> {
    if store.is_empty() {
        return Err(Error::StoreEmpty);
    }
    if embedder.id() != store.embedder_id {
        return Err(Error::EmbedderMismatch {
            store: store.embedder_id.clone(),
            configured: embedder.id().to_string(),
        });
    }
    let v = embedder
        .embed(&[query.to_string()])
        .map_err(|e| Error::Endpoint(e.to_string()))?
        .pop()
        .ok_or_else(|| Error::Endpoint("no embedding returned for query".into()))?;
    nearest_by_vector(store, &v, k)
}

#[derive(Serialize, Deserialize)]
struct StoreHeader {
    format: String,
    version: u32,
    embedder_id: String,
    dim: usize,
    entries: usize,
}

fn corrupt(reason: impl Into<String>) -> Error {
    Error::Corrupt {
        what: "vector store",
        reason: reason.into(),
    }
}

pub fn save_store(store: &VectorStore, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let header = StoreHeader {
        format: STORE_FORMAT.into(),
        version: STORE_VERSION,
        embedder_id: store.embedder_id.clone(),
        dim: store.dim,
        entries: store.entries.len(),
    };
    serde_json::to_writer(&mut w, &header)?;
    w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    for e in &store.entries {
        serde_json::to_writer(&mut w, e)?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Loads a store. When `expected_embedder` is given it must match the
/// embedder the store was built with.
pub fn load_store(path: &Path, expected_embedder: Option<&str>) -> Result<VectorStore> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(file).lines();
    let first = lines
        .next()
        .ok_or_else(|| corrupt("empty file"))?
        .map_err(|e| Error::io(path, e))?;
    let header: StoreHeader = serde_json::from_str(&first).map_err(|e| corrupt(format!("header: {e}")))?;
    if header.format != STORE_FORMAT {
        return Err(corrupt(format!("unexpected format `{}`", header.format)));
    }
    if header.version != STORE_VERSION {
        return Err(Error::VersionMismatch {
            what: "vector store",
            found: header.version,
            expected: STORE_VERSION,
        });
    }
    if let Some(want) = expected_embedder {
        if want != header.embedder_id {
            return Err(Error::EmbedderMismatch {
                store: header.embedder_id,
                configured: want.to_string(),
            });
        }
    }
    let mut store = VectorStore::new(header.embedder_id, header.dim);
    for (i, line) in lines.enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let entry: StoreEntry =
            serde_json::from_str(&line).map_err(|e| corrupt(format!("entry {}: {e}", i + 1)))?;
        store.push(entry.chunk, entry.vector)?;
    }
    if store.len() != header.entries {
        return Err(corrupt(format!(
            "expected {} entries, found {}",
            header.entries,
            store.len()
        )));
    }
    Ok(store)
}
