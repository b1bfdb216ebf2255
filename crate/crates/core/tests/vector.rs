mod common;

use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Duration;

use chrono::{TimeZone, Utc};
use gdelt_kg::fetch::{ArticleText, FetchStatus};
use gdelt_kg::llm::{Embedder, EndpointError, HashEmbedder};
use gdelt_kg::vector::{
    build_store, chunk_body, load_store, nearest_by_vector, nearest_chunks, save_store, Chunk,
    EmbeddingVector, StoreOptions, Tokenizer, VectorStore, WhitespaceTokenizer,
};
use gdelt_kg::Error;
use proptest::prelude::*;

fn doc(id: &str, body: &str) -> ArticleText {
    ArticleText {
        document_identifier: id.to_string(),
        body: body.to_string(),
        fetch_status: FetchStatus::Fixture,
        fetched_at: Utc.timestamp_opt(0, 0).unwrap(),
        detail: None,
    }
}

fn words(n: usize) -> String {
    (0..n).map(|i| format!("w{i}")).collect::<Vec<_>>().join(" ")
}

fn opts() -> StoreOptions {
    StoreOptions {
        backoff: Duration::ZERO,
        batch_size: 3,
        ..Default::default()
    }
}

/// Exhaustive top-k with the documented tie rule, computed independently.
fn brute_top_k(store: &VectorStore, q: &[f32], k: usize) -> Vec<usize> {
    let mut scored: Vec<(f64, &str, usize, usize)> = store
        .entries()
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let d2: f64 = e
                .vector
                .values()
                .iter()
                .zip(q)
                .map(|(a, b)| (f64::from(*a) - f64::from(*b)).powi(2))
                .sum();
            (
                d2.sqrt(),
                e.chunk.document_identifier.as_str(),
                e.chunk.chunk_index,
                i,
            )
        })
        .collect();
    scored.sort_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .unwrap()
            .then(a.1.cmp(b.1))
            .then(a.2.cmp(&b.2))
    });
    scored.into_iter().take(k).map(|s| s.3).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn nearest_equals_exhaustive_scan(seed in any::<u64>(), k in 1usize..600) {
        let mut r = common::rng(seed);
        let store = common::random_store(&mut r);
        let q = common::random_vector(&mut r, store.dim());
        let got = nearest_by_vector(&store, &EmbeddingVector::new(q.clone()).unwrap(), k).unwrap();
        let ids: Vec<usize> = got.iter().map(|n| n.entry).collect();
        prop_assert_eq!(ids, brute_top_k(&store, &q, k));
        prop_assert_eq!(got.len(), k.min(store.len()));
        for n in &got {
            prop_assert!(n.distance >= 0.0);
            let same = store.entries()[n.entry].vector.values() == q.as_slice();
            prop_assert_eq!(n.distance == 0.0, same);
        }
    }

    #[test]
    fn chunk_reconstruction(seed in any::<u64>(), max in 1usize..700) {
        let body = common::random_document(&mut common::rng(seed));
        let t = WhitespaceTokenizer;
        let chunks = chunk_body("d", &body, max, &t);
        let tokens = t.tokenize(&body);
        let rebuilt: Vec<String> = chunks.iter().flat_map(|c| t.tokenize(&c.text)).collect();
        prop_assert_eq!(&rebuilt, &tokens);
        for (i, c) in chunks.iter().enumerate() {
            prop_assert_eq!(c.chunk_index, i);
            prop_assert!(c.token_count >= 1 && c.token_count <= max);
            prop_assert_eq!(c.token_count, t.tokenize(&c.text).len());
        }
        // Greedy: every chunk but the last is full.
        if let Some((_, init)) = chunks.split_last() {
            prop_assert!(init.iter().all(|c| c.token_count == max));
        }
    }
}

#[test]
fn greedy_chunk_sizes() {
    let t = WhitespaceTokenizer;
    let sizes = |n: usize| -> Vec<usize> {
        chunk_body("d", &words(n), 500, &t)
            .iter()
            .map(|c| c.token_count)
            .collect()
    };
    assert_eq!(sizes(1200), vec![500, 500, 200]);
    assert_eq!(sizes(1), vec![1]);
    assert_eq!(sizes(500), vec![500]);
    assert!(sizes(0).is_empty());
}

#[test]
fn three_four_five() {
    let mut store = VectorStore::new("x", 2);
    for (i, v) in [[0.0, 0.0], [3.0, 4.0]].into_iter().enumerate() {
        let chunk = Chunk {
            document_identifier: format!("d{i}"),
            chunk_index: 0,
            text: "t".into(),
            token_count: 1,
        };
        store
            .push(chunk, EmbeddingVector::new(v.to_vec()).unwrap())
            .unwrap();
    }
    let q = EmbeddingVector::new(vec![0.0, 0.0]).unwrap();
    let one = nearest_by_vector(&store, &q, 1).unwrap();
    assert_eq!((one[0].entry, one[0].distance), (0, 0.0));
    let two = nearest_by_vector(&store, &q, 2).unwrap();
    assert_eq!((two[1].entry, two[1].distance), (1, 5.0));
    assert_eq!(nearest_by_vector(&store, &q, 10).unwrap().len(), 2);
    assert!(nearest_by_vector(&store, &q, 0).is_err());
}

#[test]
fn build_counts_identity_query_and_determinism() {
    let e = HashEmbedder::new(64);
    let corpus = vec![doc("a", &words(600)), doc("b", &words(600))];
    let (store, report) = build_store(&corpus, &e, &WhitespaceTokenizer, &opts()).unwrap();
    assert_eq!(store.len(), 4);
    assert_eq!(report.chunks, 4);
    assert!(report.failed.is_empty());

    let text = store.entries()[3].chunk.text.clone();
    let hits = nearest_chunks(&store, &text, 1, &e).unwrap();
    assert_eq!(hits[0].distance, 0.0);
    assert_eq!(hits[0].chunk.text, text);

    let dir = tempfile::tempdir().unwrap();
    let (p1, p2) = (dir.path().join("1.store"), dir.path().join("2.store"));
    save_store(&store, &p1).unwrap();
    let (again, _) = build_store(&corpus, &e, &WhitespaceTokenizer, &opts()).unwrap();
    save_store(&again, &p2).unwrap();
    assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());

    let back = load_store(&p1, Some(e.id())).unwrap();
    assert_eq!(back, store);
    assert!(matches!(
        load_store(&p1, Some("other-model")),
        Err(Error::EmbedderMismatch { .. })
    ));
    let other = HashEmbedder::new(32);
    assert!(matches!(
        nearest_chunks(&store, "q", 1, &other),
        Err(Error::EmbedderMismatch { .. })
    ));
}

#[test]
fn order_insensitive() {
    let mut r = common::rng(9);
    let e = HashEmbedder::new(16);
    let corpus: Vec<ArticleText> = (0..12)
        .map(|i| doc(&common::doc_url(i), &common::random_document(&mut r)))
        .collect();
    let mut shuffled = corpus.clone();
    shuffled.reverse();
    shuffled.swap(0, 5);
    let (a, _) = build_store(&corpus, &e, &WhitespaceTokenizer, &opts()).unwrap();
    let (b, _) = build_store(&shuffled, &e, &WhitespaceTokenizer, &opts()).unwrap();
    for q in ["bridge collapse", "Dali ship crew", "river port"] {
        for k in [1, 3, 10] {
            let key = |s: &VectorStore| -> Vec<(String, usize, u64)> {
                nearest_chunks(s, q, k, &e)
                    .unwrap()
                    .iter()
                    .map(|n| {
                        (
                            n.chunk.document_identifier.clone(),
                            n.chunk.chunk_index,
                            n.distance.to_bits(),
                        )
                    })
                    .collect()
            };
            assert_eq!(key(&a), key(&b));
        }
    }
}

#[test]
fn nothing_to_index() {
    let e = HashEmbedder::new(8);
    assert!(matches!(
        build_store(&[], &e, &WhitespaceTokenizer, &opts()),
        Err(Error::NothingToIndex)
    ));
    let empty = [doc("a", "  \n ")];
    assert!(matches!(
        build_store(&empty, &e, &WhitespaceTokenizer, &opts()),
        Err(Error::NothingToIndex)
    ));
    assert!(matches!(
        nearest_chunks(&VectorStore::new(e.id(), 8), "q", 1, &e),
        Err(Error::StoreEmpty)
    ));
}

/// Returns dim 4 for the first call and dim 5 afterwards.
struct Shifting(AtomicUsize);

impl Embedder for Shifting {
    fn id(&self) -> &str {
        "shifting"
    }
    fn embed(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, EndpointError> {
        let dim = if self.0.fetch_add(1, Ordering::SeqCst) == 0 {
            4
        } else {
            5
        };
        Ok(texts
            .iter()
            .map(|_| EmbeddingVector::new(vec![1.0; dim]).unwrap())
            .collect())
    }
}

#[test]
fn dimension_change_is_fatal() {
    let corpus = [doc("a", &words(20))];
    let o = StoreOptions {
        max_tokens: 5,
        batch_size: 1,
        parallelism: 1,
        ..opts()
    };
    let err = build_store(&corpus, &Shifting(AtomicUsize::new(0)), &WhitespaceTokenizer, &o).unwrap_err();
    assert!(matches!(
        err,
        Error::DimensionMismatch {
            expected: 4,
            found: 5
        }
    ));
}

/// Fails permanently on any batch containing the word `poison`; counts calls.
struct Picky(AtomicUsize);

impl Embedder for Picky {
    fn id(&self) -> &str {
        "picky"
    }
    fn embed(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, EndpointError> {
        let n = self.0.fetch_add(1, Ordering::SeqCst);
        if texts.iter().any(|t| t.contains("poison")) {
            return Err(EndpointError::Permanent("rejected".into()));
        }
        if n == 0 {
            return Err(EndpointError::Transient("warming up".into()));
        }
        Ok(texts
            .iter()
            .map(|_| EmbeddingVector::new(vec![0.5; 3]).unwrap())
            .collect())
    }
}

#[test]
fn failed_chunks_are_reported() {
    let corpus = [
        doc("a", "one two three"),
        doc("b", "poison pill"),
        doc("c", "four five"),
    ];
    let o = StoreOptions {
        batch_size: 1,
        parallelism: 1,
        ..opts()
    };
    let picky = Picky(AtomicUsize::new(0));
    let (store, report) = build_store(&corpus, &picky, &WhitespaceTokenizer, &o).unwrap();
    assert_eq!(store.len(), 2);
    assert_eq!(report.failed.len(), 1);
    assert_eq!(report.failed[0].document_identifier, "b");
    assert_eq!(store.len() + report.failed.len(), report.chunks);
}
