//! Run the seven benchmark questions through the graph route and the vector
//! RAG route with offline stand-ins for the chat and embedding models.
//!
//! The stub chat client echoes the retrieved context, so each answer shows
//! exactly what the retrieval step handed to the model.
//!
//! ```text
//! cargo run --example qa_benchmark
//! ```

use std::path::Path;

use gdelt_kg::fetch::{fetch_corpus, FetchPolicy, Fixtures};
use gdelt_kg::ingest::{IngestBatch, KeywordFilter, SchemaMap};
use gdelt_kg::kg::{build_dkg, load_extra_triples, BuildOptions, Ontology};
use gdelt_kg::llm::{EchoChat, HashEmbedder};
use gdelt_kg::qa::{default_questions, run_benchmark, Method, QaOptions, Resources};
use gdelt_kg::vector::{build_store, StoreOptions, WhitespaceTokenizer};

fn main() -> gdelt_kg::Result<()> {
    let dir = Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/baltimore"));
    let subset = IngestBatch::from_files(
        &dir.join("events.export.tsv"),
        &dir.join("mentions.tsv"),
        &dir.join("gkg.tsv"),
        &SchemaMap::default(),
    )?
    .filter(&KeywordFilter::new(["Baltimore", "bridge", "collapse", "ship"]))?;

    let mut ontology = Ontology::default();
    ontology.extend_from_file(&dir.join("ontology_ext.toml"))?;
    let (kg, _) = build_dkg(
        &subset,
        &BuildOptions {
            ontology,
            skip_unresolved: false,
            extra_triples: load_extra_triples(&dir.join("extra_triples.tsv"))?,
        },
    )?;

    let corpus_dir = std::env::temp_dir().join("gdelt-kg-example-qa-corpus");
    let policy = FetchPolicy {
        fixtures: Some(Fixtures::load(dir)?),
        offline: true,
        ..FetchPolicy::default()
    };
    let corpus = fetch_corpus(&subset, &policy, &corpus_dir)?.texts;
    let embedder = HashEmbedder::default();
    let (store, _) = build_store(&corpus, &embedder, &WhitespaceTokenizer, &StoreOptions::default())?;

    let options = QaOptions {
        max_sentences: 8,
        record_timing: false,
        ..QaOptions::default()
    };
    let res = Resources {
        kg: Some(&kg),
        store: Some(&store),
        embedder: Some(&embedder),
        chat: &EchoChat,
        options: &options,
    };
    let questions = default_questions();
    let (manifest, results) =
        run_benchmark(&questions, &[Method::GraphQuery, Method::VectorRag], &res, None)?;
    println!("{} cells, {} errors\n", manifest.cells.len(), manifest.errors);
    for r in &results {
        let first = r.answer.as_deref().unwrap_or("-").lines().next().unwrap_or("");
        let cut = match r.truncated_from {
            Some(n) => format!(" (capped from {n})"),
            None => String::new(),
        };
        println!(
            "{:<14} {:<12} ctx {:>3}{cut}  {first}",
            r.question_id, r.method, r.context_size
        );
    }
    let _ = std::fs::remove_dir_all(corpus_dir);
    Ok(())
}
