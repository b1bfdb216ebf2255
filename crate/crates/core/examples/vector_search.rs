//! Chunk article text into at most 500-token pieces, embed the chunks and
//! retrieve the nearest ones for a question by Euclidean distance.
//!
//! Uses the deterministic hash embedder; swap in `OpenAiEmbedder` for a
//! real embedding model.
//!
//! ```text
//! cargo run --example vector_search
//! ```

use chrono::DateTime;
use gdelt_kg::fetch::{ArticleText, FetchStatus};
use gdelt_kg::llm::HashEmbedder;
use gdelt_kg::vector::{build_store, chunk_text, nearest_chunks, StoreOptions, WhitespaceTokenizer};

fn doc(url: &str, body: &str) -> ArticleText {
    ArticleText {
        document_identifier: url.into(),
        body: body.into(),
        fetch_status: FetchStatus::Fixture,
        fetched_at: DateTime::UNIX_EPOCH,
        detail: None,
    }
}

fn main() -> gdelt_kg::Result<()> {
    let long_body = (0..1200).map(|i| format!("w{i}")).collect::<Vec<_>>().join(" ");
    let sizes: Vec<usize> = chunk_text(&doc("long", &long_body), 500, &WhitespaceTokenizer)
        .iter()
        .map(|c| c.token_count)
        .collect();
    println!("1200-token document -> chunk sizes {sizes:?}");

    let corpus = vec![
        doc(
            "a",
            "The ship that struck the bridge was the Dali, a Singapore-flagged container vessel.",
        ),
        doc(
            "b",
            "Mayor Brandon Scott said rescue crews were searching the Patapsco River.",
        ),
        doc("c", "The Francis Scott Key Bridge collapsed on March 26, 2024."),
    ];
    let embedder = HashEmbedder::new(128);
    let (store, report) = build_store(&corpus, &embedder, &WhitespaceTokenizer, &StoreOptions::default())?;
    println!(
        "store: {} entries, dim {}, embedder {}",
        store.len(),
        store.dim(),
        store.embedder_id()
    );
    assert!(report.failed.is_empty());

    for q in ["What is the name of the ship?", "When did the bridge collapse?"] {
        println!("\n{q}");
        for n in nearest_chunks(&store, q, 2, &embedder)? {
            println!(
                "  {:.4}  {}#{}  {}",
                n.distance, n.chunk.document_identifier, n.chunk.chunk_index, n.chunk.text
            );
        }
    }
    Ok(())
}
