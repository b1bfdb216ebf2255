//! Keyword search over triple sentences and the aggregate queries that answer
//! the benchmark's counting and attribution questions directly.
//!
//! ```text
//! cargo run --example graph_queries
//! ```

use std::path::Path;

use gdelt_kg::ingest::{IngestBatch, KeywordFilter, SchemaMap};
use gdelt_kg::kg::{build_dkg, load_extra_triples, BuildOptions, KnowledgeGraph, NodeId, Ontology};
use gdelt_kg::query::{
    count_articles_by_source, keyword_edge_search, mention_attribution, neighborhood, top_themes,
};

fn fixture_graph() -> gdelt_kg::Result<KnowledgeGraph> {
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
    let opts = BuildOptions {
        ontology,
        skip_unresolved: false,
        extra_triples: load_extra_triples(&dir.join("extra_triples.tsv"))?,
    };
    Ok(build_dkg(&subset, &opts)?.0)
}

fn main() -> gdelt_kg::Result<()> {
    let kg = fixture_graph()?;

    let sub = keyword_edge_search(&kg, &["Niki Fennoy"])?;
    println!(
        "keywords [Niki Fennoy]: {} edges, {} nodes",
        sub.edge_count(),
        sub.nodes().len()
    );
    for t in sub.sentences() {
        println!("  {}", t.sentence);
    }

    let river = keyword_edge_search(&kg, &["crosses"])?;
    for t in river.sentences() {
        println!("keywords [crosses]: {}", t.sentence);
    }

    println!("\ntop themes:");
    for (theme, n) in top_themes(&kg, 5)? {
        println!("  {theme:<20} {n}");
    }

    println!(
        "\narticles published by cnn: {}",
        count_articles_by_source(&kg, "cnn")
    );

    let att = mention_attribution(&kg, "Niki Fennoy")?;
    println!("articles attributed to Niki Fennoy: {}", att.count());
    for a in &att.articles {
        println!("  {a}");
    }

    let event = NodeId::new("event:1160112400");
    let hood = neighborhood(&kg, &event, 1)?;
    println!("\nradius-1 neighborhood of {event}:");
    for t in hood.sentences() {
        println!("  {}", t.sentence);
    }
    Ok(())
}
