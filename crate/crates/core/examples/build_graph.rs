//! Build the direct knowledge graph from the fixture subset, including one
//! analyst-supplied edge from an ontology extension, and save / reload it.
//!
//! ```text
//! cargo run --example build_graph
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use gdelt_kg::ingest::{IngestBatch, KeywordFilter, SchemaMap};
use gdelt_kg::kg::{build_dkg, load_extra_triples, load_graph, save_graph, BuildOptions, Ontology};

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
    let opts = BuildOptions {
        ontology,
        skip_unresolved: false,
        extra_triples: load_extra_triples(&dir.join("extra_triples.tsv"))?,
    };
    let (kg, report) = build_dkg(&subset, &opts)?;

    println!("nodes {}  edges {}", kg.node_count(), kg.edge_count());
    println!(
        "row nodes {}  value nodes {}  star edges {}  structural edges {}  extra edges {}",
        report.row_nodes, report.value_nodes, report.star_edges, report.structural_edges, report.extra_edges
    );

    let mut by_label: BTreeMap<&str, usize> = BTreeMap::new();
    for e in kg.edges() {
        *by_label.entry(e.label.as_str()).or_default() += 1;
    }
    for (label, n) in by_label {
        println!("  {label:<22} {n}");
    }

    let tmp = std::env::temp_dir().join("gdelt-kg-example-graph.jsonl");
    save_graph(&kg, &tmp)?;
    let back = load_graph(&tmp)?;
    println!("round trip equal: {}", back == kg);
    let _ = std::fs::remove_file(tmp);
    Ok(())
}
