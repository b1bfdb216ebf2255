//! Parse the bundled GDELT fixture and keep the rows matching a keyword list.
//!
//! ```text
//! cargo run --example ingest_subset
//! ```

use std::path::Path;

use gdelt_kg::ingest::{consistency_report, IngestBatch, KeywordFilter, SchemaMap};

fn main() -> gdelt_kg::Result<()> {
    let dir = Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/baltimore"));
    let batch = IngestBatch::from_files(
        &dir.join("events.export.tsv"),
        &dir.join("mentions.tsv"),
        &dir.join("gkg.tsv"),
        &SchemaMap::default(),
    )?;

    // Every input row is either a record or an issue.
    for (table, rows, records, issues) in [
        (
            "events",
            batch.events.rows,
            batch.events.records.len(),
            &batch.events.issues,
        ),
        (
            "mentions",
            batch.mentions.rows,
            batch.mentions.records.len(),
            &batch.mentions.issues,
        ),
        (
            "gkg",
            batch.articles.rows,
            batch.articles.records.len(),
            &batch.articles.issues,
        ),
    ] {
        println!(
            "{table:<9} rows {rows}  records {records}  issues {}",
            issues.len()
        );
        for i in issues {
            println!(
                "          row {} [{}]: {:?}",
                i.row,
                i.column.as_deref().unwrap_or("-"),
                i.kind
            );
        }
    }

    let filter = KeywordFilter::new(["Baltimore", "bridge", "collapse", "ship"]);
    let subset = batch.filter(&filter)?;
    println!();
    print!("{}", consistency_report(&subset));
    println!("retained fraction {:.3}", subset.provenance.retained_fraction());
    for a in &subset.articles {
        println!("  {}  themes={:?}", a.document_identifier, a.themes);
    }
    Ok(())
}
