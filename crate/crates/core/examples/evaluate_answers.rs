//! Score answers against the bundled ground truth by cosine similarity,
//! summarize each method as a five-number box, and render the reports.
//!
//! ```text
//! cargo run --example evaluate_answers
//! ```

use gdelt_kg::eval::{
    default_ground_truth, parse_external_answers, render_report, score_run, summarize, ReportFormat,
    ScoreOptions,
};
use gdelt_kg::llm::HashEmbedder;

// Answers transcribed from two external pipelines, in the import schema.
const EXTERNAL: &str = r#"
version = 1

[[answer]]
question_id = "bridge_river"
method = "graphrag"
answer = "The Francis Scott Key Bridge which spans the the Patapsco River."

[[answer]]
question_id = "ship_name"
method = "graphrag"
answer = "The ship that collided with the Baltimore bridge is the Dali."

[[answer]]
question_id = "niki_fennoy"
method = "graphrag"
answer = "Niki Fennoy is a city police spokesman."

[[answer]]
question_id = "bridge_river"
method = "g_retriever_lkg"
answer = "The bridge that collapsed spanned over the Patapsco river."

[[answer]]
question_id = "ship_name"
method = "g_retriever_lkg"
answer = "The name of the ship that collided with the Baltimore bridge is Maersk."

[[answer]]
question_id = "niki_fennoy"
method = "g_retriever_lkg"
answer = "Niki Fennoy is not present in the given data."
"#;

fn main() -> gdelt_kg::Result<()> {
    let results = parse_external_answers(EXTERNAL, false)?;
    let truths = default_ground_truth();
    let embedder = HashEmbedder::new(384);
    let report = score_run(&results, &truths, &embedder, &ScoreOptions::default())?;
    for s in &report.scores {
        println!(
            "{:<13} {:<26} {:.4}{}",
            s.question_id,
            s.method.to_string(),
            s.cosine_similarity,
            if s.refusal { "  (refusal)" } else { "" }
        );
    }

    let summaries = summarize(&report.scores);
    println!();
    print!(
        "{}",
        String::from_utf8_lossy(&render_report(
            &summaries,
            &report.scores,
            ReportFormat::TableText
        )?)
    );

    let svg = render_report(&summaries, &report.scores, ReportFormat::BoxplotSvg)?;
    let path = std::env::temp_dir().join("gdelt-kg-example-boxplot.svg");
    std::fs::write(&path, svg).expect("write svg");
    println!("\nbox plot written to {}", path.display());
    Ok(())
}
