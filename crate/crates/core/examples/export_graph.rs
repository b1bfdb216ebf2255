//! Export a small hand-built graph as GraphML and as a sorted edge list.
//!
//! ```text
//! cargo run --example export_graph
//! ```

use gdelt_kg::kg::{export_graph, EdgeLabel, ExportFormat, KnowledgeGraph, NodeType, Ontology};

fn main() -> gdelt_kg::Result<()> {
    let mut ontology = Ontology::default();
    ontology.extend_from_toml_str(
        "version = 1\n[[relation]]\nlabel = \"crosses\"\nsource = \"Location\"\ntarget = \"Location\"\n",
    )?;
    let mut kg = KnowledgeGraph::new(ontology);
    kg.add_triple(
        (NodeType::Location, "Francis Scott Key Bridge"),
        EdgeLabel::new("crosses"),
        (NodeType::Location, "Patapsco River"),
    )?;
    kg.add_triple(
        (NodeType::Article, "https://example.com/story"),
        EdgeLabel::HAS_THEME,
        (NodeType::Theme, "MARITIME_INCIDENT"),
    )?;

    println!(
        "{}",
        String::from_utf8_lossy(&export_graph(&kg, ExportFormat::EdgeListText))
    );
    println!(
        "{}",
        String::from_utf8_lossy(&export_graph(&kg, ExportFormat::GraphMl))
    );
    Ok(())
}
