//! The direct knowledge graph: typed nodes, ontology-checked edges, star
//! construction from GDELT rows, and persistence.

mod build;
mod graph;
mod io;
mod ontology;
mod star;

pub use build::{build_dkg, load_extra_triples, parse_extra_triples, BuildOptions, BuildReport, ExtraTriple};
pub use graph::{AttrValue, Attrs, Edge, EdgeId, KnowledgeGraph, Node, NodeId};
pub use io::{
    export_graph, load_graph, read_graph, save_graph, write_graph, ExportFormat, GRAPH_FORMAT, GRAPH_VERSION,
};
pub use ontology::{EdgeLabel, NodeType, Ontology, Relation, ONTOLOGY_VERSION};
pub use star::{
    article_plan, article_row, event_plan, event_row, mention_plan, mention_row, row_to_star, FieldAction,
    FieldPlan, RowMap, RowValue, StarFragment, ValueItem,
};
