use std::path::Path;

use log::{info, warn};
use serde::{Deserialize, Serialize};

use super::graph::{Edge, KnowledgeGraph, NodeId};
use super::ontology::{EdgeLabel, NodeType, Ontology};
use super::star::{
    article_plan, article_row, event_plan, event_row, mention_plan, mention_row, row_to_star, FieldPlan,
    StarFragment,
};
use crate::error::{Error, Result};
use crate::ingest::{CaseStudySubset, UnresolvedRefs};

/// An analyst-supplied edge between two value nodes, loaded from a
/// tab-separated file: `SourceType  source label  relation  TargetType  target label`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtraTriple {
    pub source_type: NodeType,
    pub source_label: String,
    pub label: EdgeLabel,
    pub target_type: NodeType,
    pub target_label: String,
}

pub fn parse_extra_triples(text: &str) -> Result<Vec<ExtraTriple>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end();
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 5 {
            return Err(Error::Config(format!(
                "extra triples line {}: expected 5 tab-separated columns, found {}",
                i + 1,
                cols.len()
            )));
        }
        out.push(ExtraTriple {
            source_type: cols[0].trim().parse()?,
            source_label: cols[1].trim().to_string(),
            label: EdgeLabel::new(cols[2].trim()),
            target_type: cols[3].trim().parse()?,
            target_label: cols[4].trim().to_string(),
        });
    }
    Ok(out)
}

pub fn load_extra_triples(path: &Path) -> Result<Vec<ExtraTriple>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_extra_triples(&text)
}

#[derive(Debug, Clone, Default)]
pub struct BuildOptions {
    pub ontology: Ontology,
    /// Proceed past unresolved mention references, recording the skipped
    /// structural edges instead of failing.
    pub skip_unresolved: bool,
    pub extra_triples: Vec<ExtraTriple>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildReport {
    pub row_nodes: usize,
    pub value_nodes: usize,
    pub structural_edges: usize,
    pub star_edges: usize,
    pub extra_edges: usize,
    /// Structural edges not created because an endpoint row is absent.
    pub skipped_edges: Vec<String>,
    /// Rows whose key repeated an earlier row; the first one wins.
    pub duplicate_rows: Vec<String>,
}

fn merge_star(g: &mut KnowledgeGraph, star: StarFragment, report: &mut BuildReport) -> Result<()> {
    let row_id = star.row.id.clone();
    if !g.add_node(star.row)? {
        report.duplicate_rows.push(row_id.to_string());
        return Ok(());
    }
    report.row_nodes += 1;
    for v in star.values {
        if g.add_node(v)? {
            report.value_nodes += 1;
        }
    }
    for e in star.edges {
        g.add_edge(e)?;
        report.star_edges += 1;
    }
    Ok(())
}

/// Builds the direct knowledge graph: the union of every row star, linked over
/// shared value nodes, plus the `mentioned_in` / `appears_in` structural edges.
pub fn build_dkg(subset: &CaseStudySubset, options: &BuildOptions) -> Result<(KnowledgeGraph, BuildReport)> {
    let unresolved = UnresolvedRefs::compute(&subset.events, &subset.mentions, &subset.articles);
    if !unresolved.is_empty() && !options.skip_unresolved {
        return Err(Error::Unresolved(unresolved.len()));
    }

    let plans: [(NodeType, FieldPlan); 3] = [
        (NodeType::Event, event_plan()),
        (NodeType::Mention, mention_plan()),
        (NodeType::Article, article_plan()),
    ];
    for (t, plan) in &plans {
        plan.validate(*t, &options.ontology)?;
    }

    let mut g = KnowledgeGraph::new(options.ontology.clone());
    let mut report = BuildReport::default();

    for e in &subset.events {
        merge_star(
            &mut g,
            row_to_star(&event_row(e), NodeType::Event, &plans[0].1)?,
            &mut report,
        )?;
    }
    for a in &subset.articles {
        merge_star(
            &mut g,
            row_to_star(&article_row(a), NodeType::Article, &plans[2].1)?,
            &mut report,
        )?;
    }
    let mut seen_mentions = std::collections::HashSet::new();
    for m in &subset.mentions {
        let key = m.key();
        let star = row_to_star(&mention_row(m), NodeType::Mention, &plans[1].1)?;
        merge_star(&mut g, star, &mut report)?;
        if !seen_mentions.insert(key.clone()) {
            continue;
        }
        let mention_id = NodeId::row(NodeType::Mention, &key.to_string());
        let event_id = NodeId::row(NodeType::Event, &m.global_event_id.to_string());
        let article_id = NodeId::row(NodeType::Article, &m.mention_identifier);
        if g.contains(&event_id) {
            g.add_edge(Edge::new(event_id, EdgeLabel::MENTIONED_IN, mention_id.clone()))?;
            report.structural_edges += 1;
        } else {
            report.skipped_edges.push(format!(
                "mentioned_in: event {} absent for {key}",
                m.global_event_id
            ));
        }
        if g.contains(&article_id) {
            g.add_edge(Edge::new(mention_id, EdgeLabel::APPEARS_IN, article_id))?;
            report.structural_edges += 1;
        } else {
            report
                .skipped_edges
                .push(format!("appears_in: article absent for {key}"));
        }
    }

    for t in &options.extra_triples {
        let before = g.node_count();
        g.add_triple(
            (t.source_type, &t.source_label),
            t.label.clone(),
            (t.target_type, &t.target_label),
        )?;
        report.value_nodes += g.node_count() - before;
        report.extra_edges += 1;
    }

    if !report.skipped_edges.is_empty() {
        warn!("{} structural edge(s) skipped", report.skipped_edges.len());
    }
    info!("built graph: {} nodes, {} edges", g.node_count(), g.edge_count());
    Ok((g, report))
}
