//! Direct graph queries: triple sentences, keyword edge search producing
//! edge-induced subgraphs, and aggregate queries over the graph.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::kg::{Edge, EdgeId, EdgeLabel, KnowledgeGraph, NodeId, NodeType};
use crate::text::{fold_for_match, normalize_label, KeywordMatcher};

/// One edge rendered as `<source label> <relation phrase> <target label>`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TripleSentence {
    pub edge: EdgeId,
    pub sentence: String,
}

pub fn render_edge(kg: &KnowledgeGraph, edge: &Edge) -> String {
    let label = |id: &NodeId| {
        kg.node(id)
            .map(|n| n.label.as_str())
            .unwrap_or_else(|| id.as_str())
            .to_string()
    };
    format!(
        "{} {} {}",
        label(&edge.source),
        edge.label.phrase(),
        label(&edge.target)
    )
}

/// One sentence per edge, in edge-id order.
pub fn triples_to_sentences(kg: &KnowledgeGraph) -> Vec<TripleSentence> {
    kg.edge_ids()
        .map(|id| TripleSentence {
            edge: id,
            sentence: render_edge(kg, kg.edge(id)),
        })
        .collect()
}

/// A selected edge set plus exactly the endpoints of those edges.
#[derive(Debug, Clone)]
pub struct Subgraph<'g> {
    graph: &'g KnowledgeGraph,
    edges: Vec<EdgeId>,
    nodes: BTreeSet<NodeId>,
}

impl<'g> Subgraph<'g> {
    pub fn from_edges(graph: &'g KnowledgeGraph, edges: impl IntoIterator<Item = EdgeId>) -> Self {
        let edges: BTreeSet<EdgeId> = edges.into_iter().collect();
        let mut nodes = BTreeSet::new();
        for id in &edges {
            let e = graph.edge(*id);
            nodes.insert(e.source.clone());
            nodes.insert(e.target.clone());
        }
        Self {
            graph,
            edges: edges.into_iter().collect(),
            nodes,
        }
    }

    pub fn graph(&self) -> &'g KnowledgeGraph {
        self.graph
    }

    /// Edge ids in ascending order.
    pub fn edges(&self) -> &[EdgeId] {
        &self.edges
    }

    pub fn nodes(&self) -> &BTreeSet<NodeId> {
        &self.nodes
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn sentences(&self) -> Vec<TripleSentence> {
        self.edges
            .iter()
            .map(|&id| TripleSentence {
                edge: id,
                sentence: render_edge(self.graph, self.graph.edge(id)),
            })
            .collect()
    }

    /// Materializes the subgraph as a standalone graph with the parent's ontology.
    pub fn to_graph(&self) -> KnowledgeGraph {
        let nodes = self
            .nodes
            .iter()
            .filter_map(|id| self.graph.node(id).cloned())
            .collect();
        let edges = self.edges.iter().map(|&id| self.graph.edge(id).clone()).collect();
        KnowledgeGraph::from_parts(self.graph.ontology().clone(), nodes, edges)
            .expect("subgraph of a valid graph is valid")
    }
}

/// Precomputed, case-folded triple sentences for repeated keyword searches.
#[derive(Debug, Clone)]
pub struct SentenceIndex<'g> {
    graph: &'g KnowledgeGraph,
    folded: Vec<String>,
}

impl<'g> SentenceIndex<'g> {
    pub fn new(graph: &'g KnowledgeGraph) -> Self {
        let folded = triples_to_sentences(graph)
            .into_iter()
            .map(|t| fold_for_match(&t.sentence))
            .collect();
        Self { graph, folded }
    }

    pub fn search<S: AsRef<str>>(&self, keywords: &[S]) -> Result<Subgraph<'g>> {
        let needles: Vec<String> = keywords
            .iter()
            .map(|k| k.as_ref().trim())
            .filter(|k| !k.is_empty())
            .map(fold_for_match)
            .collect();
        if needles.is_empty() {
            return Err(Error::EmptyKeywords);
        }
        let hits = self
            .folded
            .iter()
            .enumerate()
            .filter(|(_, s)| needles.iter().any(|n| s.contains(n.as_str())))
            .map(|(i, _)| EdgeId(i));
        Ok(Subgraph::from_edges(self.graph, hits))
    }
}

/// Edge-induced subgraph over every edge whose sentence contains any keyword.
pub fn keyword_edge_search<'g, S: AsRef<str>>(
    kg: &'g KnowledgeGraph,
    keywords: &[S],
) -> Result<Subgraph<'g>> {
    let matcher = KeywordMatcher::new(keywords, false).ok_or(Error::EmptyKeywords)?;
    let hits = kg
        .edge_ids()
        .filter(|&id| matcher.is_match(&render_edge(kg, kg.edge(id))));
    Ok(Subgraph::from_edges(kg, hits))
}

/// Distinct articles published by a source whose label contains `pattern`.
pub fn count_articles_by_source(kg: &KnowledgeGraph, pattern: &str) -> usize {
    let Some(m) = KeywordMatcher::new(&[pattern], false) else {
        return 0;
    };
    let mut articles = BTreeSet::new();
    for src in kg
        .nodes_of_type(NodeType::Source)
        .filter(|n| m.is_match(&n.label))
    {
        for &eid in kg.in_edges(&src.id) {
            let e = kg.edge(eid);
            if e.label == EdgeLabel::PUBLISHED_BY {
                articles.insert(e.source.clone());
            }
        }
    }
    articles.len()
}

/// Themes ranked by incident `has_theme` edges, descending; ties by theme code.
pub fn top_themes(kg: &KnowledgeGraph, k: usize) -> Result<Vec<(String, usize)>> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    let mut counts: HashMap<&NodeId, usize> = HashMap::new();
    for e in kg.edges().iter().filter(|e| e.label == EdgeLabel::HAS_THEME) {
        *counts.entry(&e.target).or_default() += 1;
    }
    let mut ranked: Vec<(String, usize)> = counts
        .into_iter()
        .filter_map(|(id, c)| kg.node(id).map(|n| (n.label.clone(), c)))
        .collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked.truncate(k);
    Ok(ranked)
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Attribution {
    /// Person/Organization nodes matching the entity label.
    pub entities: Vec<NodeId>,
    /// Labels (document identifiers) of attributed articles, sorted.
    pub articles: Vec<String>,
}

impl Attribution {
    pub fn count(&self) -> usize {
        self.articles.len()
    }
}

/// Articles linked to the named person or organization through
/// `mentions_person` / `mentions_organization` edges. Unknown entities give
/// an empty result.
pub fn mention_attribution(kg: &KnowledgeGraph, entity_label: &str) -> Result<Attribution> {
    if normalize_label(entity_label).is_empty() {
        return Err(Error::InvalidArgument("entity label is empty".into()));
    }
    let mut out = Attribution::default();
    let mut articles = BTreeMap::new();
    for node in kg
        .find_by_label(entity_label)
        .filter(|n| matches!(n.node_type, NodeType::Person | NodeType::Organization))
    {
        out.entities.push(node.id.clone());
        for &eid in kg.in_edges(&node.id) {
            let e = kg.edge(eid);
            if e.label == EdgeLabel::MENTIONS_PERSON || e.label == EdgeLabel::MENTIONS_ORGANIZATION {
                if let Some(a) = kg.node(&e.source) {
                    articles.insert(a.id.clone(), a.label.clone());
                }
            }
        }
    }
    out.entities.sort();
    out.articles = articles.into_values().collect();
    out.articles.sort();
    Ok(out)
}

/// Edges on undirected paths of length at most `radius` from `node`.
pub fn neighborhood<'g>(kg: &'g KnowledgeGraph, node: &NodeId, radius: usize) -> Result<Subgraph<'g>> {
    if !kg.contains(node) {
        return Err(Error::UnknownNode(node.to_string()));
    }
    let mut dist: HashMap<NodeId, usize> = HashMap::new();
    let mut queue = VecDeque::new();
    let mut edges = BTreeSet::new();
    dist.insert(node.clone(), 0);
    queue.push_back(node.clone());
    while let Some(cur) = queue.pop_front() {
        let d = dist[&cur];
        if d >= radius {
            continue;
        }
        for &eid in kg.out_edges(&cur).iter().chain(kg.in_edges(&cur)) {
            edges.insert(eid);
            let e = kg.edge(eid);
            let other = if e.source == cur { &e.target } else { &e.source };
            if !dist.contains_key(other) {
                dist.insert(other.clone(), d + 1);
                queue.push_back(other.clone());
            }
        }
    }
    Ok(Subgraph::from_edges(kg, edges))
}
