use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::ontology::{EdgeLabel, NodeType, Ontology};
use crate::error::{Error, Result};
use crate::text::normalize_label;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(String);

impl NodeId {
    pub fn new(id: impl Into<String>) -> Self {
        NodeId(id.into())
    }

    /// Row nodes are keyed by their table identifier verbatim.
    pub fn row(node_type: NodeType, key: &str) -> Self {
        NodeId(format!("{}:{}", node_type.slug(), key))
    }

    /// Value nodes are keyed by the normalized label, so equal values from
    /// any table share one node.
    pub fn value(node_type: NodeType, label: &str) -> Self {
        NodeId(format!("{}:{}", node_type.slug(), normalize_label(label)))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Scalar attribute stored on a node or edge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttrValue {
    Int(i64),
    Float(f64),
    Text(String),
    Bool(bool),
}

impl fmt::Display for AttrValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AttrValue::Int(v) => write!(f, "{v}"),
            AttrValue::Float(v) => write!(f, "{v}"),
            AttrValue::Text(v) => f.write_str(v),
            AttrValue::Bool(v) => write!(f, "{v}"),
        }
    }
}

pub type Attrs = BTreeMap<String, AttrValue>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: NodeId,
    pub node_type: NodeType,
    /// Display form; for value nodes the first spelling seen.
    pub label: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub attrs: Attrs,
}

impl Node {
    pub fn value(node_type: NodeType, label: &str) -> Self {
        Node {
            id: NodeId::value(node_type, label),
            node_type,
            label: label.split_whitespace().collect::<Vec<_>>().join(" "),
            attrs: Attrs::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub source: NodeId,
    pub label: EdgeLabel,
    pub target: NodeId,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub attrs: Attrs,
}

impl Edge {
    pub fn new(source: NodeId, label: EdgeLabel, target: NodeId) -> Self {
        Edge {
            source,
            label,
            target,
            attrs: Attrs::new(),
        }
    }

    fn sort_key(&self) -> (String, String, String, String) {
        (
            self.source.0.clone(),
            self.label.to_string(),
            self.target.0.clone(),
            serde_json::to_string(&self.attrs).unwrap_or_default(),
        )
    }
}

/// Position of an edge in [`KnowledgeGraph::edges`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EdgeId(pub usize);

#[derive(Debug, Clone, Default)]
struct GraphIndex {
    by_type: BTreeMap<NodeType, Vec<NodeId>>,
    by_label: HashMap<String, Vec<NodeId>>,
    out_edges: HashMap<NodeId, Vec<EdgeId>>,
    in_edges: HashMap<NodeId, Vec<EdgeId>>,
}

/// Typed property graph. Every edge satisfies its label's ontology signature
/// and both endpoints exist.
#[derive(Debug, Clone)]
pub struct KnowledgeGraph {
    ontology: Ontology,
    nodes: BTreeMap<NodeId, Node>,
    edges: Vec<Edge>,
    index: GraphIndex,
}

impl Default for KnowledgeGraph {
    fn default() -> Self {
        Self::new(Ontology::default())
    }
}

impl PartialEq for KnowledgeGraph {
    /// Equal ontologies, node sets and edge multisets.
    fn eq(&self, other: &Self) -> bool {
        if self.ontology != other.ontology
            || self.nodes != other.nodes
            || self.edges.len() != other.edges.len()
        {
            return false;
        }
        let sorted = |g: &KnowledgeGraph| {
            let mut v: Vec<_> = g.edges.iter().map(|e| (e.sort_key(), e)).collect();
            v.sort_by(|a, b| a.0.cmp(&b.0));
            v.into_iter().map(|(_, e)| e.clone()).collect::<Vec<_>>()
        };
        sorted(self) == sorted(other)
    }
}

impl KnowledgeGraph {
    pub fn new(ontology: Ontology) -> Self {
        Self {
            ontology,
            nodes: BTreeMap::new(),
            edges: Vec::new(),
            index: GraphIndex::default(),
        }
    }

    pub fn ontology(&self) -> &Ontology {
        &self.ontology
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes in id order.
    pub fn nodes(&self) -> impl Iterator<Item = &Node> {
        self.nodes.values()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, id: EdgeId) -> &Edge {
        &self.edges[id.0]
    }

    pub fn edge_ids(&self) -> impl Iterator<Item = EdgeId> {
        (0..self.edges.len()).map(EdgeId)
    }

    pub fn node(&self, id: &NodeId) -> Option<&Node> {
        self.nodes.get(id)
    }

    pub fn contains(&self, id: &NodeId) -> bool {
        self.nodes.contains_key(id)
    }

    pub fn nodes_of_type(&self, t: NodeType) -> impl Iterator<Item = &Node> {
        self.index
            .by_type
            .get(&t)
            .into_iter()
            .flatten()
            .filter_map(|id| self.nodes.get(id))
    }

    /// Nodes whose normalized label equals the normalized query.
    pub fn find_by_label(&self, label: &str) -> impl Iterator<Item = &Node> {
        self.index
            .by_label
            .get(&normalize_label(label))
            .into_iter()
            .flatten()
            .filter_map(|id| self.nodes.get(id))
    }

    pub fn out_edges(&self, id: &NodeId) -> &[EdgeId] {
        self.index.out_edges.get(id).map_or(&[], Vec::as_slice)
    }

    pub fn in_edges(&self, id: &NodeId) -> &[EdgeId] {
        self.index.in_edges.get(id).map_or(&[], Vec::as_slice)
    }

    /// Inserts a node. Returns `false` if a node with this id already exists
    /// (the existing node is kept); a type clash is an error.
    pub fn add_node(&mut self, node: Node) -> Result<bool> {
        if let Some(existing) = self.nodes.get(&node.id) {
            if existing.node_type != node.node_type {
                return Err(Error::Ontology(format!(
                    "node `{}` exists as {}, not {}",
                    node.id, existing.node_type, node.node_type
                )));
            }
            return Ok(false);
        }
        self.index
            .by_type
            .entry(node.node_type)
            .or_default()
            .push(node.id.clone());
        self.index
            .by_label
            .entry(normalize_label(&node.label))
            .or_default()
            .push(node.id.clone());
        self.nodes.insert(node.id.clone(), node);
        Ok(true)
    }

    /// Returns the id of the value node for `(node_type, label)`, creating it
    /// on first sight.
    pub fn ensure_value_node(&mut self, node_type: NodeType, label: &str) -> Result<NodeId> {
        let node = Node::value(node_type, label);
        let id = node.id.clone();
        self.add_node(node)?;
        Ok(id)
    }

    pub fn add_edge(&mut self, edge: Edge) -> Result<EdgeId> {
        let src = self
            .nodes
            .get(&edge.source)
            .ok_or_else(|| Error::UnknownNode(edge.source.to_string()))?;
        let tgt = self
            .nodes
            .get(&edge.target)
            .ok_or_else(|| Error::UnknownNode(edge.target.to_string()))?;
        self.ontology.check(&edge.label, src.node_type, tgt.node_type)?;
        let id = EdgeId(self.edges.len());
        self.index
            .out_edges
            .entry(edge.source.clone())
            .or_default()
            .push(id);
        self.index
            .in_edges
            .entry(edge.target.clone())
            .or_default()
            .push(id);
        self.edges.push(edge);
        Ok(id)
    }

    /// Adds a labeled edge between two value nodes, creating them as needed.
    pub fn add_triple(
        &mut self,
        source: (NodeType, &str),
        label: EdgeLabel,
        target: (NodeType, &str),
    ) -> Result<EdgeId> {
        self.ontology.check(&label, source.0, target.0)?;
        let s = self.ensure_value_node(source.0, source.1)?;
        let t = self.ensure_value_node(target.0, target.1)?;
        self.add_edge(Edge::new(s, label, t))
    }

    pub fn ontology_mut(&mut self) -> &mut Ontology {
        &mut self.ontology
    }

    /// Builds a graph from parts, validating every node and edge.
    pub fn from_parts(ontology: Ontology, nodes: Vec<Node>, edges: Vec<Edge>) -> Result<Self> {
        let mut g = Self::new(ontology);
        for n in nodes {
            let id = n.id.clone();
            if !g.add_node(n)? {
                return Err(Error::Ontology(format!("duplicate node id `{id}`")));
            }
        }
        for e in edges {
            g.add_edge(e)?;
        }
        Ok(g)
    }

    /// Edge ids in a stable order: by source id, label, target id, insertion.
    pub fn sorted_edge_ids(&self) -> Vec<EdgeId> {
        let mut ids: Vec<EdgeId> = self.edge_ids().collect();
        ids.sort_by(|a, b| {
            let (ea, eb) = (self.edge(*a), self.edge(*b));
            (&ea.source, &ea.label, &ea.target, a.0).cmp(&(&eb.source, &eb.label, &eb.target, b.0))
        });
        ids
    }
}
