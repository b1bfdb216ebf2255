//! Native graph file (versioned JSON lines) and text/GraphML exports.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::graph::{AttrValue, Attrs, Edge, KnowledgeGraph, Node};
use super::ontology::Ontology;
use crate::error::{Error, Result};

pub const GRAPH_FORMAT: &str = "gdelt-kg-graph";
pub const GRAPH_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    format: String,
    version: u32,
    nodes: usize,
    edges: usize,
}

fn corrupt(reason: impl Into<String>) -> Error {
    Error::Corrupt {
        what: "graph",
        reason: reason.into(),
    }
}

pub fn write_graph<W: Write>(kg: &KnowledgeGraph, mut w: W) -> Result<()> {
    let header = Header {
        format: GRAPH_FORMAT.to_string(),
        version: GRAPH_VERSION,
        nodes: kg.node_count(),
        edges: kg.edge_count(),
    };
    let io = |e| Error::Stream(e);
    serde_json::to_writer(&mut w, &header)?;
    w.write_all(b"\n").map_err(io)?;
    serde_json::to_writer(&mut w, kg.ontology())?;
    w.write_all(b"\n").map_err(io)?;
    for n in kg.nodes() {
        serde_json::to_writer(&mut w, n)?;
        w.write_all(b"\n").map_err(io)?;
    }
    for e in kg.edges() {
        serde_json::to_writer(&mut w, e)?;
        w.write_all(b"\n").map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn read_graph<R: BufRead>(reader: R) -> Result<KnowledgeGraph> {
    let mut lines = reader.lines();
    let mut next = |what: &str| -> Result<String> {
        match lines.next() {
            Some(Ok(l)) => Ok(l),
            Some(Err(e)) => Err(Error::Stream(e)),
            None => Err(corrupt(format!("file ends before {what}"))),
        }
    };
    let header: Header =
        serde_json::from_str(&next("header")?).map_err(|e| corrupt(format!("header: {e}")))?;
    if header.format != GRAPH_FORMAT {
        return Err(corrupt(format!("unexpected format `{}`", header.format)));
    }
    if header.version != GRAPH_VERSION {
        return Err(Error::VersionMismatch {
            what: "graph",
            found: header.version,
            expected: GRAPH_VERSION,
        });
    }
    let ontology: Ontology =
        serde_json::from_str(&next("ontology")?).map_err(|e| corrupt(format!("ontology: {e}")))?;
    let mut nodes = Vec::with_capacity(header.nodes);
    for i in 0..header.nodes {
        let line = next(&format!("node {} of {}", i + 1, header.nodes))?;
        nodes.push(serde_json::from_str::<Node>(&line).map_err(|e| corrupt(format!("node {}: {e}", i + 1)))?);
    }
    let mut edges = Vec::with_capacity(header.edges);
    for i in 0..header.edges {
        let line = next(&format!("edge {} of {}", i + 1, header.edges))?;
        edges.push(serde_json::from_str::<Edge>(&line).map_err(|e| corrupt(format!("edge {}: {e}", i + 1)))?);
    }
    KnowledgeGraph::from_parts(ontology, nodes, edges).map_err(|e| corrupt(format!("invalid content: {e}")))
}

pub fn save_graph(kg: &KnowledgeGraph, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_graph(kg, BufWriter::new(file))
}

pub fn load_graph(path: &Path) -> Result<KnowledgeGraph> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_graph(BufReader::new(file))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    EdgeListText,
    GraphMl,
}

impl std::str::FromStr for ExportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "edge_list_text" | "edges" | "tsv" => Ok(ExportFormat::EdgeListText),
            "graphml" => Ok(ExportFormat::GraphMl),
            other => Err(Error::InvalidArgument(format!("unknown export format `{other}`"))),
        }
    }
}

pub fn export_graph(kg: &KnowledgeGraph, format: ExportFormat) -> Vec<u8> {
    match format {
        ExportFormat::EdgeListText => edge_list(kg).into_bytes(),
        ExportFormat::GraphMl => graphml(kg).into_bytes(),
    }
}

fn edge_list(kg: &KnowledgeGraph) -> String {
    let mut out = String::new();
    for id in kg.sorted_edge_ids() {
        let e = kg.edge(id);
        let _ = writeln!(out, "{}\t{}\t{}", e.source, e.label, e.target);
    }
    out
}

fn xml_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c if (c as u32) < 0x20 && !matches!(c, '\t' | '\n' | '\r') => {}
            c => out.push(c),
        }
    }
    out
}

fn graphml_type(v: &AttrValue) -> &'static str {
    match v {
        AttrValue::Int(_) => "long",
        AttrValue::Float(_) => "double",
        AttrValue::Text(_) => "string",
        AttrValue::Bool(_) => "boolean",
    }
}

/// Attribute name -> GraphML type; conflicting types degrade to string.
fn attr_keys<'a>(attrs: impl Iterator<Item = &'a Attrs>) -> BTreeMap<String, &'static str> {
    let mut keys: BTreeMap<String, &'static str> = BTreeMap::new();
    for a in attrs {
        for (k, v) in a {
            let t = graphml_type(v);
            keys.entry(k.clone())
                .and_modify(|cur| {
                    if *cur != t {
                        *cur = "string";
                    }
                })
                .or_insert(t);
        }
    }
    keys
}

fn write_data(out: &mut String, prefix: &str, attrs: &Attrs) {
    for (k, v) in attrs {
        let _ = writeln!(
            out,
            "      <data key=\"{prefix}{}\">{}</data>",
            xml_escape(k),
            xml_escape(&v.to_string())
        );
    }
}

fn graphml(kg: &KnowledgeGraph) -> String {
    let node_keys = attr_keys(kg.nodes().map(|n| &n.attrs));
    let edge_keys = attr_keys(kg.edges().iter().map(|e| &e.attrs));
    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    out.push_str("<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\">\n");
    out.push_str("  <key id=\"type\" for=\"node\" attr.name=\"type\" attr.type=\"string\"/>\n");
    out.push_str("  <key id=\"label\" for=\"node\" attr.name=\"label\" attr.type=\"string\"/>\n");
    out.push_str("  <key id=\"relation\" for=\"edge\" attr.name=\"relation\" attr.type=\"string\"/>\n");
    for (k, t) in &node_keys {
        let k = xml_escape(k);
        let _ = writeln!(
            out,
            "  <key id=\"n_{k}\" for=\"node\" attr.name=\"{k}\" attr.type=\"{t}\"/>"
        );
    }
    for (k, t) in &edge_keys {
        let k = xml_escape(k);
        let _ = writeln!(
            out,
            "  <key id=\"e_{k}\" for=\"edge\" attr.name=\"{k}\" attr.type=\"{t}\"/>"
        );
    }
    out.push_str("  <graph id=\"G\" edgedefault=\"directed\">\n");
    for n in kg.nodes() {
        let _ = writeln!(out, "    <node id=\"{}\">", xml_escape(n.id.as_str()));
        let _ = writeln!(out, "      <data key=\"type\">{}</data>", n.node_type);
        let _ = writeln!(out, "      <data key=\"label\">{}</data>", xml_escape(&n.label));
        write_data(&mut out, "n_", &n.attrs);
        out.push_str("    </node>\n");
    }
    for (i, id) in kg.sorted_edge_ids().into_iter().enumerate() {
        let e = kg.edge(id);
        let _ = writeln!(
            out,
            "    <edge id=\"e{i}\" source=\"{}\" target=\"{}\">",
            xml_escape(e.source.as_str()),
            xml_escape(e.target.as_str())
        );
        let _ = writeln!(
            out,
            "      <data key=\"relation\">{}</data>",
            xml_escape(e.label.as_str())
        );
        write_data(&mut out, "e_", &e.attrs);
        out.push_str("    </edge>\n");
    }
    out.push_str("  </graph>\n</graphml>\n");
    out
}
