//! Row-to-star conversion: one row node with one labeled edge per non-empty
//! value-node field (one per element for list fields).

use std::collections::BTreeMap;

use super::graph::{AttrValue, Attrs, Edge, Node, NodeId};
use super::ontology::{EdgeLabel, NodeType, Ontology};
use crate::error::{Error, Result};
use crate::ingest::{ArticleRecord, EventRecord, MentionRecord};

/// One element of a value-node column, with attributes that travel on the
/// connecting edge (e.g. coordinates of a location mention).
#[derive(Debug, Clone, PartialEq)]
pub struct ValueItem {
    pub text: String,
    pub attrs: Attrs,
}

impl ValueItem {
    pub fn plain(text: impl Into<String>) -> Self {
        Self {
            text: text.into(),
            attrs: Attrs::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RowValue {
    Scalar(AttrValue),
    Values(Vec<ValueItem>),
    Empty,
}

impl RowValue {
    fn text(s: Option<&str>) -> Self {
        match s.map(str::trim).filter(|s| !s.is_empty()) {
            Some(s) => RowValue::Scalar(AttrValue::Text(s.to_string())),
            None => RowValue::Empty,
        }
    }

    fn float(v: Option<f64>) -> Self {
        v.map_or(RowValue::Empty, |v| RowValue::Scalar(AttrValue::Float(v)))
    }

    fn list<S: AsRef<str>>(items: &[S]) -> Self {
        RowValue::Values(items.iter().map(|s| ValueItem::plain(s.as_ref())).collect())
    }

    fn items(&self) -> Vec<ValueItem> {
        match self {
            RowValue::Empty => Vec::new(),
            RowValue::Scalar(AttrValue::Text(s)) => vec![ValueItem::plain(s.clone())],
            RowValue::Scalar(v) => vec![ValueItem::plain(v.to_string())],
            RowValue::Values(v) => v.clone(),
        }
    }
}

pub type RowMap = BTreeMap<String, RowValue>;

#[derive(Debug, Clone, PartialEq)]
pub enum FieldAction {
    ValueNode { node_type: NodeType, label: EdgeLabel },
    Attribute,
    Skip,
}

/// How each column of a table becomes part of a star.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldPlan {
    /// Columns whose values, joined by `|`, form the row key and label.
    pub key_columns: Vec<String>,
    pub fields: Vec<(String, FieldAction)>,
}

impl FieldPlan {
    /// Every value-node field must name a relation whose source is
    /// `row_type` and whose target is the field's node type.
    pub fn validate(&self, row_type: NodeType, ontology: &Ontology) -> Result<()> {
        for (col, action) in &self.fields {
            if let FieldAction::ValueNode { node_type, label } = action {
                ontology
                    .check(label, row_type, *node_type)
                    .map_err(|e| Error::Config(format!("field plan column `{col}`: {e}")))?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StarFragment {
    pub row: Node,
    pub values: Vec<Node>,
    pub edges: Vec<Edge>,
}

fn column<'a>(row: &'a RowMap, col: &str) -> Result<&'a RowValue> {
    row.get(col)
        .ok_or_else(|| Error::Config(format!("field plan references unknown column `{col}`")))
}

pub fn row_to_star(row: &RowMap, row_type: NodeType, plan: &FieldPlan) -> Result<StarFragment> {
    let mut key_parts = Vec::with_capacity(plan.key_columns.len());
    for col in &plan.key_columns {
        let part = match column(row, col)? {
            RowValue::Scalar(v) => v.to_string(),
            _ => return Err(Error::Config(format!("key column `{col}` has no scalar value"))),
        };
        if part.is_empty() {
            return Err(Error::Config(format!("key column `{col}` is empty")));
        }
        key_parts.push(part);
    }
    if key_parts.is_empty() {
        return Err(Error::Config("field plan has no key columns".into()));
    }
    let key = key_parts.join("|");
    let row_id = NodeId::row(row_type, &key);
    let mut node = Node {
        id: row_id.clone(),
        node_type: row_type,
        label: key,
        attrs: Attrs::new(),
    };
    let mut values = Vec::new();
    let mut edges = Vec::new();

    for (col, action) in &plan.fields {
        let value = column(row, col)?;
        match action {
            FieldAction::Skip => {}
            FieldAction::Attribute => match value {
                RowValue::Scalar(v) => {
                    node.attrs.insert(col.clone(), v.clone());
                }
                RowValue::Values(items) if !items.is_empty() => {
                    let joined = items.iter().map(|i| i.text.as_str()).collect::<Vec<_>>();
                    node.attrs.insert(col.clone(), AttrValue::Text(joined.join(";")));
                }
                _ => {}
            },
            FieldAction::ValueNode { node_type, label } => {
                for item in value.items() {
                    if item.text.trim().is_empty() {
                        continue;
                    }
                    let v = Node::value(*node_type, &item.text);
                    edges.push(Edge {
                        source: row_id.clone(),
                        label: label.clone(),
                        target: v.id.clone(),
                        attrs: item.attrs,
                    });
                    values.push(v);
                }
            }
        }
    }
    Ok(StarFragment {
        row: node,
        values,
        edges,
    })
}

fn attr(col: &str) -> (String, FieldAction) {
    (col.to_string(), FieldAction::Attribute)
}

fn value(col: &str, node_type: NodeType, label: EdgeLabel) -> (String, FieldAction) {
    (col.to_string(), FieldAction::ValueNode { node_type, label })
}

pub fn event_plan() -> FieldPlan {
    FieldPlan {
        key_columns: vec!["global_event_id".into()],
        fields: vec![
            attr("global_event_id"),
            value("day", NodeType::DateValue, EdgeLabel::OCCURRED_ON),
            value("actor1_name", NodeType::Actor, EdgeLabel::HAS_ACTOR1),
            attr("actor1_code"),
            value("actor2_name", NodeType::Actor, EdgeLabel::HAS_ACTOR2),
            attr("actor2_code"),
            value("event_code", NodeType::EventCode, EdgeLabel::HAS_EVENT_CODE),
            attr("goldstein_scale"),
            attr("num_mentions"),
            attr("avg_tone"),
            value("action_geo", NodeType::Location, EdgeLabel::OCCURRED_AT),
            attr("source_url"),
            attr("geo_flagged"),
        ],
    }
}

pub fn mention_plan() -> FieldPlan {
    FieldPlan {
        key_columns: vec!["global_event_id".into(), "mention_identifier".into()],
        fields: vec![
            attr("global_event_id"),
            attr("mention_identifier"),
            attr("mention_time"),
            attr("mention_source_name"),
            attr("confidence"),
            attr("mention_doc_tone"),
        ],
    }
}

pub fn article_plan() -> FieldPlan {
    FieldPlan {
        key_columns: vec!["document_identifier".into()],
        fields: vec![
            attr("gkg_record_id"),
            attr("date"),
            value("day", NodeType::DateValue, EdgeLabel::PUBLISHED_ON),
            value("source_common_name", NodeType::Source, EdgeLabel::PUBLISHED_BY),
            value("themes", NodeType::Theme, EdgeLabel::HAS_THEME),
            value("persons", NodeType::Person, EdgeLabel::MENTIONS_PERSON),
            value(
                "organizations",
                NodeType::Organization,
                EdgeLabel::MENTIONS_ORGANIZATION,
            ),
            value("locations", NodeType::Location, EdgeLabel::MENTIONS_LOCATION),
            attr("tone"),
            value("quotations", NodeType::Quotation, EdgeLabel::HAS_QUOTATION),
        ],
    }
}

fn geo_attrs(lat: Option<f64>, lon: Option<f64>) -> Attrs {
    let mut a = Attrs::new();
    if let Some(lat) = lat {
        a.insert("lat".into(), AttrValue::Float(lat));
    }
    if let Some(lon) = lon {
        a.insert("lon".into(), AttrValue::Float(lon));
    }
    a
}

pub fn event_row(e: &EventRecord) -> RowMap {
    let mut r = RowMap::new();
    r.insert(
        "global_event_id".into(),
        RowValue::Scalar(AttrValue::Int(e.global_event_id)),
    );
    r.insert(
        "day".into(),
        RowValue::text(Some(&e.day.format("%Y-%m-%d").to_string())),
    );
    r.insert("actor1_name".into(), RowValue::text(e.actor1_name.as_deref()));
    r.insert("actor1_code".into(), RowValue::text(e.actor1_code.as_deref()));
    r.insert("actor2_name".into(), RowValue::text(e.actor2_name.as_deref()));
    r.insert("actor2_code".into(), RowValue::text(e.actor2_code.as_deref()));
    r.insert("event_code".into(), RowValue::text(Some(&e.event_code)));
    r.insert("goldstein_scale".into(), RowValue::float(Some(e.goldstein_scale)));
    r.insert(
        "num_mentions".into(),
        RowValue::Scalar(AttrValue::Int(i64::from(e.num_mentions))),
    );
    r.insert("avg_tone".into(), RowValue::float(Some(e.avg_tone)));
    let geo = match e.action_geo_fullname.as_deref().map(str::trim) {
        Some(name) if !name.is_empty() => RowValue::Values(vec![ValueItem {
            text: name.to_string(),
            attrs: geo_attrs(e.action_geo_lat, e.action_geo_lon),
        }]),
        _ => RowValue::Empty,
    };
    r.insert("action_geo".into(), geo);
    r.insert("source_url".into(), RowValue::text(Some(&e.source_url)));
    r.insert(
        "geo_flagged".into(),
        RowValue::Scalar(AttrValue::Bool(e.geo_flagged)),
    );
    r
}

pub fn mention_row(m: &MentionRecord) -> RowMap {
    let mut r = RowMap::new();
    r.insert(
        "global_event_id".into(),
        RowValue::Scalar(AttrValue::Int(m.global_event_id)),
    );
    r.insert(
        "mention_identifier".into(),
        RowValue::text(Some(&m.mention_identifier)),
    );
    r.insert(
        "mention_time".into(),
        RowValue::text(Some(&m.mention_time.format("%Y-%m-%dT%H:%M:%S").to_string())),
    );
    r.insert(
        "mention_source_name".into(),
        RowValue::text(Some(&m.mention_source_name)),
    );
    r.insert(
        "confidence".into(),
        RowValue::Scalar(AttrValue::Int(i64::from(m.confidence))),
    );
    r.insert(
        "mention_doc_tone".into(),
        RowValue::float(Some(m.mention_doc_tone)),
    );
    r
}

pub fn article_row(a: &ArticleRecord) -> RowMap {
    let mut r = RowMap::new();
    r.insert(
        "document_identifier".into(),
        RowValue::text(Some(&a.document_identifier)),
    );
    r.insert("gkg_record_id".into(), RowValue::text(Some(&a.gkg_record_id)));
    r.insert(
        "date".into(),
        RowValue::text(Some(&a.date.format("%Y-%m-%dT%H:%M:%S").to_string())),
    );
    r.insert(
        "day".into(),
        RowValue::text(Some(&a.date.format("%Y-%m-%d").to_string())),
    );
    r.insert(
        "source_common_name".into(),
        RowValue::text(Some(&a.source_common_name)),
    );
    r.insert("themes".into(), RowValue::list(&a.themes));
    r.insert("persons".into(), RowValue::list(&a.persons));
    r.insert("organizations".into(), RowValue::list(&a.organizations));
    r.insert(
        "locations".into(),
        RowValue::Values(
            a.locations
                .iter()
                .map(|l| ValueItem {
                    text: l.fullname.clone(),
                    attrs: geo_attrs(l.lat, l.lon),
                })
                .collect(),
        ),
    );
    r.insert("tone".into(), RowValue::float(a.tone));
    r.insert("quotations".into(), RowValue::list(&a.quotations));
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_attribute_plan_yields_single_node() {
        let mut row = RowMap::new();
        row.insert("id".into(), RowValue::Scalar(AttrValue::Int(7)));
        row.insert("x".into(), RowValue::Scalar(AttrValue::Float(1.5)));
        let plan = FieldPlan {
            key_columns: vec!["id".into()],
            fields: vec![attr("id"), attr("x")],
        };
        let star = row_to_star(&row, NodeType::Event, &plan).unwrap();
        assert_eq!(star.row.id.as_str(), "event:7");
        assert!(star.edges.is_empty() && star.values.is_empty());
        assert_eq!(star.row.attrs["x"], AttrValue::Float(1.5));
    }

    #[test]
    fn unknown_column_is_config_error() {
        let mut row = RowMap::new();
        row.insert("id".into(), RowValue::Scalar(AttrValue::Int(7)));
        let plan = FieldPlan {
            key_columns: vec!["id".into()],
            fields: vec![attr("missing")],
        };
        assert!(matches!(
            row_to_star(&row, NodeType::Event, &plan),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn default_plans_validate() {
        let o = Ontology::default();
        event_plan().validate(NodeType::Event, &o).unwrap();
        mention_plan().validate(NodeType::Mention, &o).unwrap();
        article_plan().validate(NodeType::Article, &o).unwrap();
    }
}
