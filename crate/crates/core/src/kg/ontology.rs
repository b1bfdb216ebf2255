//! Node types, relation labels and their endpoint signatures.

use std::borrow::Cow;
use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const ONTOLOGY_VERSION: u32 = 1;
const DEFAULT_ONTOLOGY: &str = include_str!("../../data/ontology.toml");

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum NodeType {
    Event,
    Mention,
    Article,
    Actor,
    EventCode,
    Theme,
    Person,
    Organization,
    Location,
    Source,
    Quotation,
    DateValue,
}

impl NodeType {
    pub const ALL: [NodeType; 12] = [
        NodeType::Event,
        NodeType::Mention,
        NodeType::Article,
        NodeType::Actor,
        NodeType::EventCode,
        NodeType::Theme,
        NodeType::Person,
        NodeType::Organization,
        NodeType::Location,
        NodeType::Source,
        NodeType::Quotation,
        NodeType::DateValue,
    ];

    /// Prefix used in node ids.
    pub fn slug(self) -> &'static str {
        match self {
            NodeType::Event => "event",
            NodeType::Mention => "mention",
            NodeType::Article => "article",
            NodeType::Actor => "actor",
            NodeType::EventCode => "event_code",
            NodeType::Theme => "theme",
            NodeType::Person => "person",
            NodeType::Organization => "organization",
            NodeType::Location => "location",
            NodeType::Source => "source",
            NodeType::Quotation => "quotation",
            NodeType::DateValue => "date",
        }
    }

    /// Row types are keyed by table identifiers; every other type is a
    /// deduplicated value type.
    pub fn is_row_type(self) -> bool {
        matches!(self, NodeType::Event | NodeType::Mention | NodeType::Article)
    }

    pub fn name(self) -> &'static str {
        match self {
            NodeType::Event => "Event",
            NodeType::Mention => "Mention",
            NodeType::Article => "Article",
            NodeType::Actor => "Actor",
            NodeType::EventCode => "EventCode",
            NodeType::Theme => "Theme",
            NodeType::Person => "Person",
            NodeType::Organization => "Organization",
            NodeType::Location => "Location",
            NodeType::Source => "Source",
            NodeType::Quotation => "Quotation",
            NodeType::DateValue => "DateValue",
        }
    }
}

impl fmt::Display for NodeType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for NodeType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        NodeType::ALL
            .into_iter()
            .find(|t| t.name().eq_ignore_ascii_case(s) || t.slug() == s)
            .ok_or_else(|| Error::Ontology(format!("unknown node type `{s}`")))
    }
}

/// A relation name such as `has_theme`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EdgeLabel(Cow<'static, str>);

impl EdgeLabel {
    pub const MENTIONED_IN: EdgeLabel = EdgeLabel::from_static("mentioned_in");
    pub const APPEARS_IN: EdgeLabel = EdgeLabel::from_static("appears_in");
    pub const HAS_ACTOR1: EdgeLabel = EdgeLabel::from_static("has_actor1");
    pub const HAS_ACTOR2: EdgeLabel = EdgeLabel::from_static("has_actor2");
    pub const HAS_EVENT_CODE: EdgeLabel = EdgeLabel::from_static("has_event_code");
    pub const OCCURRED_AT: EdgeLabel = EdgeLabel::from_static("occurred_at");
    pub const OCCURRED_ON: EdgeLabel = EdgeLabel::from_static("occurred_on");
    pub const HAS_THEME: EdgeLabel = EdgeLabel::from_static("has_theme");
    pub const MENTIONS_PERSON: EdgeLabel = EdgeLabel::from_static("mentions_person");
    pub const MENTIONS_ORGANIZATION: EdgeLabel = EdgeLabel::from_static("mentions_organization");
    pub const MENTIONS_LOCATION: EdgeLabel = EdgeLabel::from_static("mentions_location");
    pub const PUBLISHED_BY: EdgeLabel = EdgeLabel::from_static("published_by");
    pub const HAS_QUOTATION: EdgeLabel = EdgeLabel::from_static("has_quotation");
    pub const PUBLISHED_ON: EdgeLabel = EdgeLabel::from_static("published_on");

    pub const fn from_static(s: &'static str) -> Self {
        EdgeLabel(Cow::Borrowed(s))
    }

    pub fn new(s: impl Into<String>) -> Self {
        EdgeLabel(Cow::Owned(s.into()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// `has_theme` renders as `has theme`.
    pub fn phrase(&self) -> String {
        self.0.replace('_', " ")
    }
}

impl fmt::Display for EdgeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Relation {
    pub label: EdgeLabel,
    pub source: NodeType,
    pub target: NodeType,
}

#[derive(Debug, Deserialize)]
struct OntologyFile {
    version: u32,
    #[serde(default)]
    relation: Vec<Relation>,
}

/// The typing schema: every relation label with its (source, target) types.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ontology {
    relations: BTreeMap<EdgeLabel, (NodeType, NodeType)>,
}

impl Default for Ontology {
    fn default() -> Self {
        Self::from_toml_str(DEFAULT_ONTOLOGY).expect("bundled ontology is valid")
    }
}

impl Ontology {
    pub fn empty() -> Self {
        Self {
            relations: BTreeMap::new(),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let mut o = Self::empty();
        o.extend_from_toml_str(text)?;
        Ok(o)
    }

    /// Adds the relations of another ontology document. Redefining an
    /// existing label with a different signature is an error.
    pub fn extend_from_toml_str(&mut self, text: &str) -> Result<()> {
        let file: OntologyFile = toml::from_str(text).map_err(|e| Error::Config(format!("ontology: {e}")))?;
        if file.version != ONTOLOGY_VERSION {
            return Err(Error::VersionMismatch {
                what: "ontology",
                found: file.version,
                expected: ONTOLOGY_VERSION,
            });
        }
        for r in file.relation {
            self.add_relation(r)?;
        }
        Ok(())
    }

    pub fn extend_from_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        self.extend_from_toml_str(&text)
    }

    pub fn add_relation(&mut self, r: Relation) -> Result<()> {
        match self.relations.get(&r.label) {
            Some(&sig) if sig != (r.source, r.target) => Err(Error::Ontology(format!(
                "relation `{}` already defined as {} -> {}",
                r.label, sig.0, sig.1
            ))),
            _ => {
                self.relations.insert(r.label, (r.source, r.target));
                Ok(())
            }
        }
    }

    pub fn signature(&self, label: &EdgeLabel) -> Option<(NodeType, NodeType)> {
        self.relations.get(label).copied()
    }

    pub fn check(&self, label: &EdgeLabel, source: NodeType, target: NodeType) -> Result<()> {
        match self.signature(label) {
            None => Err(Error::Ontology(format!("unknown relation `{label}`"))),
            Some(sig) if sig == (source, target) => Ok(()),
            Some((s, t)) => Err(Error::Ontology(format!(
                "`{label}` expects {s} -> {t}, got {source} -> {target}"
            ))),
        }
    }

    pub fn relations(&self) -> impl Iterator<Item = Relation> + '_ {
        self.relations.iter().map(|(l, &(s, t))| Relation {
            label: l.clone(),
            source: s,
            target: t,
        })
    }

    pub fn len(&self) -> usize {
        self.relations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.relations.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_has_fourteen_relations() {
        let o = Ontology::default();
        assert_eq!(o.len(), 14);
        assert_eq!(
            o.signature(&EdgeLabel::HAS_THEME),
            Some((NodeType::Article, NodeType::Theme))
        );
        assert!(o
            .check(&EdgeLabel::HAS_THEME, NodeType::Event, NodeType::Theme)
            .is_err());
    }

    #[test]
    fn extension_adds_and_guards_conflicts() {
        let mut o = Ontology::default();
        o.extend_from_toml_str(
            "version = 1\n[[relation]]\nlabel = \"crosses\"\nsource = \"Location\"\ntarget = \"Location\"\n",
        )
        .unwrap();
        assert!(o
            .check(&EdgeLabel::new("crosses"), NodeType::Location, NodeType::Location)
            .is_ok());
        let clash =
            "version = 1\n[[relation]]\nlabel = \"has_theme\"\nsource = \"Event\"\ntarget = \"Theme\"\n";
        assert!(o.extend_from_toml_str(clash).is_err());
    }

    #[test]
    fn node_type_parses_names_and_slugs() {
        assert_eq!("Theme".parse::<NodeType>().unwrap(), NodeType::Theme);
        assert_eq!("date".parse::<NodeType>().unwrap(), NodeType::DateValue);
        assert!("Widget".parse::<NodeType>().is_err());
    }
}
