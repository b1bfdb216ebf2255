use chrono::{NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};

/// One row of the event export table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub global_event_id: i64,
    pub day: NaiveDate,
    pub actor1_name: Option<String>,
    pub actor1_code: Option<String>,
    pub actor2_name: Option<String>,
    pub actor2_code: Option<String>,
    pub event_code: String,
    pub goldstein_scale: f64,
    pub num_mentions: u32,
    pub avg_tone: f64,
    pub action_geo_fullname: Option<String>,
    pub action_geo_lat: Option<f64>,
    pub action_geo_lon: Option<f64>,
    pub source_url: String,
    /// Set when a coordinate was present but outside the valid range; the
    /// offending value is dropped.
    #[serde(default)]
    pub geo_flagged: bool,
}

/// Identity of a mention: the (event id, mention identifier) pair.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MentionKey {
    pub global_event_id: i64,
    pub mention_identifier: String,
}

impl std::fmt::Display for MentionKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}|{}", self.global_event_id, self.mention_identifier)
    }
}

/// One row of the mentions table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MentionRecord {
    pub global_event_id: i64,
    pub mention_time: NaiveDateTime,
    pub mention_source_name: String,
    pub mention_identifier: String,
    pub confidence: u8,
    pub mention_doc_tone: f64,
    /// Every original column, in file order.
    pub raw_fields: Vec<String>,
}

impl MentionRecord {
    pub fn key(&self) -> MentionKey {
        MentionKey {
            global_event_id: self.global_event_id,
            mention_identifier: self.mention_identifier.clone(),
        }
    }

    /// The row as it appeared on the wire, tab-joined.
    pub fn raw_row(&self) -> String {
        self.raw_fields.join("\t")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocationEntry {
    pub fullname: String,
    pub lat: Option<f64>,
    pub lon: Option<f64>,
}

/// One row of the GKG table; each row is one article.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArticleRecord {
    pub gkg_record_id: String,
    pub date: NaiveDateTime,
    pub source_common_name: String,
    pub document_identifier: String,
    pub themes: Vec<String>,
    pub persons: Vec<String>,
    pub organizations: Vec<String>,
    pub locations: Vec<LocationEntry>,
    pub tone: Option<f64>,
    pub quotations: Vec<String>,
}
