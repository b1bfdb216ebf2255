//! Keyword / time-window filtration of the parsed tables into a closed
//! case-study subset.

use std::collections::HashSet;

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};

use super::records::{ArticleRecord, EventRecord, MentionKey, MentionRecord};
use crate::error::{Error, Result};
use crate::text::KeywordMatcher;

/// Inclusive bounds on `MentionTimeDate`, in the file's native (UTC) encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeWindow {
    pub start: NaiveDateTime,
    pub end: NaiveDateTime,
}

impl TimeWindow {
    pub fn contains(&self, t: NaiveDateTime) -> bool {
        self.start <= t && t <= self.end
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeywordFilter {
    pub keywords: Vec<String>,
    #[serde(default)]
    pub case_sensitive: bool,
    #[serde(default)]
    pub time_window: Option<TimeWindow>,
}

impl KeywordFilter {
    pub fn new<S: Into<String>>(keywords: impl IntoIterator<Item = S>) -> Self {
        Self {
            keywords: keywords.into_iter().map(Into::into).collect(),
            case_sensitive: false,
            time_window: None,
        }
    }

    pub fn with_time_window(mut self, window: TimeWindow) -> Self {
        self.time_window = Some(window);
        self
    }

    fn matcher(&self) -> Result<KeywordMatcher> {
        KeywordMatcher::new(&self.keywords, self.case_sensitive).ok_or(Error::EmptyKeywords)
    }

    /// Whether a mention row survives the filter.
    pub fn retains(&self, mention: &MentionRecord) -> Result<bool> {
        let m = self.matcher()?;
        Ok(self.retains_with(&m, mention))
    }

    fn retains_with(&self, m: &KeywordMatcher, mention: &MentionRecord) -> bool {
        if let Some(w) = &self.time_window {
            if !w.contains(mention.mention_time) {
                return false;
            }
        }
        m.is_match(&mention.raw_row())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceInfo {
    pub table: String,
    pub file: Option<String>,
    pub rows_before: usize,
    pub rows_after: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub sources: Vec<SourceInfo>,
}

impl Provenance {
    /// Fraction of all input rows (across the three tables) kept in the subset.
    pub fn retained_fraction(&self) -> f64 {
        let before: usize = self.sources.iter().map(|s| s.rows_before).sum();
        let after: usize = self.sources.iter().map(|s| s.rows_after).sum();
        if before == 0 {
            0.0
        } else {
            after as f64 / before as f64
        }
    }
}

/// References from retained mentions that have no matching row.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnresolvedRefs {
    /// Mentions whose event id is absent from the events table.
    pub missing_events: Vec<MentionKey>,
    /// Mentions whose identifier matches no article document identifier.
    pub missing_articles: Vec<MentionKey>,
}

impl UnresolvedRefs {
    pub fn len(&self) -> usize {
        self.missing_events.len() + self.missing_articles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn compute(events: &[EventRecord], mentions: &[MentionRecord], articles: &[ArticleRecord]) -> Self {
        let event_ids: HashSet<i64> = events.iter().map(|e| e.global_event_id).collect();
        let docs: HashSet<&str> = articles.iter().map(|a| a.document_identifier.as_str()).collect();
        let mut out = Self::default();
        for m in mentions {
            if !event_ids.contains(&m.global_event_id) {
                out.missing_events.push(m.key());
            }
            if !docs.contains(m.mention_identifier.as_str()) {
                out.missing_articles.push(m.key());
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseStudySubset {
    pub events: Vec<EventRecord>,
    pub mentions: Vec<MentionRecord>,
    pub articles: Vec<ArticleRecord>,
    pub filter_spec: KeywordFilter,
    pub provenance: Provenance,
    pub unresolved: UnresolvedRefs,
    /// Duplicate rows dropped while parsing, as `table row N: key`.
    #[serde(default)]
    pub duplicates: Vec<String>,
}

impl CaseStudySubset {
    pub fn counts(&self) -> (usize, usize, usize) {
        (self.events.len(), self.mentions.len(), self.articles.len())
    }
}

/// Keeps mention rows where any raw field contains any keyword (and that fall
/// inside the time window, if one is set), then keeps exactly the events and
/// articles those mentions reference.
pub fn filter_subset(
    events: &[EventRecord],
    mentions: &[MentionRecord],
    articles: &[ArticleRecord],
    filter: &KeywordFilter,
) -> Result<CaseStudySubset> {
    let matcher = filter.matcher()?;
    let kept_mentions: Vec<MentionRecord> = mentions
        .iter()
        .filter(|m| filter.retains_with(&matcher, m))
        .cloned()
        .collect();

    let event_ids: HashSet<i64> = kept_mentions.iter().map(|m| m.global_event_id).collect();
    let doc_ids: HashSet<&str> = kept_mentions
        .iter()
        .map(|m| m.mention_identifier.as_str())
        .collect();

    let kept_events: Vec<EventRecord> = events
        .iter()
        .filter(|e| event_ids.contains(&e.global_event_id))
        .cloned()
        .collect();
    let kept_articles: Vec<ArticleRecord> = articles
        .iter()
        .filter(|a| doc_ids.contains(a.document_identifier.as_str()))
        .cloned()
        .collect();

    let unresolved = UnresolvedRefs::compute(&kept_events, &kept_mentions, &kept_articles);
    let provenance = Provenance {
        sources: vec![
            source("events", events.len(), kept_events.len()),
            source("mentions", mentions.len(), kept_mentions.len()),
            source("gkg", articles.len(), kept_articles.len()),
        ],
    };
    Ok(CaseStudySubset {
        events: kept_events,
        mentions: kept_mentions,
        articles: kept_articles,
        filter_spec: filter.clone(),
        provenance,
        unresolved,
        duplicates: Vec::new(),
    })
}

fn source(table: &str, before: usize, after: usize) -> SourceInfo {
    SourceInfo {
        table: table.to_string(),
        file: None,
        rows_before: before,
        rows_after: after,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub events: usize,
    pub mentions: usize,
    pub articles: usize,
    pub unresolved: UnresolvedRefs,
    pub duplicates: Vec<String>,
}

impl ConsistencyReport {
    pub fn is_consistent(&self) -> bool {
        self.unresolved.is_empty()
    }
}

impl std::fmt::Display for ConsistencyReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(
            f,
            "events: {}  mentions: {}  articles: {}",
            self.events, self.mentions, self.articles
        )?;
        writeln!(
            f,
            "unresolved event refs: {}  unresolved article refs: {}  duplicates: {}",
            self.unresolved.missing_events.len(),
            self.unresolved.missing_articles.len(),
            self.duplicates.len()
        )?;
        for k in &self.unresolved.missing_events {
            writeln!(f, "  missing event    {k}")?;
        }
        for k in &self.unresolved.missing_articles {
            writeln!(f, "  missing article  {k}")?;
        }
        for d in &self.duplicates {
            writeln!(f, "  duplicate        {d}")?;
        }
        Ok(())
    }
}

/// Recomputes reference resolution from the subset's rows.
pub fn consistency_report(subset: &CaseStudySubset) -> ConsistencyReport {
    ConsistencyReport {
        events: subset.events.len(),
        mentions: subset.mentions.len(),
        articles: subset.articles.len(),
        unresolved: UnresolvedRefs::compute(&subset.events, &subset.mentions, &subset.articles),
        duplicates: subset.duplicates.clone(),
    }
}
