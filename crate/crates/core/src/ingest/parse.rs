//! Tab-delimited row parsing for the events, mentions and GKG tables.
//!
//! Parsing is total: every input row ends up either as a record or as a
//! [`ParseIssue`]. Only an unreadable stream is fatal.

use std::collections::HashSet;
use std::io::BufRead;

use chrono::{NaiveDate, NaiveDateTime};
use log::{debug, warn};
use serde::{Deserialize, Serialize};

use super::records::{ArticleRecord, EventRecord, LocationEntry, MentionRecord};
use super::schema::{SchemaMap, TableSchema};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "detail", rename_all = "snake_case")]
pub enum IssueKind {
    Malformed(String),
    /// Row repeats the identity key of an earlier row; the first one is kept.
    Duplicate(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseIssue {
    /// 1-based row number within the stream.
    pub row: usize,
    pub column: Option<String>,
    #[serde(flatten)]
    pub kind: IssueKind,
}

impl ParseIssue {
    pub fn is_duplicate(&self) -> bool {
        matches!(self.kind, IssueKind::Duplicate(_))
    }
}

#[derive(Debug, Clone)]
pub struct ParseOutcome<T> {
    pub records: Vec<T>,
    pub issues: Vec<ParseIssue>,
    pub rows: usize,
    /// Rows that contained invalid UTF-8 and were decoded lossily.
    pub lossy_rows: usize,
}

impl<T> ParseOutcome<T> {
    pub fn skipped(&self) -> usize {
        self.issues.len()
    }

    pub fn duplicates(&self) -> impl Iterator<Item = &ParseIssue> {
        self.issues.iter().filter(|i| i.is_duplicate())
    }
}

struct FieldError {
    column: Option<String>,
    reason: String,
}

impl FieldError {
    fn new(column: &str, reason: impl Into<String>) -> Self {
        Self {
            column: Some(column.to_string()),
            reason: reason.into(),
        }
    }
}

/// Reads newline-terminated rows, handing each (1-based row number, text)
/// to `f`. A trailing newline does not produce an extra empty row.
fn for_each_row<R: BufRead>(mut reader: R, mut f: impl FnMut(usize, &str)) -> Result<(usize, usize)> {
    let mut buf = Vec::new();
    let mut rows = 0;
    let mut lossy = 0;
    loop {
        buf.clear();
        let n = reader.read_until(b'\n', &mut buf).map_err(Error::Stream)?;
        if n == 0 {
            break;
        }
        if buf.last() == Some(&b'\n') {
            buf.pop();
            if buf.last() == Some(&b'\r') {
                buf.pop();
            }
        }
        rows += 1;
        match std::str::from_utf8(&buf) {
            Ok(line) => f(rows, line),
            Err(_) => {
                lossy += 1;
                warn!("row {rows}: invalid UTF-8 replaced");
                let line = String::from_utf8_lossy(&buf);
                f(rows, &line);
            }
        }
    }
    Ok((rows, lossy))
}

struct Row<'a> {
    table: &'static str,
    schema: &'a TableSchema,
    fields: Vec<&'a str>,
}

impl<'a> Row<'a> {
    fn split(
        table: &'static str,
        schema: &'a TableSchema,
        line: &'a str,
    ) -> std::result::Result<Self, FieldError> {
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != schema.columns {
            return Err(FieldError {
                column: None,
                reason: format!("expected {} columns, found {}", schema.columns, fields.len()),
            });
        }
        Ok(Self {
            table,
            schema,
            fields,
        })
    }

    fn text(&self, name: &str) -> std::result::Result<&'a str, FieldError> {
        let idx = self
            .schema
            .index(self.table, name)
            .map_err(|e| FieldError::new(name, e.to_string()))?;
        Ok(self.fields[idx].trim())
    }

    fn opt_text(&self, name: &str) -> Option<String> {
        self.schema
            .optional_index(name)
            .map(|i| self.fields[i].trim())
            .filter(|s| !s.is_empty())
            .map(str::to_string)
    }

    fn required_text(&self, name: &str) -> std::result::Result<String, FieldError> {
        let v = self.text(name)?;
        if v.is_empty() {
            return Err(FieldError::new(name, "required value is empty"));
        }
        Ok(v.to_string())
    }

    fn required<T: std::str::FromStr>(&self, name: &str) -> std::result::Result<T, FieldError> {
        let v = self.text(name)?;
        v.parse::<T>()
            .map_err(|_| FieldError::new(name, format!("cannot parse `{v}`")))
    }

    fn required_float(&self, name: &str) -> std::result::Result<f64, FieldError> {
        let v: f64 = self.required(name)?;
        if !v.is_finite() {
            return Err(FieldError::new(name, "non-finite value"));
        }
        Ok(v)
    }

    fn opt_float(&self, name: &str) -> Option<f64> {
        self.opt_text(name)
            .and_then(|v| v.parse::<f64>().ok())
            .filter(|v| v.is_finite())
    }

    fn date(&self, name: &str) -> std::result::Result<NaiveDate, FieldError> {
        let v = self.text(name)?;
        NaiveDate::parse_from_str(v, "%Y%m%d")
            .map_err(|_| FieldError::new(name, format!("bad YYYYMMDD date `{v}`")))
    }

    fn timestamp(&self, name: &str) -> std::result::Result<NaiveDateTime, FieldError> {
        let v = self.text(name)?;
        parse_timestamp(v).ok_or_else(|| FieldError::new(name, format!("bad YYYYMMDDHHMMSS timestamp `{v}`")))
    }
}

/// Parses GDELT's compact `YYYYMMDDHHMMSS` timestamps.
pub fn parse_timestamp(v: &str) -> Option<NaiveDateTime> {
    if v.len() != 14 {
        return None;
    }
    NaiveDateTime::parse_from_str(v, "%Y%m%d%H%M%S").ok()
}

fn parse_table<R, T, K>(
    reader: R,
    table: &'static str,
    schema: &TableSchema,
    mut parse: impl FnMut(&Row<'_>) -> std::result::Result<T, FieldError>,
    key: impl Fn(&T) -> K,
) -> Result<ParseOutcome<T>>
where
    R: BufRead,
    K: std::hash::Hash + Eq + std::fmt::Display,
{
    let mut records = Vec::new();
    let mut issues = Vec::new();
    let mut seen = HashSet::new();
    let (rows, lossy_rows) = for_each_row(reader, |n, line| {
        let parsed = Row::split(table, schema, line).and_then(|row| parse(&row));
        match parsed {
            Ok(rec) => {
                let k = key(&rec);
                if seen.contains(&k) {
                    debug!("{table} row {n}: duplicate key {k}");
                    issues.push(ParseIssue {
                        row: n,
                        column: None,
                        kind: IssueKind::Duplicate(k.to_string()),
                    });
                } else {
                    seen.insert(k);
                    records.push(rec);
                }
            }
            Err(e) => issues.push(ParseIssue {
                row: n,
                column: e.column,
                kind: IssueKind::Malformed(e.reason),
            }),
        }
    })?;
    Ok(ParseOutcome {
        records,
        issues,
        rows,
        lossy_rows,
    })
}

pub fn parse_events<R: BufRead>(reader: R, schema: &SchemaMap) -> Result<ParseOutcome<EventRecord>> {
    parse_table(reader, "events", &schema.events, event_from_row, |e| {
        e.global_event_id
    })
}

pub fn parse_mentions<R: BufRead>(reader: R, schema: &SchemaMap) -> Result<ParseOutcome<MentionRecord>> {
    parse_table(reader, "mentions", &schema.mentions, mention_from_row, |m| {
        m.key()
    })
}

pub fn parse_gkg<R: BufRead>(reader: R, schema: &SchemaMap) -> Result<ParseOutcome<ArticleRecord>> {
    parse_table(reader, "gkg", &schema.gkg, article_from_row, |a| {
        a.document_identifier.clone()
    })
}

fn checked_coord(v: Option<f64>, limit: f64, flagged: &mut bool) -> Option<f64> {
    match v {
        Some(x) if x.abs() <= limit => Some(x),
        Some(_) => {
            *flagged = true;
            None
        }
        None => None,
    }
}

fn event_from_row(row: &Row<'_>) -> std::result::Result<EventRecord, FieldError> {
    let mut geo_flagged = false;
    let action_geo_lat = checked_coord(row.opt_float("action_geo_lat"), 90.0, &mut geo_flagged);
    let action_geo_lon = checked_coord(row.opt_float("action_geo_lon"), 180.0, &mut geo_flagged);
    let goldstein_scale = row.required_float("goldstein_scale")?;
    if !(-10.0..=10.0).contains(&goldstein_scale) {
        return Err(FieldError::new(
            "goldstein_scale",
            format!("{goldstein_scale} outside [-10, 10]"),
        ));
    }
    Ok(EventRecord {
        global_event_id: row.required("global_event_id")?,
        day: row.date("day")?,
        actor1_name: row.opt_text("actor1_name"),
        actor1_code: row.opt_text("actor1_code"),
        actor2_name: row.opt_text("actor2_name"),
        actor2_code: row.opt_text("actor2_code"),
        event_code: row.text("event_code")?.to_string(),
        goldstein_scale,
        num_mentions: row.required("num_mentions")?,
        avg_tone: row.required_float("avg_tone")?,
        action_geo_fullname: row.opt_text("action_geo_fullname"),
        action_geo_lat,
        action_geo_lon,
        source_url: row.text("source_url")?.to_string(),
        geo_flagged,
    })
}

fn mention_from_row(row: &Row<'_>) -> std::result::Result<MentionRecord, FieldError> {
    let confidence: u8 = row.required("confidence")?;
    if confidence > 100 {
        return Err(FieldError::new(
            "confidence",
            format!("{confidence} outside [0, 100]"),
        ));
    }
    Ok(MentionRecord {
        global_event_id: row.required("global_event_id")?,
        mention_time: row.timestamp("mention_time")?,
        mention_source_name: row.text("mention_source_name")?.to_string(),
        mention_identifier: row.required_text("mention_identifier")?,
        confidence,
        mention_doc_tone: row.required_float("mention_doc_tone")?,
        raw_fields: row.fields.iter().map(|s| s.to_string()).collect(),
    })
}

fn article_from_row(row: &Row<'_>) -> std::result::Result<ArticleRecord, FieldError> {
    let pick = |v2: &str, v1: &str| {
        row.opt_text(v2)
            .map(|s| (s, true))
            .or_else(|| row.opt_text(v1).map(|s| (s, false)))
    };
    let themes = pick("v2_themes", "v1_themes")
        .map(|(s, _)| split_coded_list(&s))
        .unwrap_or_default();
    let persons = pick("v2_persons", "v1_persons")
        .map(|(s, _)| split_coded_list(&s))
        .unwrap_or_default();
    let organizations = pick("v2_organizations", "v1_organizations")
        .map(|(s, _)| split_coded_list(&s))
        .unwrap_or_default();
    let locations = pick("v2_locations", "v1_locations")
        .map(|(s, enhanced)| split_locations(&s, enhanced))
        .unwrap_or_default();
    let tone = row
        .opt_text("tone")
        .and_then(|t| t.split(',').next().and_then(|v| v.trim().parse::<f64>().ok()))
        .filter(|v| v.is_finite());
    let quotations = row
        .opt_text("quotations")
        .map(|s| split_quotations(&s))
        .unwrap_or_default();
    Ok(ArticleRecord {
        gkg_record_id: row.required_text("gkg_record_id")?,
        date: row.timestamp("date")?,
        source_common_name: row.text("source_common_name")?.to_string(),
        document_identifier: row.required_text("document_identifier")?,
        themes,
        persons,
        organizations,
        locations,
        tone,
        quotations,
    })
}

fn push_unique(out: &mut Vec<String>, v: &str) {
    let v = v.trim();
    if !v.is_empty() && !out.iter().any(|e| e == v) {
        out.push(v.to_string());
    }
}

/// `CODE,offset;CODE,offset` or plain `CODE;CODE`. Offsets are dropped and
/// repeated codes collapse to their first occurrence.
pub fn split_coded_list(cell: &str) -> Vec<String> {
    let mut out = Vec::new();
    for entry in cell.split(';') {
        let value = match entry.rsplit_once(',') {
            Some((code, offset)) if offset.trim().chars().all(|c| c.is_ascii_digit()) => code,
            _ => entry,
        };
        push_unique(&mut out, value);
    }
    out
}

/// Location entries are `#`-separated subfields. Enhanced (V2) entries
/// carry an ADM2 code, shifting lat/lon one position to the right.
pub fn split_locations(cell: &str, enhanced: bool) -> Vec<LocationEntry> {
    let (lat_idx, lon_idx) = if enhanced { (5, 6) } else { (4, 5) };
    let mut out: Vec<LocationEntry> = Vec::new();
    for entry in cell.split(';') {
        let parts: Vec<&str> = entry.split('#').collect();
        let Some(name) = parts.get(1).map(|s| s.trim()).filter(|s| !s.is_empty()) else {
            continue;
        };
        if out.iter().any(|l| l.fullname == name) {
            continue;
        }
        let coord = |i: usize, limit: f64| {
            parts
                .get(i)
                .and_then(|s| s.trim().parse::<f64>().ok())
                .filter(|v| v.is_finite() && v.abs() <= limit)
        };
        out.push(LocationEntry {
            fullname: name.to_string(),
            lat: coord(lat_idx, 90.0),
            lon: coord(lon_idx, 180.0),
        });
    }
    out
}

/// Quotation entries are `#`-separated, each `offset|length|verb|quote`.
pub fn split_quotations(cell: &str) -> Vec<String> {
    let mut out = Vec::new();
    for entry in cell.split('#') {
        let quote = entry.splitn(4, '|').nth(3).unwrap_or(entry);
        push_unique(&mut out, quote);
    }
    out
}
