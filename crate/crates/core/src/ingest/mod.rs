//! GDELT 2.0 events / mentions / GKG ingest and case-study filtration.

mod filter;
mod parse;
mod records;
mod schema;
mod store;

use std::fs::File;
use std::io::BufReader;
use std::path::Path;

pub use filter::{
    consistency_report, filter_subset, CaseStudySubset, ConsistencyReport, KeywordFilter, Provenance,
    SourceInfo, TimeWindow, UnresolvedRefs,
};
pub use parse::{
    parse_events, parse_gkg, parse_mentions, parse_timestamp, split_coded_list, split_locations,
    split_quotations, IssueKind, ParseIssue, ParseOutcome,
};
pub use records::{ArticleRecord, EventRecord, LocationEntry, MentionKey, MentionRecord};
pub use schema::{SchemaMap, TableSchema, SCHEMA_VERSION};
pub use store::{load_subset, save_subset, SUBSET_FORMAT, SUBSET_VERSION};

use crate::error::{Error, Result};

/// The three parsed tables of one ingest run.
#[derive(Debug, Clone)]
pub struct IngestBatch {
    pub events: ParseOutcome<EventRecord>,
    pub mentions: ParseOutcome<MentionRecord>,
    pub articles: ParseOutcome<ArticleRecord>,
    pub files: [Option<String>; 3],
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::io(path, e))
}

impl IngestBatch {
    /// Parses the three files concurrently, one thread per file.
    pub fn from_files(events: &Path, mentions: &Path, gkg: &Path, schema: &SchemaMap) -> Result<Self> {
        let (ev, mn, ar) = std::thread::scope(|s| {
            let ev = s.spawn(|| parse_events(open(events)?, schema));
            let mn = s.spawn(|| parse_mentions(open(mentions)?, schema));
            let ar = s.spawn(|| parse_gkg(open(gkg)?, schema));
            (
                ev.join().expect("events parser panicked"),
                mn.join().expect("mentions parser panicked"),
                ar.join().expect("gkg parser panicked"),
            )
        });
        let name = |p: &Path| Some(p.display().to_string());
        Ok(Self {
            events: ev?,
            mentions: mn?,
            articles: ar?,
            files: [name(events), name(mentions), name(gkg)],
        })
    }

    /// Runs [`filter_subset`] and attaches file names and parse duplicates to
    /// the subset's provenance.
    pub fn filter(&self, filter: &KeywordFilter) -> Result<CaseStudySubset> {
        let mut subset = filter_subset(
            &self.events.records,
            &self.mentions.records,
            &self.articles.records,
            filter,
        )?;
        for (src, file) in subset.provenance.sources.iter_mut().zip(&self.files) {
            src.file = file.clone();
        }
        let tables = [
            ("events", &self.events.issues),
            ("mentions", &self.mentions.issues),
            ("gkg", &self.articles.issues),
        ];
        for (table, issues) in tables {
            for issue in issues.iter() {
                if let IssueKind::Duplicate(key) = &issue.kind {
                    subset
                        .duplicates
                        .push(format!("{table} row {}: {key}", issue.row));
                }
            }
        }
        Ok(subset)
    }
}
