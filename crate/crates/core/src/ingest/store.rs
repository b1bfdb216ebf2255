//! On-disk form of a [`CaseStudySubset`]: three JSON-lines row files plus a
//! versioned manifest.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::filter::{CaseStudySubset, KeywordFilter, Provenance, UnresolvedRefs};
use crate::error::{Error, Result};

pub const SUBSET_FORMAT: &str = "gdelt-kg-subset";
pub const SUBSET_VERSION: u32 = 1;

const EVENTS_FILE: &str = "events.jsonl";
const MENTIONS_FILE: &str = "mentions.jsonl";
const ARTICLES_FILE: &str = "articles.jsonl";
const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    format: String,
    version: u32,
    counts: Counts,
    filter: KeywordFilter,
    provenance: Provenance,
    unresolved: UnresolvedRefs,
    duplicates: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Counts {
    events: usize,
    mentions: usize,
    articles: usize,
}

fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for row in rows {
        serde_json::to_writer(&mut w, row)?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn read_rows<T: DeserializeOwned>(path: &Path, expected: usize) -> Result<Vec<T>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rows = Vec::with_capacity(expected);
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let row = serde_json::from_str(&line).map_err(|e| Error::Corrupt {
            what: "subset",
            reason: format!("{} line {}: {e}", path.display(), i + 1),
        })?;
        rows.push(row);
    }
    if rows.len() != expected {
        return Err(Error::Corrupt {
            what: "subset",
            reason: format!(
                "{} has {} rows, manifest says {expected}",
                path.display(),
                rows.len()
            ),
        });
    }
    Ok(rows)
}

pub fn save_subset(subset: &CaseStudySubset, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_rows(&dir.join(EVENTS_FILE), &subset.events)?;
    write_rows(&dir.join(MENTIONS_FILE), &subset.mentions)?;
    write_rows(&dir.join(ARTICLES_FILE), &subset.articles)?;
    let manifest = Manifest {
        format: SUBSET_FORMAT.to_string(),
        version: SUBSET_VERSION,
        counts: Counts {
            events: subset.events.len(),
            mentions: subset.mentions.len(),
            articles: subset.articles.len(),
        },
        filter: subset.filter_spec.clone(),
        provenance: subset.provenance.clone(),
        unresolved: subset.unresolved.clone(),
        duplicates: subset.duplicates.clone(),
    };
    let path = dir.join(MANIFEST_FILE);
    let text = serde_json::to_string_pretty(&manifest)?;
    std::fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))
}

pub fn load_subset(dir: &Path) -> Result<CaseStudySubset> {
    let path = dir.join(MANIFEST_FILE);
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let manifest: Manifest = serde_json::from_str(&text).map_err(|e| Error::Corrupt {
        what: "subset manifest",
        reason: e.to_string(),
    })?;
    if manifest.format != SUBSET_FORMAT {
        return Err(Error::Corrupt {
            what: "subset manifest",
            reason: format!("unexpected format `{}`", manifest.format),
        });
    }
    if manifest.version != SUBSET_VERSION {
        return Err(Error::VersionMismatch {
            what: "subset",
            found: manifest.version,
            expected: SUBSET_VERSION,
        });
    }
    Ok(CaseStudySubset {
        events: read_rows(&dir.join(EVENTS_FILE), manifest.counts.events)?,
        mentions: read_rows(&dir.join(MENTIONS_FILE), manifest.counts.mentions)?,
        articles: read_rows(&dir.join(ARTICLES_FILE), manifest.counts.articles)?,
        filter_spec: manifest.filter,
        provenance: manifest.provenance,
        unresolved: manifest.unresolved,
        duplicates: manifest.duplicates,
    })
}
