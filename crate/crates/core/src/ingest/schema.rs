//! Data-driven column maps for the three GDELT tables.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

const DEFAULT_SCHEMA: &str = include_str!("../../data/gdelt_v2_schema.toml");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableSchema {
    /// Expected number of tab-separated fields per row.
    pub columns: usize,
    pub fields: BTreeMap<String, usize>,
}

impl TableSchema {
    pub fn index(&self, table: &str, field: &str) -> Result<usize> {
        self.fields
            .get(field)
            .copied()
            .ok_or_else(|| Error::Config(format!("schema for `{table}` has no column `{field}`")))
    }

    pub fn optional_index(&self, field: &str) -> Option<usize> {
        self.fields.get(field).copied()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemaMap {
    pub version: u32,
    pub events: TableSchema,
    pub mentions: TableSchema,
    pub gkg: TableSchema,
}

impl Default for SchemaMap {
    fn default() -> Self {
        Self::from_toml_str(DEFAULT_SCHEMA).expect("bundled schema map is valid")
    }
}

impl SchemaMap {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let map: SchemaMap = toml::from_str(text).map_err(|e| Error::Config(format!("schema map: {e}")))?;
        if map.version != SCHEMA_VERSION {
            return Err(Error::VersionMismatch {
                what: "schema map",
                found: map.version,
                expected: SCHEMA_VERSION,
            });
        }
        for (name, table) in [
            ("events", &map.events),
            ("mentions", &map.mentions),
            ("gkg", &map.gkg),
        ] {
            if let Some((field, idx)) = table.fields.iter().find(|(_, &i)| i >= table.columns) {
                return Err(Error::Config(format!(
                    "schema `{name}.{field}` = {idx} is outside the {} declared columns",
                    table.columns
                )));
            }
        }
        Ok(map)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }
}
