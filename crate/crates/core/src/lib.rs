//! Knowledge graphs and question answering over GDELT news-event tables.
//!
//! The pipeline runs ingest → fetch → build graph / build vector store →
//! answer questions → score answers. Each stage is usable on its own; the
//! `gdelt-kg` binary wires them together.

pub mod cli;
pub mod config;
pub mod error;
pub mod eval;
pub mod fetch;
pub mod ingest;
pub mod kg;
pub mod llm;
pub mod qa;
pub mod query;
pub mod text;
pub mod vector;

pub use error::{Error, Result};
