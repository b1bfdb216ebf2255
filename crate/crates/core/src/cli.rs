//! The `gdelt-kg` command line. [`run`] parses arguments, executes one
//! pipeline stage and returns the process exit code: 0 on success, 1 when
//! the stage fails, 2 on a usage error.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use chrono::NaiveDateTime;
use clap::{ArgGroup, Args, Parser, Subcommand};

use crate::config::{process_env, Config, StubSwitches};
use crate::error::{Error, Result};
use crate::eval::{
    default_ground_truth, emit_report, import_external_answers, load_ground_truth, score_run, summarize,
    ReportFormat, ScoreOptions,
};
use crate::fetch::{fetch_corpus, load_corpus};
use crate::ingest::{
    consistency_report, load_subset, parse_timestamp, save_subset, IngestBatch, KeywordFilter, SchemaMap,
    TimeWindow,
};
use crate::kg::{
    build_dkg, export_graph, load_extra_triples, load_graph, save_graph, BuildOptions, ExportFormat, NodeId,
    Ontology,
};
use crate::qa::{answer, default_questions, load_questions, run_benchmark, Method, Question, Resources};
use crate::query::{
    count_articles_by_source, keyword_edge_search, mention_attribution, neighborhood, top_themes, Subgraph,
};
use crate::text::split_keywords;
use crate::vector::{build_store, load_store, nearest_chunks, save_store, StoreOptions, WhitespaceTokenizer};

#[derive(Debug, Parser)]
#[command(
    name = "gdelt-kg",
    version,
    about = "Knowledge graphs and question answering over GDELT news-event tables"
)]
struct Cli {
    /// Configuration file (TOML). Flags override environment variables,
    /// which override the file, which overrides built-in defaults.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Use the deterministic offline chat and embedding stand-ins.
    #[arg(long, global = true)]
    stub: bool,

    /// More logging on stderr (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse events/mentions/GKG files and keep the keyword-matched subset.
    Ingest(IngestArgs),
    /// Retrieve article bodies for the subset's document URLs.
    Fetch(FetchArgs),
    /// Build the direct knowledge graph from a subset.
    BuildKg(BuildArgs),
    /// Chunk and embed a fetched corpus into a vector store.
    Index(IndexArgs),
    /// Nearest chunks in a vector store for a query.
    Search(SearchArgs),
    /// Keyword, aggregate and neighborhood queries over a graph.
    Query(QueryArgs),
    /// Answer a question from keyword-retrieved graph context.
    Ask(AskArgs),
    /// Answer a question from vector-retrieved article chunks.
    Rag(RagArgs),
    /// Run every question through every method and persist the run.
    Bench(BenchArgs),
    /// Score a benchmark run against ground truth and write reports.
    Eval(EvalArgs),
    /// Write a graph as GraphML or a tab-separated edge list.
    Export(ExportArgs),
}

#[derive(Debug, Args)]
struct IngestArgs {
    #[arg(long, value_name = "FILE")]
    events: PathBuf,
    #[arg(long, value_name = "FILE")]
    mentions: PathBuf,
    #[arg(long, value_name = "FILE")]
    gkg: PathBuf,
    /// Comma-separated keywords; defaults to `filter.keywords` from the config.
    #[arg(long)]
    keywords: Option<String>,
    #[arg(long)]
    case_sensitive: bool,
    /// Earliest mention time, `YYYYMMDDHHMMSS` or `YYYY-MM-DDTHH:MM:SS` (UTC).
    #[arg(long, value_name = "TS", requires = "to")]
    from: Option<String>,
    /// Latest mention time, inclusive.
    #[arg(long, value_name = "TS", requires = "from")]
    to: Option<String>,
    /// Column map replacing the bundled GDELT 2.0 schema.
    #[arg(long, value_name = "FILE")]
    schema: Option<PathBuf>,
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct FetchArgs {
    #[arg(long, value_name = "DIR")]
    subset: PathBuf,
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    /// Directory with `fixtures.toml` mapping URLs to local files.
    #[arg(long, value_name = "DIR")]
    fixtures: Option<PathBuf>,
    /// Per-request timeout in seconds.
    #[arg(long, value_name = "S")]
    timeout: Option<u64>,
    /// Never use the network.
    #[arg(long)]
    offline: bool,
}

#[derive(Debug, Args)]
struct BuildArgs {
    #[arg(long, value_name = "DIR")]
    subset: PathBuf,
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
    /// Build despite mentions whose event or article is missing.
    #[arg(long)]
    skip_unresolved: bool,
    /// Extra relations (TOML `[[relation]]` tables). Repeatable.
    #[arg(long, value_name = "FILE")]
    ontology_ext: Vec<PathBuf>,
    /// Extra edges, one `SourceType<TAB>label<TAB>relation<TAB>TargetType<TAB>label` per line. Repeatable.
    #[arg(long, value_name = "FILE")]
    extra_triples: Vec<PathBuf>,
}

#[derive(Debug, Args)]
struct IndexArgs {
    #[arg(long, value_name = "DIR")]
    corpus: PathBuf,
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
    #[arg(long, default_value_t = 500)]
    max_tokens: usize,
}

#[derive(Debug, Args)]
struct SearchArgs {
    #[arg(long, value_name = "FILE")]
    store: PathBuf,
    #[arg(long)]
    query: String,
    /// Number of chunks; defaults to `qa.k` from the config.
    #[arg(short)]
    k: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum Emit {
    Sentences,
    Subgraph,
    Graphml,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("what").required(true).args(["keywords", "top_themes", "count_articles_by_source", "attribution", "neighborhood"])))]
struct QueryArgs {
    #[arg(long, value_name = "FILE")]
    kg: PathBuf,
    /// Comma-separated keywords matched against triple sentences.
    #[arg(long)]
    keywords: Option<String>,
    #[arg(long, value_enum, default_value = "sentences", requires = "keywords")]
    emit: Emit,
    #[arg(long, value_name = "K")]
    top_themes: Option<usize>,
    #[arg(long, value_name = "PATTERN")]
    count_articles_by_source: Option<String>,
    #[arg(long, value_name = "LABEL")]
    attribution: Option<String>,
    /// Node id, e.g. `event:1160112345`.
    #[arg(long, value_name = "NODE")]
    neighborhood: Option<String>,
    #[arg(long, default_value_t = 1, requires = "neighborhood")]
    radius: usize,
}

#[derive(Debug, Args)]
struct AskArgs {
    #[arg(long, value_name = "FILE")]
    kg: PathBuf,
    #[arg(long)]
    question: String,
    #[arg(long)]
    keywords: String,
}

#[derive(Debug, Args)]
struct RagArgs {
    #[arg(long, value_name = "FILE")]
    store: PathBuf,
    #[arg(long)]
    question: String,
    #[arg(short)]
    k: Option<usize>,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[arg(long, value_name = "FILE")]
    kg: PathBuf,
    #[arg(long, value_name = "FILE")]
    store: PathBuf,
    /// Question set (TOML); defaults to the bundled Baltimore questions.
    #[arg(long, value_name = "FILE")]
    questions: Option<PathBuf>,
    /// Comma-separated subset of `graph_query,vector_rag`.
    #[arg(long, default_value = "graph_query,vector_rag")]
    methods: String,
    /// Run directory to create.
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct EvalArgs {
    /// Run directory written by `bench`.
    #[arg(long, value_name = "DIR")]
    run: Option<PathBuf>,
    /// External answers (JSON or TOML import schema). Repeatable.
    #[arg(long = "import", value_name = "FILE")]
    imports: Vec<PathBuf>,
    /// Ground-truth answers (TOML); defaults to the bundled set.
    #[arg(long, value_name = "FILE")]
    truth: Option<PathBuf>,
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    /// Comma-separated: table_text, csv, json, boxplot_svg.
    #[arg(long, default_value = "table_text")]
    format: String,
}

#[derive(Debug, Args)]
struct ExportArgs {
    #[arg(long, value_name = "FILE")]
    kg: PathBuf,
    /// `graphml` or `edge_list_text`.
    #[arg(long, default_value = "graphml")]
    format: String,
    /// Output file; stdout when absent.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

/// Parses `argv` (program name first), runs the subcommand and returns the
/// exit code. Errors are reported on stderr.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .try_init();
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            let mut src = std::error::Error::source(&e);
            while let Some(s) = src {
                eprintln!("  caused by: {s}");
                src = s.source();
            }
            1
        }
    }
}

fn parse_ts(s: &str) -> Result<NaiveDateTime> {
    parse_timestamp(s)
        .or_else(|| NaiveDateTime::parse_from_str(s, "%Y-%m-%dT%H:%M:%S").ok())
        .or_else(|| NaiveDateTime::parse_from_str(s, "%Y-%m-%d %H:%M:%S").ok())
        .ok_or_else(|| Error::InvalidArgument(format!("bad timestamp `{s}`")))
}

fn out_line(s: impl AsRef<str>) -> Result<()> {
    let mut o = std::io::stdout().lock();
    writeln!(o, "{}", s.as_ref()).map_err(Error::Stream)
}

fn ontology_with(cfg: &Config, extra: &[PathBuf]) -> Result<Ontology> {
    let mut o = Ontology::default();
    for p in cfg.paths.ontology_extensions.iter().chain(extra) {
        o.extend_from_file(p)?;
    }
    Ok(o)
}

fn execute(cli: Cli) -> Result<()> {
    let mut cfg = Config::resolve(cli.config.as_deref(), &process_env)?;
    if cli.stub {
        cfg.stub = StubSwitches::all();
    }
    let env = process_env;
    match cli.command {
        Command::Ingest(a) => {
            let schema = match a.schema.as_deref().or(cfg.paths.schema.as_deref()) {
                Some(p) => SchemaMap::load(p)?,
                None => SchemaMap::default(),
            };
            let keywords = match &a.keywords {
                Some(k) => split_keywords(k),
                None => cfg.filter.keywords.clone(),
            };
            let mut filter = KeywordFilter::new(keywords);
            filter.case_sensitive = a.case_sensitive || cfg.filter.case_sensitive;
            if let (Some(f), Some(t)) = (&a.from, &a.to) {
                filter = filter.with_time_window(TimeWindow {
                    start: parse_ts(f)?,
                    end: parse_ts(t)?,
                });
            }
            let batch = IngestBatch::from_files(&a.events, &a.mentions, &a.gkg, &schema)?;
            for (name, issues) in [
                ("events", batch.events.issues.len()),
                ("mentions", batch.mentions.issues.len()),
                ("gkg", batch.articles.issues.len()),
            ] {
                if issues > 0 {
                    log::warn!("{name}: {issues} row(s) skipped or flagged");
                }
            }
            let subset = batch.filter(&filter)?;
            save_subset(&subset, &a.out)?;
            out_line(consistency_report(&subset).to_string().trim_end())?;
            out_line(format!(
                "retained fraction: {:.6}",
                subset.provenance.retained_fraction()
            ))
        }
        Command::Fetch(a) => {
            let subset = load_subset(&a.subset)?;
            if let Some(f) = a.fixtures {
                cfg.fetch.fixtures = Some(f);
            }
            if let Some(t) = a.timeout {
                cfg.fetch.timeout_secs = t;
            }
            cfg.fetch.offline |= a.offline;
            let policy = cfg.fetch_policy()?;
            let summary = fetch_corpus(&subset, &policy, &a.out)?;
            for (status, n) in &summary.by_status {
                out_line(format!("{status}\t{n}"))?;
            }
            out_line(format!("documents\t{}", summary.texts.len()))
        }
        Command::BuildKg(a) => {
            let subset = load_subset(&a.subset)?;
            let mut extra = Vec::new();
            for p in cfg.paths.extra_triples.iter().chain(&a.extra_triples) {
                extra.extend(load_extra_triples(p)?);
            }
            let opts = BuildOptions {
                ontology: ontology_with(&cfg, &a.ontology_ext)?,
                skip_unresolved: a.skip_unresolved,
                extra_triples: extra,
            };
            let (kg, report) = build_dkg(&subset, &opts)?;
            save_graph(&kg, &a.out)?;
            out_line(format!("nodes\t{}\nedges\t{}", kg.node_count(), kg.edge_count()))?;
            if !report.skipped_edges.is_empty() {
                out_line(format!(
                    "skipped structural edges\t{}",
                    report.skipped_edges.len()
                ))?;
            }
            Ok(())
        }
        Command::Index(a) => {
            let corpus = load_corpus(&a.corpus)?;
            let embedder = cfg.embedder(&env)?;
            let opts = StoreOptions {
                max_tokens: a.max_tokens,
                ..StoreOptions::default()
            };
            let (store, report) = build_store(&corpus, embedder.as_ref(), &WhitespaceTokenizer, &opts)?;
            save_store(&store, &a.out)?;
            out_line(format!("chunks\t{}\nentries\t{}", report.chunks, store.len()))?;
            for f in &report.failed {
                out_line(format!(
                    "failed\t{}#{}\t{}",
                    f.document_identifier, f.chunk_index, f.reason
                ))?;
            }
            if report.failed.is_empty() {
                Ok(())
            } else {
                Err(Error::Endpoint(format!(
                    "{} chunk(s) could not be embedded",
                    report.failed.len()
                )))
            }
        }
        Command::Search(a) => {
            let embedder = cfg.embedder(&env)?;
            let store = load_store(&a.store, Some(embedder.id()))?;
            let k = a.k.unwrap_or(cfg.qa.k);
            for n in nearest_chunks(&store, &a.query, k, embedder.as_ref())? {
                out_line(format!(
                    "{:.6}\t{}#{}\t{}",
                    n.distance, n.chunk.document_identifier, n.chunk.chunk_index, n.chunk.text
                ))?;
            }
            Ok(())
        }
        Command::Query(a) => run_query(a),
        Command::Ask(a) => {
            let kg = load_graph(&a.kg)?;
            let chat = cfg.chat_client(&env)?;
            let opts = cfg.qa_options();
            let q = Question {
                id: "cli".into(),
                text: a.question,
                keywords: split_keywords(&a.keywords),
            };
            let res = Resources {
                kg: Some(&kg),
                store: None,
                embedder: None,
                chat: chat.as_ref(),
                options: &opts,
            };
            print_answer(&answer(&q, Method::GraphQuery, &res))
        }
        Command::Rag(a) => {
            let embedder = cfg.embedder(&env)?;
            let store = load_store(&a.store, Some(embedder.id()))?;
            let chat = cfg.chat_client(&env)?;
            let mut opts = cfg.qa_options();
            if let Some(k) = a.k {
                opts.k = k;
            }
            let q = Question {
                id: "cli".into(),
                text: a.question,
                keywords: Vec::new(),
            };
            let res = Resources {
                kg: None,
                store: Some(&store),
                embedder: Some(embedder.as_ref()),
                chat: chat.as_ref(),
                options: &opts,
            };
            print_answer(&answer(&q, Method::VectorRag, &res))
        }
        Command::Bench(a) => {
            let questions = match &a.questions {
                Some(p) => load_questions(p)?,
                None => default_questions(),
            };
            let methods = split_keywords(&a.methods)
                .iter()
                .map(|m| m.parse::<Method>())
                .collect::<Result<Vec<_>>>()?;
            if methods.iter().any(|m| matches!(m, Method::Imported(_))) {
                return Err(Error::InvalidArgument(
                    "bench runs graph_query and vector_rag only".into(),
                ));
            }
            let kg = load_graph(&a.kg)?;
            let embedder = cfg.embedder(&env)?;
            let store = load_store(&a.store, Some(embedder.id()))?;
            let chat = cfg.chat_client(&env)?;
            let opts = cfg.qa_options();
            let res = Resources {
                kg: Some(&kg),
                store: Some(&store),
                embedder: Some(embedder.as_ref()),
                chat: chat.as_ref(),
                options: &opts,
            };
            let (manifest, _) = run_benchmark(&questions, &methods, &res, Some(&a.out))?;
            out_line(format!(
                "cells\t{}\nerrors\t{}\nrun\t{}",
                manifest.cells.len(),
                manifest.errors,
                a.out.display()
            ))
        }
        Command::Eval(a) => run_eval(a, &cfg),
        Command::Export(a) => {
            let kg = load_graph(&a.kg)?;
            let fmt: ExportFormat = a.format.parse()?;
            let bytes = export_graph(&kg, fmt);
            match a.out {
                Some(p) => std::fs::write(&p, bytes).map_err(|e| Error::io(&p, e)),
                None => std::io::stdout().lock().write_all(&bytes).map_err(Error::Stream),
            }
        }
    }
}

fn print_answer(r: &crate::qa::QAResult) -> Result<()> {
    match (&r.answer, &r.error) {
        (Some(a), None) => {
            out_line(a)?;
            if let Some(total) = r.truncated_from {
                log::warn!("context truncated to {} of {total} items", r.context_size);
            }
            Ok(())
        }
        (_, Some(e)) => Err(Error::Endpoint(e.clone())),
        (None, None) => Err(Error::Endpoint("no answer".into())),
    }
}

fn emit_subgraph(sub: &Subgraph<'_>, emit: Emit) -> Result<()> {
    match emit {
        Emit::Sentences => {
            for t in sub.sentences() {
                out_line(&t.sentence)?;
            }
            Ok(())
        }
        Emit::Subgraph => std::io::stdout()
            .lock()
            .write_all(&export_graph(&sub.to_graph(), ExportFormat::EdgeListText))
            .map_err(Error::Stream),
        Emit::Graphml => std::io::stdout()
            .lock()
            .write_all(&export_graph(&sub.to_graph(), ExportFormat::GraphMl))
            .map_err(Error::Stream),
    }
}

fn run_query(a: QueryArgs) -> Result<()> {
    let kg = load_graph(&a.kg)?;
    if let Some(k) = &a.keywords {
        let sub = keyword_edge_search(&kg, &split_keywords(k))?;
        emit_subgraph(&sub, a.emit)?;
    }
    if let Some(k) = a.top_themes {
        for (theme, n) in top_themes(&kg, k)? {
            out_line(format!("{theme}\t{n}"))?;
        }
    }
    if let Some(p) = &a.count_articles_by_source {
        out_line(count_articles_by_source(&kg, p).to_string())?;
    }
    if let Some(l) = &a.attribution {
        let att = mention_attribution(&kg, l)?;
        out_line(format!("articles\t{}", att.count()))?;
        for art in &att.articles {
            out_line(art)?;
        }
    }
    if let Some(n) = &a.neighborhood {
        let sub = neighborhood(&kg, &NodeId::new(n.as_str()), a.radius)?;
        emit_subgraph(&sub, Emit::Sentences)?;
    }
    Ok(())
}

fn run_eval(a: EvalArgs, cfg: &Config) -> Result<()> {
    if a.run.is_none() && a.imports.is_empty() {
        return Err(Error::InvalidArgument("eval needs --run and/or --import".into()));
    }
    let formats = split_keywords(&a.format)
        .iter()
        .map(|f| f.parse::<ReportFormat>())
        .collect::<Result<Vec<_>>>()?;
    let mut results = Vec::new();
    if let Some(dir) = &a.run {
        results.extend(crate::qa::load_run(dir)?.1);
    }
    for p in &a.imports {
        results.extend(import_external_answers(p)?);
    }
    let truths = match &a.truth {
        Some(p) => load_ground_truth(p)?,
        None => default_ground_truth(),
    };
    let embedder = cfg.eval_embedder(&process_env)?;
    let opts = ScoreOptions {
        retries: cfg.qa.retries,
        backoff: Duration::from_millis(cfg.qa.backoff_ms),
        ..ScoreOptions::default()
    };
    let report = score_run(&results, &truths, embedder.as_ref(), &opts)?;
    let summaries = summarize(&report.scores);
    std::fs::create_dir_all(&a.out).map_err(|e| Error::io(&a.out, e))?;
    for f in formats {
        emit_report(&summaries, &report.scores, &report_path(&a.out, f), f)?;
    }
    if !report.missing.is_empty() {
        let mut text = String::new();
        for m in &report.missing {
            text.push_str(&format!("{}\t{}\t{}\n", m.question_id, m.method, m.reason));
        }
        let p = a.out.join("missing.tsv");
        std::fs::write(&p, text).map_err(|e| Error::io(&p, e))?;
    }
    out_line(format!(
        "scored\t{}\nmissing\t{}\nreport\t{}",
        report.scores.len(),
        report.missing.len(),
        a.out.display()
    ))
}

fn report_path(dir: &Path, f: ReportFormat) -> PathBuf {
    dir.join(format!("report.{}", f.extension()))
}
