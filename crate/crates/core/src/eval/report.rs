use std::fmt::Write as _;
use std::path::Path;

use serde_json::json;

use super::{EvalScore, MethodSummary};
use crate::error::{Error, Result};

pub const QUARTILE_CONVENTION: &str =
    "Tukey median-of-halves (overall median excluded from both halves when n is odd)";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    TableText,
    Csv,
    Json,
    BoxplotSvg,
}

impl ReportFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ReportFormat::TableText => "txt",
            ReportFormat::Csv => "csv",
            ReportFormat::Json => "json",
            ReportFormat::BoxplotSvg => "svg",
        }
    }
}

impl std::str::FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "table_text" | "text" | "table" => Ok(ReportFormat::TableText),
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            "boxplot_svg" | "svg" => Ok(ReportFormat::BoxplotSvg),
            other => Err(Error::InvalidArgument(format!("unknown report format `{other}`"))),
        }
    }
}

/// Renders a report in memory. Output depends only on the inputs.
pub fn render_report(
    summaries: &[MethodSummary],
    scores: &[EvalScore],
    format: ReportFormat,
) -> Result<Vec<u8>> {
    if summaries.is_empty() {
        return Err(Error::InvalidArgument("no method summaries to report".into()));
    }
    match format {
        ReportFormat::TableText => Ok(table_text(summaries, scores).into_bytes()),
        ReportFormat::Csv => csv_scores(scores),
        ReportFormat::Json => {
            let doc = json!({
                "quartile_convention": QUARTILE_CONVENTION,
                "summaries": summaries,
                "scores": scores,
            });
            let mut out = serde_json::to_vec_pretty(&doc)?;
            out.push(b'\n');
            Ok(out)
        }
        ReportFormat::BoxplotSvg => Ok(boxplot_svg(summaries).into_bytes()),
    }
}

pub fn emit_report(
    summaries: &[MethodSummary],
    scores: &[EvalScore],
    path: &Path,
    format: ReportFormat,
) -> Result<()> {
    let bytes = render_report(summaries, scores, format)?;
    crate::qa::write_atomic(path, &bytes)
}

fn table_text(summaries: &[MethodSummary], scores: &[EvalScore]) -> String {
    let mut out = format!("quartiles: {QUARTILE_CONVENTION}\n\n");
    let mw = summaries
        .iter()
        .map(|s| s.method.to_string().len())
        .chain(scores.iter().map(|s| s.method.to_string().len()))
        .max()
        .unwrap_or(0)
        .max("method".len());
    let _ = writeln!(
        out,
        "{:<mw$}  {:>4}  {:>7}  {:>7}  {:>7}  {:>7}  {:>7}",
        "method", "n", "min", "q1", "median", "q3", "max"
    );
    for s in summaries {
        let f = &s.stats;
        let _ = writeln!(
            out,
            "{:<mw$}  {:>4}  {:>7.4}  {:>7.4}  {:>7.4}  {:>7.4}  {:>7.4}",
            s.method.to_string(),
            s.n,
            f.min,
            f.q1,
            f.median,
            f.q3,
            f.max
        );
    }
    if !scores.is_empty() {
        let qw = scores
            .iter()
            .map(|s| s.question_id.len())
            .max()
            .unwrap_or(0)
            .max("question".len());
        let _ = writeln!(
            out,
            "\n{:<qw$}  {:<mw$}  {:>7}  refusal",
            "question", "method", "cosine"
        );
        for s in scores {
            let _ = writeln!(
                out,
                "{:<qw$}  {:<mw$}  {:>7.4}  {}",
                s.question_id,
                s.method.to_string(),
                s.cosine_similarity,
                if s.refusal { "yes" } else { "no" }
            );
        }
    }
    out
}

fn csv_scores(scores: &[EvalScore]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| Error::Serde(e.to_string());
    w.write_record([
        "question_id",
        "method",
        "cosine_similarity",
        "embedder_id",
        "refusal",
    ])
    .map_err(err)?;
    for s in scores {
        w.write_record([
            s.question_id.as_str(),
            &s.method.to_string(),
            &s.cosine_similarity.to_string(),
            s.embedder_id.as_str(),
            if s.refusal { "true" } else { "false" },
        ])
        .map_err(err)?;
    }
    w.into_inner().map_err(|e| Error::Serde(e.to_string()))
}

fn xml_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

const SLOT: f64 = 140.0;
const LEFT: f64 = 80.0;
const TOP: f64 = 40.0;
const PLOT_H: f64 = 260.0;

/// One box per method: whiskers at min and max, box from q1 to q3, a line
/// at the median. The y axis spans [lo, 1] with lo at or below zero.
fn boxplot_svg(summaries: &[MethodSummary]) -> String {
    let lowest = summaries.iter().map(|s| s.stats.min).fold(0.0_f64, f64::min);
    // Ticks every 0.2; the axis starts at the tick at or below the lowest score.
    let lo_tick = (lowest * 5.0).floor().max(-5.0) as i32;
    let lo = f64::from(lo_tick) / 5.0;
    let y = |v: f64| TOP + (1.0 - (v - lo) / (1.0 - lo)) * PLOT_H;
    let width = LEFT + SLOT * summaries.len() as f64 + 20.0;
    let height = TOP + PLOT_H + 70.0;
    let bottom = TOP + PLOT_H;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="20" text-anchor="middle" font-size="14">Cosine similarity to ground truth by method</text>"#,
        width / 2.0
    );
    let _ = writeln!(
        s,
        r#"<line class="axis" x1="{LEFT:.1}" y1="{TOP:.1}" x2="{LEFT:.1}" y2="{bottom:.1}" stroke="black"/>"#
    );
    let _ = writeln!(
        s,
        r#"<line class="axis" x1="{LEFT:.1}" y1="{bottom:.1}" x2="{:.1}" y2="{bottom:.1}" stroke="black"/>"#,
        width - 20.0
    );
    for t in lo_tick..=5 {
        let v = f64::from(t) / 5.0;
        let ty = y(v);
        let _ = writeln!(
            s,
            r#"<line x1="{:.1}" y1="{ty:.2}" x2="{LEFT:.1}" y2="{ty:.2}" stroke="black"/><text x="{:.1}" y="{:.2}" text-anchor="end">{v:.1}</text>"#,
            LEFT - 5.0,
            LEFT - 8.0,
            ty + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text class="axis-label" x="20" y="{:.1}" text-anchor="middle" transform="rotate(-90 20 {:.1})">cosine similarity</text>"#,
        TOP + PLOT_H / 2.0,
        TOP + PLOT_H / 2.0
    );
    let _ = writeln!(
        s,
        r#"<text class="axis-label" x="{:.1}" y="{:.1}" text-anchor="middle">method</text>"#,
        LEFT + SLOT * summaries.len() as f64 / 2.0,
        bottom + 55.0
    );
    for (i, m) in summaries.iter().enumerate() {
        let cx = LEFT + SLOT * i as f64 + SLOT / 2.0;
        let f = &m.stats;
        let (x0, x1) = (cx - 30.0, cx + 30.0);
        let _ = writeln!(
            s,
            r#"<g class="box" data-method="{}">"#,
            xml_escape(&m.method.to_string())
        );
        let _ = writeln!(
            s,
            r#"<line x1="{cx:.1}" y1="{:.2}" x2="{cx:.1}" y2="{:.2}" stroke="black"/>"#,
            y(f.max),
            y(f.q3)
        );
        let _ = writeln!(
            s,
            r#"<line x1="{cx:.1}" y1="{:.2}" x2="{cx:.1}" y2="{:.2}" stroke="black"/>"#,
            y(f.q1),
            y(f.min)
        );
        for v in [f.min, f.max] {
            let _ = writeln!(
                s,
                r#"<line x1="{:.1}" y1="{:.2}" x2="{:.1}" y2="{:.2}" stroke="black"/>"#,
                cx - 15.0,
                y(v),
                cx + 15.0,
                y(v)
            );
        }
        let _ = writeln!(
            s,
            r##"<rect x="{x0:.1}" y="{:.2}" width="60.0" height="{:.2}" fill="#9ecae1" stroke="black"/>"##,
            y(f.q3),
            (y(f.q1) - y(f.q3)).max(0.0)
        );
        let _ = writeln!(
            s,
            r#"<line x1="{x0:.1}" y1="{:.2}" x2="{x1:.1}" y2="{:.2}" stroke="black" stroke-width="2"/>"#,
            y(f.median),
            y(f.median)
        );
        let _ = writeln!(
            s,
            r#"<text x="{cx:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            bottom + 18.0,
            xml_escape(&m.method.to_string())
        );
        let _ = writeln!(
            s,
            r#"<text x="{cx:.1}" y="{:.1}" text-anchor="middle" font-size="10">n={}</text>"#,
            bottom + 32.0,
            m.n
        );
        s.push_str("</g>\n");
    }
    s.push_str("</svg>\n");
    s
}
