//! Main-text extraction from HTML: markup stripped, boilerplate subtrees
//! (script, style, nav, ...) dropped, whitespace normalized per block.

use ego_tree::iter::Edge;
use scraper::{Html, Node};

const BLOCKLIST: &[&str] = &[
    "script", "style", "noscript", "nav", "header", "footer", "aside", "form", "iframe", "svg", "template",
    "head", "button", "select", "figure",
];

const BLOCK_ELEMENTS: &[&str] = &[
    "p",
    "div",
    "br",
    "li",
    "ul",
    "ol",
    "h1",
    "h2",
    "h3",
    "h4",
    "h5",
    "h6",
    "article",
    "section",
    "main",
    "blockquote",
    "pre",
    "table",
    "tr",
    "td",
    "th",
    "dd",
    "dt",
    "body",
    "html",
];

/// Returns one line per text block, joined by `\n`. Empty when the page has
/// no visible text outside blocklisted elements.
pub fn extract_main_text(html: &str) -> String {
    let doc = Html::parse_document(html);
    let mut blocks: Vec<String> = Vec::new();
    let mut current = String::new();
    let mut skip_depth = 0usize;

    let flush = |current: &mut String, blocks: &mut Vec<String>| {
        let line = normalize_whitespace(current);
        if !line.is_empty() {
            blocks.push(line);
        }
        current.clear();
    };

    for edge in doc.tree.root().traverse() {
        match edge {
            Edge::Open(node) => match node.value() {
                Node::Element(el) => {
                    let name = el.name();
                    if skip_depth > 0 || BLOCKLIST.contains(&name) {
                        skip_depth += 1;
                    } else if BLOCK_ELEMENTS.contains(&name) {
                        flush(&mut current, &mut blocks);
                    }
                }
                Node::Text(t) if skip_depth == 0 => {
                    current.push_str(t);
                }
                _ => {}
            },
            Edge::Close(node) => {
                if let Node::Element(el) = node.value() {
                    if skip_depth > 0 {
                        skip_depth -= 1;
                    } else if BLOCK_ELEMENTS.contains(&el.name()) {
                        flush(&mut current, &mut blocks);
                    }
                }
            }
        }
    }
    flush(&mut current, &mut blocks);
    blocks.join("\n")
}

pub fn normalize_whitespace(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}
