//! Main-text extraction and a resumable, fixture-backed corpus fetch.
//!
//! Runs offline: every URL of the fixture subset has a local stand-in.
//!
//! ```text
//! cargo run --example fetch_articles
//! ```

use std::path::Path;

use gdelt_kg::fetch::{extract_main_text, fetch_urls, load_corpus, FetchPolicy, Fixtures};

fn main() -> gdelt_kg::Result<()> {
    let html = r#"<html><head><script>track()</script></head><body>
        <nav>Home | World</nav>
        <article><h1>Bridge collapse</h1><p>The Dali lost power before the impact.</p></article>
        <footer>Subscribe</footer></body></html>"#;
    println!("extracted:\n{}\n", extract_main_text(html));

    let dir = Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/baltimore"));
    let policy = FetchPolicy {
        fixtures: Some(Fixtures::load(dir)?),
        offline: true,
        ..FetchPolicy::default()
    };
    let out = std::env::temp_dir().join("gdelt-kg-example-corpus");
    let urls = [
        "https://www.cnn.com/2024/03/26/us/baltimore-bridge-collapse/index.html",
        "https://www.bbc.com/news/world-us-canada-baltimore-bridge",
        "https://www.example.org/not-in-fixtures",
    ];
    let summary = fetch_urls(urls, &policy, &out)?;
    println!(
        "statuses {:?}  network requests {}",
        summary.by_status, summary.network_requests
    );
    for t in &summary.texts {
        let preview: String = t.body.chars().take(70).collect();
        println!("  [{}] {}  {preview}", t.fetch_status, t.document_identifier);
    }

    let again = load_corpus(&out)?;
    println!("reloaded {} entries from {}", again.len(), out.display());
    let _ = std::fs::remove_dir_all(out);
    Ok(())
}
