mod common;

use std::io::{BufRead, BufReader, Write};
use std::net::TcpListener;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Duration;

use gdelt_kg::fetch::{
    fetch_corpus, fetch_urls, load_corpus, url_hash, FetchPolicy, FetchStatus, Fetcher, Fixtures,
};

/// Minimal HTTP/1.1 server: `/ok` serves an article page, `/plain` plain
/// text, `/bin` a binary body, anything else 404. Counts requests.
fn serve() -> (String, Arc<AtomicUsize>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let base = format!("http://{}", listener.local_addr().unwrap());
    let hits = Arc::new(AtomicUsize::new(0));
    let counter = hits.clone();
    std::thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(mut stream) = stream else { continue };
            counter.fetch_add(1, Ordering::SeqCst);
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut request = String::new();
            reader.read_line(&mut request).unwrap();
            let mut line = String::new();
            while reader.read_line(&mut line).unwrap() > 2 {
                line.clear();
            }
            let path = request.split_whitespace().nth(1).unwrap_or("/").to_string();
            let (status, ctype, body) = match path.as_str() {
                "/ok" => (
                    "200 OK",
                    "text/html; charset=utf-8",
                    "<html><head><script>var x=1;</script></head><body><nav>Home</nav>\
                     <p>The Francis Scott Key Bridge collapsed.</p><p>The ship was the Dali.</p></body></html>",
                ),
                "/plain" => ("200 OK", "text/plain", "plain   body\ntext"),
                "/bin" => ("200 OK", "application/octet-stream", "\u{1}\u{2}"),
                _ => ("404 Not Found", "text/html", "<p>missing</p>"),
            };
            let _ = write!(
                stream,
                "HTTP/1.1 {status}\r\nContent-Type: {ctype}\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                body.len()
            );
        }
    });
    (base, hits)
}

fn policy() -> FetchPolicy {
    FetchPolicy {
        timeout: Duration::from_secs(5),
        per_host_delay: Duration::ZERO,
        ..Default::default()
    }
}

#[test]
fn http_statuses() {
    let (base, _) = serve();
    let f = Fetcher::new(policy());
    let ok = f.fetch(&format!("{base}/ok"));
    assert_eq!(ok.fetch_status, FetchStatus::Ok);
    assert!(ok.body.contains("Francis Scott Key Bridge collapsed."));
    assert!(ok.body.contains("Dali"));
    assert!(!ok.body.contains("var x"));
    assert!(!ok.body.contains("Home"));

    let missing = f.fetch(&format!("{base}/gone"));
    assert_eq!(missing.fetch_status, FetchStatus::HttpError(404));
    assert!(missing.body.is_empty());

    assert_eq!(
        f.fetch(&format!("{base}/bin")).fetch_status,
        FetchStatus::ParseFailed
    );
    assert_eq!(f.fetch(&format!("{base}/plain")).body, "plain body text");
    assert_eq!(f.network_requests(), 4);
    assert_eq!(f.fetch("ftp://x/y").fetch_status, FetchStatus::ParseFailed);
}

#[test]
fn unreachable_host_is_timeout() {
    // Bind then drop to get a port with nothing listening.
    let port = TcpListener::bind("127.0.0.1:0")
        .unwrap()
        .local_addr()
        .unwrap()
        .port();
    let t = Fetcher::new(policy()).fetch(&format!("http://127.0.0.1:{port}/x"));
    assert_eq!(t.fetch_status, FetchStatus::Timeout);
    assert!(t.detail.is_some());
}

#[test]
fn resumable_corpus() {
    let (base, hits) = serve();
    let urls = [format!("{base}/ok"), format!("{base}/gone"), format!("{base}/ok")];
    let dir = tempfile::tempdir().unwrap();
    let first = fetch_urls(urls.iter().map(String::as_str), &policy(), dir.path()).unwrap();
    assert_eq!(first.texts.len(), 2, "duplicates fetched once");
    assert_eq!(hits.load(Ordering::SeqCst), 2);
    assert_eq!(first.by_status.get("ok"), Some(&1));
    assert_eq!(first.by_status.get("http_error:404"), Some(&1));
    assert!(dir.path().join(format!("{}.txt", url_hash(&urls[0]))).exists());

    let second = fetch_urls(urls.iter().map(String::as_str), &policy(), dir.path()).unwrap();
    assert_eq!(second.reused, 1);
    assert_eq!(second.network_requests, 1, "only the failed URL is retried");
    assert_eq!(hits.load(Ordering::SeqCst), 3);

    let loaded = load_corpus(dir.path()).unwrap();
    assert_eq!(loaded.len(), 2);
    let ok = loaded.iter().find(|t| t.fetch_status == FetchStatus::Ok).unwrap();
    assert_eq!(
        ok.body,
        first
            .texts
            .iter()
            .find(|t| t.fetch_status == FetchStatus::Ok)
            .unwrap()
            .body
    );
}

fn fixture_subset() -> gdelt_kg::ingest::CaseStudySubset {
    let dir = common::fixture_dir();
    gdelt_kg::ingest::IngestBatch::from_files(
        &dir.join("events.export.tsv"),
        &dir.join("mentions.tsv"),
        &dir.join("gkg.tsv"),
        &Default::default(),
    )
    .unwrap()
    .filter(&gdelt_kg::ingest::KeywordFilter::new([
        "Baltimore",
        "bridge",
        "collapse",
        "ship",
    ]))
    .unwrap()
}

#[test]
fn fixture_mode_is_offline_and_byte_identical() {
    let subset = fixture_subset();
    let p = FetchPolicy {
        fixtures: Some(Fixtures::load(&common::fixture_dir()).unwrap()),
        offline: true,
        ..policy()
    };
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let sa = fetch_corpus(&subset, &p, a.path()).unwrap();
    let sb = fetch_corpus(&subset, &p, b.path()).unwrap();
    assert_eq!(sa.network_requests + sb.network_requests, 0);
    assert_eq!(sa.by_status.get("fixture"), Some(&3));
    for entry in std::fs::read_dir(a.path()).unwrap() {
        let name = entry.unwrap().file_name();
        assert_eq!(
            std::fs::read(a.path().join(&name)).unwrap(),
            std::fs::read(b.path().join(&name)).unwrap(),
            "{name:?}"
        );
    }
    assert_eq!(
        std::fs::read_dir(a.path()).unwrap().count(),
        std::fs::read_dir(b.path()).unwrap().count()
    );
}

#[test]
fn offline_without_fixture() {
    let p = FetchPolicy {
        offline: true,
        ..policy()
    };
    let f = Fetcher::new(p);
    assert_eq!(
        f.fetch("https://nowhere.example/x").fetch_status,
        FetchStatus::Offline
    );
    assert_eq!(f.network_requests(), 0);
    let mut empty = fixture_subset();
    empty.articles.clear();
    assert!(fetch_corpus(&empty, &policy(), tempfile::tempdir().unwrap().path()).is_err());
}
