//! Random generators shared by the integration and acceptance tests.
#![allow(dead_code)]

use std::collections::BTreeSet;

use chrono::{NaiveDate, NaiveDateTime};
use gdelt_kg::ingest::{
    ArticleRecord, CaseStudySubset, EventRecord, KeywordFilter, LocationEntry, MentionRecord, Provenance,
    UnresolvedRefs,
};
use gdelt_kg::kg::{Edge, EdgeLabel, KnowledgeGraph, Node, NodeType, Ontology};
use gdelt_kg::vector::{Chunk, EmbeddingVector, VectorStore};
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

pub fn fixture_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/baltimore")
}

// Small vocabularies so that values collide across rows, with case and
// whitespace variants that normalize to the same label.
pub const ACTORS: &[&str] = &[
    "BALTIMORE",
    "Baltimore",
    "  baltimore ",
    "UNITED STATES",
    "United  States",
    "COAST GUARD",
    "MARYLAND",
    "PORT AUTHORITY",
];
pub const LOCATIONS: &[&str] = &[
    "Baltimore, Maryland, United States",
    "baltimore,  maryland, united states",
    "Patapsco River, Maryland, United States",
    "Singapore",
    "Colombo, Western, Sri Lanka",
];
pub const THEMES: &[&str] = &[
    "MARITIME_INCIDENT",
    "MARITIME",
    "MANMADE_DISASTER",
    "TAX_FNCACT",
    "WB_137_WATER",
    "maritime_incident",
    "CRISISLEX_T03_DEAD",
];
pub const PERSONS: &[&str] = &[
    "Brandon Scott",
    "brandon  scott",
    "Niki Fennoy",
    "Wes Moore",
    "Joe Biden",
];
pub const ORGS: &[&str] = &["Coast Guard", "Synergy Marine Group", "NTSB", "coast guard"];
pub const SOURCES: &[&str] = &[
    "cnn.com",
    "CNN.com",
    "bbc.co.uk",
    "thepeninsulaqatar.com",
    "wbal.com",
];
pub const QUOTES: &[&str] = &["We are heartbroken", "The ship lost power", "we are  heartbroken"];
pub const WORDS: &[&str] = &[
    "bridge",
    "ship",
    "Dali",
    "collapse",
    "river",
    "port",
    "crew",
    "Key",
    "Francis",
    "Scott",
    "mayor",
    "container",
    "Patapsco",
    "news",
    "report",
    "closure",
];

pub fn pick<'a>(rng: &mut StdRng, xs: &[&'a str]) -> &'a str {
    xs.choose(rng).copied().expect("non-empty vocabulary")
}

fn maybe(rng: &mut StdRng, xs: &[&str], p: f64) -> Option<String> {
    rng.gen_bool(p).then(|| pick(rng, xs).to_string())
}

fn sample(rng: &mut StdRng, xs: &[&str], max: usize) -> Vec<String> {
    let n = rng.gen_range(0..=max);
    (0..n).map(|_| pick(rng, xs).to_string()).collect()
}

pub fn day(rng: &mut StdRng) -> NaiveDate {
    NaiveDate::from_ymd_opt(2024, 3, rng.gen_range(24..=27)).unwrap()
}

pub fn timestamp(rng: &mut StdRng) -> NaiveDateTime {
    day(rng)
        .and_hms_opt(rng.gen_range(0..24), rng.gen_range(0..60), rng.gen_range(0..60))
        .unwrap()
}

pub fn event(rng: &mut StdRng, id: i64) -> EventRecord {
    let geo = maybe(rng, LOCATIONS, 0.8);
    EventRecord {
        global_event_id: id,
        day: day(rng),
        actor1_name: maybe(rng, ACTORS, 0.8),
        actor1_code: maybe(rng, &["USA", "GOV", "MIL"], 0.5),
        actor2_name: maybe(rng, ACTORS, 0.5),
        actor2_code: maybe(rng, &["USA", "BUS"], 0.3),
        event_code: pick(rng, &["010", "043", "190", "1823"]).to_string(),
        goldstein_scale: f64::from(rng.gen_range(-100..=100)) / 10.0,
        num_mentions: rng.gen_range(1..50),
        avg_tone: f64::from(rng.gen_range(-1000..=1000)) / 100.0,
        action_geo_lat: geo.as_ref().map(|_| 39.2),
        action_geo_lon: geo.as_ref().map(|_| -76.5),
        action_geo_fullname: geo,
        source_url: format!("https://example.org/event/{id}"),
        geo_flagged: false,
    }
}

pub fn doc_url(i: usize) -> String {
    format!("https://news{}.example.com/story/{i}", i % 7)
}

pub fn article(rng: &mut StdRng, i: usize) -> ArticleRecord {
    let locations = sample(rng, LOCATIONS, 3)
        .into_iter()
        .map(|fullname| LocationEntry {
            fullname,
            lat: Some(39.0),
            lon: None,
        })
        .collect();
    ArticleRecord {
        gkg_record_id: format!("20240326000000-{i}"),
        date: timestamp(rng),
        source_common_name: pick(rng, SOURCES).to_string(),
        document_identifier: doc_url(i),
        themes: sample(rng, THEMES, 5),
        persons: sample(rng, PERSONS, 3),
        organizations: sample(rng, ORGS, 2),
        locations,
        tone: rng.gen_bool(0.7).then(|| -2.5),
        quotations: sample(rng, QUOTES, 2),
    }
}

pub fn mention(rng: &mut StdRng, event_id: i64, doc: &str) -> MentionRecord {
    let t = timestamp(rng);
    let source = pick(rng, SOURCES).to_string();
    let mut raw = vec![String::new(); 16];
    raw[0] = event_id.to_string();
    raw[2] = t.format("%Y%m%d%H%M%S").to_string();
    raw[4] = source.clone();
    raw[5] = doc.to_string();
    raw[11] = "50".into();
    raw[13] = "-1.5".into();
    MentionRecord {
        global_event_id: event_id,
        mention_time: t,
        mention_source_name: source,
        mention_identifier: doc.to_string(),
        confidence: 50,
        mention_doc_tone: -1.5,
        raw_fields: raw,
    }
}

fn subset_of(
    events: Vec<EventRecord>,
    mentions: Vec<MentionRecord>,
    articles: Vec<ArticleRecord>,
) -> CaseStudySubset {
    let unresolved = UnresolvedRefs::compute(&events, &mentions, &articles);
    CaseStudySubset {
        events,
        mentions,
        articles,
        filter_spec: KeywordFilter::new(["synthetic"]),
        provenance: Provenance::default(),
        unresolved,
        duplicates: Vec::new(),
    }
}

/// A closed subset with distinct keys: every mention references an event
/// and an article present in the subset.
pub fn closed_subset(rng: &mut StdRng) -> CaseStudySubset {
    let n_events = rng.gen_range(1..=8);
    let n_articles = rng.gen_range(1..=8);
    let events: Vec<EventRecord> = (0..n_events).map(|i| event(rng, 1_160_000_000 + i)).collect();
    let articles: Vec<ArticleRecord> = (0..n_articles).map(|i| article(rng, i)).collect();
    let mut keys = BTreeSet::new();
    for _ in 0..rng.gen_range(0..=20) {
        keys.insert((rng.gen_range(0..n_events), rng.gen_range(0..n_articles)));
    }
    let mentions = keys
        .into_iter()
        .map(|(e, a)| mention(rng, 1_160_000_000 + e, &doc_url(a)))
        .collect();
    subset_of(events, mentions, articles)
}

/// Raw tables with some mentions pointing at rows that do not exist.
pub fn open_tables(rng: &mut StdRng) -> (Vec<EventRecord>, Vec<MentionRecord>, Vec<ArticleRecord>) {
    let n_events = rng.gen_range(1..=10);
    let n_articles = rng.gen_range(1..=10);
    let events: Vec<EventRecord> = (0..n_events).map(|i| event(rng, 1_160_000_000 + i)).collect();
    let articles: Vec<ArticleRecord> = (0..n_articles).map(|i| article(rng, i)).collect();
    let mut keys = BTreeSet::new();
    for _ in 0..rng.gen_range(0..=30) {
        // Indices past the generated rows give unresolved references.
        keys.insert((rng.gen_range(0..n_events + 2), rng.gen_range(0..n_articles + 2)));
    }
    let mentions = keys
        .into_iter()
        .map(|(e, a)| mention(rng, 1_160_000_000 + e, &doc_url(a)))
        .collect();
    (events, mentions, articles)
}

/// Graph with up to `max_edges` edges over a few typed nodes, with labels
/// drawn from a small vocabulary so keyword hits are frequent.
pub fn random_graph(rng: &mut StdRng, max_edges: usize) -> KnowledgeGraph {
    let ontology = Ontology::default();
    let relations: Vec<_> = ontology.relations().collect();
    let mut g = KnowledgeGraph::new(ontology);
    let n_edges = rng.gen_range(0..=max_edges);
    for i in 0..n_edges {
        let r = relations.choose(rng).unwrap();
        let label = |rng: &mut StdRng, t: NodeType| -> String {
            if t.is_row_type() {
                format!("{} {}", pick(rng, WORDS), rng.gen_range(0..30))
            } else {
                let n = rng.gen_range(1..=3);
                (0..n).map(|_| pick(rng, WORDS)).collect::<Vec<_>>().join(" ")
            }
        };
        let s = label(rng, r.source);
        let t = label(rng, r.target);
        let sid = endpoint(&mut g, r.source, &s);
        let tid = endpoint(&mut g, r.target, &t);
        let mut e = Edge::new(sid, r.label.clone(), tid);
        if i % 5 == 0 {
            e.attrs.insert(
                "weight".into(),
                gdelt_kg::kg::AttrValue::Float(f64::from(rng.gen_range(0..100)) / 8.0),
            );
        }
        g.add_edge(e).unwrap();
    }
    g
}

fn endpoint(g: &mut KnowledgeGraph, t: NodeType, label: &str) -> gdelt_kg::kg::NodeId {
    if t.is_row_type() {
        let mut n = Node::value(t, label);
        n.id = gdelt_kg::kg::NodeId::row(t, label);
        n.attrs
            .insert("key".into(), gdelt_kg::kg::AttrValue::Text(label.to_string()));
        let id = n.id.clone();
        g.add_node(n).unwrap();
        id
    } else {
        g.ensure_value_node(t, label).unwrap()
    }
}

pub fn random_vector(rng: &mut StdRng, dim: usize) -> Vec<f32> {
    // Coarse grid values make exact distance ties common.
    (0..dim)
        .map(|_| f32::from(rng.gen_range(-4i8..=4)) / 2.0)
        .collect()
}

pub fn random_store(rng: &mut StdRng) -> VectorStore {
    let dim = rng.gen_range(1..=64);
    let n = rng.gen_range(1..=500);
    let mut store = VectorStore::new("test-embedder", dim);
    for i in 0..n {
        let chunk = Chunk {
            document_identifier: doc_url(rng.gen_range(0..20)),
            chunk_index: i,
            text: format!("chunk {i}"),
            token_count: 2,
        };
        store
            .push(chunk, EmbeddingVector::new(random_vector(rng, dim)).unwrap())
            .unwrap();
    }
    store
}

pub fn random_document(rng: &mut StdRng) -> String {
    let n = rng.gen_range(0..=2500);
    let mut s = String::new();
    for _ in 0..n {
        s.push_str(pick(rng, WORDS));
        s.push_str(pick(rng, &[" ", "  ", "\n", "\t", " \n\n "]));
    }
    s
}

pub fn edge_label(s: &str) -> EdgeLabel {
    EdgeLabel::new(s)
}

/// Renders an event as a 61-column export row.
pub fn event_line(e: &EventRecord) -> String {
    let mut f = vec![String::new(); 61];
    let opt = |v: &Option<String>| v.clone().unwrap_or_default();
    f[0] = e.global_event_id.to_string();
    f[1] = e.day.format("%Y%m%d").to_string();
    f[5] = opt(&e.actor1_code);
    f[6] = opt(&e.actor1_name);
    f[15] = opt(&e.actor2_code);
    f[16] = opt(&e.actor2_name);
    f[26] = e.event_code.clone();
    f[30] = e.goldstein_scale.to_string();
    f[31] = e.num_mentions.to_string();
    f[34] = e.avg_tone.to_string();
    f[52] = opt(&e.action_geo_fullname);
    f[56] = e.action_geo_lat.map(|v| v.to_string()).unwrap_or_default();
    f[57] = e.action_geo_lon.map(|v| v.to_string()).unwrap_or_default();
    f[59] = "20240326000000".into();
    f[60] = e.source_url.clone();
    f.join("\t")
}

pub fn mention_line(m: &MentionRecord) -> String {
    m.raw_row()
}

/// Renders an article as a 27-column GKG row using the V2 list layouts.
pub fn gkg_line(a: &ArticleRecord) -> String {
    let mut f = vec![String::new(); 27];
    let coded = |xs: &[String]| {
        xs.iter()
            .enumerate()
            .map(|(i, x)| format!("{x},{}", i * 17))
            .collect::<Vec<_>>()
            .join(";")
    };
    f[0] = a.gkg_record_id.clone();
    f[1] = a.date.format("%Y%m%d%H%M%S").to_string();
    f[3] = a.source_common_name.clone();
    f[4] = a.document_identifier.clone();
    f[8] = coded(&a.themes);
    f[10] = a
        .locations
        .iter()
        .map(|l| {
            let c = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
            format!("3#{}#US#USMD#MD510#{}#{}#1#10", l.fullname, c(l.lat), c(l.lon))
        })
        .collect::<Vec<_>>()
        .join(";");
    f[12] = coded(&a.persons);
    f[14] = coded(&a.organizations);
    f[15] = a.tone.map(|t| format!("{t},1,2,3,4,5,6")).unwrap_or_default();
    f[22] = a
        .quotations
        .iter()
        .map(|q| format!("10|20|said|{q}"))
        .collect::<Vec<_>>()
        .join("#");
    f.join("\t")
}

/// Closed-form expectations for a built graph, computed from the records
/// alone. The first row with a given key wins.
#[derive(Debug, PartialEq, Eq)]
pub struct CountOracle {
    pub row_nodes: usize,
    pub value_nodes: usize,
    pub star_edges: usize,
    pub structural_edges: usize,
}

impl CountOracle {
    pub fn nodes(&self) -> usize {
        self.row_nodes + self.value_nodes
    }

    pub fn edges(&self) -> usize {
        self.star_edges + self.structural_edges
    }
}

fn norm(label: &str) -> String {
    label
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

pub fn count_oracle(s: &CaseStudySubset) -> CountOracle {
    let mut values: BTreeSet<(&str, String)> = BTreeSet::new();
    let mut star_edges = 0;
    let mut add = |kind: &'static str, v: &str, values: &mut BTreeSet<(&str, String)>| {
        if !v.trim().is_empty() {
            values.insert((kind, norm(v)));
            star_edges += 1;
        }
    };
    let mut events = BTreeSet::new();
    for e in &s.events {
        if !events.insert(e.global_event_id) {
            continue;
        }
        add("date", &e.day.format("%Y-%m-%d").to_string(), &mut values);
        for a in [&e.actor1_name, &e.actor2_name].into_iter().flatten() {
            add("actor", a, &mut values);
        }
        add("event_code", &e.event_code, &mut values);
        if let Some(g) = &e.action_geo_fullname {
            add("location", g, &mut values);
        }
    }
    let mut docs = BTreeSet::new();
    for a in &s.articles {
        if !docs.insert(a.document_identifier.clone()) {
            continue;
        }
        add("date", &a.date.format("%Y-%m-%d").to_string(), &mut values);
        add("source", &a.source_common_name, &mut values);
        for (kind, list) in [
            ("theme", &a.themes),
            ("person", &a.persons),
            ("organization", &a.organizations),
            ("quotation", &a.quotations),
        ] {
            for v in list {
                add(kind, v, &mut values);
            }
        }
        for l in &a.locations {
            add("location", &l.fullname, &mut values);
        }
    }
    let mut mentions = BTreeSet::new();
    let mut structural = 0;
    for m in &s.mentions {
        if !mentions.insert(m.key()) {
            continue;
        }
        structural += usize::from(events.contains(&m.global_event_id));
        structural += usize::from(docs.contains(&m.mention_identifier));
    }
    CountOracle {
        row_nodes: events.len() + docs.len() + mentions.len(),
        value_nodes: values.len(),
        star_edges,
        structural_edges: structural,
    }
}

/// Node and edge multisets as sorted JSON lines, for exact comparison.
pub fn graph_multisets(g: &KnowledgeGraph) -> (Vec<String>, Vec<String>) {
    let mut nodes: Vec<String> = g.nodes().map(|n| serde_json::to_string(n).unwrap()).collect();
    let mut edges: Vec<String> = g
        .edges()
        .iter()
        .map(|e| serde_json::to_string(e).unwrap())
        .collect();
    nodes.sort();
    edges.sort();
    (nodes, edges)
}

/// Brute-force keyword scan over rendered triple sentences.
pub fn brute_search(g: &KnowledgeGraph, keywords: &[&str]) -> BTreeSet<usize> {
    let fold = |s: &str| s.to_lowercase().replace('_', " ");
    let needles: Vec<String> = keywords
        .iter()
        .map(|k| k.trim())
        .filter(|k| !k.is_empty())
        .map(fold)
        .collect();
    gdelt_kg::query::triples_to_sentences(g)
        .into_iter()
        .filter(|t| {
            let s = fold(&t.sentence);
            needles.iter().any(|n| s.contains(n.as_str()))
        })
        .map(|t| t.edge.0)
        .collect()
}

pub fn random_keywords(rng: &mut StdRng) -> Vec<&'static str> {
    let n = rng.gen_range(1..=3);
    (0..n)
        .map(|_| {
            if rng.gen_bool(0.2) {
                pick(rng, &["has_theme", "MENTIONED_IN", "published by", "zzz-absent"])
            } else {
                pick(rng, WORDS)
            }
        })
        .collect()
}

pub fn fixture_subset() -> CaseStudySubset {
    let dir = fixture_dir();
    gdelt_kg::ingest::IngestBatch::from_files(
        &dir.join("events.export.tsv"),
        &dir.join("mentions.tsv"),
        &dir.join("gkg.tsv"),
        &Default::default(),
    )
    .unwrap()
    .filter(&KeywordFilter::new(["Baltimore", "bridge", "collapse", "ship"]))
    .unwrap()
}

/// The fixture graph with the `crosses` extension and its extra triple.
pub fn fixture_kg() -> KnowledgeGraph {
    let dir = fixture_dir();
    let mut ontology = Ontology::default();
    ontology.extend_from_file(&dir.join("ontology_ext.toml")).unwrap();
    let opts = gdelt_kg::kg::BuildOptions {
        ontology,
        extra_triples: gdelt_kg::kg::load_extra_triples(&dir.join("extra_triples.tsv")).unwrap(),
        ..Default::default()
    };
    gdelt_kg::kg::build_dkg(&fixture_subset(), &opts).unwrap().0
}

pub fn fixture_corpus() -> Vec<gdelt_kg::fetch::ArticleText> {
    let policy = gdelt_kg::fetch::FetchPolicy {
        fixtures: Some(gdelt_kg::fetch::Fixtures::load(&fixture_dir()).unwrap()),
        offline: true,
        ..Default::default()
    };
    let f = gdelt_kg::fetch::Fetcher::new(policy);
    fixture_subset()
        .articles
        .iter()
        .map(|a| f.fetch(&a.document_identifier))
        .collect()
}

pub fn fixture_store(embedder: &dyn gdelt_kg::llm::Embedder) -> VectorStore {
    let opts = gdelt_kg::vector::StoreOptions {
        max_tokens: 40,
        ..Default::default()
    };
    gdelt_kg::vector::build_store(
        &fixture_corpus(),
        embedder,
        &gdelt_kg::vector::WhitespaceTokenizer,
        &opts,
    )
    .unwrap()
    .0
}

/// Tukey five-number summary computed directly: sort, then medians of the
/// two halves with the middle element left out for odd counts.
pub fn tukey_oracle(values: &[f64]) -> [f64; 5] {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let med = |s: &[f64]| -> f64 {
        let n = s.len();
        if n % 2 == 1 {
            s[n / 2]
        } else {
            (s[n / 2 - 1] + s[n / 2]) / 2.0
        }
    };
    let n = v.len();
    let half = n / 2;
    let (lo, hi) = if n == 1 {
        (&v[..], &v[..])
    } else {
        (&v[..half], &v[n - half..])
    };
    [v[0], med(lo), med(&v), med(hi), v[n - 1]]
}

/// Distance in units in the last place between two finite doubles.
pub fn ulps(a: f64, b: f64) -> u64 {
    let key = |x: f64| {
        let bits = x.to_bits() as i64;
        if bits < 0 {
            i64::MIN - bits
        } else {
            bits
        }
    };
    key(a).abs_diff(key(b))
}

fn s(p: &std::path::Path) -> String {
    p.display().to_string()
}

/// Runs ingest through eval on the bundled fixture with stub clients via
/// the CLI entry point. Returns the exit code of each step.
pub fn run_offline_pipeline(work: &std::path::Path) -> Vec<(&'static str, i32)> {
    let fx = fixture_dir();
    let cli = |args: Vec<String>| {
        let mut argv = vec!["gdelt-kg".to_string(), "--stub".to_string()];
        argv.extend(args);
        gdelt_kg::cli::run(argv)
    };
    let w = |name: &str| s(&work.join(name));
    let f = |name: &str| s(&fx.join(name));
    let steps: Vec<(&'static str, Vec<String>)> = vec![
        (
            "ingest",
            vec![
                "ingest".into(),
                "--events".into(),
                f("events.export.tsv"),
                "--mentions".into(),
                f("mentions.tsv"),
                "--gkg".into(),
                f("gkg.tsv"),
                "--keywords".into(),
                "Baltimore,bridge,collapse,ship".into(),
                "--out".into(),
                w("subset"),
            ],
        ),
        (
            "fetch",
            vec![
                "fetch".into(),
                "--subset".into(),
                w("subset"),
                "--out".into(),
                w("corpus"),
                "--fixtures".into(),
                s(&fx),
                "--offline".into(),
            ],
        ),
        (
            "build-kg",
            vec![
                "build-kg".into(),
                "--subset".into(),
                w("subset"),
                "--out".into(),
                w("graph.kg"),
                "--ontology-ext".into(),
                f("ontology_ext.toml"),
                "--extra-triples".into(),
                f("extra_triples.tsv"),
            ],
        ),
        (
            "index",
            vec![
                "index".into(),
                "--corpus".into(),
                w("corpus"),
                "--out".into(),
                w("store.jsonl"),
                "--max-tokens".into(),
                "40".into(),
            ],
        ),
        (
            "bench",
            vec![
                "bench".into(),
                "--kg".into(),
                w("graph.kg"),
                "--store".into(),
                w("store.jsonl"),
                "--out".into(),
                w("run"),
            ],
        ),
        (
            "eval",
            vec![
                "eval".into(),
                "--run".into(),
                w("run"),
                "--out".into(),
                w("eval"),
                "--format".into(),
                "table_text,csv,json,boxplot_svg".into(),
            ],
        ),
    ];
    let mut codes = Vec::new();
    for (name, args) in steps {
        let code = cli(args);
        codes.push((name, code));
        if code != 0 {
            break;
        }
    }
    codes
}

/// Every file under `dir` as (relative path, bytes), sorted by path.
pub fn tree_bytes(dir: &std::path::Path) -> Vec<(String, Vec<u8>)> {
    fn walk(root: &std::path::Path, dir: &std::path::Path, out: &mut Vec<(String, Vec<u8>)>) {
        for entry in std::fs::read_dir(dir).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                walk(root, &p, out);
            } else {
                let rel = p.strip_prefix(root).unwrap().display().to_string();
                out.push((rel, std::fs::read(&p).unwrap()));
            }
        }
    }
    let mut out = Vec::new();
    walk(dir, dir, &mut out);
    out.sort();
    out
}
