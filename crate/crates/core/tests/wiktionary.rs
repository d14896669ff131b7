mod common;

use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::Duration;

use chrono::{DateTime, Utc};
use common::{golden, wiktionary_fixtures, FixtureServer};
use sensematch::wiktionary::{
    build_corpus, coverage_report, extract_definitions, fetch_definitions, BuildOptions,
    ClientConfig, DirTransport, WiktionaryClient,
};
use sensematch::{Error, Language};

fn dir_client() -> WiktionaryClient {
    let mut cfg = ClientConfig {
        requests_per_second: 1000.0,
        ..ClientConfig::default()
    };
    for lang in Language::ALL {
        cfg.base_urls.insert(lang, format!("dir://{}", lang.code()));
    }
    WiktionaryClient::new(DirTransport::new(wiktionary_fixtures()), cfg).unwrap()
}

fn fixed_time() -> DateTime<Utc> {
    DateTime::parse_from_rfc3339("2024-05-01T12:00:00Z")
        .unwrap()
        .with_timezone(&Utc)
}

#[test]
fn editions_match_golden_files() {
    let client = dir_client();
    for (lang, title) in [
        (Language::Fi, "kuusi"),
        (Language::Ru, "перо"),
        (Language::De, "Feder"),
    ] {
        let defs: Vec<String> = fetch_definitions(&client, lang, title)
            .unwrap()
            .into_iter()
            .map(|e| e.definition)
            .collect();
        assert_eq!(defs, golden(lang.code(), title), "{lang}:{title}");
        for d in &defs {
            for bad in ["{{", "}}", "[[", "]]"] {
                assert!(!d.contains(bad), "{d:?} contains {bad}");
            }
        }
    }
}

#[test]
fn missing_page_and_missing_section_are_empty() {
    let client = dir_client();
    assert!(fetch_definitions(&client, Language::Fi, "qwzxvbn")
        .unwrap()
        .is_empty());
    assert!(fetch_definitions(&client, Language::Fi, "lause")
        .unwrap()
        .is_empty());
}

#[test]
fn section_without_definitions_is_an_extraction_error() {
    let client = dir_client();
    match fetch_definitions(&client, Language::De, "Haus") {
        Err(Error::Extraction { title, .. }) => assert_eq!(title, "Haus"),
        other => panic!("expected extraction error, got {other:?}"),
    }
}

#[test]
fn second_fetch_hits_cache() {
    let client = dir_client();
    let first = fetch_definitions(&client, Language::Ru, "перо").unwrap();
    let n = client.network_requests();
    let second = fetch_definitions(&client, Language::Ru, "перо").unwrap();
    assert_eq!(first, second);
    assert_eq!(client.network_requests(), n);
}

#[test]
fn extractor_works_on_raw_html() {
    let html = std::fs::read_to_string(wiktionary_fixtures().join("fi/kuusi.html")).unwrap();
    let defs = extract_definitions(Language::Fi, &html, "kuusi")
        .unwrap()
        .unwrap();
    assert_eq!(defs.len(), 3);
}

#[test]
fn http_fetch_respects_rate_limit() {
    let server = FixtureServer::start(wiktionary_fixtures());
    let client = WiktionaryClient::http(server.config(10.0)).unwrap();
    let words: Vec<(Language, String)> = [
        (Language::Fi, "kuusi"),
        (Language::Ru, "перо"),
        (Language::De, "Feder"),
        (Language::Fi, "lause"),
        (Language::Fi, "olematon"),
    ]
    .iter()
    .map(|(l, w)| (*l, w.to_string()))
    .collect();
    let dir = tempfile::tempdir().unwrap();
    let opts = BuildOptions {
        workers: 4,
        ..BuildOptions::default()
    };
    let out = build_corpus(&words, &client, dir.path().join("c.tsv"), &opts).unwrap();
    assert!(out.failures.is_empty());
    assert_eq!(out.fetched, 5);
    let log = client.request_log();
    assert_eq!(log.len(), 5);
    let mut sorted = log.clone();
    sorted.sort();
    for w in sorted.windows(2) {
        assert!(w[1] - w[0] >= Duration::from_millis(100) - Duration::from_micros(100));
    }
    assert_eq!(server.hits().len(), 5);
    let defs = out.corpus.definitions(Language::Ru, "перо").unwrap();
    assert_eq!(defs.len(), 3);
    assert!(defs[0].source_url.starts_with(&server.base));
}

#[test]
fn transient_errors_are_retried() {
    let server = FixtureServer::start(wiktionary_fixtures());
    server.fail_next("kuusi", 2);
    let client = WiktionaryClient::http(server.config(100.0)).unwrap();
    assert_eq!(
        fetch_definitions(&client, Language::Fi, "kuusi")
            .unwrap()
            .len(),
        3
    );
    assert_eq!(client.network_requests(), 3);

    server.fail_next("Feder", 10);
    assert!(matches!(
        fetch_definitions(&client, Language::De, "Feder"),
        Err(Error::Transport { .. })
    ));
}

#[test]
fn batch_failures_are_aggregated() {
    let server = FixtureServer::start(wiktionary_fixtures());
    server.fail_next("Feder", 100);
    let client = WiktionaryClient::http(server.config(100.0)).unwrap();
    let words = vec![
        (Language::De, "Feder".to_string()),
        (Language::Fi, "kuusi".to_string()),
        (Language::De, "Haus".to_string()),
    ];
    let dir = tempfile::tempdir().unwrap();
    let out = build_corpus(
        &words,
        &client,
        dir.path().join("c.tsv"),
        &BuildOptions::default(),
    )
    .unwrap();
    assert_eq!(out.fetched, 1);
    assert_eq!(out.failures.len(), 2);
    assert!(out.corpus.contains(Language::Fi, "kuusi"));
    assert!(!out.corpus.contains(Language::De, "Feder"));
}

fn word_list() -> Vec<(Language, String)> {
    [
        (Language::Fi, "kuusi"),
        (Language::Fi, "kuusi"),
        (Language::Ru, "перо"),
        (Language::Fi, "lause"),
        (Language::De, "Feder"),
        (Language::De, "Nichtwort"),
        (Language::Ru, "перо"),
    ]
    .iter()
    .map(|(l, w)| (*l, w.to_string()))
    .collect()
}

#[test]
fn duplicates_fetch_once_and_rebuild_is_idempotent() {
    let client = dir_client();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.tsv");
    let opts = BuildOptions {
        fetched_at: Some(fixed_time()),
        ..BuildOptions::default()
    };
    let out = build_corpus(&word_list(), &client, &path, &opts).unwrap();
    assert_eq!(out.fetched, 5);
    assert_eq!(client.network_requests(), 5);
    let bytes = std::fs::read(&path).unwrap();

    let again = build_corpus(&word_list(), &dir_client(), &path, &opts).unwrap();
    assert_eq!(again.fetched, 0);
    assert_eq!(again.skipped, 5);
    assert_eq!(std::fs::read(&path).unwrap(), bytes);
    assert_eq!(again.corpus, out.corpus);
}

#[test]
fn interrupted_build_resumes_to_identical_corpus() {
    let server = FixtureServer::start(wiktionary_fixtures());
    let opts = BuildOptions {
        workers: 2,
        fetched_at: Some(fixed_time()),
        ..BuildOptions::default()
    };
    let dir = tempfile::tempdir().unwrap();

    let full = dir.path().join("full.tsv");
    let client = WiktionaryClient::http(server.config(200.0)).unwrap();
    build_corpus(&word_list(), &client, &full, &opts).unwrap();

    // Cancelled after the first round, then a torn final write.
    let partial = dir.path().join("partial.tsv");
    let cancel = Arc::new(AtomicBool::new(false));
    let first: Vec<_> = word_list().into_iter().take(3).collect();
    let client = WiktionaryClient::http(server.config(200.0)).unwrap();
    build_corpus(&first, &client, &partial, &opts).unwrap();
    cancel.store(true, Ordering::SeqCst);
    let stopped = build_corpus(
        &word_list(),
        &client,
        &partial,
        &BuildOptions {
            cancel: Some(cancel),
            ..opts.clone()
        },
    )
    .unwrap();
    assert!(stopped.cancelled);
    let mut f = std::fs::OpenOptions::new()
        .append(true)
        .open(&partial)
        .unwrap();
    std::io::Write::write_all(&mut f, b"de\tFeder\tHorngeb").unwrap();
    drop(f);

    let client = WiktionaryClient::http(server.config(200.0)).unwrap();
    let resumed = build_corpus(&word_list(), &client, &partial, &opts).unwrap();
    assert_eq!(resumed.skipped, 2);
    assert_eq!(client.network_requests(), 3);
    assert_eq!(
        std::fs::read(&partial).unwrap(),
        std::fs::read(&full).unwrap()
    );
}

#[test]
fn coverage_of_fixture_harvest() {
    let client = dir_client();
    let dir = tempfile::tempdir().unwrap();
    let out = build_corpus(
        &word_list(),
        &client,
        dir.path().join("c.tsv"),
        &BuildOptions::default(),
    )
    .unwrap();
    let report = coverage_report(&out.corpus, &word_list());
    assert_eq!(report.per_language.len(), 3);
    let fi = report.per_language[&Language::Fi];
    assert_eq!(
        (fi.requested, fi.with_definitions, fi.total_definitions),
        (2, 1, 3)
    );
    assert!((fi.coverage_percent() - 50.0).abs() < 1e-12);
    assert!(report.to_tsv().starts_with("language\trequested"));
}

#[test]
fn empty_word_list_gives_empty_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let out = build_corpus(
        &[],
        &dir_client(),
        dir.path().join("c.tsv"),
        &BuildOptions::default(),
    )
    .unwrap();
    assert!(out.corpus.is_empty());
}
