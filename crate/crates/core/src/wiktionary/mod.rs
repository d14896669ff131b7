//! Candidate definitions harvested from the fi/ru/de Wiktionary editions.
//!
//! Pages are fetched through a [`WiktionaryClient`] (shared rate limiter,
//! retries, in-memory cache) and parsed by one extractor per edition. Harvests
//! persist to an append-only TSV so an interrupted run resumes where it
//! stopped; a fetched form without definitions is recorded as a sentinel row
//! with an empty definition.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;
use std::fs::{File, OpenOptions};
use std::io::Write as _;
use std::path::Path;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread;

use chrono::{DateTime, SecondsFormat, Utc};
use log::warn;

use crate::error::{Error, Result};
use crate::lang::Language;

mod client;
mod extract;

pub use client::{
    ClientConfig, DirTransport, HttpResponse, HttpTransport, RateLimiter, Transport,
    WiktionaryClient, DIR_SCHEME,
};
pub use extract::extract_definitions;

use client::Page;

pub const CACHE_COLUMNS: [&str; 5] = [
    "language",
    "surface_form",
    "definition",
    "source_url",
    "fetched_at",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DefinitionEntry {
    pub language: Language,
    pub surface_form: String,
    pub definition: String,
    pub source_url: String,
    pub fetched_at: DateTime<Utc>,
}

/// Harvested definitions keyed by (language, surface form), in harvest order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DefinitionCorpus {
    forms: Vec<((Language, String), Vec<DefinitionEntry>)>,
    index: HashMap<(Language, String), usize>,
}

impl DefinitionCorpus {
    pub fn new() -> Self {
        Self::default()
    }

    /// Record the outcome of fetching one form. Entries are appended if the
    /// form is already present.
    pub fn insert(&mut self, language: Language, form: &str, entries: Vec<DefinitionEntry>) {
        let key = (language, form.to_string());
        match self.index.get(&key) {
            Some(&i) => self.forms[i].1.extend(entries),
            None => {
                self.index.insert(key.clone(), self.forms.len());
                self.forms.push((key, entries));
            }
        }
    }

    /// `None` if the form was never fetched; `Some(&[])` if it was fetched
    /// and yielded nothing.
    pub fn definitions(&self, language: Language, form: &str) -> Option<&[DefinitionEntry]> {
        self.index
            .get(&(language, form.to_string()))
            .map(|&i| self.forms[i].1.as_slice())
    }

    pub fn contains(&self, language: Language, form: &str) -> bool {
        self.index.contains_key(&(language, form.to_string()))
    }

    pub fn entries(&self) -> impl Iterator<Item = &DefinitionEntry> {
        self.forms.iter().flat_map(|(_, e)| e.iter())
    }

    pub fn forms(&self) -> impl Iterator<Item = (Language, &str)> {
        self.forms.iter().map(|((l, f), _)| (*l, f.as_str()))
    }

    pub fn form_count(&self) -> usize {
        self.forms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forms.is_empty()
    }

    /// Read a cache file. A trailing line without a newline is an
    /// interrupted write and is ignored.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let complete = match text.rfind('\n') {
            Some(i) => &text[..=i],
            None => "",
        };
        let mut corpus = DefinitionCorpus::new();
        for (n, line) in complete.lines().enumerate() {
            let line_no = n + 1;
            let parse_err = |message: String| Error::Parse {
                path: path.to_path_buf(),
                line: line_no,
                message,
            };
            if n == 0 {
                if line.split('\t').collect::<Vec<_>>() != CACHE_COLUMNS {
                    return Err(parse_err(format!(
                        "expected header {:?}",
                        CACHE_COLUMNS.join("\t")
                    )));
                }
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            let [lang, form, definition, url, at] = fields[..] else {
                return Err(parse_err(format!(
                    "expected 5 fields, found {}",
                    fields.len()
                )));
            };
            let language: Language = lang.parse().map_err(|e: Error| parse_err(e.to_string()))?;
            let fetched_at = DateTime::parse_from_rfc3339(at)
                .map_err(|e| parse_err(format!("bad timestamp {at:?}: {e}")))?
                .with_timezone(&Utc);
            let entries = if definition.is_empty() {
                Vec::new()
            } else {
                vec![DefinitionEntry {
                    language,
                    surface_form: form.to_string(),
                    definition: definition.to_string(),
                    source_url: url.to_string(),
                    fetched_at,
                }]
            };
            corpus.insert(language, form, entries);
        }
        Ok(corpus)
    }
}

fn timestamp(t: &DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::Secs, true)
}

fn check_field(value: &str, what: &str) -> Result<()> {
    if value.contains(['\t', '\n', '\r']) {
        return Err(Error::Serialization(format!(
            "{what} {value:?} contains a tab or newline"
        )));
    }
    Ok(())
}

/// Cache rows for one fetched form: one per definition, or a single sentinel.
fn cache_rows(
    language: Language,
    form: &str,
    url: &str,
    at: &DateTime<Utc>,
    entries: &[DefinitionEntry],
) -> Result<String> {
    check_field(form, "surface form")?;
    let mut out = String::new();
    if entries.is_empty() {
        let _ = writeln!(out, "{language}\t{form}\t\t{url}\t{}", timestamp(at));
    }
    for e in entries {
        check_field(&e.definition, "definition")?;
        check_field(&e.source_url, "source url")?;
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}",
            e.language,
            e.surface_form,
            e.definition,
            e.source_url,
            timestamp(&e.fetched_at)
        );
    }
    Ok(out)
}

/// All definitions of `form` in the `language` section of that language's
/// edition. A missing page or a page without that language yields an empty
/// list. Repeated calls are answered from the client's cache.
pub fn fetch_definitions(
    client: &WiktionaryClient,
    language: Language,
    form: &str,
) -> Result<Vec<DefinitionEntry>> {
    fetch_at(client, language, form, None)
}

fn fetch_at(
    client: &WiktionaryClient,
    language: Language,
    form: &str,
    at: Option<DateTime<Utc>>,
) -> Result<Vec<DefinitionEntry>> {
    if let Some(hit) = client.cached(language, form) {
        return Ok(hit);
    }
    let entries = match client.fetch_page(language, form)? {
        Page::Missing => Vec::new(),
        Page::Found { url, body } => {
            let fetched_at = at.unwrap_or_else(Utc::now);
            extract_definitions(language, &body, form)?
                .unwrap_or_default()
                .into_iter()
                .map(|definition| DefinitionEntry {
                    language,
                    surface_form: form.to_string(),
                    definition,
                    source_url: url.clone(),
                    fetched_at,
                })
                .collect()
        }
    };
    client.remember(language, form, &entries);
    Ok(entries)
}

#[derive(Debug, Clone, Default)]
pub struct BuildOptions {
    /// Concurrent fetches; 0 is treated as 1.
    pub workers: usize,
    /// Checked between worker rounds; once set, no further fetches start.
    pub cancel: Option<Arc<AtomicBool>>,
    /// Timestamp for every new row instead of the wall clock.
    pub fetched_at: Option<DateTime<Utc>>,
}

#[derive(Debug)]
pub struct HarvestFailure {
    pub language: Language,
    pub surface_form: String,
    pub error: Error,
}

#[derive(Debug)]
pub struct HarvestOutcome {
    /// Everything in the cache file after this run.
    pub corpus: DefinitionCorpus,
    /// Forms fetched by this run.
    pub fetched: usize,
    /// Forms that were already present in the cache.
    pub skipped: usize,
    pub failures: Vec<HarvestFailure>,
    pub cancelled: bool,
}

/// Open the cache for appending, dropping an incomplete trailing line and
/// writing the header into a new file.
fn open_cache(path: &Path) -> Result<File> {
    let existing = match std::fs::read(path) {
        Ok(bytes) => Some(bytes),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => None,
        Err(e) => return Err(Error::io(path, e)),
    };
    let keep = existing.as_ref().map_or(0, |b| {
        b.iter().rposition(|&c| c == b'\n').map_or(0, |i| i + 1)
    });
    if let Some(bytes) = &existing {
        if keep < bytes.len() {
            warn!("{}: dropping incomplete trailing line", path.display());
            let f = OpenOptions::new()
                .write(true)
                .open(path)
                .map_err(|e| Error::io(path, e))?;
            f.set_len(keep as u64).map_err(|e| Error::io(path, e))?;
        }
    }
    let mut file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| Error::io(path, e))?;
    if keep == 0 {
        writeln!(file, "{}", CACHE_COLUMNS.join("\t")).map_err(|e| Error::io(path, e))?;
    }
    Ok(file)
}

/// Fetch every unique (language, form) not yet in the cache at `cache_path`
/// and append the results in input order. Per-form failures are collected
/// and the rest of the batch continues; failed forms are not persisted and
/// are retried by the next run.
pub fn build_corpus(
    words: &[(Language, String)],
    client: &WiktionaryClient,
    cache_path: impl AsRef<Path>,
    options: &BuildOptions,
) -> Result<HarvestOutcome> {
    let path = cache_path.as_ref();
    let mut file = open_cache(path)?;
    let mut corpus = DefinitionCorpus::load(path)?;

    let mut seen = HashSet::new();
    let mut skipped = 0;
    let mut pending = Vec::new();
    for (lang, form) in words {
        if !seen.insert((*lang, form.as_str())) {
            continue;
        }
        if corpus.contains(*lang, form) {
            skipped += 1;
        } else {
            pending.push((*lang, form.as_str()));
        }
    }

    let workers = options.workers.max(1);
    let mut failures = Vec::new();
    let mut fetched = 0;
    let mut cancelled = false;
    for chunk in pending.chunks(workers) {
        if options
            .cancel
            .as_ref()
            .is_some_and(|c| c.load(Ordering::SeqCst))
        {
            cancelled = true;
            break;
        }
        let results: Vec<Result<Vec<DefinitionEntry>>> = thread::scope(|s| {
            let handles: Vec<_> = chunk
                .iter()
                .map(|&(lang, form)| {
                    s.spawn(move || fetch_at(client, lang, form, options.fetched_at))
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("fetch worker panicked"))
                .collect()
        });
        for (&(lang, form), result) in chunk.iter().zip(results) {
            match result {
                Ok(entries) => {
                    let url = client.page_url(lang, form);
                    let at = entries
                        .first()
                        .map(|e| e.fetched_at)
                        .or(options.fetched_at)
                        .unwrap_or_else(Utc::now);
                    let rows = cache_rows(lang, form, &url, &at, &entries)?;
                    file.write_all(rows.as_bytes())
                        .and_then(|_| file.flush())
                        .map_err(|e| Error::io(path, e))?;
                    corpus.insert(lang, form, entries);
                    fetched += 1;
                }
                Err(error) => {
                    warn!("{lang}:{form}: {error}");
                    failures.push(HarvestFailure {
                        language: lang,
                        surface_form: form.to_string(),
                        error,
                    });
                }
            }
        }
    }
    Ok(HarvestOutcome {
        corpus,
        fetched,
        skipped,
        failures,
        cancelled,
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LanguageCoverage {
    /// Unique forms asked for.
    pub requested: usize,
    /// Of those, forms present in the corpus.
    pub fetched: usize,
    /// Of those, forms with at least one definition.
    pub with_definitions: usize,
    pub total_definitions: usize,
}

impl LanguageCoverage {
    /// Share of requested forms with at least one definition, in percent.
    pub fn coverage_percent(&self) -> f64 {
        if self.requested == 0 {
            0.0
        } else {
            100.0 * self.with_definitions as f64 / self.requested as f64
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CoverageReport {
    pub per_language: BTreeMap<Language, LanguageCoverage>,
}

impl CoverageReport {
    pub fn to_tsv(&self) -> String {
        let mut out = String::from(
            "language\trequested\tfetched\twith_definitions\ttotal_definitions\tcoverage_pct\n",
        );
        for (lang, c) in &self.per_language {
            let _ = writeln!(
                out,
                "{lang}\t{}\t{}\t{}\t{}\t{:.2}",
                c.requested,
                c.fetched,
                c.with_definitions,
                c.total_definitions,
                c.coverage_percent()
            );
        }
        out
    }

    pub fn to_table(&self) -> String {
        let mut out = format!(
            "{:<8} {:>9} {:>8} {:>10} {:>11} {:>9}\n",
            "language", "requested", "fetched", "with defs", "definitions", "coverage"
        );
        for (lang, c) in &self.per_language {
            let _ = writeln!(
                out,
                "{:<8} {:>9} {:>8} {:>10} {:>11} {:>8.1}%",
                lang.code(),
                c.requested,
                c.fetched,
                c.with_definitions,
                c.total_definitions,
                c.coverage_percent()
            );
        }
        out
    }
}

/// Per-language coverage of `words` (deduplicated) by `corpus`.
pub fn coverage_report(corpus: &DefinitionCorpus, words: &[(Language, String)]) -> CoverageReport {
    let mut per_language: BTreeMap<Language, LanguageCoverage> = BTreeMap::new();
    let mut seen = HashSet::new();
    for (lang, form) in words {
        if !seen.insert((*lang, form.as_str())) {
            continue;
        }
        let c = per_language.entry(*lang).or_default();
        c.requested += 1;
        if let Some(defs) = corpus.definitions(*lang, form) {
            c.fetched += 1;
            if !defs.is_empty() {
                c.with_definitions += 1;
                c.total_definitions += defs.len();
            }
        }
    }
    CoverageReport { per_language }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(lang: Language, form: &str, def: &str) -> DefinitionEntry {
        DefinitionEntry {
            language: lang,
            surface_form: form.into(),
            definition: def.into(),
            source_url: format!("dir://{lang}/wiki/{form}"),
            fetched_at: DateTime::parse_from_rfc3339("2024-01-01T00:00:00Z")
                .unwrap()
                .with_timezone(&Utc),
        }
    }

    #[test]
    fn unfetched_and_empty_are_distinct() {
        let mut c = DefinitionCorpus::new();
        c.insert(Language::Fi, "kala", vec![]);
        assert_eq!(c.definitions(Language::Fi, "kala"), Some(&[][..]));
        assert_eq!(c.definitions(Language::Fi, "talo"), None);
    }

    #[test]
    fn coverage_arithmetic() {
        let mut c = DefinitionCorpus::new();
        c.insert(
            Language::Ru,
            "a",
            vec![entry(Language::Ru, "a", "x"), entry(Language::Ru, "a", "y")],
        );
        c.insert(Language::Ru, "b", vec![entry(Language::Ru, "b", "x")]);
        c.insert(Language::Ru, "c", vec![entry(Language::Ru, "c", "x")]);
        c.insert(Language::Ru, "d", vec![]);
        let words: Vec<_> = ["a", "b", "c", "d", "a"]
            .iter()
            .map(|w| (Language::Ru, w.to_string()))
            .collect();
        let r = coverage_report(&c, &words);
        let ru = r.per_language[&Language::Ru];
        assert_eq!(
            (
                ru.requested,
                ru.fetched,
                ru.with_definitions,
                ru.total_definitions
            ),
            (4, 4, 3, 4)
        );
        assert!((ru.coverage_percent() - 75.0).abs() < 1e-12);
    }

    #[test]
    fn all_missing_is_zero_coverage() {
        let words = vec![(Language::De, "Xyzzy".to_string())];
        let r = coverage_report(&DefinitionCorpus::new(), &words);
        assert_eq!(r.per_language[&Language::De].coverage_percent(), 0.0);
    }

    #[test]
    fn cache_round_trip_ignores_partial_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cache.tsv");
        let e = entry(Language::Fi, "kala", "vedessä elävä selkärankainen");
        let mut text = format!("{}\n", CACHE_COLUMNS.join("\t"));
        text += &cache_rows(
            Language::Fi,
            "kala",
            &e.source_url,
            &e.fetched_at,
            std::slice::from_ref(&e),
        )
        .unwrap();
        text += &cache_rows(Language::Fi, "xq", "dir://fi/wiki/xq", &e.fetched_at, &[]).unwrap();
        text += "fi\ttalo\trakennus";
        std::fs::write(&path, text).unwrap();
        let c = DefinitionCorpus::load(&path).unwrap();
        assert_eq!(c.definitions(Language::Fi, "kala").unwrap(), &[e]);
        assert_eq!(c.definitions(Language::Fi, "xq").unwrap().len(), 0);
        assert!(!c.contains(Language::Fi, "talo"));
    }
}
