use std::collections::{BTreeMap, HashMap};
use std::path::PathBuf;
use std::sync::Mutex;
use std::thread;
use std::time::{Duration, Instant};

use log::{debug, warn};

use super::DefinitionEntry;
use crate::error::{Error, Result};
use crate::lang::Language;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpResponse {
    pub status: u16,
    pub body: String,
}

/// Minimal blocking GET.
pub trait Transport: Send + Sync {
    fn get(&self, url: &str) -> std::result::Result<HttpResponse, String>;
}

/// HTTP(S) transport. Redirects are followed.
pub struct HttpTransport {
    client: reqwest::blocking::Client,
}

impl HttpTransport {
    pub fn new(timeout: Duration) -> Result<Self> {
        let client = reqwest::blocking::Client::builder()
            .user_agent(concat!("sensematch/", env!("CARGO_PKG_VERSION")))
            .timeout(timeout)
            .redirect(reqwest::redirect::Policy::limited(10))
            .build()
            .map_err(|e| Error::Transport {
                url: String::new(),
                message: e.to_string(),
            })?;
        Ok(HttpTransport { client })
    }
}

impl Transport for HttpTransport {
    fn get(&self, url: &str) -> std::result::Result<HttpResponse, String> {
        let resp = self.client.get(url).send().map_err(|e| e.to_string())?;
        let status = resp.status().as_u16();
        let body = resp.text().map_err(|e| e.to_string())?;
        Ok(HttpResponse { status, body })
    }
}

/// Serves saved pages from `<root>/<lang>/<title>.html`; absent files are 404.
pub struct DirTransport {
    root: PathBuf,
}

impl DirTransport {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        DirTransport { root: root.into() }
    }
}

/// Base URL scheme understood by [`DirTransport`].
pub const DIR_SCHEME: &str = "dir://";

impl Transport for DirTransport {
    fn get(&self, url: &str) -> std::result::Result<HttpResponse, String> {
        let rest = url
            .strip_prefix(DIR_SCHEME)
            .ok_or_else(|| format!("not a {DIR_SCHEME} url: {url}"))?;
        let (lang, title) = rest
            .split_once("/wiki/")
            .ok_or_else(|| format!("malformed page url {url}"))?;
        let title = url::form_urlencoded::parse(format!("t={title}").as_bytes())
            .next()
            .map(|(_, v)| v.into_owned())
            .unwrap_or_default();
        let path = self.root.join(lang).join(format!("{title}.html"));
        match std::fs::read_to_string(&path) {
            Ok(body) => Ok(HttpResponse { status: 200, body }),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(HttpResponse {
                status: 404,
                body: String::new(),
            }),
            Err(e) => Err(format!("{}: {e}", path.display())),
        }
    }
}

/// Spaces request starts at least `1 / rate` seconds apart across all
/// threads sharing the limiter.
#[derive(Debug)]
pub struct RateLimiter {
    interval: Duration,
    next: Mutex<Option<Instant>>,
}

impl RateLimiter {
    pub fn new(requests_per_second: f64) -> Result<Self> {
        if !(requests_per_second > 0.0 && requests_per_second.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "request rate must be positive, got {requests_per_second}"
            )));
        }
        Ok(RateLimiter {
            interval: Duration::from_secs_f64(1.0 / requests_per_second),
            next: Mutex::new(None),
        })
    }

    pub fn interval(&self) -> Duration {
        self.interval
    }

    /// Block until the next free slot and return its start. The lock is held
    /// while waiting, so returned instants are at least one interval apart.
    pub fn acquire(&self) -> Instant {
        let mut next = self.next.lock().expect("rate limiter lock");
        if let Some(n) = *next {
            let now = Instant::now();
            if n > now {
                thread::sleep(n - now);
            }
        }
        let start = Instant::now();
        *next = Some(start + self.interval);
        start
    }
}

#[derive(Debug, Clone)]
pub struct ClientConfig {
    pub requests_per_second: f64,
    pub retries: u32,
    pub backoff: Duration,
    pub base_urls: BTreeMap<Language, String>,
}

impl Default for ClientConfig {
    fn default() -> Self {
        ClientConfig {
            requests_per_second: 1.0,
            retries: 3,
            backoff: Duration::from_millis(500),
            base_urls: Language::ALL
                .iter()
                .map(|l| (*l, l.wiktionary_base().to_string()))
                .collect(),
        }
    }
}

impl ClientConfig {
    pub fn base_url(&self, language: Language) -> &str {
        self.base_urls
            .get(&language)
            .map(String::as_str)
            .unwrap_or_else(|| language.wiktionary_base())
    }
}

/// Page fetcher with per-edition base URLs, shared rate limiting, retries and
/// an in-memory cache of extracted entries.
pub struct WiktionaryClient {
    transport: Box<dyn Transport>,
    limiter: RateLimiter,
    config: ClientConfig,
    cache: Mutex<HashMap<(Language, String), Vec<DefinitionEntry>>>,
    requests: Mutex<Vec<Instant>>,
}

pub(crate) enum Page {
    Missing,
    Found { url: String, body: String },
}

impl WiktionaryClient {
    pub fn new(transport: impl Transport + 'static, config: ClientConfig) -> Result<Self> {
        Ok(WiktionaryClient {
            transport: Box::new(transport),
            limiter: RateLimiter::new(config.requests_per_second)?,
            config,
            cache: Mutex::new(HashMap::new()),
            requests: Mutex::new(Vec::new()),
        })
    }

    /// HTTP client against the configured editions.
    pub fn http(config: ClientConfig) -> Result<Self> {
        WiktionaryClient::new(HttpTransport::new(Duration::from_secs(30))?, config)
    }

    pub fn config(&self) -> &ClientConfig {
        &self.config
    }

    /// Start times of every network request issued so far.
    pub fn request_log(&self) -> Vec<Instant> {
        self.requests.lock().expect("request log lock").clone()
    }

    pub fn network_requests(&self) -> usize {
        self.requests.lock().expect("request log lock").len()
    }

    pub fn page_url(&self, language: Language, title: &str) -> String {
        let base = self.config.base_url(language).trim_end_matches('/');
        let title = title.replace(' ', "_");
        let encoded: String = url::form_urlencoded::byte_serialize(title.as_bytes()).collect();
        // form encoding turns spaces into '+', which no longer occur here.
        format!("{base}/wiki/{encoded}")
    }

    pub(crate) fn cached(&self, language: Language, form: &str) -> Option<Vec<DefinitionEntry>> {
        self.cache
            .lock()
            .expect("cache lock")
            .get(&(language, form.to_string()))
            .cloned()
    }

    pub(crate) fn remember(&self, language: Language, form: &str, entries: &[DefinitionEntry]) {
        self.cache
            .lock()
            .expect("cache lock")
            .insert((language, form.to_string()), entries.to_vec());
    }

    pub(crate) fn fetch_page(&self, language: Language, title: &str) -> Result<Page> {
        let url = self.page_url(language, title);
        let mut last_error = String::new();
        for attempt in 0..=self.config.retries {
            if attempt > 0 {
                let wait = self.config.backoff * 2u32.saturating_pow(attempt - 1);
                debug!("retrying {url} in {wait:?}");
                thread::sleep(wait);
            }
            let started = self.limiter.acquire();
            self.requests
                .lock()
                .expect("request log lock")
                .push(started);
            match self.transport.get(&url) {
                Ok(resp) if resp.status == 200 => {
                    return Ok(Page::Found {
                        url,
                        body: resp.body,
                    })
                }
                Ok(resp) if resp.status == 404 => return Ok(Page::Missing),
                Ok(resp) if resp.status == 429 || resp.status >= 500 => {
                    last_error = format!("HTTP {}", resp.status);
                }
                Ok(resp) => {
                    return Err(Error::Transport {
                        url,
                        message: format!("HTTP {}", resp.status),
                    })
                }
                Err(e) => last_error = e,
            }
            warn!("request for {url} failed: {last_error}");
        }
        Err(Error::Transport {
            url,
            message: format!("{last_error} (after {} attempts)", self.config.retries + 1),
        })
    }
}
