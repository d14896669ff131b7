#![allow(dead_code)]

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::net::{TcpListener, TcpStream};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Instant;

use sensematch::wiktionary::ClientConfig;
use sensematch::Language;

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

pub fn wiktionary_fixtures() -> PathBuf {
    fixtures().join("wiktionary")
}

/// HTTP server for saved pages: `GET /<lang>/wiki/<title>` serves
/// `<root>/<lang>/<title>.html`, anything else is 404.
pub struct FixtureServer {
    pub base: String,
    hits: Arc<Mutex<Vec<(Instant, String)>>>,
    failures: Arc<Mutex<HashMap<String, usize>>>,
}

impl FixtureServer {
    pub fn start(root: PathBuf) -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").expect("bind fixture server");
        let base = format!("http://{}", listener.local_addr().unwrap());
        let hits = Arc::new(Mutex::new(Vec::new()));
        let failures: Arc<Mutex<HashMap<String, usize>>> = Arc::new(Mutex::new(HashMap::new()));
        let (h, f) = (hits.clone(), failures.clone());
        thread::spawn(move || {
            for stream in listener.incoming().flatten() {
                let (root, h, f) = (root.clone(), h.clone(), f.clone());
                thread::spawn(move || serve(stream, &root, &h, &f));
            }
        });
        FixtureServer {
            base,
            hits,
            failures,
        }
    }

    /// Answer the next `n` requests for `title` with 503.
    pub fn fail_next(&self, title: &str, n: usize) {
        self.failures.lock().unwrap().insert(title.to_string(), n);
    }

    pub fn hits(&self) -> Vec<(Instant, String)> {
        self.hits.lock().unwrap().clone()
    }

    pub fn config(&self, requests_per_second: f64) -> ClientConfig {
        let mut cfg = ClientConfig {
            requests_per_second,
            backoff: std::time::Duration::from_millis(10),
            ..ClientConfig::default()
        };
        for lang in Language::ALL {
            cfg.base_urls
                .insert(lang, format!("{}/{}", self.base, lang.code()));
        }
        cfg
    }
}

fn serve(
    stream: TcpStream,
    root: &Path,
    hits: &Mutex<Vec<(Instant, String)>>,
    failures: &Mutex<HashMap<String, usize>>,
) {
    let mut reader = BufReader::new(stream.try_clone().unwrap());
    let mut request_line = String::new();
    if reader.read_line(&mut request_line).is_err() {
        return;
    }
    loop {
        let mut line = String::new();
        match reader.read_line(&mut line) {
            Ok(0) | Err(_) => break,
            Ok(_) if line == "\r\n" || line == "\n" => break,
            Ok(_) => {}
        }
    }
    let path = request_line
        .split_whitespace()
        .nth(1)
        .unwrap_or("/")
        .to_string();
    hits.lock().unwrap().push((Instant::now(), path.clone()));
    let decoded: String = url::form_urlencoded::parse(format!("p={path}").as_bytes())
        .next()
        .map(|(_, v)| v.into_owned())
        .unwrap_or_default();
    let (status, body) = match decoded.trim_start_matches('/').split_once("/wiki/") {
        Some((lang, title)) => {
            let failing = {
                let mut f = failures.lock().unwrap();
                match f.get_mut(title) {
                    Some(n) if *n > 0 => {
                        *n -= 1;
                        true
                    }
                    _ => false,
                }
            };
            if failing {
                ("503 Service Unavailable", String::new())
            } else {
                match std::fs::read_to_string(root.join(lang).join(format!("{title}.html"))) {
                    Ok(body) => ("200 OK", body),
                    Err(_) => ("404 Not Found", String::new()),
                }
            }
        }
        None => ("404 Not Found", String::new()),
    };
    let mut stream = stream;
    let _ = write!(
        stream,
        "HTTP/1.1 {status}\r\nContent-Type: text/html; charset=utf-8\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
        body.len()
    );
}

/// Expected definitions stored next to a fixture page.
pub fn golden(lang: &str, title: &str) -> Vec<String> {
    let path = wiktionary_fixtures()
        .join(lang)
        .join(format!("{title}.golden.txt"));
    std::fs::read_to_string(&path)
        .unwrap_or_else(|e| panic!("{}: {e}", path.display()))
        .lines()
        .map(str::to_string)
        .collect()
}

/// Ten-word Finnish-tagged split: two old senses and one new sense per word,
/// every new-period usage annotated.
pub fn synthetic_split() -> String {
    let mut out = String::from("usage_id\tword\tsense_id\tgloss\texample\tperiod\tdate\n");
    for i in 0..10 {
        let w = format!("word{i}");
        let g1 = format!("a round container used for storing grain number {i}");
        let g2 = format!("the act of counting sheep before sleep variant {i}");
        let g3 = format!("a portable device for sending short messages type {i}");
        let rows = [
            ("o1", "s1", &g1, "old", "the farmer filled each barn"),
            ("o2", "s1", &g1, "old", "grain poured into the vessel"),
            ("o3", "s2", &g2, "old", "she lay awake counting quietly"),
            ("n1", "s1", &g1, "new", "the old vessel held rye"),
            ("n2", "s2", &g2, "new", "counting again at midnight"),
            ("n3", "s3", &g3, "new", "he typed a note on the device"),
            ("n4", "s3", &g3, "new", "the device buzzed with a message"),
        ];
        for (u, s, g, p, ex) in rows {
            out += &format!("{w}_{u}\t{w}\t{w}_{s}\t{g}\t{ex} ({w} {u})\t{p}\t\n");
        }
    }
    out
}

/// Saved Finnish pages for the synthetic words: the novel gloss among
/// distractors, plus one old gloss.
pub fn synthetic_pages(root: &Path) {
    let dir = root.join("fi");
    std::fs::create_dir_all(&dir).unwrap();
    for i in 0..10 {
        let page = format!(
            "<html><body><h2>Suomi</h2><h3>Substantiivi</h3><ol>\
             <li>a round container used for storing grain number {i}</li>\
             <li>an unrelated meaning about weather patterns</li>\
             <li>a portable device for sending short messages type {i}</li>\
             <li>a [[slang|colloquial]] insult</li></ol></body></html>"
        );
        std::fs::write(dir.join(format!("word{i}.html")), page).unwrap();
    }
}
