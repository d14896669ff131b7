//! Definition extraction from rendered Wiktionary pages, one adapter per
//! edition.
//!
//! - fi: the numbered lists (`ol > li`) of the `Suomi` section.
//! - ru: the numbered list of the `Значение` subsection of the `Русский` section;
//!   usage examples start at `◆` and are cut off.
//! - de: the `dd` items of the list that follows the `Bedeutungen:` label in
//!   the `(Deutsch)` section, with the leading `[n]` markers removed.

use std::sync::LazyLock;

use ego_tree::NodeRef;
use regex::Regex;
use scraper::{ElementRef, Html, Node};

use crate::error::{Error, Result};
use crate::lang::Language;

static SENSE_MARKER: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^\[\d+[a-z]?(?:[,–-]\s*\d+[a-z]?)*\]\s*").expect("valid regex"));
static TEMPLATE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"\{\{[^{}]*\}\}").expect("valid regex"));
static LINK: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"\[\[(?:[^\[\]|]*\|)?([^\[\]|]*)\]\]").expect("valid regex"));
static SPACES: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\s+").expect("valid regex"));

const SKIP_TAGS: [&str; 8] = ["ol", "ul", "dl", "sup", "style", "script", "table", "link"];
const SKIP_CLASSES: [&str; 5] = [
    "example-block",
    "example-fullblock",
    "reference",
    "mw-ref",
    "mw-editsection",
];

fn heading_level(el: &ElementRef<'_>) -> Option<usize> {
    match el.value().name() {
        "h1" => Some(1),
        "h2" => Some(2),
        "h3" => Some(3),
        "h4" => Some(4),
        "h5" => Some(5),
        "h6" => Some(6),
        _ => None,
    }
}

fn skipped(el: &ElementRef<'_>) -> bool {
    SKIP_TAGS.contains(&el.value().name())
        || el.value().classes().any(|c| SKIP_CLASSES.contains(&c))
}

fn collect_text(node: NodeRef<'_, Node>, out: &mut String) {
    for child in node.children() {
        match child.value() {
            Node::Text(t) => out.push_str(t),
            Node::Element(_) => {
                let el = ElementRef::wrap(child).expect("element node");
                if !skipped(&el) {
                    collect_text(child, out);
                }
            }
            _ => {}
        }
    }
}

/// Plain text of a definition item: nested lists, references and example
/// blocks dropped, a leading `[n]` sense marker and leftover wiki markup
/// removed, whitespace collapsed.
pub(crate) fn clean_text(el: ElementRef<'_>) -> String {
    let mut raw = String::new();
    collect_text(*el, &mut raw);
    if let Some(i) = raw.find('◆') {
        raw.truncate(i);
    }
    let mut text = raw;
    loop {
        let next = TEMPLATE.replace_all(&text, "").into_owned();
        if next == text {
            break;
        }
        text = next;
    }
    let text = LINK.replace_all(&text, "$1");
    let text = SENSE_MARKER.replace(text.trim_start(), "");
    let text = text.replace(['{', '}', '[', ']'], "");
    let text = SPACES.replace_all(&text, " ");
    text.trim().to_string()
}

fn heading_text(el: &ElementRef<'_>) -> String {
    let mut s = String::new();
    collect_text(**el, &mut s);
    SPACES.replace_all(s.trim(), " ").into_owned()
}

/// Elements of the document in order, with heading levels marked.
struct Outline<'a> {
    elements: Vec<ElementRef<'a>>,
}

impl<'a> Outline<'a> {
    fn new(doc: &'a Html) -> Self {
        let elements = doc
            .root_element()
            .descendants()
            .filter_map(ElementRef::wrap)
            .collect();
        Outline { elements }
    }

    /// Index range of the section opened by the first heading in `within`
    /// accepted by `pred`, up to the next heading of the same or higher rank.
    fn section(
        &self,
        within: std::ops::Range<usize>,
        pred: impl Fn(&str) -> bool,
    ) -> Option<std::ops::Range<usize>> {
        let (start, level) = within.clone().find_map(|i| {
            let el = &self.elements[i];
            let level = heading_level(el)?;
            pred(&heading_text(el)).then_some((i, level))
        })?;
        let end = (start + 1..within.end)
            .find(|&i| heading_level(&self.elements[i]).is_some_and(|l| l <= level))
            .unwrap_or(within.end);
        Some(start + 1..end)
    }

    fn all(&self) -> std::ops::Range<usize> {
        0..self.elements.len()
    }

    /// Direct `li` children of the top-level `ol` lists inside `range`.
    fn list_items(&self, range: std::ops::Range<usize>) -> Vec<ElementRef<'a>> {
        let mut out = Vec::new();
        for i in range {
            let el = self.elements[i];
            if el.value().name() != "ol" || in_list_item(&el) {
                continue;
            }
            out.extend(
                el.children()
                    .filter_map(ElementRef::wrap)
                    .filter(|c| c.value().name() == "li"),
            );
        }
        out
    }
}

fn in_list_item(el: &ElementRef<'_>) -> bool {
    el.ancestors()
        .filter_map(ElementRef::wrap)
        .any(|a| a.value().name() == "li" || a.value().name() == "dd")
}

fn missing_region(title: &str, what: &str) -> Error {
    Error::Extraction {
        title: title.to_string(),
        message: format!("language section has no {what}"),
    }
}

fn non_empty(items: impl IntoIterator<Item = String>) -> Vec<String> {
    items.into_iter().filter(|s| !s.is_empty()).collect()
}

fn extract_fi(outline: &Outline<'_>, title: &str) -> Result<Option<Vec<String>>> {
    let Some(section) = outline.section(outline.all(), |t| t == "Suomi") else {
        return Ok(None);
    };
    let items = outline.list_items(section);
    if items.is_empty() {
        return Err(missing_region(title, "numbered definition list"));
    }
    Ok(Some(non_empty(items.into_iter().map(clean_text))))
}

fn extract_ru(outline: &Outline<'_>, title: &str) -> Result<Option<Vec<String>>> {
    let Some(section) = outline.section(outline.all(), |t| t.contains("Русский")) else {
        return Ok(None);
    };
    let Some(meanings) = outline.section(section, |t| t == "Значение") else {
        return Err(missing_region(title, "\"Значение\" subsection"));
    };
    let items = outline.list_items(meanings);
    Ok(Some(non_empty(items.into_iter().map(clean_text))))
}

fn extract_de(outline: &Outline<'_>, title: &str) -> Result<Option<Vec<String>>> {
    let Some(section) = outline.section(outline.all(), |t| t.contains("(Deutsch)")) else {
        return Ok(None);
    };
    let mut defs = Vec::new();
    let mut found = false;
    let mut i = section.start;
    while i < section.end {
        let el = outline.elements[i];
        let is_label =
            el.value().name() == "p" && heading_text(&el).trim_end_matches(':') == "Bedeutungen";
        if is_label {
            found = true;
            let dl = el
                .next_siblings()
                .filter_map(ElementRef::wrap)
                .next()
                .filter(|s| s.value().name() == "dl");
            if let Some(dl) = dl {
                for dd in dl
                    .children()
                    .filter_map(ElementRef::wrap)
                    .filter(|c| c.value().name() == "dd")
                {
                    defs.push(clean_text(dd));
                }
            }
        }
        i += 1;
    }
    if !found {
        return Err(missing_region(title, "\"Bedeutungen\" block"));
    }
    Ok(Some(non_empty(defs)))
}

/// Definitions of `title` in the page's same-language section. `Ok(None)`
/// means the page has no section for that language.
pub fn extract_definitions(
    language: Language,
    html: &str,
    title: &str,
) -> Result<Option<Vec<String>>> {
    let doc = Html::parse_document(html);
    let outline = Outline::new(&doc);
    match language {
        Language::Fi => extract_fi(&outline, title),
        Language::Ru => extract_ru(&outline, title),
        Language::De => extract_de(&outline, title),
    }
}
