//! Shared-task TSV data: usages, sense inventories and submission files.
//!
//! Input files have one header row and the columns
//! `usage_id, word, sense_id, gloss, example, period, date`. Empty fields are
//! read as absent values. A row with an empty `usage_id` and `example` only
//! declares a sense (it carries no usage).

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::assigner::PredictionRecord;
use crate::error::{Error, Result};
use crate::lang::Language;

/// Reserved prefix for sense IDs minted at inference time.
pub const NOVEL_PREFIX: &str = "novel:";

pub const SPLIT_COLUMNS: [&str; 7] = [
    "usage_id", "word", "sense_id", "gloss", "example", "period", "date",
];

pub const SUBMISSION_COLUMNS: [&str; 7] = [
    "usage_id",
    "word",
    "period",
    "sense_id",
    "is_novel",
    "probability",
    "example",
];

pub const DEFINITION_COLUMN: &str = "definition";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Period {
    Old,
    New,
}

impl Period {
    pub fn as_str(self) -> &'static str {
        match self {
            Period::Old => "old",
            Period::New => "new",
        }
    }
}

impl fmt::Display for Period {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Period {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "old" => Ok(Period::Old),
            "new" => Ok(Period::New),
            other => Err(Error::Validation(format!("unknown period token {other:?}"))),
        }
    }
}

/// One dated attestation of a target word.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UsageExample {
    pub usage_id: String,
    pub word: String,
    pub example_text: String,
    pub sense_id: Option<String>,
    pub period: Period,
    pub date: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SenseDefinition {
    pub sense_id: String,
    pub word: String,
    pub gloss: String,
    pub period: Period,
}

/// The senses of one word known from the old period.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SenseInventory {
    pub word: String,
    pub entries: Vec<SenseDefinition>,
}

impl SenseInventory {
    pub fn contains(&self, sense_id: &str) -> bool {
        self.entries.iter().any(|s| s.sense_id == sense_id)
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// A validated split of one language.
///
/// Senses are held in first-reference order: senses used by some usage come
/// first, in the order of their first usage, followed by unreferenced senses.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetSplit {
    pub language: Language,
    usages: Vec<UsageExample>,
    senses: Vec<SenseDefinition>,
}

impl DatasetSplit {
    pub fn new(
        language: Language,
        usages: Vec<UsageExample>,
        senses: Vec<SenseDefinition>,
    ) -> Result<Self> {
        let mut seen_usage = HashSet::new();
        for u in &usages {
            if u.usage_id.is_empty() {
                return Err(Error::Validation("usage with empty usage_id".into()));
            }
            if !seen_usage.insert(u.usage_id.as_str()) {
                return Err(Error::Validation(format!(
                    "duplicate usage_id {:?}",
                    u.usage_id
                )));
            }
            if u.example_text.is_empty() {
                return Err(Error::Validation(format!(
                    "usage {:?} has empty example text",
                    u.usage_id
                )));
            }
            if u.word.is_empty() {
                return Err(Error::Validation(format!(
                    "usage {:?} has empty word",
                    u.usage_id
                )));
            }
        }

        let mut by_key: HashMap<(&str, &str), usize> = HashMap::new();
        for (i, s) in senses.iter().enumerate() {
            if s.sense_id.starts_with(NOVEL_PREFIX) {
                return Err(Error::Validation(format!(
                    "sense id {:?} uses the reserved prefix {NOVEL_PREFIX:?}",
                    s.sense_id
                )));
            }
            if s.sense_id.is_empty() || s.gloss.is_empty() {
                return Err(Error::Validation(format!(
                    "sense {:?} of {:?} needs a non-empty id and gloss",
                    s.sense_id, s.word
                )));
            }
            if by_key.insert((&s.word, &s.sense_id), i).is_some() {
                return Err(Error::Validation(format!(
                    "duplicate sense {:?} for word {:?}",
                    s.sense_id, s.word
                )));
            }
        }

        // Which periods reference each sense.
        let mut order = Vec::with_capacity(senses.len());
        let mut placed = vec![false; senses.len()];
        let mut has_old = vec![false; senses.len()];
        for u in &usages {
            let Some(sid) = &u.sense_id else { continue };
            let Some(&idx) = by_key.get(&(u.word.as_str(), sid.as_str())) else {
                return Err(Error::Validation(format!(
                    "usage {:?} references sense {:?} with no gloss for word {:?}",
                    u.usage_id, sid, u.word
                )));
            };
            if u.period == Period::Old {
                has_old[idx] = true;
            }
            if !placed[idx] {
                placed[idx] = true;
                order.push(idx);
            }
        }
        for (idx, s) in senses.iter().enumerate() {
            if placed[idx] {
                if has_old[idx] && s.period != Period::Old {
                    return Err(Error::Validation(format!(
                        "sense {:?} of {:?} is attested in the old period but marked new",
                        s.sense_id, s.word
                    )));
                }
            } else {
                order.push(idx);
            }
        }
        let mut slots: Vec<Option<SenseDefinition>> = senses.into_iter().map(Some).collect();
        let senses = order
            .into_iter()
            .map(|i| slots[i].take().expect("each index placed once"))
            .collect();

        Ok(DatasetSplit {
            language,
            usages,
            senses,
        })
    }

    pub fn usages(&self) -> &[UsageExample] {
        &self.usages
    }

    pub fn senses(&self) -> &[SenseDefinition] {
        &self.senses
    }

    pub fn sense(&self, word: &str, sense_id: &str) -> Option<&SenseDefinition> {
        self.senses
            .iter()
            .find(|s| s.word == word && s.sense_id == sense_id)
    }

    /// Gloss map keyed by `(word, sense_id)`.
    pub fn gloss_index(&self) -> HashMap<(&str, &str), &str> {
        self.senses
            .iter()
            .map(|s| ((s.word.as_str(), s.sense_id.as_str()), s.gloss.as_str()))
            .collect()
    }

    /// Distinct words in first-appearance order over usages, then senses.
    pub fn words(&self) -> Vec<&str> {
        let mut seen = HashSet::new();
        self.usages
            .iter()
            .map(|u| u.word.as_str())
            .chain(self.senses.iter().map(|s| s.word.as_str()))
            .filter(|w| seen.insert(*w))
            .collect()
    }

    /// The old-period part of this split: old usages and old senses only.
    pub fn old_period_view(&self) -> DatasetSplit {
        DatasetSplit {
            language: self.language,
            usages: self
                .usages
                .iter()
                .filter(|u| u.period == Period::Old)
                .cloned()
                .collect(),
            senses: self
                .senses
                .iter()
                .filter(|s| s.period == Period::Old)
                .cloned()
                .collect(),
        }
    }
}

/// Per-word inventories of old-period senses. Every word of the split gets an
/// entry, possibly empty.
pub fn old_inventories(split: &DatasetSplit) -> BTreeMap<String, SenseInventory> {
    let mut map: BTreeMap<String, SenseInventory> = split
        .words()
        .into_iter()
        .map(|w| {
            (
                w.to_string(),
                SenseInventory {
                    word: w.to_string(),
                    entries: Vec::new(),
                },
            )
        })
        .collect();
    for s in split.senses().iter().filter(|s| s.period == Period::Old) {
        map.get_mut(&s.word)
            .expect("every sense word is a split word")
            .entries
            .push(s.clone());
    }
    map
}

fn non_empty(field: &str) -> Option<String> {
    if field.is_empty() {
        None
    } else {
        Some(field.to_string())
    }
}

struct Header {
    positions: HashMap<String, usize>,
    width: usize,
}

impl Header {
    fn read(path: &Path, rdr: &mut csv::Reader<File>, required: &[&str]) -> Result<Self> {
        let header = rdr.headers().map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: e.to_string(),
        })?;
        let positions: HashMap<String, usize> = header
            .iter()
            .enumerate()
            .map(|(i, h)| (h.trim().to_string(), i))
            .collect();
        for col in required {
            if !positions.contains_key(*col) {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: 1,
                    message: format!("missing required column {col:?}"),
                });
            }
        }
        Ok(Header {
            positions,
            width: header.len(),
        })
    }

    fn has(&self, col: &str) -> bool {
        self.positions.contains_key(col)
    }

    fn get<'r>(&self, rec: &'r csv::StringRecord, col: &str) -> Option<&'r str> {
        self.positions.get(col).and_then(|&i| rec.get(i))
    }
}

fn tsv_reader(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new()
        .delimiter(b'\t')
        .quoting(false)
        .flexible(true)
        .has_headers(true)
        .from_reader(file))
}

fn records<'r>(
    path: &Path,
    rdr: &'r mut csv::Reader<File>,
) -> impl Iterator<Item = Result<(usize, csv::StringRecord)>> + 'r {
    let path = path.to_path_buf();
    rdr.records().map(move |r| {
        let rec = r.map_err(|e| Error::Parse {
            path: path.clone(),
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        Ok((line, rec))
    })
}

/// Load and validate one split file.
pub fn load_split(path: impl AsRef<Path>, language: Language) -> Result<DatasetSplit> {
    let path = path.as_ref();
    let mut rdr = tsv_reader(path)?;
    let header = Header::read(path, &mut rdr, &["usage_id", "word", "example", "period"])?;
    // Optional columns may be missing from a row when they trail the header.
    let required_width = ["usage_id", "word", "example", "period"]
        .iter()
        .map(|c| header.positions[*c] + 1)
        .max()
        .unwrap_or(0);

    let mut usages = Vec::new();
    let mut senses: Vec<SenseDefinition> = Vec::new();
    let mut sense_pos: HashMap<(String, String), usize> = HashMap::new();
    let mut sense_old: Vec<bool> = Vec::new();
    // Senses referenced without a gloss yet, with the line of first reference.
    let mut pending: BTreeMap<(String, String), (usize, Period)> = BTreeMap::new();

    for row in records(path, &mut rdr) {
        let (line, rec) = row?;
        if rec.len() > header.width || rec.len() < required_width {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line,
                message: format!("expected {} columns, found {}", header.width, rec.len()),
            });
        }
        let field = |col: &str| header.get(&rec, col).unwrap_or("");
        let period: Period = field("period").parse().map_err(|e: Error| Error::Parse {
            path: path.to_path_buf(),
            line,
            message: e.to_string(),
        })?;
        let word = field("word").to_string();
        let sense_id = non_empty(field("sense_id"));
        let gloss = non_empty(field("gloss"));
        let usage_id = field("usage_id");
        let example = field("example");

        if gloss.is_some() && sense_id.is_none() {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line,
                message: "gloss given without a sense_id".into(),
            });
        }

        if let Some(sid) = &sense_id {
            let key = (word.clone(), sid.clone());
            match (sense_pos.get(&key), gloss) {
                (Some(&i), Some(g)) => {
                    if senses[i].gloss != g {
                        return Err(Error::Parse {
                            path: path.to_path_buf(),
                            line,
                            message: format!("conflicting gloss for sense {sid:?} of {word:?}"),
                        });
                    }
                    sense_old[i] |= period == Period::Old;
                }
                (Some(&i), None) => sense_old[i] |= period == Period::Old,
                (None, Some(g)) => {
                    let old = period == Period::Old
                        || pending.remove(&key).is_some_and(|(_, p)| p == Period::Old);
                    sense_pos.insert(key, senses.len());
                    senses.push(SenseDefinition {
                        sense_id: sid.clone(),
                        word: word.clone(),
                        gloss: g,
                        period,
                    });
                    sense_old.push(old);
                }
                (None, None) => {
                    let entry = pending.entry(key).or_insert((line, period));
                    if period == Period::Old {
                        entry.1 = Period::Old;
                    }
                }
            }
        }

        if usage_id.is_empty() && example.is_empty() {
            if sense_id.is_none() {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line,
                    message: "row has neither a usage nor a sense".into(),
                });
            }
            continue;
        }
        usages.push(UsageExample {
            usage_id: usage_id.to_string(),
            word,
            example_text: example.to_string(),
            sense_id,
            period,
            date: non_empty(field("date")),
        });
    }

    if let Some(((word, sid), (line, _))) = pending.into_iter().next() {
        return Err(Error::Validation(format!(
            "{}:{line}: sense {sid:?} of word {word:?} has no gloss row",
            path.display()
        )));
    }
    for (s, old) in senses.iter_mut().zip(&sense_old) {
        if *old {
            s.period = Period::Old;
        }
    }
    DatasetSplit::new(language, usages, senses)
}

fn check_field(value: &str, what: &str) -> Result<()> {
    if value.contains(['\t', '\n', '\r']) {
        return Err(Error::Serialization(format!(
            "{what} contains a tab or line break: {value:?}"
        )));
    }
    Ok(())
}

fn write_row<W: Write>(out: &mut W, fields: &[&str]) -> Result<()> {
    for f in fields {
        check_field(f, "field")?;
    }
    writeln!(out, "{}", fields.join("\t")).map_err(|e| Error::Serialization(e.to_string()))
}

/// Write a split in the input schema. `load_split` on the result yields an
/// equal split.
pub fn save_split(split: &DatasetSplit, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    write_row(&mut out, &SPLIT_COLUMNS)?;
    let glosses = split.gloss_index();
    let periods: HashMap<(&str, &str), Period> = split
        .senses()
        .iter()
        .map(|s| ((s.word.as_str(), s.sense_id.as_str()), s.period))
        .collect();
    // Senses whose period is implied by the usage rows.
    let mut referenced = HashSet::new();
    for u in split.usages() {
        let gloss = u
            .sense_id
            .as_deref()
            .and_then(|sid| glosses.get(&(u.word.as_str(), sid)).copied())
            .unwrap_or("");
        if let Some(sid) = &u.sense_id {
            let implied_old = u.period == Period::Old;
            let sense_period = periods
                .get(&(u.word.as_str(), sid.as_str()))
                .copied()
                .unwrap_or(Period::New);
            if implied_old || sense_period == Period::New {
                referenced.insert((u.word.as_str(), sid.as_str()));
            }
        }
        write_row(
            &mut out,
            &[
                &u.usage_id,
                &u.word,
                u.sense_id.as_deref().unwrap_or(""),
                gloss,
                &u.example_text,
                u.period.as_str(),
                u.date.as_deref().unwrap_or(""),
            ],
        )?;
    }
    for s in split.senses() {
        if referenced.contains(&(s.word.as_str(), s.sense_id.as_str())) {
            continue;
        }
        write_row(
            &mut out,
            &[
                "",
                &s.word,
                &s.sense_id,
                &s.gloss,
                "",
                s.period.as_str(),
                "",
            ],
        )?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

/// Write the submission file. With `with_definitions` the enriched layout
/// with a trailing `definition` column is produced.
pub fn save_predictions(
    records: &[PredictionRecord],
    path: impl AsRef<Path>,
    with_definitions: bool,
) -> Result<()> {
    let path = path.as_ref();
    for r in records {
        if r.sense_id.is_empty() {
            return Err(Error::Serialization(format!(
                "record {:?} has no sense id",
                r.usage_id
            )));
        }
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let mut header: Vec<&str> = SUBMISSION_COLUMNS.to_vec();
    if with_definitions {
        header.push(DEFINITION_COLUMN);
    }
    write_row(&mut out, &header)?;
    for r in records {
        let prob = r
            .winning_probability
            .map(|p| p.to_string())
            .unwrap_or_default();
        let mut row: Vec<&str> = vec![
            &r.usage_id,
            &r.word,
            r.period.as_str(),
            &r.sense_id,
            if r.is_novel { "1" } else { "0" },
            &prob,
            &r.example_text,
        ];
        if with_definitions {
            row.push(r.definition.as_deref().unwrap_or(""));
        }
        write_row(&mut out, &row)?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

/// Read a submission file written by [`save_predictions`].
pub fn load_predictions(path: impl AsRef<Path>) -> Result<Vec<PredictionRecord>> {
    let path = path.as_ref();
    let mut rdr = tsv_reader(path)?;
    let header = Header::read(path, &mut rdr, &SUBMISSION_COLUMNS)?;
    let enriched = header.has(DEFINITION_COLUMN);
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for row in records(path, &mut rdr) {
        let (line, rec) = row?;
        let perr = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            message,
        };
        if rec.len() != header.width {
            return Err(perr(format!(
                "expected {} columns, found {}",
                header.width,
                rec.len()
            )));
        }
        let field = |col: &str| header.get(&rec, col).unwrap_or("");
        let period: Period = field("period")
            .parse()
            .map_err(|e: Error| perr(e.to_string()))?;
        let is_novel = match field("is_novel") {
            "1" => true,
            "0" => false,
            other => return Err(perr(format!("is_novel must be 0 or 1, got {other:?}"))),
        };
        let winning_probability = match field("probability") {
            "" => None,
            p => Some(
                p.parse::<f64>()
                    .map_err(|e| perr(format!("bad probability {p:?}: {e}")))?,
            ),
        };
        let sense_id = field("sense_id").to_string();
        if sense_id.is_empty() {
            return Err(perr("missing sense_id".into()));
        }
        let usage_id = field("usage_id").to_string();
        if !seen.insert(usage_id.clone()) {
            return Err(perr(format!("duplicate usage_id {usage_id:?}")));
        }
        let definition = enriched.then(|| field(DEFINITION_COLUMN).to_string());
        let no_candidates = is_novel && definition.as_deref() == Some("");
        out.push(PredictionRecord {
            usage_id,
            word: field("word").to_string(),
            period,
            example_text: field("example").to_string(),
            sense_id,
            is_novel,
            winning_probability,
            definition,
            no_candidates,
        });
    }
    Ok(out)
}
