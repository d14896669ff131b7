//! Training pairs for the gloss/usage classifier.
//!
//! Positives pair each annotated usage with its own gloss. Negatives pair each
//! gloss of a word with every annotated usage of the word's other senses, so
//! every negative is drawn from the same word.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::DatasetSplit;
use crate::error::{Error, Result};
use crate::lang::Language;

pub const PAIR_COLUMNS: [&str; 4] = ["word", "example", "gloss", "label"];

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LabeledPair {
    pub word: String,
    pub example_text: String,
    pub gloss: String,
    pub label: bool,
    pub source_usage_id: String,
    pub source_sense_id: String,
}

impl LabeledPair {
    fn dedup_key(&self) -> (&str, &str, bool) {
        (&self.example_text, &self.gloss, self.label)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairDataset {
    pub language: Language,
    pub pairs: Vec<LabeledPair>,
}

impl PairDataset {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn positives(&self) -> usize {
        self.pairs.iter().filter(|p| p.label).count()
    }

    /// Stratified seeded split into `(train, dev)`. Each label contributes
    /// `ceil(count * dev_fraction)` pairs to dev, but never all of its pairs
    /// when it has more than one.
    pub fn split_dev(&self, dev_fraction: f64, seed: u64) -> Result<(PairDataset, PairDataset)> {
        if !(0.0..1.0).contains(&dev_fraction) {
            return Err(Error::InvalidInput(format!(
                "dev fraction must be in [0, 1), got {dev_fraction}"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut dev_idx = HashSet::new();
        for label in [false, true] {
            let mut idx: Vec<usize> = (0..self.pairs.len())
                .filter(|&i| self.pairs[i].label == label)
                .collect();
            idx.shuffle(&mut rng);
            let mut take = (idx.len() as f64 * dev_fraction).ceil() as usize;
            if take == idx.len() && idx.len() > 1 {
                take -= 1;
            }
            dev_idx.extend(idx.into_iter().take(take));
        }
        let (mut train, mut dev) = (Vec::new(), Vec::new());
        for (i, p) in self.pairs.iter().enumerate() {
            if dev_idx.contains(&i) {
                dev.push(p.clone());
            } else {
                train.push(p.clone());
            }
        }
        Ok((
            PairDataset {
                language: self.language,
                pairs: train,
            },
            PairDataset {
                language: self.language,
                pairs: dev,
            },
        ))
    }
}

/// One label-1 pair per annotated usage. The usage period is not consulted.
pub fn positive_pairs(split: &DatasetSplit) -> Vec<LabeledPair> {
    let glosses = split.gloss_index();
    split
        .usages()
        .iter()
        .filter_map(|u| {
            let sid = u.sense_id.as_deref()?;
            // Validated splits always carry a gloss for referenced senses.
            let gloss = glosses.get(&(u.word.as_str(), sid))?;
            Some(LabeledPair {
                word: u.word.clone(),
                example_text: u.example_text.clone(),
                gloss: gloss.to_string(),
                label: true,
                source_usage_id: u.usage_id.clone(),
                source_sense_id: sid.to_string(),
            })
        })
        .collect()
}

/// Hard negatives: for words with two or more senses, each sense gloss paired
/// with every annotated usage of the other senses of that word.
pub fn negative_pairs(split: &DatasetSplit) -> Vec<LabeledPair> {
    let mut senses_by_word: HashMap<&str, Vec<(&str, &str)>> = HashMap::new();
    for s in split.senses() {
        senses_by_word
            .entry(&s.word)
            .or_default()
            .push((&s.sense_id, &s.gloss));
    }
    let mut usages_by_word: HashMap<&str, Vec<_>> = HashMap::new();
    for u in split.usages() {
        if u.sense_id.is_some() {
            usages_by_word.entry(&u.word).or_default().push(u);
        }
    }

    let mut out = Vec::new();
    for word in split.words() {
        let Some(senses) = senses_by_word.get(word) else {
            continue;
        };
        if senses.len() < 2 {
            continue;
        }
        let usages = usages_by_word.get(word).map(Vec::as_slice).unwrap_or(&[]);
        for &(sense_id, gloss) in senses {
            for u in usages {
                if u.sense_id.as_deref() == Some(sense_id) {
                    continue;
                }
                out.push(LabeledPair {
                    word: word.to_string(),
                    example_text: u.example_text.clone(),
                    gloss: gloss.to_string(),
                    label: false,
                    source_usage_id: u.usage_id.clone(),
                    source_sense_id: sense_id.to_string(),
                });
            }
        }
    }
    out
}

/// Positives and negatives, deduplicated on `(example, gloss, label)` and
/// shuffled with `seed`.
pub fn build_training_set(split: &DatasetSplit, seed: u64) -> PairDataset {
    let mut seen = HashSet::new();
    let mut pairs: Vec<LabeledPair> = Vec::new();
    for p in positive_pairs(split)
        .into_iter()
        .chain(negative_pairs(split))
    {
        let key = (p.example_text.clone(), p.gloss.clone(), p.label);
        if seen.insert(key) {
            pairs.push(p);
        }
    }
    debug_assert!({
        let keys: HashSet<_> = pairs.iter().map(LabeledPair::dedup_key).collect();
        keys.len() == pairs.len()
    });
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    pairs.shuffle(&mut rng);
    PairDataset {
        language: split.language,
        pairs,
    }
}

pub fn save_pairs(dataset: &PairDataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    writeln!(out, "{}", PAIR_COLUMNS.join("\t")).map_err(io)?;
    for p in &dataset.pairs {
        for f in [&p.word, &p.example_text, &p.gloss] {
            if f.contains(['\t', '\n', '\r']) {
                return Err(Error::Serialization(format!(
                    "pair field contains a tab or line break: {f:?}"
                )));
            }
        }
        writeln!(
            out,
            "{}\t{}\t{}\t{}",
            p.word,
            p.example_text,
            p.gloss,
            u8::from(p.label)
        )
        .map_err(io)?;
    }
    out.flush().map_err(io)
}

/// Read a pair dump. Source IDs are not stored in the dump and come back empty.
pub fn load_pairs(path: impl AsRef<Path>, language: Language) -> Result<PairDataset> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default();
    if header.split('\t').collect::<Vec<_>>() != PAIR_COLUMNS {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: format!("expected header {:?}", PAIR_COLUMNS.join("\t")),
        });
    }
    let mut pairs = Vec::new();
    for (i, line) in lines.enumerate() {
        let lineno = i + 2;
        let fields: Vec<&str> = line.split('\t').collect();
        let perr = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line: lineno,
            message,
        };
        let [word, example, gloss, label] = fields[..] else {
            return Err(perr(format!("expected 4 columns, found {}", fields.len())));
        };
        let label = match label {
            "1" => true,
            "0" => false,
            other => return Err(perr(format!("label must be 0 or 1, got {other:?}"))),
        };
        pairs.push(LabeledPair {
            word: word.to_string(),
            example_text: example.to_string(),
            gloss: gloss.to_string(),
            label,
            source_usage_id: String::new(),
            source_sense_id: String::new(),
        });
    }
    Ok(PairDataset { language, pairs })
}
