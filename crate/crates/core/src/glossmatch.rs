//! Definition matching for novel senses.
//!
//! Each novel-flagged usage is scored against every harvested definition of
//! its own word and receives the best one. Records that share a sense ID
//! (per-word minting) then all carry that ID's most frequently chosen
//! definition.

use std::collections::{BTreeSet, HashMap};

use crate::assigner::PredictionRecord;
use crate::error::{Error, Result};
use crate::lang::Language;
use crate::scorer::{encode_pair, score_batch, Scorer};
use crate::wiktionary::DefinitionCorpus;

/// Unique `(language, word)` pairs of the novel-flagged records, in first
/// appearance order.
pub fn definitions_needed(
    records: &[PredictionRecord],
    language: Language,
) -> Vec<(Language, String)> {
    let mut seen = BTreeSet::new();
    records
        .iter()
        .filter(|r| r.is_novel && seen.insert(r.word.as_str()))
        .map(|r| (language, r.word.clone()))
        .collect()
}

/// Attach definitions to the novel records. Non-novel records are returned
/// unchanged; novel records without candidates get an empty definition and
/// `no_candidates`.
pub fn match_definitions(
    records: &[PredictionRecord],
    corpus: &DefinitionCorpus,
    scorer: &Scorer,
    language: Language,
) -> Result<Vec<PredictionRecord>> {
    let mut out = records.to_vec();
    // Index of the chosen candidate for each matched record.
    let mut choice: Vec<Option<usize>> = vec![None; out.len()];

    let mut inputs = Vec::new();
    let mut spans = Vec::new();
    for (i, r) in out.iter().enumerate() {
        if !r.is_novel {
            continue;
        }
        if r.example_text.trim().is_empty() {
            return Err(Error::Validation(format!(
                "novel record {:?} has no usage text",
                r.usage_id
            )));
        }
        let candidates = corpus.definitions(language, &r.word).unwrap_or(&[]);
        let start = inputs.len();
        for c in candidates {
            inputs.push(encode_pair(&r.example_text, &c.definition)?);
        }
        spans.push((i, start..inputs.len()));
    }
    let probs = score_batch(scorer, &inputs)?;

    for (i, span) in spans {
        let r = &mut out[i];
        if span.is_empty() {
            r.definition = Some(String::new());
            r.no_candidates = true;
            continue;
        }
        let mut best = 0;
        for (k, p) in probs[span.clone()].iter().enumerate() {
            if *p > probs[span.start + best] {
                best = k;
            }
        }
        choice[i] = Some(best);
        r.no_candidates = false;
    }

    // One definition per sense ID: the modal choice, ties to corpus order.
    let mut by_sense: HashMap<&str, Vec<usize>> = HashMap::new();
    for (i, r) in records.iter().enumerate() {
        if choice[i].is_some() {
            by_sense.entry(r.sense_id.as_str()).or_default().push(i);
        }
    }
    let mut resolved = vec![None; out.len()];
    for members in by_sense.values() {
        let mut counts: HashMap<usize, usize> = HashMap::new();
        for &i in members {
            *counts.entry(choice[i].expect("matched")).or_default() += 1;
        }
        let modal = counts
            .iter()
            .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
            .map(|(k, _)| *k)
            .expect("non-empty group");
        for &i in members {
            resolved[i] = Some(modal);
        }
    }
    for (i, r) in out.iter_mut().enumerate() {
        if let Some(k) = resolved[i] {
            let defs = corpus.definitions(language, &r.word).expect("matched word");
            r.definition = Some(defs[k].definition.clone());
        }
    }
    Ok(out)
}
