//! Evaluation for both subtasks.
//!
//! Sense assignment is scored per target word (ARI over the word's new-period
//! usages, macro-F1 over those whose gold sense is in the old inventory),
//! averaged per language and then across languages. Definitions are scored per
//! gold-novel usage with BLEU and greedy-alignment similarity against the gold
//! gloss, with the same word/language/overall averaging.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use crate::assigner::PredictionRecord;
use crate::corpus::{old_inventories, DatasetSplit, Period};
use crate::error::{Error, Result};
use crate::lang::Language;

mod ari;
mod bleu;
mod f1;
mod similarity;

pub use ari::{adjusted_rand_index, same_partition};
pub use bleu::bleu;
pub use f1::{binary_f1, macro_f1};
pub use similarity::{
    cosine_matrix, semantic_similarity, similarity_scores, BagOfWords, EmbeddingBackend,
    EncoderEmbeddings, SimilarityScore,
};

/// Scores of one language. `None` marks a metric with nothing to score.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LanguageScores {
    pub ari: Option<f64>,
    pub f1: Option<f64>,
    pub bleu: Option<f64>,
    pub bert_score: Option<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct OverallScores {
    pub ari: Option<f64>,
    pub f1: Option<f64>,
    pub bleu: Option<f64>,
    pub bert_score: Option<f64>,
    pub subtask2_overall: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EvaluationReport {
    pub per_language: BTreeMap<Language, LanguageScores>,
    pub overall: OverallScores,
}

fn mean(values: impl IntoIterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values
        .into_iter()
        .fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Mean of BLEU and the similarity score.
pub fn subtask2_overall(bleu: f64, bert_score: f64) -> f64 {
    (bleu + bert_score) / 2.0
}

impl EvaluationReport {
    /// Build a report from per-language scores; overall values are unweighted
    /// means over the languages where the metric is defined.
    pub fn from_languages(per_language: BTreeMap<Language, LanguageScores>) -> Self {
        let pick =
            |f: fn(&LanguageScores) -> Option<f64>| mean(per_language.values().filter_map(f));
        let bleu = pick(|s| s.bleu);
        let bert_score = pick(|s| s.bert_score);
        let overall = OverallScores {
            ari: pick(|s| s.ari),
            f1: pick(|s| s.f1),
            bleu,
            bert_score,
            subtask2_overall: bleu.zip(bert_score).map(|(b, s)| subtask2_overall(b, s)),
        };
        EvaluationReport {
            per_language,
            overall,
        }
    }

    pub fn to_tsv(&self) -> String {
        let fmt = |v: Option<f64>| v.map_or_else(|| "NA".to_string(), |x| format!("{x:.6}"));
        let mut out = String::from("scope\tari\tf1\tbleu\tbert_score\tsubtask2_overall\n");
        for (lang, s) in &self.per_language {
            let s2 = s
                .bleu
                .zip(s.bert_score)
                .map(|(b, m)| subtask2_overall(b, m));
            let _ = writeln!(
                out,
                "{lang}\t{}\t{}\t{}\t{}\t{}",
                fmt(s.ari),
                fmt(s.f1),
                fmt(s.bleu),
                fmt(s.bert_score),
                fmt(s2)
            );
        }
        let o = &self.overall;
        let _ = writeln!(
            out,
            "overall\t{}\t{}\t{}\t{}\t{}",
            fmt(o.ari),
            fmt(o.f1),
            fmt(o.bleu),
            fmt(o.bert_score),
            fmt(o.subtask2_overall)
        );
        out
    }

    pub fn to_table(&self) -> String {
        let fmt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:.3}"));
        let mut out = format!(
            "{:<8} {:>7} {:>7} {:>7} {:>10} {:>8}\n",
            "scope", "ARI", "F1", "BLEU", "BERTScore", "overall"
        );
        let mut row = |scope: &str, ari, f1, bleu: Option<f64>, bs: Option<f64>| {
            let s2 = bleu.zip(bs).map(|(b, m)| subtask2_overall(b, m));
            let _ = writeln!(
                out,
                "{scope:<8} {:>7} {:>7} {:>7} {:>10} {:>8}",
                fmt(ari),
                fmt(f1),
                fmt(bleu),
                fmt(bs),
                fmt(s2)
            );
        };
        for (lang, s) in &self.per_language {
            row(lang.code(), s.ari, s.f1, s.bleu, s.bert_score);
        }
        let o = &self.overall;
        row("overall", o.ari, o.f1, o.bleu, o.bert_score);
        out
    }
}

/// Merge the subtask-1 and subtask-2 halves of two reports of the same
/// languages.
pub fn merge_reports(s1: &EvaluationReport, s2: &EvaluationReport) -> EvaluationReport {
    let mut langs = s1.per_language.clone();
    for (lang, s) in &s2.per_language {
        let e = langs.entry(*lang).or_default();
        e.bleu = s.bleu;
        e.bert_score = s.bert_score;
    }
    EvaluationReport::from_languages(langs)
}

fn record_index<'r>(
    gold: &DatasetSplit,
    records: &'r [PredictionRecord],
) -> Result<HashMap<&'r str, &'r PredictionRecord>> {
    let index: HashMap<&str, &PredictionRecord> =
        records.iter().map(|r| (r.usage_id.as_str(), r)).collect();
    for u in gold.usages().iter().filter(|u| u.period == Period::New) {
        if !index.contains_key(u.usage_id.as_str()) {
            return Err(Error::Validation(format!(
                "no prediction for gold usage {:?}",
                u.usage_id
            )));
        }
    }
    Ok(index)
}

/// Per-language ARI and macro-F1 of one split's predictions.
pub fn score_subtask1_language(
    gold: &DatasetSplit,
    records: &[PredictionRecord],
) -> Result<LanguageScores> {
    let index = record_index(gold, records)?;
    let inventories = old_inventories(gold);
    let mut ari_words = Vec::new();
    let mut f1_words = Vec::new();
    for word in gold.words() {
        let mut gold_labels = Vec::new();
        let mut pred_labels = Vec::new();
        let mut f1_gold = Vec::new();
        let mut f1_pred = Vec::new();
        let inv = &inventories[word];
        for u in gold
            .usages()
            .iter()
            .filter(|u| u.word == word && u.period == Period::New)
        {
            let Some(gsid) = u.sense_id.as_deref() else {
                continue;
            };
            let pred = index[u.usage_id.as_str()].sense_id.as_str();
            gold_labels.push(gsid);
            pred_labels.push(pred);
            if inv.contains(gsid) {
                f1_gold.push(gsid);
                f1_pred.push(pred);
            }
        }
        if !gold_labels.is_empty() {
            ari_words.push(adjusted_rand_index(&gold_labels, &pred_labels)?);
        }
        if !f1_gold.is_empty() {
            f1_words.push(macro_f1(&f1_gold, &f1_pred)?);
        }
    }
    Ok(LanguageScores {
        ari: mean(ari_words),
        f1: mean(f1_words),
        ..Default::default()
    })
}

/// Sense-assignment scores for any number of languages.
pub fn score_subtask1(runs: &[(&DatasetSplit, &[PredictionRecord])]) -> Result<EvaluationReport> {
    let mut per_language = BTreeMap::new();
    for (gold, records) in runs {
        if per_language
            .insert(gold.language, score_subtask1_language(gold, records)?)
            .is_some()
        {
            return Err(Error::InvalidInput(format!(
                "language {} given twice",
                gold.language
            )));
        }
    }
    Ok(EvaluationReport::from_languages(per_language))
}

/// Per-language BLEU and similarity of one split's matched definitions.
pub fn score_subtask2_language(
    gold: &DatasetSplit,
    records: &[PredictionRecord],
    backend: &dyn EmbeddingBackend,
) -> Result<LanguageScores> {
    let index = record_index(gold, records)?;
    let inventories = old_inventories(gold);
    let glosses = gold.gloss_index();
    let mut bleu_words = Vec::new();
    let mut sim_words = Vec::new();
    for word in gold.words() {
        let inv = &inventories[word];
        let mut bleus = Vec::new();
        let mut sims = Vec::new();
        for u in gold
            .usages()
            .iter()
            .filter(|u| u.word == word && u.period == Period::New)
        {
            let Some(gsid) = u.sense_id.as_deref() else {
                continue;
            };
            if inv.contains(gsid) {
                continue;
            }
            let reference = glosses[&(word, gsid)];
            let candidate = index[u.usage_id.as_str()]
                .definition
                .as_deref()
                .unwrap_or("");
            if candidate.trim().is_empty() {
                bleus.push(0.0);
                sims.push(0.0);
            } else {
                bleus.push(bleu(candidate, reference)?);
                sims.push(semantic_similarity(candidate, reference, backend)?);
            }
        }
        if let Some(b) = mean(bleus) {
            bleu_words.push(b);
        }
        if let Some(s) = mean(sims) {
            sim_words.push(s);
        }
    }
    Ok(LanguageScores {
        bleu: mean(bleu_words),
        bert_score: mean(sim_words),
        ..Default::default()
    })
}

pub fn score_subtask2(
    runs: &[(&DatasetSplit, &[PredictionRecord])],
    backend: &dyn EmbeddingBackend,
) -> Result<EvaluationReport> {
    let mut per_language = BTreeMap::new();
    for (gold, records) in runs {
        if per_language
            .insert(
                gold.language,
                score_subtask2_language(gold, records, backend)?,
            )
            .is_some()
        {
            return Err(Error::InvalidInput(format!(
                "language {} given twice",
                gold.language
            )));
        }
    }
    Ok(EvaluationReport::from_languages(per_language))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overall_is_mean_of_bleu_and_similarity() {
        assert!((subtask2_overall(0.208, 0.726) - 0.467).abs() < 1e-12);
    }

    #[test]
    fn aggregation_ignores_language_order() {
        let scores = [
            (Language::Ru, 0.587, 0.869),
            (Language::Fi, 0.028, 0.679),
            (Language::De, 0.01, 0.63),
        ];
        let build = |order: &[usize]| {
            let map = order
                .iter()
                .map(|&i| {
                    let (l, b, s) = scores[i];
                    (
                        l,
                        LanguageScores {
                            bleu: Some(b),
                            bert_score: Some(s),
                            ..Default::default()
                        },
                    )
                })
                .collect();
            EvaluationReport::from_languages(map)
        };
        let a = build(&[0, 1, 2]);
        let b = build(&[2, 0, 1]);
        assert_eq!(a.overall, b.overall);
        let bleu = a.overall.bleu.unwrap();
        assert!((bleu - (0.587 + 0.028 + 0.01) / 3.0).abs() < 1e-12);
        assert_eq!(a.overall.ari, None);
    }

    #[test]
    fn tsv_marks_missing_values() {
        let mut map = BTreeMap::new();
        map.insert(
            Language::Fi,
            LanguageScores {
                ari: Some(1.0),
                ..Default::default()
            },
        );
        let tsv = EvaluationReport::from_languages(map).to_tsv();
        assert_eq!(
            tsv,
            "scope\tari\tf1\tbleu\tbert_score\tsubtask2_overall\n\
             fi\t1.000000\tNA\tNA\tNA\tNA\n\
             overall\t1.000000\tNA\tNA\tNA\tNA\n"
        );
    }
}
