//! Sense assignment for new-period usages.
//!
//! Each new-period usage is scored against every old-period gloss of its word.
//! The best sense is assigned when its probability is strictly greater than
//! the threshold; otherwise the usage gets a freshly minted novel sense ID.
//! Old-period annotated usages are copied through with their gold sense.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::str::FromStr;

use crate::corpus::{old_inventories, DatasetSplit, Period, SenseInventory, NOVEL_PREFIX};
use crate::error::{Error, Result};
use crate::metrics::score_subtask1_language;
use crate::scorer::{encode_pair, score_batch, Scorer};

pub const DEFAULT_THRESHOLD: f64 = 0.35;
pub const DEFAULT_GRID: [f64; 7] = [0.20, 0.25, 0.30, 0.35, 0.40, 0.45, 0.50];

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRecord {
    pub usage_id: String,
    pub word: String,
    pub period: Period,
    pub example_text: String,
    pub sense_id: String,
    pub is_novel: bool,
    /// Best probability over the inventory; absent when nothing was scored.
    pub winning_probability: Option<f64>,
    pub definition: Option<String>,
    /// Set on novel records for which no candidate definition existed.
    pub no_candidates: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NovelIdMode {
    /// One new sense per unmatched usage.
    #[default]
    PerUsage,
    /// One new sense per word, shared by all its unmatched usages.
    PerWord,
}

impl FromStr for NovelIdMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "per_usage" | "per-usage" => Ok(NovelIdMode::PerUsage),
            "per_word" | "per-word" => Ok(NovelIdMode::PerWord),
            other => Err(Error::InvalidInput(format!(
                "unknown novel id mode {other:?} (per_usage or per_word)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssignPolicy {
    pub threshold: f64,
    pub novel_id_mode: NovelIdMode,
}

impl Default for AssignPolicy {
    fn default() -> Self {
        AssignPolicy {
            threshold: DEFAULT_THRESHOLD,
            novel_id_mode: NovelIdMode::PerUsage,
        }
    }
}

impl AssignPolicy {
    pub fn new(threshold: f64, novel_id_mode: NovelIdMode) -> Result<Self> {
        if !(0.0..=1.0).contains(&threshold) {
            return Err(Error::InvalidInput(format!(
                "threshold must lie in [0, 1], got {threshold}"
            )));
        }
        Ok(AssignPolicy {
            threshold,
            novel_id_mode,
        })
    }
}

/// `novel:<word>:<usage_id>` or `novel:<word>`. Gold IDs may not use the
/// prefix, so minted IDs never collide with inventory IDs.
pub fn mint_novel_id(word: &str, usage_id: &str, mode: NovelIdMode) -> String {
    match mode {
        NovelIdMode::PerUsage => format!("{NOVEL_PREFIX}{word}:{usage_id}"),
        NovelIdMode::PerWord => format!("{NOVEL_PREFIX}{word}"),
    }
}

/// Inventory probabilities of one new-period usage, in inventory order.
#[derive(Debug, Clone)]
struct Scored<'a> {
    split_index: usize,
    inventory: &'a SenseInventory,
    probs: Vec<f64>,
}

fn score_new_usages<'a>(
    split: &DatasetSplit,
    inventories: &'a std::collections::BTreeMap<String, SenseInventory>,
    scorer: &Scorer,
) -> Result<Vec<Scored<'a>>> {
    let mut inputs = Vec::new();
    let mut spans = Vec::new();
    for (i, u) in split.usages().iter().enumerate() {
        if u.period != Period::New {
            continue;
        }
        let inventory = inventories.get(&u.word).ok_or_else(|| {
            Error::Validation(format!(
                "usage {:?} has word {:?} unknown to the split",
                u.usage_id, u.word
            ))
        })?;
        let start = inputs.len();
        for s in &inventory.entries {
            inputs.push(encode_pair(&u.example_text, &s.gloss)?);
        }
        spans.push((i, inventory, start..inputs.len()));
    }
    let probs = score_batch(scorer, &inputs)?;
    Ok(spans
        .into_iter()
        .map(|(split_index, inventory, range)| Scored {
            split_index,
            inventory,
            probs: probs[range].to_vec(),
        })
        .collect())
}

fn decide(
    split: &DatasetSplit,
    scored: &[Scored<'_>],
    policy: &AssignPolicy,
) -> Result<Vec<PredictionRecord>> {
    let mut by_index: HashMap<usize, &Scored<'_>> =
        scored.iter().map(|s| (s.split_index, s)).collect();
    let mut out = Vec::with_capacity(split.usages().len());
    for (i, u) in split.usages().iter().enumerate() {
        let base = PredictionRecord {
            usage_id: u.usage_id.clone(),
            word: u.word.clone(),
            period: u.period,
            example_text: u.example_text.clone(),
            sense_id: String::new(),
            is_novel: false,
            winning_probability: None,
            definition: None,
            no_candidates: false,
        };
        if u.period == Period::Old {
            let Some(gold) = &u.sense_id else {
                return Err(Error::Validation(format!(
                    "old-period usage {:?} has no sense to copy through",
                    u.usage_id
                )));
            };
            out.push(PredictionRecord {
                sense_id: gold.clone(),
                ..base
            });
            continue;
        }
        let s = by_index.remove(&i).expect("every new usage was scored");
        // First maximum wins ties.
        let best = s
            .probs
            .iter()
            .enumerate()
            .fold(None, |acc: Option<(usize, f64)>, (j, &p)| match acc {
                Some((_, bp)) if bp >= p => acc,
                _ => Some((j, p)),
            });
        let record = match best {
            Some((j, p)) if p > policy.threshold => PredictionRecord {
                sense_id: s.inventory.entries[j].sense_id.clone(),
                winning_probability: Some(p),
                ..base
            },
            other => PredictionRecord {
                sense_id: mint_novel_id(&u.word, &u.usage_id, policy.novel_id_mode),
                is_novel: true,
                winning_probability: other.map(|(_, p)| p),
                ..base
            },
        };
        out.push(record);
    }
    Ok(out)
}

/// Predictions for every usage of `split`, in file order.
pub fn assign(
    split: &DatasetSplit,
    scorer: &Scorer,
    policy: &AssignPolicy,
) -> Result<Vec<PredictionRecord>> {
    let inventories = old_inventories(split);
    let scored = score_new_usages(split, &inventories, scorer)?;
    decide(split, &scored, policy)
}

/// Order records as the usages of `split` and check that every usage that
/// belongs in a submission has exactly one record.
pub fn compose_submission(
    records: &[PredictionRecord],
    split: &DatasetSplit,
) -> Result<Vec<PredictionRecord>> {
    let mut by_id: HashMap<&str, &PredictionRecord> = HashMap::new();
    for r in records {
        if by_id.insert(r.usage_id.as_str(), r).is_some() {
            return Err(Error::Validation(format!(
                "two records for usage {:?}",
                r.usage_id
            )));
        }
    }
    let mut out = Vec::with_capacity(records.len());
    for u in split.usages() {
        if u.period == Period::Old && u.sense_id.is_none() {
            continue;
        }
        let r = by_id.remove(u.usage_id.as_str()).ok_or_else(|| {
            Error::Validation(format!("usage {:?} has no prediction record", u.usage_id))
        })?;
        if u.period == Period::Old && u.sense_id.as_deref() != Some(r.sense_id.as_str()) {
            return Err(Error::Validation(format!(
                "old-period usage {:?} must keep its gold sense",
                u.usage_id
            )));
        }
        out.push(r.clone());
    }
    if let Some(extra) = by_id.keys().next() {
        return Err(Error::Validation(format!(
            "record {extra:?} does not belong to the split"
        )));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub threshold: f64,
    pub ari: f64,
    pub f1: f64,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub best_threshold: f64,
    pub points: Vec<SweepPoint>,
}

impl SweepResult {
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("threshold\tari\tf1\tmean\n");
        for p in &self.points {
            let _ = writeln!(
                out,
                "{}\t{:.6}\t{:.6}\t{:.6}",
                p.threshold, p.ari, p.f1, p.objective
            );
        }
        out
    }
}

/// Score each threshold of `grid` by the mean of ARI and macro-F1 on `dev`
/// and return the best one, preferring the lowest threshold among ties.
pub fn sweep_threshold(
    dev: &DatasetSplit,
    scorer: &Scorer,
    grid: &[f64],
    mode: NovelIdMode,
) -> Result<SweepResult> {
    if grid.is_empty() {
        return Err(Error::InvalidInput("threshold grid is empty".into()));
    }
    let inventories = old_inventories(dev);
    let scored = score_new_usages(dev, &inventories, scorer)?;
    let mut points = Vec::with_capacity(grid.len());
    for &threshold in grid {
        let policy = AssignPolicy::new(threshold, mode)?;
        let records = decide(dev, &scored, &policy)?;
        let s = score_subtask1_language(dev, &records)?;
        let (ari, f1) = (s.ari.unwrap_or(0.0), s.f1.unwrap_or(0.0));
        let objective = match (s.ari, s.f1) {
            (Some(a), Some(f)) => (a + f) / 2.0,
            (Some(v), None) | (None, Some(v)) => v,
            (None, None) => 0.0,
        };
        points.push(SweepPoint {
            threshold,
            ari,
            f1,
            objective,
        });
    }
    let best = points
        .iter()
        .copied()
        .reduce(|best, p| {
            if p.objective > best.objective
                || (p.objective == best.objective && p.threshold < best.threshold)
            {
                p
            } else {
                best
            }
        })
        .expect("non-empty grid");
    Ok(SweepResult {
        best_threshold: best.threshold,
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{SenseDefinition, UsageExample};
    use crate::lang::Language;
    use crate::scorer::{oracle_scorer, PairScorer, ScorerInput};

    /// Returns a fixed probability per gloss.
    struct GlossTable(HashMap<String, f64>);

    impl PairScorer for GlossTable {
        fn score(&self, inputs: &[ScorerInput]) -> Result<Vec<f64>> {
            Ok(inputs
                .iter()
                .map(|i| *self.0.get(i.parts().1).unwrap_or(&0.0))
                .collect())
        }
    }

    fn usage(id: &str, sense: Option<&str>, period: Period) -> UsageExample {
        UsageExample {
            usage_id: id.into(),
            word: "w".into(),
            example_text: format!("text {id}"),
            sense_id: sense.map(Into::into),
            period,
            date: None,
        }
    }

    fn sense(id: &str, period: Period) -> SenseDefinition {
        SenseDefinition {
            sense_id: id.into(),
            word: "w".into(),
            gloss: format!("gloss {id}"),
            period,
        }
    }

    fn split() -> DatasetSplit {
        DatasetSplit::new(
            Language::Ru,
            vec![
                usage("o1", Some("s1"), Period::Old),
                usage("o2", Some("s2"), Period::Old),
                usage("n1", None, Period::New),
            ],
            vec![sense("s1", Period::Old), sense("s2", Period::Old)],
        )
        .unwrap()
    }

    fn table(p1: f64, p2: f64) -> Scorer {
        Scorer::new(GlossTable(
            [("gloss s1".to_string(), p1), ("gloss s2".to_string(), p2)].into(),
        ))
    }

    #[test]
    fn argmax_above_threshold() {
        let recs = assign(&split(), &table(0.9, 0.3), &AssignPolicy::default()).unwrap();
        let n1 = &recs[2];
        assert_eq!(n1.sense_id, "s1");
        assert!(!n1.is_novel);
        assert_eq!(n1.winning_probability, Some(0.9));
        assert_eq!(recs[0].sense_id, "s1");
        assert_eq!(recs[1].sense_id, "s2");
    }

    #[test]
    fn below_threshold_is_novel() {
        let recs = assign(&split(), &table(0.2, 0.3), &AssignPolicy::default()).unwrap();
        assert!(recs[2].is_novel);
        assert_eq!(recs[2].sense_id, "novel:w:n1");
        assert_eq!(recs[2].winning_probability, Some(0.3));
    }

    #[test]
    fn equality_is_not_enough() {
        let policy = AssignPolicy::new(0.3, NovelIdMode::PerUsage).unwrap();
        assert!(assign(&split(), &table(0.3, 0.1), &policy).unwrap()[2].is_novel);
    }

    #[test]
    fn empty_inventory_always_novel() {
        let split = DatasetSplit::new(
            Language::Fi,
            vec![
                usage("n1", None, Period::New),
                usage("n2", None, Period::New),
            ],
            vec![],
        )
        .unwrap();
        let policy = AssignPolicy::new(0.0, NovelIdMode::PerWord).unwrap();
        let recs = assign(&split, &table(1.0, 1.0), &policy).unwrap();
        assert!(recs
            .iter()
            .all(|r| r.is_novel && r.winning_probability.is_none()));
        assert_eq!(recs[0].sense_id, recs[1].sense_id);
    }

    #[test]
    fn minted_ids() {
        assert_ne!(
            mint_novel_id("w", "u1", NovelIdMode::PerUsage),
            mint_novel_id("w", "u2", NovelIdMode::PerUsage)
        );
        assert_eq!(
            mint_novel_id("w", "u1", NovelIdMode::PerWord),
            mint_novel_id("w", "u2", NovelIdMode::PerWord)
        );
    }

    #[test]
    fn compose_checks_coverage_and_order() {
        let s = split();
        let mut recs = assign(&s, &table(0.9, 0.1), &AssignPolicy::default()).unwrap();
        recs.reverse();
        let composed = compose_submission(&recs, &s).unwrap();
        let ids: Vec<_> = composed.iter().map(|r| r.usage_id.as_str()).collect();
        assert_eq!(ids, ["o1", "o2", "n1"]);
        recs.pop();
        assert!(compose_submission(&recs, &s).is_err());
    }

    #[test]
    fn sweep_edge_cases() {
        let s = DatasetSplit::new(
            Language::Ru,
            vec![
                usage("o1", Some("s1"), Period::Old),
                usage("o2", Some("s2"), Period::Old),
                usage("n1", Some("s1"), Period::New),
                usage("n2", Some("s2"), Period::New),
            ],
            vec![sense("s1", Period::Old), sense("s2", Period::Old)],
        )
        .unwrap();
        let oracle = oracle_scorer(&s);
        assert!(sweep_threshold(&s, &oracle, &[], NovelIdMode::PerUsage).is_err());
        let one = sweep_threshold(&s, &oracle, &[0.4], NovelIdMode::PerUsage).unwrap();
        assert_eq!(one.best_threshold, 0.4);
        let full = sweep_threshold(&s, &oracle, &[0.5, 0.3, 0.2], NovelIdMode::PerUsage).unwrap();
        assert_eq!(full.best_threshold, 0.2);
        assert!(full.points.iter().all(|p| p.objective == 1.0));
        assert!(full.to_tsv().starts_with("threshold\tari\tf1\tmean\n0.5\t"));
    }

    #[test]
    fn threshold_out_of_range() {
        assert!(AssignPolicy::new(1.5, NovelIdMode::PerUsage).is_err());
        assert!(AssignPolicy::new(-0.1, NovelIdMode::PerUsage).is_err());
    }
}
