use std::collections::HashSet;

use super::{detab, PairScorer, ScorerInput, DELIMITER};
use crate::corpus::DatasetSplit;
use crate::error::Result;

/// Returns 1.0 for `(example, gold gloss)` pairs of annotated usages and 0.0
/// for everything else, by exact text lookup.
#[derive(Debug, Clone, Default)]
pub struct OracleScorer {
    gold: HashSet<String>,
}

impl OracleScorer {
    pub fn from_split(gold: &DatasetSplit) -> Self {
        let glosses = gold.gloss_index();
        let gold = gold
            .usages()
            .iter()
            .filter_map(|u| {
                let sid = u.sense_id.as_deref()?;
                let gloss = glosses.get(&(u.word.as_str(), sid))?;
                Some(format!(
                    "{}{DELIMITER}{}",
                    detab(&u.example_text),
                    detab(gloss)
                ))
            })
            .collect();
        OracleScorer { gold }
    }
}

impl PairScorer for OracleScorer {
    fn score(&self, inputs: &[ScorerInput]) -> Result<Vec<f64>> {
        Ok(inputs
            .iter()
            .map(|i| {
                if self.gold.contains(i.as_str()) {
                    1.0
                } else {
                    0.0
                }
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use crate::corpus::{DatasetSplit, Period, SenseDefinition, UsageExample};
    use crate::lang::Language;
    use crate::pairgen::negative_pairs;
    use crate::scorer::{encode_pair, oracle_scorer, score_batch};

    #[test]
    fn gold_pairs_one_negatives_zero() {
        let split = DatasetSplit::new(
            Language::Ru,
            vec![
                UsageExample {
                    usage_id: "1".into(),
                    word: "перо".into(),
                    example_text: "У него бойкое, острое перо.".into(),
                    sense_id: Some("fig".into()),
                    period: Period::Old,
                    date: None,
                },
                UsageExample {
                    usage_id: "2".into(),
                    word: "перо".into(),
                    example_text: "Перья зверя.".into(),
                    sense_id: Some("lit".into()),
                    period: Period::Old,
                    date: None,
                },
            ],
            vec![
                SenseDefinition {
                    sense_id: "fig".into(),
                    word: "перо".into(),
                    gloss: "Символ искусства писателя".into(),
                    period: Period::Old,
                },
                SenseDefinition {
                    sense_id: "lit".into(),
                    word: "перо".into(),
                    gloss: "Роговое образование на коже".into(),
                    period: Period::Old,
                },
            ],
        )
        .unwrap();
        let s = oracle_scorer(&split);
        let gold = encode_pair("У него бойкое, острое перо.", "Символ искусства писателя").unwrap();
        assert_eq!(score_batch(&s, &[gold]).unwrap(), vec![1.0]);
        let negs: Vec<_> = negative_pairs(&split)
            .iter()
            .map(|p| encode_pair(&p.example_text, &p.gloss).unwrap())
            .collect();
        assert_eq!(negs.len(), 2);
        assert!(score_batch(&s, &negs).unwrap().iter().all(|&p| p == 0.0));
        let unknown = encode_pair("nothing", "here").unwrap();
        assert_eq!(score_batch(&s, &[unknown]).unwrap(), vec![0.0]);
    }
}
