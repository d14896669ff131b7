use proptest::prelude::*;

use sensematch::assigner::{assign, AssignPolicy, NovelIdMode};
use sensematch::corpus::{
    load_predictions, load_split, save_predictions, save_split, DatasetSplit, Period,
    SenseDefinition, UsageExample,
};
use sensematch::scorer::mock_overlap_scorer;
use sensematch::Language;

const TEXT: &str = "[a-zäöа-я\"'][a-zäöа-я ,.\"'!?-]{0,18}[a-zäöа-я.\"]";

#[derive(Debug, Clone)]
struct WordSpec {
    senses: Vec<(String, bool)>,
    usages: Vec<(String, Option<usize>, bool, Option<u16>)>,
}

fn word_spec() -> impl Strategy<Value = WordSpec> {
    (1usize..4)
        .prop_flat_map(|n| {
            (
                prop::collection::vec((TEXT, any::<bool>()), n),
                prop::collection::vec(
                    (
                        TEXT,
                        prop::option::of(0..n),
                        any::<bool>(),
                        prop::option::of(1800u16..2024),
                    ),
                    0..5,
                ),
            )
        })
        .prop_map(|(senses, usages)| WordSpec { senses, usages })
}

fn build(words: &[WordSpec]) -> DatasetSplit {
    let mut usages = Vec::new();
    let mut senses = Vec::new();
    for (w, spec) in words.iter().enumerate() {
        let word = format!("sana{w}");
        // A sense used by an old usage must itself be old.
        let old_use: Vec<bool> = (0..spec.senses.len())
            .map(|s| spec.usages.iter().any(|u| u.1 == Some(s) && u.2))
            .collect();
        for (s, (gloss, old)) in spec.senses.iter().enumerate() {
            senses.push(SenseDefinition {
                sense_id: format!("{word}.{s}"),
                word: word.clone(),
                gloss: gloss.clone(),
                period: if *old || old_use[s] {
                    Period::Old
                } else {
                    Period::New
                },
            });
        }
        for (u, (text, sense, old, date)) in spec.usages.iter().enumerate() {
            usages.push(UsageExample {
                usage_id: format!("{word}#{u}"),
                word: word.clone(),
                example_text: text.clone(),
                sense_id: sense.map(|s| format!("{word}.{s}")),
                period: if *old { Period::Old } else { Period::New },
                date: date.map(|d| d.to_string()),
            });
        }
    }
    DatasetSplit::new(Language::Fi, usages, senses).expect("generated split is valid")
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn split_survives_save_and_load(words in prop::collection::vec(word_spec(), 0..6)) {
        let split = build(&words);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("split.tsv");
        save_split(&split, &path).unwrap();
        let loaded = load_split(&path, Language::Fi).unwrap();
        prop_assert_eq!(&loaded, &split);

        // Saving the loaded split reproduces the file byte for byte.
        let again = dir.path().join("again.tsv");
        save_split(&loaded, &again).unwrap();
        prop_assert_eq!(std::fs::read(&path).unwrap(), std::fs::read(&again).unwrap());
    }

    #[test]
    fn predictions_survive_save_and_load(words in prop::collection::vec(word_spec(), 1..6)) {
        // Unannotated old usages cannot be assigned; annotate them.
        let words: Vec<WordSpec> = words
            .into_iter()
            .map(|mut w| {
                for u in &mut w.usages {
                    if u.2 && u.1.is_none() {
                        u.1 = Some(0);
                    }
                }
                w
            })
            .collect();
        let split = build(&words);
        let policy = AssignPolicy::new(0.3, NovelIdMode::PerUsage).unwrap();
        let records = assign(&split, &mock_overlap_scorer(), &policy).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sub.tsv");
        save_predictions(&records, &path, false).unwrap();
        let loaded = load_predictions(&path).unwrap();
        prop_assert_eq!(loaded.len(), records.len());
        for (a, b) in loaded.iter().zip(&records) {
            prop_assert_eq!(&a.usage_id, &b.usage_id);
            prop_assert_eq!(&a.sense_id, &b.sense_id);
            prop_assert_eq!(a.is_novel, b.is_novel);
            prop_assert_eq!(&a.example_text, &b.example_text);
            match (a.winning_probability, b.winning_probability) {
                (Some(x), Some(y)) => prop_assert!((x - y).abs() < 1e-6),
                (x, y) => prop_assert_eq!(x, y),
            }
        }
    }
}
