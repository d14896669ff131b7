//! Hashed word and character-trigram features for the pair encoder.

use crate::scorer::ScorerInput;

pub(crate) const EXAMPLE_SEGMENT: usize = 0;
pub(crate) const GLOSS_SEGMENT: usize = 1;

pub(crate) fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        hash ^= u64::from(*b);
        hash = hash.wrapping_mul(0x0100_0000_01b3);
    }
    hash
}

/// Lowercased alphanumeric runs; falls back to whitespace tokens when the
/// text has no alphanumeric characters.
pub(crate) fn words(text: &str) -> Vec<String> {
    let lower = text.to_lowercase();
    let alnum: Vec<String> = lower
        .split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(str::to_string)
        .collect();
    if alnum.is_empty() {
        lower.split_whitespace().map(str::to_string).collect()
    } else {
        alnum
    }
}

/// Feature buckets of one word: the word itself plus its boundary-marked
/// character trigrams.
pub(crate) fn word_features(word: &str, buckets: usize) -> Vec<u32> {
    let bucket = |key: &[u8]| (fnv1a(key) % buckets as u64) as u32;
    let mut out = Vec::new();
    let mut key = b"w:".to_vec();
    key.extend_from_slice(word.as_bytes());
    out.push(bucket(&key));
    let chars: Vec<char> = std::iter::once('<')
        .chain(word.chars())
        .chain(std::iter::once('>'))
        .collect();
    for tri in chars.windows(3) {
        let mut key = b"g:".to_vec();
        key.extend(tri.iter().collect::<String>().bytes());
        out.push(bucket(&key));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Token {
    pub segment: usize,
    pub features: Vec<u32>,
}

/// Featurize a pair, keeping at most `max_tokens` words. The example side is
/// cut first; the gloss is cut only if it alone exceeds the limit.
pub(crate) fn encode(input: &ScorerInput, buckets: usize, max_tokens: usize) -> Vec<Token> {
    let (example, gloss) = input.parts();
    let mut ex = words(example);
    let mut gl = words(gloss);
    if ex.len() + gl.len() > max_tokens {
        gl.truncate(max_tokens);
        ex.truncate(max_tokens - gl.len());
    }
    ex.iter()
        .map(|w| (EXAMPLE_SEGMENT, w))
        .chain(gl.iter().map(|w| (GLOSS_SEGMENT, w)))
        .map(|(segment, w)| Token {
            segment,
            features: word_features(w, buckets),
        })
        .collect()
}

/// Featurize one text as a single example-segment sequence.
pub(crate) fn encode_text(text: &str, buckets: usize) -> Vec<Token> {
    words(text)
        .iter()
        .map(|w| Token {
            segment: EXAMPLE_SEGMENT,
            features: word_features(w, buckets),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scorer::encode_pair;

    #[test]
    fn splits_on_punctuation_and_lowercases() {
        assert_eq!(
            words("У него бойкое, острое перо."),
            ["у", "него", "бойкое", "острое", "перо"]
        );
        assert_eq!(words("..."), ["..."]);
    }

    #[test]
    fn trigram_count() {
        // "<ab>" has two trigrams, plus the word feature.
        assert_eq!(word_features("ab", 1 << 10).len(), 3);
    }

    #[test]
    fn truncates_example_before_gloss() {
        let inp = encode_pair("a b c d e f", "x y").unwrap();
        let toks = encode(&inp, 1 << 10, 4);
        let segs: Vec<_> = toks.iter().map(|t| t.segment).collect();
        assert_eq!(segs, [0, 0, 1, 1]);
        let toks = encode(&inp, 1 << 10, 1);
        assert_eq!(toks.len(), 1);
        assert_eq!(toks[0].segment, GLOSS_SEGMENT);
    }
}
