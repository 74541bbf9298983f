use std::collections::HashMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::table::{LogLinearWeights, Phrase, PhraseTable, DEFAULT_FLOOR};

#[derive(Clone, Debug, PartialEq)]
pub struct DecodeConfig {
    pub weights: LogLinearWeights,
    pub max_phrase_len: usize,
    /// Log-score charged for each token passed through untranslated.
    pub unknown_word_penalty: f64,
}

impl Default for DecodeConfig {
    fn default() -> Self {
        DecodeConfig {
            weights: LogLinearWeights::default(),
            max_phrase_len: Phrase::DEFAULT_MAX_LEN,
            unknown_word_penalty: -10.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Decoded {
    pub tokens: Vec<String>,
    /// Total model score of the chosen segmentation.
    pub score: f64,
}

/// A monotone decoder: each source span maps to its single best candidate,
/// and a dynamic program picks the best segmentation of the sentence.
pub struct Decoder {
    // source tokens -> (score, target tokens) of the best candidate
    best: HashMap<Vec<String>, (f64, Vec<String>)>,
    max_len: usize,
    unknown_penalty: f64,
}

impl Decoder {
    pub fn new(table: &PhraseTable, cfg: &DecodeConfig) -> Result<Self> {
        if cfg.max_phrase_len == 0 {
            return Err(Error::Invalid(
                "max phrase length must be at least 1".into(),
            ));
        }
        if !cfg.unknown_word_penalty.is_finite() {
            return Err(Error::Invalid("unknown-word penalty must be finite".into()));
        }
        let wv = cfg.weights.resolve(table.manifest())?;
        let mut best: HashMap<Vec<String>, (f64, Vec<String>)> = HashMap::new();
        for group in table.source_groups() {
            if group[0].src.len() > cfg.max_phrase_len {
                continue;
            }
            // entries are sorted by target, so strict > keeps the smaller target on ties
            let mut top: Option<(f64, &Phrase)> = None;
            for e in group {
                let s = wv.score(e, DEFAULT_FLOOR);
                if top.is_none_or(|(b, _)| s > b) {
                    top = Some((s, &e.tgt));
                }
            }
            let (s, tgt) = top.expect("non-empty group");
            best.insert(group[0].src.tokens().to_vec(), (s, tgt.tokens().to_vec()));
        }
        Ok(Decoder {
            best,
            max_len: cfg.max_phrase_len,
            unknown_penalty: cfg.unknown_word_penalty,
        })
    }

    /// Best candidate for a source span, if the table covers it.
    pub fn candidate(&self, src: &[String]) -> Option<(f64, &[String])> {
        self.best.get(src).map(|(s, t)| (*s, t.as_slice()))
    }

    /// Score of translating a single token by passing it through, if allowed.
    pub fn passthrough(&self, token: &str) -> Option<f64> {
        let key = [token.to_string()];
        (!self.best.contains_key(key.as_slice())).then_some(self.unknown_penalty)
    }

    pub fn max_phrase_len(&self) -> usize {
        self.max_len
    }

    pub fn decode(&self, sentence: &[String]) -> Decoded {
        let n = sentence.len();
        // back[i] = (start, target) of the last phrase covering sentence[..i]
        let mut score = vec![f64::NEG_INFINITY; n + 1];
        let mut back: Vec<Option<(usize, &[String])>> = vec![None; n + 1];
        score[0] = 0.0;
        for end in 1..=n {
            // longest phrase first; strict > keeps it on ties
            for len in (1..=self.max_len.min(end)).rev() {
                let start = end - len;
                if score[start] == f64::NEG_INFINITY {
                    continue;
                }
                let span = &sentence[start..end];
                let option = match self.candidate(span) {
                    Some((s, t)) => Some((s, t)),
                    None if len == 1 => self.passthrough(&span[0]).map(|s| (s, span)),
                    None => None,
                };
                if let Some((s, t)) = option {
                    let total = score[start] + s;
                    if total > score[end] {
                        score[end] = total;
                        back[end] = Some((start, t));
                    }
                }
            }
        }
        let mut pieces = Vec::new();
        let mut at = n;
        while at > 0 {
            let (start, t) = back[at].expect("every prefix is decodable");
            pieces.push(t);
            at = start;
        }
        let tokens = pieces.into_iter().rev().flatten().cloned().collect();
        Decoded {
            tokens,
            score: score[n],
        }
    }

    /// Decodes sentences in parallel, preserving input order.
    pub fn decode_all(&self, sentences: &[Vec<String>]) -> Vec<Decoded> {
        sentences.par_iter().map(|s| self.decode(s)).collect()
    }
}

pub fn decode_monotone(
    sentence: &[String],
    table: &PhraseTable,
    cfg: &DecodeConfig,
) -> Result<Decoded> {
    Ok(Decoder::new(table, cfg)?.decode(sentence))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::{Alignment, Manifest, PhraseEntry, ScoreSet};

    fn table(rows: &[(&str, &str, f64)]) -> PhraseTable {
        let entries = rows
            .iter()
            .map(|&(s, t, p)| {
                PhraseEntry::new(
                    Phrase::parse(s).unwrap(),
                    Phrase::parse(t).unwrap(),
                    ScoreSet::new(p, 1.0, 1.0, 1.0),
                    Alignment::new(),
                )
            })
            .collect();
        PhraseTable::new(Manifest::new(), entries).unwrap()
    }

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    #[test]
    fn single_option() {
        let t = table(&[("a b", "x", 0.5)]);
        let d = decode_monotone(&toks("a b"), &t, &DecodeConfig::default()).unwrap();
        assert_eq!(d.tokens, toks("x"));
        assert!((d.score - 0.5f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn longer_phrase_wins_when_better() {
        let t = table(&[("a", "x", 0.5), ("b", "y", 0.5), ("a b", "z", 0.3)]);
        let d = decode_monotone(&toks("a b"), &t, &DecodeConfig::default()).unwrap();
        assert_eq!(d.tokens, toks("z"));
        let t = table(&[("a", "x", 0.9), ("b", "y", 0.9), ("a b", "z", 0.3)]);
        let d = decode_monotone(&toks("a b"), &t, &DecodeConfig::default()).unwrap();
        assert_eq!(d.tokens, toks("x y"));
    }

    #[test]
    fn ties_prefer_longer_then_smaller_target() {
        let t = table(&[
            ("a", "x", 0.5),
            ("b", "y", 0.5),
            ("a b", "z", 0.25),
            ("a b", "w", 0.25),
        ]);
        let d = decode_monotone(&toks("a b"), &t, &DecodeConfig::default()).unwrap();
        assert_eq!(d.tokens, toks("w"));
    }

    #[test]
    fn unknown_tokens_pass_through() {
        let t = table(&[("a", "x", 0.5)]);
        let cfg = DecodeConfig::default();
        let d = decode_monotone(&toks("q r"), &t, &cfg).unwrap();
        assert_eq!(d.tokens, toks("q r"));
        assert_eq!(d.score, -20.0);
        let d = decode_monotone(&toks("q a"), &t, &cfg).unwrap();
        assert_eq!(d.tokens, toks("q x"));
        assert!(decode_monotone(&[], &t, &cfg).unwrap().tokens.is_empty());
    }
}
