use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, Write};

use super::{split_row, FcTag, MorphFeature, MorphValues};
use crate::error::{Error, Result};

/// Maximum-likelihood morphology of one word.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LexiconEntry {
    /// Per-feature argmax values.
    pub values: MorphValues,
    /// Argmax over whole feature combinations; can disagree with `values`.
    pub fc: FcTag,
    pub count: u64,
}

/// Word → maximum-likelihood feature values.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MorphLexicon {
    words: BTreeMap<String, LexiconEntry>,
}

impl MorphLexicon {
    pub fn get(&self, word: &str) -> Option<&LexiconEntry> {
        self.words.get(word)
    }

    /// MLE value of feature `f`, or `None` for unknown words.
    pub fn value(&self, word: &str, f: MorphFeature) -> Option<&str> {
        self.words.get(word).map(|e| e.values.get(f))
    }

    pub fn fc(&self, word: &str) -> Option<&FcTag> {
        self.words.get(word).map(|e| &e.fc)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &LexiconEntry)> {
        self.words.iter().map(|(w, e)| (w.as_str(), e))
    }

    pub fn insert(&mut self, word: impl Into<String>, entry: LexiconEntry) {
        self.words.insert(word.into(), entry);
    }

    /// Reads `word pos gen num det fc_tag count` rows.
    pub fn read<R: BufRead>(reader: R) -> Result<Self> {
        let mut lex = MorphLexicon::default();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 7 {
                return Err(Error::parse(
                    i + 1,
                    format!("expected 7 tab-separated columns, found {}", cols.len()),
                ));
            }
            let fc = FcTag::parse(cols[5]).map_err(|e| Error::parse(i + 1, e.to_string()))?;
            let count = cols[6]
                .trim()
                .parse()
                .map_err(|_| Error::parse(i + 1, format!("bad count `{}`", cols[6])))?;
            let entry = LexiconEntry {
                values: MorphValues::new(cols[1], cols[2], cols[3], cols[4]),
                fc,
                count,
            };
            if lex.words.insert(cols[0].to_string(), entry).is_some() {
                return Err(Error::parse(i + 1, format!("duplicate word `{}`", cols[0])));
            }
        }
        Ok(lex)
    }

    pub fn write<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for (word, e) in &self.words {
            let v = &e.values;
            writeln!(
                w,
                "{word}\t{}\t{}\t{}\t{}\t{}\t{}",
                v.pos, v.gen, v.num, v.det, e.fc, e.count
            )?;
        }
        w.flush()
    }
}

#[derive(Clone, Debug, Default)]
struct WordCounts {
    total: u64,
    per_feature: [HashMap<String, u64>; 4],
    joint: HashMap<MorphValues, u64>,
}

/// Accumulates feature counts from tagged corpora. Builders merge by count
/// addition, so several corpora (or parallel shards) can feed one lexicon.
#[derive(Clone, Debug, Default)]
pub struct LexiconBuilder {
    words: HashMap<String, WordCounts>,
    fc_with_pos: bool,
}

const FEATURES: [MorphFeature; 4] = [
    MorphFeature::Pos,
    MorphFeature::Gen,
    MorphFeature::Num,
    MorphFeature::Det,
];

impl LexiconBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Include POS in feature-combination tags.
    pub fn with_pos_in_fc(mut self, yes: bool) -> Self {
        self.fc_with_pos = yes;
        self
    }

    pub fn add(&mut self, word: &str, values: &MorphValues) {
        let key = self.joint_key(values);
        let c = self.words.entry(word.to_string()).or_default();
        c.total += 1;
        for (slot, f) in c.per_feature.iter_mut().zip(FEATURES) {
            *slot.entry(values.get(f).to_string()).or_default() += 1;
        }
        *c.joint.entry(key).or_default() += 1;
    }

    fn joint_key(&self, v: &MorphValues) -> MorphValues {
        let mut key = v.clone();
        if !self.fc_with_pos {
            key.pos.clear();
        }
        key
    }

    /// Reads `token pos gen num det` rows; blank lines separate sentences.
    pub fn add_corpus<R: BufRead>(&mut self, reader: R) -> Result<()> {
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let cols = split_row(&line);
            if cols.len() != 5 || cols.iter().any(|c| c.is_empty()) {
                return Err(Error::parse(
                    i + 1,
                    "expected `token<TAB>pos<TAB>gen<TAB>num<TAB>det` with non-empty values",
                ));
            }
            self.add(
                cols[0],
                &MorphValues::new(cols[1], cols[2], cols[3], cols[4]),
            );
        }
        Ok(())
    }

    pub fn merge(&mut self, other: LexiconBuilder) {
        for (word, oc) in other.words {
            let c = self.words.entry(word).or_default();
            c.total += oc.total;
            for (slot, counts) in c.per_feature.iter_mut().zip(oc.per_feature) {
                for (v, n) in counts {
                    *slot.entry(v).or_default() += n;
                }
            }
            for (k, n) in oc.joint {
                *c.joint.entry(k).or_default() += n;
            }
        }
    }

    pub fn finish(self) -> MorphLexicon {
        let with_pos = self.fc_with_pos;
        let words = self
            .words
            .into_iter()
            .map(|(word, c)| {
                let [pos, gen, num, det] = c.per_feature.map(|m| argmax(&m).clone());
                let joint = argmax(&c.joint);
                let entry = LexiconEntry {
                    values: MorphValues { pos, gen, num, det },
                    fc: FcTag::from_values(joint, with_pos),
                    count: c.total,
                };
                (word, entry)
            })
            .collect();
        MorphLexicon { words }
    }
}

/// Most frequent key; ties go to the smallest key.
fn argmax<K: Ord>(counts: &HashMap<K, u64>) -> &K {
    counts
        .iter()
        .max_by(|a, b| a.1.cmp(b.1).then_with(|| b.0.cmp(a.0)))
        .map(|(k, _)| k)
        .expect("word seen at least once")
}
