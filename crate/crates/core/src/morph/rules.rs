use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Write};

use super::{split_row, MorphFeature};
use crate::error::{Error, Result};

const BUNDLED: &str = include_str!("../../data/rules_ar_he.tsv");

/// Allowed (source value, target value) pairs per feature. A source value
/// may map to several target values.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RuleMapping {
    pairs: BTreeMap<MorphFeature, BTreeSet<(String, String)>>,
}

impl RuleMapping {
    /// The bundled Arabic→Hebrew gender, number and determiner mapping.
    /// Columns are (Arabic value, Hebrew value); use [`transposed`] when the
    /// source language is Hebrew.
    ///
    /// [`transposed`]: RuleMapping::transposed
    pub fn bundled() -> Self {
        Self::load(BUNDLED.as_bytes()).expect("bundled rules parse")
    }

    /// Reads `FEATURE<TAB>SRC_VALUE<TAB>TGT_VALUE` rows; `#` lines are comments.
    pub fn load<R: BufRead>(reader: R) -> Result<Self> {
        let mut rules = RuleMapping::default();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let cols = split_row(&line);
            if cols.len() != 3 || cols.iter().any(|c| c.is_empty()) {
                return Err(Error::parse(
                    i + 1,
                    "expected `FEATURE<TAB>SRC_VALUE<TAB>TGT_VALUE`",
                ));
            }
            let f: MorphFeature = cols[0]
                .parse()
                .map_err(|e: Error| Error::parse(i + 1, e.to_string()))?;
            rules.allow(f, cols[1], cols[2]);
        }
        Ok(rules)
    }

    pub fn allow(&mut self, f: MorphFeature, src: &str, tgt: &str) {
        self.pairs
            .entry(f)
            .or_default()
            .insert((src.to_string(), tgt.to_string()));
    }

    pub fn allows(&self, f: MorphFeature, src: &str, tgt: &str) -> bool {
        // BTreeSet<(String, String)> can't be probed with borrowed strs
        self.pairs
            .get(&f)
            .is_some_and(|set| set.iter().any(|(s, t)| s == src && t == tgt))
    }

    /// The same mapping with source and target roles swapped.
    pub fn transposed(&self) -> Self {
        let pairs = self
            .pairs
            .iter()
            .map(|(f, set)| {
                (
                    *f,
                    set.iter().map(|(s, t)| (t.clone(), s.clone())).collect(),
                )
            })
            .collect();
        RuleMapping { pairs }
    }

    pub fn pairs(&self, f: MorphFeature) -> impl Iterator<Item = (&str, &str)> {
        self.pairs
            .get(&f)
            .into_iter()
            .flatten()
            .map(|(s, t)| (s.as_str(), t.as_str()))
    }

    pub fn len(&self) -> usize {
        self.pairs.values().map(BTreeSet::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn write<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for (f, set) in &self.pairs {
            for (s, t) in set {
                writeln!(w, "{f}\t{s}\t{t}")?;
            }
        }
        w.flush()
    }
}
