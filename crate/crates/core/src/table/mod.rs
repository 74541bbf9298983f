//! Phrase tables: phrases, word alignments, score vectors and log-linear
//! weights, together with the text format they are stored in.
//!
//! A table line looks like
//!
//! ```text
//! src tokens ||| tgt tokens ||| phi_fwd lex_fwd phi_bwd lex_bwd [extras...] ||| 0-0 1-1
//! ```
//!
//! The four core scores are always in that order: `phi_fwd` is φ(t|s),
//! `lex_fwd` is p_w(t|s), `phi_bwd` is φ(s|t) and `lex_bwd` is p_w(s|t).
//! Extra feature columns are declared by a single `#features:` header line.

mod format;
mod reordering;
mod weights;

use std::cmp::Ordering;
use std::fmt;

pub use format::{
    format_score, parse_phrase_table, write_phrase_table, EntryReader, EntryWriter, ParseOptions,
};
pub use reordering::{
    parse_reordering_table, write_reordering_entry, write_reordering_table, ReorderingEntry,
    ReorderingTable,
};
pub use weights::{loglinear_score, LogLinearWeights, WeightVector, DEFAULT_FLOOR};

use crate::error::{Error, Result};

/// Names of the four core score columns, in file order.
pub const CORE_FEATURES: [&str; 4] = ["phi_fwd", "lex_fwd", "phi_bwd", "lex_bwd"];

/// Extras whose name starts with this prefix mark which input table an
/// entry of a combined table came from.
pub const ORIGIN_PREFIX: &str = "origin_";

/// A non-empty sequence of whitespace-free tokens.
///
/// Ordering is lexicographic over the token sequence, so `a` < `a b` < `ab`.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Phrase(Vec<String>);

impl Phrase {
    pub const DEFAULT_MAX_LEN: usize = 8;

    pub fn new<I, S>(tokens: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let tokens: Vec<String> = tokens.into_iter().map(Into::into).collect();
        if tokens.is_empty() {
            return Err(Error::InvalidPhrase("empty phrase".into()));
        }
        for tok in &tokens {
            validate_token(tok)?;
        }
        Ok(Phrase(tokens))
    }

    /// Splits `text` on whitespace.
    pub fn parse(text: &str) -> Result<Self> {
        Phrase::new(text.split_whitespace())
    }

    pub fn tokens(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub(crate) fn from_tokens_unchecked(tokens: Vec<String>) -> Self {
        Phrase(tokens)
    }

    pub(crate) fn heap_size(&self) -> usize {
        self.0.capacity() * std::mem::size_of::<String>()
            + self.0.iter().map(|t| t.capacity() + 16).sum::<usize>()
    }
}

fn validate_token(tok: &str) -> Result<()> {
    if tok.is_empty() {
        return Err(Error::InvalidPhrase("empty token".into()));
    }
    if tok.chars().any(char::is_whitespace) {
        return Err(Error::InvalidPhrase(format!(
            "token `{tok}` contains whitespace"
        )));
    }
    if tok.contains("|||") {
        return Err(Error::InvalidPhrase(format!(
            "token `{tok}` contains `|||`"
        )));
    }
    Ok(())
}

impl fmt::Display for Phrase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, tok) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            f.write_str(tok)?;
        }
        Ok(())
    }
}

/// A word link between 0-based source and target positions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AlignmentLink {
    pub src: usize,
    pub tgt: usize,
}

impl AlignmentLink {
    pub fn new(src: usize, tgt: usize) -> Self {
        AlignmentLink { src, tgt }
    }
}

impl fmt::Display for AlignmentLink {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.src, self.tgt)
    }
}

/// A sorted, duplicate-free set of alignment links.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Alignment(Vec<AlignmentLink>);

impl Alignment {
    pub fn new() -> Self {
        Alignment(Vec::new())
    }

    pub fn from_links<I: IntoIterator<Item = AlignmentLink>>(links: I) -> Self {
        let mut v: Vec<AlignmentLink> = links.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        Alignment(v)
    }

    pub fn from_pairs<I: IntoIterator<Item = (usize, usize)>>(pairs: I) -> Self {
        Self::from_links(pairs.into_iter().map(|(s, t)| AlignmentLink::new(s, t)))
    }

    /// Parses `i-j i-j ...`. An empty or blank string is the empty alignment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut links = Vec::new();
        for item in text.split_whitespace() {
            let (s, t) = item
                .split_once('-')
                .ok_or_else(|| Error::Invalid(format!("bad alignment link `{item}`")))?;
            let s = s
                .parse()
                .map_err(|_| Error::Invalid(format!("bad alignment link `{item}`")))?;
            let t = t
                .parse()
                .map_err(|_| Error::Invalid(format!("bad alignment link `{item}`")))?;
            links.push(AlignmentLink::new(s, t));
        }
        Ok(Self::from_links(links))
    }

    pub fn links(&self) -> &[AlignmentLink] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = &AlignmentLink> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn check_bounds(&self, n: usize, m: usize) -> Result<()> {
        match self.0.iter().find(|l| l.src >= n || l.tgt >= m) {
            Some(l) => Err(Error::Invalid(format!(
                "alignment link {l} out of range for phrase lengths {n}x{m}"
            ))),
            None => Ok(()),
        }
    }

    /// Swaps the roles of source and target positions.
    pub fn transposed(&self) -> Self {
        Self::from_links(self.0.iter().map(|l| AlignmentLink::new(l.tgt, l.src)))
    }

    /// Adds every link of `other`.
    pub fn union_with(&mut self, other: &Alignment) {
        if other.is_empty() {
            return;
        }
        self.0.extend_from_slice(&other.0);
        self.0.sort_unstable();
        self.0.dedup();
    }
}

impl fmt::Display for Alignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, l) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{l}")?;
        }
        Ok(())
    }
}

/// The four core translation scores plus any extra feature values.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ScoreSet {
    pub phi_fwd: f64,
    pub lex_fwd: f64,
    pub phi_bwd: f64,
    pub lex_bwd: f64,
    pub extras: Vec<f64>,
}

impl ScoreSet {
    pub fn new(phi_fwd: f64, lex_fwd: f64, phi_bwd: f64, lex_bwd: f64) -> Self {
        ScoreSet {
            phi_fwd,
            lex_fwd,
            phi_bwd,
            lex_bwd,
            extras: Vec::new(),
        }
    }

    pub fn from_core(core: [f64; 4]) -> Self {
        Self::new(core[0], core[1], core[2], core[3])
    }

    pub fn core(&self) -> [f64; 4] {
        [self.phi_fwd, self.lex_fwd, self.phi_bwd, self.lex_bwd]
    }

    /// Core scores followed by extras, in manifest order.
    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.core().into_iter().chain(self.extras.iter().copied())
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in CORE_FEATURES.iter().zip(self.core()) {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Invalid(format!("score out of range: {name} = {v}")));
            }
        }
        if let Some(v) = self.extras.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::Invalid(format!("extra score out of range: {v}")));
        }
        Ok(())
    }
}

/// One source/target phrase pair.
#[derive(Clone, Debug, PartialEq)]
pub struct PhraseEntry {
    pub src: Phrase,
    pub tgt: Phrase,
    pub scores: ScoreSet,
    pub alignment: Alignment,
}

impl PhraseEntry {
    pub fn new(src: Phrase, tgt: Phrase, scores: ScoreSet, alignment: Alignment) -> Self {
        PhraseEntry {
            src,
            tgt,
            scores,
            alignment,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.scores.validate()?;
        self.alignment.check_bounds(self.src.len(), self.tgt.len())
    }

    pub(crate) fn heap_size(&self) -> usize {
        self.src.heap_size()
            + self.tgt.heap_size()
            + self.scores.extras.capacity() * 8
            + self.alignment.0.capacity() * std::mem::size_of::<AlignmentLink>()
    }
}

/// Ordered names of the extra feature columns of a table.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Manifest {
    extras: Vec<String>,
}

impl Manifest {
    pub fn new() -> Self {
        Manifest::default()
    }

    pub fn with_extras<I, S>(extras: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut m = Manifest::new();
        for name in extras {
            m.push(name.into())?;
        }
        Ok(m)
    }

    pub fn extras(&self) -> &[String] {
        &self.extras
    }

    /// All feature names: the core four, then extras.
    pub fn names(&self) -> impl Iterator<Item = &str> {
        CORE_FEATURES
            .iter()
            .copied()
            .chain(self.extras.iter().map(String::as_str))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.names().any(|n| n == name)
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.extras.iter().position(|n| n == name)
    }

    pub fn push(&mut self, name: String) -> Result<()> {
        if name.is_empty() || name.chars().any(char::is_whitespace) {
            return Err(Error::Invalid(format!("bad feature name `{name}`")));
        }
        if self.contains(&name) {
            return Err(Error::NameCollision(name));
        }
        self.extras.push(name);
        Ok(())
    }

    fn origin_columns(&self) -> Vec<usize> {
        self.extras
            .iter()
            .enumerate()
            .filter(|(_, n)| n.starts_with(ORIGIN_PREFIX))
            .map(|(i, _)| i)
            .collect()
    }
}

/// A validated phrase table sorted by (source, target).
///
/// Entries that share a phrase pair are only allowed when they come from
/// different tables of a combination, i.e. when their origin indicators
/// differ; they are then ordered by origin.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PhraseTable {
    manifest: Manifest,
    entries: Vec<PhraseEntry>,
}

impl PhraseTable {
    pub fn new(manifest: Manifest, mut entries: Vec<PhraseEntry>) -> Result<Self> {
        let width = manifest.extras().len();
        for e in &entries {
            if e.scores.extras.len() != width {
                return Err(Error::Invalid(format!(
                    "entry `{} ||| {}` has {} extra scores, manifest declares {}",
                    e.src,
                    e.tgt,
                    e.scores.extras.len(),
                    width
                )));
            }
            e.validate()?;
        }
        let origins = manifest.origin_columns();
        // entries flagged in an earlier origin column sort first
        let origin_cmp = |a: &PhraseEntry, b: &PhraseEntry| {
            origins
                .iter()
                .map(|&c| b.scores.extras[c].total_cmp(&a.scores.extras[c]))
                .find(|o| o.is_ne())
                .unwrap_or(Ordering::Equal)
        };
        entries.sort_by(|a, b| cmp_pair(a, b).then_with(|| origin_cmp(a, b)));
        for w in entries.windows(2) {
            if cmp_pair(&w[0], &w[1])
                .then_with(|| origin_cmp(&w[0], &w[1]))
                .is_eq()
            {
                return Err(Error::DuplicatePair {
                    src: w[0].src.to_string(),
                    tgt: w[0].tgt.to_string(),
                });
            }
        }
        Ok(PhraseTable { manifest, entries })
    }

    pub fn empty(manifest: Manifest) -> Self {
        PhraseTable {
            manifest,
            entries: Vec::new(),
        }
    }

    pub fn manifest(&self) -> &Manifest {
        &self.manifest
    }

    pub fn entries(&self) -> &[PhraseEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn into_parts(self) -> (Manifest, Vec<PhraseEntry>) {
        (self.manifest, self.entries)
    }

    /// Consecutive runs of entries sharing a source phrase.
    pub fn source_groups(&self) -> impl Iterator<Item = &[PhraseEntry]> {
        self.entries.chunk_by(|a, b| a.src == b.src)
    }

    /// Drops every extra column.
    pub fn without_extras(&self) -> PhraseTable {
        let entries = self
            .entries
            .iter()
            .map(|e| {
                let mut e = e.clone();
                e.scores.extras.clear();
                e
            })
            .collect();
        PhraseTable {
            manifest: Manifest::new(),
            entries,
        }
    }

    /// Index of the origin column set for `entry`, if the table has any.
    pub fn origin_index(&self, entry: &PhraseEntry) -> Option<usize> {
        self.manifest
            .origin_columns()
            .iter()
            .position(|&c| entry.scores.extras[c] > 0.0)
    }
}

pub(crate) fn cmp_pair(a: &PhraseEntry, b: &PhraseEntry) -> Ordering {
    a.src.cmp(&b.src).then_with(|| a.tgt.cmp(&b.tgt))
}
