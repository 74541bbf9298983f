use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, Write};

use super::{FcTag, MorphLexicon};
use crate::error::{Error, Result};
use crate::table::{format_score, Alignment};

/// Conditional probabilities between source and target feature-combination
/// tags, in both directions.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FcModel {
    // src_fc -> tgt_fc -> (p_tgt_given_src, p_src_given_tgt)
    table: HashMap<FcTag, HashMap<FcTag, (f64, f64)>>,
}

impl FcModel {
    pub fn new() -> Self {
        Self::default()
    }

    /// Sets both probabilities for a pair, replacing earlier values.
    pub fn insert(
        &mut self,
        src: FcTag,
        tgt: FcTag,
        p_tgt_given_src: f64,
        p_src_given_tgt: f64,
    ) -> Result<()> {
        for p in [p_tgt_given_src, p_src_given_tgt] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Invalid(format!("probability out of range: {p}")));
            }
        }
        self.table
            .entry(src)
            .or_default()
            .insert(tgt, (p_tgt_given_src, p_src_given_tgt));
        Ok(())
    }

    pub fn get(&self, src: &FcTag, tgt: &FcTag) -> Option<(f64, f64)> {
        self.table.get(src).and_then(|m| m.get(tgt)).copied()
    }

    /// P(tgt | src); 0 for unseen pairs.
    pub fn p_tgt_given_src(&self, src: &FcTag, tgt: &FcTag) -> f64 {
        self.get(src, tgt).map_or(0.0, |p| p.0)
    }

    /// P(src | tgt); 0 for unseen pairs.
    pub fn p_src_given_tgt(&self, src: &FcTag, tgt: &FcTag) -> f64 {
        self.get(src, tgt).map_or(0.0, |p| p.1)
    }

    pub fn len(&self) -> usize {
        self.table.values().map(HashMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All pairs, sorted by (src, tgt).
    pub fn iter(&self) -> impl Iterator<Item = (&FcTag, &FcTag, (f64, f64))> {
        let mut rows: Vec<_> = self
            .table
            .iter()
            .flat_map(|(s, m)| m.iter().map(move |(t, p)| (s, t, *p)))
            .collect();
        rows.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        rows.into_iter()
    }

    /// Σ_tgt P(tgt | src) for every src with non-zero mass.
    pub fn forward_sums(&self) -> BTreeMap<&FcTag, f64> {
        let mut sums = BTreeMap::new();
        for (s, _, (p, _)) in self.iter() {
            if p > 0.0 {
                *sums.entry(s).or_insert(0.0) += p;
            }
        }
        sums
    }

    /// Σ_src P(src | tgt) for every tgt with non-zero mass.
    pub fn backward_sums(&self) -> BTreeMap<&FcTag, f64> {
        let mut sums = BTreeMap::new();
        for (_, t, (_, p)) in self.iter() {
            if p > 0.0 {
                *sums.entry(t).or_insert(0.0) += p;
            }
        }
        sums
    }

    /// Reads `src_fc<TAB>tgt_fc<TAB>p_tgt_given_src<TAB>p_src_given_tgt`
    /// rows. Tags may contain spaces, so columns are tab-separated only.
    pub fn read<R: BufRead>(reader: R) -> Result<Self> {
        let mut model = FcModel::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').map(str::trim).collect();
            if cols.len() != 4 {
                return Err(Error::parse(
                    i + 1,
                    format!("expected 4 tab-separated columns, found {}", cols.len()),
                ));
            }
            let tag = |s: &str| FcTag::parse(s).map_err(|e| Error::parse(i + 1, e.to_string()));
            let prob = |s: &str| {
                s.parse::<f64>()
                    .ok()
                    .filter(|p| (0.0..=1.0).contains(p))
                    .ok_or_else(|| Error::parse(i + 1, format!("bad probability `{s}`")))
            };
            let (src, tgt) = (tag(cols[0])?, tag(cols[1])?);
            if model.get(&src, &tgt).is_some() {
                return Err(Error::parse(
                    i + 1,
                    format!("duplicate pair `{src}` / `{tgt}`"),
                ));
            }
            model.insert(src, tgt, prob(cols[2])?, prob(cols[3])?)?;
        }
        Ok(model)
    }

    pub fn write<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for (s, t, (pf, pb)) in self.iter() {
            writeln!(w, "{s}\t{t}\t{}\t{}", format_score(pf), format_score(pb))?;
        }
        w.flush()
    }
}

/// Event counts for both grouping directions. Counters merge by addition.
#[derive(Clone, Debug, Default)]
pub struct FcCounter {
    forward: HashMap<(FcTag, FcTag), u64>,
    backward: HashMap<(FcTag, FcTag), u64>,
    sentences: usize,
}

impl FcCounter {
    pub fn new() -> Self {
        Self::default()
    }

    /// Counts one aligned sentence pair. Each source token with at least one
    /// link yields (its tag, tags of its aligned target tokens in position
    /// order); each aligned target token yields the mirror event.
    pub fn add_sentence(
        &mut self,
        src: &[String],
        tgt: &[String],
        alignment: &Alignment,
        src_lex: &MorphLexicon,
        tgt_lex: &MorphLexicon,
    ) -> Result<()> {
        alignment.check_bounds(src.len(), tgt.len())?;
        let tags = |words: &[String], lex: &MorphLexicon| -> Vec<FcTag> {
            words
                .iter()
                .map(|w| lex.fc(w).cloned().unwrap_or_else(FcTag::unknown))
                .collect()
        };
        let src_tags = tags(src, src_lex);
        let tgt_tags = tags(tgt, tgt_lex);

        let mut by_src: Vec<Vec<usize>> = vec![Vec::new(); src.len()];
        let mut by_tgt: Vec<Vec<usize>> = vec![Vec::new(); tgt.len()];
        for link in alignment.iter() {
            by_src[link.src].push(link.tgt);
            by_tgt[link.tgt].push(link.src);
        }
        count_groups(
            &mut self.forward,
            &src_tags,
            &tgt_tags,
            by_src,
            |own, group| (own, group),
        );
        count_groups(
            &mut self.backward,
            &tgt_tags,
            &src_tags,
            by_tgt,
            |own, group| (group, own),
        );
        self.sentences += 1;
        Ok(())
    }

    pub fn sentences(&self) -> usize {
        self.sentences
    }

    pub fn merge(&mut self, other: FcCounter) {
        for (k, n) in other.forward {
            *self.forward.entry(k).or_default() += n;
        }
        for (k, n) in other.backward {
            *self.backward.entry(k).or_default() += n;
        }
        self.sentences += other.sentences;
    }

    /// Relative-frequency estimates for each direction.
    pub fn finish(self) -> FcModel {
        let mut model = FcModel::new();
        for ((s, t), p) in normalize(&self.forward, |k| &k.0) {
            model
                .table
                .entry(s)
                .or_default()
                .entry(t)
                .or_insert((0.0, 0.0))
                .0 = p;
        }
        for ((s, t), p) in normalize(&self.backward, |k| &k.1) {
            model
                .table
                .entry(s)
                .or_default()
                .entry(t)
                .or_insert((0.0, 0.0))
                .1 = p;
        }
        model
    }
}

// Keys are always stored as (src-side tag, tgt-side tag).
fn count_groups(
    counts: &mut HashMap<(FcTag, FcTag), u64>,
    own_tags: &[FcTag],
    other_tags: &[FcTag],
    groups: Vec<Vec<usize>>,
    key: impl Fn(FcTag, FcTag) -> (FcTag, FcTag),
) {
    for (i, mut group) in groups.into_iter().enumerate() {
        if group.is_empty() {
            continue;
        }
        group.sort_unstable();
        let seq = FcTag::concat(group.iter().map(|&j| &other_tags[j]));
        *counts.entry(key(own_tags[i].clone(), seq)).or_default() += 1;
    }
}

fn normalize(
    counts: &HashMap<(FcTag, FcTag), u64>,
    given: impl Fn(&(FcTag, FcTag)) -> &FcTag,
) -> Vec<((FcTag, FcTag), f64)> {
    let mut totals: HashMap<&FcTag, u64> = HashMap::new();
    for (k, n) in counts {
        *totals.entry(given(k)).or_default() += n;
    }
    counts
        .iter()
        .map(|(k, &n)| (k.clone(), n as f64 / totals[given(k)] as f64))
        .collect()
}

/// Trains a model from parallel sentences and their alignments. The two
/// streams must have the same length.
pub fn train_fc_model<B, A>(
    bitext: B,
    alignments: A,
    src_lex: &MorphLexicon,
    tgt_lex: &MorphLexicon,
) -> Result<FcModel>
where
    B: IntoIterator<Item = (Vec<String>, Vec<String>)>,
    A: IntoIterator<Item = Alignment>,
{
    let mut counter = FcCounter::new();
    let mut bitext = bitext.into_iter();
    let mut alignments = alignments.into_iter();
    loop {
        match (bitext.next(), alignments.next()) {
            (Some((s, t)), Some(a)) => {
                let n = counter.sentences() + 1;
                counter
                    .add_sentence(&s, &t, &a, src_lex, tgt_lex)
                    .map_err(|e| Error::parse(n, e.to_string()))?;
            }
            (None, None) => break,
            _ => {
                return Err(Error::Invalid(format!(
                    "sentence/alignment count mismatch after {} pairs",
                    counter.sentences()
                )))
            }
        }
    }
    Ok(counter.finish())
}
