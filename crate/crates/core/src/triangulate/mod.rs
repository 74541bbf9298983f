//! Phrase-table triangulation.
//!
//! A source–target table is induced from a source–pivot table `sp` and a
//! pivot–target table `pt` by summing over every pivot phrase `e` shared by
//! both:
//!
//! ```text
//! φ(t|s)   = Σ_e φ(t|e) φ(e|s)        p_w(t|s) = Σ_e p_w(t|e) p_w(e|s)
//! φ(s|t)   = Σ_e φ(s|e) φ(e|t)        p_w(s|t) = Σ_e p_w(s|e) p_w(e|t)
//! ```
//!
//! Sums are not renormalized. Before joining, each table keeps only the top
//! `n` candidates per source phrase by log-linear score. The word alignment
//! of a composed pair is the union, over its pivots, of the relational
//! composition of the two input alignments.
//!
//! The join never holds the cross product in memory: see [`pivot_stream`].

mod stream;

use std::collections::HashMap;
use std::path::PathBuf;

pub use stream::{pivot_stream, PivotOutput, PivotStats};

use crate::error::Result;
use crate::table::{
    Alignment, AlignmentLink, LogLinearWeights, Phrase, PhraseEntry, PhraseTable, ReorderingEntry,
    ReorderingTable, WeightVector, DEFAULT_FLOOR,
};

pub const DEFAULT_TOP_N: usize = 1000;

#[derive(Clone, Debug)]
pub struct PivotConfig {
    /// Candidates kept per source phrase in each input table.
    pub top_n: usize,
    pub weights_sp: LogLinearWeights,
    pub weights_pt: LogLinearWeights,
    /// Composed pairs with fewer projected links are dropped.
    pub min_alignment_links: usize,
    pub floor: f64,
}

impl Default for PivotConfig {
    fn default() -> Self {
        PivotConfig {
            top_n: DEFAULT_TOP_N,
            weights_sp: LogLinearWeights::default(),
            weights_pt: LogLinearWeights::default(),
            min_alignment_links: 0,
            floor: DEFAULT_FLOOR,
        }
    }
}

/// Where and how much to buffer while sorting on disk.
#[derive(Clone, Debug)]
pub struct SortOptions {
    /// Base directory for scratch files. Falls back to `PIVOTSMITH_TMPDIR`,
    /// then the system temp dir.
    pub tmpdir: Option<PathBuf>,
    /// Approximate in-memory bytes per sorter before spilling.
    pub budget: usize,
}

impl Default for SortOptions {
    fn default() -> Self {
        SortOptions {
            tmpdir: None,
            budget: crate::extsort::DEFAULT_BUDGET,
        }
    }
}

impl SortOptions {
    pub fn scratch_base(&self) -> PathBuf {
        self.tmpdir
            .clone()
            .or_else(|| std::env::var_os("PIVOTSMITH_TMPDIR").map(PathBuf::from))
            .unwrap_or_else(std::env::temp_dir)
    }
}

/// Keeps, per source phrase, the `n` entries with the highest log-linear
/// score. Equal scores prefer the lexicographically smaller target.
pub fn filter_top_n(
    table: &PhraseTable,
    weights: &LogLinearWeights,
    n: usize,
) -> Result<PhraseTable> {
    let wv = weights.resolve(table.manifest())?;
    let mut kept = Vec::with_capacity(table.len().min(n.saturating_mul(16)));
    for group in table.source_groups() {
        kept.extend(select_top_n(group.to_vec(), &wv, n, DEFAULT_FLOOR));
    }
    PhraseTable::new(table.manifest().clone(), kept)
}

/// `group` holds one source phrase's entries sorted by target; the result
/// keeps that order.
pub(crate) fn select_top_n(
    group: Vec<PhraseEntry>,
    wv: &WeightVector,
    n: usize,
    floor: f64,
) -> Vec<PhraseEntry> {
    if group.len() <= n {
        return group;
    }
    let mut ranked: Vec<(f64, usize)> = group
        .iter()
        .enumerate()
        .map(|(i, e)| (wv.score(e, floor), i))
        .collect();
    ranked.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut keep = vec![false; group.len()];
    for &(_, i) in ranked.iter().take(n) {
        keep[i] = true;
    }
    group
        .into_iter()
        .zip(keep)
        .filter_map(|(e, k)| k.then_some(e))
        .collect()
}

/// Relational composition: `(i, k)` for every `(i, j)` in `a_sp` and
/// `(j, k)` in `a_pt`.
pub fn project_alignment(a_sp: &Alignment, a_pt: &Alignment) -> Alignment {
    let pt = a_pt.links();
    let mut out = Vec::new();
    for l in a_sp.iter() {
        let start = pt.partition_point(|p| p.src < l.tgt);
        out.extend(
            pt[start..]
                .iter()
                .take_while(|p| p.src == l.tgt)
                .map(|p| AlignmentLink::new(l.src, p.tgt)),
        );
    }
    Alignment::from_links(out)
}

/// Counts pivot-table pairs before they exist: Σ over pivot phrases `e` of
/// (#sources of `e` in sp) × (#targets of `e` in pt). Collisions between
/// pivots can only make the real table smaller.
#[derive(Debug, Default)]
pub struct PivotSizeEstimator {
    counts: HashMap<Phrase, (u64, u64)>,
}

impl PivotSizeEstimator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_sp(&mut self, e: &PhraseEntry) {
        self.bump(&e.tgt).0 += 1;
    }

    pub fn add_pt(&mut self, e: &PhraseEntry) {
        self.bump(&e.src).1 += 1;
    }

    fn bump(&mut self, pivot: &Phrase) -> &mut (u64, u64) {
        if !self.counts.contains_key(pivot) {
            self.counts.insert(pivot.clone(), (0, 0));
        }
        self.counts.get_mut(pivot).expect("inserted")
    }

    pub fn estimate(&self) -> u64 {
        self.counts
            .values()
            .fold(0u64, |acc, &(s, t)| acc.saturating_add(s.saturating_mul(t)))
    }
}

pub fn estimate_pivot_size(sp: &PhraseTable, pt: &PhraseTable) -> u64 {
    let mut est = PivotSizeEstimator::new();
    sp.entries().iter().for_each(|e| est.add_sp(e));
    pt.entries().iter().for_each(|e| est.add_pt(e));
    est.estimate()
}

fn entries_iter(t: &PhraseTable) -> impl Iterator<Item = Result<PhraseEntry>> + '_ {
    t.entries().iter().cloned().map(Ok)
}

/// Triangulates two in-memory tables. Extras of the inputs are dropped.
pub fn pivot_compose(sp: &PhraseTable, pt: &PhraseTable, cfg: &PivotConfig) -> Result<PhraseTable> {
    let mut out = Vec::new();
    pivot_stream(
        entries_iter(sp),
        sp.manifest(),
        entries_iter(pt),
        pt.manifest(),
        cfg,
        &SortOptions::default(),
        None,
        |o| {
            out.push(o.entry);
            Ok(())
        },
    )?;
    PhraseTable::new(Default::default(), out)
}

/// Orientation probabilities for every pair of `pivot_compose(sp, pt, cfg)`:
/// `p(o | s, t) ∝ Σ_e φ(e|s) · p(o | e, t)`, renormalized per direction.
/// A pivot with no `(e, t)` entry in `pt_reo` contributes the uniform
/// distribution.
pub fn pivot_reordering(
    sp: &PhraseTable,
    pt: &PhraseTable,
    pt_reo: &ReorderingTable,
    cfg: &PivotConfig,
) -> Result<ReorderingTable> {
    let mut out: Vec<ReorderingEntry> = Vec::new();
    pivot_stream(
        entries_iter(sp),
        sp.manifest(),
        entries_iter(pt),
        pt.manifest(),
        cfg,
        &SortOptions::default(),
        Some(pt_reo),
        |o| {
            out.extend(o.reordering);
            Ok(())
        },
    )?;
    ReorderingTable::new(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::{Manifest, ScoreSet};

    fn entry(src: &str, tgt: &str, core: [f64; 4], align: &[(usize, usize)]) -> PhraseEntry {
        PhraseEntry::new(
            Phrase::parse(src).unwrap(),
            Phrase::parse(tgt).unwrap(),
            ScoreSet::from_core(core),
            Alignment::from_pairs(align.iter().copied()),
        )
    }

    fn table(entries: Vec<PhraseEntry>) -> PhraseTable {
        PhraseTable::new(Manifest::new(), entries).unwrap()
    }

    fn targets(t: &PhraseTable) -> Vec<String> {
        t.entries().iter().map(|e| e.tgt.to_string()).collect()
    }

    #[test]
    fn filter_keeps_best() {
        // log scores -1, -2, -3 through phi_fwd only
        let t = table(vec![
            entry("h", "a", [(-1f64).exp(), 1.0, 1.0, 1.0], &[]),
            entry("h", "b", [(-2f64).exp(), 1.0, 1.0, 1.0], &[]),
            entry("h", "c", [(-3f64).exp(), 1.0, 1.0, 1.0], &[]),
        ]);
        let f = filter_top_n(&t, &Default::default(), 2).unwrap();
        assert_eq!(targets(&f), ["a", "b"]);
        assert_eq!(filter_top_n(&t, &Default::default(), 3).unwrap(), t);
        assert_eq!(filter_top_n(&t, &Default::default(), 10).unwrap(), t);
    }

    #[test]
    fn filter_tie_prefers_smaller_target() {
        let t = table(vec![
            entry("h", "z", [0.5; 4], &[]),
            entry("h", "y", [0.5; 4], &[]),
        ]);
        assert_eq!(
            targets(&filter_top_n(&t, &Default::default(), 1).unwrap()),
            ["y"]
        );
    }

    #[test]
    fn filter_is_per_source() {
        let t = table(vec![
            entry("g", "a", [0.1; 4], &[]),
            entry("g", "b", [0.2; 4], &[]),
            entry("h", "a", [0.3; 4], &[]),
        ]);
        let f = filter_top_n(&t, &Default::default(), 1).unwrap();
        assert_eq!(targets(&f), ["b", "a"]);
    }

    #[test]
    fn projection_examples() {
        let a = Alignment::from_pairs([(0, 0), (1, 1)]);
        let b = Alignment::from_pairs([(0, 1), (1, 0)]);
        assert_eq!(
            project_alignment(&a, &b),
            Alignment::from_pairs([(0, 1), (1, 0)])
        );
        assert!(project_alignment(&a, &Alignment::new()).is_empty());
        let a = Alignment::from_pairs([(0, 0), (1, 0)]);
        let b = Alignment::from_pairs([(0, 0), (0, 1)]);
        assert_eq!(
            project_alignment(&a, &b),
            Alignment::from_pairs([(0, 0), (0, 1), (1, 0), (1, 1)])
        );
    }

    #[test]
    fn compose_single_pivot() {
        let sp = table(vec![entry("h", "e", [0.5, 0.6, 0.7, 0.8], &[(0, 0)])]);
        let pt = table(vec![entry("e", "a", [0.4, 0.3, 0.2, 0.1], &[(0, 0)])]);
        let out = pivot_compose(&sp, &pt, &PivotConfig::default()).unwrap();
        assert_eq!(out.len(), 1);
        let s = &out.entries()[0].scores;
        assert!((s.phi_fwd - 0.2).abs() < 1e-15);
        assert!((s.lex_fwd - 0.18).abs() < 1e-15);
        assert!((s.phi_bwd - 0.14).abs() < 1e-15);
        assert!((s.lex_bwd - 0.08).abs() < 1e-15);
        assert_eq!(out.entries()[0].alignment, Alignment::from_pairs([(0, 0)]));
    }

    #[test]
    fn compose_two_pivots_sums() {
        let sp = table(vec![
            entry("h", "e1", [0.5, 0.5, 0.5, 0.5], &[(0, 0)]),
            entry("h", "e2", [0.25, 0.5, 0.5, 0.5], &[]),
        ]);
        let pt = table(vec![
            entry("e1", "a", [0.4, 0.5, 0.5, 0.5], &[(0, 0)]),
            entry("e2", "a", [0.2, 0.5, 0.5, 0.5], &[(0, 0)]),
        ]);
        let out = pivot_compose(&sp, &pt, &PivotConfig::default()).unwrap();
        assert_eq!(out.len(), 1);
        assert!((out.entries()[0].scores.phi_fwd - 0.25).abs() < 1e-15);
        // no renormalization: 0.5·0.5 + 0.5·0.5
        assert_eq!(out.entries()[0].scores.lex_fwd, 0.5);
        assert_eq!(out.entries()[0].alignment, Alignment::from_pairs([(0, 0)]));
    }

    #[test]
    fn min_links_drops_unaligned() {
        let sp = table(vec![
            entry("h", "e", [0.5; 4], &[]),
            entry("g", "e", [0.5; 4], &[(0, 0)]),
        ]);
        let pt = table(vec![entry("e", "a", [0.5; 4], &[(0, 0)])]);
        let cfg = PivotConfig {
            min_alignment_links: 1,
            ..Default::default()
        };
        let out = pivot_compose(&sp, &pt, &cfg).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out.entries()[0].src.to_string(), "g");
    }

    #[test]
    fn disjoint_pivots() {
        let sp = table(vec![entry("h", "e", [0.5; 4], &[])]);
        let pt = table(vec![entry("f", "a", [0.5; 4], &[])]);
        assert!(pivot_compose(&sp, &pt, &PivotConfig::default())
            .unwrap()
            .is_empty());
        assert_eq!(estimate_pivot_size(&sp, &pt), 0);
    }

    #[test]
    fn size_estimate_is_product() {
        let sp = table(vec![
            entry("h1", "e", [0.5; 4], &[]),
            entry("h2", "e", [0.5; 4], &[]),
        ]);
        let pt = table(vec![
            entry("e", "a1", [0.5; 4], &[]),
            entry("e", "a2", [0.5; 4], &[]),
            entry("e", "a3", [0.5; 4], &[]),
        ]);
        assert_eq!(estimate_pivot_size(&sp, &pt), 6);
    }

    fn reo(src: &str, tgt: &str, probs: [f64; 6]) -> ReorderingEntry {
        ReorderingEntry {
            src: Phrase::parse(src).unwrap(),
            tgt: Phrase::parse(tgt).unwrap(),
            probs,
        }
    }

    #[test]
    fn reordering_copy_through() {
        let sp = table(vec![entry("h", "e", [1.0; 4], &[])]);
        let pt = table(vec![entry("e", "a", [0.5; 4], &[])]);
        let probs = [0.7, 0.2, 0.1, 0.3, 0.3, 0.4];
        let pt_reo = ReorderingTable::new(vec![reo("e", "a", probs)]).unwrap();
        let out = pivot_reordering(&sp, &pt, &pt_reo, &PivotConfig::default()).unwrap();
        assert_eq!(out.len(), 1);
        for (x, y) in out.entries()[0].probs.iter().zip(probs) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn reordering_two_pivots_average() {
        let sp = table(vec![
            entry("h", "e1", [0.5; 4], &[]),
            entry("h", "e2", [0.5; 4], &[]),
        ]);
        let pt = table(vec![
            entry("e1", "a", [0.5; 4], &[]),
            entry("e2", "a", [0.5; 4], &[]),
        ]);
        let pt_reo = ReorderingTable::new(vec![
            reo("e1", "a", [1.0, 0.0, 0.0, 1.0, 0.0, 0.0]),
            reo("e2", "a", [0.0, 1.0, 0.0, 0.0, 1.0, 0.0]),
        ])
        .unwrap();
        let out = pivot_reordering(&sp, &pt, &pt_reo, &PivotConfig::default()).unwrap();
        let want = [0.5, 0.5, 0.0, 0.5, 0.5, 0.0];
        for (x, y) in out.entries()[0].probs.iter().zip(want) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn reordering_missing_is_uniform() {
        let sp = table(vec![entry("h", "e", [0.5; 4], &[])]);
        let pt = table(vec![entry("e", "a", [0.5; 4], &[])]);
        let out = pivot_reordering(
            &sp,
            &pt,
            &ReorderingTable::default(),
            &PivotConfig::default(),
        )
        .unwrap();
        for x in out.entries()[0].probs {
            assert!((x - 1.0 / 3.0).abs() < 1e-12);
        }
    }
}
