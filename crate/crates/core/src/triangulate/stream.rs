//! Sort-merge triangulation over streams.
//!
//! 1. Both inputs are externally sorted by (source, target) and filtered to
//!    the top `n` per source phrase.
//! 2. The filtered source–pivot stream is re-sorted by pivot phrase; the
//!    pivot–target stream already is.
//! 3. Pivot groups are joined one at a time. Each (source, pivot, target)
//!    triple becomes a contribution, spilled to a third sorter keyed by
//!    (source, target, pivot rank).
//! 4. Adjacent contributions of a pair are summed in pivot order and
//!    emitted, so the output comes out sorted.
//!
//! Memory is bounded by the sorter budgets plus the largest pivot group.

use std::cmp::Ordering;
use std::io::{self, Read};

use log::warn;
use rayon::prelude::*;

use super::{project_alignment, select_top_n, PivotConfig, SortOptions};
use crate::error::{Error, Result};
use crate::extsort::{codec, ExternalSorter, SpillRecord};
use crate::table::{
    cmp_pair, Alignment, AlignmentLink, Manifest, Phrase, PhraseEntry, ReorderingEntry,
    ReorderingTable, ScoreSet, WeightVector,
};

const JOIN_BATCH: usize = 1 << 15;
const UNIFORM: [f64; 3] = [1.0 / 3.0; 3];

/// One composed entry and, when requested, its orientation probabilities.
#[derive(Debug, Clone)]
pub struct PivotOutput {
    pub entry: PhraseEntry,
    pub reordering: Option<ReorderingEntry>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PivotStats {
    pub sp_entries: u64,
    pub sp_kept: u64,
    pub pt_entries: u64,
    pub pt_kept: u64,
    pub shared_pivots: u64,
    pub contributions: u64,
    pub emitted: u64,
    pub dropped_min_links: u64,
    /// Summed scores above 1 that were capped at 1.
    pub clamped: u64,
    pub spilled_runs: u64,
}

/// Triangulates two entry streams in any order, handing composed entries to
/// `sink` in (source, target) order.
#[allow(clippy::too_many_arguments)]
pub fn pivot_stream<I, J, F>(
    sp: I,
    sp_manifest: &Manifest,
    pt: J,
    pt_manifest: &Manifest,
    cfg: &PivotConfig,
    opts: &SortOptions,
    pt_reo: Option<&ReorderingTable>,
    mut sink: F,
) -> Result<PivotStats>
where
    I: Iterator<Item = Result<PhraseEntry>>,
    J: Iterator<Item = Result<PhraseEntry>>,
    F: FnMut(PivotOutput) -> Result<()>,
{
    if cfg.top_n == 0 {
        return Err(Error::Invalid("top-n must be at least 1".into()));
    }
    if cfg.floor.is_nan() || cfg.floor <= 0.0 {
        return Err(Error::Invalid("probability floor must be positive".into()));
    }
    for (name, m) in [("source-pivot", sp_manifest), ("pivot-target", pt_manifest)] {
        if !m.extras().is_empty() {
            warn!(
                "{name} table extras [{}] are dropped during pivoting",
                m.extras().join(", ")
            );
        }
    }
    let wv_sp = cfg.weights_sp.resolve(sp_manifest)?;
    let wv_pt = cfg.weights_pt.resolve(pt_manifest)?;

    let scratch = tempfile::Builder::new()
        .prefix("pivotsmith-")
        .tempdir_in(opts.scratch_base())?;
    let dir = scratch.path();
    let mut stats = PivotStats::default();

    // source-pivot: sort by pair, filter, re-key by pivot
    let mut sp_sorter = ExternalSorter::new(dir, opts.budget);
    for e in sp {
        sp_sorter.push(ByPair(e?))?;
    }
    stats.sp_entries = sp_sorter.len();
    stats.spilled_runs += sp_sorter.spilled_runs() as u64;
    let mut by_pivot = ExternalSorter::new(dir, opts.budget);
    for group in filtered_groups(sp_sorter.finish()?, &wv_sp, cfg) {
        for e in group? {
            by_pivot.push(PivotSide {
                pivot: e.tgt,
                other: e.src,
                core: e.scores.core(),
                alignment: e.alignment,
            })?;
            stats.sp_kept += 1;
        }
    }
    stats.spilled_runs += by_pivot.spilled_runs() as u64;

    // pivot-target: sort by pair and filter; groups are keyed by pivot already
    let mut pt_sorter = ExternalSorter::new(dir, opts.budget);
    for e in pt {
        pt_sorter.push(ByPair(e?))?;
    }
    stats.pt_entries = pt_sorter.len();
    stats.spilled_runs += pt_sorter.spilled_runs() as u64;

    let mut left = pivot_groups(by_pivot.finish()?);
    let mut right = filtered_groups(pt_sorter.finish()?, &wv_pt, cfg);
    let mut contributions = ExternalSorter::new(dir, opts.budget);
    let mut batch: Vec<(Vec<PivotSide>, Vec<PhraseEntry>, u64)> = Vec::new();
    let mut batch_size = 0usize;
    let mut rank = 0u64;

    let mut l = left.next().transpose()?;
    let mut r = next_counted(&mut right, &mut stats.pt_kept)?;
    while let (Some(lg), Some(rg)) = (&l, &r) {
        match lg[0].pivot.cmp(&rg[0].src) {
            Ordering::Less => l = left.next().transpose()?,
            Ordering::Greater => r = next_counted(&mut right, &mut stats.pt_kept)?,
            Ordering::Equal => {
                let lg = l.take().expect("left group");
                let rg = r.take().expect("right group");
                batch_size += lg.len() * rg.len();
                batch.push((lg, rg, rank));
                rank += 1;
                if batch_size >= JOIN_BATCH {
                    flush_batch(&mut batch, pt_reo, &mut contributions)?;
                    batch_size = 0;
                }
                l = left.next().transpose()?;
                r = next_counted(&mut right, &mut stats.pt_kept)?;
            }
        }
    }
    // drain the right side so kept counts are complete
    while r.is_some() {
        r = next_counted(&mut right, &mut stats.pt_kept)?;
    }
    flush_batch(&mut batch, pt_reo, &mut contributions)?;
    stats.shared_pivots = rank;
    stats.contributions = contributions.len();
    stats.spilled_runs += contributions.spilled_runs() as u64;

    let mut sorted = contributions.finish()?;
    let mut pending = None;
    while let Some(group) = next_run(&mut sorted, &mut pending, |a: &Contribution, b| {
        a.src == b.src && a.tgt == b.tgt
    })? {
        let out = aggregate(group, pt_reo.is_some(), &mut stats.clamped);
        if out.entry.alignment.len() < cfg.min_alignment_links {
            stats.dropped_min_links += 1;
            continue;
        }
        stats.emitted += 1;
        sink(out)?;
    }
    if stats.clamped > 0 {
        warn!(
            "{} composed scores exceeded 1 and were capped",
            stats.clamped
        );
    }
    Ok(stats)
}

fn next_counted(
    it: &mut impl Iterator<Item = Result<Vec<PhraseEntry>>>,
    kept: &mut u64,
) -> Result<Option<Vec<PhraseEntry>>> {
    let g = it.next().transpose()?;
    if let Some(g) = &g {
        *kept += g.len() as u64;
    }
    Ok(g)
}

fn flush_batch(
    batch: &mut Vec<(Vec<PivotSide>, Vec<PhraseEntry>, u64)>,
    pt_reo: Option<&ReorderingTable>,
    out: &mut ExternalSorter<Contribution>,
) -> io::Result<()> {
    let made: Vec<Contribution> = batch
        .par_iter()
        .flat_map_iter(|(left, right, rank)| {
            left.iter().flat_map(move |s| {
                right
                    .iter()
                    .map(move |t| Contribution::new(s, t, *rank, pt_reo))
            })
        })
        .collect();
    batch.clear();
    for c in made {
        out.push(c)?;
    }
    Ok(())
}

fn aggregate(group: Vec<Contribution>, with_reordering: bool, clamped: &mut u64) -> PivotOutput {
    let mut sum = [0.0f64; 4];
    let mut mix = [0.0f64; 6];
    let mut alignment = Alignment::new();
    let mut it = group.into_iter();
    let first = it.next().expect("non-empty group");
    let (src, tgt) = (first.src.clone(), first.tgt.clone());
    for c in std::iter::once(first).chain(it) {
        for (acc, v) in sum.iter_mut().zip(c.core) {
            *acc += v;
        }
        for (acc, v) in mix.iter_mut().zip(c.reordering) {
            *acc += v;
        }
        alignment.union_with(&c.alignment);
    }
    for v in sum.iter_mut() {
        if *v > 1.0 {
            *v = 1.0;
            *clamped += 1;
        }
    }
    let reordering = with_reordering.then(|| ReorderingEntry {
        src: src.clone(),
        tgt: tgt.clone(),
        probs: renormalize(mix),
    });
    PivotOutput {
        entry: PhraseEntry::new(src, tgt, ScoreSet::from_core(sum), alignment),
        reordering,
    }
}

fn renormalize(mix: [f64; 6]) -> [f64; 6] {
    let mut out = [0.0; 6];
    for d in 0..2 {
        let tri = &mix[3 * d..3 * d + 3];
        let total: f64 = tri.iter().sum();
        for o in 0..3 {
            out[3 * d + o] = if total > 0.0 {
                tri[o] / total
            } else {
                UNIFORM[o]
            };
        }
    }
    out
}

fn filtered_groups<'a>(
    mut sorted: impl Iterator<Item = io::Result<ByPair>> + 'a,
    wv: &'a WeightVector,
    cfg: &'a PivotConfig,
) -> impl Iterator<Item = Result<Vec<PhraseEntry>>> + 'a {
    let mut pending: Option<ByPair> = None;
    std::iter::from_fn(move || {
        let group = match next_run(&mut sorted, &mut pending, |a, b| a.0.src == b.0.src) {
            Ok(Some(g)) => g,
            Ok(None) => return None,
            Err(e) => return Some(Err(e)),
        };
        if let Some(w) = group.windows(2).find(|w| w[0].0.tgt == w[1].0.tgt) {
            return Some(Err(Error::DuplicatePair {
                src: w[0].0.src.to_string(),
                tgt: w[0].0.tgt.to_string(),
            }));
        }
        let entries = group.into_iter().map(|b| b.0).collect();
        Some(Ok(select_top_n(entries, wv, cfg.top_n, cfg.floor)))
    })
}

fn pivot_groups(
    mut sorted: impl Iterator<Item = io::Result<PivotSide>>,
) -> impl Iterator<Item = Result<Vec<PivotSide>>> {
    let mut pending = None;
    std::iter::from_fn(move || {
        next_run(&mut sorted, &mut pending, |a: &PivotSide, b| {
            a.pivot == b.pivot
        })
        .transpose()
    })
}

/// Collects the next run of items for which `same(first, item)` holds.
fn next_run<T>(
    it: &mut impl Iterator<Item = io::Result<T>>,
    pending: &mut Option<T>,
    same: impl Fn(&T, &T) -> bool,
) -> Result<Option<Vec<T>>> {
    let first = match pending.take() {
        Some(x) => x,
        None => match it.next() {
            Some(x) => x?,
            None => return Ok(None),
        },
    };
    let mut run = vec![first];
    for x in it.by_ref() {
        let x = x?;
        if same(&run[0], &x) {
            run.push(x);
        } else {
            *pending = Some(x);
            break;
        }
    }
    Ok(Some(run))
}

fn put_phrase(out: &mut Vec<u8>, p: &Phrase) {
    codec::put_strs(out, p.tokens());
}

fn get_phrase<R: Read>(r: &mut R) -> io::Result<Phrase> {
    Ok(Phrase::from_tokens_unchecked(codec::get_strs(r)?))
}

fn put_alignment(out: &mut Vec<u8>, a: &Alignment) {
    codec::put_u32(out, a.len() as u32);
    for l in a.iter() {
        codec::put_u32(out, l.src as u32);
        codec::put_u32(out, l.tgt as u32);
    }
}

fn get_alignment<R: Read>(r: &mut R) -> io::Result<Alignment> {
    let n = codec::get_u32(r)?;
    let mut links = Vec::with_capacity(n as usize);
    for _ in 0..n {
        let s = codec::get_u32(r)? as usize;
        let t = codec::get_u32(r)? as usize;
        links.push(AlignmentLink::new(s, t));
    }
    Ok(Alignment::from_links(links))
}

fn put_f64s(out: &mut Vec<u8>, vs: &[f64]) {
    for &v in vs {
        codec::put_f64(out, v);
    }
}

fn get_f64s<R: Read, const N: usize>(r: &mut R) -> io::Result<[f64; N]> {
    let mut a = [0.0; N];
    for v in a.iter_mut() {
        *v = codec::get_f64(r)?;
    }
    Ok(a)
}

/// A whole entry ordered by (source, target).
struct ByPair(PhraseEntry);

impl PartialEq for ByPair {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for ByPair {}
impl PartialOrd for ByPair {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for ByPair {
    fn cmp(&self, other: &Self) -> Ordering {
        cmp_pair(&self.0, &other.0)
    }
}

impl SpillRecord for ByPair {
    fn encode(&self, out: &mut Vec<u8>) {
        let e = &self.0;
        codec::put_u32(out, e.src.len() as u32);
        for t in e.src.tokens() {
            codec::put_str(out, t);
        }
        put_phrase(out, &e.tgt);
        put_f64s(out, &e.scores.core());
        codec::put_u32(out, e.scores.extras.len() as u32);
        put_f64s(out, &e.scores.extras);
        put_alignment(out, &e.alignment);
    }

    fn decode<R: Read>(r: &mut R) -> io::Result<Option<Self>> {
        let Some(n) = codec::get_u32_or_eof(r)? else {
            return Ok(None);
        };
        let src = Phrase::from_tokens_unchecked(codec::get_strs_with_len(r, n)?);
        let tgt = get_phrase(r)?;
        let core: [f64; 4] = get_f64s(r)?;
        let n_extras = codec::get_u32(r)?;
        let mut scores = ScoreSet::from_core(core);
        scores.extras = (0..n_extras)
            .map(|_| codec::get_f64(r))
            .collect::<io::Result<_>>()?;
        let alignment = get_alignment(r)?;
        Ok(Some(ByPair(PhraseEntry::new(src, tgt, scores, alignment))))
    }

    fn heap_size(&self) -> usize {
        self.0.heap_size()
    }
}

/// A filtered source–pivot entry keyed by its pivot phrase.
struct PivotSide {
    pivot: Phrase,
    other: Phrase,
    core: [f64; 4],
    alignment: Alignment,
}

impl PartialEq for PivotSide {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for PivotSide {}
impl PartialOrd for PivotSide {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for PivotSide {
    fn cmp(&self, other: &Self) -> Ordering {
        self.pivot
            .cmp(&other.pivot)
            .then_with(|| self.other.cmp(&other.other))
    }
}

impl SpillRecord for PivotSide {
    fn encode(&self, out: &mut Vec<u8>) {
        codec::put_u32(out, self.pivot.len() as u32);
        for t in self.pivot.tokens() {
            codec::put_str(out, t);
        }
        put_phrase(out, &self.other);
        put_f64s(out, &self.core);
        put_alignment(out, &self.alignment);
    }

    fn decode<R: Read>(r: &mut R) -> io::Result<Option<Self>> {
        let Some(n) = codec::get_u32_or_eof(r)? else {
            return Ok(None);
        };
        Ok(Some(PivotSide {
            pivot: Phrase::from_tokens_unchecked(codec::get_strs_with_len(r, n)?),
            other: get_phrase(r)?,
            core: get_f64s(r)?,
            alignment: get_alignment(r)?,
        }))
    }

    fn heap_size(&self) -> usize {
        self.pivot.heap_size() + self.other.heap_size() + self.alignment.len() * 16
    }
}

/// The product term of one (source, pivot, target) triple.
struct Contribution {
    src: Phrase,
    tgt: Phrase,
    rank: u64,
    core: [f64; 4],
    alignment: Alignment,
    /// φ(e|s)·p(o|e,t) for the six orientations; zeros when unused.
    reordering: [f64; 6],
}

impl Contribution {
    fn new(s: &PivotSide, t: &PhraseEntry, rank: u64, pt_reo: Option<&ReorderingTable>) -> Self {
        let sp = s.core;
        let pt = t.scores.core();
        // φ(t|s) = φ(t|e)φ(e|s); φ(s|t) = φ(s|e)φ(e|t); likewise for p_w
        let core = [pt[0] * sp[0], pt[1] * sp[1], sp[2] * pt[2], sp[3] * pt[3]];
        let mut reordering = [0.0; 6];
        if let Some(table) = pt_reo {
            let weight = sp[0];
            let probs = table
                .get(&t.src, &t.tgt)
                .map(|r| r.probs)
                .unwrap_or([UNIFORM[0]; 6]);
            for (out, p) in reordering.iter_mut().zip(probs) {
                *out = weight * p;
            }
        }
        Contribution {
            src: s.other.clone(),
            tgt: t.tgt.clone(),
            rank,
            core,
            alignment: project_alignment(&s.alignment, &t.alignment),
            reordering,
        }
    }
}

impl PartialEq for Contribution {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Contribution {}
impl PartialOrd for Contribution {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Contribution {
    fn cmp(&self, other: &Self) -> Ordering {
        self.src
            .cmp(&other.src)
            .then_with(|| self.tgt.cmp(&other.tgt))
            .then_with(|| self.rank.cmp(&other.rank))
    }
}

impl SpillRecord for Contribution {
    fn encode(&self, out: &mut Vec<u8>) {
        codec::put_u32(out, self.src.len() as u32);
        for t in self.src.tokens() {
            codec::put_str(out, t);
        }
        put_phrase(out, &self.tgt);
        out.extend_from_slice(&self.rank.to_le_bytes());
        put_f64s(out, &self.core);
        put_alignment(out, &self.alignment);
        put_f64s(out, &self.reordering);
    }

    fn decode<R: Read>(r: &mut R) -> io::Result<Option<Self>> {
        let Some(n) = codec::get_u32_or_eof(r)? else {
            return Ok(None);
        };
        let src = Phrase::from_tokens_unchecked(codec::get_strs_with_len(r, n)?);
        let tgt = get_phrase(r)?;
        let mut rank = [0u8; 8];
        r.read_exact(&mut rank)?;
        Ok(Some(Contribution {
            src,
            tgt,
            rank: u64::from_le_bytes(rank),
            core: get_f64s(r)?,
            alignment: get_alignment(r)?,
            reordering: get_f64s(r)?,
        }))
    }

    fn heap_size(&self) -> usize {
        self.src.heap_size() + self.tgt.heap_size() + self.alignment.len() * 16
    }
}
