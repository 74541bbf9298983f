#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use pivotsmith::morph::{
    FcModel, FcTag, LexiconEntry, MorphFeature, MorphLexicon, MorphValues, RuleMapping,
};
use pivotsmith::table::{Alignment, Manifest, Phrase, PhraseEntry, PhraseTable, ScoreSet};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub use rand::SeedableRng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn phrase(text: &str) -> Phrase {
    Phrase::parse(text).unwrap()
}

pub fn entry(src: &str, tgt: &str, core: [f64; 4], links: &[(usize, usize)]) -> PhraseEntry {
    PhraseEntry::new(
        phrase(src),
        phrase(tgt),
        ScoreSet::from_core(core),
        Alignment::from_pairs(links.iter().copied()),
    )
}

pub fn table(entries: Vec<PhraseEntry>) -> PhraseTable {
    PhraseTable::new(Manifest::new(), entries).unwrap()
}

/// A pool of distinct random phrases over `prefix0..prefix{vocab}`.
pub fn phrase_pool(
    rng: &mut ChaCha8Rng,
    prefix: &str,
    vocab: usize,
    size: usize,
    max_len: usize,
) -> Vec<Phrase> {
    let mut seen = BTreeSet::new();
    let mut guard = 0;
    while seen.len() < size && guard < size * 100 {
        guard += 1;
        let len = rng.gen_range(1..=max_len);
        let toks: Vec<String> = (0..len)
            .map(|_| format!("{prefix}{}", rng.gen_range(0..vocab)))
            .collect();
        seen.insert(Phrase::new(toks).unwrap());
    }
    seen.into_iter().collect()
}

pub fn random_alignment(rng: &mut ChaCha8Rng, n: usize, m: usize, density: f64) -> Alignment {
    let mut links = Vec::new();
    for i in 0..n {
        for j in 0..m {
            if rng.gen_bool(density) {
                links.push((i, j));
            }
        }
    }
    Alignment::from_pairs(links)
}

/// Random table over the given phrase pools whose forward scores are
/// normalized per source phrase and backward scores per target phrase.
pub fn normalized_table(
    rng: &mut ChaCha8Rng,
    sources: &[Phrase],
    targets: &[Phrase],
    n: usize,
) -> PhraseTable {
    let mut pairs = BTreeSet::new();
    let cap = sources.len() * targets.len();
    while pairs.len() < n.min(cap) {
        let s = rng.gen_range(0..sources.len());
        let t = rng.gen_range(0..targets.len());
        pairs.insert((s, t));
    }
    let raw: Vec<((usize, usize), [f64; 4])> = pairs
        .into_iter()
        .map(|p| (p, std::array::from_fn(|_| rng.gen_range(0.05..1.0))))
        .collect();
    let mut by_src: BTreeMap<usize, [f64; 4]> = BTreeMap::new();
    let mut by_tgt: BTreeMap<usize, [f64; 4]> = BTreeMap::new();
    for ((s, t), w) in &raw {
        let a = by_src.entry(*s).or_default();
        let b = by_tgt.entry(*t).or_default();
        for k in 0..4 {
            a[k] += w[k];
            b[k] += w[k];
        }
    }
    let entries = raw
        .into_iter()
        .map(|((s, t), w)| {
            let (a, b) = (by_src[&s], by_tgt[&t]);
            let core = [w[0] / a[0], w[1] / a[1], w[2] / b[2], w[3] / b[3]];
            let al = random_alignment(rng, sources[s].len(), targets[t].len(), 0.4);
            PhraseEntry::new(
                sources[s].clone(),
                targets[t].clone(),
                ScoreSet::from_core(core),
                al,
            )
        })
        .collect();
    table(entries)
}

/// Random source-pivot and pivot-target tables sharing a pivot pool.
pub fn random_pivot_pair(
    rng: &mut ChaCha8Rng,
    max_entries: usize,
    max_len: usize,
) -> (PhraseTable, PhraseTable) {
    let size = rng.gen_range(3..20);
    let src = phrase_pool(rng, "s", 6, size, max_len);
    let size = rng.gen_range(3..20);
    let piv = phrase_pool(rng, "e", 5, size, max_len);
    let size = rng.gen_range(3..20);
    let tgt = phrase_pool(rng, "t", 6, size, max_len);
    let n_sp = rng.gen_range(1..=max_entries);
    let n_pt = rng.gen_range(1..=max_entries);
    let sp = normalized_table(rng, &src, &piv, n_sp);
    let pt = normalized_table(rng, &piv, &tgt, n_pt);
    (sp, pt)
}

pub type OracleTable = BTreeMap<(Vec<String>, Vec<String>), ([f64; 4], BTreeSet<(usize, usize)>)>;

fn oracle_score(e: &PhraseEntry) -> f64 {
    [
        e.scores.phi_fwd,
        e.scores.lex_fwd,
        e.scores.phi_bwd,
        e.scores.lex_bwd,
    ]
    .iter()
    .map(|s| s.max(1e-9).ln())
    .sum()
}

/// Per source, the `n` best entries under unit weights; ties keep the
/// smaller target.
pub fn oracle_filter(entries: &[PhraseEntry], n: usize) -> Vec<PhraseEntry> {
    let mut groups: BTreeMap<Vec<String>, Vec<&PhraseEntry>> = BTreeMap::new();
    for e in entries {
        groups.entry(e.src.tokens().to_vec()).or_default().push(e);
    }
    let mut kept = Vec::new();
    for (_, mut g) in groups {
        g.sort_by(|a, b| {
            oracle_score(b)
                .partial_cmp(&oracle_score(a))
                .unwrap()
                .then_with(|| a.tgt.tokens().cmp(b.tgt.tokens()))
        });
        kept.extend(g.into_iter().take(n).cloned());
    }
    kept
}

/// Naive triple loop over (source, pivot, target).
pub fn oracle_pivot(sp: &PhraseTable, pt: &PhraseTable, top_n: usize) -> OracleTable {
    let sp = oracle_filter(sp.entries(), top_n);
    let pt = oracle_filter(pt.entries(), top_n);
    let mut out: OracleTable = BTreeMap::new();
    for a in &sp {
        for b in &pt {
            if a.tgt.tokens() != b.src.tokens() {
                continue;
            }
            let key = (a.src.tokens().to_vec(), b.tgt.tokens().to_vec());
            let slot = out.entry(key).or_insert(([0.0; 4], BTreeSet::new()));
            slot.0[0] += b.scores.phi_fwd * a.scores.phi_fwd;
            slot.0[1] += b.scores.lex_fwd * a.scores.lex_fwd;
            slot.0[2] += a.scores.phi_bwd * b.scores.phi_bwd;
            slot.0[3] += a.scores.lex_bwd * b.scores.lex_bwd;
            for l1 in a.alignment.iter() {
                for l2 in b.alignment.iter() {
                    if l1.tgt == l2.src {
                        slot.1.insert((l1.src, l2.tgt));
                    }
                }
            }
        }
    }
    out
}

/// Largest score difference, or `None` if entries or alignments differ.
pub fn compare_to_oracle(table: &PhraseTable, oracle: &OracleTable) -> Result<f64, String> {
    if table.len() != oracle.len() {
        return Err(format!(
            "{} entries, oracle has {}",
            table.len(),
            oracle.len()
        ));
    }
    let mut worst = 0.0f64;
    for e in table.entries() {
        let key = (e.src.tokens().to_vec(), e.tgt.tokens().to_vec());
        let Some((scores, links)) = oracle.get(&key) else {
            return Err(format!("unexpected pair {} ||| {}", e.src, e.tgt));
        };
        let got: BTreeSet<(usize, usize)> = e.alignment.iter().map(|l| (l.src, l.tgt)).collect();
        if &got != links {
            return Err(format!("alignment differs for {} ||| {}", e.src, e.tgt));
        }
        for (g, w) in e.scores.core().iter().zip(scores) {
            worst = worst.max((g - w).abs());
        }
    }
    Ok(worst)
}

pub const GENDERS: [&str; 3] = ["Fem", "Masc", "Both"];
pub const NUMBERS: [&str; 3] = ["Sing", "Dual", "Plural"];
pub const DETS: [&str; 2] = ["Det", "NA"];
pub const POS: [&str; 3] = ["noun", "adj", "verb"];

/// Random lexicon over `prefix0..prefix{vocab}`; about one word in six is
/// left out so that unknown words occur.
pub fn random_lexicon(rng: &mut ChaCha8Rng, prefix: &str, vocab: usize) -> MorphLexicon {
    let mut lex = MorphLexicon::default();
    for w in 0..vocab {
        if rng.gen_ratio(1, 6) {
            continue;
        }
        let values = MorphValues::new(
            POS.choose(rng).unwrap(),
            GENDERS.choose(rng).unwrap(),
            NUMBERS.choose(rng).unwrap(),
            DETS.choose(rng).unwrap(),
        );
        let fc = FcTag::from_values(&values, false);
        lex.insert(
            format!("{prefix}{w}"),
            LexiconEntry {
                values,
                fc,
                count: 1,
            },
        );
    }
    lex
}

pub fn random_rules(rng: &mut ChaCha8Rng) -> RuleMapping {
    let mut r = RuleMapping::default();
    for (f, domain) in [
        (MorphFeature::Gen, &GENDERS[..]),
        (MorphFeature::Num, &NUMBERS[..]),
        (MorphFeature::Det, &DETS[..]),
        (MorphFeature::Pos, &POS[..]),
    ] {
        for s in domain {
            for t in domain {
                if rng.gen_bool(0.4) {
                    r.allow(f, s, t);
                }
            }
        }
    }
    r
}

/// Every FC tag a random lexicon can produce, plus `[UNK]`.
pub fn all_fc_tags() -> Vec<FcTag> {
    let mut tags = vec![FcTag::unknown()];
    for g in GENDERS {
        for n in NUMBERS {
            for d in DETS {
                tags.push(FcTag::from_values(&MorphValues::new("x", g, n, d), false));
            }
        }
    }
    tags
}

pub fn random_fc_model(rng: &mut ChaCha8Rng) -> FcModel {
    let tags = all_fc_tags();
    let mut m = FcModel::new();
    for s in &tags {
        for t in &tags {
            if rng.gen_bool(0.3) {
                m.insert(s.clone(), t.clone(), rng.gen(), rng.gen())
                    .unwrap();
            }
        }
    }
    m
}

pub fn toks(s: &str) -> Vec<String> {
    s.split_whitespace().map(String::from).collect()
}
