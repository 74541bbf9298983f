//! Per-entry quality scores appended to a phrase table as extra features.
//!
//! Every scorer produces a source-side score `w_s` normalised by the source
//! length `n` and a target-side score `w_t` normalised by the target length
//! `m`, both summed over alignment links:
//!
//! - connectivity: fraction of source (target) words with at least one link;
//! - rules: `w_s = 1/|F| Σ_f Σ_(i,j) 1/n · [(MLE_f(src_i), MLE_f(tgt_j)) ∈ M_f]`;
//! - induced: `w_s = 1/n Σ_(i,j) P(FC(src_i) | FC(tgt_j))` and
//!   `w_t = 1/m Σ_(i,j) P(FC(tgt_j) | FC(src_i))`.
//!
//! Words missing from a lexicon contribute nothing to the rule scores and
//! take the `[UNK]` tag in the induced scores. Morphology scores are not
//! clamped and can exceed 1 when a word has several links.

use rayon::prelude::*;

use crate::error::Result;
use crate::morph::{FcModel, FcTag, MorphFeature, MorphLexicon, RuleMapping};
use crate::table::{PhraseEntry, PhraseTable};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FeatureScores {
    pub w_s: f64,
    pub w_t: f64,
}

pub fn connectivity_scores(entry: &PhraseEntry) -> FeatureScores {
    let (n, m) = (entry.src.len(), entry.tgt.len());
    let mut src_seen = vec![false; n];
    let mut tgt_seen = vec![false; m];
    for l in entry.alignment.iter() {
        src_seen[l.src] = true;
        tgt_seen[l.tgt] = true;
    }
    let covered = |v: &[bool]| v.iter().filter(|&&b| b).count() as f64;
    FeatureScores {
        w_s: covered(&src_seen) / n as f64,
        w_t: covered(&tgt_seen) / m as f64,
    }
}

pub fn rule_morph_scores(
    entry: &PhraseEntry,
    src_lex: &MorphLexicon,
    tgt_lex: &MorphLexicon,
    rules: &RuleMapping,
    features: &[MorphFeature],
) -> FeatureScores {
    let (n, m) = (entry.src.len() as f64, entry.tgt.len() as f64);
    let src = entry.src.tokens();
    let tgt = entry.tgt.tokens();
    let mut matches = 0usize;
    for l in entry.alignment.iter() {
        let (Some(s), Some(t)) = (src_lex.get(&src[l.src]), tgt_lex.get(&tgt[l.tgt])) else {
            continue;
        };
        matches += features
            .iter()
            .filter(|&&f| rules.allows(f, s.values.get(f), t.values.get(f)))
            .count();
    }
    if features.is_empty() {
        return FeatureScores { w_s: 0.0, w_t: 0.0 };
    }
    let total = matches as f64 / features.len() as f64;
    FeatureScores {
        w_s: total / n,
        w_t: total / m,
    }
}

pub fn induced_morph_scores(
    entry: &PhraseEntry,
    src_lex: &MorphLexicon,
    tgt_lex: &MorphLexicon,
    model: &FcModel,
) -> FeatureScores {
    let unknown = FcTag::unknown();
    let tag = |lex: &MorphLexicon, w: &str| lex.fc(w).cloned().unwrap_or_else(|| unknown.clone());
    let src: Vec<FcTag> = entry.src.tokens().iter().map(|w| tag(src_lex, w)).collect();
    let tgt: Vec<FcTag> = entry.tgt.tokens().iter().map(|w| tag(tgt_lex, w)).collect();
    let (mut s, mut t) = (0.0, 0.0);
    for l in entry.alignment.iter() {
        if let Some((p_tgt, p_src)) = model.get(&src[l.src], &tgt[l.tgt]) {
            s += p_src;
            t += p_tgt;
        }
    }
    FeatureScores {
        w_s: s / src.len() as f64,
        w_t: t / tgt.len() as f64,
    }
}

/// A scorer together with the resources it reads.
#[derive(Clone, Copy, Debug)]
pub enum Scorer<'a> {
    Connectivity,
    Rules {
        src_lex: &'a MorphLexicon,
        tgt_lex: &'a MorphLexicon,
        rules: &'a RuleMapping,
        features: &'a [MorphFeature],
    },
    Induced {
        src_lex: &'a MorphLexicon,
        tgt_lex: &'a MorphLexicon,
        model: &'a FcModel,
    },
}

impl Scorer<'_> {
    pub fn score(&self, entry: &PhraseEntry) -> FeatureScores {
        match *self {
            Scorer::Connectivity => connectivity_scores(entry),
            Scorer::Rules {
                src_lex,
                tgt_lex,
                rules,
                features,
            } => rule_morph_scores(entry, src_lex, tgt_lex, rules, features),
            Scorer::Induced {
                src_lex,
                tgt_lex,
                model,
            } => induced_morph_scores(entry, src_lex, tgt_lex, model),
        }
    }

    /// Column names used when none are given.
    pub fn default_names(&self) -> (&'static str, &'static str) {
        match self {
            Scorer::Connectivity => ("conn_s", "conn_t"),
            Scorer::Rules { .. } => ("morph_rules_s", "morph_rules_t"),
            Scorer::Induced { .. } => ("morph_auto_s", "morph_auto_t"),
        }
    }
}

/// Appends the scorer's two values to every entry under `names`.
pub fn annotate_table(
    table: PhraseTable,
    scorer: &Scorer<'_>,
    names: (&str, &str),
) -> Result<PhraseTable> {
    let (mut manifest, mut entries) = table.into_parts();
    manifest.push(names.0.to_string())?;
    manifest.push(names.1.to_string())?;
    entries.par_iter_mut().for_each(|e| {
        let s = scorer.score(e);
        e.scores.extras.extend([s.w_s, s.w_t]);
    });
    PhraseTable::new(manifest, entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::morph::{LexiconEntry, MorphValues};
    use crate::table::{Alignment, Manifest, Phrase, ScoreSet};

    fn entry(src: &str, tgt: &str, links: &[(usize, usize)]) -> PhraseEntry {
        PhraseEntry::new(
            Phrase::parse(src).unwrap(),
            Phrase::parse(tgt).unwrap(),
            ScoreSet::new(0.5, 0.5, 0.5, 0.5),
            Alignment::from_pairs(links.iter().copied()),
        )
    }

    fn lex(words: &[(&str, &str, &str, &str)]) -> MorphLexicon {
        let mut l = MorphLexicon::default();
        for &(w, gen, num, fc) in words {
            l.insert(
                w,
                LexiconEntry {
                    values: MorphValues::new("noun", gen, num, "NA"),
                    fc: FcTag::parse(fc).unwrap(),
                    count: 1,
                },
            );
        }
        l
    }

    #[test]
    fn connectivity_cases() {
        let s = connectivity_scores(&entry("a b", "x y", &[(0, 0), (1, 1)]));
        assert_eq!((s.w_s, s.w_t), (1.0, 1.0));
        let s = connectivity_scores(&entry("a b", "x", &[(0, 0)]));
        assert_eq!((s.w_s, s.w_t), (0.5, 1.0));
        let s = connectivity_scores(&entry("a b", "x", &[]));
        assert_eq!((s.w_s, s.w_t), (0.0, 0.0));
    }

    #[test]
    fn rule_scores() {
        let mut rules = RuleMapping::default();
        rules.allow(MorphFeature::Gen, "Fem", "Fem");
        rules.allow(MorphFeature::Num, "Sing", "Sing");
        let src = lex(&[
            ("a", "Fem", "Sing", "[Fem+Sing]"),
            ("b", "Fem", "Sing", "[Fem+Sing]"),
        ]);
        let tgt = lex(&[
            ("x", "Fem", "Sing", "[Fem+Sing]"),
            ("y", "Masc", "Sing", "[Masc+Sing]"),
        ]);
        let gen = [MorphFeature::Gen];
        let s = rule_morph_scores(&entry("a", "x", &[(0, 0)]), &src, &tgt, &rules, &gen);
        assert_eq!((s.w_s, s.w_t), (1.0, 1.0));
        let s = rule_morph_scores(&entry("a", "y", &[(0, 0)]), &src, &tgt, &rules, &gen);
        assert_eq!((s.w_s, s.w_t), (0.0, 0.0));
        let both = [MorphFeature::Gen, MorphFeature::Num];
        let s = rule_morph_scores(
            &entry("a b", "x x", &[(0, 0), (1, 1)]),
            &src,
            &tgt,
            &rules,
            &both,
        );
        assert_eq!((s.w_s, s.w_t), (1.0, 1.0));
        let s = rule_morph_scores(
            &entry("a zz", "x", &[(0, 0), (1, 0)]),
            &src,
            &tgt,
            &rules,
            &both,
        );
        assert_eq!((s.w_s, s.w_t), (0.5, 1.0));
    }

    #[test]
    fn induced_scores() {
        let mut model = FcModel::new();
        let fem = FcTag::parse("[Fem+Sing]").unwrap();
        model.insert(fem.clone(), fem.clone(), 0.1, 0.5).unwrap();
        model
            .insert(fem.clone(), FcTag::unknown(), 0.2, 0.25)
            .unwrap();
        let src = lex(&[("a", "Fem", "Sing", "[Fem+Sing]")]);
        let tgt = lex(&[("x", "Fem", "Sing", "[Fem+Sing]")]);
        let s = induced_morph_scores(&entry("a a", "x q", &[(0, 0), (1, 1)]), &src, &tgt, &model);
        assert!((s.w_s - 0.375).abs() < 1e-15);
        assert!((s.w_t - 0.15).abs() < 1e-15);
        let s = induced_morph_scores(&entry("a", "x", &[]), &src, &tgt, &model);
        assert_eq!((s.w_s, s.w_t), (0.0, 0.0));
    }

    #[test]
    fn annotate_appends_and_checks_names() {
        let t = PhraseTable::new(
            Manifest::new(),
            vec![
                entry("a b", "x y", &[(0, 0), (1, 1)]),
                entry("c", "z", &[(0, 0)]),
            ],
        )
        .unwrap();
        let out = annotate_table(t.clone(), &Scorer::Connectivity, ("conn_s", "conn_t")).unwrap();
        assert_eq!(out.manifest().extras(), ["conn_s", "conn_t"]);
        assert!(out.entries().iter().all(|e| e.scores.extras == [1.0, 1.0]));
        assert_eq!(out.without_extras(), t);
        let err = annotate_table(out, &Scorer::Connectivity, ("conn_s", "x")).unwrap_err();
        assert!(matches!(err, crate::error::Error::NameCollision(_)));
        let empty = annotate_table(
            PhraseTable::empty(Manifest::new()),
            &Scorer::Connectivity,
            ("a", "b"),
        )
        .unwrap();
        assert!(empty.is_empty());
        assert_eq!(empty.manifest().extras().len(), 2);
    }
}
