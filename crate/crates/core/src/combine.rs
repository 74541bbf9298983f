//! Merging several phrase tables into one decode-ready table.
//!
//! Entries are never merged: a pair present in two inputs yields two entries
//! that differ only in their origin indicators. The output manifest is the
//! union of the input extras (in first-seen order, missing values filled with
//! 0.0) followed by one `origin_<name>` column per input.

use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::table::{Manifest, PhraseTable, ORIGIN_PREFIX};

pub fn combine_tables(tables: Vec<(PhraseTable, String)>) -> Result<PhraseTable> {
    if tables.len() < 2 {
        return Err(Error::Invalid(format!(
            "combine needs at least 2 tables, got {}",
            tables.len()
        )));
    }
    let mut seen = HashSet::new();
    if let Some((_, dup)) = tables.iter().find(|(_, name)| !seen.insert(name.as_str())) {
        return Err(Error::NameCollision(format!("{ORIGIN_PREFIX}{dup}")));
    }

    let mut union: Vec<String> = Vec::new();
    for (t, _) in &tables {
        for name in t.manifest().extras() {
            if !union.contains(name) {
                union.push(name.clone());
            }
        }
    }
    let mut manifest = Manifest::with_extras(union.iter().cloned())?;
    for (_, name) in &tables {
        manifest.push(format!("{ORIGIN_PREFIX}{name}"))?;
    }

    let k = tables.len();
    let total = tables.iter().map(|(t, _)| t.len()).sum();
    let mut entries = Vec::with_capacity(total);
    for (idx, (table, _)) in tables.into_iter().enumerate() {
        let (m, rows) = table.into_parts();
        let slots: Vec<usize> = m
            .extras()
            .iter()
            .map(|n| union.iter().position(|u| u == n).expect("name in union"))
            .collect();
        for mut e in rows {
            let mut extras = vec![0.0; union.len() + k];
            for (v, &slot) in e.scores.extras.iter().zip(&slots) {
                extras[slot] = *v;
            }
            extras[union.len() + idx] = 1.0;
            e.scores.extras = extras;
            entries.push(e);
        }
    }
    PhraseTable::new(manifest, entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::{Alignment, Phrase, PhraseEntry, ScoreSet};

    fn table(pairs: &[(&str, &str)], extras: &[&str]) -> PhraseTable {
        let entries = pairs
            .iter()
            .map(|(s, t)| {
                let mut scores = ScoreSet::new(0.5, 0.4, 0.3, 0.2);
                scores.extras = vec![0.7; extras.len()];
                PhraseEntry::new(
                    Phrase::parse(s).unwrap(),
                    Phrase::parse(t).unwrap(),
                    scores,
                    Alignment::from_pairs([(0, 0)]),
                )
            })
            .collect();
        PhraseTable::new(
            Manifest::with_extras(extras.iter().copied()).unwrap(),
            entries,
        )
        .unwrap()
    }

    #[test]
    fn shared_pair_stays_twice() {
        let a = table(&[("a", "x"), ("b", "y")], &[]);
        let b = table(&[("a", "x")], &["conn_s"]);
        let c = combine_tables(vec![(a, "direct".into()), (b, "pivot".into())]).unwrap();
        assert_eq!(c.len(), 3);
        assert_eq!(
            c.manifest().extras(),
            ["conn_s", "origin_direct", "origin_pivot"]
        );
        let shared: Vec<_> = c
            .entries()
            .iter()
            .filter(|e| e.src.to_string() == "a")
            .collect();
        assert_eq!(shared.len(), 2);
        assert_eq!(shared[0].scores.extras, [0.0, 1.0, 0.0]);
        assert_eq!(shared[1].scores.extras, [0.7, 0.0, 1.0]);
        assert_eq!(c.origin_index(shared[1]), Some(1));
    }

    #[test]
    fn empty_partner_and_bad_inputs() {
        let a = table(&[("a", "x")], &[]);
        let c = combine_tables(vec![
            (a.clone(), "a".into()),
            (PhraseTable::default(), "b".into()),
        ])
        .unwrap();
        assert_eq!(c.len(), 1);
        assert!(combine_tables(vec![(a.clone(), "a".into())]).is_err());
        let err = combine_tables(vec![(a.clone(), "a".into()), (a, "a".into())]).unwrap_err();
        assert!(matches!(err, Error::NameCollision(_)));
    }

    #[test]
    fn nested_combination_keeps_all_entries() {
        let a = table(&[("a", "x")], &[]);
        let inner = combine_tables(vec![(a.clone(), "a".into()), (a.clone(), "b".into())]).unwrap();
        let outer = combine_tables(vec![(inner, "ab".into()), (a, "c".into())]).unwrap();
        assert_eq!(outer.len(), 3);
    }
}
