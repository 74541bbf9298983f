use std::fmt::Write as _;
use std::io::{self, BufRead, Write};

use super::format::format_score;
use super::Phrase;
use crate::error::{Error, Result};

// Printed values carry up to 5e-7 rounding each.
const FILE_SUM_TOLERANCE: f64 = 1e-5;

/// Orientation probabilities of one phrase pair: monotone, swap and
/// discontinuous, first for one direction, then for the other.
#[derive(Clone, Debug, PartialEq)]
pub struct ReorderingEntry {
    pub src: Phrase,
    pub tgt: Phrase,
    pub probs: [f64; 6],
}

impl ReorderingEntry {
    pub fn triples(&self) -> [[f64; 3]; 2] {
        let p = self.probs;
        [[p[0], p[1], p[2]], [p[3], p[4], p[5]]]
    }

    fn check(&self, tolerance: f64) -> std::result::Result<(), String> {
        if let Some(p) = self.probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(format!("orientation probability {p} out of [0,1]"));
        }
        for t in self.triples() {
            let sum: f64 = t.iter().sum();
            if (sum - 1.0).abs() > tolerance {
                return Err(format!("orientation triple sums to {sum}, expected 1"));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ReorderingTable {
    entries: Vec<ReorderingEntry>,
}

impl ReorderingTable {
    /// Sorts by (source, target); triples must each sum to 1 ± 1e-6.
    pub fn new(entries: Vec<ReorderingEntry>) -> Result<Self> {
        for e in &entries {
            e.check(1e-6).map_err(Error::Invalid)?;
        }
        Self::sorted(entries)
    }

    fn sorted(mut entries: Vec<ReorderingEntry>) -> Result<Self> {
        entries.sort_by(|a, b| a.src.cmp(&b.src).then_with(|| a.tgt.cmp(&b.tgt)));
        if let Some(w) = entries
            .windows(2)
            .find(|w| w[0].src == w[1].src && w[0].tgt == w[1].tgt)
        {
            return Err(Error::DuplicatePair {
                src: w[0].src.to_string(),
                tgt: w[0].tgt.to_string(),
            });
        }
        Ok(ReorderingTable { entries })
    }

    pub fn entries(&self) -> &[ReorderingEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, src: &Phrase, tgt: &Phrase) -> Option<&ReorderingEntry> {
        self.entries
            .binary_search_by(|e| e.src.cmp(src).then_with(|| e.tgt.cmp(tgt)))
            .ok()
            .map(|i| &self.entries[i])
    }
}

pub fn parse_reordering_table<R: BufRead>(reader: R) -> Result<ReorderingTable> {
    let mut entries = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let e = parse_line(&line).map_err(|r| Error::parse(i + 1, r))?;
        entries.push(e);
    }
    ReorderingTable::sorted(entries)
}

fn parse_line(line: &str) -> std::result::Result<ReorderingEntry, String> {
    let fields: Vec<&str> = line.split("|||").map(str::trim).collect();
    if fields.len() != 3 {
        return Err(format!(
            "expected 3 `|||`-separated fields, found {}",
            fields.len()
        ));
    }
    let src = Phrase::parse(fields[0]).map_err(|e| format!("source phrase: {e}"))?;
    let tgt = Phrase::parse(fields[1]).map_err(|e| format!("target phrase: {e}"))?;
    let vals = fields[2]
        .split_whitespace()
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| format!("bad probability `{t}`"))
        })
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let probs: [f64; 6] = vals.try_into().map_err(|v: Vec<f64>| {
        format!("expected 6 orientation probabilities, found {}", v.len())
    })?;
    let e = ReorderingEntry { src, tgt, probs };
    e.check(FILE_SUM_TOLERANCE)?;
    Ok(e)
}

pub fn write_reordering_table<W: Write>(table: &ReorderingTable, mut w: W) -> io::Result<()> {
    for e in table.entries() {
        write_reordering_entry(&mut w, e)?;
    }
    w.flush()
}

/// Writes one `SRC ||| TGT ||| p1 .. p6` line.
pub fn write_reordering_entry<W: Write>(w: &mut W, e: &ReorderingEntry) -> io::Result<()> {
    let mut line = String::with_capacity(96);
    let _ = write!(line, "{} ||| {} |||", e.src, e.tgt);
    for p in e.probs {
        line.push(' ');
        line.push_str(&format_score(p));
    }
    line.push('\n');
    w.write_all(line.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_write() {
        let text =
            "b ||| y ||| 0.2 0.3 0.5 1 0 0\na ||| x ||| 0.333333 0.333333 0.333333 0.5 0.25 0.25\n";
        let t = parse_reordering_table(text.as_bytes()).unwrap();
        assert_eq!(t.len(), 2);
        let mut out = Vec::new();
        write_reordering_table(&t, &mut out).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "a ||| x ||| 0.333333 0.333333 0.333333 0.5 0.25 0.25\nb ||| y ||| 0.2 0.3 0.5 1 0 0\n"
        );
        let x = Phrase::parse("b").unwrap();
        let y = Phrase::parse("y").unwrap();
        assert_eq!(t.get(&x, &y).unwrap().probs[3], 1.0);
    }

    #[test]
    fn rejects_bad_triples() {
        assert!(parse_reordering_table("a ||| x ||| 0.5 0.5 0.5 1 0 0\n".as_bytes()).is_err());
        assert!(parse_reordering_table("a ||| x ||| 0.5 0.5 1 0 0\n".as_bytes()).is_err());
        assert!(parse_reordering_table(
            "a ||| x ||| 1 0 0 1 0 0\na ||| x ||| 1 0 0 1 0 0\n".as_bytes()
        )
        .is_err());
    }
}
