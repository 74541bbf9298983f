use std::fmt::Write as _;
use std::io::{self, BufRead, Write};

use super::{Alignment, Manifest, Phrase, PhraseEntry, PhraseTable, ScoreSet};
use crate::error::{Error, Result};

const HEADER: &str = "#features:";

#[derive(Clone, Debug)]
pub struct ParseOptions {
    pub max_phrase_len: usize,
}

impl Default for ParseOptions {
    fn default() -> Self {
        ParseOptions {
            max_phrase_len: Phrase::DEFAULT_MAX_LEN,
        }
    }
}

/// Reads and validates a whole phrase table. Input order does not matter.
pub fn parse_phrase_table<R: BufRead>(reader: R, opts: &ParseOptions) -> Result<PhraseTable> {
    let mut rd = EntryReader::new(reader, opts.clone())?;
    let manifest = rd.manifest().clone();
    let entries = rd.by_ref().collect::<Result<Vec<_>>>()?;
    PhraseTable::new(manifest, entries)
}

/// Writes `table` in canonical form: header (if the table has extras), then
/// entries in table order.
pub fn write_phrase_table<W: Write>(table: &PhraseTable, writer: W) -> io::Result<()> {
    let mut w = EntryWriter::new(writer, table.manifest())?;
    for e in table.entries() {
        w.write_entry(e)?;
    }
    w.finish()?;
    Ok(())
}

/// Streaming line-by-line phrase table reader.
///
/// Entries come out in file order and are checked individually; sorting and
/// duplicate detection are left to the consumer.
pub struct EntryReader<R> {
    reader: R,
    opts: ParseOptions,
    manifest: Manifest,
    line_no: usize,
    pending: Option<String>,
    buf: String,
}

impl<R: BufRead> EntryReader<R> {
    pub fn new(mut reader: R, opts: ParseOptions) -> Result<Self> {
        let mut first = String::new();
        let n = reader.read_line(&mut first)?;
        let mut manifest = Manifest::new();
        let mut pending = None;
        if n > 0 {
            let line = first.trim_end_matches(['\n', '\r']);
            if let Some(rest) = line.strip_prefix(HEADER) {
                manifest = Manifest::with_extras(rest.split_whitespace())
                    .map_err(|e| Error::parse(1, e.to_string()))?;
            } else {
                pending = Some(line.to_string());
            }
        }
        Ok(EntryReader {
            reader,
            opts,
            manifest,
            line_no: 1,
            pending,
            buf: String::new(),
        })
    }

    pub fn manifest(&self) -> &Manifest {
        &self.manifest
    }

    fn next_line(&mut self) -> Option<io::Result<(usize, String)>> {
        if let Some(line) = self.pending.take() {
            return Some(Ok((1, line)));
        }
        self.buf.clear();
        match self.reader.read_line(&mut self.buf) {
            Ok(0) => None,
            Ok(_) => {
                self.line_no += 1;
                let line = self.buf.trim_end_matches(['\n', '\r']).to_string();
                Some(Ok((self.line_no, line)))
            }
            Err(e) => Some(Err(e)),
        }
    }
}

impl<R: BufRead> Iterator for EntryReader<R> {
    type Item = Result<PhraseEntry>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let (no, line) = match self.next_line()? {
                Ok(x) => x,
                Err(e) => return Some(Err(e.into())),
            };
            if line.trim().is_empty() {
                continue;
            }
            if line.starts_with(HEADER) {
                return Some(Err(Error::parse(
                    no,
                    "feature header must be the first line",
                )));
            }
            let width = self.manifest.extras().len();
            return Some(
                parse_entry(&line, width, self.opts.max_phrase_len)
                    .map_err(|reason| Error::parse(no, reason)),
            );
        }
    }
}

fn parse_entry(line: &str, width: usize, max_len: usize) -> Result<PhraseEntry, String> {
    let fields: Vec<&str> = line.split("|||").map(str::trim).collect();
    if !(3..=4).contains(&fields.len()) {
        return Err(format!(
            "expected 3 or 4 `|||`-separated fields, found {}",
            fields.len()
        ));
    }
    let src = parse_phrase(fields[0], max_len, "source")?;
    let tgt = parse_phrase(fields[1], max_len, "target")?;

    let mut values = Vec::with_capacity(4 + width);
    for tok in fields[2].split_whitespace() {
        let v: f64 = tok.parse().map_err(|_| format!("bad score `{tok}`"))?;
        if !v.is_finite() {
            return Err(format!("bad score `{tok}`"));
        }
        values.push(v);
    }
    if values.len() != 4 + width {
        return Err(format!(
            "extras count mismatch: expected {} scores, found {}",
            4 + width,
            values.len()
        ));
    }
    let mut scores = ScoreSet::new(values[0], values[1], values[2], values[3]);
    scores.extras = values.split_off(4);
    scores.validate().map_err(|e| e.to_string())?;

    let alignment = match fields.get(3) {
        Some(text) => Alignment::parse(text).map_err(|e| e.to_string())?,
        None => Alignment::new(),
    };
    alignment
        .check_bounds(src.len(), tgt.len())
        .map_err(|e| e.to_string())?;
    Ok(PhraseEntry::new(src, tgt, scores, alignment))
}

fn parse_phrase(text: &str, max_len: usize, side: &str) -> Result<Phrase, String> {
    let p = Phrase::parse(text).map_err(|e| format!("{side} phrase: {e}"))?;
    if p.len() > max_len {
        return Err(format!(
            "{side} phrase has {} tokens, maximum is {max_len}",
            p.len()
        ));
    }
    Ok(p)
}

/// Streaming writer producing the canonical text format.
pub struct EntryWriter<W: Write> {
    writer: W,
    line: String,
}

impl<W: Write> EntryWriter<W> {
    pub fn new(mut writer: W, manifest: &Manifest) -> io::Result<Self> {
        if !manifest.extras().is_empty() {
            writeln!(writer, "{HEADER} {}", manifest.extras().join(" "))?;
        }
        Ok(EntryWriter {
            writer,
            line: String::with_capacity(128),
        })
    }

    pub fn write_entry(&mut self, e: &PhraseEntry) -> io::Result<()> {
        self.line.clear();
        let _ = write!(self.line, "{} ||| {} |||", e.src, e.tgt);
        for v in e.scores.values() {
            self.line.push(' ');
            push_score(&mut self.line, v);
        }
        self.line.push_str(" |||");
        for l in e.alignment.iter() {
            let _ = write!(self.line, " {l}");
        }
        self.line.push('\n');
        self.writer.write_all(self.line.as_bytes())
    }

    pub fn finish(mut self) -> io::Result<W> {
        self.writer.flush()?;
        Ok(self.writer)
    }
}

/// Formats a score with 6 significant digits, like C's `%g`.
pub fn format_score(x: f64) -> String {
    let mut s = String::new();
    push_score(&mut s, x);
    s
}

fn push_score(out: &mut String, x: f64) {
    if x == 0.0 {
        out.push('0');
        return;
    }
    if !x.is_finite() {
        let _ = write!(out, "{x}");
        return;
    }
    // exponent after rounding to 6 significant digits
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("exponent");
    if (-4..6).contains(&exp) {
        let decimals = (5 - exp) as usize;
        let fixed = format!("{x:.decimals$}");
        out.push_str(trim_zeros(&fixed));
    } else {
        out.push_str(trim_zeros(mantissa));
        let sign = if exp < 0 { '-' } else { '+' };
        let _ = write!(out, "e{sign}{:02}", exp.abs());
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}
