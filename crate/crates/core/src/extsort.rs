//! Disk-backed sorting for record streams larger than memory.
//!
//! Records are buffered until the byte budget is reached, sorted, and spilled
//! as a run to an anonymous scratch file. Finishing merges all runs with a
//! binary heap. Records that compare equal come out in push order.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use rayon::slice::ParallelSliceMut;

/// Binary encoding used for spilled runs.
pub trait SpillRecord: Ord + Send + Sized {
    fn encode(&self, out: &mut Vec<u8>);
    /// Returns `None` on a clean end of input.
    fn decode<R: Read>(input: &mut R) -> io::Result<Option<Self>>;
    /// Approximate heap bytes owned by the record.
    fn heap_size(&self) -> usize;
}

pub const DEFAULT_BUDGET: usize = 128 << 20;

pub struct ExternalSorter<T> {
    buffer: Vec<T>,
    buffered: usize,
    budget: usize,
    dir: PathBuf,
    runs: Vec<File>,
    encoded: Vec<u8>,
    pushed: u64,
}

impl<T: SpillRecord> ExternalSorter<T> {
    /// `budget` bounds the approximate bytes held in memory before spilling
    /// to files under `dir`.
    pub fn new(dir: &Path, budget: usize) -> Self {
        ExternalSorter {
            buffer: Vec::new(),
            buffered: 0,
            budget: budget.max(1 << 16),
            dir: dir.to_path_buf(),
            runs: Vec::new(),
            encoded: Vec::new(),
            pushed: 0,
        }
    }

    pub fn push(&mut self, item: T) -> io::Result<()> {
        self.buffered += item.heap_size() + std::mem::size_of::<T>();
        self.buffer.push(item);
        self.pushed += 1;
        if self.buffered >= self.budget {
            self.spill()?;
        }
        Ok(())
    }

    pub fn len(&self) -> u64 {
        self.pushed
    }

    pub fn is_empty(&self) -> bool {
        self.pushed == 0
    }

    pub fn spilled_runs(&self) -> usize {
        self.runs.len()
    }

    fn spill(&mut self) -> io::Result<()> {
        if self.buffer.is_empty() {
            return Ok(());
        }
        self.buffer.par_sort();
        let file = tempfile::tempfile_in(&self.dir)?;
        let mut w = BufWriter::with_capacity(1 << 20, file);
        for item in self.buffer.drain(..) {
            self.encoded.clear();
            item.encode(&mut self.encoded);
            w.write_all(&self.encoded)?;
        }
        let mut file = w.into_inner().map_err(|e| e.into_error())?;
        file.seek(SeekFrom::Start(0))?;
        self.runs.push(file);
        self.buffered = 0;
        self.buffer = Vec::new();
        Ok(())
    }

    pub fn finish(mut self) -> io::Result<Sorted<T>> {
        if self.runs.is_empty() {
            self.buffer.par_sort();
            return Ok(Sorted(Source::Memory(self.buffer.into_iter())));
        }
        self.spill()?;
        let mut readers: Vec<BufReader<File>> = self
            .runs
            .into_iter()
            .map(|f| BufReader::with_capacity(1 << 16, f))
            .collect();
        let mut heap = BinaryHeap::with_capacity(readers.len());
        for (run, r) in readers.iter_mut().enumerate() {
            if let Some(item) = T::decode(r)? {
                heap.push(Reverse(Head { item, run }));
            }
        }
        Ok(Sorted(Source::Merge { readers, heap }))
    }
}

struct Head<T> {
    item: T,
    run: usize,
}

impl<T: Ord> PartialEq for Head<T> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<T: Ord> Eq for Head<T> {}

impl<T: Ord> PartialOrd for Head<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<T: Ord> Ord for Head<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.item
            .cmp(&other.item)
            .then_with(|| self.run.cmp(&other.run))
    }
}

/// Sorted output of an [`ExternalSorter`].
pub struct Sorted<T>(Source<T>);

enum Source<T> {
    Memory(std::vec::IntoIter<T>),
    Merge {
        readers: Vec<BufReader<File>>,
        heap: BinaryHeap<Reverse<Head<T>>>,
    },
}

impl<T: SpillRecord> Iterator for Sorted<T> {
    type Item = io::Result<T>;

    fn next(&mut self) -> Option<Self::Item> {
        match &mut self.0 {
            Source::Memory(it) => it.next().map(Ok),
            Source::Merge { readers, heap } => {
                let Reverse(Head { item, run }) = heap.pop()?;
                match T::decode(&mut readers[run]) {
                    Ok(Some(next)) => heap.push(Reverse(Head { item: next, run })),
                    Ok(None) => {}
                    Err(e) => return Some(Err(e)),
                }
                Some(Ok(item))
            }
        }
    }
}

/// Little-endian primitives for [`SpillRecord`] implementations.
pub mod codec {
    use std::io::{self, Read};

    pub fn put_u32(out: &mut Vec<u8>, v: u32) {
        out.extend_from_slice(&v.to_le_bytes());
    }

    pub fn put_f64(out: &mut Vec<u8>, v: f64) {
        out.extend_from_slice(&v.to_le_bytes());
    }

    pub fn put_str(out: &mut Vec<u8>, s: &str) {
        put_u32(out, s.len() as u32);
        out.extend_from_slice(s.as_bytes());
    }

    pub fn put_strs(out: &mut Vec<u8>, items: &[String]) {
        put_u32(out, items.len() as u32);
        for s in items {
            put_str(out, s);
        }
    }

    /// Reads a `u32`, or `None` if the input is already exhausted.
    pub fn get_u32_or_eof<R: Read>(r: &mut R) -> io::Result<Option<u32>> {
        let mut b = [0u8; 4];
        let mut filled = 0;
        while filled < 4 {
            let n = r.read(&mut b[filled..])?;
            if n == 0 {
                if filled == 0 {
                    return Ok(None);
                }
                return Err(io::ErrorKind::UnexpectedEof.into());
            }
            filled += n;
        }
        Ok(Some(u32::from_le_bytes(b)))
    }

    pub fn get_u32<R: Read>(r: &mut R) -> io::Result<u32> {
        let mut b = [0u8; 4];
        r.read_exact(&mut b)?;
        Ok(u32::from_le_bytes(b))
    }

    pub fn get_f64<R: Read>(r: &mut R) -> io::Result<f64> {
        let mut b = [0u8; 8];
        r.read_exact(&mut b)?;
        Ok(f64::from_le_bytes(b))
    }

    pub fn get_str<R: Read>(r: &mut R) -> io::Result<String> {
        let len = get_u32(r)? as usize;
        let mut buf = vec![0u8; len];
        r.read_exact(&mut buf)?;
        String::from_utf8(buf).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))
    }

    pub fn get_strs_with_len<R: Read>(r: &mut R, count: u32) -> io::Result<Vec<String>> {
        (0..count).map(|_| get_str(r)).collect()
    }

    pub fn get_strs<R: Read>(r: &mut R) -> io::Result<Vec<String>> {
        let n = get_u32(r)?;
        get_strs_with_len(r, n)
    }
}
