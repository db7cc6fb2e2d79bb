//! Embedding matrices, label vectors and stratified splits.
//!
//! The canonical on-disk form of a matrix is the `GSM1` binary layout:
//! the four magic bytes, `n` and `d` as little-endian `u64`, then `n * d`
//! little-endian `f64` values in row-major order. CSV is accepted for
//! interoperability (one row per line, comma separated, no header).

use std::collections::HashMap;
use std::fs;
use std::io::{self, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Magic bytes opening every binary embedding file.
pub const MAGIC: &[u8; 4] = b"GSM1";
const HEADER_LEN: usize = 4 + 8 + 8;

/// The train/validation/test ratios used by the classification protocol.
pub const DEFAULT_RATIOS: [f64; 3] = [0.64, 0.16, 0.20];

#[derive(Debug, thiserror::Error)]
pub enum EmbeddingIoError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("malformed header: {0}")]
    Header(String),
    #[error("row {row}: expected {expected} columns, found {found}")]
    Ragged {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("row {row}, column {column}: cannot parse {text:?} as a number")]
    Parse {
        row: usize,
        column: usize,
        text: String,
    },
    #[error("row {row}, column {column}: non-finite value {value}")]
    NonFinite {
        row: usize,
        column: usize,
        value: f64,
    },
    #[error("matrix must have at least one row and one column (got {n}x{d})")]
    Empty { n: usize, d: usize },
    #[error("data length {len} does not match shape {n}x{d}")]
    Shape { n: usize, d: usize, len: usize },
    #[error("label file line {line}: {reason}")]
    Label { line: usize, reason: String },
    #[error("label file is empty")]
    NoLabels,
    #[error("class {class} has {count} members; stratified split needs at least 3")]
    ClassTooSmall { class: usize, count: usize },
    #[error("split ratios must be non-negative and sum to 1, got {0:?}")]
    Ratios([f64; 3]),
}

pub type Result<T> = std::result::Result<T, EmbeddingIoError>;

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> EmbeddingIoError + '_ {
    move |source| EmbeddingIoError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Dense row-major `n x d` matrix of finite `f64` values.
///
/// Row `i` is the embedding of document `i`; the same type carries every
/// intermediate graph signal produced by the filters.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingMatrix {
    n: usize,
    d: usize,
    data: Vec<f64>,
}

impl EmbeddingMatrix {
    pub fn new(n: usize, d: usize, data: Vec<f64>) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(EmbeddingIoError::Empty { n, d });
        }
        if data.len() != n * d {
            return Err(EmbeddingIoError::Shape {
                n,
                d,
                len: data.len(),
            });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(EmbeddingIoError::NonFinite {
                row: pos / d,
                column: pos % d,
                value: data[pos],
            });
        }
        Ok(Self { n, d, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * d);
        for (row, values) in rows.iter().enumerate() {
            if values.len() != d {
                return Err(EmbeddingIoError::Ragged {
                    row,
                    expected: d,
                    found: values.len(),
                });
            }
            data.extend_from_slice(values);
        }
        Self::new(rows.len(), d, data)
    }

    /// Builds a matrix without the finiteness scan. Callers guarantee shape.
    pub(crate) fn from_raw(n: usize, d: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), n * d);
        Self { n, d, data }
    }

    pub fn zeros(n: usize, d: usize) -> Self {
        Self::from_raw(n, d, vec![0.0; n * d])
    }

    pub fn rows(&self) -> usize {
        self.n
    }

    pub fn cols(&self) -> usize {
        self.d
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.d + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Copies the given rows, in order, into a new matrix.
    pub fn select_rows(&self, indices: &[usize]) -> Self {
        let mut data = Vec::with_capacity(indices.len() * self.d);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Self::from_raw(indices.len(), self.d, data)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + 8 * self.data.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(self.n as u64).to_le_bytes());
        out.extend_from_slice(&(self.d as u64).to_le_bytes());
        for v in &self.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_LEN {
            return Err(EmbeddingIoError::Header(format!(
                "file has {} bytes, header needs {HEADER_LEN}",
                bytes.len()
            )));
        }
        if &bytes[..4] != MAGIC {
            return Err(EmbeddingIoError::Header(format!(
                "bad magic {:?}, expected \"GSM1\"",
                String::from_utf8_lossy(&bytes[..4])
            )));
        }
        let read_u64 = |at: usize| {
            let mut buf = [0u8; 8];
            buf.copy_from_slice(&bytes[at..at + 8]);
            u64::from_le_bytes(buf)
        };
        let (n, d) = (read_u64(4), read_u64(12));
        let expected = n
            .checked_mul(d)
            .and_then(|cells| cells.checked_mul(8))
            .and_then(|b| b.checked_add(HEADER_LEN as u64))
            .ok_or_else(|| EmbeddingIoError::Header(format!("shape {n}x{d} overflows")))?;
        if expected != bytes.len() as u64 {
            return Err(EmbeddingIoError::Header(format!(
                "shape {n}x{d} needs {expected} bytes, file has {}",
                bytes.len()
            )));
        }
        let data = bytes[HEADER_LEN..]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect();
        Self::new(n as usize, d as usize, data)
    }

    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let mut data = Vec::new();
        let mut d = 0;
        let mut n = 0;
        for (row, record) in reader.records().enumerate() {
            let record = record.map_err(|e| EmbeddingIoError::Header(e.to_string()))?;
            if record.len() == 1 && record[0].is_empty() {
                continue;
            }
            if n == 0 {
                d = record.len();
            } else if record.len() != d {
                return Err(EmbeddingIoError::Ragged {
                    row,
                    expected: d,
                    found: record.len(),
                });
            }
            for (column, field) in record.iter().enumerate() {
                let value: f64 = field.parse().map_err(|_| EmbeddingIoError::Parse {
                    row,
                    column,
                    text: field.to_string(),
                })?;
                if !value.is_finite() {
                    return Err(EmbeddingIoError::NonFinite { row, column, value });
                }
                data.push(value);
            }
            n += 1;
        }
        Self::new(n, d, data)
    }

    /// Shortest round-trip decimal rendering, one row per line.
    pub fn to_csv_string(&self) -> String {
        let mut writer = csv::WriterBuilder::new()
            .has_headers(false)
            .from_writer(Vec::new());
        for i in 0..self.n {
            writer
                .write_record(self.row(i).iter().map(|v| v.to_string()))
                .expect("writing to memory");
        }
        String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("ascii output")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MatrixFormat {
    Binary,
    Csv,
}

impl MatrixFormat {
    /// `.csv` means CSV, anything else is treated as binary.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => Self::Csv,
            _ => Self::Binary,
        }
    }
}

pub fn load_embeddings(path: &Path, format: MatrixFormat) -> Result<EmbeddingMatrix> {
    match format {
        MatrixFormat::Binary => EmbeddingMatrix::from_bytes(&fs::read(path).map_err(io_err(path))?),
        MatrixFormat::Csv => {
            EmbeddingMatrix::from_csv_str(&fs::read_to_string(path).map_err(io_err(path))?)
        }
    }
}

pub fn save_embeddings(matrix: &EmbeddingMatrix, path: &Path, format: MatrixFormat) -> Result<()> {
    let bytes = match format {
        MatrixFormat::Binary => matrix.to_bytes(),
        MatrixFormat::Csv => matrix.to_csv_string().into_bytes(),
    };
    fs::write(path, bytes).map_err(io_err(path))
}

/// Class labels remapped to contiguous ids `0..n_classes`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelVector {
    labels: Vec<usize>,
    n_classes: usize,
}

impl LabelVector {
    /// Remaps arbitrary ids to `0..C` in order of first appearance.
    /// Returns the vector together with the original id of each class.
    pub fn remap<T: Copy + Eq + std::hash::Hash>(raw: &[T]) -> (Self, Vec<T>) {
        let mut ids: HashMap<T, usize> = HashMap::new();
        let mut originals = Vec::new();
        let labels = raw
            .iter()
            .map(|&v| {
                *ids.entry(v).or_insert_with(|| {
                    originals.push(v);
                    originals.len() - 1
                })
            })
            .collect();
        (
            Self {
                labels,
                n_classes: originals.len(),
            },
            originals,
        )
    }

    /// Wraps already-contiguous labels. Fails unless every id in
    /// `0..max+1` occurs.
    pub fn from_contiguous(labels: Vec<usize>) -> Option<Self> {
        let n_classes = labels.iter().max().map_or(0, |m| m + 1);
        let mut seen = vec![false; n_classes];
        labels.iter().for_each(|&l| seen[l] = true);
        seen.iter()
            .all(|&s| s)
            .then_some(Self { labels, n_classes })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.labels
    }

    pub fn counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes];
        self.labels.iter().for_each(|&l| counts[l] += 1);
        counts
    }

    /// Raw label ids at `indices`, in order.
    pub fn select(&self, indices: &[usize]) -> Vec<usize> {
        indices.iter().map(|&i| self.labels[i]).collect()
    }
}

/// Parses one non-negative integer per line; blank lines are skipped.
pub fn parse_labels(text: &str) -> Result<(LabelVector, Vec<u64>)> {
    let mut raw = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let value: u64 = trimmed.parse().map_err(|_| EmbeddingIoError::Label {
            line: idx + 1,
            reason: format!("{trimmed:?} is not a non-negative integer"),
        })?;
        raw.push(value);
    }
    if raw.is_empty() {
        return Err(EmbeddingIoError::NoLabels);
    }
    Ok(LabelVector::remap(&raw))
}

pub fn load_labels(path: &Path) -> Result<(LabelVector, Vec<u64>)> {
    parse_labels(&fs::read_to_string(path).map_err(io_err(path))?)
}

/// Writes one integer per line (used for label files and partitions).
pub fn save_integers(values: &[usize], path: &Path) -> Result<()> {
    let mut out = Vec::with_capacity(values.len() * 3);
    for v in values {
        writeln!(out, "{v}").expect("writing to memory");
    }
    fs::write(path, out).map_err(io_err(path))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SplitIndex {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

impl SplitIndex {
    pub fn parts(&self) -> [&[usize]; 3] {
        [&self.train, &self.val, &self.test]
    }
}

/// Per-class part sizes for a stratified split.
///
/// Each class first gets the floor of its quota in every part. Leftover
/// units go to parts by largest fractional remainder, subject to the global
/// part sizes given by largest-remainder rounding of `n * ratio`; every class
/// takes at most one extra unit per part. Classes with at least three members
/// then get at least one item in every part.
pub fn stratified_allocation(class_sizes: &[usize], ratios: [f64; 3]) -> Vec<[usize; 3]> {
    let n: usize = class_sizes.iter().sum();
    let quotas: Vec<[f64; 3]> = class_sizes
        .iter()
        .map(|&m| ratios.map(|r| m as f64 * r))
        .collect();
    let mut alloc: Vec<[usize; 3]> = quotas
        .iter()
        .map(|q| q.map(|x| x.floor() as usize))
        .collect();
    let mut leftover: Vec<usize> = class_sizes
        .iter()
        .zip(&alloc)
        .map(|(&m, a)| m - a.iter().sum::<usize>())
        .collect();

    let global = largest_remainder(n, ratios);
    let mut need = [0usize; 3];
    for p in 0..3 {
        let assigned: usize = alloc.iter().map(|a| a[p]).sum();
        need[p] = global[p].saturating_sub(assigned);
    }

    // Greedy pass over (class, part) cells by descending remainder.
    let mut cells: Vec<(f64, usize, usize)> = Vec::new();
    for (c, q) in quotas.iter().enumerate() {
        for (p, v) in q.iter().enumerate() {
            cells.push((v - v.floor(), c, p));
        }
    }
    cells.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut bumped = vec![[false; 3]; class_sizes.len()];
    for &(frac, c, p) in &cells {
        if frac > 0.0 && leftover[c] > 0 && need[p] > 0 {
            alloc[c][p] += 1;
            bumped[c][p] = true;
            leftover[c] -= 1;
            need[p] -= 1;
        }
    }
    // Anything the greedy pass could not place goes to the part this class
    // has not been bumped in, preferring parts that still have global need.
    for c in 0..class_sizes.len() {
        while leftover[c] > 0 {
            let p = (0..3)
                .filter(|&p| !bumped[c][p])
                .max_by(|&a, &b| {
                    (need[a] > 0)
                        .cmp(&(need[b] > 0))
                        .then(quotas[c][a].fract().total_cmp(&quotas[c][b].fract()))
                        .then(b.cmp(&a))
                })
                .expect("leftover is at most two units");
            alloc[c][p] += 1;
            bumped[c][p] = true;
            need[p] = need[p].saturating_sub(1);
            leftover[c] -= 1;
        }
    }

    // Minimum-one rule, then try to restore global balance with a swap in
    // another class that stays within one unit of its quota.
    for c in 0..class_sizes.len() {
        if class_sizes[c] < 3 {
            continue;
        }
        while let Some(empty) = (0..3).find(|&p| alloc[c][p] == 0) {
            let donor = (0..3)
                .max_by(|&a, &b| alloc[c][a].cmp(&alloc[c][b]).then(b.cmp(&a)))
                .expect("three parts");
            alloc[c][donor] -= 1;
            alloc[c][empty] += 1;
            let swap = (0..class_sizes.len()).find(|&o| {
                o != c
                    && alloc[o][empty] >= 2
                    && alloc[o][empty] as f64 >= quotas[o][empty]
                    && (alloc[o][donor] as f64) <= quotas[o][donor]
            });
            if let Some(o) = swap {
                alloc[o][empty] -= 1;
                alloc[o][donor] += 1;
            }
        }
    }
    alloc
}

fn largest_remainder(n: usize, ratios: [f64; 3]) -> [usize; 3] {
    let quotas = ratios.map(|r| n as f64 * r);
    let mut out = quotas.map(|q| q.floor() as usize);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| {
        quotas[b]
            .fract()
            .total_cmp(&quotas[a].fract())
            .then(a.cmp(&b))
    });
    let mut rest = n.saturating_sub(out.iter().sum());
    for &p in order.iter().cycle() {
        if rest == 0 {
            break;
        }
        out[p] += 1;
        rest -= 1;
    }
    out
}

/// Deterministic stratified split. Index lists are returned sorted.
pub fn stratified_split(labels: &LabelVector, ratios: [f64; 3], seed: u64) -> Result<SplitIndex> {
    let sum: f64 = ratios.iter().sum();
    if ratios.iter().any(|r| !(0.0..=1.0).contains(r)) || (sum - 1.0).abs() > 1e-9 {
        return Err(EmbeddingIoError::Ratios(ratios));
    }
    let counts = labels.counts();
    if let Some((class, &count)) = counts.iter().enumerate().find(|(_, &c)| c < 3) {
        return Err(EmbeddingIoError::ClassTooSmall { class, count });
    }
    let alloc = stratified_allocation(&counts, ratios);

    let mut members: Vec<Vec<usize>> = vec![Vec::new(); counts.len()];
    for (i, &l) in labels.as_slice().iter().enumerate() {
        members[l].push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut split = SplitIndex {
        train: Vec::new(),
        val: Vec::new(),
        test: Vec::new(),
    };
    for (class_members, sizes) in members.iter_mut().zip(&alloc) {
        class_members.shuffle(&mut rng);
        let (train, rest) = class_members.split_at(sizes[0]);
        let (val, test) = rest.split_at(sizes[1]);
        split.train.extend_from_slice(train);
        split.val.extend_from_slice(val);
        split.test.extend_from_slice(test);
    }
    split.train.sort_unstable();
    split.val.sort_unstable();
    split.test.sort_unstable();
    Ok(split)
}
