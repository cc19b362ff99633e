//! Word vectors keyed by (word, period) and their text file format.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use flate2::read::MultiGzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{dot, Scalar};
use crate::sparse::CsrMatrix;

pub const FORMAT_TAG: &str = "chronovec-emb";
pub const FORMAT_VERSION: &str = "v1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Ppmi,
    Svd,
    Tsvd,
    Sgns,
    Tsgns,
    Dw2v,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Ppmi,
        Method::Svd,
        Method::Tsvd,
        Method::Sgns,
        Method::Tsgns,
        Method::Dw2v,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Ppmi => "ppmi",
            Method::Svd => "svd",
            Method::Tsvd => "tsvd",
            Method::Sgns => "sgns",
            Method::Tsgns => "tsgns",
            Method::Dw2v => "dw2v",
        }
    }

    /// Whether the method trains one independent space per period.
    pub fn per_period(self) -> bool {
        matches!(self, Method::Svd | Method::Sgns)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown method {s:?}")))
    }
}

/// How vectors of different periods relate to each other.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Space {
    /// All periods embedded in one coordinate system.
    Shared,
    /// One unrelated coordinate system per period.
    Independent,
    /// Independent spaces rotated into a common frame.
    Aligned,
}

impl Space {
    pub fn name(self) -> &'static str {
        match self {
            Space::Shared => "shared",
            Space::Independent => "independent",
            Space::Aligned => "aligned",
        }
    }
}

impl FromStr for Space {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "shared" => Ok(Space::Shared),
            "independent" => Ok(Space::Independent),
            "aligned" => Ok(Space::Aligned),
            _ => Err(Error::Validation(format!("unknown space {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Rows<T> {
    /// Row-major, `dim` values per row.
    Dense(Vec<T>),
    Sparse(CsrMatrix<T>),
}

/// A borrowed embedding row.
#[derive(Clone, Copy, Debug)]
pub enum RowRef<'a, T> {
    Dense(&'a [T]),
    Sparse(&'a [u32], &'a [T]),
}

impl<T: Scalar> RowRef<'_, T> {
    pub fn norm_squared(&self) -> T {
        match self {
            RowRef::Dense(x) => dot(x, x),
            RowRef::Sparse(_, v) => dot(v, v),
        }
    }

    pub fn norm(&self) -> T {
        self.norm_squared().sqrt()
    }

    pub fn dot(&self, other: &RowRef<'_, T>) -> T {
        match (self, other) {
            (RowRef::Dense(a), RowRef::Dense(b)) => dot(a, b),
            (RowRef::Sparse(ia, va), RowRef::Sparse(ib, vb)) => {
                let (mut i, mut j, mut acc) = (0, 0, T::zero());
                while i < ia.len() && j < ib.len() {
                    match ia[i].cmp(&ib[j]) {
                        std::cmp::Ordering::Less => i += 1,
                        std::cmp::Ordering::Greater => j += 1,
                        std::cmp::Ordering::Equal => {
                            acc += va[i] * vb[j];
                            i += 1;
                            j += 1;
                        }
                    }
                }
                acc
            }
            (RowRef::Dense(d), RowRef::Sparse(i, v)) | (RowRef::Sparse(i, v), RowRef::Dense(d)) => i
                .iter()
                .zip(v.iter())
                .fold(T::zero(), |acc, (&c, &x)| acc + x * d[c as usize]),
        }
    }

    pub fn to_dense(&self, dim: usize) -> Vec<T> {
        match self {
            RowRef::Dense(x) => x.to_vec(),
            RowRef::Sparse(idx, v) => {
                let mut out = vec![T::zero(); dim];
                for (&c, &x) in idx.iter().zip(v.iter()) {
                    out[c as usize] = x;
                }
                out
            }
        }
    }
}

/// `u.v / (|u| |v|)`; zero vectors are an error rather than similarity 0.
pub fn cosine_similarity<T: Scalar>(u: &[T], v: &[T]) -> Result<T> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch(format!(
            "vectors of length {} and {}",
            u.len(),
            v.len()
        )));
    }
    cosine_rows(&RowRef::Dense(u), &RowRef::Dense(v))
}

pub(crate) fn cosine_rows<T: Scalar>(u: &RowRef<'_, T>, v: &RowRef<'_, T>) -> Result<T> {
    let (nu, nv) = (u.norm(), v.norm());
    if nu == T::zero() || nv == T::zero() {
        return Err(Error::ZeroVector);
    }
    Ok(u.dot(v) / (nu * nv))
}

/// Vectors for every (word, period) key; row `t * |V| + i` holds word `i`
/// at period `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingSet<T> {
    method: Method,
    space: Space,
    words: Vec<String>,
    index: HashMap<String, usize>,
    periods: Vec<String>,
    dim: usize,
    rows: Rows<T>,
    observed: Vec<bool>,
    meta: BTreeMap<String, String>,
}

impl<T: Scalar> EmbeddingSet<T> {
    pub fn new(
        method: Method,
        space: Space,
        words: Vec<String>,
        periods: Vec<String>,
        dim: usize,
        rows: Rows<T>,
    ) -> Result<Self> {
        let n = words.len() * periods.len();
        match &rows {
            Rows::Dense(d) if d.len() != n * dim => {
                return Err(Error::DimensionMismatch(format!(
                    "{} values for {n} rows of width {dim}",
                    d.len()
                )));
            }
            Rows::Sparse(m) if m.nrows() != n || m.ncols() != dim => {
                return Err(Error::DimensionMismatch(format!(
                    "{}x{} sparse rows, expected {n}x{dim}",
                    m.nrows(),
                    m.ncols()
                )));
            }
            _ => {}
        }
        if dim == 0 {
            return Err(Error::DimensionMismatch("zero-width embeddings".into()));
        }
        let mut index = HashMap::with_capacity(words.len());
        for (i, w) in words.iter().enumerate() {
            if index.insert(w.clone(), i).is_some() {
                return Err(Error::Validation(format!("duplicate word {w:?}")));
            }
        }
        let mut seen = std::collections::HashSet::new();
        if let Some(p) = periods.iter().find(|p| !seen.insert(p.as_str())) {
            return Err(Error::Validation(format!("duplicate period label {p:?}")));
        }
        Ok(EmbeddingSet {
            method,
            space,
            words,
            index,
            periods,
            dim,
            rows,
            observed: vec![true; n],
            meta: BTreeMap::new(),
        })
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn set_space(&mut self, space: Space) {
        self.space = space;
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn word_index(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn periods(&self) -> &[String] {
        &self.periods
    }

    pub fn period_index(&self, label: &str) -> Option<usize> {
        self.periods.iter().position(|p| p == label)
    }

    pub fn num_words(&self) -> usize {
        self.words.len()
    }

    pub fn num_periods(&self) -> usize {
        self.periods.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_rows(&self) -> usize {
        self.words.len() * self.periods.len()
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self.rows, Rows::Sparse(_))
    }

    pub fn rows(&self) -> &Rows<T> {
        &self.rows
    }

    pub fn key_row(&self, word: usize, period: usize) -> usize {
        period * self.words.len() + word
    }

    pub fn row(&self, r: usize) -> RowRef<'_, T> {
        match &self.rows {
            Rows::Dense(d) => RowRef::Dense(&d[r * self.dim..(r + 1) * self.dim]),
            Rows::Sparse(m) => {
                let (i, v) = m.row(r);
                RowRef::Sparse(i, v)
            }
        }
    }

    pub fn vector(&self, word: usize, period: usize) -> RowRef<'_, T> {
        self.row(self.key_row(word, period))
    }

    /// Looks up a vector by word and period label.
    pub fn lookup(&self, word: &str, period: &str) -> Result<RowRef<'_, T>> {
        let i = self.word_index(word).ok_or_else(|| Error::UnknownWord(word.to_string()))?;
        let t = self
            .period_index(period)
            .ok_or_else(|| Error::Lookup(format!("unknown period {period:?}")))?;
        Ok(self.vector(i, t))
    }

    pub fn is_observed(&self, word: usize, period: usize) -> bool {
        self.observed[self.key_row(word, period)]
    }

    /// Marks which keys had any occurrences in their period.
    pub fn set_observed(&mut self, observed: Vec<bool>) -> Result<()> {
        if observed.len() != self.num_rows() {
            return Err(Error::DimensionMismatch(format!(
                "{} observation flags for {} rows",
                observed.len(),
                self.num_rows()
            )));
        }
        self.observed = observed;
        Ok(())
    }

    /// Marks key `(i, t)` observed iff `period_counts[t][i] > 0`.
    pub fn set_observed_from_counts(&mut self, period_counts: &[Vec<u64>]) -> Result<()> {
        self.set_observed_min_count(period_counts, 1)
    }

    /// Marks `(word, period)` observed when its count reaches `min_count`.
    pub fn set_observed_min_count(&mut self, period_counts: &[Vec<u64>], min_count: u64) -> Result<()> {
        if period_counts.len() != self.num_periods() || period_counts.iter().any(|c| c.len() != self.num_words()) {
            return Err(Error::DimensionMismatch("count table does not match the embedding keys".into()));
        }
        self.observed = period_counts
            .iter()
            .flat_map(|c| c.iter().map(|&n| n >= min_count.max(1)))
            .collect();
        Ok(())
    }

    pub fn meta(&self) -> &BTreeMap<String, String> {
        &self.meta
    }

    pub fn set_meta(&mut self, key: impl Into<String>, value: impl Into<String>) {
        self.meta.insert(key.into(), value.into());
    }

    /// Fails when vectors of periods `t0` and `t1` are not in one space.
    pub fn check_comparable(&self, t0: usize, t1: usize) -> Result<()> {
        if t0 != t1 && self.space == Space::Independent {
            return Err(Error::Unaligned {
                method: self.method.to_string(),
                first: self.periods[t0].clone(),
                second: self.periods[t1].clone(),
            });
        }
        Ok(())
    }

    /// Cosine between two keys, refusing cross-period comparisons of
    /// unaligned spaces.
    pub fn cosine(&self, a: (usize, usize), b: (usize, usize)) -> Result<T> {
        self.check_comparable(a.1, b.1)?;
        cosine_rows(&self.vector(a.0, a.1), &self.vector(b.0, b.1))
    }

    /// Cosine between two keys without the alignment guard. Only meaningful
    /// for measuring how incomparable independent spaces are.
    pub fn cosine_unaligned(&self, a: (usize, usize), b: (usize, usize)) -> Result<T> {
        cosine_rows(&self.vector(a.0, a.1), &self.vector(b.0, b.1))
    }

    /// Dense `|V| x dim` block of one period, row-major.
    pub fn period_block(&self, period: usize) -> Vec<T> {
        let v = self.num_words();
        (0..v)
            .flat_map(|i| self.vector(i, period).to_dense(self.dim))
            .collect()
    }

    /// Restricts to the given periods, in the given order.
    pub fn select_periods(&self, periods: &[usize]) -> Result<Self> {
        if let Some(&t) = periods.iter().find(|&&t| t >= self.num_periods()) {
            return Err(Error::Lookup(format!("period {t} out of range")));
        }
        let v = self.num_words();
        let rows = match &self.rows {
            Rows::Dense(d) => Rows::Dense(
                periods
                    .iter()
                    .flat_map(|&t| d[t * v * self.dim..(t + 1) * v * self.dim].iter().copied())
                    .collect(),
            ),
            Rows::Sparse(m) => {
                let mut out = Vec::with_capacity(periods.len() * v);
                for &t in periods {
                    for i in 0..v {
                        let (c, x) = m.row(t * v + i);
                        out.push(c.iter().copied().zip(x.iter().copied()).collect());
                    }
                }
                Rows::Sparse(CsrMatrix::from_rows(self.dim, out))
            }
        };
        let mut set = EmbeddingSet::new(
            self.method,
            self.space,
            self.words.clone(),
            periods.iter().map(|&t| self.periods[t].clone()).collect(),
            self.dim,
            rows,
        )?;
        set.observed = periods
            .iter()
            .flat_map(|&t| self.observed[t * v..(t + 1) * v].iter().copied())
            .collect();
        set.meta = self.meta.clone();
        Ok(set)
    }

    /// Replaces dense rows, keeping all metadata.
    pub fn with_dense_rows(&self, data: Vec<T>, space: Space) -> Result<Self> {
        let mut set = EmbeddingSet::new(
            self.method,
            space,
            self.words.clone(),
            self.periods.clone(),
            self.dim,
            Rows::Dense(data),
        )?;
        set.observed = self.observed.clone();
        set.meta = self.meta.clone();
        Ok(set)
    }

    /// Writes the text format to any sink.
    pub fn write_to<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{FORMAT_TAG} {FORMAT_VERSION}")?;
        writeln!(out, "method {}", self.method)?;
        writeln!(out, "storage {}", if self.is_sparse() { "sparse" } else { "dense" })?;
        writeln!(out, "space {}", self.space.name())?;
        writeln!(out, "periods {}", self.num_periods())?;
        writeln!(out, "labels {}", self.periods.join(" "))?;
        writeln!(out, "vocab {}", self.num_words())?;
        writeln!(out, "dim {}", self.dim)?;
        let unobserved: Vec<String> = (0..self.num_rows())
            .filter(|&r| !self.observed[r])
            .map(|r| r.to_string())
            .collect();
        if !unobserved.is_empty() {
            writeln!(out, "unobserved {}", unobserved.join(" "))?;
        }
        for (k, v) in &self.meta {
            writeln!(out, "meta {k} {v}")?;
        }
        writeln!(out, "end")?;
        let v = self.num_words();
        for r in 0..self.num_rows() {
            let (t, i) = (r / v, r % v);
            write!(out, "{} {}", self.words[i], self.periods[t])?;
            match self.row(r) {
                RowRef::Dense(x) => {
                    for val in x {
                        write!(out, " {val:.8e}")?;
                    }
                }
                RowRef::Sparse(idx, x) => {
                    for (c, val) in idx.iter().zip(x) {
                        write!(out, " {c}:{val:.8e}")?;
                    }
                }
            }
            writeln!(out)?;
        }
        Ok(())
    }

    /// Reads the text format from any source.
    pub fn read_from<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines().enumerate();
        let mut next_line = || -> Result<Option<(usize, String)>> {
            match lines.next() {
                None => Ok(None),
                Some((n, Ok(l))) => Ok(Some((n + 1, l))),
                Some((n, Err(e))) => Err(Error::Parse {
                    line: n + 1,
                    reason: e.to_string(),
                }),
            }
        };

        let (_, first) = next_line()?.ok_or(Error::Truncated { expected: 1, found: 0 })?;
        let mut parts = first.split_whitespace();
        if parts.next() != Some(FORMAT_TAG) {
            return Err(Error::Validation(format!("not an embedding file: {first:?}")));
        }
        let version = parts.next().unwrap_or("");
        if version != FORMAT_VERSION {
            return Err(Error::VersionMismatch {
                expected: FORMAT_VERSION.into(),
                found: version.into(),
            });
        }

        let mut header: HashMap<String, String> = HashMap::new();
        let mut meta = BTreeMap::new();
        loop {
            let (n, line) = next_line()?.ok_or(Error::Truncated { expected: 1, found: 0 })?;
            let line = line.trim_end();
            if line == "end" {
                break;
            }
            let (key, value) = line.split_once(' ').unwrap_or((line, ""));
            if key == "meta" {
                let (k, v) = value.split_once(' ').unwrap_or((value, ""));
                meta.insert(k.to_string(), v.to_string());
            } else if header.insert(key.to_string(), value.to_string()).is_some() {
                return Err(Error::Parse {
                    line: n,
                    reason: format!("duplicate header key {key:?}"),
                });
            }
        }
        let field = |k: &str| -> Result<&String> {
            header
                .get(k)
                .ok_or_else(|| Error::Validation(format!("missing header field {k:?}")))
        };
        let count = |k: &str| -> Result<usize> {
            field(k)?
                .parse()
                .map_err(|_| Error::Validation(format!("bad header field {k:?}")))
        };
        let method: Method = field("method")?
            .parse()
            .map_err(|_| Error::Validation(format!("unknown method {:?}", header["method"])))?;
        let space: Space = field("space")?.parse()?;
        let sparse = match field("storage")?.as_str() {
            "dense" => false,
            "sparse" => true,
            other => return Err(Error::Validation(format!("unknown storage {other:?}"))),
        };
        let t_count = count("periods")?;
        let v_count = count("vocab")?;
        let dim = count("dim")?;
        let labels: Vec<String> = field("labels")?.split_whitespace().map(str::to_string).collect();
        if labels.len() != t_count {
            return Err(Error::Validation(format!(
                "header declares {t_count} periods but lists {} labels",
                labels.len()
            )));
        }
        let label_index: HashMap<&str, usize> = labels.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
        let expected = t_count * v_count;

        let mut words: Vec<String> = Vec::with_capacity(v_count);
        let mut word_index: HashMap<String, usize> = HashMap::with_capacity(v_count);
        let mut filled = vec![false; expected];
        let mut dense = if sparse { Vec::new() } else { vec![T::zero(); expected * dim] };
        let mut sparse_rows: Vec<Vec<(u32, T)>> = if sparse { vec![Vec::new(); expected] } else { Vec::new() };
        let mut found = 0usize;

        while let Some((n, line)) = next_line()? {
            if line.trim().is_empty() {
                continue;
            }
            let mut fields = line.split_ascii_whitespace();
            let word = fields.next().unwrap();
            let label = fields.next().ok_or_else(|| Error::Parse {
                line: n,
                reason: "record without a period label".into(),
            })?;
            let t = *label_index.get(label).ok_or_else(|| {
                Error::Validation(format!(
                    "line {n}: period {label:?} not among the {t_count} declared periods"
                ))
            })?;
            let i = match word_index.get(word) {
                Some(&i) => i,
                None => {
                    if words.len() == v_count {
                        return Err(Error::Validation(format!(
                            "line {n}: more than the declared {v_count} words"
                        )));
                    }
                    word_index.insert(word.to_string(), words.len());
                    words.push(word.to_string());
                    words.len() - 1
                }
            };
            let r = t * v_count + i;
            if std::mem::replace(&mut filled[r], true) {
                return Err(Error::Validation(format!("line {n}: duplicate key ({word}, {label})")));
            }
            found += 1;
            let bad = |tok: &str| Error::Parse {
                line: n,
                reason: format!("bad value {tok:?}"),
            };
            if sparse {
                let mut last: Option<u32> = None;
                for tok in fields {
                    let (c, x) = tok.split_once(':').ok_or_else(|| bad(tok))?;
                    let c: u32 = c.parse().map_err(|_| bad(tok))?;
                    let x: T = x.parse().map_err(|_| bad(tok))?;
                    if c as usize >= dim {
                        return Err(Error::DimensionMismatch(format!(
                            "line {n}: column {c} outside dimension {dim}"
                        )));
                    }
                    if last.is_some_and(|l| l >= c) {
                        return Err(bad(tok));
                    }
                    last = Some(c);
                    sparse_rows[r].push((c, x));
                }
            } else {
                let row = &mut dense[r * dim..(r + 1) * dim];
                let mut k = 0;
                for tok in fields {
                    if k == dim {
                        return Err(Error::DimensionMismatch(format!(
                            "line {n}: more than {dim} values"
                        )));
                    }
                    row[k] = tok.parse().map_err(|_| bad(tok))?;
                    k += 1;
                }
                if k != dim {
                    return Err(Error::DimensionMismatch(format!(
                        "line {n}: {k} values, expected {dim}"
                    )));
                }
            }
        }
        if found != expected {
            return Err(Error::Truncated { expected, found });
        }
        let rows = if sparse {
            Rows::Sparse(CsrMatrix::from_rows(dim, sparse_rows))
        } else {
            Rows::Dense(dense)
        };
        let mut set = EmbeddingSet::new(method, space, words, labels, dim, rows)?;
        if let Some(list) = header.get("unobserved") {
            for tok in list.split_whitespace() {
                let r: usize = tok
                    .parse()
                    .ok()
                    .filter(|&r| r < expected)
                    .ok_or_else(|| Error::Validation(format!("bad unobserved row {tok:?}")))?;
                set.observed[r] = false;
            }
        }
        set.meta = meta;
        Ok(set)
    }
}

/// Writes `set` to `path`, gzip-compressed when the name ends in `.gz`.
pub fn write_embeddings<T: Scalar>(set: &EmbeddingSet<T>, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let res = if is_gz(path) {
        let mut enc = BufWriter::new(GzEncoder::new(file, Compression::default()));
        set.write_to(&mut enc)
            .and_then(|_| enc.into_inner().map_err(|e| e.into_error()))
            .and_then(|gz| gz.finish().map(|_| ()))
    } else {
        let mut w = BufWriter::new(file);
        set.write_to(&mut w).and_then(|_| w.flush())
    };
    res.map_err(|e| Error::io(path, e))
}

pub fn read_embeddings<T: Scalar>(path: &Path) -> Result<EmbeddingSet<T>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader: Box<dyn Read> = if is_gz(path) {
        Box::new(MultiGzDecoder::new(file))
    } else {
        Box::new(file)
    };
    EmbeddingSet::read_from(BufReader::new(reader))
}

fn is_gz(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "gz")
}
