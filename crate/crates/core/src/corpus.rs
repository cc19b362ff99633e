//! Time-stamped corpus ingestion: n-gram and plain-text parsing, period
//! bucketing, and vocabulary construction.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::{Path, PathBuf};

use flate2::read::MultiGzDecoder;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One parsed input line.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NgramRecord {
    pub tokens: Vec<String>,
    pub year: i32,
    pub match_count: u64,
}

/// Parses a Google Books n-gram line: `ngram TAB year TAB match_count [TAB volume_count]`.
///
/// `line_no` is only used for error reporting.
pub fn parse_ngram_line(line: &str, line_no: usize) -> Result<NgramRecord> {
    let err = |reason: &str| Error::Parse {
        line: line_no,
        reason: reason.to_string(),
    };
    let mut fields = line.trim_end_matches(['\n', '\r']).split('\t');
    let ngram = fields.next().ok_or_else(|| err("missing n-gram field"))?;
    let year = fields.next().ok_or_else(|| err("expected at least 3 tab-separated fields"))?;
    let count = fields.next().ok_or_else(|| err("expected at least 3 tab-separated fields"))?;
    let year: i32 = year
        .trim()
        .parse()
        .map_err(|_| err(&format!("year {year:?} is not an integer")))?;
    let match_count: u64 = count
        .trim()
        .parse()
        .map_err(|_| err(&format!("match_count {count:?} is not an integer")))?;
    if match_count == 0 {
        return Err(err("match_count must be at least 1"));
    }
    let tokens: Vec<String> = ngram.split_whitespace().map(str::to_string).collect();
    if tokens.is_empty() {
        return Err(err("empty n-gram"));
    }
    Ok(NgramRecord {
        tokens,
        year,
        match_count,
    })
}

/// Parses a plain-text line `YEAR TAB sentence` with unit weight.
pub fn parse_text_line(line: &str, line_no: usize) -> Result<NgramRecord> {
    let err = |reason: String| Error::Parse {
        line: line_no,
        reason,
    };
    let line = line.trim_end_matches(['\n', '\r']);
    let (year, sentence) = line
        .split_once('\t')
        .ok_or_else(|| err("expected YEAR<TAB>sentence".into()))?;
    let year: i32 = year
        .trim()
        .parse()
        .map_err(|_| err(format!("year {year:?} is not an integer")))?;
    let tokens: Vec<String> = sentence.split_whitespace().map(str::to_string).collect();
    if tokens.is_empty() {
        return Err(err("empty sentence".into()));
    }
    Ok(NgramRecord {
        tokens,
        year,
        match_count: 1,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputFormat {
    Ngram,
    Text,
}

/// Half-open year range `[start_year, end_year)` cut into equal periods.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeriodSpec {
    start_year: i32,
    end_year: i32,
    period_length: i32,
}

impl PeriodSpec {
    pub fn new(start_year: i32, end_year: i32, period_length: i32) -> Result<Self> {
        if end_year <= start_year {
            return Err(Error::InvalidPeriodSpec(format!(
                "end_year {end_year} must exceed start_year {start_year}"
            )));
        }
        if period_length < 1 {
            return Err(Error::InvalidPeriodSpec(format!(
                "period_length {period_length} must be positive"
            )));
        }
        let span = end_year - start_year;
        if span % period_length != 0 {
            return Err(Error::InvalidPeriodSpec(format!(
                "year span {span} is not divisible by period_length {period_length}"
            )));
        }
        if span / period_length < 2 {
            return Err(Error::InvalidPeriodSpec(format!(
                "need at least 2 periods, got {}",
                span / period_length
            )));
        }
        Ok(PeriodSpec {
            start_year,
            end_year,
            period_length,
        })
    }

    pub fn start_year(&self) -> i32 {
        self.start_year
    }

    pub fn end_year(&self) -> i32 {
        self.end_year
    }

    pub fn period_length(&self) -> i32 {
        self.period_length
    }

    pub fn num_periods(&self) -> usize {
        ((self.end_year - self.start_year) / self.period_length) as usize
    }

    pub fn period_of(&self, year: i32) -> Option<usize> {
        if year < self.start_year || year >= self.end_year {
            return None;
        }
        Some(((year - self.start_year) / self.period_length) as usize)
    }

    /// `"1989"` for one-year periods, `"1980-1989"` otherwise.
    pub fn label(&self, period: usize) -> String {
        let start = self.start_year + period as i32 * self.period_length;
        if self.period_length == 1 {
            start.to_string()
        } else {
            format!("{}-{}", start, start + self.period_length - 1)
        }
    }

    pub fn labels(&self) -> Vec<String> {
        (0..self.num_periods()).map(|t| self.label(t)).collect()
    }
}

/// Token normalization applied before anything is stored.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TokenFilter {
    pub lowercase: bool,
    pub strip_pos_tags: bool,
    /// Replace tokens containing non-alphabetic characters by a gap.
    pub alphabetic_only: bool,
}

impl Default for TokenFilter {
    fn default() -> Self {
        TokenFilter {
            lowercase: true,
            strip_pos_tags: true,
            alphabetic_only: true,
        }
    }
}

impl TokenFilter {
    /// Passes every token through unchanged.
    pub fn identity() -> Self {
        TokenFilter {
            lowercase: false,
            strip_pos_tags: false,
            alphabetic_only: false,
        }
    }

    /// Returns the normalized token, or `None` when it must be dropped.
    pub fn apply(&self, token: &str) -> Option<String> {
        let mut tok = token;
        if self.strip_pos_tags {
            if let Some(pos) = tok.rfind('_') {
                let tag = &tok[pos + 1..];
                if !tag.is_empty() && tag.chars().all(|c| c.is_ascii_uppercase() || c == '.') {
                    tok = &tok[..pos];
                }
            }
        }
        if tok.is_empty() {
            return None;
        }
        if self.alphabetic_only && !tok.chars().all(char::is_alphabetic) {
            return None;
        }
        if self.lowercase {
            Some(tok.to_lowercase())
        } else {
            Some(tok.to_string())
        }
    }
}

/// Interned token id inside a [`PeriodizedCorpus`].
pub type TokenId = u32;

/// Placeholder for a position whose token was dropped by the filter.
/// Gaps keep window distances faithful to the source text.
pub const GAP: TokenId = u32::MAX;

/// A stored record: interned tokens plus its year and weight.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Record {
    pub tokens: Vec<TokenId>,
    pub year: i32,
    pub weight: u64,
}

/// String interner for corpus tokens.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Lexicon {
    words: Vec<String>,
    ids: HashMap<String, TokenId>,
}

impl Lexicon {
    pub fn intern(&mut self, word: &str) -> TokenId {
        if let Some(&id) = self.ids.get(word) {
            return id;
        }
        let id = self.words.len() as TokenId;
        self.words.push(word.to_string());
        self.ids.insert(word.to_string(), id);
        id
    }

    pub fn id(&self, word: &str) -> Option<TokenId> {
        self.ids.get(word).copied()
    }

    pub fn word(&self, id: TokenId) -> &str {
        &self.words[id as usize]
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

/// Records bucketed into ordered time periods. Each segment is a multiset
/// of records in input order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PeriodizedCorpus {
    labels: Vec<String>,
    lexicon: Lexicon,
    segments: Vec<Vec<Record>>,
}

/// Counters reported by [`load_corpus`].
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct LoadStats {
    pub lines: usize,
    pub kept: usize,
    pub out_of_range: usize,
    pub malformed: usize,
    /// First few malformed line locations, `path:line`.
    pub malformed_examples: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OnMalformed {
    #[default]
    Skip,
    Abort,
}

impl PeriodizedCorpus {
    /// An empty corpus with `labels.len()` periods.
    pub fn with_labels(labels: Vec<String>) -> Self {
        let segments = vec![Vec::new(); labels.len()];
        PeriodizedCorpus {
            labels,
            lexicon: Lexicon::default(),
            segments,
        }
    }

    /// Buckets records by `spec`; records outside the range are dropped.
    pub fn from_records<I>(spec: &PeriodSpec, records: I, filter: &TokenFilter) -> Self
    where
        I: IntoIterator<Item = NgramRecord>,
    {
        let mut corpus = PeriodizedCorpus::with_labels(spec.labels());
        for rec in records {
            if let Some(t) = spec.period_of(rec.year) {
                corpus.push_raw(t, &rec, filter);
            }
        }
        corpus
    }

    /// Normalizes and interns `rec` into segment `period`.
    pub fn push_raw(&mut self, period: usize, rec: &NgramRecord, filter: &TokenFilter) {
        let tokens = rec
            .tokens
            .iter()
            .map(|tok| match filter.apply(tok) {
                Some(norm) => self.lexicon.intern(&norm),
                None => GAP,
            })
            .collect();
        self.segments[period].push(Record {
            tokens,
            year: rec.year,
            weight: rec.match_count,
        });
    }

    /// Appends an already-interned record.
    pub fn push(&mut self, period: usize, record: Record) {
        self.segments[period].push(record);
    }

    pub fn intern(&mut self, word: &str) -> TokenId {
        self.lexicon.intern(word)
    }

    pub fn num_periods(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, period: usize) -> &str {
        &self.labels[period]
    }

    pub fn period_index(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn lexicon(&self) -> &Lexicon {
        &self.lexicon
    }

    pub fn segment(&self, period: usize) -> &[Record] {
        &self.segments[period]
    }

    pub fn segment_mut(&mut self, period: usize) -> &mut Vec<Record> {
        &mut self.segments[period]
    }

    pub fn segments(&self) -> impl Iterator<Item = (usize, &[Record])> {
        self.segments.iter().enumerate().map(|(t, s)| (t, s.as_slice()))
    }

    pub fn is_empty(&self) -> bool {
        self.segments.iter().all(Vec::is_empty)
    }

    /// Resolves a record's tokens back to strings (`None` for gaps).
    pub fn words<'a>(&'a self, record: &'a Record) -> impl Iterator<Item = Option<&'a str>> + 'a {
        record.tokens.iter().map(move |&id| {
            if id == GAP {
                None
            } else {
                Some(self.lexicon.word(id))
            }
        })
    }

    /// Weighted token count of one period (gaps excluded).
    pub fn period_token_total(&self, period: usize) -> u64 {
        self.segments[period]
            .iter()
            .map(|r| r.weight * r.tokens.iter().filter(|&&id| id != GAP).count() as u64)
            .sum()
    }

    /// Weighted token count of the whole corpus (gaps excluded).
    pub fn token_total(&self) -> u64 {
        (0..self.num_periods()).map(|t| self.period_token_total(t)).sum()
    }

    /// Sub-corpus holding only `periods`, in the given order.
    pub fn select_periods(&self, periods: &[usize]) -> Result<PeriodizedCorpus> {
        let mut labels = Vec::with_capacity(periods.len());
        let mut segments = Vec::with_capacity(periods.len());
        for &t in periods {
            if t >= self.num_periods() {
                return Err(Error::InvalidArgument(format!("period index {t} out of range")));
            }
            labels.push(self.labels[t].clone());
            segments.push(self.segments[t].clone());
        }
        Ok(PeriodizedCorpus {
            labels,
            lexicon: self.lexicon.clone(),
            segments,
        })
    }

    /// Writes the corpus back out in the n-gram TSV layout (volume_count 1).
    /// Gap positions are written as `_`.
    pub fn write_tsv<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        for (_, seg) in self.segments() {
            for rec in seg {
                let text: Vec<&str> = self.words(rec).map(|w| w.unwrap_or("_")).collect();
                writeln!(out, "{}\t{}\t{}\t1", text.join(" "), rec.year, rec.weight)?;
            }
        }
        Ok(())
    }
}

/// Lines starting with this are metadata and skipped by the readers.
pub const HEADER_PREFIX: &str = "#!";

fn open_maybe_gz(path: &Path) -> Result<Box<dyn BufRead>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader: Box<dyn Read> = if path.extension().is_some_and(|e| e == "gz") {
        Box::new(MultiGzDecoder::new(file))
    } else {
        Box::new(file)
    };
    Ok(Box::new(BufReader::new(reader)))
}

/// Reads `sources` in order and buckets them by `spec`.
///
/// Malformed lines are counted and skipped, or abort the load, per
/// `on_malformed`. Lines starting with [`HEADER_PREFIX`] are ignored. An
/// empty result is an error.
pub fn load_corpus(
    sources: &[PathBuf],
    format: InputFormat,
    spec: &PeriodSpec,
    filter: &TokenFilter,
    on_malformed: OnMalformed,
) -> Result<(PeriodizedCorpus, LoadStats)> {
    let mut corpus = PeriodizedCorpus::with_labels(spec.labels());
    let mut stats = LoadStats::default();
    for path in sources {
        let reader = open_maybe_gz(path)?;
        for (i, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() || line.starts_with(HEADER_PREFIX) {
                continue;
            }
            stats.lines += 1;
            let parsed = match format {
                InputFormat::Ngram => parse_ngram_line(&line, i + 1),
                InputFormat::Text => parse_text_line(&line, i + 1),
            };
            let rec = match parsed {
                Ok(rec) => rec,
                Err(e) => match on_malformed {
                    OnMalformed::Abort => {
                        return Err(match e {
                            Error::Parse { line, reason } => Error::Parse {
                                line,
                                reason: format!("{}: {reason}", path.display()),
                            },
                            other => other,
                        })
                    }
                    OnMalformed::Skip => {
                        stats.malformed += 1;
                        if stats.malformed_examples.len() < 10 {
                            stats
                                .malformed_examples
                                .push(format!("{}:{}", path.display(), i + 1));
                        }
                        continue;
                    }
                },
            };
            match spec.period_of(rec.year) {
                Some(t) => {
                    corpus.push_raw(t, &rec, filter);
                    stats.kept += 1;
                }
                None => stats.out_of_range += 1,
            }
        }
    }
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus(format!(
            "no records in [{}, {}) across {} file(s)",
            spec.start_year(),
            spec.end_year(),
            sources.len()
        )));
    }
    log::info!(
        "loaded {} records ({} out of range, {} malformed)",
        stats.kept,
        stats.out_of_range,
        stats.malformed
    );
    Ok((corpus, stats))
}

/// Word list with a bijective index, ordered by descending count then
/// lexicographically.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocabulary {
    words: Vec<String>,
    counts: Vec<u64>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    /// Builds from `(word, count)` pairs, applying the canonical ordering.
    pub fn from_counts<I, S>(entries: I) -> Self
    where
        I: IntoIterator<Item = (S, u64)>,
        S: Into<String>,
    {
        let mut entries: Vec<(String, u64)> =
            entries.into_iter().map(|(w, c)| (w.into(), c)).collect();
        entries.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        entries.dedup_by(|a, b| a.0 == b.0);
        let index = entries
            .iter()
            .enumerate()
            .map(|(i, (w, _))| (w.clone(), i))
            .collect();
        let (words, counts) = entries.into_iter().unzip();
        Vocabulary {
            words,
            counts,
            index,
        }
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn word(&self, i: usize) -> &str {
        &self.words[i]
    }

    pub fn count(&self, i: usize) -> u64 {
        self.counts[i]
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn index(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    /// Maps every corpus token id to its vocabulary index.
    pub fn lookup_table(&self, lexicon: &Lexicon) -> Vec<Option<u32>> {
        (0..lexicon.len())
            .map(|id| self.index(lexicon.word(id as TokenId)).map(|i| i as u32))
            .collect()
    }

    /// Per-period weighted occurrence counts of each vocabulary word.
    pub fn period_counts(&self, corpus: &PeriodizedCorpus) -> Vec<Vec<u64>> {
        let table = self.lookup_table(corpus.lexicon());
        corpus
            .segments()
            .map(|(_, seg)| {
                let mut counts = vec![0u64; self.len()];
                for rec in seg {
                    for &id in &rec.tokens {
                        if id != GAP {
                            if let Some(i) = table[id as usize] {
                                counts[i as usize] += rec.weight;
                            }
                        }
                    }
                }
                counts
            })
            .collect()
    }

    /// Writes `word TAB count` lines.
    pub fn write_tsv<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        for (w, c) in self.words.iter().zip(&self.counts) {
            writeln!(out, "{w}\t{c}")?;
        }
        Ok(())
    }

    /// Reads `word TAB count` lines.
    pub fn read_tsv<R: BufRead>(input: R) -> Result<Self> {
        let mut entries = Vec::new();
        for (i, line) in input.lines().enumerate() {
            let line = line.map_err(|e| Error::io("<vocabulary>", e))?;
            if line.trim().is_empty() || line.starts_with(HEADER_PREFIX) {
                continue;
            }
            let (w, c) = line.split_once('\t').ok_or_else(|| Error::Parse {
                line: i + 1,
                reason: "expected word<TAB>count".into(),
            })?;
            let c: u64 = c.trim().parse().map_err(|_| Error::Parse {
                line: i + 1,
                reason: format!("count {c:?} is not an integer"),
            })?;
            entries.push((w.to_string(), c));
        }
        Ok(Vocabulary::from_counts(entries))
    }
}

/// Aggregates weighted token counts over all periods and keeps words with
/// at least `min_count` occurrences, truncated to `max_size` if given.
pub fn build_vocabulary(
    corpus: &PeriodizedCorpus,
    min_count: u64,
    max_size: Option<usize>,
) -> Result<Vocabulary> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus("cannot build a vocabulary".into()));
    }
    let mut counts = vec![0u64; corpus.lexicon().len()];
    for (_, seg) in corpus.segments() {
        for rec in seg {
            for &id in &rec.tokens {
                if id != GAP {
                    counts[id as usize] += rec.weight;
                }
            }
        }
    }
    let mut vocab = Vocabulary::from_counts(
        counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c >= min_count.max(1))
            .map(|(id, &c)| (corpus.lexicon().word(id as TokenId).to_string(), c)),
    );
    if let Some(max) = max_size {
        if vocab.len() > max {
            vocab = Vocabulary::from_counts(
                vocab
                    .words
                    .iter()
                    .zip(&vocab.counts)
                    .take(max)
                    .map(|(w, &c)| (w.clone(), c)),
            );
        }
    }
    if vocab.is_empty() {
        return Err(Error::EmptyVocabulary { min_count });
    }
    Ok(vocab)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn rec(text: &str, year: i32, count: u64) -> NgramRecord {
        NgramRecord {
            tokens: text.split_whitespace().map(str::to_string).collect(),
            year,
            match_count: count,
        }
    }

    #[test]
    fn parses_five_gram_line() {
        let r = parse_ngram_line("cat sat on the mat\t1991\t12\t8", 1).unwrap();
        assert_eq!(r.tokens, ["cat", "sat", "on", "the", "mat"]);
        assert_eq!(r.year, 1991);
        assert_eq!(r.match_count, 12);
    }

    #[test]
    fn parses_unigram_line() {
        let r = parse_ngram_line("hello\t2000\t1\t1", 7).unwrap();
        assert_eq!(r.tokens, ["hello"]);
        assert_eq!((r.year, r.match_count), (2000, 1));
    }

    #[test]
    fn rejects_line_without_tabs() {
        match parse_ngram_line("bad line with no tabs", 42) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 42),
            other => panic!("expected parse error, got {other:?}"),
        }
        assert!(parse_ngram_line("a b\tyear\t3", 1).is_err());
        assert!(parse_ngram_line("a b\t1999\t0", 1).is_err());
    }

    #[test]
    fn parses_text_line() {
        let r = parse_text_line("1950\tThe quick fox", 1).unwrap();
        assert_eq!(r.tokens, ["The", "quick", "fox"]);
        assert_eq!(r.match_count, 1);
        assert!(parse_text_line("no year here", 1).is_err());
    }

    #[test]
    fn period_spec_buckets_half_open() {
        let spec = PeriodSpec::new(1900, 2000, 10).unwrap();
        assert_eq!(spec.num_periods(), 10);
        assert_eq!(spec.period_of(1915), Some(1));
        assert_eq!(spec.period_of(2000), None);
        assert_eq!(spec.period_of(1899), None);
        assert_eq!(spec.label(9), "1990-1999");
        assert_eq!(PeriodSpec::new(1989, 1991, 1).unwrap().label(1), "1990");
    }

    #[test]
    fn period_spec_validation() {
        assert!(PeriodSpec::new(2000, 1900, 10).is_err());
        assert!(PeriodSpec::new(1900, 1995, 10).is_err());
        assert!(PeriodSpec::new(1900, 1910, 10).is_err());
        assert!(PeriodSpec::new(1900, 1910, 0).is_err());
    }

    #[test]
    fn filter_strips_tags_and_non_alphabetic() {
        let f = TokenFilter::default();
        assert_eq!(f.apply("Running_VERB").as_deref(), Some("running"));
        assert_eq!(f.apply("_NOUN_"), None);
        assert_eq!(f.apply("1984"), None);
        assert_eq!(f.apply("don't"), None);
        assert_eq!(f.apply("Ünïcode").as_deref(), Some("ünïcode"));
        assert_eq!(TokenFilter::identity().apply("A_B1").as_deref(), Some("A_B1"));
    }

    #[test]
    fn filtered_tokens_keep_their_position() {
        let spec = PeriodSpec::new(1900, 1920, 10).unwrap();
        let c = PeriodizedCorpus::from_records(
            &spec,
            [rec("a 12 b", 1901, 1)],
            &TokenFilter::default(),
        );
        let words: Vec<_> = c.words(&c.segment(0)[0]).collect();
        assert_eq!(words, [Some("a"), None, Some("b")]);
        assert_eq!(c.period_token_total(0), 2);
    }

    #[test]
    fn vocabulary_min_count() {
        let spec = PeriodSpec::new(2000, 2002, 1).unwrap();
        let c = PeriodizedCorpus::from_records(&spec, [rec("a a b", 2000, 1)], &TokenFilter::default());
        let v = build_vocabulary(&c, 2, None).unwrap();
        assert_eq!(v.words(), ["a"]);
        assert!(matches!(build_vocabulary(&c, 5, None), Err(Error::EmptyVocabulary { .. })));
    }

    #[test]
    fn vocabulary_ties_break_lexicographically() {
        let spec = PeriodSpec::new(2000, 2002, 1).unwrap();
        let c = PeriodizedCorpus::from_records(
            &spec,
            [rec("b a b", 2000, 1), rec("a", 2001, 1), rec("c", 2001, 1)],
            &TokenFilter::default(),
        );
        let v = build_vocabulary(&c, 1, None).unwrap();
        assert_eq!(v.words(), ["a", "b", "c"]);
        let v = build_vocabulary(&c, 1, Some(1)).unwrap();
        assert_eq!(v.words(), ["a"]);
    }

    #[test]
    fn vocabulary_counts_weighted_tokens() {
        // Brute-force tally: each occurrence contributes match_count.
        let spec = PeriodSpec::new(2000, 2002, 1).unwrap();
        let text = "x y z y x";
        let c = PeriodizedCorpus::from_records(&spec, [rec(text, 2000, 4)], &TokenFilter::default());
        let mut tally: HashMap<&str, u64> = HashMap::new();
        for tok in text.split_whitespace() {
            *tally.entry(tok).or_default() += 4;
        }
        let v = build_vocabulary(&c, 1, None).unwrap();
        for (w, n) in tally {
            assert_eq!(v.count(v.index(w).unwrap()), n);
        }
        assert_eq!(v.count(v.index("x").unwrap()), 8);
        assert_eq!(v.count(v.index("z").unwrap()), 4);
    }

    #[test]
    fn split_files_match_concatenated_file() {
        let dir = tempfile::tempdir().unwrap();
        let a = "a b c\t1990\t2\t1\nb c d\t1995\t1\t1\n";
        let b = "a b c\t1990\t2\t1\nbroken line\nd e\t2005\t3\t1\n";
        let pa = dir.path().join("a.tsv");
        let pb = dir.path().join("b.tsv");
        let pc = dir.path().join("c.tsv");
        File::create(&pa).unwrap().write_all(a.as_bytes()).unwrap();
        File::create(&pb).unwrap().write_all(b.as_bytes()).unwrap();
        File::create(&pc)
            .unwrap()
            .write_all(format!("{a}{b}").as_bytes())
            .unwrap();
        let spec = PeriodSpec::new(1990, 2000, 5).unwrap();
        let f = TokenFilter::default();
        let (split, s1) =
            load_corpus(&[pa, pb], InputFormat::Ngram, &spec, &f, OnMalformed::Skip).unwrap();
        let (whole, s2) =
            load_corpus(&[pc.clone()], InputFormat::Ngram, &spec, &f, OnMalformed::Skip).unwrap();
        assert_eq!(split, whole);
        assert_eq!((s1.kept, s1.malformed, s1.out_of_range), (3, 1, 1));
        assert_eq!(s2.kept, 3);
        assert_eq!(split.segment(0).len(), 2);
        assert!(load_corpus(&[pc], InputFormat::Ngram, &spec, &f, OnMalformed::Abort).is_err());
    }

    #[test]
    fn gzip_input_is_transparent() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.tsv.gz");
        let mut enc = flate2::write::GzEncoder::new(File::create(&path).unwrap(), flate2::Compression::fast());
        enc.write_all(b"a b\t1991\t3\t1\n").unwrap();
        enc.finish().unwrap();
        let spec = PeriodSpec::new(1990, 1992, 1).unwrap();
        let (c, _) = load_corpus(&[path], InputFormat::Ngram, &spec, &TokenFilter::default(), OnMalformed::Skip)
            .unwrap();
        assert_eq!(c.segment(1)[0].weight, 3);
    }

    #[test]
    fn empty_result_is_fatal() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.tsv");
        File::create(&path).unwrap().write_all(b"a\t1800\t1\t1\n").unwrap();
        let spec = PeriodSpec::new(1990, 1992, 1).unwrap();
        let res = load_corpus(&[path], InputFormat::Ngram, &spec, &TokenFilter::default(), OnMalformed::Skip);
        assert!(matches!(res, Err(Error::EmptyCorpus(_))));
        let missing = load_corpus(
            &[dir.path().join("nope")],
            InputFormat::Ngram,
            &spec,
            &TokenFilter::default(),
            OnMalformed::Skip,
        );
        assert!(matches!(missing, Err(Error::Io { .. })));
    }

    #[test]
    fn vocabulary_tsv_round_trip() {
        let v = Vocabulary::from_counts([("b", 3u64), ("a", 3), ("c", 9)]);
        let mut buf = Vec::new();
        v.write_tsv(&mut buf).unwrap();
        let back = Vocabulary::read_tsv(&buf[..]).unwrap();
        assert_eq!(back, v);
        for (i, w) in v.words().iter().enumerate() {
            assert_eq!(v.index(w), Some(i));
        }
    }
}
