//! Windowed co-occurrence counts and the training-pair stream.

use std::collections::HashMap;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};

use crate::corpus::{PeriodizedCorpus, Record, Vocabulary, GAP};
use crate::error::{Error, Result};

/// Calls `emit(center, context)` for every in-vocabulary pair within
/// `window` positions of each other. Gap and out-of-vocabulary positions
/// still occupy their slot.
#[inline]
pub(crate) fn for_each_window_pair(
    record: &Record,
    table: &[Option<u32>],
    window: usize,
    mut emit: impl FnMut(u32, u32),
) {
    let ids: Vec<Option<u32>> = record
        .tokens
        .iter()
        .map(|&id| if id == GAP { None } else { table[id as usize] })
        .collect();
    let n = ids.len();
    for p in 0..n {
        let Some(center) = ids[p] else { continue };
        let lo = p.saturating_sub(window);
        let hi = (p + window).min(n - 1);
        for (q, ctx) in ids.iter().enumerate().take(hi + 1).skip(lo) {
            if q == p {
                continue;
            }
            if let Some(context) = *ctx {
                emit(center, context);
            }
        }
    }
}

/// Sparse center x context counts for one period (or the whole corpus).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoocCounts {
    label: String,
    vocab_size: usize,
    /// Sorted by (center, context); all counts positive.
    pairs: Vec<(u32, u32, u64)>,
    center_marginals: Vec<u64>,
    context_marginals: Vec<u64>,
    total_pairs: u64,
}

impl CoocCounts {
    /// Builds counts from an unordered pair map.
    pub fn from_map(label: impl Into<String>, vocab_size: usize, map: HashMap<(u32, u32), u64>) -> Self {
        let mut pairs: Vec<(u32, u32, u64)> =
            map.into_iter().filter(|&(_, n)| n > 0).map(|((w, c), n)| (w, c, n)).collect();
        pairs.sort_unstable();
        let mut center_marginals = vec![0u64; vocab_size];
        let mut context_marginals = vec![0u64; vocab_size];
        let mut total_pairs = 0u64;
        for &(w, c, n) in &pairs {
            center_marginals[w as usize] += n;
            context_marginals[c as usize] += n;
            total_pairs += n;
        }
        CoocCounts {
            label: label.into(),
            vocab_size,
            pairs,
            center_marginals,
            context_marginals,
            total_pairs,
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    /// Nonzero entries sorted by (center, context).
    pub fn pairs(&self) -> &[(u32, u32, u64)] {
        &self.pairs
    }

    pub fn get(&self, center: usize, context: usize) -> u64 {
        let key = (center as u32, context as u32);
        self.pairs
            .binary_search_by(|&(w, c, _)| (w, c).cmp(&key))
            .map(|i| self.pairs[i].2)
            .unwrap_or(0)
    }

    pub fn center_marginals(&self) -> &[u64] {
        &self.center_marginals
    }

    pub fn context_marginals(&self) -> &[u64] {
        &self.context_marginals
    }

    pub fn total_pairs(&self) -> u64 {
        self.total_pairs
    }

    /// Sorted text form: a `#` header with the totals, then
    /// `center TAB context TAB count` lines using vocabulary words.
    pub fn write_tsv<W: Write>(&self, vocab: &Vocabulary, mut out: W) -> std::io::Result<()> {
        writeln!(out, "# chronovec-cooc v1")?;
        writeln!(out, "# period {}", self.label)?;
        writeln!(out, "# vocab {}", self.vocab_size)?;
        writeln!(out, "# total_pairs {}", self.total_pairs)?;
        writeln!(out, "# center_marginal_sum {}", self.center_marginals.iter().sum::<u64>())?;
        writeln!(out, "# context_marginal_sum {}", self.context_marginals.iter().sum::<u64>())?;
        for &(w, c, n) in &self.pairs {
            writeln!(out, "{}\t{}\t{}", vocab.word(w as usize), vocab.word(c as usize), n)?;
        }
        Ok(())
    }
}

fn count_segments<'a>(
    segments: impl Iterator<Item = &'a [Record]>,
    table: &[Option<u32>],
    window: usize,
) -> HashMap<(u32, u32), u64> {
    let mut map: HashMap<(u32, u32), u64> = HashMap::new();
    for seg in segments {
        for rec in seg {
            for_each_window_pair(rec, table, window, |w, c| {
                *map.entry((w, c)).or_default() += rec.weight;
            });
        }
    }
    map
}

/// Counts every in-vocabulary pair within `window` positions in one period,
/// weighted by match count.
pub fn count_pairs(
    corpus: &PeriodizedCorpus,
    vocab: &Vocabulary,
    window: usize,
    period: usize,
) -> Result<CoocCounts> {
    if window < 1 {
        return Err(Error::InvalidArgument("window radius must be at least 1".into()));
    }
    if period >= corpus.num_periods() {
        return Err(Error::InvalidArgument(format!("period index {period} out of range")));
    }
    let table = vocab.lookup_table(corpus.lexicon());
    let map = count_segments(std::iter::once(corpus.segment(period)), &table, window);
    Ok(CoocCounts::from_map(corpus.label(period), vocab.len(), map))
}

/// Counts over all periods at once, labelled `"all"`.
pub fn count_pairs_whole(corpus: &PeriodizedCorpus, vocab: &Vocabulary, window: usize) -> Result<CoocCounts> {
    if window < 1 {
        return Err(Error::InvalidArgument("window radius must be at least 1".into()));
    }
    let table = vocab.lookup_table(corpus.lexicon());
    let map = count_segments(corpus.segments().map(|(_, s)| s), &table, window);
    Ok(CoocCounts::from_map("all", vocab.len(), map))
}

/// Index arithmetic for (word, period) rows: `t * |V| + i`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TaggedVocabulary {
    base_len: usize,
    periods: usize,
}

impl TaggedVocabulary {
    pub fn new(base_len: usize, periods: usize) -> Self {
        TaggedVocabulary { base_len, periods }
    }

    pub fn base_len(&self) -> usize {
        self.base_len
    }

    pub fn periods(&self) -> usize {
        self.periods
    }

    pub fn len(&self) -> usize {
        self.base_len * self.periods
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn tag(&self, word: usize, period: usize) -> usize {
        debug_assert!(word < self.base_len && period < self.periods);
        period * self.base_len + word
    }

    #[inline]
    pub fn untag(&self, tagged: usize) -> (usize, usize) {
        (tagged % self.base_len, tagged / self.base_len)
    }
}

/// One weighted (center, context) training example.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TrainingPair {
    pub center: u32,
    pub context: u32,
    pub weight: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StreamConfig {
    /// word2vec-style frequent-word threshold applied to the context word.
    pub subsample_threshold: Option<f64>,
    pub seed: u64,
    /// Tag centers with their period (`t * |V| + i`); plain SGNS leaves them untagged.
    pub tag_centers: bool,
    /// Tag contexts as well; the default shares one context space across periods.
    pub tagged_contexts: bool,
}

impl Default for StreamConfig {
    fn default() -> Self {
        StreamConfig {
            subsample_threshold: None,
            seed: 1,
            tag_centers: true,
            tagged_contexts: false,
        }
    }
}

/// Keep probability for a word of relative frequency `freq`.
pub fn subsample_keep_probability(freq: f64, threshold: f64) -> f64 {
    if freq <= 0.0 {
        return 1.0;
    }
    (((freq / threshold).sqrt() + 1.0) * threshold / freq).min(1.0)
}

/// Iterator over [`TrainingPair`]s in corpus order.
pub struct PairStream<'a> {
    corpus: &'a PeriodizedCorpus,
    table: Vec<Option<u32>>,
    window: usize,
    periods: Vec<usize>,
    vocab_len: usize,
    config: StreamConfig,
    keep: Option<Vec<f64>>,
    rng: ChaCha8Rng,
    period_pos: usize,
    record_pos: usize,
    buffer: Vec<TrainingPair>,
    buffer_pos: usize,
}

impl PairStream<'_> {
    fn refill(&mut self) -> bool {
        self.buffer.clear();
        self.buffer_pos = 0;
        while self.buffer.is_empty() {
            let Some(&t) = self.periods.get(self.period_pos) else {
                return false;
            };
            let seg = self.corpus.segment(t);
            if self.record_pos >= seg.len() {
                self.period_pos += 1;
                self.record_pos = 0;
                continue;
            }
            let rec = &seg[self.record_pos];
            self.record_pos += 1;
            let v = self.vocab_len as u32;
            let t32 = t as u32;
            let (tag_c, tag_x) = (self.config.tag_centers, self.config.tagged_contexts);
            let buffer = &mut self.buffer;
            for_each_window_pair(rec, &self.table, self.window, |w, c| {
                buffer.push(TrainingPair {
                    center: if tag_c { t32 * v + w } else { w },
                    context: if tag_x { t32 * v + c } else { c },
                    weight: rec.weight,
                });
            });
            if let Some(keep) = &self.keep {
                let rng = &mut self.rng;
                buffer.retain_mut(|pair| {
                    let p = keep[(pair.context % v) as usize];
                    if p >= 1.0 {
                        return true;
                    }
                    pair.weight = if pair.weight == 1 {
                        u64::from(rng.random::<f64>() < p)
                    } else {
                        Binomial::new(pair.weight, p).expect("valid binomial").sample(rng)
                    };
                    pair.weight > 0
                });
            }
        }
        true
    }
}

impl Iterator for PairStream<'_> {
    type Item = TrainingPair;

    fn next(&mut self) -> Option<TrainingPair> {
        if self.buffer_pos >= self.buffer.len() && !self.refill() {
            return None;
        }
        let pair = self.buffer[self.buffer_pos];
        self.buffer_pos += 1;
        Some(pair)
    }
}

/// Streams the window pairs of `periods` (all periods when empty) with
/// period-tagged centers and shared context indices.
///
/// Without subsampling the emitted multiset equals the union of
/// [`count_pairs`] over the periods. The order depends only on corpus
/// order and `config.seed`.
pub fn tagged_pair_stream<'a>(
    corpus: &'a PeriodizedCorpus,
    vocab: &Vocabulary,
    window: usize,
    periods: &[usize],
    config: StreamConfig,
) -> Result<PairStream<'a>> {
    if window < 1 {
        return Err(Error::InvalidArgument("window radius must be at least 1".into()));
    }
    let periods: Vec<usize> = if periods.is_empty() {
        (0..corpus.num_periods()).collect()
    } else {
        periods.to_vec()
    };
    if let Some(&bad) = periods.iter().find(|&&t| t >= corpus.num_periods()) {
        return Err(Error::InvalidArgument(format!("period index {bad} out of range")));
    }
    let keep = match config.subsample_threshold {
        Some(s) if s > 0.0 => {
            let total: u64 = vocab.counts().iter().sum();
            Some(
                vocab
                    .counts()
                    .iter()
                    .map(|&n| subsample_keep_probability(n as f64 / total as f64, s))
                    .collect(),
            )
        }
        _ => None,
    };
    Ok(PairStream {
        corpus,
        table: vocab.lookup_table(corpus.lexicon()),
        window,
        periods,
        vocab_len: vocab.len(),
        rng: ChaCha8Rng::seed_from_u64(config.seed),
        config,
        keep,
        period_pos: 0,
        record_pos: 0,
        buffer: Vec::new(),
        buffer_pos: 0,
    })
}
