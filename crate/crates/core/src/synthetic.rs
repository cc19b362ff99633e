//! Seeded synthetic n-gram corpora with known structure: topic clusters,
//! per-word companion contexts, planted meaning shifts, frequency trends
//! and gradual topic drift.
//!
//! A record is generated by drawing a middle word from a Zipf-like
//! unigram distribution and filling the other positions from that word's
//! context distribution in the record's period: its companions, its topic,
//! or background noise. Shifted and drifting words also change where they
//! show up as context tokens.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::Distribution;
use serde::{Deserialize, Serialize};

use crate::corpus::{NgramRecord, PeriodSpec, PeriodizedCorpus, TokenFilter};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub vocab_size: usize,
    pub topics: usize,
    pub periods: usize,
    pub start_year: i32,
    pub period_length: i32,
    /// Distinct records generated per period.
    pub records_per_period: usize,
    /// Match counts are drawn uniformly from `1..=max_weight`.
    pub max_weight: u64,
    pub ngram_len: usize,
    pub zipf_exponent: f64,
    pub companions: usize,
    /// Probability that a context token is one of the middle word's companions.
    pub companion_rate: f64,
    /// Probability that a context token is a uniform background word.
    pub noise_rate: f64,
    /// Words whose context distribution is replaced by another word's from
    /// `shift_period` on.
    pub shifted: usize,
    pub shift_period: Option<usize>,
    /// Words whose frequency is multiplied by `trend_growth^t` in period `t`.
    pub trending: usize,
    pub trend_growth: f64,
    /// Words whose topic moves linearly from one topic to another.
    pub drifting: usize,
    /// The most frequent ranks excluded when picking special words.
    pub special_skip: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            vocab_size: 2000,
            topics: 20,
            periods: 4,
            start_year: 1900,
            period_length: 10,
            records_per_period: 50_000,
            max_weight: 8,
            ngram_len: 5,
            zipf_exponent: 0.7,
            companions: 4,
            companion_rate: 0.3,
            noise_rate: 0.1,
            shifted: 5,
            shift_period: None,
            trending: 5,
            trend_growth: 1.5,
            drifting: 2,
            special_skip: 20,
            seed: 7,
        }
    }
}

impl SynthConfig {
    fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.to_string()));
        if self.topics < 2 || self.vocab_size < 4 * self.topics {
            return bad("need at least 2 topics and 4 words per topic");
        }
        if self.periods < 2 {
            return bad("need at least 2 periods");
        }
        if self.ngram_len < 2 || self.max_weight < 1 || self.records_per_period < 1 {
            return bad("ngram_len >= 2, max_weight >= 1 and records_per_period >= 1 required");
        }
        if !(0.0..=1.0).contains(&(self.companion_rate + self.noise_rate)) {
            return bad("companion_rate + noise_rate must lie in [0, 1]");
        }
        let special = 2 * self.shifted + self.trending + self.drifting;
        if self.special_skip + special > self.vocab_size {
            return bad("too many special words for the vocabulary");
        }
        if self.shift_period.is_some_and(|p| p == 0 || p >= self.periods) {
            return bad("shift_period must be in 1..periods");
        }
        Ok(())
    }
}

/// A planted shift: from `period` on, `word` is used like `donor`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PlantedShift {
    pub word: String,
    pub donor: String,
    pub period: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Drift {
    pub word: String,
    pub from_topic: usize,
    pub to_topic: usize,
}

/// The generated records together with the structure that produced them.
#[derive(Clone, Debug)]
pub struct SyntheticCorpus {
    pub config: SynthConfig,
    pub spec: PeriodSpec,
    pub words: Vec<String>,
    pub topic_of: Vec<usize>,
    pub records: Vec<NgramRecord>,
    pub shifts: Vec<PlantedShift>,
    pub trending: Vec<String>,
    pub drifts: Vec<Drift>,
    /// Words with a stable context distribution in every period.
    pub stable: Vec<String>,
}

/// Deterministic pronounceable name for word `i`.
pub fn synthetic_word(i: usize) -> String {
    const CONS: &[u8] = b"bdfgklmnprstvz";
    const VOWELS: &[u8] = b"aeiou";
    let syllables = CONS.len() * VOWELS.len();
    let mut n = i;
    let mut out = String::new();
    for k in 0..3 {
        if k == 2 && n == 0 {
            break;
        }
        let s = n % syllables;
        n /= syllables;
        out.push(CONS[s / VOWELS.len()] as char);
        out.push(VOWELS[s % VOWELS.len()] as char);
    }
    while n > 0 {
        let s = n % syllables;
        n /= syllables;
        out.push(CONS[s / VOWELS.len()] as char);
        out.push(VOWELS[s % VOWELS.len()] as char);
    }
    out
}

#[derive(Clone)]
struct Usage {
    topic_mix: Vec<(usize, f64)>,
    companions_of: usize,
}

pub fn generate(config: &SynthConfig) -> Result<SyntheticCorpus> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let v = config.vocab_size;
    let words: Vec<String> = (0..v).map(synthetic_word).collect();
    let topic_of: Vec<usize> = (0..v).map(|i| i % config.topics).collect();
    let by_topic: Vec<Vec<usize>> = (0..config.topics)
        .map(|z| (0..v).filter(|&i| topic_of[i] == z).collect())
        .collect();
    let companions: Vec<Vec<usize>> = (0..v)
        .map(|i| {
            let pool = &by_topic[topic_of[i]];
            let mut c = Vec::with_capacity(config.companions);
            while c.len() < config.companions.min(pool.len() - 1) {
                let w = pool[rng.random_range(0..pool.len())];
                if w != i && !c.contains(&w) {
                    c.push(w);
                }
            }
            c
        })
        .collect();

    // Special words come from a mid-frequency band, each a distinct word.
    let mut pool: Vec<usize> = (config.special_skip..v).collect();
    let band = pool.len().min(v / 2).max(2 * config.shifted + config.trending + config.drifting);
    pool.truncate(band);
    fn take(pool: &mut Vec<usize>, rng: &mut ChaCha8Rng) -> usize {
        pool.swap_remove(rng.random_range(0..pool.len()))
    }
    let shift_period = config.shift_period.unwrap_or(config.periods / 2);
    let mut shifts = Vec::new();
    let mut shifted_idx = Vec::new();
    for _ in 0..config.shifted {
        let w = take(&mut pool, &mut rng);
        let mut d = take(&mut pool, &mut rng);
        let mut guard = 0;
        while topic_of[d] == topic_of[w] && guard < 100 {
            pool.push(d);
            d = take(&mut pool, &mut rng);
            guard += 1;
        }
        shifted_idx.push((w, d));
        shifts.push(PlantedShift {
            word: words[w].clone(),
            donor: words[d].clone(),
            period: shift_period,
        });
    }
    let trending_idx: Vec<usize> = (0..config.trending).map(|_| take(&mut pool, &mut rng)).collect();
    let mut drifts_idx = Vec::new();
    for _ in 0..config.drifting {
        let w = take(&mut pool, &mut rng);
        let to = (topic_of[w] + config.topics / 2) % config.topics;
        drifts_idx.push((w, topic_of[w], to));
    }

    let special: Vec<usize> = shifted_idx
        .iter()
        .flat_map(|&(w, d)| [w, d])
        .chain(trending_idx.iter().copied())
        .chain(drifts_idx.iter().map(|d| d.0))
        .collect();
    let stable: Vec<String> = (0..v).filter(|i| !special.contains(i)).map(|i| words[i].clone()).collect();

    let spec = PeriodSpec::new(
        config.start_year,
        config.start_year + config.period_length * config.periods as i32,
        config.period_length,
    )?;
    let base: Vec<f64> = (0..v).map(|r| 1.0 / ((r + 1) as f64).powf(config.zipf_exponent)).collect();
    let mut records = Vec::with_capacity(config.records_per_period * config.periods);
    let denom = (config.periods - 1).max(1) as f64;

    for t in 0..config.periods {
        let mut unigram = base.clone();
        for &w in &trending_idx {
            unigram[w] *= config.trend_growth.powi(t as i32);
        }
        let middle = WeightedAliasIndex::new(unigram).map_err(|e| Error::InvalidArgument(e.to_string()))?;
        let mut usage: Vec<Usage> = (0..v)
            .map(|i| Usage {
                topic_mix: vec![(topic_of[i], 1.0)],
                companions_of: i,
            })
            .collect();
        for &(w, d) in &shifted_idx {
            if t >= shift_period {
                usage[w] = usage[d].clone();
            }
        }
        for &(w, from, to) in &drifts_idx {
            let x = t as f64 / denom;
            usage[w].topic_mix = vec![(from, 1.0 - x), (to, x)];
        }
        // Context occurrences follow the same changes: a word leaving a
        // neighborhood is replaced there by a topic mate, and a word joining
        // one stands in for some of its new neighbors.
        let mut leave = vec![0.0f64; v];
        let mut join: Vec<Vec<(usize, f64)>> = vec![Vec::new(); v];
        if t >= shift_period {
            for &(w, d) in &shifted_idx {
                leave[w] = 1.0;
                join[d].push((w, 0.5));
            }
        }
        for &(w, _, to) in &drifts_idx {
            let x = t as f64 / denom;
            leave[w] = x;
            let mates = &by_topic[to];
            for &u in mates {
                join[u].push((w, x / mates.len() as f64));
            }
        }
        for _ in 0..config.records_per_period {
            let center = middle.sample(&mut rng);
            let u = &usage[center];
            let mid = config.ngram_len / 2;
            let tokens: Vec<String> = (0..config.ngram_len)
                .map(|p| {
                    if p == mid {
                        return words[center].clone();
                    }
                    let r: f64 = rng.random();
                    let comp = &companions[u.companions_of];
                    let w = if r < config.noise_rate {
                        rng.random_range(0..v)
                    } else if r < config.noise_rate + config.companion_rate && !comp.is_empty() {
                        comp[rng.random_range(0..comp.len())]
                    } else {
                        let mut x: f64 = rng.random();
                        let mut z = u.topic_mix[0].0;
                        for &(topic, share) in &u.topic_mix {
                            if x < share {
                                z = topic;
                                break;
                            }
                            x -= share;
                        }
                        let ws = &by_topic[z];
                        ws[rng.random_range(0..ws.len())]
                    };
                    let mut w = w;
                    if leave[w] > 0.0 && rng.random::<f64>() < leave[w] {
                        let mates = &by_topic[topic_of[w]];
                        let u = mates[rng.random_range(0..mates.len())];
                        if u != w {
                            w = u;
                        }
                    } else if let Some(&(x, _)) = join[w].iter().find(|&&(_, q)| rng.random::<f64>() < q) {
                        w = x;
                    }
                    words[w].clone()
                })
                .collect();
            let year = config.start_year + config.period_length * t as i32 + rng.random_range(0..config.period_length);
            records.push(NgramRecord {
                tokens,
                year,
                match_count: rng.random_range(1..=config.max_weight),
            });
        }
    }

    Ok(SyntheticCorpus {
        config: config.clone(),
        spec,
        trending: trending_idx.iter().map(|&i| words[i].clone()).collect(),
        drifts: drifts_idx
            .iter()
            .map(|&(w, from, to)| Drift {
                word: words[w].clone(),
                from_topic: from,
                to_topic: to,
            })
            .collect(),
        words,
        topic_of,
        records,
        shifts,
        stable,
    })
}

impl SyntheticCorpus {
    pub fn corpus(&self) -> PeriodizedCorpus {
        PeriodizedCorpus::from_records(&self.spec, self.records.iter().cloned(), &TokenFilter::default())
    }

    pub fn total_weight(&self) -> u64 {
        self.records.iter().map(|r| r.match_count).sum()
    }

    pub fn index_of(&self, word: &str) -> Option<usize> {
        self.words.iter().position(|w| w == word)
    }

    /// Graded similarity judgments: about 0.6 for topic mates and 0.1 for
    /// unrelated words. Only stable words from the frequent half are used, and
    /// half of the pairs are topic mates so both grades are well represented.
    pub fn gold_pairs(&self, count: usize, seed: u64) -> Vec<(String, String, f64)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let stable: Vec<usize> = self
            .stable
            .iter()
            .filter_map(|w| self.index_of(w))
            .filter(|&i| i < self.words.len() / 2)
            .collect();
        let pairs = |same: bool| {
            stable
                .iter()
                .any(|&a| stable.iter().any(|&b| a != b && (self.topic_of[a] == self.topic_of[b]) == same))
        };
        let balance = pairs(true) && pairs(false);
        let mut out = Vec::with_capacity(count);
        while out.len() < count && stable.len() > 1 {
            let a = stable[rng.random_range(0..stable.len())];
            let b = stable[rng.random_range(0..stable.len())];
            let same = self.topic_of[a] == self.topic_of[b];
            if a == b || (balance && same != (out.len() % 2 == 0)) {
                continue;
            }
            let score = if same { 0.6 } else { 0.1 };
            out.push((self.words[a].clone(), self.words[b].clone(), score + rng.random_range(-0.05..0.05)));
        }
        out
    }

    /// Writes `ngram TAB year TAB match_count TAB 1` lines.
    pub fn write_ngrams<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for r in &self.records {
            writeln!(out, "{}\t{}\t{}\t1", r.tokens.join(" "), r.year, r.match_count)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SynthConfig {
        SynthConfig {
            vocab_size: 200,
            topics: 5,
            records_per_period: 2000,
            ..SynthConfig::default()
        }
    }

    #[test]
    fn names_are_unique_and_alphabetic() {
        let names: std::collections::HashSet<String> = (0..20_000).map(synthetic_word).collect();
        assert_eq!(names.len(), 20_000);
        assert!(names.iter().all(|w| w.chars().all(|c| c.is_ascii_lowercase())));
    }

    #[test]
    fn deterministic_and_well_formed() {
        let a = generate(&small()).unwrap();
        let b = generate(&small()).unwrap();
        assert_eq!(a.records, b.records);
        assert_eq!(a.records.len(), 2000 * 4);
        assert!(a.records.iter().all(|r| r.tokens.len() == 5));
        assert_eq!(a.shifts.len(), 5);
        let c = a.corpus();
        assert_eq!(c.num_periods(), 4);
        assert!(c.segments().all(|(_, s)| s.len() == 2000));
    }

    #[test]
    fn shifted_words_take_the_donor_topic() {
        let s = generate(&small()).unwrap();
        for shift in &s.shifts {
            let (w, d) = (s.index_of(&shift.word).unwrap(), s.index_of(&shift.donor).unwrap());
            assert_ne!(s.topic_of[w], s.topic_of[d]);
        }
    }

    #[test]
    fn rejects_bad_configs() {
        let mut c = small();
        c.periods = 1;
        assert!(generate(&c).is_err());
        let mut c = small();
        c.noise_rate = 0.9;
        assert!(generate(&c).is_err());
    }
}
