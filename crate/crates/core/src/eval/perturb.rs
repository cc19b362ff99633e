//! Controlled context-overlap perturbation between two periods.
//!
//! For every probe word the records whose middle token is the probe are
//! removed from the later period and replaced by copies of the earlier
//! period's records. A fraction `alpha` of the copied weight then gets its
//! context tokens replaced by uniformly drawn vocabulary words, so the
//! probe's contexts overlap by `1 - alpha` across the two periods.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{PeriodizedCorpus, Record, TokenId, Vocabulary};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerturbationSpec {
    pub probe_words: Vec<String>,
    pub t: usize,
    pub t_plus_1: usize,
    /// Fraction of copied weight whose contexts are replaced.
    pub alpha: f64,
    pub seed: u64,
    /// Replace each context token independently with this probability
    /// instead of replacing all of them.
    #[serde(default)]
    pub per_token_rate: Option<f64>,
}

impl PerturbationSpec {
    /// Context overlap in percent, `(1 - alpha) * 100`.
    pub fn overlap_percent(&self) -> f64 {
        ((1.0 - self.alpha) * 100.0 * 1e9).round() / 1e9
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ProbeStats {
    pub word: String,
    pub removed_weight: u64,
    pub copied_weight: u64,
    pub replaced_weight: u64,
}

/// The middle token of an odd-length record.
pub fn middle_token(record: &Record) -> Option<TokenId> {
    let n = record.tokens.len();
    (n % 2 == 1).then(|| record.tokens[n / 2])
}

/// Returns the perturbed corpus and per-probe weight accounting.
///
/// The replaced weight units are a prefix of one seeded shuffle and draw
/// their replacement words from per-unit generators, so for a fixed seed
/// the perturbation at a larger `alpha` contains the one at a smaller `alpha`.
pub fn perturb_overlap(
    corpus: &PeriodizedCorpus,
    vocab: &Vocabulary,
    spec: &PerturbationSpec,
) -> Result<(PeriodizedCorpus, Vec<ProbeStats>)> {
    if !(0.0..=1.0).contains(&spec.alpha) {
        return Err(Error::InvalidArgument(format!("alpha {} outside [0, 1]", spec.alpha)));
    }
    if let Some(r) = spec.per_token_rate {
        if !(0.0..=1.0).contains(&r) {
            return Err(Error::InvalidArgument(format!("per_token_rate {r} outside [0, 1]")));
        }
    }
    let n = corpus.num_periods();
    if spec.t >= n || spec.t_plus_1 >= n || spec.t == spec.t_plus_1 {
        return Err(Error::InvalidArgument(format!(
            "periods {} and {} must be distinct and below {n}",
            spec.t, spec.t_plus_1
        )));
    }
    if vocab.is_empty() {
        return Err(Error::InvalidArgument("empty vocabulary".into()));
    }

    let mut out = corpus.clone();
    let probe_ids: Vec<Option<TokenId>> = spec.probe_words.iter().map(|w| corpus.lexicon().id(w)).collect();
    let missing: Vec<String> = spec
        .probe_words
        .iter()
        .zip(&probe_ids)
        .filter(|(_, id)| {
            id.is_none_or(|id| !corpus.segment(spec.t).iter().any(|r| middle_token(r) == Some(id)))
        })
        .map(|(w, _)| w.clone())
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingProbeWords {
            period: corpus.label(spec.t).to_string(),
            words: missing,
        });
    }
    let vocab_ids: Vec<TokenId> = vocab.words().iter().map(|w| out.intern(w)).collect();

    let mut stats = Vec::with_capacity(spec.probe_words.len());
    for (p, (word, id)) in spec.probe_words.iter().zip(&probe_ids).enumerate() {
        let id = id.expect("checked above");
        let target = out.segment_mut(spec.t_plus_1);
        let before: u64 = target.iter().map(|r| r.weight).sum();
        target.retain(|r| middle_token(r) != Some(id));
        let removed_weight = before - target.iter().map(|r| r.weight).sum::<u64>();

        let source: Vec<Record> = corpus
            .segment(spec.t)
            .iter()
            .filter(|r| middle_token(r) == Some(id))
            .cloned()
            .collect();
        let copied_weight: u64 = source.iter().map(|r| r.weight).sum();

        // One entry per weight unit, shuffled once per probe.
        let mut units: Vec<(u32, u64)> = source
            .iter()
            .enumerate()
            .flat_map(|(i, r)| (0..r.weight).map(move |k| (i as u32, k)))
            .collect();
        let probe_seed = spec.seed ^ (p as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
        units.shuffle(&mut ChaCha8Rng::seed_from_u64(probe_seed));
        let replace = ((spec.alpha * copied_weight as f64).round() as u64).min(copied_weight) as usize;

        let mut kept = source.iter().map(|r| r.weight).collect::<Vec<u64>>();
        let mut fresh = Vec::with_capacity(replace);
        for (u, &(i, k)) in units[..replace].iter().enumerate() {
            kept[i as usize] -= 1;
            let rec = &source[i as usize];
            let mut rng = ChaCha8Rng::seed_from_u64(probe_seed.wrapping_add(1 + u as u64) ^ (u64::from(i) << 40) ^ k);
            let mid = rec.tokens.len() / 2;
            let tokens = rec
                .tokens
                .iter()
                .enumerate()
                .map(|(pos, &tok)| {
                    let swap = pos != mid && spec.per_token_rate.is_none_or(|r| rng.random::<f64>() < r);
                    if swap {
                        vocab_ids[rng.random_range(0..vocab_ids.len())]
                    } else {
                        tok
                    }
                })
                .collect();
            fresh.push(Record {
                tokens,
                year: rec.year,
                weight: 1,
            });
        }
        let target = out.segment_mut(spec.t_plus_1);
        for (rec, &w) in source.iter().zip(&kept) {
            if w > 0 {
                target.push(Record {
                    weight: w,
                    ..rec.clone()
                });
            }
        }
        target.extend(fresh);
        stats.push(ProbeStats {
            word: word.clone(),
            removed_weight,
            copied_weight,
            replaced_weight: replace as u64,
        });
    }
    Ok((out, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{build_vocabulary, NgramRecord, PeriodSpec, TokenFilter};

    fn corpus() -> PeriodizedCorpus {
        let spec = PeriodSpec::new(2000, 2002, 1).unwrap();
        let recs = [
            ("a b x c d", 2000, 6),
            ("e f x g h", 2000, 4),
            ("a c e g b", 2000, 2),
            ("h g x f e", 2001, 3),
            ("b d f h a", 2001, 5),
        ];
        PeriodizedCorpus::from_records(
            &spec,
            recs.iter().map(|&(t, y, n)| NgramRecord {
                tokens: t.split_whitespace().map(str::to_string).collect(),
                year: y,
                match_count: n,
            }),
            &TokenFilter::default(),
        )
    }

    fn spec(alpha: f64) -> PerturbationSpec {
        PerturbationSpec {
            probe_words: vec!["x".into()],
            t: 0,
            t_plus_1: 1,
            alpha,
            seed: 3,
            per_token_rate: None,
        }
    }

    fn probe_records(c: &PeriodizedCorpus, t: usize) -> Vec<(Vec<TokenId>, u64)> {
        let x = c.lexicon().id("x").unwrap();
        let mut v: Vec<_> = c
            .segment(t)
            .iter()
            .filter(|r| middle_token(r) == Some(x))
            .map(|r| (r.tokens.clone(), r.weight))
            .collect();
        v.sort();
        v
    }

    #[test]
    fn zero_alpha_copies_exactly() {
        let c = corpus();
        let v = build_vocabulary(&c, 1, None).unwrap();
        let (p, stats) = perturb_overlap(&c, &v, &spec(0.0)).unwrap();
        assert_eq!(probe_records(&p, 0), probe_records(&p, 1));
        assert_eq!(stats[0].removed_weight, 3);
        assert_eq!(stats[0].copied_weight, 10);
        // Non-probe records untouched.
        assert!(p.segment(1).iter().any(|r| r.weight == 5));
        assert_eq!(p.segment(0), c.segment(0));
    }

    #[test]
    fn full_alpha_replaces_every_unit() {
        let c = corpus();
        let v = build_vocabulary(&c, 1, None).unwrap();
        let (p, stats) = perturb_overlap(&c, &v, &spec(1.0)).unwrap();
        assert_eq!(stats[0].replaced_weight, 10);
        let copied = probe_records(&p, 1);
        assert!(copied.iter().all(|(_, w)| *w == 1));
        assert_eq!(copied.len(), 10);
    }

    #[test]
    fn missing_probe_is_named() {
        let c = corpus();
        let v = build_vocabulary(&c, 1, None).unwrap();
        let mut s = spec(0.2);
        s.probe_words = vec!["x".into(), "a".into(), "zzz".into()];
        match perturb_overlap(&c, &v, &s) {
            Err(Error::MissingProbeWords { words, .. }) => assert_eq!(words, ["a", "zzz"]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn larger_alpha_contains_smaller() {
        let c = corpus();
        let v = build_vocabulary(&c, 1, None).unwrap();
        let (a, _) = perturb_overlap(&c, &v, &spec(0.3)).unwrap();
        let (b, _) = perturb_overlap(&c, &v, &spec(0.6)).unwrap();
        let fresh = |p: &PeriodizedCorpus| -> Vec<Vec<TokenId>> {
            let x = p.lexicon().id("x").unwrap();
            let orig: Vec<_> = c.segment(0).iter().map(|r| r.tokens.clone()).collect();
            p.segment(1)
                .iter()
                .filter(|r| middle_token(r) == Some(x) && !orig.contains(&r.tokens))
                .map(|r| r.tokens.clone())
                .collect()
        };
        let (fa, fb) = (fresh(&a), fresh(&b));
        assert_eq!(fa.len(), 3);
        assert!(fa.iter().all(|t| fb.contains(t)));
    }
}
