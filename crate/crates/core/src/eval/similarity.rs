//! Word-similarity benchmarks against human judgments.

use std::io::BufRead;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::embedding::{cosine_rows, EmbeddingSet};
use crate::error::{Error, Result};
use crate::eval::report::EvalReport;
use crate::eval::stats::spearman;
use crate::scalar::Scalar;

/// Which period's vectors score a pair.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PeriodPolicy {
    Period(String),
    First,
    Last,
    /// Mean cosine over the periods where both words are observed.
    Average,
}

impl std::str::FromStr for PeriodPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "first" => PeriodPolicy::First,
            "last" => PeriodPolicy::Last,
            "average" => PeriodPolicy::Average,
            label => PeriodPolicy::Period(label.to_string()),
        })
    }
}

impl std::fmt::Display for PeriodPolicy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PeriodPolicy::Period(p) => write!(f, "{p}"),
            PeriodPolicy::First => f.write_str("first"),
            PeriodPolicy::Last => f.write_str("last"),
            PeriodPolicy::Average => f.write_str("average"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimilarityPair {
    pub first: String,
    pub second: String,
    pub score: f64,
}

/// `word1 word2 score` per line, tab or space separated (MEN layout).
/// Blank lines and lines starting with `#` are skipped.
pub fn read_similarity_pairs<R: BufRead>(input: R) -> Result<Vec<SimilarityPair>> {
    let mut out = Vec::new();
    for (n, line) in input.lines().enumerate() {
        let line = line.map_err(|e| Error::io("<similarity pairs>", e))?;
        let text = line.trim();
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = text.split_whitespace().collect();
        let [a, b, s] = fields[..] else {
            return Err(Error::Parse {
                line: n + 1,
                reason: format!("expected 3 fields, found {}", fields.len()),
            });
        };
        let score: f64 = s.parse().map_err(|_| Error::Parse {
            line: n + 1,
            reason: format!("score {s:?} is not a number"),
        })?;
        out.push(SimilarityPair {
            first: a.to_lowercase(),
            second: b.to_lowercase(),
            score,
        });
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimilarityResult {
    pub rho: f64,
    pub used: usize,
    pub total: usize,
    pub coverage: f64,
    /// `(pair, model cosine)` for every covered pair.
    pub scored: Vec<(SimilarityPair, f64)>,
}

fn pair_cosine<T: Scalar>(set: &EmbeddingSet<T>, a: usize, b: usize, periods: &[usize]) -> Option<f64> {
    let cs: Vec<f64> = periods
        .iter()
        .filter(|&&t| set.is_observed(a, t) && set.is_observed(b, t))
        .filter_map(|&t| cosine_rows(&set.vector(a, t), &set.vector(b, t)).ok())
        .map(Scalar::as_f64)
        .collect();
    (!cs.is_empty()).then(|| cs.iter().sum::<f64>() / cs.len() as f64)
}

/// Spearman between model cosines and human scores over covered pairs.
pub fn similarity_benchmark<T: Scalar>(
    set: &EmbeddingSet<T>,
    pairs: &[SimilarityPair],
    policy: &PeriodPolicy,
) -> Result<SimilarityResult> {
    let periods: Vec<usize> = match policy {
        PeriodPolicy::First => vec![0],
        PeriodPolicy::Last => vec![set.num_periods() - 1],
        PeriodPolicy::Average => (0..set.num_periods()).collect(),
        PeriodPolicy::Period(label) => vec![set
            .period_index(label)
            .ok_or_else(|| Error::Lookup(format!("unknown period {label:?}")))?],
    };
    let mut scored = Vec::new();
    for p in pairs {
        let (Some(a), Some(b)) = (set.word_index(&p.first), set.word_index(&p.second)) else {
            continue;
        };
        if let Some(c) = pair_cosine(set, a, b, &periods) {
            scored.push((p.clone(), c));
        }
    }
    if scored.is_empty() {
        return Err(Error::EmptyEvaluation(format!("none of {} pairs is covered", pairs.len())));
    }
    let model: Vec<f64> = scored.iter().map(|(_, c)| *c).collect();
    let human: Vec<f64> = scored.iter().map(|(p, _)| p.score).collect();
    let rho = spearman(&model, &human)?;
    Ok(SimilarityResult {
        rho,
        used: scored.len(),
        total: pairs.len(),
        coverage: scored.len() as f64 / pairs.len() as f64,
        scored,
    })
}

impl SimilarityResult {
    pub fn report(&self, policy: &PeriodPolicy) -> EvalReport {
        let mut r = EvalReport::new("similarity");
        r.param("period_policy", policy.to_string());
        r.columns = vec!["word1".into(), "word2".into(), "human".into(), "cosine".into()];
        for (p, c) in &self.scored {
            r.rows.push(vec![json!(p.first), json!(p.second), json!(p.score), json!(c)]);
        }
        r.aggregate("rho", self.rho);
        r.aggregate("pairs_used", self.used);
        r.aggregate("pairs_total", self.total);
        r.aggregate("coverage", self.coverage);
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::{Method, Rows, Space};

    fn set() -> EmbeddingSet<f64> {
        EmbeddingSet::new(
            Method::Svd,
            Space::Independent,
            vec!["a".into(), "b".into(), "c".into(), "d".into()],
            vec!["p0".into()],
            2,
            Rows::Dense(vec![1., 0., 1., 0.1, 1., 1., 0., 1.]),
        )
        .unwrap()
    }

    fn pair(a: &str, b: &str, s: f64) -> SimilarityPair {
        SimilarityPair {
            first: a.into(),
            second: b.into(),
            score: s,
        }
    }

    #[test]
    fn matching_order_gives_one() {
        let pairs = [pair("a", "b", 9.0), pair("a", "c", 5.0), pair("a", "d", 1.0)];
        let r = similarity_benchmark(&set(), &pairs, &PeriodPolicy::First).unwrap();
        assert!((r.rho - 1.0).abs() < 1e-12);
        assert_eq!(r.coverage, 1.0);
    }

    #[test]
    fn oov_pairs_reduce_coverage() {
        let pairs = [pair("a", "b", 9.0), pair("a", "zz", 5.0), pair("a", "d", 1.0), pair("c", "d", 3.0)];
        let r = similarity_benchmark(&set(), &pairs, &PeriodPolicy::Last).unwrap();
        assert_eq!((r.used, r.total), (3, 4));
        assert!((r.coverage - 0.75).abs() < 1e-15);
        let none = [pair("x", "y", 1.0)];
        assert!(matches!(
            similarity_benchmark(&set(), &none, &PeriodPolicy::First),
            Err(Error::EmptyEvaluation(_))
        ));
    }

    #[test]
    fn parses_men_lines() {
        let text = "sun sunlight 50.000000\nAutomobile\tcar\t49\n\n# note\n";
        let p = read_similarity_pairs(text.as_bytes()).unwrap();
        assert_eq!(p[1], pair("automobile", "car", 49.0));
        assert!(matches!(
            read_similarity_pairs("a b\n".as_bytes()),
            Err(Error::Parse { line: 1, .. })
        ));
    }
}
