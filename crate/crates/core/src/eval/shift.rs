//! Semantic displacement rankings and the known-shift benchmark.

use std::collections::HashSet;
use std::io::BufRead;

use serde::Serialize;
use serde_json::json;

use crate::embedding::{cosine_rows, EmbeddingSet};
use crate::error::{Error, Result};
use crate::eval::report::EvalReport;
use crate::eval::stats::{mean, spearman};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Displacement {
    pub word: String,
    /// `1 - cosine(w@t0, w@t1)`.
    pub displacement: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DisplacementRanking {
    pub from: String,
    pub to: String,
    /// Descending displacement, ties by word.
    pub ranked: Vec<Displacement>,
    /// Words considered before truncation to `top_k`.
    pub ranked_total: usize,
    /// Words skipped because they were unobserved in either period or had
    /// a zero vector.
    pub excluded: usize,
}

impl DisplacementRanking {
    pub fn report(&self) -> EvalReport {
        let mut r = EvalReport::new("displacement");
        r.param("from", &self.from);
        r.param("to", &self.to);
        r.param("top_k", self.ranked.len());
        r.columns = vec!["rank".into(), "word".into(), "displacement".into()];
        for (i, d) in self.ranked.iter().enumerate() {
            r.rows.push(vec![json!(i + 1), json!(d.word), json!(d.displacement)]);
        }
        r.aggregate("ranked_total", self.ranked_total);
        r.aggregate("excluded", self.excluded);
        r
    }
}

fn sort_desc(v: &mut [Displacement]) {
    v.sort_by(|a, b| b.displacement.total_cmp(&a.displacement).then_with(|| a.word.cmp(&b.word)));
}

fn displacement_of<T: Scalar>(set: &EmbeddingSet<T>, word: usize, t0: usize, t1: usize) -> Option<f64> {
    if !set.is_observed(word, t0) || !set.is_observed(word, t1) {
        return None;
    }
    cosine_rows(&set.vector(word, t0), &set.vector(word, t1))
        .ok()
        .map(|c| 1.0 - c.as_f64())
}

fn check_periods<T: Scalar>(set: &EmbeddingSet<T>, t0: usize, t1: usize) -> Result<()> {
    let n = set.num_periods();
    if t0 >= n || t1 >= n {
        return Err(Error::InvalidArgument(format!("periods {t0} and {t1} must be below {n}")));
    }
    set.check_comparable(t0, t1)
}

/// The `top_k` words that moved most between periods `t0` and `t1`.
pub fn semantic_displacement<T: Scalar>(
    set: &EmbeddingSet<T>,
    t0: usize,
    t1: usize,
    top_k: usize,
) -> Result<DisplacementRanking> {
    check_periods(set, t0, t1)?;
    let mut ranked = Vec::with_capacity(set.num_words());
    let mut excluded = 0;
    for (i, w) in set.words().iter().enumerate() {
        match displacement_of(set, i, t0, t1) {
            Some(d) => ranked.push(Displacement {
                word: w.clone(),
                displacement: d,
            }),
            None => excluded += 1,
        }
    }
    sort_desc(&mut ranked);
    let ranked_total = ranked.len();
    ranked.truncate(top_k);
    Ok(DisplacementRanking {
        from: set.periods()[t0].clone(),
        to: set.periods()[t1].clone(),
        ranked,
        ranked_total,
        excluded,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ShiftBenchmark {
    /// Spearman between displacement and the 0/1 shifted label.
    pub rank_correlation: f64,
    /// Mean displacement of shifted words minus that of controls.
    pub mean_gap: f64,
    pub precision_at_10: f64,
    pub precision_at_50: f64,
    /// Labeled words in descending displacement order with their label.
    pub ranked: Vec<(Displacement, bool)>,
    pub dropped: Vec<String>,
}

/// Hits among the `k` highest ranked over `min(k, shifted)`.
fn precision_at(ranked: &[(Displacement, bool)], k: usize) -> f64 {
    let shifted = ranked.iter().filter(|(_, s)| *s).count();
    let hits = ranked.iter().take(k).filter(|(_, s)| *s).count();
    hits as f64 / k.min(shifted).max(1) as f64
}

/// Scores known shifted words against controls.
///
/// Only labeled words are ranked. Labeled words missing from the
/// embeddings, unobserved in either period or with a zero vector are
/// dropped and listed.
pub fn known_shift_benchmark<T: Scalar>(
    set: &EmbeddingSet<T>,
    t0: usize,
    t1: usize,
    shifted: &[String],
    control: &[String],
) -> Result<ShiftBenchmark> {
    check_periods(set, t0, t1)?;
    let s: HashSet<&str> = shifted.iter().map(String::as_str).collect();
    if let Some(w) = control.iter().find(|w| s.contains(w.as_str())) {
        return Err(Error::InvalidArgument(format!("{w:?} is both shifted and control")));
    }
    let mut ranked = Vec::new();
    let mut dropped = Vec::new();
    let mut seen = HashSet::new();
    for (w, label) in shifted.iter().map(|w| (w, true)).chain(control.iter().map(|w| (w, false))) {
        if !seen.insert(w.as_str()) {
            continue;
        }
        match set.word_index(w).and_then(|i| displacement_of(set, i, t0, t1)) {
            Some(d) => ranked.push((
                Displacement {
                    word: w.clone(),
                    displacement: d,
                },
                label,
            )),
            None => dropped.push(w.clone()),
        }
    }
    let n_shift = ranked.iter().filter(|(_, l)| *l).count();
    if n_shift == 0 || n_shift == ranked.len() {
        return Err(Error::EmptyEvaluation(format!(
            "{} shifted and {} control words remain after filtering",
            n_shift,
            ranked.len() - n_shift
        )));
    }
    ranked.sort_by(|a, b| {
        b.0.displacement
            .total_cmp(&a.0.displacement)
            .then_with(|| a.0.word.cmp(&b.0.word))
    });
    let disp: Vec<f64> = ranked.iter().map(|(d, _)| d.displacement).collect();
    let labels: Vec<f64> = ranked.iter().map(|(_, l)| f64::from(u8::from(*l))).collect();
    let rank_correlation = spearman(&disp, &labels)?;
    let pick = |want: bool| -> Vec<f64> {
        ranked
            .iter()
            .filter(|(_, l)| *l == want)
            .map(|(d, _)| d.displacement)
            .collect()
    };
    Ok(ShiftBenchmark {
        rank_correlation,
        mean_gap: mean(&pick(true)) - mean(&pick(false)),
        precision_at_10: precision_at(&ranked, 10),
        precision_at_50: precision_at(&ranked, 50),
        ranked,
        dropped,
    })
}

impl ShiftBenchmark {
    pub fn report(&self, from: &str, to: &str) -> EvalReport {
        let mut r = EvalReport::new("shifts");
        r.param("from", from);
        r.param("to", to);
        r.columns = vec!["rank".into(), "word".into(), "label".into(), "displacement".into()];
        for (i, (d, l)) in self.ranked.iter().enumerate() {
            r.rows.push(vec![
                json!(i + 1),
                json!(d.word),
                json!(if *l { "shifted" } else { "control" }),
                json!(d.displacement),
            ]);
        }
        r.aggregate("rank_correlation", self.rank_correlation);
        r.aggregate("mean_gap", self.mean_gap);
        r.aggregate("precision_at_10", self.precision_at_10);
        r.aggregate("precision_at_50", self.precision_at_50);
        r.notes.push("precision@k counts shifted words among the k most displaced labeled words, over min(k, shifted)".into());
        if !self.dropped.is_empty() {
            r.notes.push(format!("dropped (missing or unobserved): {}", self.dropped.join(", ")));
        }
        r
    }
}

/// One word per line; `#` starts a comment.
pub fn read_word_list<R: BufRead>(input: R) -> Result<Vec<String>> {
    let mut out = Vec::new();
    for line in input.lines() {
        let line = line.map_err(|e| Error::io("<word list>", e))?;
        let text = line.split('#').next().unwrap_or("").trim();
        if !text.is_empty() {
            out.push(text.to_string());
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::{Method, Rows, Space};

    fn set(rows: Vec<f64>, space: Space) -> EmbeddingSet<f64> {
        EmbeddingSet::new(
            Method::Tsgns,
            space,
            vec!["a".into(), "b".into(), "c".into()],
            vec!["p0".into(), "p1".into()],
            2,
            Rows::Dense(rows),
        )
        .unwrap()
    }

    fn sample() -> EmbeddingSet<f64> {
        // a: unchanged, b: rotated 90 degrees, c: rotated 45 degrees.
        let h = 0.5f64.sqrt();
        set(vec![1., 0., 1., 0., 1., 0., 1., 0., 0., 1., h, h], Space::Shared)
    }

    #[test]
    fn ranks_by_displacement() {
        let r = semantic_displacement(&sample(), 0, 1, 10).unwrap();
        let words: Vec<&str> = r.ranked.iter().map(|d| d.word.as_str()).collect();
        assert_eq!(words, ["b", "c", "a"]);
        assert!((r.ranked[0].displacement - 1.0).abs() < 1e-15);
        assert!(r.ranked[2].displacement.abs() < 1e-15);
        assert_eq!(r.ranked_total, 3);
    }

    #[test]
    fn ties_break_by_word_and_top_k_clamps() {
        let s = set(vec![1., 0., 1., 0., 1., 0., 0., 1., 0., 1., 0., 1.], Space::Shared);
        let r = semantic_displacement(&s, 0, 1, 2).unwrap();
        let words: Vec<&str> = r.ranked.iter().map(|d| d.word.as_str()).collect();
        assert_eq!(words, ["a", "b"]);
    }

    #[test]
    fn unobserved_words_are_excluded_and_counted() {
        let mut s = sample();
        let mut flags = vec![true; 6];
        flags[s.key_row(1, 1)] = false;
        s.set_observed(flags).unwrap();
        let r = semantic_displacement(&s, 0, 1, 10).unwrap();
        assert_eq!(r.excluded, 1);
        assert!(r.ranked.iter().all(|d| d.word != "b"));
    }

    #[test]
    fn independent_spaces_are_refused() {
        let s = set(vec![1.; 12], Space::Independent);
        assert!(matches!(semantic_displacement(&s, 0, 1, 3), Err(Error::Unaligned { .. })));
    }

    #[test]
    fn benchmark_statistics() {
        let b = known_shift_benchmark(&sample(), 0, 1, &["b".into()], &["a".into(), "c".into()]).unwrap();
        assert_eq!(b.precision_at_10, 1.0);
        assert!(b.mean_gap > 0.0);
        // Swapping labels negates the correlation.
        let swapped = known_shift_benchmark(&sample(), 0, 1, &["a".into(), "c".into()], &["b".into()]).unwrap();
        assert!((b.rank_correlation + swapped.rank_correlation).abs() < 1e-12);
    }

    #[test]
    fn benchmark_errors() {
        let s = sample();
        assert!(matches!(
            known_shift_benchmark(&s, 0, 1, &["zz".into()], &["a".into()]),
            Err(Error::EmptyEvaluation(_))
        ));
        assert!(known_shift_benchmark(&s, 0, 1, &["a".into()], &["a".into()]).is_err());
        let flat = set(vec![1., 0., 1., 0., 1., 0., 1., 0., 1., 0., 1., 0.], Space::Shared);
        assert!(matches!(
            known_shift_benchmark(&flat, 0, 1, &["a".into()], &["b".into(), "c".into()]),
            Err(Error::UndefinedCorrelation(_))
        ));
    }

    #[test]
    fn word_list_comments() {
        let text = "# archaic\ngay\n\n  awful # changed\n";
        assert_eq!(read_word_list(text.as_bytes()).unwrap(), ["gay", "awful"]);
    }
}
