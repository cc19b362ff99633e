//! Nearest (word, period) keys across time and 2-D trajectories.

use nalgebra::DMatrix;
use serde::Serialize;
use serde_json::json;

use crate::embedding::{cosine_rows, EmbeddingSet};
use crate::error::{Error, Result};
use crate::eval::report::{EvalReport, Series};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Neighbor {
    pub word: String,
    pub period: String,
    pub cosine: f64,
}

fn resolve<T: Scalar>(set: &EmbeddingSet<T>, word: &str, period: usize) -> Result<usize> {
    let i = set
        .word_index(word)
        .ok_or_else(|| Error::Lookup(format!("unknown word {word:?}")))?;
    if period >= set.num_periods() {
        return Err(Error::Lookup(format!("period {period} out of range")));
    }
    Ok(i)
}

/// The `k` keys closest to `word@period` among `targets` (all periods when
/// empty). The query key and unobserved keys are never returned.
pub fn temporal_neighbors<T: Scalar>(
    set: &EmbeddingSet<T>,
    word: &str,
    period: usize,
    k: usize,
    targets: &[usize],
) -> Result<Vec<Neighbor>> {
    let q = resolve(set, word, period)?;
    let all: Vec<usize> = (0..set.num_periods()).collect();
    let targets = if targets.is_empty() { &all[..] } else { targets };
    for &t in targets {
        if t >= set.num_periods() {
            return Err(Error::Lookup(format!("period {t} out of range")));
        }
        set.check_comparable(period, t)?;
    }
    if k == 0 {
        return Ok(Vec::new());
    }
    let query = set.vector(q, period);
    if query.norm() == T::zero() {
        return Err(Error::ZeroVector);
    }
    let mut found: Vec<(f64, usize, usize)> = Vec::new();
    for &t in targets {
        for i in 0..set.num_words() {
            if (i == q && t == period) || !set.is_observed(i, t) {
                continue;
            }
            if let Ok(c) = cosine_rows(&query, &set.vector(i, t)) {
                found.push((c.as_f64(), i, t));
            }
        }
    }
    let words = set.words();
    found.sort_by(|a, b| {
        b.0.total_cmp(&a.0)
            .then_with(|| words[a.1].cmp(&words[b.1]))
            .then_with(|| a.2.cmp(&b.2))
    });
    found.dedup_by(|a, b| a.1 == b.1 && a.2 == b.2);
    Ok(found
        .into_iter()
        .take(k)
        .map(|(c, i, t)| Neighbor {
            word: words[i].clone(),
            period: set.periods()[t].clone(),
            cosine: c,
        })
        .collect())
}

pub fn neighbors_report(query: &str, period: &str, neighbors: &[Neighbor]) -> EvalReport {
    let mut r = EvalReport::new("neighbors");
    r.param("word", query);
    r.param("period", period);
    r.param("k", neighbors.len());
    r.columns = vec!["rank".into(), "word".into(), "period".into(), "cosine".into()];
    for (i, n) in neighbors.iter().enumerate() {
        r.rows.push(vec![json!(i + 1), json!(n.word), json!(n.period), json!(n.cosine)]);
    }
    r
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrajectoryPoint {
    pub word: String,
    pub period: String,
    pub x: f64,
    pub y: f64,
    /// The point is the tracked word itself rather than a neighbor.
    pub is_query: bool,
}

/// Projects `vectors` (one per row) onto their two leading principal axes.
///
/// Each score column is flipped so its largest-magnitude entry is positive.
/// With fewer than two nonzero components the missing coordinate is zero.
pub fn pca_2d<T: Scalar>(vectors: &DMatrix<T>) -> Result<Vec<(f64, f64)>> {
    let (n, d) = vectors.shape();
    if n < 2 {
        return Err(Error::InvalidArgument(format!("projection needs at least 2 vectors, got {n}")));
    }
    let x = DMatrix::<f64>::from_fn(n, d, |i, j| vectors[(i, j)].as_f64());
    let mean = x.row_mean();
    let centered = DMatrix::from_fn(n, d, |i, j| x[(i, j)] - mean[j]);
    let svd = centered.svd(true, true);
    let u = svd.u.expect("requested u");
    let s = &svd.singular_values;
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&a, &b| s[b].total_cmp(&s[a]));
    let mut cols = [vec![0.0; n], vec![0.0; n]];
    for (c, &j) in order.iter().take(2).enumerate() {
        if s[j] <= 0.0 {
            continue;
        }
        let score: Vec<f64> = (0..n).map(|i| u[(i, j)] * s[j]).collect();
        let big = score.iter().copied().fold(0.0f64, |a, b| if b.abs() > a.abs() { b } else { a });
        let sign = if big < 0.0 { -1.0 } else { 1.0 };
        cols[c] = score.into_iter().map(|v| v * sign).collect();
    }
    Ok((0..n).map(|i| (cols[0][i], cols[1][i])).collect())
}

/// The word at every period in `periods` plus its `k` nearest neighbors
/// within that period, projected to 2-D together.
pub fn trajectory_export<T: Scalar>(
    set: &EmbeddingSet<T>,
    word: &str,
    periods: &[usize],
    k: usize,
) -> Result<Vec<TrajectoryPoint>> {
    let q = resolve(set, word, 0)?;
    let mut keys: Vec<(usize, usize, bool)> = Vec::new();
    for &t in periods {
        if t >= set.num_periods() {
            return Err(Error::Lookup(format!("period {t} out of range")));
        }
        keys.push((q, t, true));
        for n in temporal_neighbors(set, word, t, k, &[t])? {
            let i = set.word_index(&n.word).expect("neighbor comes from the set");
            keys.push((i, t, false));
        }
    }
    for w in periods.windows(2) {
        set.check_comparable(w[0], w[1])?;
    }
    if keys.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "trajectory of {word:?} gathered {} vector(s); at least 2 are needed",
            keys.len()
        )));
    }
    let dim = set.dim();
    let mut m = DMatrix::<T>::zeros(keys.len(), dim);
    for (r, &(i, t, _)) in keys.iter().enumerate() {
        let v = set.vector(i, t).to_dense(dim);
        for (j, x) in v.into_iter().enumerate() {
            m[(r, j)] = x;
        }
    }
    let xy = pca_2d(&m)?;
    Ok(keys
        .iter()
        .zip(xy)
        .map(|(&(i, t, is_query), (x, y))| TrajectoryPoint {
            word: set.words()[i].clone(),
            period: set.periods()[t].clone(),
            x,
            y,
            is_query,
        })
        .collect())
}

pub fn trajectory_report(word: &str, points: &[TrajectoryPoint]) -> EvalReport {
    let mut r = EvalReport::new("trajectory");
    r.param("word", word);
    r.columns = vec!["word".into(), "period".into(), "x".into(), "y".into(), "query".into()];
    for p in points {
        r.rows.push(vec![json!(p.word), json!(p.period), json!(p.x), json!(p.y), json!(p.is_query)]);
    }
    r.series.push(Series {
        name: word.to_string(),
        points: points.iter().filter(|p| p.is_query).map(|p| (p.x, p.y)).collect(),
    });
    r.axes = Some(("PC1".into(), "PC2".into()));
    r
}
