//! Mean cross-period cosine of probe words as their context overlap drops.

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::corpus::{build_vocabulary, PeriodizedCorpus, Vocabulary};
use crate::embedding::{EmbeddingSet, Method, Space};
use crate::error::{Error, Result};
use crate::eval::perturb::{perturb_overlap, PerturbationSpec};
use crate::eval::report::{EvalReport, Series};
use crate::eval::stats::{mean, spearman};
use crate::methods::{build_embeddings, MethodConfig};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SmoothnessConfig {
    pub probe_words: Vec<String>,
    /// Index of the earlier period; the later one is `t + 1`.
    pub t: usize,
    pub alphas: Vec<f64>,
    pub seed: u64,
    /// Minimum count for the vocabulary built from the unperturbed periods.
    pub min_count: u64,
    pub per_token_rate: Option<f64>,
}

impl Default for SmoothnessConfig {
    fn default() -> Self {
        SmoothnessConfig {
            probe_words: Vec::new(),
            t: 0,
            alphas: vec![0.0, 0.1, 0.2, 0.3, 0.4],
            seed: 42,
            min_count: 5,
            per_token_rate: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SmoothnessCurve {
    pub method: Method,
    pub probe_words: Vec<String>,
    pub overlaps: Vec<f64>,
    /// `cosines[level][probe]`.
    pub cosines: Vec<Vec<f64>>,
    pub means: Vec<f64>,
    /// Spearman(overlap, mean cosine), `None` when a series is constant.
    pub rank_correlation: Option<f64>,
    /// Cross-period cosines were taken between independently trained spaces.
    pub unaligned: bool,
}

impl SmoothnessCurve {
    /// Nonincreasing as overlap falls.
    pub fn is_monotone(&self) -> bool {
        let mut pairs: Vec<(f64, f64)> = self.overlaps.iter().copied().zip(self.means.iter().copied()).collect();
        pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
        pairs.windows(2).all(|w| w[1].1 <= w[0].1)
    }

    pub fn report(&self) -> EvalReport {
        let mut r = EvalReport::new("smoothness");
        r.param("method", self.method.name());
        r.param("probe_words", &self.probe_words);
        r.param("overlaps", &self.overlaps);
        r.columns = std::iter::once("method".to_string())
            .chain(std::iter::once("word".to_string()))
            .chain(self.overlaps.iter().map(|o| format!("{o}%")))
            .collect();
        for (p, w) in self.probe_words.iter().enumerate() {
            let mut row = vec![json!(self.method.name()), json!(w)];
            row.extend(self.cosines.iter().map(|level| json!(level[p])));
            r.rows.push(row);
        }
        let mut row = vec![json!(self.method.name()), json!("mean")];
        row.extend(self.means.iter().map(|m| json!(m)));
        r.rows.push(row);
        r.aggregate("rank_correlation", self.rank_correlation);
        r.aggregate("monotone", self.is_monotone());
        if self.unaligned {
            r.notes.push(format!(
                "{} trains each period separately; these cosines compare unaligned spaces",
                self.method
            ));
        }
        r.series.push(Series {
            name: self.method.name().to_string(),
            points: self.overlaps.iter().copied().zip(self.means.iter().copied()).collect(),
        });
        r.axes = Some(("context overlap (%)".into(), "mean cosine".into()));
        r
    }
}

/// Runs the perturbation grid for one method on periods `t` and `t + 1`.
///
/// Every level starts from the same two-period corpus and vocabulary and
/// uses the same training seeds; only the replaced contexts differ.
pub fn smoothness_curve<T: Scalar>(
    method: Method,
    corpus: &PeriodizedCorpus,
    config: &SmoothnessConfig,
    method_config: &MethodConfig,
) -> Result<SmoothnessCurve> {
    if config.probe_words.is_empty() {
        return Err(Error::EmptyEvaluation("no probe words".into()));
    }
    if config.alphas.is_empty() {
        return Err(Error::EmptyEvaluation("no alpha levels".into()));
    }
    if config.t + 1 >= corpus.num_periods() {
        return Err(Error::InvalidArgument(format!(
            "period {} has no successor among {} periods",
            config.t,
            corpus.num_periods()
        )));
    }
    let pair = corpus.select_periods(&[config.t, config.t + 1])?;
    let vocab = build_vocabulary(&pair, config.min_count, None)?;
    curve_on_pair::<T>(method, &pair, &vocab, config, method_config)
}

fn curve_on_pair<T: Scalar>(
    method: Method,
    pair: &PeriodizedCorpus,
    vocab: &Vocabulary,
    config: &SmoothnessConfig,
    method_config: &MethodConfig,
) -> Result<SmoothnessCurve> {
    let probes: Vec<usize> = config
        .probe_words
        .iter()
        .map(|w| vocab.index(w).ok_or_else(|| Error::UnknownWord(w.clone())))
        .collect::<Result<_>>()?;
    let mut cosines = Vec::with_capacity(config.alphas.len());
    let mut unaligned = false;
    for &alpha in &config.alphas {
        let spec = PerturbationSpec {
            probe_words: config.probe_words.clone(),
            t: 0,
            t_plus_1: 1,
            alpha,
            seed: config.seed,
            per_token_rate: config.per_token_rate,
        };
        let (perturbed, _) = perturb_overlap(pair, vocab, &spec)?;
        let set: EmbeddingSet<T> = build_embeddings(method, &perturbed, vocab, method_config)?;
        unaligned |= set.space() == Space::Independent;
        let level: Vec<f64> = probes
            .iter()
            .map(|&i| set.cosine_unaligned((i, 0), (i, 1)).map(|c| c.as_f64()))
            .collect::<Result<_>>()?;
        log::info!("{method} alpha {alpha}: mean cosine {:.4}", mean(&level));
        cosines.push(level);
    }
    let overlaps: Vec<f64> = config
        .alphas
        .iter()
        .map(|&a| {
            PerturbationSpec {
                probe_words: Vec::new(),
                t: 0,
                t_plus_1: 1,
                alpha: a,
                seed: 0,
                per_token_rate: None,
            }
            .overlap_percent()
        })
        .collect();
    let means: Vec<f64> = cosines.iter().map(|c| mean(c)).collect();
    let rank_correlation = if overlaps.len() >= 2 {
        match spearman(&overlaps, &means) {
            Ok(r) => Some(r),
            Err(Error::UndefinedCorrelation(_)) => None,
            Err(e) => return Err(e),
        }
    } else {
        None
    };
    Ok(SmoothnessCurve {
        method,
        probe_words: config.probe_words.clone(),
        overlaps,
        cosines,
        means,
        rank_correlation,
        unaligned,
    })
}

/// Combines curves of several methods into one report and chart.
pub fn smoothness_grid_report(curves: &[SmoothnessCurve]) -> EvalReport {
    let mut r = EvalReport::new("smoothness");
    for c in curves {
        let single = c.report();
        if r.columns.is_empty() {
            r.columns = single.columns.clone();
            r.parameters = single.parameters.clone();
            r.parameters.remove("method");
        }
        r.rows.extend(single.rows);
        r.series.extend(single.series);
        r.notes.extend(single.notes);
        r.aggregate(&format!("{}_rank_correlation", c.method), c.rank_correlation);
        r.aggregate(&format!("{}_monotone", c.method), c.is_monotone());
    }
    r.param("methods", curves.iter().map(|c| c.method.name()).collect::<Vec<_>>());
    r.axes = Some(("context overlap (%)".into(), "mean cosine".into()));
    r
}
