//! Correlation between embedding norms and word frequency over time.

use serde_json::json;

use crate::corpus::{PeriodizedCorpus, Vocabulary};
use crate::embedding::EmbeddingSet;
use crate::error::{Error, Result};
use crate::eval::report::EvalReport;
use crate::eval::stats::{mean, spearman};
use crate::scalar::Scalar;

/// Per-word Spearman between the norm series and the normalized frequency
/// series (period count over period token total), averaged over words.
///
/// `words` defaults to the whole embedding vocabulary. Words absent from
/// any period are skipped, as are words with a constant series.
pub fn norm_frequency_correlation<T: Scalar>(
    set: &EmbeddingSet<T>,
    corpus: &PeriodizedCorpus,
    vocab: &Vocabulary,
    words: Option<&[String]>,
) -> Result<EvalReport> {
    let periods = set.num_periods();
    if periods < 3 {
        return Err(Error::InvalidArgument(format!("norm-frequency correlation needs at least 3 periods, got {periods}")));
    }
    if corpus.num_periods() != periods {
        return Err(Error::DimensionMismatch(format!(
            "{} corpus periods for {periods} embedding periods",
            corpus.num_periods()
        )));
    }
    let counts = vocab.period_counts(corpus);
    let totals: Vec<f64> = (0..periods).map(|t| corpus.period_token_total(t) as f64).collect();
    let chosen: Vec<String> = match words {
        Some(w) => w.to_vec(),
        None => set.words().to_vec(),
    };

    let mut r = EvalReport::new("norms");
    r.param("method", set.method().name());
    r.param("periods", set.periods());
    r.columns = vec!["word".into(), "rho".into()];
    let (mut absent, mut constant) = (Vec::new(), Vec::new());
    let mut rhos = Vec::new();
    for w in &chosen {
        let (Some(i), Some(v)) = (set.word_index(w), vocab.index(w)) else {
            absent.push(w.clone());
            continue;
        };
        if (0..periods).any(|t| counts[t][v] == 0 || totals[t] == 0.0) {
            absent.push(w.clone());
            continue;
        }
        let freq: Vec<f64> = (0..periods).map(|t| counts[t][v] as f64 / totals[t]).collect();
        let norms: Vec<f64> = (0..periods).map(|t| set.vector(i, t).norm().as_f64()).collect();
        match spearman(&norms, &freq) {
            Ok(rho) => {
                r.rows.push(vec![json!(w), json!(rho)]);
                rhos.push(rho);
            }
            Err(Error::UndefinedCorrelation(_)) => constant.push(w.clone()),
            Err(e) => return Err(e),
        }
    }
    if rhos.is_empty() {
        return Err(Error::EmptyEvaluation("no word has a usable norm and frequency series".into()));
    }
    r.aggregate("mean_rho", mean(&rhos));
    r.aggregate("words_used", rhos.len());
    r.aggregate("words_absent", absent.len());
    r.aggregate("words_constant", constant.len());
    if !constant.is_empty() {
        r.notes.push(format!("skipped {} word(s) with a constant series: {}", constant.len(), preview(&constant)));
    }
    if !absent.is_empty() {
        r.notes.push(format!("skipped {} word(s) absent from some period: {}", absent.len(), preview(&absent)));
    }
    Ok(r)
}

fn preview(words: &[String]) -> String {
    const SHOW: usize = 20;
    let mut s = words.iter().take(SHOW).cloned().collect::<Vec<_>>().join(", ");
    if words.len() > SHOW {
        s.push_str(", ...");
    }
    s
}
