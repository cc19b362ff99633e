//! One entry point per embedding method, from a periodized corpus to an
//! [`EmbeddingSet`].

use serde::{Deserialize, Serialize};

use crate::cooc::{count_pairs, count_pairs_whole, tagged_pair_stream, StreamConfig};
use crate::corpus::{PeriodizedCorpus, Vocabulary};
use crate::dw2v::{dw2v_embeddings, dw2v_solve, Dw2vConfig, Dw2vProblem};
use crate::embedding::{EmbeddingSet, Method, Rows, Space};
use crate::error::{Error, Result};
use crate::ppmi::{build_ppmi, concat_tagged_ppmi, temporal_ppmi_from_counts, MarginalConvention, PpmiMatrix};
use crate::scalar::Scalar;
use crate::sgns::{init_model, train, train_epochs, Mode, SgnsModel, TrainConfig, TrainReport};
use crate::sparse::CsrMatrix;
use crate::svd::{truncated_svd, SvdOptions};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MethodConfig {
    /// Context window radius.
    pub window: usize,
    /// Embedding dimension for dense methods.
    pub dim: usize,
    /// Rows are `U diag(sigma^p)`.
    pub sigma_exponent: f64,
    /// Marginals of the per-period blocks stacked for tagged SVD.
    pub tsvd_marginals: MarginalConvention,
    pub svd_seed: u64,
    /// Give tagged skip-gram one context row per (word, period).
    pub tagged_contexts: bool,
    pub train: TrainConfig,
    pub dw2v: Dw2vConfig,
}

impl Default for MethodConfig {
    fn default() -> Self {
        MethodConfig {
            window: 2,
            dim: 300,
            sigma_exponent: 0.0,
            tsvd_marginals: MarginalConvention::Segment,
            svd_seed: 0x5EED,
            tagged_contexts: false,
            train: TrainConfig::default(),
            dw2v: Dw2vConfig::default(),
        }
    }
}

fn finish<T: Scalar>(
    mut set: EmbeddingSet<T>,
    corpus: &PeriodizedCorpus,
    vocab: &Vocabulary,
    config: &MethodConfig,
) -> Result<EmbeddingSet<T>> {
    set.set_observed_from_counts(&vocab.period_counts(corpus))?;
    set.set_meta("window", config.window.to_string());
    Ok(set)
}

fn labels(corpus: &PeriodizedCorpus) -> Vec<String> {
    corpus.labels().to_vec()
}

/// Per-period PPMI rows with whole-corpus marginals, kept sparse.
pub fn ppmi_embeddings<T: Scalar>(
    corpus: &PeriodizedCorpus,
    vocab: &Vocabulary,
    config: &MethodConfig,
) -> Result<EmbeddingSet<T>> {
    let whole = count_pairs_whole(corpus, vocab, config.window)?;
    let blocks = temporal_blocks(corpus, vocab, config.window, &whole)?;
    let parts: Vec<&CsrMatrix<T>> = blocks.iter().map(|m| m.matrix()).collect();
    let stacked = CsrMatrix::vstack(&parts)?;
    let set = EmbeddingSet::new(
        Method::Ppmi,
        Space::Shared,
        vocab.words().to_vec(),
        labels(corpus),
        vocab.len(),
        Rows::Sparse(stacked),
    )?;
    finish(set, corpus, vocab, config)
}

fn temporal_blocks<T: Scalar>(
    corpus: &PeriodizedCorpus,
    vocab: &Vocabulary,
    window: usize,
    whole: &crate::cooc::CoocCounts,
) -> Result<Vec<PpmiMatrix<T>>> {
    (0..corpus.num_periods())
        .map(|t| temporal_ppmi_from_counts(&count_pairs(corpus, vocab, window, t)?, whole, window))
        .collect()
}

fn segment_blocks<T: Scalar>(corpus: &PeriodizedCorpus, vocab: &Vocabulary, window: usize) -> Result<Vec<PpmiMatrix<T>>> {
    (0..corpus.num_periods())
        .map(|t| build_ppmi(&count_pairs(corpus, vocab, window, t)?, window))
        .collect()
}

fn check_rank(dim: usize, rows: usize, cols: usize) -> Result<()> {
    if dim < 1 || dim > rows.min(cols) {
        return Err(Error::InvalidArgument(format!(
            "dimension {dim} outside 1..={} for a {rows}x{cols} matrix",
            rows.min(cols)
        )));
    }
    Ok(())
}

fn svd_rows<T: Scalar>(m: &CsrMatrix<T>, config: &MethodConfig, seed: u64) -> Result<Vec<T>> {
    check_rank(config.dim, m.nrows(), m.ncols())?;
    let opts = SvdOptions {
        seed,
        tol: 1e-6,
        ..SvdOptions::default()
    };
    let f = truncated_svd(m, config.dim, &opts)?;
    let e = f.embedding(config.sigma_exponent);
    let mut out = Vec::with_capacity(e.len());
    for i in 0..e.nrows() {
        out.extend(e.row(i).iter().copied());
    }
    Ok(out)
}

/// Truncated SVD of each period's PPMI matrix on its own.
pub fn svd_embeddings<T: Scalar>(
    corpus: &PeriodizedCorpus,
    vocab: &Vocabulary,
    config: &MethodConfig,
) -> Result<EmbeddingSet<T>> {
    let mut data = Vec::new();
    for (t, m) in segment_blocks::<T>(corpus, vocab, config.window)?.iter().enumerate() {
        data.extend(svd_rows(m.matrix(), config, config.svd_seed.wrapping_add(t as u64))?);
    }
    let set = EmbeddingSet::new(
        Method::Svd,
        Space::Independent,
        vocab.words().to_vec(),
        labels(corpus),
        config.dim,
        Rows::Dense(data),
    )?;
    finish(set, corpus, vocab, config)
}

/// One truncated SVD of the row-stacked per-period PPMI matrices.
pub fn tsvd_embeddings<T: Scalar>(
    corpus: &PeriodizedCorpus,
    vocab: &Vocabulary,
    config: &MethodConfig,
) -> Result<EmbeddingSet<T>> {
    let blocks = match config.tsvd_marginals {
        MarginalConvention::Segment => segment_blocks::<T>(corpus, vocab, config.window)?,
        MarginalConvention::WholeCorpus => {
            let whole = count_pairs_whole(corpus, vocab, config.window)?;
            temporal_blocks(corpus, vocab, config.window, &whole)?
        }
    };
    let stacked = if blocks.len() == 1 {
        blocks.into_iter().next().unwrap()
    } else {
        concat_tagged_ppmi(&blocks)?
    };
    let data = svd_rows(stacked.matrix(), config, config.svd_seed)?;
    let set = EmbeddingSet::new(
        Method::Tsvd,
        Space::Shared,
        vocab.words().to_vec(),
        labels(corpus),
        config.dim,
        Rows::Dense(data),
    )?;
    finish(set, corpus, vocab, config)
}

fn stream_config(config: &MethodConfig, tag_centers: bool) -> StreamConfig {
    StreamConfig {
        subsample_threshold: config.train.subsample_threshold,
        seed: config.train.seed,
        tag_centers,
        tagged_contexts: tag_centers && config.tagged_contexts,
    }
}

/// Plain skip-gram trained separately on every period, each with its own seed.
pub fn sgns_embeddings<T: Scalar>(
    corpus: &PeriodizedCorpus,
    vocab: &Vocabulary,
    config: &MethodConfig,
) -> Result<(EmbeddingSet<T>, Vec<TrainReport>)> {
    let mut data = Vec::with_capacity(vocab.len() * config.dim * corpus.num_periods());
    let mut reports = Vec::new();
    for t in 0..corpus.num_periods() {
        let seed = config.train.seed.wrapping_add(t as u64);
        let mut model: SgnsModel<T> = init_model(vocab.len(), 1, config.dim, Mode::Plain, false, seed)?;
        let stream = tagged_pair_stream(
            corpus,
            vocab,
            config.window,
            &[t],
            StreamConfig {
                seed,
                ..stream_config(config, false)
            },
        )?;
        let cfg = TrainConfig {
            seed,
            ..config.train.clone()
        };
        reports.push(train(&mut model, stream, &cfg)?);
        data.extend_from_slice(model.input_weights());
    }
    let set = EmbeddingSet::new(
        Method::Sgns,
        Space::Independent,
        vocab.words().to_vec(),
        labels(corpus),
        config.dim,
        Rows::Dense(data),
    )?;
    Ok((finish(set, corpus, vocab, config)?, reports))
}

/// Tagged skip-gram over all periods at once.
pub fn tsgns_model<T: Scalar>(
    corpus: &PeriodizedCorpus,
    vocab: &Vocabulary,
    config: &MethodConfig,
) -> Result<(SgnsModel<T>, TrainReport)> {
    let mut model = init_model(
        vocab.len(),
        corpus.num_periods(),
        config.dim,
        Mode::Tagged,
        config.tagged_contexts,
        config.train.seed,
    )?;
    let report = tsgns_train_epochs(&mut model, corpus, vocab, config, 0..config.train.epochs)?;
    Ok((model, report))
}

/// Continues a tagged model over part of its epoch schedule.
pub fn tsgns_train_epochs<T: Scalar>(
    model: &mut SgnsModel<T>,
    corpus: &PeriodizedCorpus,
    vocab: &Vocabulary,
    config: &MethodConfig,
    epochs: std::ops::Range<u32>,
) -> Result<TrainReport> {
    let stream = tagged_pair_stream(corpus, vocab, config.window, &[], stream_config(config, true))?;
    train_epochs(model, stream, &config.train, epochs)
}

/// Wraps a trained tagged model's input rows.
pub fn tsgns_set<T: Scalar>(
    model: &SgnsModel<T>,
    corpus: &PeriodizedCorpus,
    vocab: &Vocabulary,
    config: &MethodConfig,
) -> Result<EmbeddingSet<T>> {
    let set = EmbeddingSet::new(
        Method::Tsgns,
        Space::Shared,
        vocab.words().to_vec(),
        labels(corpus),
        model.dim(),
        Rows::Dense(model.input_weights().to_vec()),
    )?;
    finish(set, corpus, vocab, config)
}

pub fn tsgns_embeddings<T: Scalar>(
    corpus: &PeriodizedCorpus,
    vocab: &Vocabulary,
    config: &MethodConfig,
) -> Result<(EmbeddingSet<T>, TrainReport)> {
    let (model, report) = tsgns_model(corpus, vocab, config)?;
    Ok((tsgns_set(&model, corpus, vocab, config)?, report))
}

/// Joint factorization of the per-period PPMI matrices with whole-corpus marginals.
pub fn dw2v_from_corpus<T: Scalar>(
    corpus: &PeriodizedCorpus,
    vocab: &Vocabulary,
    config: &MethodConfig,
) -> Result<EmbeddingSet<T>> {
    if vocab.len() > config.dw2v.vocab_cap {
        return Err(Error::CapExceeded {
            size: vocab.len(),
            cap: config.dw2v.vocab_cap,
        });
    }
    let whole = count_pairs_whole(corpus, vocab, config.window)?;
    let blocks = temporal_blocks::<T>(corpus, vocab, config.window, &whole)?;
    let problem = Dw2vProblem::new(
        blocks.into_iter().map(|b| b.into_parts().0).collect(),
        Dw2vConfig {
            rank: config.dim,
            ..config.dw2v.clone()
        },
    )?;
    let solution = dw2v_solve(&problem)?;
    let mut set = dw2v_embeddings(&solution, vocab.words().to_vec(), labels(corpus))?;
    set.set_meta("dw2v_lambda", config.dw2v.lambda.to_string());
    set.set_meta("dw2v_tau", config.dw2v.tau.to_string());
    finish(set, corpus, vocab, config)
}

/// Builds `method`'s embeddings for every period of `corpus`.
pub fn build_embeddings<T: Scalar>(
    method: Method,
    corpus: &PeriodizedCorpus,
    vocab: &Vocabulary,
    config: &MethodConfig,
) -> Result<EmbeddingSet<T>> {
    let mut set = match method {
        Method::Ppmi => ppmi_embeddings(corpus, vocab, config)?,
        Method::Svd => svd_embeddings(corpus, vocab, config)?,
        Method::Tsvd => tsvd_embeddings(corpus, vocab, config)?,
        Method::Sgns => sgns_embeddings(corpus, vocab, config)?.0,
        Method::Tsgns => tsgns_embeddings(corpus, vocab, config)?.0,
        Method::Dw2v => dw2v_from_corpus(corpus, vocab, config)?,
    };
    if !matches!(method, Method::Ppmi) {
        set.set_meta("dim", config.dim.to_string());
    }
    if matches!(method, Method::Sgns | Method::Tsgns) {
        set.set_meta("seed", config.train.seed.to_string());
        set.set_meta("epochs", config.train.epochs.to_string());
    }
    Ok(set)
}
