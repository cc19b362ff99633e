//! Positive pointwise mutual information matrices, per period and stacked.

use serde::{Deserialize, Serialize};

use crate::cooc::{count_pairs, count_pairs_whole, CoocCounts};
use crate::corpus::{PeriodizedCorpus, Vocabulary};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::sparse::CsrMatrix;

/// Where the marginal probabilities of a PPMI matrix come from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MarginalConvention {
    /// Joint and marginal counts from the same segment.
    Segment,
    /// Joint counts from one period, marginals and total from the whole corpus.
    WholeCorpus,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PpmiMeta {
    /// Period labels covered, in row-block order.
    pub periods: Vec<String>,
    pub window: usize,
    pub convention: MarginalConvention,
    /// Periods whose segment produced no pairs.
    pub empty_periods: Vec<String>,
}

/// Sparse nonnegative word x context matrix; zeros are implicit.
#[derive(Clone, Debug, PartialEq)]
pub struct PpmiMatrix<T> {
    matrix: CsrMatrix<T>,
    meta: PpmiMeta,
}

impl<T: Scalar> PpmiMatrix<T> {
    pub fn new(matrix: CsrMatrix<T>, meta: PpmiMeta) -> Self {
        PpmiMatrix { matrix, meta }
    }

    pub fn rows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn cols(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn nnz(&self) -> usize {
        self.matrix.nnz()
    }

    pub fn get(&self, row: usize, col: usize) -> T {
        self.matrix.get(row, col)
    }

    pub fn matrix(&self) -> &CsrMatrix<T> {
        &self.matrix
    }

    pub fn meta(&self) -> &PpmiMeta {
        &self.meta
    }

    pub fn into_parts(self) -> (CsrMatrix<T>, PpmiMeta) {
        (self.matrix, self.meta)
    }
}

/// `log(joint * D / (w * c) * (D / D_joint))`, the PMI of one cell.
///
/// With `joint_total == marginal_total` the trailing factor is exactly 1.
#[inline]
pub fn pmi(joint: u64, joint_total: u64, w: u64, c: u64, marginal_total: u64) -> f64 {
    let d = marginal_total as f64;
    ((joint as f64 * d) / (w as f64 * c as f64) * (d / joint_total as f64)).ln()
}

fn assemble<T: Scalar>(
    joint: &CoocCounts,
    center: &[u64],
    context: &[u64],
    marginal_total: u64,
) -> Result<CsrMatrix<T>> {
    let v = joint.vocab_size();
    let mut rows: Vec<Vec<(u32, T)>> = vec![Vec::new(); v];
    for &(w, c, n) in joint.pairs() {
        let (nw, nc) = (center[w as usize], context[c as usize]);
        if nw == 0 || nc == 0 {
            return Err(Error::Inconsistent(format!(
                "pair ({w}, {c}) observed but a marginal is zero"
            )));
        }
        let m = pmi(n, joint.total_pairs(), nw, nc, marginal_total);
        if m > 0.0 {
            rows[w as usize].push((c, T::lit(m)));
        }
    }
    Ok(CsrMatrix::from_rows(v, rows))
}

/// PPMI of one set of counts, with `|D|` the total number of pairs.
pub fn build_ppmi<T: Scalar>(counts: &CoocCounts, window: usize) -> Result<PpmiMatrix<T>> {
    if counts.total_pairs() == 0 {
        return Err(Error::InvalidArgument(format!(
            "period {} has no co-occurrence pairs",
            counts.label()
        )));
    }
    let matrix = assemble(
        counts,
        counts.center_marginals(),
        counts.context_marginals(),
        counts.total_pairs(),
    )?;
    Ok(PpmiMatrix {
        matrix,
        meta: PpmiMeta {
            periods: vec![counts.label().to_string()],
            window,
            convention: MarginalConvention::Segment,
            empty_periods: Vec::new(),
        },
    })
}

/// PPMI of `period` whose joint probability comes from that segment while
/// the marginal probabilities come from `whole`. Rows of different periods
/// share one coordinate system.
pub fn temporal_ppmi_from_counts<T: Scalar>(
    period: &CoocCounts,
    whole: &CoocCounts,
    window: usize,
) -> Result<PpmiMatrix<T>> {
    if period.vocab_size() != whole.vocab_size() {
        return Err(Error::DimensionMismatch(format!(
            "period counts over {} words, whole-corpus counts over {}",
            period.vocab_size(),
            whole.vocab_size()
        )));
    }
    let mut meta = PpmiMeta {
        periods: vec![period.label().to_string()],
        window,
        convention: MarginalConvention::WholeCorpus,
        empty_periods: Vec::new(),
    };
    if period.total_pairs() == 0 {
        meta.empty_periods.push(period.label().to_string());
        return Ok(PpmiMatrix {
            matrix: CsrMatrix::zeros(period.vocab_size(), period.vocab_size()),
            meta,
        });
    }
    let matrix = assemble(
        period,
        whole.center_marginals(),
        whole.context_marginals(),
        whole.total_pairs(),
    )?;
    Ok(PpmiMatrix { matrix, meta })
}

/// Naturally aligned PPMI for period `t`.
pub fn build_temporal_ppmi<T: Scalar>(
    corpus: &PeriodizedCorpus,
    vocab: &Vocabulary,
    window: usize,
    t: usize,
) -> Result<PpmiMatrix<T>> {
    let whole = count_pairs_whole(corpus, vocab, window)?;
    let period = count_pairs(corpus, vocab, window, t)?;
    temporal_ppmi_from_counts(&period, &whole, window)
}

/// Stacks per-period matrices so row `t * |V| + i` is row `i` of input `t`.
pub fn concat_tagged_ppmi<T: Scalar>(per_period: &[PpmiMatrix<T>]) -> Result<PpmiMatrix<T>> {
    if per_period.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "stacking needs at least 2 periods, got {}",
            per_period.len()
        )));
    }
    let first = &per_period[0];
    for m in per_period {
        if m.cols() != first.cols() || m.rows() != first.rows() {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} matrix cannot be stacked with {}x{}",
                m.rows(),
                m.cols(),
                first.rows(),
                first.cols()
            )));
        }
        if m.meta.window != first.meta.window {
            return Err(Error::DimensionMismatch(format!(
                "window {} differs from {}",
                m.meta.window, first.meta.window
            )));
        }
    }
    let parts: Vec<&CsrMatrix<T>> = per_period.iter().map(|m| &m.matrix).collect();
    let matrix = CsrMatrix::vstack(&parts)?;
    let meta = PpmiMeta {
        periods: per_period.iter().flat_map(|m| m.meta.periods.clone()).collect(),
        window: first.meta.window,
        convention: first.meta.convention,
        empty_periods: per_period.iter().flat_map(|m| m.meta.empty_periods.clone()).collect(),
    };
    Ok(PpmiMatrix { matrix, meta })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    use crate::corpus::{build_vocabulary, NgramRecord, PeriodSpec, TokenFilter};

    fn counts(label: &str, v: usize, pairs: &[((u32, u32), u64)]) -> CoocCounts {
        CoocCounts::from_map(label, v, pairs.iter().copied().collect::<HashMap<_, _>>())
    }

    #[test]
    fn two_pair_example() {
        let c = counts("p", 2, &[((0, 1), 1), ((1, 0), 1)]);
        let m: PpmiMatrix<f64> = build_ppmi(&c, 1).unwrap();
        assert_eq!(m.get(0, 1), 2f64.ln());
        assert!((m.get(0, 1) - 0.6931).abs() < 1e-4);
        assert_eq!(m.get(0, 0), 0.0);
        assert_eq!(m.nnz(), 2);
    }

    #[test]
    fn independent_counts_give_zero_matrix() {
        // #(w,c) * |D| == #(w) * #(c) everywhere.
        let c = counts("p", 2, &[((0, 0), 1), ((0, 1), 1), ((1, 0), 1), ((1, 1), 1)]);
        let m: PpmiMatrix<f64> = build_ppmi(&c, 1).unwrap();
        assert_eq!(m.nnz(), 0);
    }

    #[test]
    fn empty_counts_are_rejected() {
        let c = counts("p", 2, &[]);
        assert!(build_ppmi::<f64>(&c, 1).is_err());
    }

    fn two_period_corpus() -> (PeriodizedCorpus, Vocabulary) {
        let spec = PeriodSpec::new(2000, 2002, 1).unwrap();
        let recs = [
            ("a b c d e", 2000, 3),
            ("b c a a d", 2000, 1),
            ("e d c b a", 2001, 2),
            ("a a b", 2001, 5),
        ];
        let c = PeriodizedCorpus::from_records(
            &spec,
            recs.iter().map(|&(t, y, n)| NgramRecord {
                tokens: t.split_whitespace().map(str::to_string).collect(),
                year: y,
                match_count: n,
            }),
            &TokenFilter::default(),
        );
        let v = build_vocabulary(&c, 1, None).unwrap();
        (c, v)
    }

    #[test]
    fn single_period_temporal_equals_segment_ppmi() {
        let (c, v) = two_period_corpus();
        let single = c.select_periods(&[1]).unwrap();
        let t: PpmiMatrix<f64> = build_temporal_ppmi(&single, &v, 2, 0).unwrap();
        let s: PpmiMatrix<f64> = build_ppmi(&count_pairs(&single, &v, 2, 0).unwrap(), 2).unwrap();
        assert_eq!(t.matrix(), s.matrix());
    }

    #[test]
    fn stacking_places_rows_by_period() {
        let (c, v) = two_period_corpus();
        let m0: PpmiMatrix<f64> = build_temporal_ppmi(&c, &v, 2, 0).unwrap();
        let m1: PpmiMatrix<f64> = build_temporal_ppmi(&c, &v, 2, 1).unwrap();
        let s = concat_tagged_ppmi(&[m0.clone(), m1.clone()]).unwrap();
        assert_eq!(s.rows(), 2 * v.len());
        assert_eq!(s.nnz(), m0.nnz() + m1.nnz());
        for i in 0..v.len() {
            for j in 0..v.len() {
                assert_eq!(s.get(v.len() + i, j), m1.get(i, j));
                assert_eq!(s.get(i, j), m0.get(i, j));
            }
        }
        assert_eq!(s.meta().periods, ["2000", "2001"]);
        assert!(concat_tagged_ppmi(&[m0]).is_err());
    }

    #[test]
    fn stacking_rejects_mismatched_shapes() {
        let a = PpmiMatrix::<f64>::new(
            CsrMatrix::zeros(2, 2),
            PpmiMeta {
                periods: vec!["a".into()],
                window: 1,
                convention: MarginalConvention::Segment,
                empty_periods: vec![],
            },
        );
        let mut b = a.clone();
        b.matrix = CsrMatrix::zeros(3, 3);
        assert!(matches!(concat_tagged_ppmi(&[a.clone(), b]), Err(Error::DimensionMismatch(_))));
        let mut c = a.clone();
        c.meta.window = 2;
        assert!(concat_tagged_ppmi(&[a, c]).is_err());
    }

    #[test]
    fn empty_period_is_flagged() {
        let (c, v) = two_period_corpus();
        let mut c2 = c.clone();
        c2.segment_mut(1).clear();
        let m: PpmiMatrix<f64> = build_temporal_ppmi(&c2, &v, 2, 1).unwrap();
        assert_eq!(m.nnz(), 0);
        assert_eq!(m.meta().empty_periods, ["2001"]);
    }
}
