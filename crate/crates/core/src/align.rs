//! Orthogonal Procrustes alignment between per-period vector spaces.

use std::fmt::Write as _;
use std::io::BufRead;

use nalgebra::DMatrix;

use crate::embedding::{EmbeddingSet, Space};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const ALIGN_TAG: &str = "chronovec-align v1";

/// Orthogonal `Q` minimizing `|W_src Q - W_dst|_F`.
#[derive(Clone, Debug, PartialEq)]
pub struct AlignmentMap<T: Scalar> {
    pub q: DMatrix<T>,
    pub source_period: String,
    pub target_period: String,
    /// `|W_src Q - W_dst|_F` over the rows used for fitting.
    pub residual: f64,
    /// The cross-covariance was rank deficient, so `Q` is not unique.
    pub degenerate: bool,
}

impl<T: Scalar> AlignmentMap<T> {
    pub fn dim(&self) -> usize {
        self.q.nrows()
    }

    /// `|Q^T Q - I|_max`.
    pub fn orthogonality_error(&self) -> f64 {
        let n = self.dim();
        (self.q.transpose() * &self.q - DMatrix::<T>::identity(n, n))
            .iter()
            .fold(0.0f64, |m, x| m.max(x.abs().as_f64()))
    }

    /// Applies the map to row vectors: `W Q`.
    pub fn apply(&self, w: &DMatrix<T>) -> DMatrix<T> {
        w * &self.q
    }

    /// The map `self` followed by `next`.
    pub fn then(&self, next: &AlignmentMap<T>) -> Result<AlignmentMap<T>> {
        if self.dim() != next.dim() {
            return Err(Error::DimensionMismatch(format!(
                "cannot compose {}x{0} and {}x{1} maps",
                self.dim(),
                next.dim()
            )));
        }
        Ok(AlignmentMap {
            q: &self.q * &next.q,
            source_period: self.source_period.clone(),
            target_period: next.target_period.clone(),
            residual: f64::NAN,
            degenerate: self.degenerate || next.degenerate,
        })
    }

    /// A header followed by the `d x d` matrix, one row per line.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{ALIGN_TAG}");
        let _ = writeln!(s, "source {}", self.source_period);
        let _ = writeln!(s, "target {}", self.target_period);
        let _ = writeln!(s, "dim {}", self.dim());
        let _ = writeln!(s, "residual {:e}", self.residual);
        let _ = writeln!(s, "degenerate {}", self.degenerate);
        for i in 0..self.dim() {
            let row: Vec<String> = (0..self.dim()).map(|j| format!("{:.17e}", self.q[(i, j)])).collect();
            let _ = writeln!(s, "{}", row.join(" "));
        }
        s
    }

    pub fn from_text<R: BufRead>(input: R) -> Result<Self> {
        let lines: Vec<String> = input
            .lines()
            .filter(|l| !l.as_ref().is_ok_and(|l| l.starts_with(crate::corpus::HEADER_PREFIX)))
            .collect::<std::io::Result<_>>()
            .map_err(|e| Error::Parse {
                line: 0,
                reason: e.to_string(),
            })?;
        let first = lines.first().map(String::as_str).unwrap_or("");
        if first != ALIGN_TAG {
            return match first.strip_prefix("chronovec-align ") {
                Some(v) => Err(Error::VersionMismatch {
                    expected: "v1".into(),
                    found: v.into(),
                }),
                None => Err(Error::Validation(format!("not an alignment map: {first:?}"))),
            };
        }
        let field = |n: usize, key: &str| -> Result<&str> {
            lines
                .get(n)
                .and_then(|l| l.strip_prefix(key))
                .and_then(|l| l.strip_prefix(' '))
                .ok_or_else(|| Error::Parse {
                    line: n + 1,
                    reason: format!("expected {key:?}"),
                })
        };
        let source_period = field(1, "source")?.to_string();
        let target_period = field(2, "target")?.to_string();
        let dim: usize = field(3, "dim")?.parse().map_err(|_| Error::Parse {
            line: 4,
            reason: "bad dim".into(),
        })?;
        let residual: f64 = field(4, "residual")?.parse().map_err(|_| Error::Parse {
            line: 5,
            reason: "bad residual".into(),
        })?;
        let degenerate = field(5, "degenerate")? == "true";
        let body = &lines[6.min(lines.len())..];
        if body.len() < dim {
            return Err(Error::Truncated {
                expected: dim,
                found: body.len(),
            });
        }
        let mut q = DMatrix::<T>::zeros(dim, dim);
        for (i, line) in body.iter().take(dim).enumerate() {
            let vals: Vec<&str> = line.split_whitespace().collect();
            if vals.len() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "row {i} has {} values, expected {dim}",
                    vals.len()
                )));
            }
            for (j, v) in vals.iter().enumerate() {
                q[(i, j)] = v.parse().map_err(|_| Error::Parse {
                    line: 7 + i,
                    reason: format!("bad value {v:?}"),
                })?;
            }
        }
        Ok(AlignmentMap {
            q,
            source_period,
            target_period,
            residual,
            degenerate,
        })
    }
}

/// Solves `min |W_src Q - W_dst|_F` over orthogonal `Q`: with
/// `W_src^T W_dst = A S B^T`, `Q = A B^T`. No centering or scaling.
pub fn procrustes_align<T: Scalar>(src: &DMatrix<T>, dst: &DMatrix<T>) -> Result<AlignmentMap<T>> {
    if src.shape() != dst.shape() {
        return Err(Error::DimensionMismatch(format!(
            "source is {:?}, target is {:?}",
            src.shape(),
            dst.shape()
        )));
    }
    if src.ncols() == 0 {
        return Err(Error::DimensionMismatch("zero-width embeddings".into()));
    }
    let m = src.transpose() * dst;
    let svd = m.svd(true, true);
    let (a, bt) = (svd.u.expect("requested u"), svd.v_t.expect("requested v_t"));
    let q = a * bt;
    let s = &svd.singular_values;
    let smax = s.iter().fold(T::zero(), |m, &x| m.max(x));
    let smin = s.iter().fold(smax, |m, &x| m.min(x));
    let n = T::lit(src.ncols() as f64);
    let degenerate = smax == T::zero() || smin <= smax * n * T::eps();
    let residual = (src * &q - dst).norm().as_f64();
    Ok(AlignmentMap {
        q,
        source_period: String::new(),
        target_period: String::new(),
        residual,
        degenerate,
    })
}

/// Rotates every period of a dense set into the frame of its last period.
///
/// Period `t` is fitted to the already aligned period `t + 1` on the words
/// observed in both. Returns the aligned set and the adjacent maps
/// `t -> t + 1`.
pub fn align_chain<T: Scalar>(set: &EmbeddingSet<T>) -> Result<(EmbeddingSet<T>, Vec<AlignmentMap<T>>)> {
    if set.is_sparse() {
        return Err(Error::InvalidArgument("Procrustes needs dense embeddings".into()));
    }
    let (v, d, tn) = (set.num_words(), set.dim(), set.num_periods());
    let blocks: Vec<DMatrix<T>> = (0..tn)
        .map(|t| DMatrix::from_row_slice(v, d, &set.period_block(t)))
        .collect();
    let mut aligned = blocks.clone();
    let mut maps = Vec::with_capacity(tn.saturating_sub(1));
    for t in (0..tn.saturating_sub(1)).rev() {
        let common: Vec<usize> = (0..v)
            .filter(|&i| set.is_observed(i, t) && set.is_observed(i, t + 1))
            .collect();
        if common.is_empty() {
            return Err(Error::EmptyEvaluation(format!(
                "no words observed in both {} and {}",
                set.periods()[t],
                set.periods()[t + 1]
            )));
        }
        let src = blocks[t].select_rows(&common);
        let dst = aligned[t + 1].select_rows(&common);
        let mut map = procrustes_align(&src, &dst)?;
        map.source_period = set.periods()[t].clone();
        map.target_period = set.periods()[t + 1].clone();
        if map.degenerate {
            log::warn!("degenerate Procrustes fit {} -> {}", map.source_period, map.target_period);
        }
        aligned[t] = map.apply(&blocks[t]);
        maps.push(map);
    }
    maps.reverse();
    let mut data = Vec::with_capacity(v * d * tn);
    for b in &aligned {
        for i in 0..v {
            data.extend(b.row(i).iter().copied());
        }
    }
    let mut out = set.with_dense_rows(data, Space::Aligned)?;
    out.set_meta("alignment", "procrustes");
    Ok((out, maps))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_when_spaces_agree() {
        let w = DMatrix::from_fn(6, 3, |i, j| ((i * 5 + j * 3) % 7) as f64 - 3.0);
        let m = procrustes_align(&w, &w).unwrap();
        assert!((&m.q - DMatrix::identity(3, 3)).norm() < 1e-12);
        assert!(m.residual < 1e-12);
        assert!(!m.degenerate);
    }

    #[test]
    fn quarter_turn_in_the_plane() {
        let src = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        let dst = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        let m = procrustes_align(&src, &dst).unwrap();
        let expected = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        assert!((&m.q - expected).norm() < 1e-12);
    }

    #[test]
    fn degenerate_input_is_flagged() {
        let src = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 2.0, 0.0, 3.0, 0.0]);
        let m = procrustes_align(&src, &src).unwrap();
        assert!(m.degenerate);
        assert!(m.orthogonality_error() < 1e-12);
        assert!(procrustes_align(&src, &DMatrix::zeros(2, 2)).is_err());
    }

    #[test]
    fn text_round_trip() {
        let q = DMatrix::from_row_slice(2, 2, &[0.6, -0.8, 0.8, 0.6]);
        let m = AlignmentMap {
            q,
            source_period: "1990".into(),
            target_period: "2000".into(),
            residual: 0.125,
            degenerate: false,
        };
        let text = m.to_text();
        assert!(text.starts_with("chronovec-align v1\nsource 1990\n"));
        let back = AlignmentMap::<f64>::from_text(text.as_bytes()).unwrap();
        assert_eq!(back, m);
        let stamped = format!("#!seed 3\n{text}");
        assert_eq!(AlignmentMap::<f64>::from_text(stamped.as_bytes()).unwrap(), m);
        assert!(AlignmentMap::<f64>::from_text("chronovec-align v9\n".as_bytes()).is_err());
    }
}
