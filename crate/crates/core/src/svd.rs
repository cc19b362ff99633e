//! Truncated SVD of sparse matrices by randomized subspace iteration.
//!
//! A Gaussian test block of width `rank + oversample` is pushed through
//! `A` and `A^T` alternately, re-orthonormalizing after every product.
//! After the minimum number of power iterations a Rayleigh-Ritz step
//! extracts singular triplets and the loop stops once every requested
//! triplet satisfies `|A v - s u| <= tol * s_max`.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::sparse::CsrMatrix;

#[derive(Clone, Debug, PartialEq)]
pub struct SvdOptions {
    pub seed: u64,
    /// Extra columns in the iterated block; `None` uses `max(10, rank)`.
    pub oversample: Option<usize>,
    pub min_power_iters: usize,
    pub max_iters: usize,
    /// Relative residual tolerance, floored at `50 * eps` of the scalar type.
    pub tol: f64,
}

impl Default for SvdOptions {
    fn default() -> Self {
        SvdOptions {
            seed: 0x5EED,
            oversample: None,
            min_power_iters: 4,
            max_iters: 500,
            tol: 1e-10,
        }
    }
}

/// Leading singular triplets, `A ~ U diag(sigma) V^T`.
#[derive(Clone, Debug, PartialEq)]
pub struct SvdFactors<T: Scalar> {
    /// rows x rank, orthonormal columns.
    pub u: DMatrix<T>,
    /// Nonincreasing, nonnegative.
    pub sigma: DVector<T>,
    /// cols x rank, orthonormal columns (the shared context basis).
    pub v: DMatrix<T>,
    pub iterations: usize,
    /// Largest `|A v_i - s_i u_i|` at exit.
    pub residual: f64,
}

impl<T: Scalar> SvdFactors<T> {
    pub fn rank(&self) -> usize {
        self.sigma.len()
    }

    /// Embedding rows `U diag(sigma^p)`; `p = 0` gives `U` itself.
    pub fn embedding(&self, sigma_exponent: f64) -> DMatrix<T> {
        let mut out = self.u.clone();
        if sigma_exponent != 0.0 {
            for (j, mut col) in out.column_iter_mut().enumerate() {
                let s = self.sigma[j].as_f64().powf(sigma_exponent);
                col *= T::lit(s);
            }
        }
        out
    }

    pub fn reconstruct(&self) -> DMatrix<T> {
        let mut us = self.u.clone();
        for (j, mut col) in us.column_iter_mut().enumerate() {
            col *= self.sigma[j];
        }
        us * self.v.transpose()
    }
}

/// `m = Q R` with orthonormal `Q`.
///
/// Two rounds of Cholesky QR, falling back to Householder when the Gram
/// matrix is not positive definite or the result is not orthonormal to
/// working precision.
fn qr_factor<T: Scalar>(m: &DMatrix<T>) -> (DMatrix<T>, DMatrix<T>) {
    let k = m.ncols();
    let cholesky_step = |a: &DMatrix<T>| -> Option<(DMatrix<T>, DMatrix<T>)> {
        let l = (a.transpose() * a).cholesky()?.unpack();
        let l_inv = l.solve_lower_triangular(&DMatrix::identity(k, k))?;
        if l_inv.iter().any(|x| !x.is_finite()) {
            return None;
        }
        Some((a * l_inv.transpose(), l.transpose()))
    };
    let attempt = cholesky_step(m).and_then(|(q1, r1)| {
        let (q, r2) = cholesky_step(&q1)?;
        let gap = (q.transpose() * &q - DMatrix::identity(k, k)).abs().max();
        (gap.as_f64() <= 1e3 * T::eps().as_f64()).then(|| (q, r2 * r1))
    });
    attempt.unwrap_or_else(|| {
        let qr = m.clone().qr();
        (qr.q(), qr.r())
    })
}

fn orthonormalize<T: Scalar>(m: DMatrix<T>) -> DMatrix<T> {
    qr_factor(&m).0
}

/// Flips each singular pair so the largest-magnitude entry of `u_i` is positive.
pub(crate) fn fix_signs<T: Scalar>(u: &mut DMatrix<T>, v: &mut DMatrix<T>) {
    for j in 0..u.ncols() {
        let col = u.column(j);
        let mut best = 0;
        for i in 1..col.len() {
            if col[i].abs() > col[best].abs() {
                best = i;
            }
        }
        if col.len() > 0 && col[best] < T::zero() {
            u.column_mut(j).neg_mut();
            v.column_mut(j).neg_mut();
        }
    }
}

/// Dense SVD with singular values sorted descending and the sign convention applied.
pub(crate) fn sorted_svd<T: Scalar>(m: DMatrix<T>) -> (DMatrix<T>, DVector<T>, DMatrix<T>) {
    let svd = m.svd(true, true);
    let u = svd.u.expect("requested u");
    let vt = svd.v_t.expect("requested v_t");
    let s = svd.singular_values;
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&a, &b| s[b].partial_cmp(&s[a]).unwrap_or(std::cmp::Ordering::Equal));
    let u = DMatrix::from_fn(u.nrows(), order.len(), |i, j| u[(i, order[j])]);
    let v = DMatrix::from_fn(vt.ncols(), order.len(), |i, j| vt[(order[j], i)]);
    let s = DVector::from_fn(order.len(), |j, _| s[order[j]]);
    (u, s, v)
}

/// Leading `rank` singular triplets of `a`.
pub fn truncated_svd<T: Scalar>(a: &CsrMatrix<T>, rank: usize, opts: &SvdOptions) -> Result<SvdFactors<T>> {
    let (m, n) = (a.nrows(), a.ncols());
    let full = m.min(n);
    if rank < 1 || rank > full {
        return Err(Error::InvalidArgument(format!(
            "rank {rank} outside 1..={full} for a {m}x{n} matrix"
        )));
    }
    let oversample = opts.oversample.unwrap_or(rank.max(10));
    let k = (rank + oversample).min(full);
    let tol = opts.tol.max(50.0 * T::eps().as_f64());

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let omega = DMatrix::<T>::from_fn(n, k, |_, _| {
        let x: f64 = StandardNormal.sample(&mut rng);
        T::lit(x)
    });
    let mut q = orthonormalize(a.mul_dense(&omega));
    let mut last_residual = f64::INFINITY;

    for it in 1..=opts.max_iters.max(opts.min_power_iters) {
        let p = orthonormalize(a.tr_mul_dense(&q));
        q = orthonormalize(a.mul_dense(&p));
        if it < opts.min_power_iters {
            continue;
        }

        // Rayleigh-Ritz on the current left subspace: B = Q^T A, through
        // B^T = Q_b R_b and the small SVD of R_b.
        let bt = a.tr_mul_dense(&q);
        let (qb, rb) = qr_factor(&bt);
        let (ur, s, vr) = sorted_svd(rb);
        let (ub, vb) = (vr, qb * ur);
        let mut u = (&q * ub).columns(0, rank).into_owned();
        let mut v = vb.columns(0, rank).into_owned();
        let sigma = s.rows(0, rank).into_owned();

        let av = a.mul_dense(&v);
        let mut residual = 0.0f64;
        for j in 0..rank {
            let r = (av.column(j) - u.column(j) * sigma[j]).norm().as_f64();
            residual = residual.max(r);
        }
        let scale = sigma[0].as_f64().max(f64::MIN_POSITIVE);
        last_residual = residual;
        if residual <= tol * scale || sigma[0] == T::zero() {
            fix_signs(&mut u, &mut v);
            log::debug!("truncated svd converged after {it} iterations (residual {residual:e})");
            return Ok(SvdFactors {
                u,
                sigma,
                v,
                iterations: it,
                residual,
            });
        }
    }
    Err(Error::NoConvergence {
        iterations: opts.max_iters,
        residual: last_residual,
        tolerance: tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn identity_gap(m: &DMatrix<f64>) -> f64 {
        (m.transpose() * m - DMatrix::identity(m.ncols(), m.ncols())).abs().max()
    }

    #[test]
    fn diagonal_tail_is_eckart_young() {
        let a = CsrMatrix::<f64>::from_triplets(3, 3, vec![(0, 0, 3.0), (1, 1, 2.0), (2, 2, 1.0)]).unwrap();
        let f = truncated_svd(&a, 2, &SvdOptions::default()).unwrap();
        assert!((f.sigma[0] - 3.0).abs() < 1e-12);
        assert!((f.sigma[1] - 2.0).abs() < 1e-12);
        let err = (a.to_dense() - f.reconstruct()).norm();
        assert!((err - 1.0).abs() < 1e-10);
    }

    #[test]
    fn full_rank_is_exact() {
        let d = DMatrix::from_fn(5, 4, |i, j| ((i * 7 + j * 3) % 5) as f64 - 1.5);
        let a = CsrMatrix::from_dense(&d);
        let f = truncated_svd(&a, 4, &SvdOptions::default()).unwrap();
        assert!((d - f.reconstruct()).norm() < 1e-8);
        assert!(identity_gap(&f.u) < 1e-8);
        assert!(identity_gap(&f.v) < 1e-8);
    }

    #[test]
    fn rejects_bad_rank() {
        let a = CsrMatrix::<f64>::zeros(3, 2);
        assert!(truncated_svd(&a, 0, &SvdOptions::default()).is_err());
        assert!(truncated_svd(&a, 3, &SvdOptions::default()).is_err());
    }

    #[test]
    fn zero_matrix_converges() {
        let a = CsrMatrix::<f64>::zeros(6, 4);
        let f = truncated_svd(&a, 2, &SvdOptions::default()).unwrap();
        assert!(f.sigma.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn sign_convention_makes_largest_entry_positive() {
        let d = DMatrix::<f64>::from_row_slice(3, 2, &[-4.0, 0.0, 0.0, 1.0, -1.0, 0.0]);
        let f = truncated_svd(&CsrMatrix::<f64>::from_dense(&d), 2, &SvdOptions::default()).unwrap();
        for j in 0..2 {
            let col = f.u.column(j);
            let big = col.iter().copied().fold(0.0f64, |a, b| if b.abs() > a.abs() { b } else { a });
            assert!(big > 0.0);
        }
    }

    #[test]
    fn sigma_exponent_scales_columns() {
        let a = CsrMatrix::<f64>::from_triplets(3, 3, vec![(0, 0, 4.0), (1, 1, 1.0), (2, 2, 0.25)]).unwrap();
        let f = truncated_svd(&a, 2, &SvdOptions::default()).unwrap();
        let e0 = f.embedding(0.0);
        let e = f.embedding(0.5);
        assert_eq!(e0, f.u);
        assert!((e.column(0).norm() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn non_convergence_reports_residual() {
        let d = DMatrix::from_fn(40, 40, |i, j| ((i * 31 + j * 17) % 13) as f64 / 13.0);
        let a = CsrMatrix::from_dense(&d);
        let opts = SvdOptions {
            oversample: Some(0),
            min_power_iters: 1,
            max_iters: 1,
            tol: 1e-15,
            ..SvdOptions::default()
        };
        match truncated_svd(&a, 10, &opts) {
            Err(Error::NoConvergence { residual, .. }) => assert!(residual > 0.0),
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }
}
