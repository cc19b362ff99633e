//! Joint low-rank factorization of temporal PPMI matrices with a temporal
//! smoothing penalty:
//!
//! ```text
//! 1/2 sum_t |M_t - W_t W_t^T|^2 + lambda/2 sum_t |W_t|^2
//!     + tau/2 sum_{t>=1} |W_{t-1} - W_t|^2
//! ```
//!
//! Solved by gradient descent, one period block at a time, with an
//! Armijo backtracking line search so the objective never increases.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::embedding::{EmbeddingSet, Method, Rows, Space};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::sparse::CsrMatrix;
use crate::svd::{truncated_svd, SvdOptions};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Dw2vConfig {
    pub rank: usize,
    pub lambda: f64,
    pub tau: f64,
    /// Maximum sweeps over all period blocks.
    pub max_sweeps: usize,
    /// Stop once `|grad| <= grad_tol * max(1, |grad_0|)`.
    pub grad_tol: f64,
    pub seed: u64,
    pub vocab_cap: usize,
    /// Start every period from the solution of the averaged problem.
    pub static_warm_start: bool,
}

impl Default for Dw2vConfig {
    fn default() -> Self {
        Dw2vConfig {
            rank: 50,
            lambda: 10.0,
            tau: 50.0,
            max_sweeps: 2000,
            grad_tol: 1e-7,
            seed: 1,
            vocab_cap: 5000,
            static_warm_start: true,
        }
    }
}

/// The matrices to factor plus the solver settings.
#[derive(Clone, Debug)]
pub struct Dw2vProblem<T: Scalar> {
    matrices: Vec<CsrMatrix<T>>,
    /// `|M_t|_F^2` of each input.
    norms: Vec<f64>,
    config: Dw2vConfig,
}

impl<T: Scalar> Dw2vProblem<T> {
    pub fn new(matrices: Vec<CsrMatrix<T>>, config: Dw2vConfig) -> Result<Self> {
        let first = matrices
            .first()
            .ok_or_else(|| Error::InvalidArgument("no matrices to factor".into()))?;
        let v = first.nrows();
        if let Some(m) = matrices.iter().find(|m| m.nrows() != v || m.ncols() != v) {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} matrix in a problem over {v} words",
                m.nrows(),
                m.ncols()
            )));
        }
        if v > config.vocab_cap {
            return Err(Error::CapExceeded {
                size: v,
                cap: config.vocab_cap,
            });
        }
        if !(config.lambda.is_finite() && config.lambda >= 0.0 && config.tau.is_finite() && config.tau >= 0.0) {
            return Err(Error::InvalidArgument("lambda and tau must be finite and nonnegative".into()));
        }
        if config.rank < 1 || config.rank > v {
            return Err(Error::InvalidArgument(format!("rank {} outside 1..={v}", config.rank)));
        }
        let norms = matrices.iter().map(|m| m.frobenius_norm_squared().as_f64()).collect();
        Ok(Dw2vProblem {
            matrices,
            norms,
            config,
        })
    }

    pub fn num_periods(&self) -> usize {
        self.matrices.len()
    }

    pub fn vocab_size(&self) -> usize {
        self.matrices[0].nrows()
    }

    pub fn config(&self) -> &Dw2vConfig {
        &self.config
    }

    pub fn matrices(&self) -> &[CsrMatrix<T>] {
        &self.matrices
    }

    fn check(&self, ws: &[DMatrix<T>]) -> Result<()> {
        let (v, d) = (self.vocab_size(), self.config.rank);
        if ws.len() != self.num_periods() {
            return Err(Error::DimensionMismatch(format!(
                "{} factors for {} periods",
                ws.len(),
                self.num_periods()
            )));
        }
        if let Some(w) = ws.iter().find(|w| w.shape() != (v, d)) {
            return Err(Error::DimensionMismatch(format!("factor of shape {:?}, expected ({v}, {d})", w.shape())));
        }
        Ok(())
    }

    /// `1/2 |M_t - W W^T|^2` without forming `W W^T`.
    fn fit_term(&self, t: usize, w: &DMatrix<T>) -> f64 {
        let mw = self.matrices[t].mul_dense(w);
        let cross = sum_products(w, &mw);
        let gram = w.transpose() * w;
        let gram_sq: f64 = gram.iter().map(|x| x.as_f64() * x.as_f64()).sum();
        0.5 * (self.norms[t] - 2.0 * cross + gram_sq)
    }

    /// The part of the objective that depends on block `t`.
    fn block_objective(&self, t: usize, w: &DMatrix<T>, ws: &[DMatrix<T>]) -> f64 {
        let mut f = self.fit_term(t, w) + 0.5 * self.config.lambda * sq_norm(w);
        for nb in neighbors(t, ws.len()) {
            f += 0.5 * self.config.tau * sq_dist(w, &ws[nb]);
        }
        f
    }

    /// Gradient of the objective with respect to block `t`.
    fn block_gradient(&self, t: usize, w: &DMatrix<T>, ws: &[DMatrix<T>]) -> DMatrix<T> {
        let m = &self.matrices[t];
        let mut g = w * (w.transpose() * w) * T::lit(2.0);
        g -= m.mul_dense(w);
        g -= m.tr_mul_dense(w);
        g += w * T::lit(self.config.lambda);
        let tau = T::lit(self.config.tau);
        for nb in neighbors(t, ws.len()) {
            g += (w - &ws[nb]) * tau;
        }
        g
    }
}

fn neighbors(t: usize, n: usize) -> impl Iterator<Item = usize> {
    [t.checked_sub(1), (t + 1 < n).then_some(t + 1)].into_iter().flatten()
}

fn sum_products<T: Scalar>(a: &DMatrix<T>, b: &DMatrix<T>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.as_f64() * y.as_f64()).sum()
}

fn sq_norm<T: Scalar>(a: &DMatrix<T>) -> f64 {
    sum_products(a, a)
}

fn sq_dist<T: Scalar>(a: &DMatrix<T>, b: &DMatrix<T>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| {
            let d = x.as_f64() - y.as_f64();
            d * d
        })
        .sum()
}

/// The full objective at factors `ws`.
pub fn dw2v_objective<T: Scalar>(ws: &[DMatrix<T>], problem: &Dw2vProblem<T>) -> Result<f64> {
    problem.check(ws)?;
    let c = &problem.config;
    let mut f = 0.0;
    for (t, w) in ws.iter().enumerate() {
        f += problem.fit_term(t, w) + 0.5 * c.lambda * sq_norm(w);
    }
    for t in 1..ws.len() {
        f += 0.5 * c.tau * sq_dist(&ws[t - 1], &ws[t]);
    }
    Ok(f)
}

/// Gradient of [`dw2v_objective`] with respect to every factor.
pub fn dw2v_gradient<T: Scalar>(ws: &[DMatrix<T>], problem: &Dw2vProblem<T>) -> Result<Vec<DMatrix<T>>> {
    problem.check(ws)?;
    Ok((0..ws.len()).map(|t| problem.block_gradient(t, &ws[t], ws)).collect())
}

#[derive(Clone, Debug)]
pub struct Dw2vSolution<T: Scalar> {
    pub factors: Vec<DMatrix<T>>,
    pub objective: f64,
    pub grad_norm: f64,
    pub sweeps: usize,
    pub converged: bool,
    /// Objective after every sweep, starting with the initial point.
    pub trace: Vec<f64>,
}

/// `U sqrt(sigma)` over the leading components with `u . v > 0`.
///
/// `W W^T` is positive semidefinite, so a component of an indefinite `M`
/// whose left and right vectors point opposite ways cannot be fit; starting
/// on one leaves the descent near a saddle. Twice the rank is computed and
/// the strongest positive components are kept.
fn svd_start<T: Scalar>(m: &CsrMatrix<T>, rank: usize, seed: u64) -> Result<DMatrix<T>> {
    let wide = (2 * rank).min(m.nrows().min(m.ncols()));
    let opts = SvdOptions {
        seed,
        max_iters: 50,
        tol: 1e-4,
        ..SvdOptions::default()
    };
    let f = match truncated_svd(m, wide, &opts) {
        Ok(f) => f,
        Err(Error::NoConvergence { .. }) => truncated_svd(
            m,
            wide,
            &SvdOptions {
                tol: 1.0,
                ..opts
            },
        )?,
        Err(e) => return Err(e),
    };
    let positive: Vec<usize> = (0..f.rank())
        .filter(|&j| f.sigma[j] > T::zero() && f.u.column(j).dot(&f.v.column(j)) > T::zero())
        .take(rank)
        .collect();
    let n = m.nrows();
    let mut w = DMatrix::<T>::zeros(n, rank);
    for (k, &j) in positive.iter().enumerate() {
        let s = f.sigma[j].sqrt();
        w.set_column(k, &(f.u.column(j) * s));
    }
    // Columns left at zero would sit on a saddle point forever.
    for j in positive.len()..rank {
        for (i, x) in w.column_mut(j).iter_mut().enumerate() {
            *x = T::lit(1e-3 * (((i * 7919 + j * 104729 + seed as usize) % 1000) as f64 / 1000.0 - 0.5) / n as f64);
        }
    }
    Ok(w)
}

fn average<T: Scalar>(ms: &[CsrMatrix<T>]) -> Result<CsrMatrix<T>> {
    let (r, c) = (ms[0].nrows(), ms[0].ncols());
    let scale = T::lit(1.0 / ms.len() as f64);
    let triplets = ms.iter().flat_map(|m| m.iter().map(|(i, j, v)| (i, j, v * scale))).collect();
    CsrMatrix::from_triplets(r, c, triplets)
}

/// Minimizes the joint objective.
///
/// The starting point is either the solution of the static problem (one
/// shared factor for the averaged matrix) copied to every period, or an
/// independent truncated-SVD start per period. With `tau = 0` the periods
/// do not interact and the per-period start is always used.
pub fn dw2v_solve<T: Scalar>(problem: &Dw2vProblem<T>) -> Result<Dw2vSolution<T>> {
    let c = &problem.config;
    let n = problem.num_periods();
    let init: Vec<DMatrix<T>> = if c.static_warm_start && n > 1 && c.tau > 0.0 {
        let avg = average(&problem.matrices)?;
        let single = Dw2vProblem::new(
            vec![avg],
            Dw2vConfig {
                static_warm_start: false,
                ..c.clone()
            },
        )?;
        let w = descend(&single, vec![svd_start(&single.matrices[0], c.rank, c.seed)?])?.factors;
        vec![w[0].clone(); n]
    } else {
        problem
            .matrices
            .iter()
            .enumerate()
            .map(|(t, m)| svd_start(m, c.rank, c.seed.wrapping_add(t as u64)))
            .collect::<Result<_>>()?
    };
    descend(problem, init)
}

fn descend<T: Scalar>(problem: &Dw2vProblem<T>, mut ws: Vec<DMatrix<T>>) -> Result<Dw2vSolution<T>> {
    let c = &problem.config;
    let n = ws.len();
    let mut objective = dw2v_objective(&ws, problem)?;
    let mut trace = vec![objective];
    let grad_norm = |ws: &[DMatrix<T>]| -> f64 {
        (0..n)
            .map(|t| sq_norm(&problem.block_gradient(t, &ws[t], ws)))
            .sum::<f64>()
            .sqrt()
    };
    let g0 = grad_norm(&ws);
    let target = c.grad_tol * g0.max(1.0);
    let mut step = vec![1e-3f64; n];
    let mut prev: Vec<Option<(DMatrix<T>, DMatrix<T>)>> = vec![None; n];
    let mut gnorm = g0;
    let mut sweeps = 0;
    let mut stalled = 0;

    while gnorm > target && sweeps < c.max_sweeps {
        sweeps += 1;
        let before = objective;
        for t in 0..n {
            let w = ws[t].clone();
            let g = problem.block_gradient(t, &w, &ws);
            let gg = sq_norm(&g);
            if gg == 0.0 {
                continue;
            }
            // Barzilai-Borwein guess from the previous visit of this block.
            if let Some((pw, pg)) = &prev[t] {
                let s = &w - pw;
                let y = &g - pg;
                let sy = sum_products(&s, &y);
                if sy > 0.0 {
                    step[t] = sq_norm(&s) / sy;
                }
            }
            let f0 = problem.block_objective(t, &w, &ws);
            let mut alpha = step[t];
            let mut accepted = None;
            for _ in 0..60 {
                let cand = &w - &g * T::lit(alpha);
                let f1 = problem.block_objective(t, &cand, &ws);
                if f1.is_finite() && f1 <= f0 - 1e-4 * alpha * gg {
                    accepted = Some(cand);
                    break;
                }
                alpha *= 0.5;
            }
            if let Some(cand) = accepted {
                step[t] = alpha;
                prev[t] = Some((w, g));
                ws[t] = cand;
            } else {
                prev[t] = None;
            }
        }
        objective = dw2v_objective(&ws, problem)?;
        if !objective.is_finite() {
            return Err(Error::Diverged(format!(
                "objective became {objective} after sweep {sweeps}; trace tail {:?}",
                &trace[trace.len().saturating_sub(5)..]
            )));
        }
        trace.push(objective);
        gnorm = grad_norm(&ws);
        if before - objective <= 1e-15 * before.abs().max(1.0) {
            stalled += 1;
            if stalled >= 5 {
                break;
            }
        } else {
            stalled = 0;
        }
    }
    let converged = gnorm <= target;
    log::debug!("dw2v: {sweeps} sweeps, objective {objective:e}, gradient norm {gnorm:e}");
    Ok(Dw2vSolution {
        factors: ws,
        objective,
        grad_norm: gnorm,
        sweeps,
        converged,
        trace,
    })
}

/// Packs solved factors into a shared-space embedding set.
pub fn dw2v_embeddings<T: Scalar>(
    solution: &Dw2vSolution<T>,
    words: Vec<String>,
    periods: Vec<String>,
) -> Result<EmbeddingSet<T>> {
    let d = solution.factors.first().map_or(0, |w| w.ncols());
    let mut data = Vec::new();
    for w in &solution.factors {
        for i in 0..w.nrows() {
            data.extend(w.row(i).iter().copied());
        }
    }
    let mut set = EmbeddingSet::new(Method::Dw2v, Space::Shared, words, periods, d, Rows::Dense(data))?;
    set.set_meta("dw2v_objective", format!("{:e}", solution.objective));
    set.set_meta("dw2v_grad_norm", format!("{:e}", solution.grad_norm));
    set.set_meta("dw2v_converged", solution.converged.to_string());
    Ok(set)
}
