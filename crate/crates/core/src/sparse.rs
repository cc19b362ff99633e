//! Compressed sparse row matrix with the handful of products the
//! factorization code needs.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix<T> {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<u32>,
    values: Vec<T>,
}

fn row_major<T: Scalar>(x: &DMatrix<T>) -> Vec<T> {
    x.transpose().as_slice().to_vec()
}

impl<T: Scalar> CsrMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CsrMatrix {
            rows,
            cols,
            row_ptr: vec![0; rows + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Builds from `(row, col, value)` triplets; duplicates are summed and
    /// explicit zeros dropped.
    pub fn from_triplets(rows: usize, cols: usize, mut triplets: Vec<(usize, usize, T)>) -> Result<Self> {
        if let Some(&(r, c, _)) = triplets.iter().find(|&&(r, c, _)| r >= rows || c >= cols) {
            return Err(Error::DimensionMismatch(format!(
                "entry ({r}, {c}) outside a {rows}x{cols} matrix"
            )));
        }
        triplets.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; rows + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values: Vec<T> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
                continue;
            }
            last = Some((r, c));
            row_ptr[r + 1] += 1;
            col_idx.push(c as u32);
            values.push(v);
        }
        for r in 0..rows {
            row_ptr[r + 1] += row_ptr[r];
        }
        let mut m = CsrMatrix {
            rows,
            cols,
            row_ptr,
            col_idx,
            values,
        };
        m.prune_zeros();
        Ok(m)
    }

    /// Row-wise construction from already sorted, duplicate-free rows.
    pub fn from_rows(cols: usize, rows: Vec<Vec<(u32, T)>>) -> Self {
        let mut row_ptr = Vec::with_capacity(rows.len() + 1);
        row_ptr.push(0);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        for row in &rows {
            for &(c, v) in row {
                debug_assert!((c as usize) < cols);
                col_idx.push(c);
                values.push(v);
            }
            row_ptr.push(col_idx.len());
        }
        CsrMatrix {
            rows: rows.len(),
            cols,
            row_ptr,
            col_idx,
            values,
        }
    }

    fn prune_zeros(&mut self) {
        if self.values.iter().all(|v| *v != T::zero()) {
            return;
        }
        let mut rows = Vec::with_capacity(self.rows);
        for r in 0..self.rows {
            let (c, v) = self.row(r);
            rows.push(
                c.iter()
                    .zip(v)
                    .filter(|(_, v)| **v != T::zero())
                    .map(|(&c, &v)| (c, v))
                    .collect(),
            );
        }
        *self = CsrMatrix::from_rows(self.cols, rows);
    }

    pub fn from_dense(m: &DMatrix<T>) -> Self {
        let rows = (0..m.nrows())
            .map(|r| {
                (0..m.ncols())
                    .filter(|&c| m[(r, c)] != T::zero())
                    .map(|c| (c as u32, m[(r, c)]))
                    .collect()
            })
            .collect();
        CsrMatrix::from_rows(m.ncols(), rows)
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Column indices and values of row `r`.
    #[inline]
    pub fn row(&self, r: usize) -> (&[u32], &[T]) {
        let (a, b) = (self.row_ptr[r], self.row_ptr[r + 1]);
        (&self.col_idx[a..b], &self.values[a..b])
    }

    pub fn get(&self, r: usize, c: usize) -> T {
        let (cols, vals) = self.row(r);
        match cols.binary_search(&(c as u32)) {
            Ok(i) => vals[i],
            Err(_) => T::zero(),
        }
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        (0..self.rows).flat_map(move |r| {
            let (c, v) = self.row(r);
            c.iter().zip(v).map(move |(&c, &v)| (r, c as usize, v))
        })
    }

    pub fn to_dense(&self) -> DMatrix<T> {
        let mut m = DMatrix::zeros(self.rows, self.cols);
        for (r, c, v) in self.iter() {
            m[(r, c)] = v;
        }
        m
    }

    pub fn frobenius_norm_squared(&self) -> T {
        self.values.iter().fold(T::zero(), |acc, &v| acc + v * v)
    }

    /// `self * x` for a dense `x` with `ncols` rows.
    pub fn mul_dense(&self, x: &DMatrix<T>) -> DMatrix<T> {
        assert_eq!(x.nrows(), self.cols, "inner dimensions differ");
        let k = x.ncols();
        let xr = row_major(x);
        let mut out = vec![T::zero(); self.rows * k];
        for r in 0..self.rows {
            let (cols, vals) = self.row(r);
            let acc = &mut out[r * k..(r + 1) * k];
            for (&c, &v) in cols.iter().zip(vals) {
                let src = &xr[c as usize * k..(c as usize + 1) * k];
                for (a, &s) in acc.iter_mut().zip(src) {
                    *a += v * s;
                }
            }
        }
        DMatrix::from_row_slice(self.rows, k, &out)
    }

    /// `self^T * x` for a dense `x` with `nrows` rows.
    pub fn tr_mul_dense(&self, x: &DMatrix<T>) -> DMatrix<T> {
        assert_eq!(x.nrows(), self.rows, "inner dimensions differ");
        let k = x.ncols();
        let xr = row_major(x);
        let mut out = vec![T::zero(); self.cols * k];
        for r in 0..self.rows {
            let src = &xr[r * k..(r + 1) * k];
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                let dst = &mut out[c as usize * k..(c as usize + 1) * k];
                for (d, &s) in dst.iter_mut().zip(src) {
                    *d += v * s;
                }
            }
        }
        DMatrix::from_row_slice(self.cols, k, &out)
    }

    /// Stacks matrices with equal column counts on top of each other.
    pub fn vstack(parts: &[&CsrMatrix<T>]) -> Result<Self> {
        let cols = parts.first().map_or(0, |p| p.cols);
        if let Some(bad) = parts.iter().find(|p| p.cols != cols) {
            return Err(Error::DimensionMismatch(format!(
                "cannot stack a {}-column matrix onto {cols} columns",
                bad.cols
            )));
        }
        let mut row_ptr = vec![0usize];
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        for p in parts {
            let offset = col_idx.len();
            row_ptr.extend(p.row_ptr[1..].iter().map(|&x| x + offset));
            col_idx.extend_from_slice(&p.col_idx);
            values.extend_from_slice(&p.values);
        }
        Ok(CsrMatrix {
            rows: parts.iter().map(|p| p.rows).sum(),
            cols,
            row_ptr,
            col_idx,
            values,
        })
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(T) -> U) -> CsrMatrix<U> {
        CsrMatrix {
            rows: self.rows,
            cols: self.cols,
            row_ptr: self.row_ptr.clone(),
            col_idx: self.col_idx.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> CsrMatrix<f64> {
        CsrMatrix::from_triplets(
            3,
            4,
            vec![(0, 1, 2.0), (2, 3, -1.0), (0, 1, 1.0), (1, 0, 4.0), (2, 0, 0.0)],
        )
        .unwrap()
    }

    #[test]
    fn triplets_sum_duplicates_and_drop_zeros() {
        let m = sample();
        assert_eq!(m.nnz(), 3);
        assert_eq!(m.get(0, 1), 3.0);
        assert_eq!(m.get(2, 0), 0.0);
        assert!(CsrMatrix::<f64>::from_triplets(2, 2, vec![(2, 0, 1.0)]).is_err());
    }

    #[test]
    fn products_match_dense() {
        let m = sample();
        let d = m.to_dense();
        let x = DMatrix::from_fn(4, 2, |i, j| (i * 3 + j) as f64 - 2.5);
        assert_eq!(m.mul_dense(&x), &d * &x);
        let y = DMatrix::from_fn(3, 2, |i, j| (i + 2 * j) as f64 * 0.5);
        assert_eq!(m.tr_mul_dense(&y), d.transpose() * &y);
        assert_eq!(CsrMatrix::from_dense(&d), m);
    }

    #[test]
    fn vstack_appends_rows() {
        let m = sample();
        let s = CsrMatrix::vstack(&[&m, &m]).unwrap();
        assert_eq!(s.nrows(), 6);
        assert_eq!(s.nnz(), 6);
        assert_eq!(s.get(3, 1), 3.0);
        let other = CsrMatrix::<f64>::zeros(1, 3);
        assert!(CsrMatrix::vstack(&[&m, &other]).is_err());
    }
}
