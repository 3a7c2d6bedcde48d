//! Compressed sparse row storage and a sparse SPD solver.

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::Llt;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Col, Side};

use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Square matrix from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(n: usize, mut triplets: Vec<(u32, u32, f64)>) -> Self {
        triplets.sort_unstable_by_key(|&(r, c, _)| ((r as u64) << 32) | c as u64);
        let mut row_ptr = vec![0usize; n + 1];
        let mut cols = Vec::with_capacity(triplets.len() / 2);
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len() / 2);
        let mut last = None;
        for (r, c, v) in triplets {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                cols.push(c);
                values.push(v);
                row_ptr[r as usize + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self { n, row_ptr, cols, values }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_triplets(n, (0..n as u32).map(|i| (i, i, 1.0)).collect())
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let row = self.row_ptr[r]..self.row_ptr[r + 1];
        match self.cols[row.clone()].binary_search(&(c as u32)) {
            Ok(k) => self.values[row.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        for (r, yr) in y.iter_mut().enumerate() {
            let range = self.row_ptr[r]..self.row_ptr[r + 1];
            *yr = self.cols[range.clone()]
                .iter()
                .zip(&self.values[range])
                .map(|(&c, &v)| v * x[c as usize])
                .sum();
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { values: self.values.iter().map(|v| s * v).collect(), ..self.clone() }
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        (0..self.n).all(|r| {
            (self.row_ptr[r]..self.row_ptr[r + 1])
                .all(|k| (self.values[k] - self.get(self.cols[k] as usize, r)).abs() <= tol)
        })
    }

    pub fn row_sum(&self, r: usize) -> f64 {
        self.values[self.row_ptr[r]..self.row_ptr[r + 1]].iter().sum()
    }
}

pub fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Relative residual target of the CG polishing iteration.
pub const CG_TARGET: f64 = 1e-12;
/// Relative residual every returned solution is guaranteed to meet.
pub const RESIDUAL_CONTRACT: f64 = 1e-10;

/// Sparse Cholesky factorization shared by all right-hand sides solved with
/// the same matrix. Solutions missing the residual contract are polished by
/// diagonally scaled conjugate gradients.
pub struct SpdSolver<'a> {
    matrix: &'a CsrMatrix,
    inv_diag: Vec<f64>,
    factor: Option<Llt<usize, f64>>,
}

impl<'a> SpdSolver<'a> {
    pub fn new(matrix: &'a CsrMatrix) -> Result<Self> {
        let diag = matrix.diagonal();
        if let Some(i) = diag.iter().position(|&d| !(d > 0.0)) {
            return Err(Error::Data(format!(
                "matrix is not positive definite: diagonal entry {i} is {}",
                diag[i]
            )));
        }
        let factor = if matrix.dim() == 0 {
            None
        } else {
            let mut lower = Vec::with_capacity(matrix.nnz() / 2 + matrix.dim());
            for r in 0..matrix.dim() {
                for k in matrix.row_ptr[r]..matrix.row_ptr[r + 1] {
                    let c = matrix.cols[k] as usize;
                    if c <= r {
                        lower.push(Triplet::new(r, c, matrix.values[k]));
                    }
                }
            }
            let a = SparseColMat::<usize, f64>::try_new_from_triplets(matrix.dim(), matrix.dim(), &lower)
                .map_err(|e| Error::Data(format!("cannot build sparse matrix: {e:?}")))?;
            Some(
                a.sp_cholesky(Side::Lower)
                    .map_err(|e| Error::Data(format!("matrix is not positive definite: {e:?}")))?,
            )
        };
        Ok(Self { matrix, inv_diag: diag.iter().map(|d| 1.0 / d).collect(), factor })
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let n = self.matrix.dim();
        if rhs.len() != n {
            return Err(Error::Dimension { what: "right-hand side", expected: n, got: rhs.len() });
        }
        let b_norm = norm2(rhs);
        if b_norm == 0.0 {
            return Ok(vec![0.0; n]);
        }
        let x = match &self.factor {
            Some(llt) => {
                let b = Col::<f64>::from_fn(n, |i| rhs[i]);
                let x = llt.solve(&b);
                (0..n).map(|i| x[i]).collect()
            }
            None => vec![0.0; n],
        };
        if self.relative_residual(&x, rhs, b_norm) <= RESIDUAL_CONTRACT {
            return Ok(x);
        }
        self.pcg(rhs, x, b_norm)
    }

    fn relative_residual(&self, x: &[f64], rhs: &[f64], b_norm: f64) -> f64 {
        let r: Vec<f64> = self.matrix.mul_vec(x).iter().zip(rhs).map(|(a, b)| a - b).collect();
        norm2(&r) / b_norm
    }

    fn pcg(&self, rhs: &[f64], mut x: Vec<f64>, b_norm: f64) -> Result<Vec<f64>> {
        let n = self.matrix.dim();
        let max_iter = 10 * n + 100;
        let mut iterations = 0;
        // restarts guard against drift between the recursive and the true residual
        for _ in 0..4 {
            let mut r = self.matrix.mul_vec(&x);
            for (ri, bi) in r.iter_mut().zip(rhs) {
                *ri = bi - *ri;
            }
            let mut z: Vec<f64> = r.iter().zip(&self.inv_diag).map(|(a, b)| a * b).collect();
            let mut p = z.clone();
            let mut rz = dot(&r, &z);
            let mut ap = vec![0.0; n];
            while iterations < max_iter {
                if norm2(&r) <= CG_TARGET * b_norm {
                    break;
                }
                iterations += 1;
                self.matrix.mul_vec_into(&p, &mut ap);
                let pap = dot(&p, &ap);
                if !(pap > 0.0) {
                    return Err(Error::Solver { iterations, residual: norm2(&r) / b_norm });
                }
                let alpha = rz / pap;
                for i in 0..n {
                    x[i] += alpha * p[i];
                    r[i] -= alpha * ap[i];
                }
                for i in 0..n {
                    z[i] = r[i] * self.inv_diag[i];
                }
                let rz_new = dot(&r, &z);
                let beta = rz_new / rz;
                rz = rz_new;
                for i in 0..n {
                    p[i] = z[i] + beta * p[i];
                }
            }
            let rel = self.relative_residual(&x, rhs, b_norm);
            if rel <= RESIDUAL_CONTRACT {
                return Ok(x);
            }
            if iterations >= max_iter {
                return Err(Error::Solver { iterations, residual: rel });
            }
        }
        Err(Error::Solver { iterations, residual: self.relative_residual(&x, rhs, b_norm) })
    }
}

/// One-shot solve of `matrix x = rhs` for a symmetric positive definite matrix.
pub fn solve_spd(matrix: &CsrMatrix, rhs: &[f64]) -> Result<Vec<f64>> {
    SpdSolver::new(matrix)?.solve(rhs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_solve_returns_rhs() {
        let m = CsrMatrix::identity(5);
        let b = vec![1.0, -2.0, 3.0, 0.5, 7.0];
        assert_eq!(solve_spd(&m, &b).unwrap(), b);
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let m = CsrMatrix::from_triplets(2, vec![(0, 0, 2.0), (1, 1, 3.0), (0, 1, 1.0), (1, 0, 1.0)]);
        assert_eq!(solve_spd(&m, &[0.0, 0.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn duplicates_are_summed() {
        let m = CsrMatrix::from_triplets(2, vec![(0, 0, 1.0), (0, 0, 1.5), (1, 1, 1.0)]);
        assert_eq!(m.get(0, 0), 2.5);
        assert_eq!(m.get(0, 1), 0.0);
        assert_eq!(m.nnz(), 2);
    }

    #[test]
    fn tridiagonal_system() {
        let n = 200;
        let mut t = Vec::new();
        for i in 0..n as u32 {
            t.push((i, i, 2.0));
            if i > 0 {
                t.push((i, i - 1, -1.0));
                t.push((i - 1, i, -1.0));
            }
        }
        let m = CsrMatrix::from_triplets(n, t);
        let b: Vec<f64> = (0..n).map(|i| (i as f64 * 0.1).sin()).collect();
        let x = solve_spd(&m, &b).unwrap();
        let r: Vec<f64> = m.mul_vec(&x).iter().zip(&b).map(|(a, b)| a - b).collect();
        assert!(norm2(&r) <= 1e-10 * norm2(&b));
    }

    #[test]
    fn indefinite_matrix_is_rejected() {
        let m = CsrMatrix::from_triplets(2, vec![(0, 0, 1.0), (1, 1, -1.0)]);
        assert!(SpdSolver::new(&m).is_err());
        let m = CsrMatrix::from_triplets(2, vec![(0, 0, 1.0), (1, 1, 1.0), (0, 1, 2.0), (1, 0, 2.0)]);
        assert!(SpdSolver::new(&m).is_err());
    }
}
