//! Dense Crout factorization with scaled partial pivoting.
//!
//! `L` carries the pivots on its diagonal and `U` has a unit diagonal. `U` is
//! kept transposed so that every inner product runs over contiguous memory.

use thiserror::Error;

/// Pivots below this multiple of their row's largest entry count as zero.
pub const PIVOT_TOL: f64 = 1e-14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LuError {
    #[error("matrix is not square or does not match the right-hand side")]
    Shape,
    #[error("non-finite matrix entry")]
    NonFinite,
    #[error("singular matrix at column {column} (pivot {pivot:e})")]
    SingularMatrix { column: usize, pivot: f64 },
}

/// Row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![0.0; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, LuError> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(LuError::Shape);
        }
        Ok(Self { n, data: rows.concat() })
    }

    /// Builds from row-major data of length `n²`.
    pub fn from_vec(n: usize, data: Vec<f64>) -> Result<Self, LuError> {
        if data.len() != n * n {
            return Err(LuError::Shape);
        }
        Ok(Self { n, data })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn rows_mut(&mut self) -> std::slice::ChunksExactMut<'_, f64> {
        self.data.chunks_exact_mut(self.n.max(1))
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| dot(self.row(i), x)).collect()
    }
}

impl std::ops::Index<(usize, usize)> for DenseMatrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        for k in 0..4 {
            acc[k] += x[k] * y[k];
        }
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Factorization `P A = L U`.
#[derive(Debug, Clone)]
pub struct CroutLu {
    n: usize,
    lower: Vec<f64>,
    upper_t: Vec<f64>,
    perm: Vec<usize>,
}

impl CroutLu {
    pub fn factor(a: &DenseMatrix) -> Result<Self, LuError> {
        let n = a.n;
        if a.data.iter().any(|v| !v.is_finite()) {
            return Err(LuError::NonFinite);
        }
        let mut lower = a.data.clone();
        let mut upper_t = vec![0.0; n * n];
        let mut perm: Vec<usize> = (0..n).collect();
        let mut row_max: Vec<f64> = (0..n).map(|i| a.row(i).iter().fold(0.0f64, |m, v| m.max(v.abs()))).collect();
        for k in 0..n {
            let uk = &upper_t[k * n..k * n + k];
            for i in k..n {
                let s = dot(&lower[i * n..i * n + k], uk);
                lower[i * n + k] -= s;
            }
            let mut p = k;
            let mut best = -1.0;
            for i in k..n {
                let scaled = if row_max[i] > 0.0 {
                    lower[i * n + k].abs() / row_max[i]
                } else {
                    0.0
                };
                if scaled > best {
                    best = scaled;
                    p = i;
                }
            }
            let pivot = lower[p * n + k];
            let acceptable = pivot.abs() >= PIVOT_TOL * row_max[p];
            if !acceptable || pivot == 0.0 {
                return Err(LuError::SingularMatrix { column: k, pivot });
            }
            if p != k {
                let (head, tail) = lower.split_at_mut(p * n);
                head[k * n..(k + 1) * n].swap_with_slice(&mut tail[..n]);
                perm.swap(p, k);
                row_max.swap(p, k);
            }
            let lk = &lower[k * n..(k + 1) * n];
            for j in k + 1..n {
                let s = dot(&lk[..k], &upper_t[j * n..j * n + k]);
                upper_t[j * n + k] = (lk[j] - s) / pivot;
            }
        }
        Ok(Self { n, lower, upper_t, perm })
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>, LuError> {
        let n = self.n;
        if b.len() != n {
            return Err(LuError::Shape);
        }
        let mut y = vec![0.0; n];
        for i in 0..n {
            let row = &self.lower[i * n..i * n + i];
            y[i] = (b[self.perm[i]] - dot(row, &y[..i])) / self.lower[i * n + i];
        }
        for k in (0..n).rev() {
            let s: f64 = (k + 1..n).map(|j| self.upper_t[j * n + k] * y[j]).sum();
            y[k] -= s;
        }
        Ok(y)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LuSolution {
    pub solution: Vec<f64>,
    /// `max_i |A x − b|_i`.
    pub residual_norm: f64,
}

pub fn solve_crout(a: &DenseMatrix, b: &[f64]) -> Result<LuSolution, LuError> {
    if b.len() != a.n {
        return Err(LuError::Shape);
    }
    let solution = CroutLu::factor(a)?.solve(b)?;
    let residual_norm = a.mul_vec(&solution).iter().zip(b).map(|(r, b)| (r - b).abs()).fold(0.0, f64::max);
    Ok(LuSolution { solution, residual_norm })
}
