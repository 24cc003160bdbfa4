use super::DenseMatrix;
use crate::error::{check_len, Error, Result};

/// Packed `P A = L U` with unit lower `L`.
#[derive(Clone, Debug)]
pub struct LuFactorization {
    n: usize,
    lu: Vec<f64>,
    /// `perm[i]` is the original row placed at position `i`.
    perm: Vec<usize>,
}

/// LU factorization with partial (row) pivoting.
pub fn lu_factor(a: &DenseMatrix) -> Result<LuFactorization> {
    if !a.is_square() {
        return Err(Error::InvalidArgument(format!("LU needs a square matrix, got {}x{}", a.rows(), a.cols())));
    }
    if !a.is_finite() {
        return Err(Error::InvalidArgument("matrix has non-finite entries".into()));
    }
    let n = a.rows();
    let mut lu = a.data().to_vec();
    let mut perm: Vec<usize> = (0..n).collect();
    for k in 0..n {
        let (pivot_row, pivot_abs) = (k..n)
            .map(|i| (i, lu[i * n + k].abs()))
            .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if pivot_abs == 0.0 {
            return Err(Error::Singular(k));
        }
        if pivot_row != k {
            for j in 0..n {
                lu.swap(k * n + j, pivot_row * n + j);
            }
            perm.swap(k, pivot_row);
        }
        let pivot = lu[k * n + k];
        let (upper, lower) = lu.split_at_mut((k + 1) * n);
        let pivot_tail = &upper[k * n + k + 1..k * n + n];
        for row in lower.chunks_exact_mut(n) {
            let l = row[k] / pivot;
            row[k] = l;
            if l != 0.0 {
                for (r, u) in row[k + 1..].iter_mut().zip(pivot_tail) {
                    *r -= l * u;
                }
            }
        }
    }
    Ok(LuFactorization { n, lu, perm })
}

pub fn lu_solve(f: &LuFactorization, b: &[f64]) -> Result<Vec<f64>> {
    f.solve(b)
}

impl LuFactorization {
    pub fn order(&self) -> usize {
        self.n
    }

    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }

    pub fn lower(&self) -> DenseMatrix {
        let n = self.n;
        let mut l = DenseMatrix::identity(n);
        for i in 0..n {
            for j in 0..i {
                l.set(i, j, self.lu[i * n + j]);
            }
        }
        l
    }

    pub fn upper(&self) -> DenseMatrix {
        let n = self.n;
        let mut u = DenseMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                u.set(i, j, self.lu[i * n + j]);
            }
        }
        u
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.n;
        check_len(n, b.len())?;
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let row = &self.lu[i * n..i * n + i];
            let s: f64 = row.iter().zip(&x[..i]).map(|(l, v)| l * v).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let row = &self.lu[i * n + i + 1..(i + 1) * n];
            let s: f64 = row.iter().zip(&x[i + 1..]).map(|(u, v)| u * v).sum();
            let d = self.lu[i * n + i];
            if d == 0.0 {
                return Err(Error::Singular(i));
            }
            x[i] = (x[i] - s) / d;
        }
        Ok(x)
    }
}
