use super::DenseMatrix;
use crate::error::{check_len, Error, Result};

/// Compressed sparse row storage.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from per-row `(column, value)` lists; columns sorted per row.
    pub fn from_rows(cols: usize, rows: Vec<Vec<(usize, f64)>>) -> Result<Self> {
        let mut row_ptr = Vec::with_capacity(rows.len() + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for mut r in rows.iter().cloned() {
            r.sort_by_key(|e| e.0);
            for w in r.windows(2) {
                if w[0].0 == w[1].0 {
                    return Err(Error::InvalidArgument(format!("duplicate column {}", w[0].0)));
                }
            }
            for (c, v) in r {
                if c >= cols {
                    return Err(Error::InvalidArgument(format!("column {c} out of range {cols}")));
                }
                col_idx.push(c);
                values.push(v);
            }
            row_ptr.push(col_idx.len());
        }
        Ok(CsrMatrix { rows: rows.len(), cols, row_ptr, col_idx, values })
    }

    /// Keeps every entry of `dense` for which `keep(i, j)` holds and the value is nonzero.
    pub fn from_dense_filtered(dense: &DenseMatrix, keep: impl Fn(usize, usize) -> bool) -> Self {
        let rows = (0..dense.rows())
            .map(|i| {
                (0..dense.cols())
                    .filter(|&j| keep(i, j) && dense.get(i, j) != 0.0)
                    .map(|j| (j, dense.get(i, j)))
                    .collect()
            })
            .collect();
        CsrMatrix::from_rows(dense.cols(), rows).expect("dense pattern is always valid")
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    /// `(row, col, value)` triplets in row order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.rows).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len(self.cols, x.len())?;
        Ok((0..self.rows).map(|i| self.row(i).map(|(j, v)| v * x[j]).sum()).collect())
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut d = DenseMatrix::zeros(self.rows, self.cols);
        for (i, j, v) in self.triplets() {
            d.set(i, j, v);
        }
        d
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Triangle {
    Lower,
    Upper,
}

/// Square triangular matrix in CSR form. With `unit_diagonal` the
/// diagonal is implicit and must not be stored.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseTriangular {
    triangle: Triangle,
    unit_diagonal: bool,
    csr: CsrMatrix,
    diag: Vec<f64>,
}

impl SparseTriangular {
    pub fn new(triangle: Triangle, unit_diagonal: bool, csr: CsrMatrix) -> Result<Self> {
        if csr.rows() != csr.cols() {
            return Err(Error::InvalidArgument("triangular matrix must be square".into()));
        }
        let n = csr.rows();
        let mut diag = vec![if unit_diagonal { 1.0 } else { 0.0 }; n];
        for (i, j, v) in csr.triplets() {
            let wrong_side = match triangle {
                Triangle::Lower => j > i,
                Triangle::Upper => j < i,
            };
            if wrong_side {
                return Err(Error::InvalidArgument(format!("entry ({i}, {j}) outside the {triangle:?} triangle")));
            }
            if i == j {
                if unit_diagonal {
                    return Err(Error::InvalidArgument(format!("stored diagonal at row {i} of a unit triangle")));
                }
                diag[i] = v;
            }
        }
        if let Some(i) = diag.iter().position(|&d| d == 0.0) {
            return Err(Error::Singular(i));
        }
        Ok(SparseTriangular { triangle, unit_diagonal, csr, diag })
    }

    pub fn from_dense(dense: &DenseMatrix, triangle: Triangle, unit_diagonal: bool) -> Result<Self> {
        let csr = CsrMatrix::from_dense_filtered(dense, |i, j| match triangle {
            Triangle::Lower => j < i || (j == i && !unit_diagonal),
            Triangle::Upper => j > i || (j == i && !unit_diagonal),
        });
        SparseTriangular::new(triangle, unit_diagonal, csr)
    }

    pub fn order(&self) -> usize {
        self.csr.rows()
    }

    pub fn triangle(&self) -> Triangle {
        self.triangle
    }

    pub fn unit_diagonal(&self) -> bool {
        self.unit_diagonal
    }

    pub fn csr(&self) -> &CsrMatrix {
        &self.csr
    }

    /// Stored entries plus the implicit unit diagonal, if any.
    pub fn nnz_with_diagonal(&self) -> usize {
        self.csr.nnz() + if self.unit_diagonal { self.order() } else { 0 }
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut y = self.csr.matvec(x)?;
        if self.unit_diagonal {
            y.iter_mut().zip(x).for_each(|(a, b)| *a += b);
        }
        Ok(y)
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut d = self.csr.to_dense();
        if self.unit_diagonal {
            for i in 0..self.order() {
                d.set(i, i, 1.0);
            }
        }
        d
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        check_len(self.order(), b.len())?;
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        Ok(x)
    }

    /// Substitution in place; dimensions are the caller's responsibility.
    pub fn solve_in_place(&self, x: &mut [f64]) {
        let n = self.order();
        let step = |i: usize, x: &mut [f64]| {
            let mut s = x[i];
            for (j, v) in self.csr.row(i) {
                if j != i {
                    s -= v * x[j];
                }
            }
            x[i] = if self.unit_diagonal { s } else { s / self.diag[i] };
        };
        match self.triangle {
            Triangle::Lower => (0..n).for_each(|i| step(i, x)),
            Triangle::Upper => (0..n).rev().for_each(|i| step(i, x)),
        }
    }
}

/// Sparse triangular solve.
pub fn sparse_triangular_solve(t: &SparseTriangular, b: &[f64]) -> Result<Vec<f64>> {
    t.solve(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::distance;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_pattern() {
        let t = SparseTriangular::from_dense(&DenseMatrix::identity(4), Triangle::Lower, false).unwrap();
        assert_eq!(t.solve(&[1.0, 2.0, 3.0, 4.0]).unwrap(), vec![1.0, 2.0, 3.0, 4.0]);
        let u = SparseTriangular::from_dense(&DenseMatrix::identity(4), Triangle::Upper, true).unwrap();
        assert_eq!(u.csr().nnz(), 0);
        assert_eq!(u.solve(&[1.0, 2.0, 3.0, 4.0]).unwrap(), vec![1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn bidiagonal_by_hand() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 0.0], vec![-1.0, 1.0]]).unwrap();
        let t = SparseTriangular::from_dense(&a, Triangle::Lower, false).unwrap();
        assert_eq!(sparse_triangular_solve(&t, &[1.0, 1.0]).unwrap(), vec![1.0, 2.0]);
    }

    #[test]
    fn rejects_bad_patterns() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![0.0, 0.0]]).unwrap();
        assert!(matches!(SparseTriangular::from_dense(&a, Triangle::Upper, false), Err(Error::Singular(1))));
        let csr = CsrMatrix::from_rows(2, vec![vec![(1, 1.0)], vec![]]).unwrap();
        assert!(SparseTriangular::new(Triangle::Lower, true, csr).is_err());
    }

    fn dense_substitution(a: &DenseMatrix, b: &[f64], lower: bool) -> Vec<f64> {
        let n = b.len();
        let mut x = vec![0.0; n];
        let order: Vec<usize> = if lower { (0..n).collect() } else { (0..n).rev().collect() };
        for &i in &order {
            let mut s = b[i];
            for j in 0..n {
                if j != i {
                    s -= a.get(i, j) * x[j];
                }
            }
            x[i] = s / a.get(i, i);
        }
        x
    }

    #[test]
    fn random_sparse_against_dense_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 60;
        for (tri, lower) in [(Triangle::Lower, true), (Triangle::Upper, false)] {
            let mut a = DenseMatrix::zeros(n, n);
            for i in 0..n {
                a.set(i, i, rng.gen_range(1.0..3.0));
                for j in 0..n {
                    let inside = if lower { j < i } else { j > i };
                    if inside && rng.gen_bool(0.15) {
                        a.set(i, j, rng.gen_range(-0.5..0.5));
                    }
                }
            }
            let t = SparseTriangular::from_dense(&a, tri, false).unwrap();
            let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let got = t.solve(&b).unwrap();
            let oracle = dense_substitution(&a, &b, lower);
            assert!(distance(&got, &oracle) < 1e-13 * crate::linalg::norm2(&oracle).max(1.0));
            let back = t.matvec(&got).unwrap();
            assert!(distance(&back, &b) < 1e-13);
        }
    }
}
