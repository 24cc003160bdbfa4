//! Jacobi, SOR, SSOR and threshold-ILU preconditioners, applied as
//! `v ↦ P⁻¹ v`.
//!
//! With the splitting `A = D + L + U` and `0 < ω < 2`:
//!
//! * Jacobi: `P = D`
//! * SOR: `P = ω⁻¹D + U` (upper, the default) or `P = ω⁻¹D + L`
//! * SSOR: `P = ω/(2−ω) · L̃ Ũ`, `L̃ = ω⁻¹D + L`, `Ũ = D⁻¹(ω⁻¹D + U)`
//! * ILUT: `P = L̃ Ũ` from incomplete Gaussian elimination with threshold
//!   dropping

use crate::error::{check_len, Error, Result};
use crate::linalg::{CsrMatrix, DenseMatrix, SparseTriangular, Triangle};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PreconditionerKind {
    None,
    Jacobi,
    Sor,
    Ssor,
    Ilut,
}

impl PreconditionerKind {
    pub const ALL: [PreconditionerKind; 5] = [
        PreconditionerKind::None,
        PreconditionerKind::Jacobi,
        PreconditionerKind::Sor,
        PreconditionerKind::Ssor,
        PreconditionerKind::Ilut,
    ];

    /// Whether building needs the entries of `A` beyond its diagonal.
    pub fn needs_matrix(self) -> bool {
        matches!(self, PreconditionerKind::Sor | PreconditionerKind::Ssor | PreconditionerKind::Ilut)
    }

    pub fn uses_omega(self) -> bool {
        matches!(self, PreconditionerKind::Sor | PreconditionerKind::Ssor)
    }
}

impl fmt::Display for PreconditionerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PreconditionerKind::None => "none",
            PreconditionerKind::Jacobi => "jacobi",
            PreconditionerKind::Sor => "sor",
            PreconditionerKind::Ssor => "ssor",
            PreconditionerKind::Ilut => "ilut",
        })
    }
}

impl FromStr for PreconditionerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "none" | "identity" => Ok(PreconditionerKind::None),
            "jacobi" => Ok(PreconditionerKind::Jacobi),
            "sor" => Ok(PreconditionerKind::Sor),
            "ssor" => Ok(PreconditionerKind::Ssor),
            "ilut" | "ilu" => Ok(PreconditionerKind::Ilut),
            other => Err(Error::Config(format!("unknown preconditioner '{other}'"))),
        }
    }
}

/// What to build: kind plus its parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PreconditionerSpec {
    pub kind: PreconditionerKind,
    /// Relaxation for SOR/SSOR; `None` picks the solver-dependent default.
    pub omega: Option<f64>,
    pub ilut_threshold: f64,
}

impl PreconditionerSpec {
    pub const DEFAULT_ILUT_THRESHOLD: f64 = 1e-2;

    pub fn new(kind: PreconditionerKind) -> Self {
        PreconditionerSpec { kind, omega: None, ilut_threshold: Self::DEFAULT_ILUT_THRESHOLD }
    }

    pub fn with_omega(mut self, omega: f64) -> Self {
        self.omega = Some(omega);
        self
    }

    pub fn with_threshold(mut self, threshold: f64) -> Self {
        self.ilut_threshold = threshold;
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SorVariant {
    /// `P = ω⁻¹D + U`.
    Upper,
    /// `P = ω⁻¹D + L`.
    Lower,
}

#[derive(Clone, Debug)]
pub enum Preconditioner {
    None,
    Jacobi { diagonal: Vec<f64> },
    Sor { factor: SparseTriangular, omega: f64 },
    Ssor { lower: SparseTriangular, upper: SparseTriangular, omega: f64 },
    Ilut { lower: SparseTriangular, upper: SparseTriangular, threshold: f64 },
}

fn check_omega(omega: f64) -> Result<()> {
    if omega > 0.0 && omega < 2.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("relaxation parameter must lie in (0, 2), got {omega}")))
    }
}

fn check_diagonal(a: &DenseMatrix) -> Result<Vec<f64>> {
    if !a.is_square() {
        return Err(Error::InvalidArgument("preconditioner needs a square matrix".into()));
    }
    let d = a.diagonal();
    match d.iter().position(|&v| v == 0.0 || !v.is_finite()) {
        Some(i) => Err(Error::ZeroPivot { row: i }),
        None => Ok(d),
    }
}

/// Jacobi from an assembled matrix.
pub fn build_jacobi(a: &DenseMatrix) -> Result<Preconditioner> {
    build_jacobi_from_diagonal(check_diagonal(a)?)
}

/// Jacobi from a diagonal obtained by probing a matrix-free operator.
pub fn build_jacobi_from_diagonal(diagonal: Vec<f64>) -> Result<Preconditioner> {
    if let Some(i) = diagonal.iter().position(|&v| v == 0.0 || !v.is_finite()) {
        return Err(Error::ZeroPivot { row: i });
    }
    Ok(Preconditioner::Jacobi { diagonal })
}

/// SOR with the upper splitting `P = ω⁻¹D + U`.
pub fn build_sor(a: &DenseMatrix, omega: f64) -> Result<Preconditioner> {
    build_sor_variant(a, omega, SorVariant::Upper)
}

pub fn build_sor_variant(a: &DenseMatrix, omega: f64, variant: SorVariant) -> Result<Preconditioner> {
    check_omega(omega)?;
    let d = check_diagonal(a)?;
    let mut p = DenseMatrix::zeros(a.rows(), a.cols());
    for i in 0..a.rows() {
        for j in 0..a.cols() {
            let keep = match variant {
                SorVariant::Upper => j > i,
                SorVariant::Lower => j < i,
            };
            if keep {
                p.set(i, j, a.get(i, j));
            }
        }
        p.set(i, i, d[i] / omega);
    }
    let triangle = match variant {
        SorVariant::Upper => Triangle::Upper,
        SorVariant::Lower => Triangle::Lower,
    };
    Ok(Preconditioner::Sor { factor: SparseTriangular::from_dense(&p, triangle, false)?, omega })
}

pub fn build_ssor(a: &DenseMatrix, omega: f64) -> Result<Preconditioner> {
    check_omega(omega)?;
    let d = check_diagonal(a)?;
    let n = a.rows();
    let mut lower = DenseMatrix::zeros(n, n);
    let mut upper = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..i {
            lower.set(i, j, a.get(i, j));
        }
        lower.set(i, i, d[i] / omega);
        upper.set(i, i, 1.0 / omega);
        for j in i + 1..n {
            upper.set(i, j, a.get(i, j) / d[i]);
        }
    }
    Ok(Preconditioner::Ssor {
        lower: SparseTriangular::from_dense(&lower, Triangle::Lower, false)?,
        upper: SparseTriangular::from_dense(&upper, Triangle::Upper, false)?,
        omega,
    })
}

/// Threshold incomplete LU without pivoting (row-wise IKJ elimination).
///
/// While eliminating row `i`, a multiplier `L̃_ik` is discarded before use
/// when `|L̃_ik| < threshold·‖A_{*k}‖₂ / |Ũ_kk|`; once the row is reduced,
/// each off-diagonal `Ũ_ij` with `|Ũ_ij| < threshold·‖A_{*j}‖₂` is dropped.
/// Diagonal entries are always kept.
pub fn build_ilut(a: &DenseMatrix, threshold: f64) -> Result<Preconditioner> {
    if !(threshold >= 0.0) || !threshold.is_finite() {
        return Err(Error::Config(format!("drop threshold must be >= 0, got {threshold}")));
    }
    if !a.is_square() {
        return Err(Error::InvalidArgument("ILUT needs a square matrix".into()));
    }
    let n = a.rows();
    let col_norms = a.column_norms();
    let mut l_rows: Vec<Vec<(usize, f64)>> = Vec::with_capacity(n);
    let mut u_rows: Vec<Vec<(usize, f64)>> = Vec::with_capacity(n);
    let mut u_diag = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        w.copy_from_slice(a.row(i));
        let mut l_row = Vec::new();
        for k in 0..i {
            if w[k] == 0.0 {
                continue;
            }
            let lik = w[k] / u_diag[k];
            w[k] = 0.0;
            if lik.abs() < threshold * col_norms[k] / u_diag[k].abs() {
                continue;
            }
            l_row.push((k, lik));
            for &(j, ukj) in &u_rows[k] {
                if j > k {
                    w[j] -= lik * ukj;
                }
            }
        }
        if w[i] == 0.0 || !w[i].is_finite() {
            return Err(Error::ZeroPivot { row: i });
        }
        u_diag[i] = w[i];
        let mut u_row = vec![(i, w[i])];
        for j in i + 1..n {
            if w[j] != 0.0 && w[j].abs() >= threshold * col_norms[j] {
                u_row.push((j, w[j]));
            }
        }
        l_rows.push(l_row);
        u_rows.push(u_row);
    }
    Ok(Preconditioner::Ilut {
        lower: SparseTriangular::new(Triangle::Lower, true, CsrMatrix::from_rows(n, l_rows)?)?,
        upper: SparseTriangular::new(Triangle::Upper, false, CsrMatrix::from_rows(n, u_rows)?)?,
        threshold,
    })
}

/// Builds the preconditioner named by `spec` from an assembled matrix.
/// `omega` must already be resolved for SOR/SSOR.
pub fn build(a: &DenseMatrix, spec: &PreconditionerSpec) -> Result<Preconditioner> {
    let omega = spec.omega.unwrap_or(1.0);
    match spec.kind {
        PreconditionerKind::None => Ok(Preconditioner::None),
        PreconditionerKind::Jacobi => build_jacobi(a),
        PreconditionerKind::Sor => build_sor(a, omega),
        PreconditionerKind::Ssor => build_ssor(a, omega),
        PreconditionerKind::Ilut => build_ilut(a, spec.ilut_threshold),
    }
}

impl Preconditioner {
    pub fn kind(&self) -> PreconditionerKind {
        match self {
            Preconditioner::None => PreconditionerKind::None,
            Preconditioner::Jacobi { .. } => PreconditionerKind::Jacobi,
            Preconditioner::Sor { .. } => PreconditionerKind::Sor,
            Preconditioner::Ssor { .. } => PreconditionerKind::Ssor,
            Preconditioner::Ilut { .. } => PreconditionerKind::Ilut,
        }
    }

    /// `v ← P⁻¹ v`.
    pub fn apply_in_place(&self, v: &mut [f64]) {
        match self {
            Preconditioner::None => {}
            Preconditioner::Jacobi { diagonal } => {
                v.iter_mut().zip(diagonal).for_each(|(x, d)| *x /= d);
            }
            Preconditioner::Sor { factor, .. } => factor.solve_in_place(v),
            Preconditioner::Ssor { lower, upper, omega } => {
                lower.solve_in_place(v);
                upper.solve_in_place(v);
                let scale = (2.0 - omega) / omega;
                v.iter_mut().for_each(|x| *x *= scale);
            }
            Preconditioner::Ilut { lower, upper, .. } => {
                lower.solve_in_place(v);
                upper.solve_in_place(v);
            }
        }
    }

    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        if let Some(n) = self.order() {
            check_len(n, v.len())?;
        }
        let mut out = v.to_vec();
        self.apply_in_place(&mut out);
        Ok(out)
    }

    pub fn order(&self) -> Option<usize> {
        match self {
            Preconditioner::None => None,
            Preconditioner::Jacobi { diagonal } => Some(diagonal.len()),
            Preconditioner::Sor { factor, .. } => Some(factor.order()),
            Preconditioner::Ssor { lower, .. } | Preconditioner::Ilut { lower, .. } => Some(lower.order()),
        }
    }

    /// The matrix `P` itself (dense), for checks and spectra.
    pub fn to_dense(&self, n: usize) -> DenseMatrix {
        match self {
            Preconditioner::None => DenseMatrix::identity(n),
            Preconditioner::Jacobi { diagonal } => {
                let mut p = DenseMatrix::zeros(n, n);
                diagonal.iter().enumerate().for_each(|(i, &d)| p.set(i, i, d));
                p
            }
            Preconditioner::Sor { factor, .. } => factor.to_dense(),
            Preconditioner::Ssor { lower, upper, omega } => {
                let mut p = lower.to_dense().matmul(&upper.to_dense()).expect("square factors");
                let scale = omega / (2.0 - omega);
                let data: Vec<f64> = p.data().iter().map(|v| v * scale).collect();
                p = DenseMatrix::from_row_major(n, n, data).expect("same shape");
                p
            }
            Preconditioner::Ilut { lower, upper, .. } => {
                lower.to_dense().matmul(&upper.to_dense()).expect("square factors")
            }
        }
    }

    /// `(L̃, Ũ)` of an ILUT preconditioner.
    pub fn ilut_factors(&self) -> Option<(&SparseTriangular, &SparseTriangular)> {
        match self {
            Preconditioner::Ilut { lower, upper, .. } => Some((lower, upper)),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{distance, norm2};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn scaled_identity(n: usize, s: f64) -> DenseMatrix {
        let mut a = DenseMatrix::identity(n);
        for i in 0..n {
            a.set(i, i, s);
        }
        a
    }

    fn random_dominant(n: usize, seed: u64) -> DenseMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut a = DenseMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                a.set(i, j, rng.gen_range(-1.0..1.0));
            }
            a.set(i, i, n as f64 + rng.gen_range(0.0..1.0));
        }
        a
    }

    #[test]
    fn none_and_jacobi() {
        let v = vec![1.0, -2.0, 3.0];
        assert_eq!(Preconditioner::None.apply(&v).unwrap(), v);
        let p = build_jacobi(&scaled_identity(3, 3.0)).unwrap();
        let got = p.apply(&v).unwrap();
        assert!(distance(&got, &[1.0 / 3.0, -2.0 / 3.0, 1.0]) < 1e-16);
        let p = build_jacobi(&scaled_identity(3, 2.0)).unwrap();
        assert_eq!(p.apply(&v).unwrap(), vec![0.5, -1.0, 1.5]);
        let mut z = DenseMatrix::identity(2);
        z.set(1, 1, 0.0);
        assert!(matches!(build_jacobi(&z), Err(Error::ZeroPivot { row: 1 })));
    }

    #[test]
    fn sor_cases() {
        let d = scaled_identity(3, 4.0);
        let p = build_sor(&d, 1.5).unwrap();
        let got = p.apply(&[1.0, 1.0, 1.0]).unwrap();
        for g in got {
            assert!((g - 1.5 / 4.0).abs() < 1e-15);
        }
        let a = DenseMatrix::from_rows(&[vec![2.0, 1.0], vec![0.0, 2.0]]).unwrap();
        let p = build_sor(&a, 1.0).unwrap();
        assert_eq!(p.apply(&[1.0, 1.0]).unwrap(), vec![0.25, 0.5]);
        // ω = 1: backward Gauss-Seidel, P = D + U.
        let a = random_dominant(5, 9);
        let p = build_sor(&a, 1.0).unwrap().to_dense(5);
        for i in 0..5 {
            for j in 0..5 {
                let expect = if j >= i { a.get(i, j) } else { 0.0 };
                assert_eq!(p.get(i, j), expect);
            }
        }
        assert!(build_sor(&a, 2.0).is_err());
        assert!(build_sor(&a, 0.0).is_err());
    }

    #[test]
    fn ssor_cases() {
        let d = scaled_identity(3, 5.0);
        let p = build_ssor(&d, 1.0).unwrap();
        assert_eq!(p.apply(&[5.0, 10.0, 15.0]).unwrap(), vec![1.0, 2.0, 3.0]);

        // Symmetric tridiagonal, ω = 1: P = (D+L) D⁻¹ (D+U).
        let a = DenseMatrix::from_rows(&[
            vec![4.0, -1.0, 0.0],
            vec![-1.0, 4.0, -1.0],
            vec![0.0, -1.0, 4.0],
        ])
        .unwrap();
        let p = build_ssor(&a, 1.0).unwrap();
        let v = vec![1.0, 2.0, -1.0];
        let mut dl = a.clone();
        let mut du = a.clone();
        let mut dinv = DenseMatrix::zeros(3, 3);
        for i in 0..3 {
            for j in 0..3 {
                if j > i {
                    dl.set(i, j, 0.0);
                }
                if j < i {
                    du.set(i, j, 0.0);
                }
            }
            dinv.set(i, i, 1.0 / a.get(i, i));
        }
        let pm = dl.matmul(&dinv).unwrap().matmul(&du).unwrap();
        let inv = crate::linalg::lu_factor(&pm).unwrap();
        let oracle = inv.solve(&v).unwrap();
        assert!(distance(&p.apply(&v).unwrap(), &oracle) < 1e-14);

        // Composition definition at ω = 1.
        let lower = SparseTriangular::from_dense(&dl, Triangle::Lower, false).unwrap();
        let udu = dinv.matmul(&du).unwrap();
        let upper = SparseTriangular::from_dense(&udu, Triangle::Upper, false).unwrap();
        let two_step = upper.solve(&lower.solve(&v).unwrap()).unwrap();
        assert!(distance(&p.apply(&v).unwrap(), &two_step) < 1e-15);
    }

    #[test]
    fn ilut_exact_without_dropping() {
        let a = random_dominant(30, 4);
        let p = build_ilut(&a, 0.0).unwrap();
        let x: Vec<f64> = (0..30).map(|i| (i as f64).cos()).collect();
        let ax = a.matvec(&x).unwrap();
        let got = p.apply(&ax).unwrap();
        assert!(distance(&got, &x) / norm2(&x) < 1e-10);
    }

    #[test]
    fn ilut_of_diagonal() {
        let mut a = DenseMatrix::zeros(4, 4);
        for i in 0..4 {
            a.set(i, i, i as f64 + 1.0);
        }
        let p = build_ilut(&a, 0.5).unwrap();
        let (l, u) = p.ilut_factors().unwrap();
        assert_eq!(l.to_dense(), DenseMatrix::identity(4));
        assert_eq!(u.to_dense(), a);
    }

    #[test]
    fn ilut_zero_pivot_names_row() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        assert!(matches!(build_ilut(&a, 0.0), Err(Error::ZeroPivot { row: 1 })));
        assert!(build_ilut(&a, -1.0).is_err());
    }

    #[test]
    fn ilut_drops_small_entries() {
        let a = random_dominant(40, 8);
        let exact = build_ilut(&a, 0.0).unwrap();
        let dropped = build_ilut(&a, 1e-1).unwrap();
        let nnz = |p: &Preconditioner| {
            let (l, u) = p.ilut_factors().unwrap();
            l.csr().nnz() + u.csr().nnz()
        };
        assert!(nnz(&dropped) < nnz(&exact));
        let norms = a.column_norms();
        let (_, u) = dropped.ilut_factors().unwrap();
        for (i, j, v) in u.csr().triplets() {
            if i != j {
                assert!(v.abs() >= 1e-1 * norms[j]);
            }
        }
    }

    #[test]
    fn every_variant_inverts_its_matrix() {
        let a = random_dominant(25, 21);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let v: Vec<f64> = (0..25).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let variants = vec![
            Preconditioner::None,
            build_jacobi(&a).unwrap(),
            build_sor(&a, 1.5).unwrap(),
            build_sor_variant(&a, 1.2, SorVariant::Lower).unwrap(),
            build_ssor(&a, 1.5).unwrap(),
            build_ilut(&a, 1e-2).unwrap(),
        ];
        for p in variants {
            let pinv_v = p.apply(&v).unwrap();
            let back = p.to_dense(25).matvec(&pinv_v).unwrap();
            assert!(distance(&back, &v) / norm2(&v) < 1e-10, "{:?}", p.kind());
            // Linearity.
            let w: Vec<f64> = v.iter().map(|x| 2.5 * x).collect();
            let pw = p.apply(&w).unwrap();
            let scaled: Vec<f64> = pinv_v.iter().map(|x| 2.5 * x).collect();
            assert!(distance(&pw, &scaled) <= 1e-13 * norm2(&scaled));
        }
    }

    #[test]
    fn parse_kinds() {
        for k in PreconditionerKind::ALL {
            assert_eq!(k.to_string().parse::<PreconditionerKind>().unwrap(), k);
        }
        assert!("bogus".parse::<PreconditionerKind>().is_err());
    }
}
