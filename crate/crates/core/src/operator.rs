//! The system matrix `A = Id − J Λ T` as a matrix-free operator, its
//! column-by-column assembly, and the right-hand side `b = J t + c`.

use crate::discretization::{Grid, GridSpec, ModelParams};
use crate::error::{check_len, Error, Result};
use crate::linalg::DenseMatrix;
use crate::rt::{
    accumulate_direction, apply_j, apply_lambda, apply_t, boundary_field_with, fold_frequency,
    pol_tensor, sweep, FormalSolverKind, RayTable, SigmaVector, StokesField,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Anything that can compute `y = A x`.
pub trait LinearOperator: Sync {
    fn dim(&self) -> usize;
    fn apply_into(&self, x: &[f64], y: &mut [f64]);

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim()];
        self.apply_into(x, &mut y);
        y
    }
}

impl LinearOperator for DenseMatrix {
    fn dim(&self) -> usize {
        self.rows()
    }

    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        self.matvec_into(x, y);
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AssemblyMode {
    MatrixFree,
    Assembled,
}

impl fmt::Display for AssemblyMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AssemblyMode::MatrixFree => "matrix-free",
            AssemblyMode::Assembled => "assembled",
        })
    }
}

impl FromStr for AssemblyMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "matrix-free" | "matrixfree" => Ok(AssemblyMode::MatrixFree),
            "assembled" => Ok(AssemblyMode::Assembled),
            other => Err(Error::Config(format!("unknown assembly mode '{other}'"))),
        }
    }
}

/// Everything needed to apply `A` without storing it.
#[derive(Clone, Debug)]
pub struct OperatorContext {
    grid: Grid,
    params: ModelParams,
    kind: FormalSolverKind,
    bottom_intensity: f64,
    rays: RayTable,
    tensors: Vec<(f64, f64)>,
    freq_weights: Vec<f64>,
}

impl OperatorContext {
    pub fn new(grid: Grid, params: ModelParams, kind: FormalSolverKind) -> Result<Self> {
        params.validate()?;
        if grid.n_depth() < 2 {
            return Err(Error::Config("operator needs at least 2 depth points".into()));
        }
        if grid.mu_nodes.contains(&0.0) {
            return Err(Error::Config("angular grid contains mu = 0".into()));
        }
        let rays = RayTable::new(&grid, kind);
        let tensors = grid.mu_nodes.iter().map(|&mu| pol_tensor(mu)).collect();
        let freq_weights = grid.nu_weights.iter().zip(&grid.phi).map(|(w, p)| w * p / 2.0).collect();
        Ok(OperatorContext { grid, params, kind, bottom_intensity: 1.0, rays, tensors, freq_weights })
    }

    /// Builds the grid and the operator in one go.
    pub fn from_spec(spec: &GridSpec, params: ModelParams, kind: FormalSolverKind) -> Result<Self> {
        let grid = Grid::new(spec, &params)?;
        OperatorContext::new(grid, params, kind)
    }

    /// Intensity entering at the bottom for upward rays (1 for the benchmark).
    pub fn with_bottom_intensity(mut self, intensity: f64) -> Self {
        self.bottom_intensity = intensity;
        self
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn kind(&self) -> FormalSolverKind {
        self.kind
    }

    pub fn dimension(&self) -> usize {
        2 * self.grid.n_depth()
    }

    /// `σ_out = σ_in − ξ [J̄⁰₀(τ₁), J̄²₀(τ₁), …]` computed from one formal
    /// solution with zero incoming radiation.
    pub fn apply_a(&self, sigma: &SigmaVector) -> Result<SigmaVector> {
        check_len(self.dimension(), sigma.as_slice().len())?;
        let mut out = vec![0.0; self.dimension()];
        self.apply_core(sigma.as_slice(), None, &mut out);
        SigmaVector::new(out)
    }

    /// `A e_j`, sweeping each ray only from the source node downstream.
    pub fn apply_a_point_source(&self, j: usize) -> Result<SigmaVector> {
        if j >= self.dimension() {
            return Err(Error::InvalidArgument(format!("unit vector index {j} out of range {}", self.dimension())));
        }
        let mut x = vec![0.0; self.dimension()];
        x[j] = 1.0;
        let mut out = vec![0.0; self.dimension()];
        self.apply_core(&x, Some(j / 2), &mut out);
        SigmaVector::new(out)
    }

    /// Fused `Id − J Λ T`. With `point = Some(k0)` the input must vanish
    /// away from depth node `k0`, and rays skip their upwind zero segment.
    fn apply_core(&self, x: &[f64], point: Option<usize>, out: &mut [f64]) {
        let grid = &self.grid;
        let (n, n_mu, n_nu) = (grid.n_depth(), grid.n_mu(), grid.n_nu());
        let mut source_i = vec![0.0; n * n_mu];
        let mut source_q = vec![0.0; n * n_mu];
        for (m, &(t1, t2)) in self.tensors.iter().enumerate() {
            for k in 0..n {
                let (s00, s20) = (x[2 * k], x[2 * k + 1]);
                source_i[m * n + k] = s00 + t1 * s20;
                source_q[m * n + k] = t2 * s20;
            }
        }
        let mut ray_i = vec![0.0; n];
        let mut ray_q = vec![0.0; n];
        let mut inner0 = vec![0.0; n];
        let mut inner2 = vec![0.0; n];
        let mut j0 = vec![0.0; n];
        let mut j2 = vec![0.0; n];
        for p in 0..n_nu {
            inner0.fill(0.0);
            inner2.fill(0.0);
            for m in 0..n_mu {
                let (steps, upward) = self.rays.ray(m, p);
                let s_i = &source_i[m * n..(m + 1) * n];
                let s_q = &source_q[m * n..(m + 1) * n];
                ray_i.fill(0.0);
                ray_q.fill(0.0);
                let (first, range) = match (point, upward) {
                    (None, true) => (n - 1, 0..n),
                    (None, false) => (0, 0..n),
                    (Some(k0), true) => (k0, 0..k0 + 1),
                    (Some(k0), false) => (k0, k0..n),
                };
                sweep(steps, upward, s_i, s_q, (0.0, 0.0), &mut ray_i, &mut ray_q, first);
                accumulate_direction(grid.mu_weights[m], self.tensors[m], &ray_i, &ray_q, &mut inner0, &mut inner2, range);
            }
            fold_frequency(self.freq_weights[p], &inner0, &inner2, &mut j0, &mut j2, 0..n);
        }
        let xi = self.params.xi();
        for k in 0..n {
            out[2 * k] = x[2 * k] - xi * j0[k];
            out[2 * k + 1] = x[2 * k + 1] - xi * j2[k];
        }
    }

    /// Boundary term `t`.
    pub fn boundary_field(&self) -> StokesField {
        boundary_field_with(&self.grid, self.kind, self.bottom_intensity)
    }

    /// `b = J t + c` with `c = [ε, 0, ε, 0, …]`.
    pub fn build_rhs(&self) -> SigmaVector {
        let jt = apply_j(&self.boundary_field(), &self.grid, &self.params)
            .expect("boundary field matches the grid");
        let mut b = jt.into_inner();
        for k in 0..self.grid.n_depth() {
            b[2 * k] += self.params.epsilon;
        }
        SigmaVector::new(b).expect("even length")
    }

    /// Explicit `A`, column `j` being `A e_j`. With `point_source` the
    /// reduced sweeps of [`Self::apply_a_point_source`] are used.
    pub fn assemble_a_with(&self, point_source: bool) -> DenseMatrix {
        let n = self.dimension();
        let columns: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|j| {
                let mut x = vec![0.0; n];
                x[j] = 1.0;
                let mut col = vec![0.0; n];
                self.apply_core(&x, point_source.then_some(j / 2), &mut col);
                col
            })
            .collect();
        DenseMatrix::from_columns(n, &columns).expect("columns have the operator dimension")
    }

    pub fn assemble_a(&self) -> DenseMatrix {
        self.assemble_a_with(false)
    }

    /// `diag(A)` from unit-vector probes, without assembling `A`.
    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dimension())
            .into_par_iter()
            .map(|j| {
                let mut x = vec![0.0; self.dimension()];
                x[j] = 1.0;
                let mut col = vec![0.0; self.dimension()];
                self.apply_core(&x, Some(j / 2), &mut col);
                col[j]
            })
            .collect()
    }

    /// Full Stokes field `Λ T σ + t` for a given source vector.
    pub fn stokes_field(&self, sigma: &SigmaVector) -> Result<StokesField> {
        let source = apply_t(sigma, &self.grid)?;
        let mut field = apply_lambda(&source, &self.grid, self.kind)?;
        field.add(&self.boundary_field())?;
        Ok(field)
    }
}

impl LinearOperator for OperatorContext {
    fn dim(&self) -> usize {
        self.dimension()
    }

    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.dimension());
        self.apply_core(x, None, y);
    }
}
