//! The three linear maps of the discrete problem: source construction `T`,
//! formal solution `Λ` (plus the boundary term `t`), and the reduction `J`
//! to radiation-field tensors.
//!
//! Depth is the frequency-integrated optical depth `τ`, increasing
//! downward: node 0 is the top of the slab, node `N_s − 1` the bottom.
//! Rays with `μ > 0` travel upward and are swept bottom to top; rays with
//! `μ < 0` travel downward and are swept top to bottom. Along a ray
//! between nodes `k` and `k + 1` the monochromatic optical path is
//! `δ = |τ_{k+1} − τ_k| φ(ν) / |μ|`.

use crate::discretization::{Grid, ModelParams};
use crate::error::{check_len, Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::SQRT_2;
use std::fmt;
use std::str::FromStr;

/// Unknown vector `[σ⁰₀(τ₁), σ²₀(τ₁), σ⁰₀(τ₂), …, σ²₀(τ_{N_s})]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SigmaVector(Vec<f64>);

impl SigmaVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if !values.len().is_multiple_of(2) || values.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "sigma vector length must be a positive even number, got {}",
                values.len()
            )));
        }
        Ok(SigmaVector(values))
    }

    pub fn zeros(n_depth: usize) -> Self {
        SigmaVector(vec![0.0; 2 * n_depth])
    }

    /// σ⁰₀ ≡ `s00`, σ²₀ ≡ `s20` at every depth.
    pub fn uniform(n_depth: usize, s00: f64, s20: f64) -> Self {
        let mut v = Vec::with_capacity(2 * n_depth);
        for _ in 0..n_depth {
            v.push(s00);
            v.push(s20);
        }
        SigmaVector(v)
    }

    pub fn from_components(s00: &[f64], s20: &[f64]) -> Result<Self> {
        check_len(s00.len(), s20.len())?;
        SigmaVector::new(s00.iter().zip(s20).flat_map(|(&a, &b)| [a, b]).collect())
    }

    pub fn n_depth(&self) -> usize {
        self.0.len() / 2
    }

    pub fn s00(&self, k: usize) -> f64 {
        self.0[2 * k]
    }

    pub fn s20(&self, k: usize) -> f64 {
        self.0[2 * k + 1]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl AsRef<[f64]> for SigmaVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// Source functions `S_I`, `S_Q` on (depth, direction), stored per direction.
#[derive(Clone, Debug, PartialEq)]
pub struct SourceField {
    n_depth: usize,
    n_mu: usize,
    s_i: Vec<f64>,
    s_q: Vec<f64>,
}

impl SourceField {
    pub fn zeros(n_depth: usize, n_mu: usize) -> Self {
        SourceField { n_depth, n_mu, s_i: vec![0.0; n_depth * n_mu], s_q: vec![0.0; n_depth * n_mu] }
    }

    pub fn n_depth(&self) -> usize {
        self.n_depth
    }

    pub fn n_mu(&self) -> usize {
        self.n_mu
    }

    pub fn s_i(&self, k: usize, m: usize) -> f64 {
        self.s_i[m * self.n_depth + k]
    }

    pub fn s_q(&self, k: usize, m: usize) -> f64 {
        self.s_q[m * self.n_depth + k]
    }

    pub fn set(&mut self, k: usize, m: usize, s_i: f64, s_q: f64) {
        self.s_i[m * self.n_depth + k] = s_i;
        self.s_q[m * self.n_depth + k] = s_q;
    }

    /// Depth profiles `(S_I, S_Q)` for direction `m`.
    pub fn direction(&self, m: usize) -> (&[f64], &[f64]) {
        let r = m * self.n_depth..(m + 1) * self.n_depth;
        (&self.s_i[r.clone()], &self.s_q[r])
    }
}

/// Stokes `I`, `Q` on (depth, direction, frequency), stored per ray.
#[derive(Clone, Debug, PartialEq)]
pub struct StokesField {
    n_depth: usize,
    n_mu: usize,
    n_nu: usize,
    i: Vec<f64>,
    q: Vec<f64>,
}

impl StokesField {
    pub fn zeros(n_depth: usize, n_mu: usize, n_nu: usize) -> Self {
        let len = n_depth * n_mu * n_nu;
        StokesField { n_depth, n_mu, n_nu, i: vec![0.0; len], q: vec![0.0; len] }
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.n_depth, self.n_mu, self.n_nu)
    }

    fn offset(&self, m: usize, p: usize) -> usize {
        (m * self.n_nu + p) * self.n_depth
    }

    pub fn i(&self, k: usize, m: usize, p: usize) -> f64 {
        self.i[self.offset(m, p) + k]
    }

    pub fn q(&self, k: usize, m: usize, p: usize) -> f64 {
        self.q[self.offset(m, p) + k]
    }

    pub fn set(&mut self, k: usize, m: usize, p: usize, i: f64, q: f64) {
        let o = self.offset(m, p) + k;
        self.i[o] = i;
        self.q[o] = q;
    }

    pub fn ray(&self, m: usize, p: usize) -> (&[f64], &[f64]) {
        let o = self.offset(m, p);
        (&self.i[o..o + self.n_depth], &self.q[o..o + self.n_depth])
    }

    pub fn ray_mut(&mut self, m: usize, p: usize) -> (&mut [f64], &mut [f64]) {
        let o = self.offset(m, p);
        let n = self.n_depth;
        (&mut self.i[o..o + n], &mut self.q[o..o + n])
    }

    /// Elementwise sum, used to add the boundary term `t` to `Λ S`.
    pub fn add(&mut self, other: &StokesField) -> Result<()> {
        check_len(self.i.len(), other.i.len())?;
        self.i.iter_mut().zip(&other.i).for_each(|(a, b)| *a += b);
        self.q.iter_mut().zip(&other.q).for_each(|(a, b)| *a += b);
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.i.iter().chain(&self.q).all(|v| v.is_finite())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FormalSolverKind {
    ImplicitEuler,
    DeloLinear,
}

impl fmt::Display for FormalSolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FormalSolverKind::ImplicitEuler => "implicit-euler",
            FormalSolverKind::DeloLinear => "delo-linear",
        })
    }
}

impl FromStr for FormalSolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "implicit-euler" | "euler" => Ok(FormalSolverKind::ImplicitEuler),
            "delo-linear" | "delo" => Ok(FormalSolverKind::DeloLinear),
            other => Err(Error::Config(format!("unknown formal solver '{other}'"))),
        }
    }
}

/// Below this optical step the DELO-linear weights use their Taylor series.
pub const DELO_TAYLOR_SWITCH: f64 = 1e-4;

/// One integration step `I_next = attenuation·I_prev + c_prev·S_prev + c_next·S_next`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepCoefficients {
    pub attenuation: f64,
    pub c_prev: f64,
    pub c_next: f64,
}

impl FormalSolverKind {
    pub fn step(self, delta: f64) -> StepCoefficients {
        match self {
            FormalSolverKind::ImplicitEuler => {
                let inv = 1.0 / (1.0 + delta);
                StepCoefficients { attenuation: inv, c_prev: 0.0, c_next: delta * inv }
            }
            FormalSolverKind::DeloLinear => {
                let attenuation = (-delta).exp();
                let (c_prev, c_next) = if delta < DELO_TAYLOR_SWITCH {
                    let d2 = delta * delta;
                    let d3 = d2 * delta;
                    (delta / 2.0 - d2 / 3.0 + d3 / 8.0, delta / 2.0 - d2 / 6.0 + d3 / 24.0)
                } else {
                    let one_minus_e = -(-delta).exp_m1();
                    let c_next = 1.0 - one_minus_e / delta;
                    (one_minus_e * (1.0 + 1.0 / delta) - 1.0, c_next)
                };
                StepCoefficients { attenuation, c_prev, c_next }
            }
        }
    }
}

/// Polarization tensor components `(T²₀,₁(μ), T²₀,₂(μ))` at `γ = 0`.
pub fn pol_tensor(mu: f64) -> (f64, f64) {
    let m2 = 3.0 * mu * mu;
    (SQRT_2 * (m2 - 1.0) / 4.0, SQRT_2 * (m2 - 3.0) / 4.0)
}

/// `S = T σ`.
pub fn apply_t(sigma: &SigmaVector, grid: &Grid) -> Result<SourceField> {
    let n = grid.n_depth();
    check_len(2 * n, sigma.as_slice().len())?;
    let mut out = SourceField::zeros(n, grid.n_mu());
    for (m, &mu) in grid.mu_nodes.iter().enumerate() {
        let (t1, t2) = pol_tensor(mu);
        for k in 0..n {
            let (s00, s20) = (sigma.s00(k), sigma.s20(k));
            out.set(k, m, s00 + t1 * s20, t2 * s20);
        }
    }
    Ok(out)
}

/// Step coefficients of every ray, indexed by ray `(m, p)` and depth
/// interval `j` (between nodes `j` and `j + 1`).
#[derive(Clone, Debug)]
pub(crate) struct RayTable {
    n_depth: usize,
    n_nu: usize,
    upward: Vec<bool>,
    steps: Vec<StepCoefficients>,
}

impl RayTable {
    pub(crate) fn new(grid: &Grid, kind: FormalSolverKind) -> Self {
        let n = grid.n_depth();
        let intervals: Vec<f64> = grid.tau.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
        let mut steps = Vec::with_capacity(grid.n_mu() * grid.n_nu() * (n - 1));
        for &mu in &grid.mu_nodes {
            for &phi in &grid.phi {
                let scale = phi / mu.abs();
                steps.extend(intervals.iter().map(|&dt| kind.step(dt * scale)));
            }
        }
        RayTable {
            n_depth: n,
            n_nu: grid.n_nu(),
            upward: grid.mu_nodes.iter().map(|&mu| mu > 0.0).collect(),
            steps,
        }
    }

    pub(crate) fn ray(&self, m: usize, p: usize) -> (&[StepCoefficients], bool) {
        let len = self.n_depth - 1;
        let o = (m * self.n_nu + p) * len;
        (&self.steps[o..o + len], self.upward[m])
    }
}

/// Integrates one ray. `first` is the first node at which the solution can
/// be nonzero when the incoming radiation and all sources upwind of it
/// vanish; pass the boundary node to sweep the whole ray. Entries upwind
/// of `first` are left untouched (callers zero them).
#[allow(clippy::too_many_arguments)]
pub(crate) fn sweep(
    steps: &[StepCoefficients],
    upward: bool,
    s_i: &[f64],
    s_q: &[f64],
    incoming: (f64, f64),
    out_i: &mut [f64],
    out_q: &mut [f64],
    first: usize,
) {
    let n = out_i.len();
    if upward {
        if first == n - 1 {
            out_i[n - 1] = incoming.0;
            out_q[n - 1] = incoming.1;
        }
        for k in (0..=first.min(n - 2)).rev() {
            let c = steps[k];
            out_i[k] = c.attenuation * out_i[k + 1] + c.c_prev * s_i[k + 1] + c.c_next * s_i[k];
            out_q[k] = c.attenuation * out_q[k + 1] + c.c_prev * s_q[k + 1] + c.c_next * s_q[k];
        }
    } else {
        if first == 0 {
            out_i[0] = incoming.0;
            out_q[0] = incoming.1;
        }
        for k in first.max(1)..n {
            let c = steps[k - 1];
            out_i[k] = c.attenuation * out_i[k - 1] + c.c_prev * s_i[k - 1] + c.c_next * s_i[k];
            out_q[k] = c.attenuation * out_q[k - 1] + c.c_prev * s_q[k - 1] + c.c_next * s_q[k];
        }
    }
}

/// Formal solution along the ray `(μ, ν_p)` for given depth profiles of the
/// sources. `boundary` is the incoming `(I, Q)` at the upwind end.
#[allow(clippy::too_many_arguments)]
pub fn formal_solve_ray(
    source_i: &[f64],
    source_q: &[f64],
    mu: f64,
    nu_index: usize,
    grid: &Grid,
    kind: FormalSolverKind,
    boundary: (f64, f64),
) -> Result<(Vec<f64>, Vec<f64>)> {
    if mu == 0.0 || !mu.is_finite() {
        return Err(Error::InvalidArgument(format!("ray direction must be nonzero, got mu={mu}")));
    }
    let n = grid.n_depth();
    check_len(n, source_i.len())?;
    check_len(n, source_q.len())?;
    let phi = *grid.phi.get(nu_index).ok_or_else(|| {
        Error::InvalidArgument(format!("frequency index {nu_index} out of range"))
    })?;
    let steps: Vec<StepCoefficients> = grid
        .tau
        .windows(2)
        .map(|w| kind.step((w[1] - w[0]).abs() * phi / mu.abs()))
        .collect();
    let upward = mu > 0.0;
    let mut out_i = vec![0.0; n];
    let mut out_q = vec![0.0; n];
    let first = if upward { n - 1 } else { 0 };
    sweep(&steps, upward, source_i, source_q, boundary, &mut out_i, &mut out_q, first);
    Ok((out_i, out_q))
}

fn solve_all_rays(
    source: &SourceField,
    grid: &Grid,
    kind: FormalSolverKind,
    incoming_upward: (f64, f64),
) -> Result<StokesField> {
    let (n, n_mu, n_nu) = (grid.n_depth(), grid.n_mu(), grid.n_nu());
    check_len(n, source.n_depth())?;
    check_len(n_mu, source.n_mu())?;
    let table = RayTable::new(grid, kind);
    let mut field = StokesField::zeros(n, n_mu, n_nu);
    for m in 0..n_mu {
        let (s_i, s_q) = source.direction(m);
        for p in 0..n_nu {
            let (steps, upward) = table.ray(m, p);
            let (out_i, out_q) = field.ray_mut(m, p);
            let (incoming, first) =
                if upward { (incoming_upward, n - 1) } else { ((0.0, 0.0), 0) };
            sweep(steps, upward, s_i, s_q, incoming, out_i, out_q, first);
        }
    }
    Ok(field)
}

/// `Λ S` with zero incoming radiation on every ray.
pub fn apply_lambda(source: &SourceField, grid: &Grid, kind: FormalSolverKind) -> Result<StokesField> {
    solve_all_rays(source, grid, kind, (0.0, 0.0))
}

/// Radiation transmitted from the boundaries, `t`: `I = 1`, `Q = 0`
/// entering at the bottom for `μ > 0`, nothing entering at the top.
pub fn boundary_field(grid: &Grid, kind: FormalSolverKind) -> StokesField {
    boundary_field_with(grid, kind, 1.0)
}

/// As [`boundary_field`] with a configurable bottom intensity.
pub fn boundary_field_with(grid: &Grid, kind: FormalSolverKind, bottom_intensity: f64) -> StokesField {
    let zero = SourceField::zeros(grid.n_depth(), grid.n_mu());
    solve_all_rays(&zero, grid, kind, (bottom_intensity, 0.0))
        .expect("zero source field always matches the grid")
}

/// Angular and spectral quadrature of a Stokes field, scaled by `ξ`:
/// returns `ξ [J̄⁰₀(τ₁), J̄²₀(τ₁), …]`. The thermal term `ε` is not included.
///
/// Summation order is fixed: outer loop over frequency, inner over direction.
pub fn apply_j(field: &StokesField, grid: &Grid, params: &ModelParams) -> Result<SigmaVector> {
    let (n, n_mu, n_nu) = (grid.n_depth(), grid.n_mu(), grid.n_nu());
    if field.shape() != (n, n_mu, n_nu) {
        return Err(Error::DimensionMismatch {
            expected: n * n_mu * n_nu,
            found: field.i.len(),
        });
    }
    let tensors: Vec<(f64, f64)> = grid.mu_nodes.iter().map(|&mu| pol_tensor(mu)).collect();
    let mut j0 = vec![0.0; n];
    let mut j2 = vec![0.0; n];
    let mut inner0 = vec![0.0; n];
    let mut inner2 = vec![0.0; n];
    for p in 0..n_nu {
        inner0.fill(0.0);
        inner2.fill(0.0);
        for m in 0..n_mu {
            let (i, q) = field.ray(m, p);
            accumulate_direction(grid.mu_weights[m], tensors[m], i, q, &mut inner0, &mut inner2, 0..n);
        }
        let cp = grid.nu_weights[p] * grid.phi[p] / 2.0;
        fold_frequency(cp, &inner0, &inner2, &mut j0, &mut j2, 0..n);
    }
    Ok(scale_and_interleave(params.xi(), &j0, &j2))
}

#[inline]
pub(crate) fn accumulate_direction(
    weight: f64,
    (t1, t2): (f64, f64),
    i: &[f64],
    q: &[f64],
    inner0: &mut [f64],
    inner2: &mut [f64],
    range: std::ops::Range<usize>,
) {
    for k in range {
        inner0[k] += weight * i[k];
        inner2[k] += weight * (t1 * i[k] + t2 * q[k]);
    }
}

#[inline]
pub(crate) fn fold_frequency(
    cp: f64,
    inner0: &[f64],
    inner2: &[f64],
    j0: &mut [f64],
    j2: &mut [f64],
    range: std::ops::Range<usize>,
) {
    for k in range {
        j0[k] += cp * inner0[k];
        j2[k] += cp * inner2[k];
    }
}

pub(crate) fn scale_and_interleave(xi: f64, j0: &[f64], j2: &[f64]) -> SigmaVector {
    SigmaVector(j0.iter().zip(j2).flat_map(|(&a, &b)| [xi * a, xi * b]).collect())
}
