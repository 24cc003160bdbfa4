//! Richardson, GMRES, BiCGSTAB and CGS over an abstract operator and
//! preconditioner, plus a dense LU reference path.
//!
//! Every method stops on the true relative residual `‖b − A x‖₂ / ‖b‖₂`.
//! Operator applications are counted in two buckets: `matvec_count` for the
//! ones the recurrence itself needs, and `residual_matvec_count` for the
//! extra products spent on evaluating the stopping criterion.

mod bicgstab;
mod cgs;
mod gmres;
mod richardson;

pub use bicgstab::bicgstab;
pub use cgs::cgs;
pub use gmres::gmres;
pub use richardson::richardson;

use crate::error::{check_len, Error, Result};
use crate::linalg::{lu_factor, norm2, DenseMatrix};
use crate::operator::{AssemblyMode, LinearOperator, OperatorContext};
use crate::preconditioners::{self, Preconditioner, PreconditionerKind, PreconditionerSpec};
use crate::rt::SigmaVector;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;
use std::time::Instant;

/// Relative size under which an inner product counts as a breakdown.
pub const BREAKDOWN_THRESHOLD: f64 = 1e-30;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Richardson,
    Gmres,
    Bicgstab,
    Cgs,
    /// Dense LU with partial pivoting on the assembled matrix.
    Lu,
}

impl Method {
    pub const ITERATIVE: [Method; 4] = [Method::Richardson, Method::Gmres, Method::Bicgstab, Method::Cgs];

    /// Row label used in tables.
    pub fn label(self) -> &'static str {
        match self {
            Method::Richardson => "Richardson",
            Method::Gmres => "GMRES",
            Method::Bicgstab => "BICGSTAB",
            Method::Cgs => "CGS",
            Method::Lu => "LU",
        }
    }

    pub fn is_krylov(self) -> bool {
        matches!(self, Method::Gmres | Method::Bicgstab | Method::Cgs)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Richardson => "richardson",
            Method::Gmres => "gmres",
            Method::Bicgstab => "bicgstab",
            Method::Cgs => "cgs",
            Method::Lu => "lu",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "richardson" => Ok(Method::Richardson),
            "gmres" => Ok(Method::Gmres),
            "bicgstab" => Ok(Method::Bicgstab),
            "cgs" => Ok(Method::Cgs),
            "lu" | "direct" => Ok(Method::Lu),
            other => Err(Error::Config(format!("unknown method '{other}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub method: Method,
    pub tolerance: f64,
    pub max_iterations: usize,
    /// GMRES restart length; `None` runs full GMRES.
    pub restart: Option<usize>,
    /// SOR/SSOR relaxation; `None` means 1.5 for Richardson, 1.0 otherwise.
    pub omega: Option<f64>,
}

impl SolverConfig {
    pub const DEFAULT_TOLERANCE: f64 = 1e-6;
    pub const DEFAULT_MAX_ITERATIONS: usize = 10_000;

    pub fn new(method: Method) -> Self {
        SolverConfig {
            method,
            tolerance: Self::DEFAULT_TOLERANCE,
            max_iterations: Self::DEFAULT_MAX_ITERATIONS,
            restart: None,
            omega: None,
        }
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn with_max_iterations(mut self, max_iterations: usize) -> Self {
        self.max_iterations = max_iterations;
        self
    }

    pub fn with_restart(mut self, restart: usize) -> Self {
        self.restart = Some(restart);
        self
    }

    pub fn with_omega(mut self, omega: f64) -> Self {
        self.omega = Some(omega);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) || !self.tolerance.is_finite() {
            return Err(Error::Config(format!("tolerance must be positive, got {}", self.tolerance)));
        }
        if self.max_iterations == 0 {
            return Err(Error::Config("max_iterations must be at least 1".into()));
        }
        if self.restart == Some(0) {
            return Err(Error::Config("restart length must be at least 1".into()));
        }
        Ok(())
    }

    /// Relaxation used for an SOR/SSOR preconditioner under this method.
    pub fn resolved_omega(&self, spec: &PreconditionerSpec) -> f64 {
        spec.omega.or(self.omega).unwrap_or(match self.method {
            Method::Richardson => 1.5,
            _ => 1.0,
        })
    }
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig::new(Method::Gmres)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Converged,
    MaxIterations,
    Breakdown,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub method: Method,
    pub preconditioner: PreconditionerKind,
    pub omega: Option<f64>,
    pub solution: Vec<f64>,
    pub iterations: usize,
    /// BiCGSTAB only: the last counted iteration stopped after its first half.
    pub half_step_exit: bool,
    /// `‖b − A xⁿ‖₂ / ‖b‖₂` for n = 0..=iterations.
    pub residual_history: Vec<f64>,
    /// GMRES only: least-squares residual of the preconditioned system,
    /// relative to `‖P⁻¹ r⁰‖₂`.
    pub preconditioned_residual_history: Vec<f64>,
    pub matvec_count: usize,
    pub residual_matvec_count: usize,
    pub preconditioner_apply_count: usize,
    pub converged: bool,
    pub status: SolveStatus,
    /// Seconds spent building the preconditioner (or factoring, for LU).
    pub setup_time: f64,
    /// Seconds spent iterating.
    pub wall_time: f64,
}

impl SolveReport {
    pub fn final_residual(&self) -> f64 {
        *self.residual_history.last().expect("history holds the initial residual")
    }

    pub fn sigma(&self) -> Result<SigmaVector> {
        SigmaVector::new(self.solution.clone())
    }

    pub fn history_csv(&self) -> String {
        let mut out = String::from("iteration,relative_residual\n");
        for (i, r) in self.residual_history.iter().enumerate() {
            out.push_str(&format!("{i},{r:.16e}\n"));
        }
        out
    }
}

/// Bookkeeping shared by the iterative methods.
pub(crate) struct Run<'a> {
    op: &'a dyn LinearOperator,
    b: &'a [f64],
    b_norm: f64,
    precond: &'a Preconditioner,
    cfg: &'a SolverConfig,
    matvecs: usize,
    residual_matvecs: usize,
    applies: usize,
    start: Instant,
}

impl<'a> Run<'a> {
    pub(crate) fn new(
        op: &'a dyn LinearOperator,
        b: &'a [f64],
        precond: &'a Preconditioner,
        x0: &[f64],
        cfg: &'a SolverConfig,
    ) -> Result<Self> {
        cfg.validate()?;
        check_len(op.dim(), b.len())?;
        check_len(op.dim(), x0.len())?;
        if let Some(n) = precond.order() {
            check_len(op.dim(), n)?;
        }
        Ok(Run {
            op,
            b,
            b_norm: norm2(b),
            precond,
            cfg,
            matvecs: 0,
            residual_matvecs: 0,
            applies: 0,
            start: Instant::now(),
        })
    }

    pub(crate) fn dim(&self) -> usize {
        self.b.len()
    }

    pub(crate) fn tolerance(&self) -> f64 {
        self.cfg.tolerance
    }

    pub(crate) fn max_iterations(&self) -> usize {
        self.cfg.max_iterations
    }

    pub(crate) fn matvec(&mut self, x: &[f64], y: &mut [f64]) {
        self.matvecs += 1;
        self.op.apply_into(x, y);
    }

    pub(crate) fn precondition(&mut self, v: &mut [f64]) {
        self.applies += 1;
        self.precond.apply_in_place(v);
    }

    pub(crate) fn relative(&self, r_norm: f64) -> f64 {
        if self.b_norm == 0.0 {
            r_norm
        } else {
            r_norm / self.b_norm
        }
    }

    /// `b − A x` and its relative norm, counted as a residual check.
    pub(crate) fn true_residual(&mut self, x: &[f64]) -> (Vec<f64>, f64) {
        self.residual_matvecs += 1;
        let mut r = vec![0.0; self.dim()];
        self.op.apply_into(x, &mut r);
        for (ri, bi) in r.iter_mut().zip(self.b) {
            *ri = bi - *ri;
        }
        let rel = self.relative(norm2(&r));
        (r, rel)
    }

    /// Residual counted as part of the recurrence (Richardson needs it anyway).
    pub(crate) fn recurrence_residual(&mut self, x: &[f64]) -> (Vec<f64>, f64) {
        let (r, rel) = self.true_residual(x);
        self.residual_matvecs -= 1;
        self.matvecs += 1;
        (r, rel)
    }

    pub(crate) fn finish(self, method: Method, outcome: Outcome) -> SolveReport {
        let converged = outcome.status == SolveStatus::Converged;
        SolveReport {
            method,
            preconditioner: self.precond.kind(),
            omega: None,
            solution: outcome.solution,
            iterations: outcome.iterations,
            half_step_exit: outcome.half_step_exit,
            residual_history: outcome.history,
            preconditioned_residual_history: outcome.preconditioned_history,
            matvec_count: self.matvecs,
            residual_matvec_count: self.residual_matvecs,
            preconditioner_apply_count: self.applies,
            converged,
            status: outcome.status,
            setup_time: 0.0,
            wall_time: self.start.elapsed().as_secs_f64(),
        }
    }
}

pub(crate) struct Outcome {
    pub solution: Vec<f64>,
    pub iterations: usize,
    pub history: Vec<f64>,
    pub preconditioned_history: Vec<f64>,
    pub status: SolveStatus,
    pub half_step_exit: bool,
}

impl Outcome {
    pub(crate) fn new(solution: Vec<f64>, iterations: usize, history: Vec<f64>, status: SolveStatus) -> Self {
        Outcome { solution, iterations, history, preconditioned_history: Vec::new(), status, half_step_exit: false }
    }
}

/// Keeps the iterate with the smallest true residual seen so far.
pub(crate) struct Best {
    pub x: Vec<f64>,
    pub residual: f64,
}

impl Best {
    pub(crate) fn new(x: &[f64], residual: f64) -> Self {
        Best { x: x.to_vec(), residual }
    }

    pub(crate) fn offer(&mut self, x: &[f64], residual: f64) {
        if residual < self.residual {
            self.residual = residual;
            self.x.copy_from_slice(x);
        }
    }
}

pub(crate) fn is_breakdown(value: f64, scale: f64) -> bool {
    !value.is_finite() || value.abs() <= BREAKDOWN_THRESHOLD * scale
}

/// Runs `cfg.method` on an already built preconditioner. [`Method::Lu`]
/// needs an explicit matrix and is rejected here; see [`solve_lu`].
pub fn solve_with(
    op: &dyn LinearOperator,
    b: &[f64],
    precond: &Preconditioner,
    x0: &[f64],
    cfg: &SolverConfig,
) -> Result<SolveReport> {
    match cfg.method {
        Method::Richardson => richardson(op, b, precond, x0, cfg),
        Method::Gmres => gmres(op, b, precond, x0, cfg),
        Method::Bicgstab => bicgstab(op, b, precond, x0, cfg),
        Method::Cgs => cgs(op, b, precond, x0, cfg),
        Method::Lu => Err(Error::Unsupported("the LU path needs an assembled matrix".into())),
    }
}

/// Direct solve; reported as a single iteration.
pub fn solve_lu(a: &DenseMatrix, b: &[f64], x0: &[f64]) -> Result<SolveReport> {
    let cfg = SolverConfig::new(Method::Lu);
    let none = Preconditioner::None;
    let mut run = Run::new(a, b, &none, x0, &cfg)?;
    let (_, r0) = run.true_residual(x0);
    let t = Instant::now();
    let lu = lu_factor(a)?;
    let setup = t.elapsed().as_secs_f64();
    let x = lu.solve(b)?;
    let (_, r1) = run.true_residual(&x);
    let status = if r1 < cfg.tolerance { SolveStatus::Converged } else { SolveStatus::Breakdown };
    let mut report = run.finish(Method::Lu, Outcome::new(x, 1, vec![r0, r1], status));
    report.setup_time = setup;
    Ok(report)
}

/// The initial guess `σ⁰₀ ≡ 1`, `σ²₀ ≡ 0`.
pub fn initial_guess(n_depth: usize) -> Vec<f64> {
    SigmaVector::uniform(n_depth, 1.0, 0.0).into_inner()
}

/// A benchmark problem with its right-hand side built once, reusable for
/// any number of (method, preconditioner) solves.
pub struct PreparedProblem {
    ctx: OperatorContext,
    mode: AssemblyMode,
    rhs: Vec<f64>,
    x0: Vec<f64>,
    matrix: OnceLock<DenseMatrix>,
    diagonal: OnceLock<Vec<f64>>,
}

pub fn prepare(ctx: &OperatorContext, mode: AssemblyMode) -> PreparedProblem {
    let problem = PreparedProblem {
        ctx: ctx.clone(),
        mode,
        rhs: ctx.build_rhs().into_inner(),
        x0: initial_guess(ctx.grid().n_depth()),
        matrix: OnceLock::new(),
        diagonal: OnceLock::new(),
    };
    if mode == AssemblyMode::Assembled {
        problem.matrix();
    }
    problem
}

impl PreparedProblem {
    pub fn context(&self) -> &OperatorContext {
        &self.ctx
    }

    pub fn mode(&self) -> AssemblyMode {
        self.mode
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    pub fn initial_guess(&self) -> &[f64] {
        &self.x0
    }

    /// The assembled `A`, built on first use. In matrix-free mode this is
    /// only touched by preconditioners that need the entries of `A`.
    pub fn matrix(&self) -> &DenseMatrix {
        self.matrix.get_or_init(|| self.ctx.assemble_a_with(true))
    }

    /// The operator used for products: the dense matrix or the sweeps.
    pub fn operator(&self) -> &dyn LinearOperator {
        match self.mode {
            AssemblyMode::Assembled => self.matrix(),
            AssemblyMode::MatrixFree => &self.ctx,
        }
    }

    /// Builds `P` for a fully resolved spec (`omega` set for SOR/SSOR).
    pub fn build_preconditioner(&self, spec: &PreconditionerSpec) -> Result<Preconditioner> {
        match (spec.kind, self.mode) {
            (PreconditionerKind::Jacobi, AssemblyMode::MatrixFree) => {
                let d = self.diagonal.get_or_init(|| self.ctx.diagonal());
                preconditioners::build_jacobi_from_diagonal(d.clone())
            }
            _ => preconditioners::build(self.matrix(), spec),
        }
    }

    pub fn solve(&self, cfg: &SolverConfig, spec: &PreconditionerSpec) -> Result<SolveReport> {
        cfg.validate()?;
        if cfg.method == Method::Lu {
            return solve_lu(self.matrix(), &self.rhs, &self.x0);
        }
        let mut spec = *spec;
        let omega = spec.kind.uses_omega().then(|| cfg.resolved_omega(&spec));
        spec.omega = omega;
        let t = Instant::now();
        let precond = self.build_preconditioner(&spec)?;
        let setup = t.elapsed().as_secs_f64();
        let mut report = solve_with(self.operator(), &self.rhs, &precond, &self.x0, cfg)?;
        report.omega = omega;
        report.setup_time = setup;
        Ok(report)
    }
}

/// Builds `b`, starts from `σ⁰₀ ≡ 1, σ²₀ ≡ 0` and runs the requested solver.
pub fn solve(
    ctx: &OperatorContext,
    cfg: &SolverConfig,
    spec: &PreconditionerSpec,
    mode: AssemblyMode,
) -> Result<SolveReport> {
    prepare(ctx, mode).solve(cfg, spec)
}
