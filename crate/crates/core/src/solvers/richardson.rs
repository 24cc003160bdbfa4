use super::{Outcome, Run, SolveReport, SolveStatus, SolverConfig};
use crate::error::{Error, Result};
use crate::operator::LinearOperator;
use crate::preconditioners::Preconditioner;

/// Preconditioned Richardson iteration `xⁿ⁺¹ = xⁿ + P⁻¹(b − A xⁿ)`.
///
/// Any relaxation lives in `P` (SOR/SSOR carry their ω). The residual of
/// each iterate doubles as the next correction, so every iteration costs
/// exactly one operator application.
pub fn richardson(
    op: &dyn LinearOperator,
    b: &[f64],
    precond: &Preconditioner,
    x0: &[f64],
    cfg: &SolverConfig,
) -> Result<SolveReport> {
    let mut run = Run::new(op, b, precond, x0, cfg)?;
    let mut x = x0.to_vec();
    let (mut r, rel) = run.true_residual(&x);
    let mut history = vec![rel];
    if rel < run.tolerance() {
        return Ok(run.finish(super::Method::Richardson, Outcome::new(x, 0, history, SolveStatus::Converged)));
    }
    for it in 1..=run.max_iterations() {
        run.precondition(&mut r);
        x.iter_mut().zip(&r).for_each(|(xi, ci)| *xi += ci);
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence(it));
        }
        let (next, rel) = run.recurrence_residual(&x);
        r = next;
        history.push(rel);
        if rel < run.tolerance() {
            return Ok(run.finish(super::Method::Richardson, Outcome::new(x, it, history, SolveStatus::Converged)));
        }
    }
    let n = run.max_iterations();
    Ok(run.finish(super::Method::Richardson, Outcome::new(x, n, history, SolveStatus::MaxIterations)))
}
