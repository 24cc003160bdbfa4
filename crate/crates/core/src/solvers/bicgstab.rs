use super::{is_breakdown, Best, Method, Outcome, Run, SolveReport, SolveStatus, SolverConfig};
use crate::error::Result;
use crate::linalg::{dot, norm2};
use crate::operator::LinearOperator;
use crate::preconditioners::Preconditioner;

/// Preconditioned BiCGSTAB (shadow residual `r̂ = r⁰`).
///
/// The true residual is checked after the first half of each step and
/// again at its end. An exit at the half step still counts the iteration
/// and sets `half_step_exit`; such a step used one operator application
/// instead of two.
pub fn bicgstab(
    op: &dyn LinearOperator,
    b: &[f64],
    precond: &Preconditioner,
    x0: &[f64],
    cfg: &SolverConfig,
) -> Result<SolveReport> {
    let mut run = Run::new(op, b, precond, x0, cfg)?;
    let n = run.dim();
    let tol = run.tolerance();

    let mut x = x0.to_vec();
    let (mut r, rel) = run.true_residual(&x);
    let mut history = vec![rel];
    let mut best = Best::new(&x, rel);
    if rel < tol {
        return Ok(run.finish(Method::Bicgstab, Outcome::new(x, 0, history, SolveStatus::Converged)));
    }
    let r_hat = r.clone();
    let r_hat_norm = norm2(&r_hat);
    let mut p = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut t = vec![0.0; n];
    let (mut rho_old, mut alpha, mut omega) = (1.0, 1.0, 1.0);

    for it in 1..=run.max_iterations() {
        let rho = dot(&r_hat, &r);
        if is_breakdown(rho, r_hat_norm * norm2(&r)) {
            return Ok(breakdown(run, best, it - 1, history));
        }
        if it == 1 {
            p.copy_from_slice(&r);
        } else {
            let beta = (rho / rho_old) * (alpha / omega);
            for i in 0..n {
                p[i] = r[i] + beta * (p[i] - omega * v[i]);
            }
        }
        let mut p_hat = p.clone();
        run.precondition(&mut p_hat);
        run.matvec(&p_hat, &mut v);
        let denom = dot(&r_hat, &v);
        if is_breakdown(denom, r_hat_norm * norm2(&v)) {
            return Ok(breakdown(run, best, it - 1, history));
        }
        alpha = rho / denom;
        let mut s = r.clone();
        for i in 0..n {
            s[i] -= alpha * v[i];
            x[i] += alpha * p_hat[i];
        }
        let (_, rel_half) = run.true_residual(&x);
        best.offer(&x, rel_half);
        if rel_half < tol {
            history.push(rel_half);
            let mut outcome = Outcome::new(x, it, history, SolveStatus::Converged);
            outcome.half_step_exit = true;
            return Ok(run.finish(Method::Bicgstab, outcome));
        }

        let mut s_hat = s.clone();
        run.precondition(&mut s_hat);
        run.matvec(&s_hat, &mut t);
        let tt = dot(&t, &t);
        omega = if tt > 0.0 { dot(&t, &s) / tt } else { 0.0 };
        if is_breakdown(omega, 1.0) {
            history.push(rel_half);
            return Ok(breakdown(run, best, it, history));
        }
        for i in 0..n {
            x[i] += omega * s_hat[i];
            r[i] = s[i] - omega * t[i];
        }
        let (_, rel) = run.true_residual(&x);
        best.offer(&x, rel);
        history.push(rel);
        if rel < tol {
            return Ok(run.finish(Method::Bicgstab, Outcome::new(x, it, history, SolveStatus::Converged)));
        }
        rho_old = rho;
    }
    let iterations = run.max_iterations();
    Ok(run.finish(Method::Bicgstab, Outcome::new(best.x, iterations, history, SolveStatus::MaxIterations)))
}

fn breakdown(run: Run<'_>, best: Best, iterations: usize, history: Vec<f64>) -> SolveReport {
    run.finish(Method::Bicgstab, Outcome::new(best.x, iterations, history, SolveStatus::Breakdown))
}
