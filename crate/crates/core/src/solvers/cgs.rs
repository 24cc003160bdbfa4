use super::{is_breakdown, Best, Method, Outcome, Run, SolveReport, SolveStatus, SolverConfig};
use crate::error::Result;
use crate::linalg::{dot, norm2};
use crate::operator::LinearOperator;
use crate::preconditioners::Preconditioner;

/// Preconditioned conjugate gradient squared, shadow residual `r̂ = r⁰`.
/// Two operator and two preconditioner applications per iteration.
pub fn cgs(
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
        return Ok(run.finish(Method::Cgs, Outcome::new(x, 0, history, SolveStatus::Converged)));
    }
    let r_hat = r.clone();
    let r_hat_norm = norm2(&r_hat);
    let mut u = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut q = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut rho_old = 1.0;

    for it in 1..=run.max_iterations() {
        let rho = dot(&r_hat, &r);
        if is_breakdown(rho, r_hat_norm * norm2(&r)) {
            return Ok(breakdown(run, best, it - 1, history));
        }
        if it == 1 {
            u.copy_from_slice(&r);
            p.copy_from_slice(&r);
        } else {
            let beta = rho / rho_old;
            for i in 0..n {
                u[i] = r[i] + beta * q[i];
                p[i] = u[i] + beta * (q[i] + beta * p[i]);
            }
        }
        let mut p_hat = p.clone();
        run.precondition(&mut p_hat);
        run.matvec(&p_hat, &mut v);
        let denom = dot(&r_hat, &v);
        if is_breakdown(denom, r_hat_norm * norm2(&v)) {
            return Ok(breakdown(run, best, it - 1, history));
        }
        let alpha = rho / denom;
        let mut u_hat = vec![0.0; n];
        for i in 0..n {
            q[i] = u[i] - alpha * v[i];
            u_hat[i] = u[i] + q[i];
        }
        run.precondition(&mut u_hat);
        run.matvec(&u_hat, &mut v);
        for i in 0..n {
            x[i] += alpha * u_hat[i];
            r[i] -= alpha * v[i];
        }
        let (_, rel) = run.true_residual(&x);
        history.push(rel);
        best.offer(&x, rel);
        if rel < tol {
            return Ok(run.finish(Method::Cgs, Outcome::new(x, it, history, SolveStatus::Converged)));
        }
        if !rel.is_finite() {
            return Ok(breakdown(run, best, it, history));
        }
        rho_old = rho;
    }
    let iterations = run.max_iterations();
    Ok(run.finish(Method::Cgs, Outcome::new(best.x, iterations, history, SolveStatus::MaxIterations)))
}

fn breakdown(run: Run<'_>, best: Best, iterations: usize, history: Vec<f64>) -> SolveReport {
    run.finish(Method::Cgs, Outcome::new(best.x, iterations, history, SolveStatus::Breakdown))
}
