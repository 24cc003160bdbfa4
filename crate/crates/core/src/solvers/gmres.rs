use super::{is_breakdown, Best, Method, Outcome, Run, SolveReport, SolveStatus, SolverConfig};
use crate::error::Result;
use crate::linalg::{axpy, dot, norm2};
use crate::operator::LinearOperator;
use crate::preconditioners::Preconditioner;

/// Left-preconditioned GMRES: Arnoldi with modified Gram–Schmidt on
/// `P⁻¹A`, Givens rotations for the least-squares problem.
///
/// Alongside the basis `V` the raw products `A V` are kept, so the true
/// residual of the candidate `x⁰ + V y` is `r⁰ − (A V) y` and the stopping
/// test needs no extra operator application. Once it passes, the residual
/// is confirmed with one explicit product; if rounding has left it above
/// the tolerance the method restarts from the candidate.
pub fn gmres(
    op: &dyn LinearOperator,
    b: &[f64],
    precond: &Preconditioner,
    x0: &[f64],
    cfg: &SolverConfig,
) -> Result<SolveReport> {
    let mut run = Run::new(op, b, precond, x0, cfg)?;
    let n = run.dim();
    let tol = run.tolerance();
    let max_it = run.max_iterations();
    let cycle_len = cfg.restart.unwrap_or(n).clamp(1, n.max(1));

    let mut x = x0.to_vec();
    let (mut r, rel) = run.true_residual(&x);
    let mut history = vec![rel];
    let mut pre_history = vec![1.0];
    let mut best = Best::new(&x, rel);
    if rel < tol {
        return Ok(finish(run, x, 0, history, pre_history, SolveStatus::Converged));
    }

    let mut iterations = 0;
    let mut beta0 = None;
    loop {
        let mut z = r.clone();
        run.precondition(&mut z);
        let beta = norm2(&z);
        if is_breakdown(beta, 1.0) {
            return Ok(finish(run, best.x, iterations, history, pre_history, SolveStatus::Breakdown));
        }
        let beta0 = *beta0.get_or_insert(beta);
        let mut basis = vec![scaled(&z, 1.0 / beta)];
        let mut a_basis: Vec<Vec<f64>> = Vec::new();
        // Upper-triangular factor, column-wise, after rotation.
        let mut rcols: Vec<Vec<f64>> = Vec::new();
        let mut rotations: Vec<(f64, f64)> = Vec::new();
        let mut g = vec![beta];

        for j in 0..cycle_len {
            iterations += 1;

            let mut av = vec![0.0; n];
            run.matvec(&basis[j], &mut av);
            let mut w = av.clone();
            run.precondition(&mut w);
            let scale = norm2(&w);
            let mut h = vec![0.0; j + 2];
            for (i, v) in basis.iter().enumerate() {
                h[i] = dot(&w, v);
                axpy(-h[i], v, &mut w);
            }
            h[j + 1] = norm2(&w);
            a_basis.push(av);

            for (i, &(c, s)) in rotations.iter().enumerate() {
                let (hi, hk) = (h[i], h[i + 1]);
                h[i] = c * hi + s * hk;
                h[i + 1] = -s * hi + c * hk;
            }
            let (c, s) = givens(h[j], h[j + 1]);
            h[j] = c * h[j] + s * h[j + 1];
            rotations.push((c, s));
            let gj = g[j];
            g[j] = c * gj;
            g.push(-s * gj);
            let lucky = is_breakdown(h[j + 1], scale);
            h.truncate(j + 1);
            rcols.push(h);
            pre_history.push(g[j + 1].abs() / beta0);

            let y = back_substitute(&rcols, &g[..=j]);
            let mut cand_r = r.clone();
            for (yi, avi) in y.iter().zip(&a_basis) {
                axpy(-yi, avi, &mut cand_r);
            }
            let rel = run.relative(norm2(&cand_r));
            history.push(rel);

            let end_of_cycle = rel < tol || lucky || j + 1 == cycle_len || iterations == max_it;
            if end_of_cycle {
                let mut x_new = x.clone();
                for (yi, vi) in y.iter().zip(&basis) {
                    axpy(*yi, vi, &mut x_new);
                }
                let (r_new, rel_new) = run.true_residual(&x_new);
                *history.last_mut().expect("nonempty") = rel_new;
                best.offer(&x_new, rel_new);
                if rel_new < tol {
                    return Ok(finish(run, x_new, iterations, history, pre_history, SolveStatus::Converged));
                }
                if iterations == max_it {
                    return Ok(finish(run, best.x, iterations, history, pre_history, SolveStatus::MaxIterations));
                }
                x = x_new;
                r = r_new;
                break;
            }
            let hn = norm2(&w);
            basis.push(scaled(&w, 1.0 / hn));
        }
    }
}

fn finish(
    run: Run<'_>,
    x: Vec<f64>,
    iterations: usize,
    history: Vec<f64>,
    pre_history: Vec<f64>,
    status: SolveStatus,
) -> SolveReport {
    let mut outcome = Outcome::new(x, iterations, history, status);
    outcome.preconditioned_history = pre_history;
    run.finish(Method::Gmres, outcome)
}

fn scaled(v: &[f64], s: f64) -> Vec<f64> {
    v.iter().map(|x| x * s).collect()
}

fn givens(a: f64, b: f64) -> (f64, f64) {
    if b == 0.0 {
        (1.0, 0.0)
    } else {
        let r = a.hypot(b);
        (a / r, b / r)
    }
}

fn back_substitute(rcols: &[Vec<f64>], g: &[f64]) -> Vec<f64> {
    let m = g.len();
    let mut y = g.to_vec();
    for i in (0..m).rev() {
        y[i] /= rcols[i][i];
        for k in 0..i {
            y[k] -= rcols[i][k] * y[i];
        }
    }
    y
}
