#![allow(dead_code)]

use rtkrylov::solvers::{prepare, PreparedProblem};
use rtkrylov::{
    AssemblyMode, DenseMatrix, FormalSolverKind, Grid, GridSpec, Method, ModelParams, OperatorContext,
    PreconditionerKind, PreconditionerSpec, SolveReport, SolverConfig,
};

pub fn benchmark(n_depth: usize, n_mu: usize, n_nu: usize) -> OperatorContext {
    context(n_depth, n_mu, n_nu, 1e-4, FormalSolverKind::DeloLinear)
}

pub fn context(n_depth: usize, n_mu: usize, n_nu: usize, eps: f64, kind: FormalSolverKind) -> OperatorContext {
    let params = ModelParams::new(eps, 1e-3).unwrap();
    OperatorContext::from_spec(&GridSpec::new(n_depth, n_mu, n_nu), params, kind).unwrap()
}

pub fn assembled(n_depth: usize) -> PreparedProblem {
    prepare(&benchmark(n_depth, 20, 20), AssemblyMode::Assembled)
}

pub fn run(problem: &PreparedProblem, method: Method, kind: PreconditionerKind) -> SolveReport {
    problem
        .solve(&SolverConfig::new(method), &PreconditionerSpec::new(kind))
        .unwrap_or_else(|e| panic!("{method} with {kind}: {e}"))
}

/// Iterations to convergence, `None` when not converged.
pub fn iterations(problem: &PreparedProblem, method: Method, kind: PreconditionerKind) -> Option<usize> {
    let r = run(problem, method, kind);
    r.converged.then_some(r.iterations)
}

/// DELO-linear step coefficients from their power series (small steps)
/// or closed form, independent of the library's switch-over.
fn delo_oracle(delta: f64) -> (f64, f64, f64) {
    let e = (-delta).exp();
    if delta < 0.5 {
        // c_next = Σ (−1)^{n+1} δⁿ/(n+1)!,  c_prev = Σ (−1)^{n+1} n δⁿ/(n+1)!
        let (mut c_next, mut c_prev) = (0.0, 0.0);
        let mut pow = 1.0;
        let mut fact = 1.0;
        for n in 1..30 {
            pow *= delta;
            fact *= (n + 1) as f64;
            let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
            c_next += sign * pow / fact;
            c_prev += sign * n as f64 * pow / fact;
        }
        (e, c_prev, c_next)
    } else {
        let c_next = 1.0 - (1.0 - e) / delta;
        let c_prev = (1.0 - e) * (1.0 + 1.0 / delta) - 1.0;
        (e, c_prev, c_next)
    }
}

fn euler_oracle(delta: f64) -> (f64, f64, f64) {
    (1.0 / (1.0 + delta), 0.0, delta / (1.0 + delta))
}

/// `A = Id − ξ J Λ T` built from explicit dense factors:
///
/// * `T` maps `σ` (length 2N) to `(S_I, S_Q)` for every direction,
/// * `Λ` is the block-diagonal ray operator, each block obtained by
///   unrolling the short-characteristics recurrence into matrix rows,
/// * `J` is the quadrature `Σ_p (w_p φ_p / 2) Σ_m w_m (…)`.
pub fn oracle_matrix(grid: &Grid, params: &ModelParams, kind: FormalSolverKind) -> DenseMatrix {
    let n = grid.tau.len();
    let n_mu = grid.mu_nodes.len();
    let n_nu = grid.nu_nodes.len();
    let sqrt2 = 2f64.sqrt();
    let t1 = |mu: f64| (3.0 * mu * mu - 1.0) / (2.0 * sqrt2);
    let t2 = |mu: f64| -3.0 * (1.0 - mu * mu) / (2.0 * sqrt2);

    // T: rows (m, k, stokes) with stokes 0 = I, 1 = Q.
    let src_dim = 2 * n * n_mu;
    let mut t = DenseMatrix::zeros(src_dim, 2 * n);
    for (m, &mu) in grid.mu_nodes.iter().enumerate() {
        for k in 0..n {
            let row = (m * n + k) * 2;
            t.set(row, 2 * k, 1.0);
            t.set(row, 2 * k + 1, t1(mu));
            t.set(row + 1, 2 * k + 1, t2(mu));
        }
    }

    // Λ: rows (m, p, k, stokes), columns (m, k, stokes).
    let field_dim = 2 * n * n_mu * n_nu;
    let mut lambda = DenseMatrix::zeros(field_dim, src_dim);
    for (m, &mu) in grid.mu_nodes.iter().enumerate() {
        for (p, &phi) in grid.phi.iter().enumerate() {
            // rows[k] = coefficients of I_k in terms of S_0..S_{n-1}
            let mut rows = vec![vec![0.0; n]; n];
            let coeff = |j: usize| {
                let delta = (grid.tau[j + 1] - grid.tau[j]).abs() * phi / mu.abs();
                match kind {
                    FormalSolverKind::DeloLinear => delo_oracle(delta),
                    FormalSolverKind::ImplicitEuler => euler_oracle(delta),
                }
            };
            if mu > 0.0 {
                for k in (0..n - 1).rev() {
                    let (e, cp, cn) = coeff(k);
                    let mut r: Vec<f64> = rows[k + 1].iter().map(|v| e * v).collect();
                    r[k + 1] += cp;
                    r[k] += cn;
                    rows[k] = r;
                }
            } else {
                for k in 1..n {
                    let (e, cp, cn) = coeff(k - 1);
                    let mut r: Vec<f64> = rows[k - 1].iter().map(|v| e * v).collect();
                    r[k - 1] += cp;
                    r[k] += cn;
                    rows[k] = r;
                }
            }
            for k in 0..n {
                for j in 0..n {
                    for s in 0..2 {
                        let row = ((m * n_nu + p) * n + k) * 2 + s;
                        let col = (m * n + j) * 2 + s;
                        lambda.set(row, col, rows[k][j]);
                    }
                }
            }
        }
    }

    // J: rows σ-index, columns (m, p, k, stokes).
    let mut jm = DenseMatrix::zeros(2 * n, field_dim);
    for (m, &mu) in grid.mu_nodes.iter().enumerate() {
        for p in 0..n_nu {
            let c = grid.nu_weights[p] * grid.phi[p] / 2.0 * grid.mu_weights[m];
            for k in 0..n {
                let col = ((m * n_nu + p) * n + k) * 2;
                jm.set(2 * k, col, c);
                jm.set(2 * k + 1, col, c * t1(mu));
                jm.set(2 * k + 1, col + 1, c * t2(mu));
            }
        }
    }

    let jlt = jm.matmul(&lambda).unwrap().matmul(&t).unwrap();
    let xi = 1.0 - params.epsilon;
    let mut a = DenseMatrix::identity(2 * n);
    for i in 0..2 * n {
        for j in 0..2 * n {
            a.set(i, j, a.get(i, j) - xi * jlt.get(i, j));
        }
    }
    a
}

pub fn max_abs_diff(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
    a.data().iter().zip(b.data()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn relative_error(x: &[f64], reference: &[f64]) -> f64 {
    let num: f64 = x.iter().zip(reference).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    let den: f64 = reference.iter().map(|v| v * v).sum::<f64>().sqrt();
    num / den
}
