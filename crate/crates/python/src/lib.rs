//! Python bindings: grids, the transfer operator and the solvers.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use rtkrylov::solvers::prepare;
use rtkrylov::{
    AssemblyMode, Error, FormalSolverKind, GridSpec, LinearOperator, Method, ModelParams, OperatorContext,
    PreconditionerKind, PreconditionerSpec, SolverConfig,
};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Config(_)
        | Error::DimensionMismatch { .. }
        | Error::InvalidArgument(_)
        | Error::Unsupported(_) => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

/// Area-normalized Voigt profile at reduced frequency `x`, damping `a`.
#[pyfunction]
fn voigt_profile(x: f64, a: f64) -> PyResult<f64> {
    if !(a >= 0.0) {
        return Err(PyValueError::new_err("damping must be >= 0"));
    }
    Ok(rtkrylov::voigt::voigt_profile(x, a))
}

/// Gauss-Legendre nodes and weights on [-1, 1].
#[pyfunction]
fn gauss_legendre(n: usize) -> PyResult<(Vec<f64>, Vec<f64>)> {
    rtkrylov::discretization::gauss_legendre(n).map_err(py_err)
}

/// The benchmark system `A σ = b` on a given grid.
#[pyclass(name = "Operator", frozen)]
struct PyOperator {
    ctx: OperatorContext,
}

#[pymethods]
impl PyOperator {
    #[new]
    #[pyo3(signature = (n_depth, n_mu = 20, n_nu = None, epsilon = 1e-4, damping = 1e-3, formal_solver = "delo-linear"))]
    fn new(
        n_depth: usize,
        n_mu: usize,
        n_nu: Option<usize>,
        epsilon: f64,
        damping: f64,
        formal_solver: &str,
    ) -> PyResult<Self> {
        let kind: FormalSolverKind = formal_solver.parse().map_err(py_err)?;
        let params = ModelParams::new(epsilon, damping).map_err(py_err)?;
        let spec = GridSpec::new(n_depth, n_mu, n_nu.unwrap_or(n_mu));
        let ctx = OperatorContext::from_spec(&spec, params, kind).map_err(py_err)?;
        Ok(PyOperator { ctx })
    }

    #[getter]
    fn dimension(&self) -> usize {
        self.ctx.dimension()
    }

    #[getter]
    fn tau(&self) -> Vec<f64> {
        self.ctx.grid().tau.clone()
    }

    #[getter]
    fn profile_mass(&self) -> f64 {
        self.ctx.grid().profile_mass()
    }

    /// Matrix-free `A x`.
    fn apply(&self, x: Vec<f64>) -> PyResult<Vec<f64>> {
        if x.len() != self.ctx.dimension() {
            return Err(py_err(Error::DimensionMismatch { expected: self.ctx.dimension(), found: x.len() }));
        }
        Ok(LinearOperator::apply(&self.ctx, &x))
    }

    /// `A` as a list of rows.
    fn assemble(&self) -> Vec<Vec<f64>> {
        let a = self.ctx.assemble_a();
        (0..a.rows()).map(|i| a.row(i).to_vec()).collect()
    }

    fn rhs(&self) -> Vec<f64> {
        self.ctx.build_rhs().into_inner()
    }

    /// Solves the system and returns the report as a dict.
    #[pyo3(signature = (method = "gmres", preconditioner = "none", tolerance = 1e-6, max_iterations = 10000, omega = None, matrix_free = false, ilut_threshold = 1e-2))]
    #[allow(clippy::too_many_arguments)]
    fn solve<'py>(
        &self,
        py: Python<'py>,
        method: &str,
        preconditioner: &str,
        tolerance: f64,
        max_iterations: usize,
        omega: Option<f64>,
        matrix_free: bool,
        ilut_threshold: f64,
    ) -> PyResult<Bound<'py, PyDict>> {
        let method: Method = method.parse().map_err(py_err)?;
        let kind: PreconditionerKind = preconditioner.parse().map_err(py_err)?;
        let mut cfg = SolverConfig::new(method).with_tolerance(tolerance).with_max_iterations(max_iterations);
        cfg.omega = omega;
        let spec = PreconditionerSpec::new(kind).with_threshold(ilut_threshold);
        let mode = if matrix_free { AssemblyMode::MatrixFree } else { AssemblyMode::Assembled };
        let ctx = &self.ctx;
        let report = py.detach(|| prepare(ctx, mode).solve(&cfg, &spec)).map_err(py_err)?;

        let d = PyDict::new(py);
        d.set_item("method", report.method.to_string())?;
        d.set_item("preconditioner", report.preconditioner.to_string())?;
        d.set_item("omega", report.omega)?;
        d.set_item("converged", report.converged)?;
        d.set_item("status", format!("{:?}", report.status))?;
        d.set_item("iterations", report.iterations)?;
        d.set_item("half_step_exit", report.half_step_exit)?;
        d.set_item("matvec_count", report.matvec_count)?;
        d.set_item("residual_matvec_count", report.residual_matvec_count)?;
        d.set_item("preconditioner_apply_count", report.preconditioner_apply_count)?;
        d.set_item("wall_time", report.wall_time)?;
        d.set_item("residual_history", report.residual_history)?;
        d.set_item("solution", report.solution)?;
        Ok(d)
    }
}

#[pymodule]
fn pyrtkrylov(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(voigt_profile, m)?)?;
    m.add_function(wrap_pyfunction!(gauss_legendre, m)?)?;
    m.add_class::<PyOperator>()?;
    Ok(())
}
