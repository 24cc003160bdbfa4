//! Benchmark harness behind the `rtkrylov` binary: sweeps over grids,
//! methods and preconditioners, iteration tables, matrix exports and
//! solution profiles.

mod config;

pub use config::{ExperimentConfig, GridSize};

use crate::error::{Error, Result};
use crate::linalg::{matrix_market, DenseMatrix};
use crate::operator::{AssemblyMode, OperatorContext};
use crate::preconditioners::{Preconditioner, PreconditionerKind};
use crate::solvers::{prepare, Method, PreparedProblem, SolveReport};
use serde::Serialize;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::str::FromStr;

/// One (size, method, preconditioner) run.
#[derive(Clone, Debug, Serialize)]
pub struct CellResult {
    pub size: GridSize,
    pub method: Method,
    pub preconditioner: PreconditionerKind,
    pub formal_solver: String,
    pub assembly: AssemblyMode,
    pub profile_mass: f64,
    pub report: Option<SolveReport>,
    /// Set when the solver returned an error instead of a report.
    pub error: Option<String>,
}

impl CellResult {
    pub fn converged(&self) -> bool {
        self.report.as_ref().is_some_and(|r| r.converged)
    }

    pub fn iterations(&self) -> Option<usize> {
        self.report.as_ref().filter(|r| r.converged).map(|r| r.iterations)
    }

    pub fn stem(&self) -> String {
        format!("{}_{}_{}", self.method, self.preconditioner, self.size.tag())
    }
}

#[derive(Debug)]
pub struct ExperimentOutput {
    pub cells: Vec<CellResult>,
    pub files: Vec<PathBuf>,
}

impl ExperimentOutput {
    pub fn all_converged(&self) -> bool {
        self.cells.iter().all(CellResult::converged)
    }

    pub fn cell(&self, method: Method, preconditioner: PreconditionerKind, size: GridSize) -> Option<&CellResult> {
        self.cells
            .iter()
            .find(|c| c.method == method && c.preconditioner == preconditioner && c.size == size)
    }
}

pub fn operator_for(cfg: &ExperimentConfig, size: GridSize) -> Result<OperatorContext> {
    OperatorContext::from_spec(&cfg.grid_spec(size), cfg.params.clone(), cfg.formal_solver)
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Config(format!("cannot create {}: {e}", dir.display())))
}

fn write_file(path: PathBuf, contents: &str, files: &mut Vec<PathBuf>) -> Result<()> {
    fs::write(&path, contents)?;
    files.push(path);
    Ok(())
}

/// Runs every cell of the sweep and writes one report JSON plus one
/// residual-history CSV per cell. Solver errors are recorded in the cell,
/// not propagated.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    ensure_dir(&cfg.output_dir)?;
    let mut cells = Vec::new();
    let mut files = Vec::new();
    for &size in &cfg.sizes {
        let ctx = operator_for(cfg, size)?;
        let problem = prepare(&ctx, cfg.assembly);
        for &preconditioner in &cfg.preconditioners {
            for &method in &cfg.methods {
                let cell = run_cell(cfg, &problem, size, method, preconditioner);
                let stem = cell.stem();
                write_file(cfg.output_dir.join(format!("{stem}.json")), &serde_json::to_string_pretty(&cell)?, &mut files)?;
                if let Some(report) = &cell.report {
                    write_file(cfg.output_dir.join(format!("{stem}.csv")), &report.history_csv(), &mut files)?;
                }
                cells.push(cell);
            }
        }
    }
    Ok(ExperimentOutput { cells, files })
}

fn run_cell(
    cfg: &ExperimentConfig,
    problem: &PreparedProblem,
    size: GridSize,
    method: Method,
    preconditioner: PreconditionerKind,
) -> CellResult {
    let result = problem.solve(&cfg.solver_config(method), &cfg.preconditioner_spec(preconditioner));
    let (report, error) = match result {
        Ok(r) => (Some(r), None),
        Err(e) => (None, Some(e.to_string())),
    };
    CellResult {
        size,
        method,
        preconditioner,
        formal_solver: cfg.formal_solver.to_string(),
        assembly: cfg.assembly,
        profile_mass: problem.context().grid().profile_mass(),
        report,
        error,
    }
}

/// Column label of a size, naming only what varies across the sweep.
fn column_labels(sizes: &[GridSize]) -> Vec<String> {
    let depth_varies = sizes.iter().any(|s| s.n_depth != sizes[0].n_depth);
    let angles_vary = sizes.iter().any(|s| (s.n_mu, s.n_nu) != (sizes[0].n_mu, sizes[0].n_nu));
    sizes
        .iter()
        .map(|s| match (depth_varies, angles_vary) {
            (true, false) => format!("N_s={}", s.n_depth),
            (false, true) if s.n_mu == s.n_nu => format!("N_mu=N_nu={}", s.n_mu),
            (false, true) => format!("N_mu={};N_nu={}", s.n_mu, s.n_nu),
            _ => format!("N_s={};N_mu={};N_nu={}", s.n_depth, s.n_mu, s.n_nu),
        })
        .collect()
}

/// Iteration tables, one per preconditioner: rows are methods, columns are
/// grid sizes, `-` marks a cell that did not converge.
pub fn render_tables(cfg: &ExperimentConfig, cells: &[CellResult]) -> BTreeMap<PreconditionerKind, String> {
    let labels = column_labels(&cfg.sizes);
    let mut index: BTreeMap<(PreconditionerKind, Method, GridSize), Option<usize>> = BTreeMap::new();
    for c in cells {
        index.insert((c.preconditioner, c.method, c.size), c.iterations());
    }
    let mut tables = BTreeMap::new();
    for &p in &cfg.preconditioners {
        let mut out = String::from("method");
        for l in &labels {
            write!(out, ",{l}").unwrap();
        }
        out.push('\n');
        for &m in &cfg.methods {
            out.push_str(m.label());
            for &s in &cfg.sizes {
                match index.get(&(p, m, s)).copied().flatten() {
                    Some(n) => write!(out, ",{n}").unwrap(),
                    None => out.push_str(",-"),
                }
            }
            out.push('\n');
        }
        tables.insert(p, out);
    }
    tables
}

/// Runs the sweep and writes `table_<preconditioner>.csv` for each
/// preconditioner next to the per-cell outputs.
pub fn table(cfg: &ExperimentConfig) -> Result<(ExperimentOutput, BTreeMap<PreconditionerKind, String>)> {
    let mut output = run_experiment(cfg)?;
    let tables = render_tables(cfg, &output.cells);
    for (p, text) in &tables {
        write_file(cfg.output_dir.join(format!("table_{p}.csv")), text, &mut output.files)?;
    }
    Ok((output, tables))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExportTarget {
    A,
    PinvA,
    Ilut,
}

impl FromStr for ExportTarget {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "a" => Ok(ExportTarget::A),
            "pinva" | "pinv_a" | "pinv-a" => Ok(ExportTarget::PinvA),
            "ilut" | "ilu" => Ok(ExportTarget::Ilut),
            other => Err(Error::Config(format!("unknown export target '{other}' (expected A, PinvA or ilut)"))),
        }
    }
}

fn write_mm(path: PathBuf, files: &mut Vec<PathBuf>, write: impl FnOnce(&mut BufWriter<fs::File>) -> Result<()>) -> Result<()> {
    let mut f = BufWriter::new(fs::File::create(&path)?);
    write(&mut f)?;
    std::io::Write::flush(&mut f)?;
    files.push(path);
    Ok(())
}

/// `P⁻¹A`, column by column.
pub fn preconditioned_matrix(a: &DenseMatrix, p: &Preconditioner) -> DenseMatrix {
    let cols: Vec<Vec<f64>> = (0..a.cols())
        .map(|j| {
            let mut c = a.column(j);
            p.apply_in_place(&mut c);
            c
        })
        .collect();
    DenseMatrix::from_columns(a.rows(), &cols).expect("square")
}

/// Writes Matrix Market files for every grid size of the config. `A` and
/// `P⁻¹A` go out in array format, ILUT factors in coordinate format.
pub fn export(cfg: &ExperimentConfig, target: ExportTarget) -> Result<Vec<PathBuf>> {
    if cfg.assembly == AssemblyMode::MatrixFree {
        return Err(Error::Unsupported("matrix export needs assembly = \"assembled\"".into()));
    }
    ensure_dir(&cfg.output_dir)?;
    let mut files = Vec::new();
    for &size in &cfg.sizes {
        let ctx = operator_for(cfg, size)?;
        let problem = prepare(&ctx, AssemblyMode::Assembled);
        let a = problem.matrix();
        let tag = size.tag();
        match target {
            ExportTarget::A => {
                write_mm(cfg.output_dir.join(format!("A_{tag}.mtx")), &mut files, |f| matrix_market::write_array(f, a))?;
            }
            ExportTarget::PinvA => {
                for &kind in &cfg.preconditioners {
                    let mut spec = cfg.preconditioner_spec(kind);
                    if kind.uses_omega() {
                        spec.omega = Some(cfg.solver_config(cfg.methods[0]).resolved_omega(&spec));
                    }
                    let p = problem.build_preconditioner(&spec)?;
                    let pa = preconditioned_matrix(a, &p);
                    write_mm(cfg.output_dir.join(format!("PinvA_{kind}_{tag}.mtx")), &mut files, |f| {
                        matrix_market::write_array(f, &pa)
                    })?;
                }
            }
            ExportTarget::Ilut => {
                let p = crate::preconditioners::build_ilut(a, cfg.ilut_threshold)?;
                let (l, u) = p.ilut_factors().expect("ILUT");
                let n = a.rows();
                let mut l_entries = Vec::with_capacity(l.csr().nnz() + n);
                for i in 0..n {
                    l_entries.extend(l.csr().row(i).map(|(j, v)| (i, j, v)));
                    l_entries.push((i, i, 1.0));
                }
                write_mm(cfg.output_dir.join(format!("ilut_L_{tag}.mtx")), &mut files, |f| {
                    matrix_market::write_coordinate(f, n, n, l_entries)
                })?;
                write_mm(cfg.output_dir.join(format!("ilut_U_{tag}.mtx")), &mut files, |f| {
                    matrix_market::write_csr(f, u.csr())
                })?;
            }
        }
    }
    Ok(files)
}

/// Solves every grid size with the first method and preconditioner of the
/// config and writes the depth profile `(τ, σ⁰₀, σ²₀)` and the emergent
/// Stokes parameters `(μ, ν, I, Q)` at the top for `μ > 0`.
pub fn profile(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    ensure_dir(&cfg.output_dir)?;
    let mut files = Vec::new();
    let method = cfg.methods[0];
    let kind = cfg.preconditioners[0];
    for &size in &cfg.sizes {
        let ctx = operator_for(cfg, size)?;
        let problem = prepare(&ctx, cfg.assembly);
        let report = problem.solve(&cfg.solver_config(method), &cfg.preconditioner_spec(kind))?;
        if !report.converged {
            return Err(Error::NotConverged { method: method.label().into(), iterations: report.iterations });
        }
        let sigma = report.sigma()?;
        let grid = ctx.grid();
        let mut depth = String::from("k,tau,sigma00,sigma20\n");
        for (k, tau) in grid.tau.iter().enumerate() {
            writeln!(depth, "{k},{tau:.16e},{:.16e},{:.16e}", sigma.s00(k), sigma.s20(k)).unwrap();
        }
        let field = ctx.stokes_field(&sigma)?;
        let mut surface = String::from("mu,nu,I,Q\n");
        for (m, &mu) in grid.mu_nodes.iter().enumerate() {
            if mu <= 0.0 {
                continue;
            }
            for (p, nu) in grid.nu_nodes.iter().enumerate() {
                writeln!(surface, "{mu:.16e},{nu:.16e},{:.16e},{:.16e}", field.i(0, m, p), field.q(0, m, p)).unwrap();
            }
        }
        let tag = size.tag();
        write_file(cfg.output_dir.join(format!("profile_depth_{tag}.csv")), &depth, &mut files)?;
        write_file(cfg.output_dir.join(format!("profile_surface_{tag}.csv")), &surface, &mut files)?;
    }
    Ok(files)
}
