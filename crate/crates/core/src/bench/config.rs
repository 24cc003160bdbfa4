//! Experiment files: flat TOML, one experiment per file, sweeps as lists.
//!
//! ```toml
//! n_depth = [20, 40, 60]
//! n_mu = 20              # n_nu defaults to n_mu; lists are zipped
//! formal_solver = "delo-linear"
//! methods = ["richardson", "gmres", "bicgstab", "cgs"]
//! preconditioners = ["none", "jacobi"]
//! assembly = "assembled"
//! output_dir = "out"     # relative to the config file
//! ```

use crate::discretization::{GridSpec, ModelParams};
use crate::error::{Error, Result};
use crate::operator::AssemblyMode;
use crate::preconditioners::{PreconditionerKind, PreconditionerSpec};
use crate::rt::FormalSolverKind;
use crate::solvers::{Method, SolverConfig};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T> OneOrMany<T> {
    fn into_vec(self) -> Vec<T> {
        match self {
            OneOrMany::One(v) => vec![v],
            OneOrMany::Many(v) => v,
        }
    }
}

fn default_n_mu() -> OneOrMany<usize> {
    OneOrMany::One(20)
}

fn default_methods() -> Vec<String> {
    vec!["gmres".into()]
}

fn default_preconditioners() -> Vec<String> {
    vec!["none".into()]
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    name: Option<String>,
    n_depth: OneOrMany<usize>,
    #[serde(default = "default_n_mu")]
    n_mu: OneOrMany<usize>,
    n_nu: Option<OneOrMany<usize>>,
    formal_solver: Option<String>,
    #[serde(default = "default_methods")]
    methods: Vec<String>,
    #[serde(default = "default_preconditioners")]
    preconditioners: Vec<String>,
    omega: Option<f64>,
    tolerance: Option<f64>,
    max_iterations: Option<usize>,
    restart: Option<usize>,
    assembly: Option<String>,
    output_dir: Option<PathBuf>,
    epsilon: Option<f64>,
    damping: Option<f64>,
    tau_min: Option<f64>,
    tau_max: Option<f64>,
    nu_min: Option<f64>,
    nu_max: Option<f64>,
    normalize_profile: Option<bool>,
    ilut_threshold: Option<f64>,
    seed: Option<u64>,
}

/// One grid of the sweep.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GridSize {
    pub n_depth: usize,
    pub n_mu: usize,
    pub n_nu: usize,
}

impl GridSize {
    pub fn tag(&self) -> String {
        format!("ns{}_nmu{}_nnu{}", self.n_depth, self.n_mu, self.n_nu)
    }
}

/// A validated experiment.
#[derive(Clone, Debug, Serialize)]
pub struct ExperimentConfig {
    pub name: String,
    pub sizes: Vec<GridSize>,
    pub formal_solver: FormalSolverKind,
    pub methods: Vec<Method>,
    pub preconditioners: Vec<PreconditionerKind>,
    pub omega: Option<f64>,
    pub tolerance: f64,
    pub max_iterations: usize,
    pub restart: Option<usize>,
    pub assembly: AssemblyMode,
    pub output_dir: PathBuf,
    pub params: ModelParams,
    pub tau_min: f64,
    pub tau_max: f64,
    pub nu_min: f64,
    pub nu_max: f64,
    pub normalize_profile: bool,
    pub ilut_threshold: f64,
    /// Reserved: nothing in the pipeline is random.
    pub seed: Option<u64>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        let name = path.file_stem().map(|s| s.to_string_lossy().into_owned());
        Self::parse(&text, base, name)
    }

    /// Parses config text; a relative `output_dir` is taken relative to `base`.
    pub fn parse(text: &str, base: &Path, default_name: Option<String>) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let n_depth = raw.n_depth.into_vec();
        let n_mu = raw.n_mu.into_vec();
        let n_nu = match raw.n_nu {
            Some(v) => v.into_vec(),
            None => n_mu.clone(),
        };
        if n_mu.len() != n_nu.len() {
            return Err(Error::Config(format!(
                "n_mu and n_nu lists must have equal length ({} vs {})",
                n_mu.len(),
                n_nu.len()
            )));
        }
        if n_depth.is_empty() || n_mu.is_empty() {
            return Err(Error::Config("grid size lists must be nonempty".into()));
        }
        let mut sizes = Vec::new();
        for &ns in &n_depth {
            for (&nm, &nn) in n_mu.iter().zip(&n_nu) {
                if ns < 2 || nm < 2 || nn < 2 {
                    return Err(Error::Config(format!("grid too small: N_s={ns}, N_mu={nm}, N_nu={nn}")));
                }
                if nm % 2 != 0 {
                    return Err(Error::Config(format!("N_mu must be even, got {nm}")));
                }
                sizes.push(GridSize { n_depth: ns, n_mu: nm, n_nu: nn });
            }
        }

        let methods = raw.methods.iter().map(|m| m.parse()).collect::<Result<Vec<Method>>>()?;
        let preconditioners =
            raw.preconditioners.iter().map(|p| p.parse()).collect::<Result<Vec<PreconditionerKind>>>()?;
        if methods.is_empty() || preconditioners.is_empty() {
            return Err(Error::Config("method and preconditioner lists must be nonempty".into()));
        }
        let formal_solver = match raw.formal_solver {
            Some(s) => s.parse()?,
            None => FormalSolverKind::DeloLinear,
        };
        let assembly = match raw.assembly {
            Some(s) => s.parse()?,
            None => AssemblyMode::Assembled,
        };
        let defaults = ModelParams::default();
        let params = ModelParams {
            epsilon: raw.epsilon.unwrap_or(defaults.epsilon),
            damping_a: raw.damping.unwrap_or(defaults.damping_a),
            ..defaults
        };
        params.validate()?;
        let grid_defaults = GridSpec::default();
        let output_dir = raw.output_dir.unwrap_or_else(|| PathBuf::from("results"));
        let cfg = ExperimentConfig {
            name: raw.name.or(default_name).unwrap_or_else(|| "experiment".into()),
            sizes,
            formal_solver,
            methods,
            preconditioners,
            omega: raw.omega,
            tolerance: raw.tolerance.unwrap_or(SolverConfig::DEFAULT_TOLERANCE),
            max_iterations: raw.max_iterations.unwrap_or(SolverConfig::DEFAULT_MAX_ITERATIONS),
            restart: raw.restart,
            assembly,
            output_dir: if output_dir.is_absolute() { output_dir } else { base.join(output_dir) },
            params,
            tau_min: raw.tau_min.unwrap_or(grid_defaults.tau_min),
            tau_max: raw.tau_max.unwrap_or(grid_defaults.tau_max),
            nu_min: raw.nu_min.unwrap_or(grid_defaults.nu_min),
            nu_max: raw.nu_max.unwrap_or(grid_defaults.nu_max),
            normalize_profile: raw.normalize_profile.unwrap_or(false),
            ilut_threshold: raw.ilut_threshold.unwrap_or(PreconditionerSpec::DEFAULT_ILUT_THRESHOLD),
            seed: raw.seed,
        };
        cfg.solver_config(cfg.methods[0]).validate()?;
        if let Some(w) = cfg.omega {
            if !(w > 0.0 && w < 2.0) {
                return Err(Error::Config(format!("omega must lie in (0, 2), got {w}")));
            }
        }
        if !(cfg.ilut_threshold >= 0.0) {
            return Err(Error::Config("ilut_threshold must be >= 0".into()));
        }
        Ok(cfg)
    }

    pub fn grid_spec(&self, size: GridSize) -> GridSpec {
        GridSpec {
            n_depth: size.n_depth,
            n_mu: size.n_mu,
            n_nu: size.n_nu,
            tau_min: self.tau_min,
            tau_max: self.tau_max,
            nu_min: self.nu_min,
            nu_max: self.nu_max,
            normalize_profile: self.normalize_profile,
        }
    }

    pub fn solver_config(&self, method: Method) -> SolverConfig {
        SolverConfig {
            method,
            tolerance: self.tolerance,
            max_iterations: self.max_iterations,
            restart: self.restart,
            omega: self.omega,
        }
    }

    pub fn preconditioner_spec(&self, kind: PreconditionerKind) -> PreconditionerSpec {
        PreconditionerSpec::new(kind).with_threshold(self.ilut_threshold)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_and_defaults() {
        let cfg = ExperimentConfig::parse("n_depth = 4\nn_mu = 2\n", Path::new("/tmp/x"), None).unwrap();
        assert_eq!(cfg.sizes, vec![GridSize { n_depth: 4, n_mu: 2, n_nu: 2 }]);
        assert_eq!(cfg.methods, vec![Method::Gmres]);
        assert_eq!(cfg.preconditioners, vec![PreconditionerKind::None]);
        assert_eq!(cfg.assembly, AssemblyMode::Assembled);
        assert_eq!(cfg.output_dir, PathBuf::from("/tmp/x/results"));
        assert_eq!(cfg.params.epsilon, 1e-4);
    }

    #[test]
    fn sweeps_expand() {
        let text = "n_depth = [20, 40]\nn_mu = [20, 40]\nn_nu = [10, 30]\nmethods = [\"GMRES\", \"cgs\"]\n";
        let cfg = ExperimentConfig::parse(text, Path::new("."), None).unwrap();
        assert_eq!(cfg.sizes.len(), 4);
        assert_eq!(cfg.sizes[1], GridSize { n_depth: 20, n_mu: 40, n_nu: 30 });
        assert_eq!(cfg.methods, vec![Method::Gmres, Method::Cgs]);
    }

    #[test]
    fn rejects_bad_configs() {
        for text in [
            "n_mu = 2",
            "n_depth = 1",
            "n_depth = 4\nn_mu = 3",
            "n_depth = 4\nmethods = []",
            "n_depth = 4\nmethods = [\"newton\"]",
            "n_depth = 4\nbogus = 1",
            "n_depth = 4\nn_mu = [2, 4]\nn_nu = [2]",
            "n_depth = 4\ntolerance = 0.0",
            "n_depth = 4\nomega = 2.5",
            "n_depth = 4\nassembly = \"sparse\"",
            "n_depth = [",
        ] {
            let err = ExperimentConfig::parse(text, Path::new("."), None).unwrap_err();
            assert!(err.is_config(), "{text}: {err}");
        }
    }
}
