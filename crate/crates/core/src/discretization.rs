//! Depth, angle and frequency grids of the benchmark atmosphere.

use crate::error::{Error, Result};
use crate::voigt::voigt_profile;
use serde::{Deserialize, Serialize};

/// Physical parameters of the two-level atom and the slab.
///
/// Only `epsilon` and `damping_a` vary; the remaining fields are fixed by
/// the model (Wien-limit Planck function, no elastic depolarization,
/// unit polarizability factors, reference angle zero) and are carried as
/// metadata.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub epsilon: f64,
    pub damping_a: f64,
    pub planck_w: f64,
    pub depol_delta_u: f64,
    pub w0: f64,
    pub w2: f64,
    pub gamma: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            epsilon: 1e-4,
            damping_a: 1e-3,
            planck_w: 1.0,
            depol_delta_u: 0.0,
            w0: 1.0,
            w2: 1.0,
            gamma: 0.0,
        }
    }
}

impl ModelParams {
    pub fn new(epsilon: f64, damping_a: f64) -> Result<Self> {
        let params = ModelParams { epsilon, damping_a, ..Default::default() };
        params.validate()?;
        Ok(params)
    }

    /// Scattering albedo `ξ = 1 − ε`.
    pub fn xi(&self) -> f64 {
        1.0 - self.epsilon
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon <= 1.0) {
            return Err(Error::Config(format!("epsilon must lie in (0, 1], got {}", self.epsilon)));
        }
        if !(self.damping_a >= 0.0) || !self.damping_a.is_finite() {
            return Err(Error::Config(format!("damping must be >= 0, got {}", self.damping_a)));
        }
        Ok(())
    }
}

/// Grid sizes and ranges.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n_depth: usize,
    pub n_mu: usize,
    pub n_nu: usize,
    pub tau_min: f64,
    pub tau_max: f64,
    pub nu_min: f64,
    pub nu_max: f64,
    /// Rescale the sampled profile so that `Σ_p w_p φ_p = 1` exactly.
    #[serde(default)]
    pub normalize_profile: bool,
}

impl GridSpec {
    pub fn new(n_depth: usize, n_mu: usize, n_nu: usize) -> Self {
        GridSpec { n_depth, n_mu, n_nu, ..Default::default() }
    }
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            n_depth: 80,
            n_mu: 20,
            n_nu: 20,
            tau_min: 1e-5,
            tau_max: 1e4,
            nu_min: -5.0,
            nu_max: 5.0,
            normalize_profile: false,
        }
    }
}

/// The discrete problem: optical depths, angular and spectral quadratures
/// and the sampled absorption profile. Immutable once built.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub tau: Vec<f64>,
    pub mu_nodes: Vec<f64>,
    pub mu_weights: Vec<f64>,
    pub nu_nodes: Vec<f64>,
    pub nu_weights: Vec<f64>,
    pub phi: Vec<f64>,
}

impl Grid {
    pub fn new(spec: &GridSpec, params: &ModelParams) -> Result<Self> {
        params.validate()?;
        if spec.n_mu == 0 || !spec.n_mu.is_multiple_of(2) {
            // An odd Gauss-Legendre rule puts a node at μ = 0, where the
            // transfer equation has no ray to integrate along.
            return Err(Error::Config(format!(
                "number of directions must be even and positive, got {}",
                spec.n_mu
            )));
        }
        let tau = build_tau_grid(spec.n_depth, spec.tau_min, spec.tau_max)?;
        let (mu_nodes, mu_weights) = gauss_legendre(spec.n_mu)?;
        let (nu_nodes, nu_weights) = build_frequency_grid(spec.n_nu, spec.nu_min, spec.nu_max)?;
        let mut phi: Vec<f64> = nu_nodes.iter().map(|&x| voigt_profile(x, params.damping_a)).collect();
        if spec.normalize_profile {
            let mass: f64 = nu_weights.iter().zip(&phi).map(|(w, p)| w * p).sum();
            phi.iter_mut().for_each(|p| *p /= mass);
        }
        Ok(Grid { tau, mu_nodes, mu_weights, nu_nodes, nu_weights, phi })
    }

    pub fn n_depth(&self) -> usize {
        self.tau.len()
    }

    pub fn n_mu(&self) -> usize {
        self.mu_nodes.len()
    }

    pub fn n_nu(&self) -> usize {
        self.nu_nodes.len()
    }

    /// Discrete profile mass `Σ_p w_p φ_p`.
    pub fn profile_mass(&self) -> f64 {
        self.nu_weights.iter().zip(&self.phi).map(|(w, p)| w * p).sum()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Logarithmically spaced optical depths from `tau_min` to `tau_max`.
pub fn build_tau_grid(n_points: usize, tau_min: f64, tau_max: f64) -> Result<Vec<f64>> {
    if n_points < 2 {
        return Err(Error::Config(format!("depth grid needs at least 2 points, got {n_points}")));
    }
    if !(tau_min > 0.0 && tau_min < tau_max && tau_max.is_finite()) {
        return Err(Error::Config(format!("invalid depth bounds [{tau_min}, {tau_max}]")));
    }
    let ratio = tau_max / tau_min;
    let last = (n_points - 1) as f64;
    let mut tau: Vec<f64> = (0..n_points).map(|k| tau_min * ratio.powf(k as f64 / last)).collect();
    tau[0] = tau_min;
    tau[n_points - 1] = tau_max;
    Ok(tau)
}

/// Gauss-Legendre nodes (ascending) and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if n == 0 {
        return Err(Error::Config("Gauss-Legendre rule needs n >= 1".into()));
    }
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    // Roots come in ± pairs; Newton on the positive half and mirror.
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut deriv = 0.0;
        for _ in 0..100 {
            let (p, dp) = legendre_with_derivative(n, x);
            deriv = dp;
            let step = p / dp;
            x -= step;
            if step.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(n, x);
        if dp.is_finite() {
            deriv = dp;
        }
        let w = 2.0 / ((1.0 - x * x) * deriv * deriv);
        nodes[n - 1 - i] = x;
        nodes[i] = -x;
        weights[n - 1 - i] = w;
        weights[i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    Ok((nodes, weights))
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p_prev = 1.0;
    let mut p = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let next = ((2.0 * kf - 1.0) * x * p - (kf - 1.0) * p_prev) / kf;
        p_prev = p;
        p = next;
    }
    let dp = n as f64 * (x * p - p_prev) / (x * x - 1.0);
    (p, dp)
}

/// Equally spaced nodes with trapezoidal weights.
pub fn build_frequency_grid(n: usize, x_min: f64, x_max: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if n < 2 {
        return Err(Error::Config(format!("frequency grid needs at least 2 points, got {n}")));
    }
    if !(x_min < x_max) {
        return Err(Error::Config(format!("invalid frequency bounds [{x_min}, {x_max}]")));
    }
    let h = (x_max - x_min) / (n - 1) as f64;
    let mut nodes: Vec<f64> = (0..n).map(|i| x_min + i as f64 * h).collect();
    nodes[n - 1] = x_max;
    let mut weights = vec![h; n];
    weights[0] = h / 2.0;
    weights[n - 1] = h / 2.0;
    Ok((nodes, weights))
}
