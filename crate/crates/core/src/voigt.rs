//! Faddeeva function and the normalized Voigt line profile.
//!
//! Inside `|z| < 8` the function is evaluated with Weideman's rational
//! expansion (40 terms), outside of it with the Laplace continued fraction.
//! Both are accurate to ~1e-15 absolute in the closed upper half plane.

use num_complex::Complex64;
use std::f64::consts::PI;
use std::sync::OnceLock;

const WEIDEMAN_TERMS: usize = 40;
const FAR_RADIUS: f64 = 8.0;
const CONTINUED_FRACTION_DEPTH: usize = 40;

struct Weideman {
    scale: f64,
    // Polynomial coefficients, lowest degree first.
    coeffs: Vec<f64>,
}

fn weideman() -> &'static Weideman {
    static TABLE: OnceLock<Weideman> = OnceLock::new();
    TABLE.get_or_init(|| {
        let n = WEIDEMAN_TERMS;
        let m = 2 * n;
        let scale = (n as f64 / 2f64.sqrt()).sqrt();
        let sample = |k: i64| {
            let theta = k as f64 * PI / m as f64;
            let t = scale * (theta / 2.0).tan();
            (-t * t).exp() * (scale * scale + t * t)
        };
        // Cosine transform of the even sequence sampled at k = -m+1 ..= m-1.
        let coeffs = (1..=n)
            .map(|j| {
                let sum: f64 = (-(m as i64) + 1..m as i64)
                    .map(|k| sample(k) * (PI * (j as i64 * k) as f64 / m as f64).cos())
                    .sum();
                sum / (2 * m) as f64
            })
            .collect();
        Weideman { scale, coeffs }
    })
}

/// Faddeeva function `w(z) = exp(-z²) erfc(-iz)` for `Im z ≥ 0`.
pub fn faddeeva(z: Complex64) -> Complex64 {
    let i = Complex64::i();
    if z.norm() >= FAR_RADIUS {
        let mut tail = Complex64::new(0.0, 0.0);
        for k in (1..=CONTINUED_FRACTION_DEPTH).rev() {
            tail = (k as f64 / 2.0) / (z - tail);
        }
        return i / (PI.sqrt() * (z - tail));
    }
    let table = weideman();
    let denom = table.scale - i * z;
    let ratio = (table.scale + i * z) / denom;
    let poly = table
        .coeffs
        .iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * ratio + c);
    2.0 * poly / (denom * denom) + (1.0 / PI.sqrt()) / denom
}

/// Voigt function `H(a, x) = Re w(x + i a)`.
pub fn voigt_h(x: f64, a: f64) -> f64 {
    debug_assert!(a >= 0.0, "damping must be non-negative");
    if a == 0.0 {
        return (-x * x).exp();
    }
    faddeeva(Complex64::new(x, a)).re
}

/// Area-normalized Voigt profile `φ(x) = H(a, x) / √π` in reduced frequency.
pub fn voigt_profile(x: f64, a: f64) -> f64 {
    voigt_h(x, a) / PI.sqrt()
}
