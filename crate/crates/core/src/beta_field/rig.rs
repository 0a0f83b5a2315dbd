//! The one-dimensional conditional law ρ_a of the Schur variable.
//!
//! `ρ_a(y) = e^a/√(2π) · e^{−(y + a²/y)/2} · y^{−1/2}` on `y > 0`. Its
//! reciprocal is inverse Gaussian with mean `1/a` and shape 1, so
//! `E[y] = a + 1` and `E[1/y] = 1/a`.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::quad::{integrate, Tolerance};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RigParams {
    a: f64,
}

impl RigParams {
    /// Negative, NaN or infinite `a` is rejected.
    pub fn new(a: f64) -> Option<Self> {
        (a >= 0.0 && a.is_finite()).then_some(RigParams { a })
    }

    /// Clamps tiny negative round-off to zero.
    pub(crate) fn clamped(a: f64) -> Self {
        RigParams {
            a: if a > 0.0 && a.is_finite() { a } else { 0.0 },
        }
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    /// `(−1 + √(1 + 4a²))/2`, where ρ_a is largest.
    pub fn mode(&self) -> f64 {
        let a2 = self.a * self.a;
        // Rationalized to avoid cancellation for small a.
        2.0 * a2 / (1.0 + (1.0 + 4.0 * a2).sqrt())
    }

    pub fn mean(&self) -> f64 {
        self.a + 1.0
    }

    pub fn density(&self, y: f64) -> f64 {
        if y <= 0.0 {
            return 0.0;
        }
        let s = y.sqrt();
        let t = s - self.a / s;
        (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI * y).sqrt()
    }

    /// Density of `s = √y`, which is smooth at the origin.
    pub fn density_sqrt(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        let t = s - self.a / s;
        (2.0 / std::f64::consts::PI).sqrt() * (-0.5 * t * t).exp()
    }

    /// Closed-form CDF through the inverse-Gaussian law of `1/y`.
    pub fn cdf(&self, y: f64) -> f64 {
        if y <= 0.0 {
            return 0.0;
        }
        let s = y.sqrt();
        let a = self.a;
        let p1 = 0.5 * statrs::function::erf::erfc(-(y - a) / (s * std::f64::consts::SQRT_2));
        let p2 = 0.5 * statrs::function::erf::erfc((y + a) / (s * std::f64::consts::SQRT_2));
        (p1 - (2.0 * a).exp() * p2).clamp(0.0, 1.0)
    }

    /// CDF values at ascending points by accumulating adaptive quadrature of
    /// the density between consecutive points.
    pub fn cdf_quadrature_sorted(&self, sorted: &[f64]) -> Vec<f64> {
        let tol = Tolerance {
            abs: 1e-14,
            rel: 1e-12,
        };
        let mut acc = 0.0;
        let mut prev = 0.0;
        sorted
            .iter()
            .map(|&y| {
                let s = y.max(0.0).sqrt();
                if s > prev {
                    acc += integrate(|t| self.density_sqrt(t), prev, s, tol).value;
                    prev = s;
                }
                acc.min(1.0)
            })
            .collect()
    }
}

/// Exact draw from ρ_a. The inverse-Gaussian root-selection transform is
/// carried out in the reciprocal variable: with `q = z²`, the larger root
/// `y₁ = a + q/2 + √(q² + 4aq)/2` is kept with probability `y₁/(y₁ + a)`,
/// otherwise `a²/y₁` is returned. At `a = 0` this is `z²`.
pub fn sample_rig<R: Rng + ?Sized>(p: RigParams, rng: &mut R) -> f64 {
    let z: f64 = rng.sample(StandardNormal);
    let q = z * z;
    let a = p.a;
    if a == 0.0 {
        return q.max(f64::MIN_POSITIVE);
    }
    let y1 = a + 0.5 * q + 0.5 * (q * (q + 4.0 * a)).sqrt();
    let u: f64 = rng.random();
    let y = if u * (y1 + a) <= y1 { y1 } else { a * a / y1 };
    if y > 0.0 {
        y
    } else {
        f64::MIN_POSITIVE
    }
}
