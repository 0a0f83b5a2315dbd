//! Adaptive Gauss–Legendre quadrature for scalar and vector integrands.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

/// Outcome of an adaptive integration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadResult<T> {
    pub value: T,
    /// Sum of the local error estimates of the accepted panels.
    pub error: f64,
    /// False when the depth budget ran out before every panel met its
    /// tolerance.
    pub converged: bool,
}

const ORDER: usize = 15;
const MAX_DEPTH: usize = 40;
/// Panels bisected per call before everything left is accepted as is.
const MAX_SPLITS: usize = 20_000;

/// Gauss–Legendre nodes and weights on `[-1, 1]`, found by Newton iteration
/// on the Legendre recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let mut p0 = 1.0;
            let mut p1 = 0.0;
            for j in 0..n {
                let p2 = p1;
                p1 = p0;
                p0 = ((2 * j + 1) as f64 * z * p1 - j as f64 * p2) / (j + 1) as f64;
            }
            dp = n as f64 * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

fn rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(ORDER))
}

fn panel<F: FnMut(f64, &mut [f64])>(f: &mut F, a: f64, b: f64, dim: usize, buf: &mut [f64]) -> Vec<f64> {
    let (x, w) = rule();
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut acc = vec![0.0; dim];
    for (xi, wi) in x.iter().zip(w) {
        f(mid + half * xi, buf);
        for (s, v) in acc.iter_mut().zip(buf.iter()) {
            *s += wi * half * v;
        }
    }
    acc
}

/// Tolerance for a panel: accepted when `|coarse − fine| ≤ abs + rel·|fine|`
/// in every component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
}

impl Tolerance {
    pub fn abs(abs: f64) -> Self {
        Tolerance { abs, rel: 0.0 }
    }
}

/// Integrates a vector-valued `f` over `[a, b]`. `f(x, out)` writes `dim`
/// components into `out`.
pub fn integrate_vec<F: FnMut(f64, &mut [f64])>(
    mut f: F,
    dim: usize,
    a: f64,
    b: f64,
    tol: Tolerance,
) -> QuadResult<Vec<f64>> {
    let mut buf = vec![0.0; dim];
    let whole = panel(&mut f, a, b, dim, &mut buf);
    let mut out = QuadResult {
        value: vec![0.0; dim],
        error: 0.0,
        converged: true,
    };
    let mut splits = 0usize;
    recurse(
        &mut f, a, b, whole, tol.abs, tol.rel, 0, dim, &mut buf, &mut out, &mut splits,
    );
    out
}

#[allow(clippy::too_many_arguments)]
fn recurse<F: FnMut(f64, &mut [f64])>(
    f: &mut F,
    a: f64,
    b: f64,
    whole: Vec<f64>,
    abs: f64,
    rel: f64,
    depth: usize,
    dim: usize,
    buf: &mut [f64],
    out: &mut QuadResult<Vec<f64>>,
    splits: &mut usize,
) {
    let m = 0.5 * (a + b);
    let left = panel(f, a, m, dim, buf);
    let right = panel(f, m, b, dim, buf);
    let mut err = 0.0f64;
    let mut ok = true;
    for k in 0..dim {
        let fine = left[k] + right[k];
        let e = (fine - whole[k]).abs();
        err = err.max(e);
        if e > abs + rel * fine.abs() {
            ok = false;
        }
    }
    if ok || depth >= MAX_DEPTH || *splits >= MAX_SPLITS || !(m > a && m < b) {
        if !ok {
            out.converged = false;
        }
        for k in 0..dim {
            out.value[k] += left[k] + right[k];
        }
        out.error += err;
        return;
    }
    *splits += 1;
    recurse(f, a, m, left, 0.5 * abs, rel, depth + 1, dim, buf, out, splits);
    recurse(f, m, b, right, 0.5 * abs, rel, depth + 1, dim, buf, out, splits);
}

pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: Tolerance) -> QuadResult<f64> {
    let r = integrate_vec(|x, out| out[0] = f(x), 1, a, b, tol);
    QuadResult {
        value: r.value[0],
        error: r.error,
        converged: r.converged,
    }
}

/// Integrates over `(0, ∞)` with the substitution `s = t/(1 − t)`.
pub fn integrate_half_line_vec<F: FnMut(f64, &mut [f64])>(
    mut f: F,
    dim: usize,
    tol: Tolerance,
) -> QuadResult<Vec<f64>> {
    integrate_vec(
        |t, out| {
            if t >= 1.0 {
                out.iter_mut().for_each(|o| *o = 0.0);
                return;
            }
            let s = t / (1.0 - t);
            let jac = 1.0 / ((1.0 - t) * (1.0 - t));
            f(s, out);
            for o in out.iter_mut() {
                *o *= jac;
            }
        },
        dim,
        0.0,
        1.0,
        tol,
    )
}

pub fn integrate_half_line<F: FnMut(f64) -> f64>(mut f: F, tol: Tolerance) -> QuadResult<f64> {
    let r = integrate_half_line_vec(|s, out| out[0] = f(s), 1, tol);
    QuadResult {
        value: r.value[0],
        error: r.error,
        converged: r.converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nodes_integrate_polynomials_exactly() {
        let (x, w) = gauss_legendre(ORDER);
        let s: f64 = w.iter().sum();
        assert!((s - 2.0).abs() < 1e-14);
        let m28: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(28)).sum();
        assert!((m28 - 2.0 / 29.0).abs() < 1e-14);
    }

    #[test]
    fn gaussian_on_half_line() {
        let r = integrate_half_line(|s| (-0.5 * s * s).exp(), Tolerance::abs(1e-12));
        assert!(r.converged);
        assert!((r.value - (std::f64::consts::PI / 2.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn peaked_integrand() {
        let r = integrate(|x| 1.0 / (1e-4 + x * x), -1.0, 1.0, Tolerance::abs(1e-10));
        let exact = 2.0 * (1.0f64 / 1e-2).atan() / 1e-2;
        assert!(r.converged);
        assert!((r.value - exact).abs() < 1e-8);
    }
}
