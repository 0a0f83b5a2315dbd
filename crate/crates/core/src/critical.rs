//! Modified Bessel functions K₀ and K₁, the integral `I_W`, the function
//! `F_d(W)` and the critical couplings `W_c(d)` and `W_c′(d)`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::quad::{integrate_half_line, Tolerance};

/// Γ(1/4). Obtained from `Γ(1/4)² = (2π)^{3/2} / AGM(1, √2)`.
pub const GAMMA_QUARTER: f64 = 3.625_609_908_221_908;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Upper end of the power-series branch.
pub const SERIES_MAX_X: f64 = 2.0;
/// Lower end of the asymptotic branch; between the two the Steed–Temme
/// continued fraction is used.
pub const ASYMPTOTIC_MIN_X: f64 = 30.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CriticalError {
    #[error("Bessel K needs x > 0, got {0}")]
    NonPositiveArgument(f64),
    #[error("order {0} not supported (only 0 and 1)")]
    Order(u32),
    #[error("dimension must be at least 1")]
    Dimension,
    #[error("coupling must be positive, got {0}")]
    Coupling(f64),
}

/// `K_order(x)` for order 0 or 1.
pub fn bessel_k(order: u32, x: f64) -> Result<f64, CriticalError> {
    let (k0, k1) = bessel_k01_scaled(x)?;
    let s = (-x).exp();
    match order {
        0 => Ok(k0 * s),
        1 => Ok(k1 * s),
        o => Err(CriticalError::Order(o)),
    }
}

/// `(e^x K₀(x), e^x K₁(x))`.
pub fn bessel_k01_scaled(x: f64) -> Result<(f64, f64), CriticalError> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(CriticalError::NonPositiveArgument(x));
    }
    Ok(if x <= SERIES_MAX_X {
        let (k0, k1) = series(x);
        let e = x.exp();
        (k0 * e, k1 * e)
    } else if x < ASYMPTOTIC_MIN_X {
        continued_fraction(x)
    } else {
        (asymptotic(0.0, x), asymptotic(1.0, x))
    })
}

fn series(x: f64) -> (f64, f64) {
    let q = 0.25 * x * x;
    let lg = (0.5 * x).ln();
    let mut term0 = 1.0; // q^k / (k!)²
    let mut term1 = 1.0; // q^k / (k! (k+1)!)
    let mut h = 0.0; // H_k
    let mut i0 = 0.0;
    let mut i1 = 0.0;
    let mut s0 = 0.0;
    let mut s1 = 0.0;
    for k in 0..60 {
        if k > 0 {
            let kf = k as f64;
            term0 *= q / (kf * kf);
            term1 *= q / (kf * (kf + 1.0));
            h += 1.0 / kf;
        }
        let h_next = h + 1.0 / (k as f64 + 1.0);
        i0 += term0;
        i1 += term1;
        s0 += term0 * h;
        s1 += term1 * (h + h_next - 2.0 * EULER_GAMMA);
        if term0 < 1e-18 * i0 && term1 < 1e-18 * i1 {
            break;
        }
    }
    let i1 = 0.5 * x * i1;
    let k0 = -(lg + EULER_GAMMA) * i0 + s0;
    let k1 = 1.0 / x + lg * i1 - 0.25 * x * s1;
    (k0, k1)
}

/// Steed's method on the second continued fraction (Temme's normalization),
/// returning exponentially scaled values.
fn continued_fraction(x: f64) -> (f64, f64) {
    let mut b = 2.0 * (1.0 + x);
    let mut d = 1.0 / b;
    let mut h = d;
    let mut delh = d;
    let mut q1 = 0.0;
    let mut q2 = 1.0;
    let a1 = 0.25;
    let mut q = a1;
    let mut c = a1;
    let mut a = -a1;
    let mut s = 1.0 + q * delh;
    for i in 2..10_000 {
        let fi = i as f64;
        a -= 2.0 * (fi - 1.0);
        c = -a * c / fi;
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh *= b * d - 1.0;
        h += delh;
        let dels = q * delh;
        s += dels;
        if (dels / s).abs() < 1e-17 {
            break;
        }
    }
    h *= a1;
    let k0 = (std::f64::consts::PI / (2.0 * x)).sqrt() / s;
    let k1 = k0 * (x + 0.5 - h) / x;
    (k0, k1)
}

fn asymptotic(nu: f64, x: f64) -> f64 {
    let mu = 4.0 * nu * nu;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..40 {
        let kf = k as f64;
        let next = term * (mu - (2.0 * kf - 1.0).powi(2)) / (kf * 8.0 * x);
        if next.abs() >= term.abs() {
            break;
        }
        term = next;
        sum += term;
        if term.abs() < 1e-18 * sum.abs() {
            break;
        }
    }
    (std::f64::consts::PI / (2.0 * x)).sqrt() * sum
}

fn check_w(w: f64) -> Result<(), CriticalError> {
    if w > 0.0 && w.is_finite() {
        Ok(())
    } else {
        Err(CriticalError::Coupling(w))
    }
}

/// `I_W = 2 e^W √(W/2π) K₀(W)`.
pub fn i_w(w: f64) -> Result<f64, CriticalError> {
    check_w(w)?;
    let (k0e, _) = bessel_k01_scaled(w)?;
    Ok(2.0 * (w / (2.0 * std::f64::consts::PI)).sqrt() * k0e)
}

/// `I_W` from its defining integral `√W ∫_ℝ e^{−W(cosh t − 1)} dt/√(2π)`.
pub fn i_w_quadrature(w: f64) -> Result<f64, CriticalError> {
    check_w(w)?;
    let r = integrate_half_line(
        |t| (-w * 2.0 * (0.5 * t).sinh().powi(2)).exp(),
        Tolerance {
            abs: 1e-15,
            rel: 1e-14,
        },
    );
    Ok(2.0 * (w / (2.0 * std::f64::consts::PI)).sqrt() * r.value)
}

/// `K₀(x)` from `∫₀^∞ e^{−x cosh t} dt`, for cross-checks.
pub fn bessel_k_quadrature(order: u32, x: f64) -> Result<f64, CriticalError> {
    if !(x > 0.0) {
        return Err(CriticalError::NonPositiveArgument(x));
    }
    if order > 1 {
        return Err(CriticalError::Order(order));
    }
    let nu = order as f64;
    let r = integrate_half_line(
        |t| {
            let c = x * t.cosh();
            0.5 * ((nu * t - c).exp() + (-nu * t - c).exp())
        },
        Tolerance {
            abs: 0.0,
            rel: 1e-14,
        },
    );
    Ok(r.value)
}

fn check_d(d: usize) -> Result<(), CriticalError> {
    if d >= 1 {
        Ok(())
    } else {
        Err(CriticalError::Dimension)
    }
}

/// `F_d(W) = √(2W/π) K₀(W) e^{W(2d−1)} (2d−1)`, with real `d` allowed.
pub fn f_d_real(d: f64, w: f64) -> Result<f64, CriticalError> {
    check_w(w)?;
    let (k0e, _) = bessel_k01_scaled(w)?;
    Ok((2.0 * w / std::f64::consts::PI).sqrt() * k0e * (w * (2.0 * d - 2.0)).exp() * (2.0 * d - 1.0))
}

pub fn f_d(d: usize, w: f64) -> Result<f64, CriticalError> {
    check_d(d)?;
    f_d_real(d as f64, w)
}

/// `F_d` through `I_W e^{W(2d−2)} (2d−1)` with `I_W` taken from its integral.
pub fn f_d_via_integral(d: usize, w: f64) -> Result<f64, CriticalError> {
    check_d(d)?;
    let df = d as f64;
    Ok(i_w_quadrature(w)? * (w * (2.0 * df - 2.0)).exp() * (2.0 * df - 1.0))
}

/// `∂_W F_d = (1/(2W) + 2d − 1 − K₁/K₀) F_d`.
pub fn df_dw(d: f64, w: f64) -> Result<f64, CriticalError> {
    let (k0, k1) = bessel_k01_scaled(w)?;
    Ok((0.5 / w + 2.0 * d - 1.0 - k1 / k0) * f_d_real(d, w)?)
}

/// `∂_d F_d = (2W + 2/(2d−1)) F_d`.
pub fn df_dd(d: f64, w: f64) -> Result<f64, CriticalError> {
    Ok((2.0 * w + 2.0 / (2.0 * d - 1.0)) * f_d_real(d, w)?)
}

/// `W_c′(d) = √π / (Γ(1/4) 2^{3/4} d)`.
pub fn w_c_prime(d: usize) -> Result<f64, CriticalError> {
    check_d(d)?;
    Ok(std::f64::consts::PI.sqrt() / (GAMMA_QUARTER * 2f64.powf(0.75) * d as f64))
}

/// A coupling that may be infinite, serialized with an explicit tag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Coupling {
    Finite { value: f64 },
    Infinite,
}

impl Coupling {
    pub fn finite(&self) -> Option<f64> {
        match self {
            Coupling::Finite { value } => Some(*value),
            Coupling::Infinite => None,
        }
    }

    pub fn max(self, other: f64) -> Coupling {
        match self {
            Coupling::Finite { value } => Coupling::Finite {
                value: value.max(other),
            },
            Coupling::Infinite => Coupling::Infinite,
        }
    }
}

/// Root of `F_d(W) = 1`; infinite for `d = 1`, where `F_1 < 1` for all W.
pub fn solve_w_c(d: usize) -> Result<Coupling, CriticalError> {
    check_d(d)?;
    if d == 1 {
        return Ok(Coupling::Infinite);
    }
    let mut hi = w_c_prime(d)?;
    while f_d(d, hi)? < 1.0 {
        hi *= 2.0;
    }
    let mut lo = hi * 1e-12;
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f_d(d, mid)? < 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (flo, fhi) = (f_d(d, lo)?, f_d(d, hi)?);
    let root = if (flo - 1.0).abs() <= (fhi - 1.0).abs() { lo } else { hi };
    Ok(Coupling::Finite { value: root })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalReport {
    pub d: usize,
    pub w_c: Coupling,
    pub w_c_prime: f64,
    pub w_cr: Coupling,
    /// `|F_d(W_c) − 1|`, absent when `W_c` is infinite.
    pub residual: Option<f64>,
}

pub fn critical_report(d: usize) -> Result<CriticalReport, CriticalError> {
    let w_c = solve_w_c(d)?;
    let w_c_prime = w_c_prime(d)?;
    let residual = match w_c.finite() {
        Some(w) => Some((f_d(d, w)? - 1.0).abs()),
        None => None,
    };
    Ok(CriticalReport {
        d,
        w_c,
        w_c_prime,
        w_cr: w_c.max(w_c_prime),
        residual,
    })
}

/// Whether `F_d` is strictly increasing on `points` log-spaced couplings in
/// `(lo, hi)`.
pub fn f_d_increasing_on(d: usize, lo: f64, hi: f64, points: usize) -> Result<bool, CriticalError> {
    let grid = crate::stats::geometric_grid(lo, hi, points);
    let vals: Result<Vec<f64>, _> = grid.iter().map(|&w| f_d(d, w)).collect();
    Ok(vals?.windows(2).all(|v| v[1] > v[0]))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivativeCheck {
    pub d: f64,
    pub w: f64,
    pub df_dw: f64,
    pub df_dw_fd: f64,
    pub df_dd: f64,
    pub df_dd_fd: f64,
}

impl DerivativeCheck {
    pub fn max_rel_error(&self) -> f64 {
        let e1 = ((self.df_dw - self.df_dw_fd) / self.df_dw).abs();
        let e2 = ((self.df_dd - self.df_dd_fd) / self.df_dd).abs();
        e1.max(e2)
    }
}

/// Closed-form derivatives against central differences.
pub fn derivative_check(d: f64, w: f64) -> Result<DerivativeCheck, CriticalError> {
    let hw = 1e-4 * w;
    let hd = 1e-4;
    let fd_w = (f_d_real(d, w + hw)? - f_d_real(d, w - hw)?) / (2.0 * hw);
    let fd_d = (f_d_real(d + hd, w)? - f_d_real(d - hd, w)?) / (2.0 * hd);
    Ok(DerivativeCheck {
        d,
        w,
        df_dw: df_dw(d, w)?,
        df_dw_fd: fd_w,
        df_dd: df_dd(d, w)?,
        df_dd_fd: fd_d,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub d: usize,
    pub w_c: f64,
    pub w_c_prime: f64,
    /// `f(d) = F_d(W_c′(d))`.
    pub f: f64,
    pub derivatives: DerivativeCheck,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub rows: Vec<ComparisonRow>,
    pub f_increasing: bool,
    pub f_at_least_2_9: bool,
    pub w_c_below_w_c_prime: bool,
    pub max_derivative_rel_error: f64,
}

/// Compares `W_c(d)` and `W_c′(d)` for `d` in `d_lo..=d_hi` (`d_lo ≥ 2`).
pub fn comparison_scan(d_lo: usize, d_hi: usize) -> Result<ComparisonReport, CriticalError> {
    if d_lo < 2 || d_hi < d_lo {
        return Err(CriticalError::Dimension);
    }
    let mut rows = Vec::new();
    for d in d_lo..=d_hi {
        let wp = w_c_prime(d)?;
        let wc = solve_w_c(d)?.finite().expect("finite for d ≥ 2");
        rows.push(ComparisonRow {
            d,
            w_c: wc,
            w_c_prime: wp,
            f: f_d(d, wp)?,
            derivatives: derivative_check(d as f64, wp)?,
        });
    }
    Ok(ComparisonReport {
        f_increasing: rows.windows(2).all(|r| r[1].f > r[0].f),
        f_at_least_2_9: rows.iter().all(|r| r.f >= 2.9),
        w_c_below_w_c_prime: rows.iter().all(|r| r.w_c < r.w_c_prime),
        max_derivative_rel_error: rows
            .iter()
            .map(|r| r.derivatives.max_rel_error())
            .fold(0.0, f64::max),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_values() {
        let k0 = bessel_k(0, 1.0).unwrap();
        let k1 = bessel_k(1, 1.0).unwrap();
        assert!((k0 / 0.421_024_438_240_708_33 - 1.0).abs() < 1e-13);
        assert!((k1 / 0.601_907_230_197_234_6 - 1.0).abs() < 1e-13);
        assert!(bessel_k(0, 0.0).is_err());
        assert!(bessel_k(2, 1.0).is_err());
    }

    #[test]
    fn branches_agree_with_integral() {
        for &x in &[0.01, 0.5, 1.9, 2.0, 2.1, 5.0, 8.0, 15.0, 29.9, 30.0, 45.0, 200.0] {
            for order in 0..=1 {
                let a = bessel_k(order, x).unwrap();
                let b = bessel_k_quadrature(order, x).unwrap();
                assert!((a / b - 1.0).abs() < 1e-12, "K{order}({x}): {a} vs {b}");
            }
        }
    }

    #[test]
    fn leading_asymptotics() {
        let x = 500.0;
        let (k0e, _) = bessel_k01_scaled(x).unwrap();
        let lead = k0e * (2.0 * x / std::f64::consts::PI).sqrt();
        assert!((lead - 1.0).abs() < 1e-3);
    }

    #[test]
    fn i_w_forms_agree() {
        for &w in &[0.1, 1.0, 10.0] {
            let a = i_w(w).unwrap();
            let b = i_w_quadrature(w).unwrap();
            assert!((a - b).abs() < 1e-10, "W={w}: {a} vs {b}");
        }
        assert!((i_w(1e4).unwrap() - 1.0).abs() < 1e-4);
        assert!(i_w(0.0).is_err());
    }

    #[test]
    fn w_c_prime_values() {
        assert!((w_c_prime(1).unwrap() - 0.290_684_158_5).abs() < 1e-10);
        assert!((w_c_prime(2).unwrap() - w_c_prime(1).unwrap() / 2.0).abs() < 1e-16);
        assert!((f_d(2, w_c_prime(2).unwrap()).unwrap() - 2.908).abs() < 1e-3);
    }

    #[test]
    fn w_c_values() {
        assert_eq!(solve_w_c(1).unwrap(), Coupling::Infinite);
        let expected = [0.006_231_969_076_092_93, 0.001_379_776_196_699, 0.000_546_837_554_876_085];
        for (d, e) in (2..=4).zip(expected) {
            let w = solve_w_c(d).unwrap().finite().unwrap();
            assert!((w / e - 1.0).abs() < 1e-9, "d={d}: {w}");
        }
        let r = critical_report(1).unwrap();
        assert_eq!(r.w_cr, Coupling::Infinite);
        assert!(r.residual.is_none());
    }
}
