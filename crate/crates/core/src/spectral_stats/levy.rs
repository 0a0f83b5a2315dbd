use crate::beta_field::RigParams;

use super::StatsError;

/// `ρ_a([x, x+ε))`.
pub fn levy_window_mass(p: RigParams, x: f64, eps: f64) -> f64 {
    (p.cdf(x + eps) - p.cdf(x)).max(0.0)
}

/// `sup_x ρ_a([x, x+ε))`. The window mass is unimodal in `x` and its
/// maximizer lies in `[y_a − ε, y_a]`, so a golden-section search there
/// suffices.
pub fn levy_concentration(a: f64, eps: f64) -> Result<f64, StatsError> {
    let p = RigParams::new(a).ok_or_else(|| StatsError::Config(format!("a must be ≥ 0, got {a}")))?;
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(StatsError::Config(format!("epsilon must be positive, got {eps}")));
    }
    let mode = p.mode();
    let mass = |x: f64| levy_window_mass(p, x, eps);
    let (mut lo, mut hi) = ((mode - eps).max(0.0), mode);
    let invphi = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = hi - invphi * (hi - lo);
    let mut d = lo + invphi * (hi - lo);
    let (mut fc, mut fd) = (mass(c), mass(d));
    while hi - lo > 1e-13 * (1.0 + mode) {
        if fc >= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - invphi * (hi - lo);
            fc = mass(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + invphi * (hi - lo);
            fd = mass(d);
        }
    }
    Ok([mass(lo), mass(hi), fc, fd].into_iter().fold(0.0, f64::max))
}
