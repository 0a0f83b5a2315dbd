use serde::{Deserialize, Serialize};

use crate::beta_field::SamplerConfig;
use crate::exec::Execution;
use crate::operator::{assemble, Bc, SpectralCounter};
use crate::stats::{linear_fit, EstimateWithCI, LinearFit};

use super::{collect, column_estimates, wired_box, StatsError, SE_SLACK};

/// Integrated density of states of `H = 𝓗/W` on a wired box, one estimate
/// per grid energy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdsCurve {
    pub energies: Vec<f64>,
    pub estimates: Vec<EstimateWithCI>,
    pub bc: Bc,
    pub w: f64,
    pub d: usize,
    pub l: usize,
    /// Grid indices where the estimate falls below its predecessor by more
    /// than 3 SE. Diagnostic only.
    pub monotonicity_violations: Vec<usize>,
}

impl IdsCurve {
    /// Least-squares line through `(ln E, ln N̂)` over grid points in
    /// `[lo, hi]` with a positive estimate.
    pub fn loglog_fit(&self, lo: f64, hi: f64) -> Option<LinearFit> {
        let (x, y): (Vec<f64>, Vec<f64>) = self
            .energies
            .iter()
            .zip(&self.estimates)
            .filter(|(&e, est)| e >= lo && e <= hi && est.value > 0.0)
            .map(|(&e, est)| (e.ln(), est.value.ln()))
            .unzip();
        (x.len() >= 2).then(|| linear_fit(&x, &y))
    }
}

fn check_grid(energies: &[f64]) -> Result<(), StatsError> {
    if energies.is_empty() {
        return Err(StatsError::Config("empty energy grid".into()));
    }
    if energies.iter().any(|e| !e.is_finite()) || energies.windows(2).any(|p| p[0] > p[1]) {
        return Err(StatsError::Config("energy grid must be finite and ascending".into()));
    }
    Ok(())
}

fn violations(est: &[EstimateWithCI]) -> Vec<usize> {
    (1..est.len())
        .filter(|&k| {
            let se = est[k].std_error.hypot(est[k - 1].std_error);
            est[k].value < est[k - 1].value - SE_SLACK * se
        })
        .collect()
}

pub fn estimate_ids(
    d: usize,
    l: usize,
    w: f64,
    bc: Bc,
    energies: &[f64],
    cfg: &SamplerConfig,
    exec: Execution,
) -> Result<IdsCurve, StatsError> {
    Ok(estimate_ids_multi(d, l, w, &[bc], energies, cfg, exec)?.remove(0))
}

/// One curve per boundary condition, all from the same sampled fields.
pub fn estimate_ids_multi(
    d: usize,
    l: usize,
    w: f64,
    bcs: &[Bc],
    energies: &[f64],
    cfg: &SamplerConfig,
    exec: Execution,
) -> Result<Vec<IdsCurve>, StatsError> {
    check_grid(energies)?;
    if bcs.is_empty() {
        return Err(StatsError::Config("no boundary condition given".into()));
    }
    let graph = wired_box(d, l, w)?;
    let k = energies.len();
    let rows = collect(&graph, cfg, exec, |f| {
        let mut row = Vec::with_capacity(k * bcs.len());
        for &bc in bcs {
            let m = assemble(f, bc, true)?;
            let n = m.len() as f64;
            let mut counter = SpectralCounter::new(&m, k)?;
            row.extend(energies.iter().map(|&e| counter.count(e).count as f64 / n));
        }
        Ok(row)
    })?;
    let all = column_estimates(&rows, cfg.seed);
    Ok(bcs
        .iter()
        .enumerate()
        .map(|(b, &bc)| {
            let estimates = all[b * k..(b + 1) * k].to_vec();
            IdsCurve {
                energies: energies.to_vec(),
                monotonicity_violations: violations(&estimates),
                estimates,
                bc,
                w,
                d,
                l,
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundAudit {
    /// `2√(W/π)·√E` at each grid energy.
    pub upper_bounds: Vec<f64>,
    pub upper_ok: Vec<bool>,
    pub upper_pass: bool,
    /// Largest `c` with `N̂(E) ≥ c|ln E|^{−d}√E − 3·SE` over grid points
    /// with `E < 1`.
    pub lower_constant: Option<f64>,
    /// `N̂(E)/E` at each grid energy.
    pub ratio_over_e: Vec<f64>,
}

pub fn bound_audit(curve: &IdsCurve) -> BoundAudit {
    let w = curve.w;
    let upper_bounds: Vec<f64> = curve
        .energies
        .iter()
        .map(|&e| 2.0 * (w / std::f64::consts::PI).sqrt() * e.max(0.0).sqrt())
        .collect();
    let upper_ok: Vec<bool> = curve
        .estimates
        .iter()
        .zip(&upper_bounds)
        .map(|(est, &b)| est.at_most(b, SE_SLACK))
        .collect();
    let lower_constant = curve
        .energies
        .iter()
        .zip(&curve.estimates)
        .filter(|(&e, _)| e > 0.0 && e < 1.0)
        .map(|(&e, est)| {
            let shape = (-e.ln()).powi(-(curve.d as i32)) * e.sqrt();
            (est.value + SE_SLACK * est.std_error) / shape
        })
        .reduce(f64::min);
    BoundAudit {
        upper_pass: upper_ok.iter().all(|&b| b),
        upper_ok,
        upper_bounds,
        lower_constant,
        ratio_over_e: curve
            .energies
            .iter()
            .zip(&curve.estimates)
            .map(|(&e, est)| est.value / e)
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WegnerRow {
    pub epsilon: f64,
    /// `E[N_Λ(E+ε) − N_Λ(E−ε)]`.
    pub increment: EstimateWithCI,
    /// `4√(W/(2π))·√ε`.
    pub bound: f64,
    /// `increment/ε`, reported for the large-W Lipschitz regime.
    pub ratio_over_epsilon: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WegnerAudit {
    pub energy: f64,
    pub bc: Bc,
    pub rows: Vec<WegnerRow>,
    pub pass: bool,
}

#[allow(clippy::too_many_arguments)]
pub fn wegner_audit(
    d: usize,
    l: usize,
    w: f64,
    bc: Bc,
    energy: f64,
    epsilons: &[f64],
    cfg: &SamplerConfig,
    exec: Execution,
) -> Result<WegnerAudit, StatsError> {
    if epsilons.is_empty() || epsilons.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
        return Err(StatsError::Config("epsilons must be positive and finite".into()));
    }
    let graph = wired_box(d, l, w)?;
    let rows = collect(&graph, cfg, exec, |f| {
        let m = assemble(f, bc, true)?;
        let n = m.len() as f64;
        let mut counter = SpectralCounter::new(&m, 2 * epsilons.len())?;
        Ok(epsilons
            .iter()
            .map(|&eps| {
                let hi = counter.count(energy + eps).count;
                let lo = counter.count(energy - eps).count;
                (hi - lo) as f64 / n
            })
            .collect())
    })?;
    let est = column_estimates(&rows, cfg.seed);
    let rows: Vec<WegnerRow> = epsilons
        .iter()
        .zip(est)
        .map(|(&eps, increment)| {
            let bound = 4.0 * (w / (2.0 * std::f64::consts::PI)).sqrt() * eps.sqrt();
            WegnerRow {
                epsilon: eps,
                pass: increment.at_most(bound, SE_SLACK),
                ratio_over_epsilon: increment.value / eps,
                bound,
                increment,
            }
        })
        .collect();
    Ok(WegnerAudit {
        energy,
        bc,
        pass: rows.iter().all(|r| r.pass),
        rows,
    })
}
