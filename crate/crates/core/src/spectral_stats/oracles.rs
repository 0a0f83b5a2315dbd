//! Checks of the sampler against exact laws: the Laplace transform, the
//! one-site conditional, and the moments and CDF of ρ_a.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::beta_field::{laplace_exact, sample_rig, Backend, BetaField, GreenMatrixState, RigParams, SamplerConfig};
use crate::exec::Execution;
use crate::graph::WeightedGraph;
use crate::rng::chain_rng;
use crate::stats::{estimate_iid, ks_distance_sorted, EstimateWithCI};

use super::{collect, column_estimates, StatsError, SE_SLACK};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaplaceRow {
    pub lambda: Vec<f64>,
    pub estimate: EstimateWithCI,
    pub exact: f64,
    pub pass: bool,
}

/// Monte-Carlo `E[e^{−⟨λ,β⟩}]` against the closed form at θ ≡ 1.
pub fn laplace_check(
    graph: &Arc<WeightedGraph>,
    lambdas: &[Vec<f64>],
    cfg: &SamplerConfig,
    exec: Execution,
) -> Result<Vec<LaplaceRow>, StatsError> {
    let n = graph.vertex_count();
    if lambdas.iter().any(|l| l.len() != n) {
        return Err(StatsError::Config("λ vectors must match the vertex count".into()));
    }
    let theta = vec![1.0; n];
    let exact: Vec<f64> = lambdas
        .iter()
        .map(|l| laplace_exact(graph, &theta, l))
        .collect::<Result<_, _>>()?;
    let rows = collect(graph, cfg, exec, |f| {
        Ok(lambdas
            .iter()
            .map(|l| {
                let s: f64 = l.iter().zip(f.beta()).map(|(a, b)| a * b).sum();
                (-s).exp()
            })
            .collect())
    })?;
    let est = column_estimates(&rows, cfg.seed);
    Ok(lambdas
        .iter()
        .zip(est)
        .zip(exact)
        .map(|((l, estimate), exact)| LaplaceRow {
            lambda: l.clone(),
            pass: estimate.within(exact, SE_SLACK),
            estimate,
            exact,
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RigReport {
    pub a: f64,
    pub mean_y: EstimateWithCI,
    pub mean_inv_y: EstimateWithCI,
    /// KS distance to the CDF obtained by quadrature of the density.
    pub ks_quadrature: f64,
    /// KS distance to the closed-form CDF.
    pub ks_closed_form: f64,
    pub pass: bool,
}

/// KS limit for ρ_a draws.
pub const RIG_KS_LIMIT: f64 = 0.002;

/// `draws` independent ρ_a variates: `E[y] = a + 1`, `E[1/y] = 1/a` within
/// 4 SE, KS distance below [`RIG_KS_LIMIT`].
pub fn rig_moment_check(a: f64, draws: usize, seed: u64) -> Result<RigReport, StatsError> {
    let p = RigParams::new(a)
        .filter(|_| a > 0.0)
        .ok_or_else(|| StatsError::Config(format!("a must be positive, got {a}")))?;
    if draws < 2 {
        return Err(StatsError::Config("need at least two draws".into()));
    }
    let mut rng = chain_rng(seed, 0);
    let mut ys: Vec<f64> = (0..draws).map(|_| sample_rig(p, &mut rng)).collect();
    let inv: Vec<f64> = ys.iter().map(|y| 1.0 / y).collect();
    let mean_y = estimate_iid(&ys, seed);
    let mean_inv_y = estimate_iid(&inv, seed);
    ys.sort_by(f64::total_cmp);
    let quad = p.cdf_quadrature_sorted(&ys);
    let closed: Vec<f64> = ys.iter().map(|&y| p.cdf(y)).collect();
    let ks_quadrature = ks_distance_sorted(&ys, &quad);
    let ks_closed_form = ks_distance_sorted(&ys, &closed);
    Ok(RigReport {
        a,
        pass: mean_y.within(a + 1.0, 4.0) && mean_inv_y.within(1.0 / a, 4.0) && ks_quadrature < RIG_KS_LIMIT,
        mean_y,
        mean_inv_y,
        ks_quadrature,
        ks_closed_form,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionalReport {
    pub vertex: usize,
    pub a: f64,
    /// Mean of the redrawn `y` at the frozen complement, target `a + 1`.
    pub mean_y: EstimateWithCI,
    /// Largest change of `a` seen across redraws; `a` depends on `β_{j^c}`
    /// only.
    pub a_drift: f64,
    /// Largest change of `2β_j − y`, likewise.
    pub schur_drift: f64,
    pub pass: bool,
}

/// Redraws site `j` `draws` times through the dense Green-matrix update with
/// the rest of the field frozen.
pub fn conditional_check(
    field: &BetaField,
    j: usize,
    draws: usize,
    seed: u64,
) -> Result<ConditionalReport, StatsError> {
    if j >= field.len() {
        return Err(StatsError::Config(format!("vertex {j} out of range")));
    }
    let mut f = field.clone();
    let mut state = GreenMatrixState::new(&f, Backend::Dense, Some(usize::MAX))?;
    let first = state.conditional(&f, j);
    let mut rng = chain_rng(seed, j as u64);
    let mut ys = Vec::with_capacity(draws);
    let (mut a_drift, mut schur_drift) = (0.0f64, 0.0f64);
    for _ in 0..draws {
        let d = state.update_site(&mut f, j, &mut rng)?;
        a_drift = a_drift.max((d.a - first.a).abs());
        schur_drift = schur_drift.max((d.schur - first.schur).abs());
        ys.push(d.y);
    }
    let mean_y = estimate_iid(&ys, seed);
    Ok(ConditionalReport {
        vertex: j,
        a: first.a,
        pass: mean_y.within(first.a + 1.0, 4.0),
        mean_y,
        a_drift,
        schur_drift,
    })
}
