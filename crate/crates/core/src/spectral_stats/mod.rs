//! Monte-Carlo estimators over sampled fields and audits of the bounds they
//! are expected to satisfy. Every audit compares with a closed-form value
//! using an explicit multiple of the standard error and leaves its inputs
//! untouched.

mod audits;
mod decay;
mod ids;
mod levy;
mod oracles;

use std::sync::Arc;

use thiserror::Error;

use crate::beta_field::{run_chains, BetaField, BetaFieldError, SamplerConfig};
use crate::exec::Execution;
use crate::graph::{build_box, BoundaryKind, GraphError, WeightedGraph};
use crate::operator::OperatorError;
use crate::resistance::ResistanceError;
use crate::stats::{estimate_batch, EstimateWithCI};

pub use audits::{
    gamma_marginal_test, martingale_check, monotonicity_check, ward_moment_check, GammaReport,
    MartingaleReport, MartingaleRow, MonotonicityReport, WardReport, GAMMA_KS_LIMIT,
    MONOTONICITY_QUAD_SLACK,
};
pub use decay::{
    decay_moment_fit, omega_event_probabilities, DecayFit, ImplicationRow, MomentKind, OmegaReport,
};
pub use ids::{
    bound_audit, estimate_ids, estimate_ids_multi, wegner_audit, BoundAudit, IdsCurve, WegnerAudit,
    WegnerRow,
};
pub use levy::{levy_concentration, levy_window_mass};
pub use oracles::{
    conditional_check, laplace_check, rig_moment_check, ConditionalReport, LaplaceRow, RigReport,
    RIG_KS_LIMIT,
};

/// Standard-error multiple used by every audit.
pub const SE_SLACK: f64 = 3.0;

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("invalid input: {0}")]
    Config(String),
    #[error(transparent)]
    Sampler(#[from] BetaFieldError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Resistance(#[from] ResistanceError),
}

pub(crate) fn wired_box(d: usize, l: usize, w: f64) -> Result<Arc<WeightedGraph>, StatsError> {
    Ok(Arc::new(build_box(d, l, w, BoundaryKind::Wired)?))
}

/// Per-sample observable vectors from every retained field, in chain order.
pub(crate) fn collect<F>(
    graph: &Arc<WeightedGraph>,
    cfg: &SamplerConfig,
    exec: Execution,
    f: F,
) -> Result<Vec<Vec<f64>>, StatsError>
where
    F: Fn(&BetaField) -> Result<Vec<f64>, StatsError> + Sync + Send,
{
    run_chains(graph, cfg, exec, f)
}

/// Batch-means estimate of every column of `rows`.
pub(crate) fn column_estimates(rows: &[Vec<f64>], seed: u64) -> Vec<EstimateWithCI> {
    let width = rows.first().map_or(0, Vec::len);
    (0..width)
        .map(|c| {
            let col: Vec<f64> = rows.iter().map(|r| r[c]).collect();
            estimate_batch(&col, seed)
        })
        .collect()
}

pub(crate) fn column(rows: &[Vec<f64>], c: usize) -> Vec<f64> {
    rows.iter().map(|r| r[c]).collect()
}
