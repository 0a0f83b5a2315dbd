//! The β random field: configurations, the exact density and Laplace
//! transform, the single-site conditional law, a Gibbs sampler and a
//! quadrature oracle for graphs of at most three vertices.

mod density;
mod gibbs;
mod oracle;
mod rig;

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::WeightedGraph;
use crate::linalg::LinalgError;
use crate::operator::{assemble, Bc, OperatorError};

pub use density::{laplace_exact, laplace_exact_log, log_density};
pub use gibbs::{
    gibbs_sweep, initial_beta, run_chains, sample_field, Backend, FieldSampler, GreenMatrixState,
    SamplerConfig, SiteConditional, SiteDraw,
};
pub use oracle::{quadrature_oracle, ORACLE_MAX_VERTICES};
pub(crate) use oracle::inverse3 as oracle_inverse3;
pub use rig::{sample_rig, RigParams};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BetaFieldError {
    #[error("β has {got} entries, graph has {expected} vertices")]
    Dimension { expected: usize, got: usize },
    #[error("β_{0} = {1} is not a positive finite number")]
    NonPositive(usize, f64),
    #[error("θ and λ must have one entry per vertex ({0} vertices)")]
    LaplaceDimension(usize),
    #[error("θ must be positive and λ nonnegative")]
    LaplaceDomain,
    #[error("empty graph")]
    EmptyGraph,
    #[error("boundary field is identically zero; set allow_zero_eta to sample ν^{{W,0}}")]
    ZeroEtaNotAcknowledged,
    #[error("invalid sampler configuration: {0}")]
    Config(String),
    #[error("the chain backend needs a path graph")]
    NotAPath,
    #[error("Green matrix lost positive definiteness at refresh after sweep {sweep}: {source}; lower refresh_every")]
    LostPositivity { sweep: u64, source: LinalgError },
    #[error("quadrature oracle supports at most {max} vertices, got {got}")]
    OracleTooLarge { max: usize, got: usize },
    #[error(transparent)]
    Operator(#[from] OperatorError),
}

/// Which sampler produced a configuration, and when.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub sampler: String,
    pub seed: u64,
    pub chain: u64,
    pub sweep: u64,
}

impl Provenance {
    pub fn manual() -> Self {
        Provenance {
            sampler: "manual".into(),
            seed: 0,
            chain: 0,
            sweep: 0,
        }
    }
}

/// A β configuration on a shared graph.
#[derive(Debug, Clone, PartialEq)]
pub struct BetaField {
    graph: Arc<WeightedGraph>,
    beta: Vec<f64>,
    provenance: Provenance,
}

impl BetaField {
    pub fn new(graph: Arc<WeightedGraph>, beta: Vec<f64>) -> Result<Self, BetaFieldError> {
        Self::with_provenance(graph, beta, Provenance::manual())
    }

    pub fn with_provenance(
        graph: Arc<WeightedGraph>,
        beta: Vec<f64>,
        provenance: Provenance,
    ) -> Result<Self, BetaFieldError> {
        if beta.len() != graph.vertex_count() {
            return Err(BetaFieldError::Dimension {
                expected: graph.vertex_count(),
                got: beta.len(),
            });
        }
        if let Some((i, &b)) = beta.iter().enumerate().find(|(_, b)| !(**b > 0.0 && b.is_finite())) {
            return Err(BetaFieldError::NonPositive(i, b));
        }
        Ok(BetaField {
            graph,
            beta,
            provenance,
        })
    }

    pub fn graph(&self) -> &WeightedGraph {
        &self.graph
    }

    pub fn graph_arc(&self) -> &Arc<WeightedGraph> {
        &self.graph
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    /// Common edge weight W when the graph is a lattice box.
    pub fn coupling(&self) -> Option<f64> {
        self.graph.coupling()
    }

    pub fn len(&self) -> usize {
        self.beta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.beta.is_empty()
    }

    /// Whether `𝓗_β = 2β − P^W` is positive definite (Cholesky succeeds).
    pub fn is_admissible(&self) -> bool {
        assemble(self, Bc::Simple, false)
            .map(|m| m.cholesky().is_ok())
            .unwrap_or(false)
    }

    pub(crate) fn beta_mut(&mut self) -> &mut [f64] {
        &mut self.beta
    }

    pub(crate) fn provenance_mut(&mut self) -> &mut Provenance {
        &mut self.provenance
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_beta() {
        let g = Arc::new(WeightedGraph::from_edges(2, vec![(0, 1, 1.0)], vec![0.0; 2]).unwrap());
        assert!(BetaField::new(g.clone(), vec![1.0]).is_err());
        assert!(BetaField::new(g.clone(), vec![1.0, 0.0]).is_err());
        assert!(BetaField::new(g.clone(), vec![1.0, f64::NAN]).is_err());
        let f = BetaField::new(g.clone(), vec![0.1, 0.1]).unwrap();
        assert!(!f.is_admissible());
        assert!(BetaField::new(g, vec![1.0, 1.0]).unwrap().is_admissible());
    }
}
