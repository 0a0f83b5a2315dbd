//! Simulation and verification toolkit for the random Schrödinger operator
//! `𝓗_β = 2β − P^W` whose potential β is the mixing field of the H^{2|2}
//! sigma model (equivalently, of the vertex-reinforced jump process).
//!
//! The crate samples β exactly at the single-site level, counts eigenvalues
//! of finite-volume restrictions, computes Green functions and derived
//! observables, and provides Monte-Carlo audits of the known bounds on the
//! integrated density of states and related quantities.

pub mod beta_field;
pub mod critical;
pub mod exec;
pub mod graph;
pub mod linalg;
pub mod operator;
pub mod quad;
pub mod resistance;
pub mod rng;
pub mod spectral_stats;
pub mod stats;

pub use beta_field::{BetaField, BetaFieldError, SamplerConfig};
pub use exec::Execution;
pub use graph::{build_box, BoundaryKind, GraphError, VertexId, WeightedGraph};
pub use operator::{Bc, OperatorError, OperatorMatrix};
pub use stats::EstimateWithCI;
