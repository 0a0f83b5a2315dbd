//! Gibbs sampling of ν^{W,η} with exact single-site conditionals.
//!
//! At site `j` the Schur variable `y = 1/𝓗⁻¹(j,j)` is, given `β_{j^c}`,
//! distributed as ρ_a with `a = (𝓗⁻¹η)(j)/𝓗⁻¹(j,j)`, and
//! `2β_j = y + S_j` where `S_j = 2β_j − y` depends on `β_{j^c}` only. A sweep
//! redraws `y` at every site in index order.
//!
//! Two backends keep the needed Green data current:
//! * `Dense` stores `G = 𝓗⁻¹` and `Gη`, updates both by Sherman–Morrison after
//!   each site and recomputes them from a band Cholesky every
//!   `refresh_every` updates. `O(n²)` per site.
//! * `Chain` handles path graphs, where `𝓗` is tridiagonal: one backward pass
//!   of Schur pivots and a forward pass updated on the fly give `O(n)` per
//!   sweep and no accumulated drift.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::exec::Execution;
use crate::graph::WeightedGraph;
use crate::operator::{assemble, Bc};
use crate::rng::{chain_rng, ChainRng};

use super::rig::{sample_rig, RigParams};
use super::{BetaField, BetaFieldError, Provenance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    /// `Chain` for path graphs, `Dense` otherwise.
    #[default]
    Auto,
    Dense,
    Chain,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub seed: u64,
    pub burn_in: usize,
    pub thinning: usize,
    /// Site updates between full Green-matrix recomputations; `None` means
    /// once per sweep.
    pub refresh_every: Option<usize>,
    pub chains: usize,
    /// Retained samples over all chains.
    pub samples: usize,
    /// Acknowledges sampling ν^{W,0} when η ≡ 0.
    pub allow_zero_eta: bool,
    pub backend: Backend,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            seed: 0,
            burn_in: 500,
            thinning: 10,
            refresh_every: None,
            chains: 1,
            samples: 1000,
            allow_zero_eta: false,
            backend: Backend::Auto,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<(), BetaFieldError> {
        if self.thinning < 1 {
            return Err(BetaFieldError::Config("thinning must be at least 1".into()));
        }
        if self.refresh_every == Some(0) {
            return Err(BetaFieldError::Config("refresh_every must be at least 1".into()));
        }
        if self.chains < 1 {
            return Err(BetaFieldError::Config("chains must be at least 1".into()));
        }
        Ok(())
    }

    /// Samples retained by chain `c`: the total split as evenly as possible,
    /// earlier chains taking the remainder.
    pub fn samples_for_chain(&self, c: usize) -> usize {
        let base = self.samples / self.chains;
        base + usize::from(c < self.samples % self.chains)
    }
}

/// `β_i = (Σ_j W_ij + η_i + 1)/2`, strictly diagonally dominant.
pub fn initial_beta(g: &WeightedGraph) -> Vec<f64> {
    (0..g.vertex_count())
        .map(|i| 0.5 * (g.weighted_degree(i) + g.eta()[i] + 1.0))
        .collect()
}

/// Conditional law at a site given the rest of the field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SiteConditional {
    pub a: f64,
    /// Current value of `y = 1/𝓗⁻¹(j,j)`.
    pub y_current: f64,
    /// `S_j = 2β_j − y`, a function of `β_{j^c}` only.
    pub schur: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SiteDraw {
    pub vertex: usize,
    pub y: f64,
    pub a: f64,
    pub schur: f64,
}

#[derive(Debug, Clone)]
pub struct DenseState {
    n: usize,
    g: Vec<f64>,
    geta: Vec<f64>,
    col: Vec<f64>,
    since_refresh: usize,
    refresh_every: usize,
}

/// Path graphs keep the field as its forward LDLᵀ pivots
/// `s_i = 2β_i − w_{i−1}²/s_{i−1}` rather than as β. On long chains the
/// smallest eigenvalue of 𝓗 drops far below the rounding level of β, but the
/// pivots still determine the operator to high relative accuracy, and every
/// recursion below only adds, multiplies and divides positive numbers.
#[derive(Debug, Clone)]
pub struct ChainState {
    w: Vec<f64>,
    s: Vec<f64>,
    p: Vec<f64>,
    t: Vec<f64>,
    z: Vec<f64>,
}

/// Green-function data a chain needs for its site updates. Confined to the
/// chain that owns it.
#[derive(Debug, Clone)]
pub enum GreenMatrixState {
    Dense(DenseState),
    Chain(ChainState),
}

impl GreenMatrixState {
    pub fn new(
        f: &BetaField,
        backend: Backend,
        refresh_every: Option<usize>,
    ) -> Result<Self, BetaFieldError> {
        let g = f.graph();
        let n = g.vertex_count();
        let chain = match backend {
            Backend::Auto => g.is_path(),
            Backend::Chain => {
                if !g.is_path() {
                    return Err(BetaFieldError::NotAPath);
                }
                true
            }
            Backend::Dense => false,
        };
        if chain {
            let w = (0..n.saturating_sub(1))
                .map(|i| g.weight(i, i + 1).expect("path edge"))
                .collect();
            let mut c = ChainState {
                w,
                s: vec![0.0; n],
                p: vec![0.0; n],
                t: vec![0.0; n],
                z: vec![0.0; n],
            };
            c.reset(f)?;
            return Ok(GreenMatrixState::Chain(c));
        }
        let mut s = DenseState {
            n,
            g: Vec::new(),
            geta: Vec::new(),
            col: vec![0.0; n],
            since_refresh: 0,
            refresh_every: refresh_every.unwrap_or(n).max(1),
        };
        s.refresh(f)?;
        Ok(GreenMatrixState::Dense(s))
    }

    pub fn backend_name(&self) -> &'static str {
        match self {
            GreenMatrixState::Dense(_) => "gibbs-dense",
            GreenMatrixState::Chain(_) => "gibbs-chain",
        }
    }

    /// The law of `y` at site `j` given the current `β_{j^c}`.
    pub fn conditional(&self, f: &BetaField, j: usize) -> SiteConditional {
        match self {
            GreenMatrixState::Dense(s) => s.conditional(f, j),
            GreenMatrixState::Chain(c) => c.conditional(f, j),
        }
    }

    /// Redraws `y` at site `j` and updates `β_j` and the Green data.
    pub fn update_site(
        &mut self,
        f: &mut BetaField,
        j: usize,
        rng: &mut ChainRng,
    ) -> Result<SiteDraw, BetaFieldError> {
        let cond = self.conditional(f, j);
        let y = sample_rig(RigParams::clamped(cond.a), rng);
        match self {
            GreenMatrixState::Dense(s) => s.apply(f, j, y, &cond)?,
            GreenMatrixState::Chain(c) => {
                f.beta_mut()[j] = 0.5 * (y + cond.schur);
                c.reset(f)?;
            }
        }
        Ok(SiteDraw {
            vertex: j,
            y,
            a: cond.a,
            schur: cond.schur,
        })
    }

    /// Max-norm of `𝓗 G e_0 − e_0`, a cheap consistency probe for `Dense`.
    pub fn consistency_residual(&self, f: &BetaField) -> f64 {
        match self {
            GreenMatrixState::Chain(_) => 0.0,
            GreenMatrixState::Dense(s) => {
                let m = match assemble(f, Bc::Simple, false) {
                    Ok(m) => m,
                    Err(_) => return f64::INFINITY,
                };
                let col: Vec<f64> = (0..s.n).map(|i| s.g[i * s.n]).collect();
                let r = m.matvec(&col);
                r.iter()
                    .enumerate()
                    .map(|(i, v)| (v - if i == 0 { 1.0 } else { 0.0 }).abs())
                    .fold(0.0, f64::max)
            }
        }
    }
}

impl DenseState {
    fn refresh(&mut self, f: &BetaField) -> Result<(), BetaFieldError> {
        let m = assemble(f, Bc::Simple, false)?;
        let chol = m.to_band().cholesky().map_err(|e| BetaFieldError::LostPositivity {
            sweep: f.provenance().sweep,
            source: e,
        })?;
        self.g = chol.inverse();
        let eta = f.graph().eta();
        let n = self.n;
        self.geta = (0..n)
            .map(|i| (0..n).map(|k| self.g[i * n + k] * eta[k]).sum())
            .collect();
        self.since_refresh = 0;
        Ok(())
    }

    fn conditional(&self, f: &BetaField, j: usize) -> SiteConditional {
        let gjj = self.g[j * self.n + j];
        let y = 1.0 / gjj;
        SiteConditional {
            a: (self.geta[j] / gjj).max(0.0),
            y_current: y,
            schur: (2.0 * f.beta()[j] - y).max(0.0),
        }
    }

    fn apply(
        &mut self,
        f: &mut BetaField,
        j: usize,
        y: f64,
        cond: &SiteConditional,
    ) -> Result<(), BetaFieldError> {
        let n = self.n;
        let gjj = self.g[j * n + j];
        let delta = y - cond.y_current;
        let coef = delta / (y * gjj);
        self.col.copy_from_slice(&self.g[j * n..(j + 1) * n]);
        for i in 0..n {
            let ci = coef * self.col[i];
            if ci == 0.0 {
                continue;
            }
            let row = &mut self.g[i * n..(i + 1) * n];
            for (r, c) in row.iter_mut().zip(&self.col) {
                *r -= ci * c;
            }
        }
        let gej = self.geta[j];
        for (ge, c) in self.geta.iter_mut().zip(&self.col) {
            *ge -= coef * c * gej;
        }
        f.beta_mut()[j] = 0.5 * (y + cond.schur);
        self.since_refresh += 1;
        if self.since_refresh >= self.refresh_every {
            self.refresh(f)?;
        }
        Ok(())
    }
}

impl ChainState {
    /// Forward pivots from β directly. Accurate for the diagonally dominant
    /// starting field, and used after single-site updates.
    fn reset(&mut self, f: &BetaField) -> Result<(), BetaFieldError> {
        let beta = f.beta();
        for i in 0..beta.len() {
            let left = if i > 0 {
                self.w[i - 1] * self.w[i - 1] / self.s[i - 1]
            } else {
                0.0
            };
            self.s[i] = 2.0 * beta[i] - left;
            if !(self.s[i] > 0.0 && self.s[i].is_finite()) {
                return Err(BetaFieldError::LostPositivity {
                    sweep: f.provenance().sweep,
                    source: crate::linalg::LinalgError::NotPositiveDefinite {
                        row: i,
                        pivot: self.s[i],
                    },
                });
            }
        }
        Ok(())
    }

    /// Backward pivots `t_i` of the block `[i, n)`, the twisted values
    /// `p_i = 1/𝓗⁻¹(i,i)` and `z_i = (𝓗_{[i,n)}⁻¹η)(i)`, by the differential
    /// qd recursion `p_i = s_i p_{i+1}/(p_{i+1} + w_i²/s_i)`.
    fn backward(&mut self, eta: &[f64]) {
        let n = self.s.len();
        let (w, s, p, t, z) = (&self.w, &self.s, &mut self.p, &mut self.t, &mut self.z);
        p[n - 1] = s[n - 1];
        for i in (0..n - 1).rev() {
            p[i] = s[i] * p[i + 1] / (p[i + 1] + w[i] * w[i] / s[i]);
        }
        for i in 0..n {
            t[i] = p[i] + if i > 0 { w[i - 1] * w[i - 1] / s[i - 1] } else { 0.0 };
        }
        z[n - 1] = eta[n - 1] / t[n - 1];
        for i in (0..n - 1).rev() {
            z[i] = (eta[i] + w[i] * z[i + 1]) / t[i];
        }
    }

    fn conditional(&self, f: &BetaField, j: usize) -> SiteConditional {
        let eta = f.graph().eta();
        let mut c = self.clone();
        c.backward(eta);
        let w = &c.w;
        let mut v = 0.0;
        for i in 0..j {
            v = (eta[i] + if i > 0 { w[i - 1] * v } else { 0.0 }) / c.s[i];
        }
        let (left, leftv) = if j > 0 {
            (w[j - 1] * w[j - 1] / c.s[j - 1], w[j - 1] * v)
        } else {
            (0.0, 0.0)
        };
        let (right, rightz) = if j + 1 < c.s.len() {
            (w[j] * w[j] / c.t[j + 1], w[j] * c.z[j + 1])
        } else {
            (0.0, 0.0)
        };
        SiteConditional {
            a: eta[j] + leftv + rightz,
            y_current: c.p[j],
            schur: left + right,
        }
    }

    fn sweep(&mut self, f: &mut BetaField, rng: &mut ChainRng) -> Result<(), BetaFieldError> {
        let n = f.len();
        let eta: Vec<f64> = f.graph().eta().to_vec();
        let sweep_no = f.provenance().sweep;
        self.backward(&eta);
        let beta = f.beta_mut();
        let (w, s, t, z) = (&self.w, &mut self.s, &self.t, &self.z);
        let mut v_prev = 0.0;
        for j in 0..n {
            let (left, leftv) = if j > 0 {
                (w[j - 1] * w[j - 1] / s[j - 1], w[j - 1] * v_prev)
            } else {
                (0.0, 0.0)
            };
            let (right, rightz) = if j + 1 < n {
                (w[j] * w[j] / t[j + 1], w[j] * z[j + 1])
            } else {
                (0.0, 0.0)
            };
            let a = eta[j] + leftv + rightz;
            let y = sample_rig(RigParams::clamped(a), rng);
            s[j] = y + right;
            if !(s[j] > 0.0 && s[j].is_finite()) {
                return Err(BetaFieldError::LostPositivity {
                    sweep: sweep_no,
                    source: crate::linalg::LinalgError::NotPositiveDefinite { row: j, pivot: s[j] },
                });
            }
            beta[j] = 0.5 * (y + left + right);
            v_prev = (eta[j] + leftv) / s[j];
        }
        Ok(())
    }
}

/// One raster-order sweep over all sites, in place.
pub fn gibbs_sweep(
    f: &mut BetaField,
    state: &mut GreenMatrixState,
    rng: &mut ChainRng,
) -> Result<(), BetaFieldError> {
    debug_assert!(
        state.consistency_residual(f) < 1e-6,
        "Green state inconsistent with the field on entry"
    );
    match state {
        GreenMatrixState::Chain(c) => {
            if !f.is_empty() {
                c.sweep(f, rng)?;
            }
        }
        GreenMatrixState::Dense(_) => {
            for j in 0..f.len() {
                state.update_site(f, j, rng)?;
            }
        }
    }
    f.provenance_mut().sweep += 1;
    Ok(())
}

/// Stream of retained configurations of one chain: `burn_in` sweeps, then
/// one configuration every `thinning` sweeps.
pub struct FieldSampler {
    field: BetaField,
    state: GreenMatrixState,
    rng: ChainRng,
    burn_in: usize,
    thinning: usize,
    burned: bool,
    remaining: usize,
    failed: bool,
}

impl FieldSampler {
    pub fn new(
        graph: Arc<WeightedGraph>,
        cfg: &SamplerConfig,
        chain: usize,
    ) -> Result<Self, BetaFieldError> {
        cfg.validate()?;
        if graph.is_empty() {
            return Err(BetaFieldError::EmptyGraph);
        }
        if !cfg.allow_zero_eta && !graph.eta().iter().any(|&e| e > 0.0) {
            return Err(BetaFieldError::ZeroEtaNotAcknowledged);
        }
        let beta = initial_beta(&graph);
        let mut field = BetaField::new(graph, beta)?;
        let state = GreenMatrixState::new(&field, cfg.backend, cfg.refresh_every)?;
        *field.provenance_mut() = Provenance {
            sampler: state.backend_name().into(),
            seed: cfg.seed,
            chain: chain as u64,
            sweep: 0,
        };
        Ok(FieldSampler {
            field,
            state,
            rng: chain_rng(cfg.seed, chain as u64),
            burn_in: cfg.burn_in,
            thinning: cfg.thinning,
            burned: false,
            remaining: cfg.samples_for_chain(chain),
            failed: false,
        })
    }

    pub fn current(&self) -> &BetaField {
        &self.field
    }

    fn advance(&mut self, sweeps: usize) -> Result<(), BetaFieldError> {
        for _ in 0..sweeps {
            gibbs_sweep(&mut self.field, &mut self.state, &mut self.rng)?;
        }
        Ok(())
    }
}

impl Iterator for FieldSampler {
    type Item = Result<BetaField, BetaFieldError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.remaining == 0 || self.failed {
            return None;
        }
        let step = if self.burned {
            self.thinning
        } else {
            self.burned = true;
            self.burn_in + self.thinning
        };
        if let Err(e) = self.advance(step) {
            self.failed = true;
            return Some(Err(e));
        }
        self.remaining -= 1;
        Some(Ok(self.field.clone()))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        (0, Some(self.remaining))
    }
}

/// Chain `chain` of the sampler described by `cfg`.
pub fn sample_field(
    graph: Arc<WeightedGraph>,
    cfg: &SamplerConfig,
    chain: usize,
) -> Result<FieldSampler, BetaFieldError> {
    FieldSampler::new(graph, cfg, chain)
}

/// Runs `cfg.chains` chains (in parallel when `exec` allows), applies `f` to
/// every retained configuration and returns the results concatenated in chain
/// order. The output does not depend on `exec`.
pub fn run_chains<T, E, F>(
    graph: &Arc<WeightedGraph>,
    cfg: &SamplerConfig,
    exec: Execution,
    f: F,
) -> Result<Vec<T>, E>
where
    T: Send,
    E: From<BetaFieldError> + Send,
    F: Fn(&BetaField) -> Result<T, E> + Sync + Send,
{
    cfg.validate()?;
    let per_chain = exec.try_map(cfg.chains, |c| -> Result<Vec<T>, E> {
        let sampler = sample_field(graph.clone(), cfg, c)?;
        let mut out = Vec::with_capacity(cfg.samples_for_chain(c));
        for field in sampler {
            out.push(f(&field?)?);
        }
        Ok(out)
    })?;
    Ok(per_chain.into_iter().flatten().collect())
}
