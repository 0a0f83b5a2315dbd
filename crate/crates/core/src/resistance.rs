//! The finite-volume surrogate `h = 𝓗_{Λ_K}⁻¹(0,·)/𝓗_{Λ_K}⁻¹(0,0)`, the
//! tilted field β̃, the conductance network it induces on `Λ_L ∪ {δ}`, and
//! the identity `(𝓗̃^D_{Λ_L})⁻¹(0,0) = R_eff(0 ↔ δ)`.
//!
//! Because `𝓗̃h = 0` on `Λ_K`, conjugating `𝓗̃^D_{Λ_L}` by `diag(h)` gives
//! exactly the network Laplacian grounded at δ, so the identity holds for the
//! surrogate at every finite `K`, not only in the limit.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::beta_field::BetaField;
use crate::graph::BoxGeometry;
use crate::linalg::{BandMatrix, LinalgError};
use crate::operator::{assemble, green_column, Bc, OperatorError};

/// Node index used for the sink δ in [`ConductanceNetwork::from_edges`].
pub const SINK: usize = usize::MAX;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ResistanceError {
    #[error("the network does not connect the source to the sink")]
    Disconnected,
    #[error("inner box L = {inner} must be smaller than the outer box K = {outer}")]
    BoxOrder { inner: usize, outer: usize },
    #[error("resistance identity needs a field on a lattice box")]
    NotLattice,
    #[error("conductance {0} is not positive and finite")]
    BadConductance(f64),
    #[error("node {0} out of range")]
    NodeOutOfRange(usize),
    #[error("tilted Dirichlet operator is singular: {0}")]
    Singular(LinalgError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurrogateGhat {
    /// Half-width of the outer box Λ_K.
    pub k: usize,
    /// `h(i) = 𝓗⁻¹(0,i)/𝓗⁻¹(0,0)` over Λ_K.
    pub h: Vec<f64>,
    /// `𝓗⁻¹(0,0)`.
    pub g00: f64,
    pub origin: usize,
}

fn geometry(f: &BetaField) -> Result<BoxGeometry, ResistanceError> {
    f.graph().geometry().copied().ok_or(ResistanceError::NotLattice)
}

/// One Green solve at the origin of Λ_K, normalized.
pub fn build_surrogate(f: &BetaField) -> Result<SurrogateGhat, ResistanceError> {
    let geo = geometry(f)?;
    let origin = geo.origin();
    let m = assemble(f, Bc::Simple, false)?;
    let col = green_column(&m, origin)?;
    let g00 = col[origin];
    Ok(SurrogateGhat {
        k: geo.half_width,
        h: col.iter().map(|v| v / g00).collect(),
        g00,
        origin,
    })
}

/// `β̃_i = β_i − δ_{i0}/(2·g00)`. The result can be zero or negative at the
/// origin; it is a vector, not a [`BetaField`].
pub fn tilted_field(f: &BetaField, s: &SurrogateGhat) -> Vec<f64> {
    let mut b = f.beta().to_vec();
    b[s.origin] -= 0.5 / s.g00;
    b
}

/// `‖𝓗̃h‖_∞` over Λ_K, which vanishes up to round-off.
pub fn harmonicity_residual(f: &BetaField, s: &SurrogateGhat) -> f64 {
    let g = f.graph();
    let bt = tilted_field(f, s);
    (0..g.vertex_count())
        .map(|i| {
            let nb: f64 = g.neighbors(i).iter().map(|&(j, w)| w * s.h[j]).sum();
            (2.0 * bt[i] * s.h[i] - nb).abs()
        })
        .fold(0.0, f64::max)
}

/// Electrical network on `n` inner nodes plus a sink δ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConductanceNetwork {
    n: usize,
    source: usize,
    /// `(i, j, c)` with `i < j`, parallel edges merged.
    edges: Vec<(usize, usize, f64)>,
    /// `c(i, δ)`.
    sink: Vec<f64>,
    /// Shell index of each inner node (ℓ∞ radius for lattice networks).
    shells: Option<Vec<usize>>,
}

impl ConductanceNetwork {
    /// Builds a network from `(a, b, c)` triples where either endpoint may be
    /// [`SINK`]. Parallel edges add.
    pub fn from_edges(
        n: usize,
        source: usize,
        edges: &[(usize, usize, f64)],
    ) -> Result<Self, ResistanceError> {
        if source >= n {
            return Err(ResistanceError::NodeOutOfRange(source));
        }
        let mut sink = vec![0.0; n];
        let mut inner: Vec<(usize, usize, f64)> = Vec::new();
        for &(a, b, c) in edges {
            if !(c > 0.0 && c.is_finite()) {
                return Err(ResistanceError::BadConductance(c));
            }
            for v in [a, b] {
                if v != SINK && v >= n {
                    return Err(ResistanceError::NodeOutOfRange(v));
                }
            }
            match (a, b) {
                (SINK, SINK) => {}
                (SINK, i) | (i, SINK) => sink[i] += c,
                (i, j) if i == j => {}
                (i, j) => inner.push((i.min(j), i.max(j), c)),
            }
        }
        inner.sort_by_key(|e| (e.0, e.1));
        let mut merged: Vec<(usize, usize, f64)> = Vec::new();
        for e in inner {
            match merged.last_mut() {
                Some(last) if last.0 == e.0 && last.1 == e.1 => last.2 += e.2,
                _ => merged.push(e),
            }
        }
        Ok(ConductanceNetwork {
            n,
            source,
            edges: merged,
            sink,
            shells: None,
        })
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn source(&self) -> usize {
        self.source
    }

    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    pub fn sink_conductances(&self) -> &[f64] {
        &self.sink
    }

    pub fn all_positive(&self) -> bool {
        self.edges.iter().all(|e| e.2 > 0.0) && self.sink.iter().all(|&c| c >= 0.0)
    }

    fn adjacency(&self) -> Vec<Vec<(usize, f64)>> {
        let mut adj = vec![Vec::new(); self.n];
        for &(i, j, c) in &self.edges {
            adj[i].push((j, c));
            adj[j].push((i, c));
        }
        adj
    }

    /// BFS distances from the source over inner edges; δ is one step beyond
    /// any node with a sink conductance.
    fn levels(&self) -> (Vec<Option<usize>>, Option<usize>) {
        let adj = self.adjacency();
        let mut dist = vec![None; self.n];
        dist[self.source] = Some(0);
        let mut queue = VecDeque::from([self.source]);
        let mut sink_dist: Option<usize> = None;
        while let Some(v) = queue.pop_front() {
            let dv = dist[v].unwrap();
            if self.sink[v] > 0.0 {
                sink_dist = Some(sink_dist.map_or(dv + 1, |s: usize| s.min(dv + 1)));
            }
            for &(u, _) in &adj[v] {
                if dist[u].is_none() {
                    dist[u] = Some(dv + 1);
                    queue.push_back(u);
                }
            }
        }
        (dist, sink_dist)
    }
}

/// Conductances `c(i,j) = W h_i h_j` inside Λ_L and
/// `c(i,δ) = Σ_{j∼i, j∉Λ_L} W(h_i h_j + h_i²)`.
pub fn build_network(
    f: &BetaField,
    s: &SurrogateGhat,
    l: usize,
) -> Result<(ConductanceNetwork, Vec<usize>), ResistanceError> {
    let geo = geometry(f)?;
    if l >= geo.half_width {
        return Err(ResistanceError::BoxOrder {
            inner: l,
            outer: geo.half_width,
        });
    }
    let inner = InnerBox::new(&geo, l);
    let g = f.graph();
    let mut edges = Vec::new();
    let mut sink = vec![0.0; inner.global.len()];
    for (li, &i) in inner.global.iter().enumerate() {
        for &(j, w) in g.neighbors(i) {
            match inner.local[j] {
                Some(lj) if lj > li => edges.push((li, lj, w * s.h[i] * s.h[j])),
                Some(_) => {}
                None => sink[li] += w * (s.h[i] * s.h[j] + s.h[i] * s.h[i]),
            }
        }
    }
    let mut all: Vec<(usize, usize, f64)> = edges;
    for (i, &c) in sink.iter().enumerate() {
        if c > 0.0 {
            all.push((i, SINK, c));
        }
    }
    let source = inner.local[geo.origin()].expect("origin inside Λ_L");
    let mut net = ConductanceNetwork::from_edges(inner.global.len(), source, &all)?;
    net.shells = Some(inner.global.iter().map(|&i| geo.sup_norm(i)).collect());
    Ok((net, inner.global))
}

struct InnerBox {
    global: Vec<usize>,
    local: Vec<Option<usize>>,
}

impl InnerBox {
    fn new(geo: &BoxGeometry, l: usize) -> Self {
        let mut local = vec![None; geo.len()];
        let mut global = Vec::new();
        for i in 0..geo.len() {
            if geo.sup_norm(i) <= l {
                local[i] = Some(global.len());
                global.push(i);
            }
        }
        InnerBox { global, local }
    }
}

/// `R_eff(source ↔ δ)`: potential 1 at the source, 0 at δ, `R = 1/current`.
pub fn effective_resistance(net: &ConductanceNetwork) -> Result<f64, ResistanceError> {
    let (dist, sink_dist) = net.levels();
    if sink_dist.is_none() {
        return Err(ResistanceError::Disconnected);
    }
    // Unknowns: reachable nodes other than the source, in index order.
    let mut index = vec![None; net.n];
    let mut nodes = Vec::new();
    for v in 0..net.n {
        if v != net.source && dist[v].is_some() {
            index[v] = Some(nodes.len());
            nodes.push(v);
        }
    }
    let m = nodes.len();
    let s = net.source;
    let mut current = net.sink[s];
    for &(i, j, c) in &net.edges {
        if i == s || j == s {
            current += c;
        }
    }
    if m == 0 {
        return Ok(1.0 / current);
    }
    let mut bw = 0;
    for &(i, j, _) in &net.edges {
        if let (Some(a), Some(b)) = (index[i], index[j]) {
            bw = bw.max(a.abs_diff(b));
        }
    }
    let mut lap = BandMatrix::zeros(m, bw);
    let mut rhs = vec![0.0; m];
    for (k, &v) in nodes.iter().enumerate() {
        lap.add(k, k, net.sink[v]);
    }
    for &(i, j, c) in &net.edges {
        match (index[i], index[j]) {
            (Some(a), Some(b)) => {
                lap.add(a, a, c);
                lap.add(b, b, c);
                lap.add(a, b, -c);
            }
            (Some(a), None) | (None, Some(a)) => {
                // The other end is the source at potential 1.
                lap.add(a, a, c);
                rhs[a] += c;
            }
            (None, None) => {}
        }
    }
    let chol = lap.cholesky().map_err(ResistanceError::Singular)?;
    let phi = chol.solve_refined(&lap, &rhs);
    for &(i, j, c) in &net.edges {
        if i == s {
            current -= c * phi[index[j].unwrap()];
        } else if j == s {
            current -= c * phi[index[i].unwrap()];
        }
    }
    Ok(1.0 / current)
}

/// Nash–Williams lower bound `Σ_k 1/C(Π_k)` over disjoint cutsets separating
/// the source from δ: consecutive ℓ∞ shells for lattice networks, BFS levels
/// otherwise.
pub fn nash_williams_bound(net: &ConductanceNetwork) -> Result<f64, ResistanceError> {
    let (dist, sink_level) = net.levels();
    let sink_level = sink_level.ok_or(ResistanceError::Disconnected)?;
    if let Some(sh) = &net.shells {
        let top = sh.iter().copied().max().unwrap_or(0) + 1;
        // Shell cutsets only separate when every sink edge leaves the last shell.
        let valid = sh[net.source] == 0
            && net
                .sink
                .iter()
                .zip(sh)
                .all(|(&c, &k)| c == 0.0 || k + 1 == top);
        if valid {
            let level: Vec<Option<usize>> = sh.iter().map(|&k| Some(k)).collect();
            return Ok(cutset_sum(net, &level, top));
        }
    }
    Ok(cutset_sum(net, &dist, sink_level))
}

fn cutset_sum(net: &ConductanceNetwork, level: &[Option<usize>], top: usize) -> f64 {
    let mut cut = vec![0.0; top];
    for &(i, j, c) in &net.edges {
        if let (Some(a), Some(b)) = (level[i], level[j]) {
            if a.abs_diff(b) == 1 && a.max(b) < top {
                cut[a.min(b)] += c;
            }
        }
    }
    for (v, &c) in net.sink.iter().enumerate() {
        if let Some(a) = level[v] {
            if c > 0.0 && a + 1 == top {
                cut[a] += c;
            }
        }
    }
    cut.iter().filter(|&&c| c > 0.0).map(|c| 1.0 / c).sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    /// `(𝓗̃^D_{Λ_L})⁻¹(0,0)` by direct solve.
    pub green: f64,
    /// Effective resistance of the induced network.
    pub resistance: f64,
    pub rel_error: f64,
    /// `‖𝓗̃h‖_∞` on Λ_K.
    pub harmonicity: f64,
    pub nash_williams: f64,
    pub g00: f64,
}

/// Evaluates both sides of the resistance identity for one field on Λ_K.
pub fn identity_check(f: &BetaField, l: usize) -> Result<IdentityReport, ResistanceError> {
    let geo = geometry(f)?;
    if l >= geo.half_width {
        return Err(ResistanceError::BoxOrder {
            inner: l,
            outer: geo.half_width,
        });
    }
    let w = f.coupling().ok_or(ResistanceError::NotLattice)?;
    let s = build_surrogate(f)?;
    let bt = tilted_field(f, &s);
    let inner = InnerBox::new(&geo, l);
    let g = f.graph();
    let m = inner.global.len();
    let bw = inner
        .global
        .iter()
        .enumerate()
        .flat_map(|(li, &i)| {
            let local = &inner.local;
            g.neighbors(i)
                .iter()
                .filter_map(move |&(j, _)| local[j].map(|lj| lj.abs_diff(li)))
        })
        .max()
        .unwrap_or(0);
    let mut a = BandMatrix::zeros(m, bw);
    for (li, &i) in inner.global.iter().enumerate() {
        let mut inside = 0usize;
        for &(j, wij) in g.neighbors(i) {
            if let Some(lj) = inner.local[j] {
                inside += 1;
                if lj < li {
                    a.set(li, lj, -wij);
                }
            }
        }
        let dirichlet = w * (2 * geo.d - inside) as f64;
        a.set(li, li, 2.0 * bt[i] + dirichlet);
    }
    let src = inner.local[geo.origin()].unwrap();
    let chol = a.cholesky().map_err(ResistanceError::Singular)?;
    let mut e = vec![0.0; m];
    e[src] = 1.0;
    let green = chol.solve_refined(&a, &e)[src];
    let (net, _) = build_network(f, &s, l)?;
    let resistance = effective_resistance(&net)?;
    Ok(IdentityReport {
        green,
        resistance,
        rel_error: ((green - resistance) / resistance).abs(),
        harmonicity: harmonicity_residual(f, &s),
        nash_williams: nash_williams_bound(&net)?,
        g00: s.g00,
    })
}
