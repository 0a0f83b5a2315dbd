//! Finite weighted graphs: boxes of ℤ^d, small custom graphs, boundary fields
//! and the δ-augmented graph that carries a wired boundary as real edges.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default guard on the number of vertices a box may have.
pub const DEFAULT_MAX_VERTICES: usize = 65_536;

#[derive(Debug, Error, PartialEq)]
pub enum GraphError {
    #[error("box with d={d}, L={side} has {count} vertices, above the limit of {limit}")]
    TooManyVertices {
        d: usize,
        side: usize,
        count: u128,
        limit: usize,
    },
    #[error("invalid box parameters: {0}")]
    InvalidBox(String),
    #[error("self-loop at vertex {0}")]
    SelfLoop(usize),
    #[error("edge ({0}, {1}) has non-positive or non-finite weight {2}")]
    BadWeight(usize, usize, f64),
    #[error("edge ({0}, {1}) stored twice")]
    DuplicateEdge(usize, usize),
    #[error("vertex {0} out of range for a graph of {1} vertices")]
    VertexOutOfRange(usize, usize),
    #[error("boundary field entry {0} is negative or non-finite: {1}")]
    BadEta(usize, f64),
    #[error("boundary field has length {0}, graph has {1} vertices")]
    EtaLength(usize, usize),
    #[error("pinning strength must be positive, got {0}")]
    BadPinning(f64),
    #[error("boundary field is identically zero, δ would be disconnected")]
    ZeroEta,
    #[error("graph dump parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// Dense 0-based vertex index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VertexId(pub usize);

impl VertexId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl From<usize> for VertexId {
    fn from(i: usize) -> Self {
        VertexId(i)
    }
}

/// Boundary field attached to a box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum BoundaryKind {
    Zero,
    Wired,
    Pinned { vertex: VertexId, strength: f64 },
    Custom(Vec<f64>),
}

/// Geometry of the box `[-L, L]^d ∩ ℤ^d` with row-major encoding: the last
/// coordinate varies fastest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoxGeometry {
    pub d: usize,
    pub half_width: usize,
}

impl BoxGeometry {
    pub fn side(&self) -> usize {
        2 * self.half_width + 1
    }

    pub fn len(&self) -> usize {
        self.side().pow(self.d as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Index of the origin.
    pub fn origin(&self) -> usize {
        (self.len() - 1) / 2
    }

    /// Distance between indices `i` and `i + e_{d-1}`, i.e. the bandwidth of
    /// any nearest-neighbour operator in this ordering.
    pub fn bandwidth(&self) -> usize {
        self.side().pow(self.d.saturating_sub(1) as u32)
    }

    pub fn coord(&self, mut index: usize) -> Vec<i64> {
        let side = self.side();
        let mut c = vec![0i64; self.d];
        for k in (0..self.d).rev() {
            c[k] = (index % side) as i64 - self.half_width as i64;
            index /= side;
        }
        c
    }

    pub fn index(&self, coord: &[i64]) -> Option<usize> {
        if coord.len() != self.d {
            return None;
        }
        let l = self.half_width as i64;
        let side = self.side();
        let mut idx = 0usize;
        for &x in coord {
            if x < -l || x > l {
                return None;
            }
            idx = idx * side + (x + l) as usize;
        }
        Some(idx)
    }

    /// ℓ∞ norm of the coordinate of `index`.
    pub fn sup_norm(&self, index: usize) -> usize {
        self.coord(index)
            .iter()
            .map(|x| x.unsigned_abs() as usize)
            .max()
            .unwrap_or(0)
    }

    /// Graph (ℓ¹) distance to the origin.
    pub fn l1_norm(&self, index: usize) -> usize {
        self.coord(index)
            .iter()
            .map(|x| x.unsigned_abs() as usize)
            .sum()
    }

    /// Whether `index` lies on the inner boundary ∂Λ (some neighbour outside).
    pub fn on_boundary(&self, index: usize) -> bool {
        self.sup_norm(index) == self.half_width
    }
}

/// Box metadata carried by graphs built with [`build_box`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeInfo {
    pub geometry: BoxGeometry,
    pub coupling: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub weight: f64,
}

/// Finite graph with symmetric positive edge weights and a nonnegative
/// per-vertex boundary field η. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    n: usize,
    edges: Vec<Edge>,
    eta: Vec<f64>,
    offsets: Vec<usize>,
    adjacency: Vec<(usize, f64)>,
    lattice: Option<LatticeInfo>,
}

impl WeightedGraph {
    /// Builds a graph from an edge list, validating every invariant. Each
    /// unordered pair must appear at most once (in either orientation).
    pub fn from_edges(
        n: usize,
        edges: impl IntoIterator<Item = (usize, usize, f64)>,
        eta: Vec<f64>,
    ) -> Result<Self, GraphError> {
        if eta.len() != n {
            return Err(GraphError::EtaLength(eta.len(), n));
        }
        for (i, &e) in eta.iter().enumerate() {
            if !(e >= 0.0 && e.is_finite()) {
                return Err(GraphError::BadEta(i, e));
            }
        }
        let mut list = Vec::new();
        for (a, b, w) in edges {
            if a >= n {
                return Err(GraphError::VertexOutOfRange(a, n));
            }
            if b >= n {
                return Err(GraphError::VertexOutOfRange(b, n));
            }
            if a == b {
                return Err(GraphError::SelfLoop(a));
            }
            if !(w > 0.0 && w.is_finite()) {
                return Err(GraphError::BadWeight(a, b, w));
            }
            let (a, b) = if a < b { (a, b) } else { (b, a) };
            list.push(Edge { a, b, weight: w });
        }
        let mut keys: Vec<(usize, usize)> = list.iter().map(|e| (e.a, e.b)).collect();
        keys.sort_unstable();
        if let Some(w) = keys.windows(2).find(|w| w[0] == w[1]) {
            return Err(GraphError::DuplicateEdge(w[0].0, w[0].1));
        }
        Ok(Self::assemble(n, list, eta, None))
    }

    fn assemble(n: usize, edges: Vec<Edge>, eta: Vec<f64>, lattice: Option<LatticeInfo>) -> Self {
        let mut degree = vec![0usize; n];
        for e in &edges {
            degree[e.a] += 1;
            degree[e.b] += 1;
        }
        let mut offsets = vec![0usize; n + 1];
        for i in 0..n {
            offsets[i + 1] = offsets[i] + degree[i];
        }
        let mut fill = offsets.clone();
        let mut adjacency = vec![(0usize, 0.0f64); offsets[n]];
        for e in &edges {
            adjacency[fill[e.a]] = (e.b, e.weight);
            fill[e.a] += 1;
            adjacency[fill[e.b]] = (e.a, e.weight);
            fill[e.b] += 1;
        }
        for i in 0..n {
            adjacency[offsets[i]..offsets[i + 1]].sort_by_key(|&(j, _)| j);
        }
        WeightedGraph {
            n,
            edges,
            eta,
            offsets,
            adjacency,
            lattice,
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn eta(&self) -> &[f64] {
        &self.eta
    }

    pub fn lattice(&self) -> Option<&LatticeInfo> {
        self.lattice.as_ref()
    }

    pub fn geometry(&self) -> Option<&BoxGeometry> {
        self.lattice.as_ref().map(|l| &l.geometry)
    }

    /// Common edge weight of a lattice box.
    pub fn coupling(&self) -> Option<f64> {
        self.lattice.map(|l| l.coupling)
    }

    pub fn neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.adjacency[self.offsets[i]..self.offsets[i + 1]]
    }

    /// Number of neighbours of `i` inside the graph.
    pub fn degree(&self, i: usize) -> usize {
        self.offsets[i + 1] - self.offsets[i]
    }

    /// Σ_j W_ij.
    pub fn weighted_degree(&self, i: usize) -> f64 {
        self.neighbors(i).iter().map(|&(_, w)| w).sum()
    }

    pub fn total_edge_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.weight).sum()
    }

    pub fn weight(&self, i: usize, j: usize) -> Option<f64> {
        let nb = self.neighbors(i);
        nb.binary_search_by_key(&j, |&(k, _)| k).ok().map(|p| nb[p].1)
    }

    /// Maximum |i − j| over edges.
    pub fn bandwidth(&self) -> usize {
        self.edges.iter().map(|e| e.b - e.a).max().unwrap_or(0)
    }

    /// True when the edges are exactly `(i, i+1)` for every `i`, so operators
    /// on the graph are tridiagonal in the natural order.
    pub fn is_path(&self) -> bool {
        self.n >= 1
            && self.edges.len() == self.n - 1
            && (0..self.n.saturating_sub(1)).all(|i| self.weight(i, i + 1).is_some())
    }

    pub fn is_connected(&self) -> bool {
        if self.n == 0 {
            return true;
        }
        let mut seen = vec![false; self.n];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &(u, _) in self.neighbors(v) {
                if !seen[u] {
                    seen[u] = true;
                    count += 1;
                    stack.push(u);
                }
            }
        }
        count == self.n
    }

    /// Same topology and weights with a different boundary field.
    pub fn with_eta(&self, eta: Vec<f64>) -> Result<Self, GraphError> {
        if eta.len() != self.n {
            return Err(GraphError::EtaLength(eta.len(), self.n));
        }
        for (i, &e) in eta.iter().enumerate() {
            if !(e >= 0.0 && e.is_finite()) {
                return Err(GraphError::BadEta(i, e));
            }
        }
        Ok(Self::assemble(self.n, self.edges.clone(), eta, self.lattice))
    }

    /// Same topology with every edge weight multiplied by `factor`.
    pub fn scaled_weights(&self, factor: f64) -> Result<Self, GraphError> {
        let edges: Vec<_> = self
            .edges
            .iter()
            .map(|e| (e.a, e.b, e.weight * factor))
            .collect();
        let mut g = Self::from_edges(self.n, edges, self.eta.clone())?;
        g.lattice = self.lattice.map(|l| LatticeInfo {
            coupling: l.coupling * factor,
            ..l
        });
        Ok(g)
    }

    /// Plain-text dump, header `# rso-graph v1`, one `i j w` line per edge
    /// and one `eta i v` line per vertex.
    pub fn to_dump(&self) -> String {
        let mut out = String::from("# rso-graph v1\n");
        for e in &self.edges {
            let _ = writeln!(out, "{} {} {:.16e}", e.a, e.b, e.weight);
        }
        for (i, v) in self.eta.iter().enumerate() {
            let _ = writeln!(out, "eta {} {:.16e}", i, v);
        }
        out
    }

    pub fn from_dump(text: &str) -> Result<Self, GraphError> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim() == "# rso-graph v1" => {}
            _ => {
                return Err(GraphError::Parse {
                    line: 1,
                    msg: "missing `# rso-graph v1` header".into(),
                })
            }
        }
        let mut edges = Vec::new();
        let mut etas: Vec<(usize, f64)> = Vec::new();
        let mut n = 0usize;
        for (lineno, raw) in lines {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |msg: &str| GraphError::Parse {
                line: lineno + 1,
                msg: msg.to_string(),
            };
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.first() == Some(&"eta") {
                if parts.len() != 3 {
                    return Err(err("expected `eta i v`"));
                }
                let i: usize = parts[1].parse().map_err(|_| err("bad vertex index"))?;
                let v: f64 = parts[2].parse().map_err(|_| err("bad eta value"))?;
                n = n.max(i + 1);
                etas.push((i, v));
            } else {
                if parts.len() != 3 {
                    return Err(err("expected `i j w`"));
                }
                let i: usize = parts[0].parse().map_err(|_| err("bad vertex index"))?;
                let j: usize = parts[1].parse().map_err(|_| err("bad vertex index"))?;
                let w: f64 = parts[2].parse().map_err(|_| err("bad weight"))?;
                n = n.max(i + 1).max(j + 1);
                edges.push((i, j, w));
            }
        }
        let mut eta = vec![0.0; n];
        for (i, v) in etas {
            eta[i] = v;
        }
        Self::from_edges(n, edges, eta)
    }
}

/// Builds the box `Λ_L = [−L, L]^d ∩ ℤ^d` with every nearest-neighbour edge of
/// weight `coupling` and the requested boundary field.
pub fn build_box(
    d: usize,
    half_width: usize,
    coupling: f64,
    boundary: BoundaryKind,
) -> Result<WeightedGraph, GraphError> {
    build_box_with_limit(d, half_width, coupling, boundary, DEFAULT_MAX_VERTICES)
}

pub fn build_box_with_limit(
    d: usize,
    half_width: usize,
    coupling: f64,
    boundary: BoundaryKind,
    max_vertices: usize,
) -> Result<WeightedGraph, GraphError> {
    if d == 0 {
        return Err(GraphError::InvalidBox("dimension must be at least 1".into()));
    }
    if half_width == 0 {
        return Err(GraphError::InvalidBox("L must be at least 1".into()));
    }
    if !(coupling > 0.0 && coupling.is_finite()) {
        return Err(GraphError::InvalidBox(format!(
            "coupling must be positive, got {coupling}"
        )));
    }
    let side = 2 * half_width + 1;
    let count = (side as u128).checked_pow(d as u32).unwrap_or(u128::MAX);
    if count > max_vertices as u128 {
        return Err(GraphError::TooManyVertices {
            d,
            side: half_width,
            count,
            limit: max_vertices,
        });
    }
    let geometry = BoxGeometry { d, half_width };
    let n = count as usize;
    let mut edges = Vec::with_capacity(n * d);
    let mut stride = 1usize;
    let mut strides = vec![0usize; d];
    for k in (0..d).rev() {
        strides[k] = stride;
        stride *= side;
    }
    let mut outside = vec![0usize; n];
    for i in 0..n {
        let c = geometry.coord(i);
        for k in 0..d {
            if c[k] < half_width as i64 {
                edges.push(Edge {
                    a: i,
                    b: i + strides[k],
                    weight: coupling,
                });
            } else {
                outside[i] += 1;
            }
            if c[k] == -(half_width as i64) {
                outside[i] += 1;
            }
        }
    }
    let eta = match boundary {
        BoundaryKind::Zero => vec![0.0; n],
        BoundaryKind::Wired => outside.iter().map(|&m| coupling * m as f64).collect(),
        BoundaryKind::Pinned { vertex, strength } => {
            if !(strength > 0.0 && strength.is_finite()) {
                return Err(GraphError::BadPinning(strength));
            }
            if vertex.0 >= n {
                return Err(GraphError::VertexOutOfRange(vertex.0, n));
            }
            let mut eta = vec![0.0; n];
            eta[vertex.0] = strength;
            eta
        }
        BoundaryKind::Custom(v) => {
            if v.len() != n {
                return Err(GraphError::EtaLength(v.len(), n));
            }
            if let Some((i, &e)) = v.iter().enumerate().find(|(_, e)| !(**e >= 0.0 && e.is_finite())) {
                return Err(GraphError::BadEta(i, e));
            }
            v
        }
    };
    Ok(WeightedGraph::assemble(
        n,
        edges,
        eta,
        Some(LatticeInfo { geometry, coupling }),
    ))
}

/// Rectangular grid with the given side lengths (row-major, last coordinate
/// fastest). Unlike [`build_box`] it need not be centred, so no lattice
/// metadata is attached. Only `Zero` and `Wired` boundaries are accepted.
pub fn build_grid(
    sides: &[usize],
    coupling: f64,
    boundary: BoundaryKind,
) -> Result<WeightedGraph, GraphError> {
    if sides.is_empty() || sides.contains(&0) {
        return Err(GraphError::InvalidBox("grid sides must be positive".into()));
    }
    if !(coupling > 0.0 && coupling.is_finite()) {
        return Err(GraphError::InvalidBox(format!(
            "coupling must be positive, got {coupling}"
        )));
    }
    let n = sides.iter().try_fold(1usize, |acc, &s| acc.checked_mul(s));
    let n = match n {
        Some(n) if n <= DEFAULT_MAX_VERTICES => n,
        _ => {
            return Err(GraphError::InvalidBox("grid has too many vertices".into()));
        }
    };
    let d = sides.len();
    let mut strides = vec![1usize; d];
    for k in (0..d.saturating_sub(1)).rev() {
        strides[k] = strides[k + 1] * sides[k + 1];
    }
    let mut edges = Vec::new();
    let mut outside = vec![0usize; n];
    for i in 0..n {
        for k in 0..d {
            let c = (i / strides[k]) % sides[k];
            if c + 1 < sides[k] {
                edges.push((i, i + strides[k], coupling));
            } else {
                outside[i] += 1;
            }
            if c == 0 {
                outside[i] += 1;
            }
        }
    }
    let eta = match boundary {
        BoundaryKind::Zero => vec![0.0; n],
        BoundaryKind::Wired => outside.iter().map(|&m| coupling * m as f64).collect(),
        _ => {
            return Err(GraphError::InvalidBox(
                "grids support zero or wired boundaries only".into(),
            ))
        }
    };
    WeightedGraph::from_edges(n, edges, eta)
}

/// Graph `g ∪ {δ}`: one extra vertex joined to every `i` with `η_i > 0` by an
/// edge of weight `η_i`; the new boundary field is identically zero.
pub fn attach_delta(g: &WeightedGraph) -> Result<WeightedGraph, GraphError> {
    if !g.eta.iter().any(|&e| e > 0.0) {
        return Err(GraphError::ZeroEta);
    }
    let delta = g.n;
    let mut edges = g.edges.clone();
    edges.extend(
        g.eta
            .iter()
            .enumerate()
            .filter(|(_, &e)| e > 0.0)
            .map(|(i, &e)| Edge {
                a: i,
                b: delta,
                weight: e,
            }),
    );
    Ok(WeightedGraph::assemble(
        g.n + 1,
        edges,
        vec![0.0; g.n + 1],
        None,
    ))
}

/// Induced subgraph on `V ∖ {j}`; vertices above `j` shift down by one and η
/// is restricted without augmentation.
pub fn remove_vertex(g: &WeightedGraph, j: VertexId) -> Result<WeightedGraph, GraphError> {
    let j = j.0;
    if j >= g.n {
        return Err(GraphError::VertexOutOfRange(j, g.n));
    }
    let shift = |v: usize| if v > j { v - 1 } else { v };
    let edges = g
        .edges
        .iter()
        .filter(|e| e.a != j && e.b != j)
        .map(|e| Edge {
            a: shift(e.a),
            b: shift(e.b),
            weight: e.weight,
        })
        .collect();
    let eta = g
        .eta
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != j)
        .map(|(_, &e)| e)
        .collect();
    Ok(WeightedGraph::assemble(g.n - 1, edges, eta, None))
}

/// Restriction of a box graph on Λ_K to the concentric sub-box Λ_L, with the
/// wired boundary field of Λ_L. Returns the graph and, for each vertex of Λ_L,
/// its index in Λ_K.
pub fn sub_box(
    outer: &WeightedGraph,
    half_width: usize,
) -> Result<(WeightedGraph, Vec<usize>), GraphError> {
    let info = outer
        .lattice()
        .ok_or_else(|| GraphError::InvalidBox("sub_box needs a lattice graph".into()))?;
    if half_width > info.geometry.half_width {
        return Err(GraphError::InvalidBox(format!(
            "inner half-width {half_width} exceeds outer {}",
            info.geometry.half_width
        )));
    }
    let inner = build_box(info.geometry.d, half_width, info.coupling, BoundaryKind::Wired)?;
    let ig = *inner.geometry().unwrap();
    let map = (0..inner.vertex_count())
        .map(|i| info.geometry.index(&ig.coord(i)).unwrap())
        .collect();
    Ok((inner, map))
}
