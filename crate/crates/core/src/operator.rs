//! Finite-volume operators `𝓗 = 2β − P^W` (simple or Dirichlet boundary,
//! optionally scaled by `1/W`), eigenvalue counting, Green functions, the
//! u-field and the random-walk path expansion.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::beta_field::BetaField;
use crate::graph::{remove_vertex, VertexId, WeightedGraph};
use crate::linalg::tridiag::Tridiagonal;
use crate::linalg::{BandCholesky, BandMatrix, DenseSym, LinalgError};

/// Largest non-path operator handled by the dense counting route.
pub const DEFAULT_DENSE_CUTOFF: usize = 4096;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OperatorError {
    #[error("{0} needs a lattice box (dimension and coupling metadata)")]
    NotLattice(&'static str),
    #[error("operator of size {n} is not a path and exceeds the dense cutoff {cutoff}")]
    UnsupportedSize { n: usize, cutoff: usize },
    #[error("β has {got} entries, graph has {expected} vertices")]
    Dimension { expected: usize, got: usize },
    #[error("vertex {0} out of range")]
    VertexOutOfRange(usize),
    #[error("boundary field is identically zero, u-field undefined")]
    ZeroEta,
    #[error("factorization failed, field is not admissible: {0}")]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Bc {
    Simple,
    Dirichlet,
}

impl std::str::FromStr for Bc {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "simple" => Ok(Bc::Simple),
            "dirichlet" => Ok(Bc::Dirichlet),
            other => Err(format!("unknown boundary condition `{other}`")),
        }
    }
}

impl std::fmt::Display for Bc {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Bc::Simple => "simple",
            Bc::Dirichlet => "dirichlet",
        })
    }
}

/// Sparse symmetric operator on the vertices of a graph.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    diag: Vec<f64>,
    /// `(i, j, value)` with `i < j`; values are negative edge weights.
    offdiag: Vec<(usize, usize, f64)>,
    bc: Bc,
    scaled: bool,
    bandwidth: usize,
    path: bool,
}

/// Assembles `𝓗^bc_{β}` (or `H^bc = 𝓗^bc/W` when `scaled`) for a field.
pub fn assemble(f: &BetaField, bc: Bc, scaled: bool) -> Result<OperatorMatrix, OperatorError> {
    assemble_beta(f.graph(), f.beta(), bc, scaled)
}

/// As [`assemble`] from a graph and a raw β vector.
pub fn assemble_beta(
    g: &WeightedGraph,
    beta: &[f64],
    bc: Bc,
    scaled: bool,
) -> Result<OperatorMatrix, OperatorError> {
    let n = g.vertex_count();
    if beta.len() != n {
        return Err(OperatorError::Dimension {
            expected: n,
            got: beta.len(),
        });
    }
    let mut diag: Vec<f64> = beta.iter().map(|b| 2.0 * b).collect();
    if bc == Bc::Dirichlet {
        let info = g.lattice().ok_or(OperatorError::NotLattice("Dirichlet boundary"))?;
        let two_d = 2 * info.geometry.d;
        for (i, di) in diag.iter_mut().enumerate() {
            *di += info.coupling * (two_d - g.degree(i)) as f64;
        }
    }
    let mut offdiag: Vec<(usize, usize, f64)> =
        g.edges().iter().map(|e| (e.a, e.b, -e.weight)).collect();
    if scaled {
        let w = g.coupling().ok_or(OperatorError::NotLattice("scaled operator"))?;
        diag.iter_mut().for_each(|d| *d /= w);
        offdiag.iter_mut().for_each(|e| e.2 /= w);
    }
    Ok(OperatorMatrix {
        diag,
        offdiag,
        bc,
        scaled,
        bandwidth: g.bandwidth(),
        path: g.is_path(),
    })
}

impl OperatorMatrix {
    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn offdiag(&self) -> &[(usize, usize, f64)] {
        &self.offdiag
    }

    pub fn bc(&self) -> Bc {
        self.bc
    }

    pub fn is_scaled(&self) -> bool {
        self.scaled
    }

    pub fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    /// True when the operator is tridiagonal in the vertex order.
    pub fn is_path(&self) -> bool {
        self.path
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return self.diag[i];
        }
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        self.offdiag
            .iter()
            .find(|e| e.0 == a && e.1 == b)
            .map_or(0.0, |e| e.2)
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut out: Vec<f64> = self.diag.iter().zip(x).map(|(d, v)| d * v).collect();
        for &(i, j, v) in &self.offdiag {
            out[i] += v * x[j];
            out[j] += v * x[i];
        }
        out
    }

    pub fn to_band(&self) -> BandMatrix {
        let mut b = BandMatrix::zeros(self.len(), self.bandwidth);
        for (i, &d) in self.diag.iter().enumerate() {
            b.set(i, i, d);
        }
        for &(i, j, v) in &self.offdiag {
            b.set(i, j, v);
        }
        b
    }

    pub fn to_dense(&self) -> DenseSym {
        let mut m = DenseSym::zeros(self.len());
        for (i, &d) in self.diag.iter().enumerate() {
            m.set(i, i, d);
        }
        for &(i, j, v) in &self.offdiag {
            m.set(i, j, v);
        }
        m
    }

    /// The tridiagonal form, for path operators only.
    pub fn tridiagonal(&self) -> Option<Tridiagonal> {
        if !self.path {
            return None;
        }
        let n = self.len();
        let mut off = vec![0.0; n.saturating_sub(1)];
        for &(i, j, v) in &self.offdiag {
            debug_assert_eq!(j, i + 1);
            off[i] = v;
        }
        Some(Tridiagonal::new(self.diag.clone(), off))
    }

    pub fn cholesky(&self) -> Result<BandCholesky, OperatorError> {
        Ok(self.to_band().cholesky()?)
    }

    /// Coordinate-format dump with header `# rso-matrix v1`, both triangles.
    pub fn to_dump(&self) -> String {
        let mut entries: Vec<(usize, usize, f64)> = self
            .diag
            .iter()
            .enumerate()
            .map(|(i, &d)| (i, i, d))
            .collect();
        for &(i, j, v) in &self.offdiag {
            entries.push((i, j, v));
            entries.push((j, i, v));
        }
        entries.sort_by_key(|e| (e.0, e.1));
        let mut out = String::from("# rso-matrix v1\n");
        for (i, j, v) in entries {
            let _ = writeln!(out, "{i} {j} {v:.16e}");
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CountMethod {
    Sturm,
    DenseBisection,
    Inertia,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralCount {
    pub threshold: f64,
    pub count: usize,
    pub method: CountMethod,
}

/// Number of eigenvalues `λ ≤ e`, exact comparison, no epsilon inflation.
/// Path operators use Sturm counting on the tridiagonal; other operators try
/// LDLᵀ inertia on the band and fall back to Householder tridiagonalization
/// plus Sturm counting when the pivot-free factorization is unreliable.
pub fn count_eigenvalues_leq(m: &OperatorMatrix, e: f64) -> Result<SpectralCount, OperatorError> {
    count_eigenvalues_leq_with_cutoff(m, e, DEFAULT_DENSE_CUTOFF)
}

pub fn count_eigenvalues_leq_with_cutoff(
    m: &OperatorMatrix,
    e: f64,
    cutoff: usize,
) -> Result<SpectralCount, OperatorError> {
    let mut counter = SpectralCounter::with_cutoff(m, 1, cutoff)?;
    Ok(counter.count(e))
}

/// Forces one counting route. `Sturm` needs a path operator.
pub fn count_with_method(
    m: &OperatorMatrix,
    e: f64,
    method: CountMethod,
) -> Result<SpectralCount, OperatorError> {
    let count = match method {
        CountMethod::Sturm => m
            .tridiagonal()
            .ok_or(OperatorError::NotLattice("Sturm counting on a non-path operator"))?
            .count_leq(e),
        CountMethod::DenseBisection => m.to_dense().tridiagonalize().count_leq(e),
        CountMethod::Inertia => m.to_band().inertia_below(e)?,
    };
    Ok(SpectralCount {
        threshold: e,
        count,
        method,
    })
}

/// Counts eigenvalues at many energies for one operator, reusing the
/// expensive part (tridiagonal form or band) across calls.
pub struct SpectralCounter {
    n: usize,
    native_path: bool,
    tridiag: Option<Tridiagonal>,
    band: Option<BandMatrix>,
    dense: Option<DenseSym>,
}

impl SpectralCounter {
    /// `energies_hint` is the expected number of [`SpectralCounter::count`]
    /// calls; it decides between per-energy band inertia and a single dense
    /// tridiagonalization.
    pub fn new(m: &OperatorMatrix, energies_hint: usize) -> Result<Self, OperatorError> {
        Self::with_cutoff(m, energies_hint, DEFAULT_DENSE_CUTOFF)
    }

    pub fn with_cutoff(
        m: &OperatorMatrix,
        energies_hint: usize,
        cutoff: usize,
    ) -> Result<Self, OperatorError> {
        let n = m.len();
        if let Some(t) = m.tridiagonal() {
            return Ok(SpectralCounter {
                n,
                native_path: true,
                tridiag: Some(t),
                band: None,
                dense: None,
            });
        }
        if n > cutoff {
            return Err(OperatorError::UnsupportedSize { n, cutoff });
        }
        let b = m.bandwidth() as f64;
        let nf = n as f64;
        let inertia_cost = energies_hint.max(1) as f64 * nf * b * b;
        let dense_cost = nf * nf * nf;
        if inertia_cost <= dense_cost {
            Ok(SpectralCounter {
                n,
                native_path: false,
                tridiag: None,
                band: Some(m.to_band()),
                dense: Some(m.to_dense()),
            })
        } else {
            Ok(SpectralCounter {
                n,
                native_path: false,
                tridiag: Some(m.to_dense().tridiagonalize()),
                band: None,
                dense: None,
            })
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn count(&mut self, e: f64) -> SpectralCount {
        if let Some(band) = &self.band {
            match band.inertia_below(e) {
                Ok(count) => {
                    return SpectralCount {
                        threshold: e,
                        count,
                        method: CountMethod::Inertia,
                    }
                }
                Err(_) => {
                    if self.tridiag.is_none() {
                        let dense = self.dense.take().expect("dense copy kept for fallback");
                        self.tridiag = Some(dense.tridiagonalize());
                    }
                    let count = self.tridiag.as_ref().unwrap().count_leq(e);
                    return SpectralCount {
                        threshold: e,
                        count,
                        method: CountMethod::DenseBisection,
                    };
                }
            }
        }
        let t = self.tridiag.as_ref().expect("counter has a tridiagonal form");
        SpectralCount {
            threshold: e,
            count: t.count_leq(e),
            method: if self.native_path {
                CountMethod::Sturm
            } else {
                CountMethod::DenseBisection
            },
        }
    }
}

/// `count/|Λ|`.
pub fn finite_volume_ids(m: &OperatorMatrix, e: f64) -> Result<f64, OperatorError> {
    let c = count_eigenvalues_leq(m, e)?;
    Ok(c.count as f64 / m.len() as f64)
}

/// Factored operator for repeated Green-function solves.
pub struct GreenSolver {
    band: BandMatrix,
    chol: BandCholesky,
}

impl GreenSolver {
    pub fn new(m: &OperatorMatrix) -> Result<Self, OperatorError> {
        let band = m.to_band();
        let chol = band.cholesky()?;
        Ok(GreenSolver { band, chol })
    }

    pub fn len(&self) -> usize {
        self.band.len()
    }

    pub fn is_empty(&self) -> bool {
        self.band.is_empty()
    }

    /// `m⁻¹ b` with one step of iterative refinement.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        self.chol.solve_refined(&self.band, b)
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        let mut e = vec![0.0; self.len()];
        e[j] = 1.0;
        self.solve(&e)
    }

    pub fn log_det(&self) -> f64 {
        self.chol.log_det()
    }
}

/// Column `j` of `m⁻¹`.
pub fn green_column(m: &OperatorMatrix, j: usize) -> Result<Vec<f64>, OperatorError> {
    if j >= m.len() {
        return Err(OperatorError::VertexOutOfRange(j));
    }
    Ok(GreenSolver::new(m)?.column(j))
}

/// `u_j = ln (𝓗⁻¹η)(j)`.
pub fn u_field(f: &BetaField) -> Result<Vec<f64>, OperatorError> {
    let eta = f.graph().eta();
    if !eta.iter().any(|&e| e > 0.0) {
        return Err(OperatorError::ZeroEta);
    }
    let m = assemble(f, Bc::Simple, false)?;
    let x = GreenSolver::new(&m)?.solve(eta);
    Ok(x.iter().map(|v| v.ln()).collect())
}

/// β from a u-configuration: `2β_i = Σ_j W_ij e^{u_j − u_i} + η_i e^{−u_i}`.
pub fn beta_from_u(u: &[f64], g: &WeightedGraph) -> Vec<f64> {
    (0..g.vertex_count())
        .map(|i| {
            let s: f64 = g
                .neighbors(i)
                .iter()
                .map(|&(j, w)| w * (u[j] - u[i]).exp())
                .sum();
            0.5 * (s + g.eta()[i] * (-u[i]).exp())
        })
        .collect()
}

/// Schur variables at a vertex, each computed two ways.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchurPair {
    /// `2β_j − P_{j,j^c} 𝓗_{Λ∖{j}}⁻¹ P_{j^c,j}`.
    pub y: f64,
    /// `1/𝓗⁻¹(j,j)`.
    pub y_from_green: f64,
    /// `(𝓗⁻¹η)(j)/𝓗⁻¹(j,j)`.
    pub a: f64,
    /// `η_j + P_{j,j^c} 𝓗_{Λ∖{j}}⁻¹ η_{j^c}`.
    pub a_from_complement: f64,
}

pub fn schur_y_and_a(f: &BetaField, j: usize) -> Result<SchurPair, OperatorError> {
    let g = f.graph();
    let n = g.vertex_count();
    if j >= n {
        return Err(OperatorError::VertexOutOfRange(j));
    }
    let beta = f.beta();
    let eta = g.eta();
    let full = GreenSolver::new(&assemble(f, Bc::Simple, false)?)?;
    let col = full.column(j);
    let geta = full.solve(eta);
    let gjj = col[j];
    let (y, a_alt) = if n == 1 {
        (2.0 * beta[0], eta[0])
    } else {
        let rest = remove_vertex(g, VertexId(j)).map_err(|_| OperatorError::VertexOutOfRange(j))?;
        let shift = |v: usize| if v > j { v - 1 } else { v };
        let beta_rest: Vec<f64> = (0..n).filter(|&i| i != j).map(|i| beta[i]).collect();
        let m = assemble_beta(&rest, &beta_rest, Bc::Simple, false)?;
        let solver = GreenSolver::new(&m)?;
        let mut p = vec![0.0; n - 1];
        for &(k, w) in g.neighbors(j) {
            p[shift(k)] = w;
        }
        let x = solver.solve(&p);
        let eta_rest: Vec<f64> = (0..n).filter(|&i| i != j).map(|i| eta[i]).collect();
        let xe = solver.solve(&eta_rest);
        let y = 2.0 * beta[j] - dot(&p, &x);
        (y, eta[j] + dot(&p, &xe))
    };
    Ok(SchurPair {
        y,
        y_from_green: 1.0 / gjj,
        a: geta[j] / gjj,
        a_from_complement: a_alt,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Sum over nearest-neighbour paths `i → j` of length at most `max_len` of
/// `Π_edges W / Π_vertices 2β`, by dynamic programming on (vertex, length).
pub fn path_sum_green(g: &WeightedGraph, beta: &[f64], i: usize, j: usize, max_len: usize) -> f64 {
    let n = g.vertex_count();
    let mut p = vec![0.0; n];
    p[i] = 1.0 / (2.0 * beta[i]);
    let mut total = p[j];
    let mut next = vec![0.0; n];
    for _ in 0..max_len {
        next.iter_mut().for_each(|x| *x = 0.0);
        for (u, &pu) in p.iter().enumerate() {
            if pu == 0.0 {
                continue;
            }
            for &(v, w) in g.neighbors(u) {
                next[v] += pu * w;
            }
        }
        for (v, x) in next.iter_mut().enumerate() {
            *x /= 2.0 * beta[v];
        }
        std::mem::swap(&mut p, &mut next);
        total += p[j];
    }
    total
}

/// Both sides of `(H^S)⁻¹(0,0) − (H^D)⁻¹(0,0) = Σ_{j∈∂Λ} (H^S)⁻¹(0,j) M_j (H^D)⁻¹(j,0)`
/// with `M = W(2d − n)` at the vertex `origin`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResolventCheck {
    pub simple: f64,
    pub dirichlet: f64,
    pub boundary_sum: f64,
}

impl ResolventCheck {
    pub fn residual(&self) -> f64 {
        (self.simple - self.dirichlet - self.boundary_sum).abs()
    }
}

pub fn resolvent_identity(f: &BetaField, origin: usize, scaled: bool) -> Result<ResolventCheck, OperatorError> {
    let s = assemble(f, Bc::Simple, scaled)?;
    let d = assemble(f, Bc::Dirichlet, scaled)?;
    let gs = green_column(&s, origin)?;
    let gd = green_column(&d, origin)?;
    let boundary_sum = (0..s.len())
        .map(|j| gs[j] * (d.diag()[j] - s.diag()[j]) * gd[j])
        .sum();
    Ok(ResolventCheck {
        simple: gs[origin],
        dirichlet: gd[origin],
        boundary_sum,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_box, BoundaryKind};
    use std::sync::Arc;

    fn field(d: usize, l: usize, w: f64, beta: f64) -> BetaField {
        let g = Arc::new(build_box(d, l, w, BoundaryKind::Wired).unwrap());
        let n = g.vertex_count();
        BetaField::new(g, vec![beta; n]).unwrap()
    }

    #[test]
    fn assembly_examples() {
        let f = field(1, 1, 1.0, 1.0);
        let s = assemble(&f, Bc::Simple, false).unwrap();
        assert_eq!(s.diag(), &[2.0, 2.0, 2.0]);
        assert!(s.offdiag().iter().all(|e| e.2 == -1.0));
        let d = assemble(&f, Bc::Dirichlet, false).unwrap();
        assert_eq!(d.diag(), &[3.0, 2.0, 3.0]);
        let f2 = field(1, 1, 2.0, 1.0);
        let sc = assemble(&f2, Bc::Simple, true).unwrap();
        assert_eq!(sc.diag(), &[1.0, 1.0, 1.0]);
        assert!(sc.offdiag().iter().all(|e| e.2 == -1.0));
    }

    #[test]
    fn counting_examples() {
        let f = field(1, 1, 1.0, 1.0);
        let m = assemble(&f, Bc::Simple, false).unwrap();
        for (e, c) in [(1.0, 1), (2.0, 2), (4.0, 3), (0.0, 0)] {
            let sc = count_eigenvalues_leq(&m, e).unwrap();
            assert_eq!(sc.count, c, "E={e}");
            assert_eq!(sc.method, CountMethod::Sturm);
        }
        assert!((finite_volume_ids(&m, 2.0).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(finite_volume_ids(&m, -1.0).unwrap(), 0.0);
        assert_eq!(finite_volume_ids(&m, 10.0).unwrap(), 1.0);
    }

    #[test]
    fn non_path_uses_inertia_or_dense() {
        let f = field(2, 2, 1.0, 2.5);
        let m = assemble(&f, Bc::Simple, false).unwrap();
        let a = count_eigenvalues_leq(&m, 4.3).unwrap();
        let b = count_with_method(&m, 4.3, CountMethod::DenseBisection).unwrap();
        assert_eq!(a.count, b.count);
        assert!(count_with_method(&m, 4.3, CountMethod::Sturm).is_err());
        let err = count_eigenvalues_leq_with_cutoff(&m, 1.0, 10).unwrap_err();
        assert!(matches!(err, OperatorError::UnsupportedSize { n: 25, cutoff: 10 }));
    }

    #[test]
    fn green_examples() {
        let g = Arc::new(WeightedGraph::from_edges(1, vec![], vec![1.0]).unwrap());
        let f = BetaField::new(g, vec![0.7]).unwrap();
        let c = green_column(&assemble(&f, Bc::Simple, false).unwrap(), 0).unwrap();
        assert!((c[0] - 1.0 / 1.4).abs() < 1e-15);

        let w = 0.8;
        let g = Arc::new(WeightedGraph::from_edges(2, vec![(0, 1, w)], vec![0.0; 2]).unwrap());
        let (b1, b2) = (0.9, 1.3);
        let f = BetaField::new(g, vec![b1, b2]).unwrap();
        let m = assemble(&f, Bc::Simple, false).unwrap();
        let c = green_column(&m, 0).unwrap();
        let det = 4.0 * b1 * b2 - w * w;
        assert!((c[0] - 2.0 * b2 / det).abs() < 1e-14);
        assert!((c[1] - w / det).abs() < 1e-14);
    }

    #[test]
    fn green_residual_and_positivity() {
        let f = field(2, 3, 1.0, 2.2);
        let m = assemble(&f, Bc::Simple, false).unwrap();
        let j = 17;
        let c = green_column(&m, j).unwrap();
        let r = m.matvec(&c);
        for (i, v) in r.iter().enumerate() {
            let e = if i == j { 1.0 } else { 0.0 };
            assert!((v - e).abs() < 1e-10);
        }
        assert!(c.iter().all(|&x| x > 0.0));
    }

    #[test]
    fn u_field_examples() {
        let g = Arc::new(WeightedGraph::from_edges(1, vec![], vec![1.5]).unwrap());
        let f = BetaField::new(g.clone(), vec![0.4]).unwrap();
        let u = u_field(&f).unwrap();
        assert!((u[0] - (1.5f64 / 0.8).ln()).abs() < 1e-14);
        let b = beta_from_u(&u, &g);
        assert!((b[0] - 0.4).abs() < 1e-14);

        let zero = Arc::new(build_box(1, 1, 1.0, BoundaryKind::Zero).unwrap());
        let f = BetaField::new(zero.clone(), vec![1.0; 3]).unwrap();
        assert_eq!(u_field(&f).unwrap_err(), OperatorError::ZeroEta);
        let b0 = beta_from_u(&[0.0; 3], &zero);
        assert_eq!(b0, vec![0.5, 1.0, 0.5]);
    }

    #[test]
    fn schur_examples() {
        let g = Arc::new(WeightedGraph::from_edges(1, vec![], vec![0.6]).unwrap());
        let f = BetaField::new(g, vec![0.9]).unwrap();
        let s = schur_y_and_a(&f, 0).unwrap();
        assert!((s.y - 1.8).abs() < 1e-15);
        assert!((s.a - 0.6).abs() < 1e-14);

        let w = 1.1;
        let g = Arc::new(WeightedGraph::from_edges(2, vec![(0, 1, w)], vec![0.0; 2]).unwrap());
        let f = BetaField::new(g, vec![1.0, 0.8]).unwrap();
        let s = schur_y_and_a(&f, 0).unwrap();
        assert!((s.y - (2.0 - w * w / 1.6)).abs() < 1e-14);
        assert!((s.y - s.y_from_green).abs() < 1e-12);
    }

    #[test]
    fn path_sum_examples() {
        let w = 0.7;
        let g = WeightedGraph::from_edges(2, vec![(0, 1, w)], vec![0.0; 2]).unwrap();
        let beta = [0.8, 1.1];
        assert!((path_sum_green(&g, &beta, 0, 0, 0) - 1.0 / 1.6).abs() < 1e-15);
        let limit = w / (4.0 * beta[0] * beta[1] - w * w);
        assert!((path_sum_green(&g, &beta, 0, 1, 400) - limit).abs() < 1e-13);
    }

    #[test]
    fn simple_dominates_dirichlet_and_resolvent() {
        let f = field(2, 2, 1.3, 3.0);
        let r = resolvent_identity(&f, 12, false).unwrap();
        assert!(r.dirichlet <= r.simple);
        assert!(r.residual() < 1e-12);
    }

    #[test]
    fn dump_header() {
        let f = field(1, 1, 1.0, 1.0);
        let d = assemble(&f, Bc::Simple, false).unwrap().to_dump();
        assert!(d.starts_with("# rso-matrix v1\n0 0 2.0000000000000000e0\n0 1 -1"));
        assert_eq!(d.lines().count(), 1 + 3 + 4);
    }

    #[test]
    fn bc_parse() {
        assert_eq!("Dirichlet".parse::<Bc>().unwrap(), Bc::Dirichlet);
        assert!("periodic".parse::<Bc>().is_err());
    }
}
