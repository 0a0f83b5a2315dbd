use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::beta_field::{quadrature_oracle, BetaField, SamplerConfig, ORACLE_MAX_VERTICES};
use crate::exec::Execution;
use crate::graph::{sub_box, WeightedGraph};
use crate::operator::{assemble, assemble_beta, u_field, Bc, GreenSolver};
use crate::stats::{estimate_batch, ks_distance, variance_batch, EstimateWithCI};

use super::{collect, column, wired_box, StatsError, SE_SLACK};

/// KS limit for the Gamma(1/2, 1) marginal.
pub const GAMMA_KS_LIMIT: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaReport {
    pub vertex: usize,
    /// Mean of `1/(2𝓗⁻¹(i,i))`, target 1/2.
    pub mean: EstimateWithCI,
    /// Variance, target 1/2.
    pub variance: EstimateWithCI,
    pub ks_distance: f64,
    pub mean_pass: bool,
    pub variance_pass: bool,
    pub ks_pass: bool,
    pub pass: bool,
}

/// Under ν^{W,0} the variable `1/(2𝓗⁻¹(i,i))` is Gamma(1/2, 1).
pub fn gamma_marginal_test(
    graph: &Arc<WeightedGraph>,
    vertex: usize,
    cfg: &SamplerConfig,
    exec: Execution,
) -> Result<GammaReport, StatsError> {
    if graph.eta().iter().any(|&e| e != 0.0) {
        return Err(StatsError::Config("gamma marginal test needs η ≡ 0".into()));
    }
    if vertex >= graph.vertex_count() {
        return Err(StatsError::Config(format!("vertex {vertex} out of range")));
    }
    let cfg = SamplerConfig {
        allow_zero_eta: true,
        ..cfg.clone()
    };
    let rows = collect(graph, &cfg, exec, |f| {
        let m = assemble(f, Bc::Simple, false)?;
        let g = GreenSolver::new(&m)?.column(vertex)[vertex];
        Ok(vec![0.5 / g])
    })?;
    let xs = column(&rows, 0);
    let mean = estimate_batch(&xs, cfg.seed);
    let variance = variance_batch(&xs, cfg.seed);
    let ks = ks_distance(&xs, |x| statrs::function::erf::erf(x.max(0.0).sqrt()));
    let mean_pass = mean.within(0.5, SE_SLACK);
    let variance_pass = variance.within(0.5, 4.0);
    let ks_pass = ks < GAMMA_KS_LIMIT;
    Ok(GammaReport {
        vertex,
        mean,
        variance,
        ks_distance: ks,
        mean_pass,
        variance_pass,
        ks_pass,
        pass: mean_pass && variance_pass && ks_pass,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WardReport {
    pub w: f64,
    pub j: usize,
    pub k: usize,
    /// `E[cosh(u_j − u_k)²]`, bounded by 2.
    pub cosh_difference: EstimateWithCI,
    /// `E[cosh(u_k)²]`, bounded by 8.
    pub cosh_u: EstimateWithCI,
    /// Whether `W` is at or above the threshold where the bounds are asserted.
    pub applies: bool,
    pub within_bounds: bool,
    pub pass: bool,
}

/// Ward-type moments of the u-field on a wired box in `d ≥ 3`. `j` and `k`
/// are lattice coordinates.
#[allow(clippy::too_many_arguments)]
pub fn ward_moment_check(
    d: usize,
    l: usize,
    w: f64,
    j: &[i64],
    k: &[i64],
    threshold: f64,
    cfg: &SamplerConfig,
    exec: Execution,
) -> Result<WardReport, StatsError> {
    if d < 3 {
        return Err(StatsError::Config(format!("ward moments need d ≥ 3, got {d}")));
    }
    let graph = wired_box(d, l, w)?;
    let geo = *graph.geometry().expect("box geometry");
    let locate = |c: &[i64]| {
        geo.index(c)
            .ok_or_else(|| StatsError::Config(format!("site {c:?} outside the box")))
    };
    let (jj, kk) = (locate(j)?, locate(k)?);
    let rows = collect(&graph, cfg, exec, |f| {
        let u = u_field(f)?;
        Ok(vec![(u[jj] - u[kk]).cosh().powi(2), u[kk].cosh().powi(2)])
    })?;
    let cosh_difference = estimate_batch(&column(&rows, 0), cfg.seed);
    let cosh_u = estimate_batch(&column(&rows, 1), cfg.seed);
    let within_bounds = cosh_difference.at_most(2.0, SE_SLACK) && cosh_u.at_most(8.0, SE_SLACK);
    let applies = w >= threshold;
    Ok(WardReport {
        w,
        j: jj,
        k: kk,
        cosh_difference,
        cosh_u,
        applies,
        within_bounds,
        pass: !applies || within_bounds,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MartingaleRow {
    pub l: usize,
    /// `E[ψ_L(0)]`, target 1.
    pub psi: EstimateWithCI,
    /// `E[𝓗⁻¹_{Λ_L}(0,0)]`.
    pub green: EstimateWithCI,
    /// `E[ψ_L(0)² − 𝓗⁻¹_{Λ_L}(0,0)]`.
    pub bracket: EstimateWithCI,
    /// Per-sample difference of the bracket term against the first `L`.
    pub bracket_shift: EstimateWithCI,
    pub psi_pass: bool,
    pub bracket_pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MartingaleReport {
    pub d: usize,
    pub k: usize,
    pub w: f64,
    pub rows: Vec<MartingaleRow>,
    /// Fraction of samples with `𝓗⁻¹_{Λ_L}(0,0)` nondecreasing along the
    /// given `L` (which are sorted first).
    pub green_monotone_fraction: f64,
    pub pass: bool,
}

/// `ψ_L(i) = Σ_{k∈∂Λ_L} 𝓗⁻¹_{Λ_L}(i,k) η^w_{Λ_L}(k)` from restrictions of
/// wired samples on Λ_K.
pub fn martingale_check(
    d: usize,
    k: usize,
    ls: &[usize],
    w: f64,
    cfg: &SamplerConfig,
    exec: Execution,
) -> Result<MartingaleReport, StatsError> {
    let mut ls = ls.to_vec();
    ls.sort_unstable();
    ls.dedup();
    if ls.is_empty() || ls.iter().any(|&l| l == 0 || l >= k) {
        return Err(StatsError::Config(format!(
            "martingale radii must satisfy 1 ≤ L < K = {k}"
        )));
    }
    let graph = wired_box(d, k, w)?;
    let subs: Vec<(Arc<WeightedGraph>, Vec<usize>)> = ls
        .iter()
        .map(|&l| sub_box(&graph, l).map(|(g, m)| (Arc::new(g), m)))
        .collect::<Result<_, _>>()?;
    let rows = collect(&graph, cfg, exec, |f: &BetaField| {
        let mut row = Vec::with_capacity(2 * subs.len());
        for (g, map) in &subs {
            let beta: Vec<f64> = map.iter().map(|&i| f.beta()[i]).collect();
            let m = assemble_beta(g, &beta, Bc::Simple, false)?;
            let solver = GreenSolver::new(&m)?;
            let o = g.geometry().expect("box geometry").origin();
            let psi = solver.solve(g.eta())[o];
            let g00 = solver.column(o)[o];
            row.push(psi);
            row.push(g00);
        }
        Ok(row)
    })?;
    let seed = cfg.seed;
    let bracket_of = |r: &Vec<f64>, s: usize| r[2 * s].powi(2) - r[2 * s + 1];
    let mut out = Vec::with_capacity(ls.len());
    for (s, &l) in ls.iter().enumerate() {
        let psi = estimate_batch(&column(&rows, 2 * s), seed);
        let green = estimate_batch(&column(&rows, 2 * s + 1), seed);
        let b: Vec<f64> = rows.iter().map(|r| bracket_of(r, s)).collect();
        let shift: Vec<f64> = rows.iter().map(|r| bracket_of(r, s) - bracket_of(r, 0)).collect();
        let bracket = estimate_batch(&b, seed);
        let bracket_shift = if s == 0 {
            EstimateWithCI::exact(0.0, rows.len(), seed)
        } else {
            estimate_batch(&shift, seed)
        };
        out.push(MartingaleRow {
            l,
            psi_pass: psi.within(1.0, SE_SLACK),
            bracket_pass: bracket_shift.within(0.0, SE_SLACK),
            psi,
            green,
            bracket,
            bracket_shift,
        });
    }
    let monotone = rows
        .iter()
        .filter(|r| (1..ls.len()).all(|s| r[2 * s + 1] >= r[2 * s - 1] * (1.0 - 1e-12)))
        .count();
    Ok(MartingaleReport {
        d,
        k,
        w,
        pass: out.iter().all(|r| r.psi_pass && r.bracket_pass),
        rows: out,
        green_monotone_fraction: monotone as f64 / rows.len().max(1) as f64,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityReport {
    pub j0: usize,
    pub j: usize,
    /// `E[√(𝓗⁻¹(j₀,j)/𝓗⁻¹(j₀,j₀))]` under the smaller side.
    pub lower: EstimateWithCI,
    pub upper: EstimateWithCI,
    pub lower_quadrature: Option<f64>,
    pub upper_quadrature: Option<f64>,
    pub ordering_pass: bool,
    /// `|MC − quadrature| ≤ 10⁻⁶ + 3 SE` on both sides, when quadrature ran.
    pub quadrature_pass: Option<bool>,
    pub pass: bool,
}

/// Absolute quadrature slack in the Monte-Carlo comparison.
pub const MONOTONICITY_QUAD_SLACK: f64 = 1e-6;

fn weights_dominated(lower: &WeightedGraph, upper: &WeightedGraph) -> bool {
    lower
        .edges()
        .iter()
        .all(|e| upper.weight(e.a, e.b).is_some_and(|w| e.weight <= w))
}

fn same_weights(a: &WeightedGraph, b: &WeightedGraph) -> bool {
    weights_dominated(a, b) && weights_dominated(b, a)
}

/// Checks `E_lower[√ratio] ≤ E_upper[√ratio]`, where either both sides have
/// η ≡ 0 and `lower` weights are edgewise at most `upper` weights, or both
/// share weights and `upper` pins η at `j₀` only.
#[allow(clippy::too_many_arguments)]
pub fn monotonicity_check(
    lower: &Arc<WeightedGraph>,
    upper: &Arc<WeightedGraph>,
    j0: usize,
    j: usize,
    cfg: &SamplerConfig,
    exec: Execution,
    quadrature_tol: Option<f64>,
) -> Result<MonotonicityReport, StatsError> {
    let n = lower.vertex_count();
    if upper.vertex_count() != n || j0 >= n || j >= n {
        return Err(StatsError::Config("graphs and vertices must match".into()));
    }
    if !lower.is_connected() {
        return Err(StatsError::Config("lower graph is disconnected".into()));
    }
    if lower.eta().iter().any(|&e| e != 0.0) {
        return Err(StatsError::Config("lower side must have η ≡ 0".into()));
    }
    let upper_zero = upper.eta().iter().all(|&e| e == 0.0);
    let pinned_at_j0 = upper
        .eta()
        .iter()
        .enumerate()
        .all(|(i, &e)| (i == j0) == (e > 0.0));
    let comparable = (upper_zero && weights_dominated(lower, upper))
        || (pinned_at_j0 && same_weights(lower, upper));
    if !comparable {
        return Err(StatsError::Config(
            "graphs are not ordered: need W⁻ ≤ W⁺ with η ≡ 0, or one pinning at j0".into(),
        ));
    }
    let cfg = SamplerConfig {
        allow_zero_eta: true,
        ..cfg.clone()
    };
    let ratio = |f: &BetaField| -> Result<Vec<f64>, StatsError> {
        let m = assemble(f, Bc::Simple, false)?;
        let c = GreenSolver::new(&m)?.column(j0);
        Ok(vec![(c[j] / c[j0]).sqrt()])
    };
    let est = |g: &Arc<WeightedGraph>| -> Result<EstimateWithCI, StatsError> {
        let rows = collect(g, &cfg, exec, ratio)?;
        Ok(estimate_batch(&column(&rows, 0), cfg.seed))
    };
    let lo = est(lower)?;
    let hi = est(upper)?;
    let ordering_pass = lo.value <= hi.value + SE_SLACK * lo.std_error.hypot(hi.std_error);
    let (lq, uq) = match quadrature_tol {
        Some(tol) if n <= ORACLE_MAX_VERTICES => (
            Some(ratio_quadrature(lower, j0, j, tol)?),
            Some(ratio_quadrature(upper, j0, j, tol)?),
        ),
        _ => (None, None),
    };
    let quadrature_pass = match (lq, uq) {
        (Some(a), Some(b)) => {
            let close = |e: &EstimateWithCI, q: f64| {
                (e.value - q).abs() <= MONOTONICITY_QUAD_SLACK + SE_SLACK * e.std_error
            };
            Some(close(&lo, a) && close(&hi, b) && a <= b + MONOTONICITY_QUAD_SLACK)
        }
        _ => None,
    };
    Ok(MonotonicityReport {
        j0,
        j,
        pass: ordering_pass && quadrature_pass.unwrap_or(true),
        lower: lo,
        upper: hi,
        lower_quadrature: lq,
        upper_quadrature: uq,
        ordering_pass,
        quadrature_pass,
    })
}

/// Deterministic `E[√(𝓗⁻¹(j₀,j)/𝓗⁻¹(j₀,j₀))]` on a graph of at most three
/// vertices.
pub fn ratio_quadrature(g: &WeightedGraph, j0: usize, j: usize, tol: f64) -> Result<f64, StatsError> {
    let n = g.vertex_count();
    let mut w = [[0.0; 3]; 3];
    for e in g.edges() {
        w[e.a][e.b] = e.weight;
        w[e.b][e.a] = e.weight;
    }
    let integrand = |beta: &[f64], out: &mut [f64]| {
        let mut h = [[0.0; 3]; 3];
        for a in 0..3 {
            for b in 0..3 {
                h[a][b] = if a == b {
                    if a < n {
                        2.0 * beta[a]
                    } else {
                        1.0
                    }
                } else {
                    -w[a][b]
                };
            }
        }
        let inv = crate::beta_field::oracle_inverse3(&h);
        out[0] = (inv[j0][j] / inv[j0][j0]).max(0.0).sqrt();
    };
    let r = quadrature_oracle(g, 1, &integrand, tol)?;
    if !r.converged {
        return Err(StatsError::Config("ratio quadrature did not converge".into()));
    }
    Ok(r.value[0])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path(w01: f64, w12: f64, eta0: f64) -> Arc<WeightedGraph> {
        Arc::new(WeightedGraph::from_edges(3, vec![(0, 1, w01), (1, 2, w12)], vec![eta0, 0.0, 0.0]).unwrap())
    }

    fn quick(samples: usize) -> SamplerConfig {
        SamplerConfig {
            seed: 3,
            burn_in: 50,
            thinning: 1,
            samples,
            ..SamplerConfig::default()
        }
    }

    #[test]
    fn gamma_rejects_nonzero_eta() {
        let g = path(1.0, 1.0, 0.5);
        assert!(gamma_marginal_test(&g, 0, &quick(10), Execution::Sequential).is_err());
    }

    #[test]
    fn equal_weights_give_equal_estimates() {
        let g = path(0.7, 0.7, 0.0);
        let r = monotonicity_check(&g, &g, 0, 2, &quick(300), Execution::Sequential, None).unwrap();
        assert_eq!(r.lower, r.upper);
        assert!(r.ordering_pass);
    }

    #[test]
    fn unordered_graphs_rejected() {
        let a = path(1.0, 1.0, 0.0);
        let b = path(0.5, 2.0, 0.0);
        assert!(monotonicity_check(&a, &b, 0, 2, &quick(10), Execution::Sequential, None).is_err());
        let disconnected = Arc::new(WeightedGraph::from_edges(3, vec![(0, 1, 1.0)], vec![0.0; 3]).unwrap());
        assert!(monotonicity_check(&disconnected, &a, 0, 2, &quick(10), Execution::Sequential, None).is_err());
    }

    #[test]
    fn ratio_quadrature_trivial_cases() {
        let g = path(0.5, 1.0, 0.0);
        assert!((ratio_quadrature(&g, 0, 0, 1e-9).unwrap() - 1.0).abs() < 1e-8);
        let single = WeightedGraph::from_edges(1, vec![], vec![0.0]).unwrap();
        assert!((ratio_quadrature(&single, 0, 0, 1e-9).unwrap() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn martingale_radius_validation() {
        assert!(martingale_check(2, 3, &[3], 1.0, &quick(10), Execution::Sequential).is_err());
        assert!(martingale_check(2, 3, &[], 1.0, &quick(10), Execution::Sequential).is_err());
    }

    #[test]
    fn ward_same_site_is_one() {
        let r = ward_moment_check(
            3,
            1,
            5.0,
            &[0, 0, 0],
            &[0, 0, 0],
            1.0,
            &quick(20),
            Execution::Sequential,
        )
        .unwrap();
        assert_eq!(r.cosh_difference.value, 1.0);
        assert!(ward_moment_check(2, 1, 5.0, &[0, 0], &[0, 0], 1.0, &quick(5), Execution::Sequential).is_err());
    }
}
