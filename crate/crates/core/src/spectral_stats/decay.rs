use serde::{Deserialize, Serialize};

use crate::beta_field::{BetaField, SamplerConfig};
use crate::exec::Execution;
use crate::graph::{build_box, remove_vertex, BoundaryKind, BoxGeometry, VertexId};
use crate::operator::{assemble, assemble_beta, Bc, GreenSolver};
use crate::stats::{estimate_batch, linear_fit, mean, EstimateWithCI};

use super::{collect, column, column_estimates, wired_box, StatsError, SE_SLACK};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MomentKind {
    /// `E[𝓗⁻¹(0,j)^{1/4}]`.
    QuarterGreen,
    /// `E[√(𝓗⁻¹(0,j)/𝓗⁻¹(0,0))]`.
    RatioSqrt,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub kind: MomentKind,
    pub distances: Vec<usize>,
    pub moments: Vec<EstimateWithCI>,
    pub log_moments: Vec<f64>,
    /// Minus the fitted slope of `ln moment` against distance.
    pub kappa_hat: f64,
    pub prefactor_hat: f64,
    pub r_squared: f64,
    /// Root-mean-square residual of the log-linear fit.
    pub rms_residual: f64,
}

/// Sites `k·e₁`, `k = 0..=L`, along the first coordinate axis.
fn axis(geo: &BoxGeometry) -> Vec<usize> {
    let l = geo.half_width as i64;
    (0..=l)
        .map(|k| {
            let mut c = vec![0i64; geo.d];
            c[0] = k;
            geo.index(&c).expect("axis point inside the box")
        })
        .collect()
}

/// Green moments along an axis of Λ_L and their exponential fit.
pub fn decay_moment_fit(
    d: usize,
    l: usize,
    w: f64,
    boundary: BoundaryKind,
    kind: MomentKind,
    cfg: &SamplerConfig,
    exec: Execution,
) -> Result<DecayFit, StatsError> {
    let graph = std::sync::Arc::new(build_box(d, l, w, boundary)?);
    let geo = *graph.geometry().expect("box geometry");
    let sites = axis(&geo);
    let origin = geo.origin();
    let rows = collect(&graph, cfg, exec, |f| {
        let m = assemble(f, Bc::Simple, false)?;
        let col = GreenSolver::new(&m)?.column(origin);
        Ok(sites
            .iter()
            .map(|&j| match kind {
                MomentKind::QuarterGreen => col[j].powf(0.25),
                MomentKind::RatioSqrt => (col[j] / col[origin]).sqrt(),
            })
            .collect())
    })?;
    let mut moments = column_estimates(&rows, cfg.seed);
    if kind == MomentKind::RatioSqrt {
        moments[0] = EstimateWithCI::exact(1.0, rows.len(), cfg.seed);
    }
    if moments.iter().any(|m| !(m.value > 0.0)) {
        return Err(StatsError::Config("nonpositive Green moment".into()));
    }
    let distances: Vec<usize> = (0..=l).collect();
    let x: Vec<f64> = distances.iter().map(|&k| k as f64).collect();
    let log_moments: Vec<f64> = moments.iter().map(|m| m.value.ln()).collect();
    let fit = linear_fit(&x, &log_moments);
    let rms_residual = mean(
        &x.iter()
            .zip(&log_moments)
            .map(|(a, b)| (b - fit.intercept - fit.slope * a).powi(2))
            .collect::<Vec<_>>(),
    )
    .sqrt();
    Ok(DecayFit {
        kind,
        distances,
        moments,
        log_moments,
        kappa_hat: -fit.slope,
        prefactor_hat: fit.intercept.exp(),
        r_squared: fit.r_squared,
        rms_residual,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImplicationRow {
    pub energy: f64,
    /// Samples in Ω₁ (resp. Ω₂) with `(H^S)⁻¹(0,0) > 1/E`.
    pub premise_omega1: usize,
    pub premise_omega2: usize,
    /// Of those, samples with `(H^D)⁻¹(0,0) ≤ 1/(2E)`.
    pub failures_omega1: usize,
    pub failures_omega2: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OmegaReport {
    pub d: usize,
    pub l: usize,
    pub w: f64,
    pub kappa: f64,
    pub omega10: EstimateWithCI,
    pub omega11: EstimateWithCI,
    pub omega20: EstimateWithCI,
    pub omega21: EstimateWithCI,
    pub omega1: EstimateWithCI,
    pub omega2: EstimateWithCI,
    /// `P((H^S)⁻¹(0,0) > e^{κL})`.
    pub tail_probability: EstimateWithCI,
    /// `∫₀^{W e^{−κL}/2} γ^{−1/2} e^{−γ}/√π dγ = erf(√(W e^{−κL}/2))`.
    pub tail_bound: f64,
    pub tail_pass: bool,
    pub implication: Vec<ImplicationRow>,
    pub implication_pass: bool,
}

/// Indicator estimates of the localization events on Λ_L under the wired
/// measure, the Gamma tail bound for `Ω₁,₁ᶜ`, and the Simple-to-Dirichlet
/// implication on samples inside Ω₁ or Ω₂ at each energy `E < 1/2`.
#[allow(clippy::too_many_arguments)]
pub fn omega_event_probabilities(
    d: usize,
    l: usize,
    w: f64,
    kappa: f64,
    energies: &[f64],
    cfg: &SamplerConfig,
    exec: Execution,
) -> Result<OmegaReport, StatsError> {
    if !(kappa > 0.0 && kappa.is_finite()) {
        return Err(StatsError::Config(format!("kappa must be positive, got {kappa}")));
    }
    if energies.iter().any(|&e| !(e > 0.0 && e < 0.5)) {
        return Err(StatsError::Config("implication energies must lie in (0, 1/2)".into()));
    }
    let graph = wired_box(d, l, w)?;
    let geo = *graph.geometry().expect("box geometry");
    let origin = geo.origin();
    let boundary: Vec<usize> = (0..geo.len()).filter(|&i| geo.on_boundary(i)).collect();
    let punctured = remove_vertex(&graph, VertexId(origin))?;
    let shift = |v: usize| if v > origin { v - 1 } else { v };
    let nbrs: Vec<usize> = graph.neighbors(origin).iter().map(|&(j, _)| shift(j)).collect();
    let bnd_shifted: Vec<usize> = boundary.iter().map(|&j| shift(j)).collect();
    let cap1 = (kappa * l as f64).exp();
    let cap2 = (-1.5 * kappa * l as f64).exp();
    let ne = energies.len();

    let rows = collect(&graph, cfg, exec, |f: &BetaField| {
        let simple = assemble(f, Bc::Simple, false)?;
        let col = GreenSolver::new(&simple)?.column(origin);
        let g00 = col[origin];
        let o10 = boundary.iter().all(|&i| {
            let r = (col[i] / g00).sqrt();
            r <= (-kappa * geo.sup_norm(i) as f64 / 2.0).exp()
        });
        let hs00 = w * g00;
        let o11 = hs00 <= cap1;
        let mut beta_p = f.beta().to_vec();
        beta_p.remove(origin);
        let mp = assemble_beta(&punctured, &beta_p, Bc::Simple, false)?;
        let sp = GreenSolver::new(&mp)?;
        let mut max_g = 0.0f64;
        for &i in &nbrs {
            let c = sp.column(i);
            for &j in &bnd_shifted {
                max_g = max_g.max(c[j]);
            }
        }
        let o20 = max_g <= cap2;
        let dir = assemble(f, Bc::Dirichlet, true)?;
        let hd00 = GreenSolver::new(&dir)?.column(origin)[origin];
        let mut row = vec![
            o10 as u8 as f64,
            o11 as u8 as f64,
            o20 as u8 as f64,
            (o10 && o11) as u8 as f64,
            (o20 && o11) as u8 as f64,
            (!o11) as u8 as f64,
        ];
        for &e in energies {
            let premise = hs00 > 1.0 / e;
            let fail = premise && hd00 <= 1.0 / (2.0 * e);
            row.push(premise as u8 as f64);
            row.push(fail as u8 as f64);
        }
        Ok(row)
    })?;
    let est = column_estimates(&rows, cfg.seed);
    let count = |c: usize, gate: usize| {
        rows.iter()
            .filter(|r| r[gate] > 0.5 && r[c] > 0.5)
            .count()
    };
    let implication: Vec<ImplicationRow> = (0..ne)
        .map(|k| ImplicationRow {
            energy: energies[k],
            premise_omega1: count(6 + 2 * k, 3),
            premise_omega2: count(6 + 2 * k, 4),
            failures_omega1: count(7 + 2 * k, 3),
            failures_omega2: count(7 + 2 * k, 4),
        })
        .collect();
    let tail_bound = statrs::function::erf::erf((w * (-kappa * l as f64).exp() / 2.0).sqrt());
    let tail = estimate_batch(&column(&rows, 5), cfg.seed);
    Ok(OmegaReport {
        d,
        l,
        w,
        kappa,
        omega10: est[0],
        omega11: est[1],
        omega20: est[2],
        omega21: est[1],
        omega1: est[3],
        omega2: est[4],
        tail_pass: tail.at_most(tail_bound, SE_SLACK),
        tail_probability: tail,
        tail_bound,
        implication_pass: implication
            .iter()
            .all(|r| r.failures_omega1 == 0 && r.failures_omega2 == 0),
        implication,
    })
}
