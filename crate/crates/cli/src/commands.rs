use std::sync::Arc;

use serde::Serialize;

use rso_core::beta_field::{run_chains, sample_field, BetaFieldError};
use rso_core::critical::{critical_report, derivative_check, Coupling};
use rso_core::exec::Execution;
use rso_core::graph::{build_box, build_grid, BoundaryKind, WeightedGraph};
use rso_core::resistance::{identity_check, IdentityReport};
use rso_core::spectral_stats::{
    bound_audit, decay_moment_fit, estimate_ids, gamma_marginal_test, laplace_check, martingale_check,
    monotonicity_check, omega_event_probabilities, rig_moment_check, wegner_audit, StatsError,
};
use rso_core::stats::{geometric_grid, EstimateWithCI};

use crate::config::{BoundaryArg, Command, RunConfig};
use crate::output::{Cell, Csv, Report};
use crate::CliError;

/// Resistance identity tolerances: relative agreement and `‖𝓗̃h‖_∞`.
pub const IDENTITY_REL_TOL: f64 = 1e-8;
pub const HARMONICITY_TOL: f64 = 1e-10;

/// Root residual accepted for `|F_d(W_c) − 1|`.
pub const ROOT_TOL: f64 = 1e-10;

/// Finite-difference agreement for the `F_d` derivatives.
pub const DERIVATIVE_TOL: f64 = 1e-6;

pub fn dispatch(cfg: &RunConfig) -> Result<Report, CliError> {
    let exec = Execution::best_available();
    match cfg.command {
        Command::Sample => sample(cfg, exec),
        Command::Ids => ids(cfg, exec),
        Command::Wegner => wegner(cfg, exec),
        Command::Decay => decay(cfg, exec),
        Command::Critical => critical(cfg),
        Command::Resistance => resistance(cfg, exec),
        Command::Martingale => martingale(cfg, exec),
        Command::Monotonicity => monotonicity(cfg, exec),
        Command::Validate => validate(cfg, exec),
    }
}

fn boundary(cfg: &RunConfig) -> BoundaryKind {
    match cfg.boundary {
        BoundaryArg::Wired => BoundaryKind::Wired,
        BoundaryArg::Zero => BoundaryKind::Zero,
    }
}

fn est_cells(e: &EstimateWithCI) -> [Cell; 2] {
    [e.value.into(), e.std_error.into()]
}

fn sample(cfg: &RunConfig, exec: Execution) -> Result<Report, CliError> {
    let graph = Arc::new(build_box(cfg.d, cfg.l, cfg.w, boundary(cfg)).map_err(StatsError::from)?);
    let scfg = cfg.sampler();
    let tables = exec.try_map(scfg.chains, |c| -> Result<(String, Csv, usize), BetaFieldError> {
        let mut csv = Csv::new(&["sweep", "vertex", "beta"]);
        let mut kept = 0;
        for f in sample_field(graph.clone(), &scfg, c)? {
            let f = f?;
            for (i, &b) in f.beta().iter().enumerate() {
                csv.row(vec![f.provenance().sweep.into(), i.into(), b.into()]);
            }
            kept += 1;
        }
        Ok((format!("samples_chain{c}.csv"), csv, kept))
    });
    let tables = tables.map_err(StatsError::from)?;
    #[derive(Serialize)]
    struct SampleResult {
        vertices: usize,
        chain: usize,
        samples: usize,
        seed: u64,
    }
    let mut report = Report::new();
    for (c, (name, csv, kept)) in tables.into_iter().enumerate() {
        report.result(&SampleResult {
            vertices: graph.vertex_count(),
            chain: c,
            samples: kept,
            seed: cfg.seed,
        });
        report.csv(name, csv);
    }
    Ok(report)
}

fn ids(cfg: &RunConfig, exec: Execution) -> Result<Report, CliError> {
    let energies = cfg
        .energies
        .as_ref()
        .map(|g| g.0.clone())
        .unwrap_or_else(|| geometric_grid(1e-4, 1e-2, 10));
    let curve = estimate_ids(cfg.d, cfg.l, cfg.w, cfg.bc, &energies, &cfg.sampler(), exec)?;
    let audit = bound_audit(&curve);
    let lo = cfg.fit_lo.unwrap_or(energies[0]);
    let hi = cfg.fit_hi.unwrap_or(energies[energies.len() - 1]);
    let fit = curve.loglog_fit(lo, hi);
    let mut csv = Csv::new(&["energy", "n_hat", "std_error", "upper_bound", "upper_ok"]);
    for (k, &e) in energies.iter().enumerate() {
        let [v, se] = est_cells(&curve.estimates[k]);
        csv.row(vec![e.into(), v, se, audit.upper_bounds[k].into(), audit.upper_ok[k].into()]);
    }
    let mut report = Report::new();
    report.check("upper_bound", audit.upper_pass);
    if cfg.slope_min.is_some() || cfg.slope_max.is_some() {
        let ok = fit.is_some_and(|f| {
            cfg.slope_min.is_none_or(|m| f.slope >= m) && cfg.slope_max.is_none_or(|m| f.slope <= m)
        });
        report.check("slope", ok);
    }
    report.result(&serde_json::json!({ "curve": curve, "audit": audit, "fit": fit, "fit_range": [lo, hi] }));
    report.csv("ids.csv", csv);
    Ok(report)
}

fn wegner(cfg: &RunConfig, exec: Execution) -> Result<Report, CliError> {
    let eps = cfg.epsilons.as_ref().map(|g| g.0.clone()).unwrap_or_else(|| vec![0.1, 0.05, 0.01]);
    let audit = wegner_audit(cfg.d, cfg.l, cfg.w, cfg.bc, cfg.energy, &eps, &cfg.sampler(), exec)?;
    let mut csv = Csv::new(&["epsilon", "increment", "std_error", "bound", "ratio_over_epsilon", "pass"]);
    for r in &audit.rows {
        let [v, se] = est_cells(&r.increment);
        csv.row(vec![r.epsilon.into(), v, se, r.bound.into(), r.ratio_over_epsilon.into(), r.pass.into()]);
    }
    let mut report = Report::new();
    report.check("wegner_bound", audit.pass);
    report.result(&audit);
    report.csv("wegner.csv", csv);
    Ok(report)
}

fn decay(cfg: &RunConfig, exec: Execution) -> Result<Report, CliError> {
    let scfg = cfg.sampler();
    let fit = decay_moment_fit(cfg.d, cfg.l, cfg.w, boundary(cfg), cfg.moment, &scfg, exec)?;
    let mut csv = Csv::new(&["distance", "moment", "std_error", "log_moment"]);
    for (k, &dist) in fit.distances.iter().enumerate() {
        let [v, se] = est_cells(&fit.moments[k]);
        csv.row(vec![dist.into(), v, se, fit.log_moments[k].into()]);
    }
    let mut report = Report::new();
    report.result(&fit);
    report.csv("decay.csv", csv);
    if let Some(kappa) = cfg.kappa {
        let energies = cfg
            .energies
            .as_ref()
            .map(|g| g.0.clone())
            .unwrap_or_else(|| vec![0.05, 0.1, 0.25, 0.45]);
        let om = omega_event_probabilities(cfg.d, cfg.l, cfg.w, kappa, &energies, &scfg, exec)?;
        let mut csv = Csv::new(&["event", "probability", "std_error"]);
        for (name, e) in [
            ("omega10", &om.omega10),
            ("omega11", &om.omega11),
            ("omega20", &om.omega20),
            ("omega21", &om.omega21),
            ("omega1", &om.omega1),
            ("omega2", &om.omega2),
            ("tail", &om.tail_probability),
        ] {
            let [v, se] = est_cells(e);
            csv.row(vec![name.into(), v, se]);
        }
        report.check("gamma_tail", om.tail_pass);
        report.check("implication", om.implication_pass);
        report.result(&om);
        report.csv("omega.csv", csv);
    }
    Ok(report)
}

fn coupling_cell(c: &Coupling) -> Cell {
    Cell::Real(c.finite().unwrap_or(f64::INFINITY))
}

fn critical(cfg: &RunConfig) -> Result<Report, CliError> {
    let crit = critical_report(cfg.d).map_err(|e| CliError::Config(e.to_string()))?;
    let mut report = Report::new();
    report.check("root", crit.residual.is_none_or(|r| r <= ROOT_TOL));
    if cfg.d >= 2 {
        let dc = derivative_check(cfg.d as f64, crit.w_c_prime).map_err(|e| CliError::Numeric(e.to_string()))?;
        report.check("derivatives", dc.max_rel_error() <= DERIVATIVE_TOL);
        report.result(&serde_json::json!({ "report": crit, "derivatives": dc }));
    } else {
        report.result(&serde_json::json!({ "report": crit }));
    }
    let mut csv = Csv::new(&["d", "w_c", "w_c_prime", "w_cr"]);
    csv.row(vec![cfg.d.into(), coupling_cell(&crit.w_c), crit.w_c_prime.into(), coupling_cell(&crit.w_cr)]);
    report.csv("critical.csv", csv);
    Ok(report)
}

fn resistance(cfg: &RunConfig, exec: Execution) -> Result<Report, CliError> {
    let graph = Arc::new(build_box(cfg.d, cfg.k, cfg.w, BoundaryKind::Wired).map_err(StatsError::from)?);
    let rows: Vec<IdentityReport> = run_chains(&graph, &cfg.sampler(), exec, |f| {
        identity_check(f, cfg.l).map_err(StatsError::from)
    })?;
    let mut report = Report::new();
    report.csv("resistance.csv", identity_table(&rows));
    summarize_identity(&mut report, "identity", &rows);
    Ok(report)
}

fn identity_table(rows: &[IdentityReport]) -> Csv {
    let mut csv = Csv::new(&["sample", "lhs", "rhs", "relerr", "harmonicity", "nash_williams"]);
    for (s, r) in rows.iter().enumerate() {
        csv.row(vec![
            s.into(),
            r.green.into(),
            r.resistance.into(),
            r.rel_error.into(),
            r.harmonicity.into(),
            r.nash_williams.into(),
        ]);
    }
    csv
}

#[derive(Debug, Clone, Serialize)]
pub struct IdentitySummary {
    pub samples: usize,
    pub max_rel_error: f64,
    pub max_harmonicity: f64,
    pub nash_williams_holds: bool,
    pub pass: bool,
}

fn summarize_identity(report: &mut Report, name: &str, rows: &[IdentityReport]) -> IdentitySummary {
    let max_rel_error = rows.iter().map(|r| r.rel_error).fold(0.0, f64::max);
    let max_harmonicity = rows.iter().map(|r| r.harmonicity).fold(0.0, f64::max);
    let nash_williams_holds = rows.iter().all(|r| r.nash_williams <= r.resistance * (1.0 + 1e-12));
    let s = IdentitySummary {
        samples: rows.len(),
        max_rel_error,
        max_harmonicity,
        nash_williams_holds,
        pass: max_rel_error <= IDENTITY_REL_TOL && max_harmonicity <= HARMONICITY_TOL && nash_williams_holds,
    };
    report.check(name, s.pass);
    report.result(&s);
    s
}

fn martingale(cfg: &RunConfig, exec: Execution) -> Result<Report, CliError> {
    let m = martingale_check(cfg.d, cfg.k, &cfg.ls.0, cfg.w, &cfg.sampler(), exec)?;
    let mut csv = Csv::new(&[
        "L",
        "psi",
        "psi_se",
        "green",
        "green_se",
        "bracket",
        "bracket_se",
        "bracket_shift",
        "bracket_shift_se",
        "psi_pass",
        "bracket_pass",
    ]);
    for r in &m.rows {
        let mut cells = vec![Cell::from(r.l)];
        for e in [&r.psi, &r.green, &r.bracket, &r.bracket_shift] {
            cells.extend(est_cells(e));
        }
        cells.push(r.psi_pass.into());
        cells.push(r.bracket_pass.into());
        csv.row(cells);
    }
    let mut report = Report::new();
    report.check("martingale", m.pass);
    report.result(&m);
    report.csv("martingale.csv", csv);
    Ok(report)
}

fn monotonicity(cfg: &RunConfig, exec: Execution) -> Result<Report, CliError> {
    let lower: WeightedGraph = build_box(cfg.d, cfg.l, cfg.w, BoundaryKind::Zero).map_err(StatsError::from)?;
    let (upper, coupling_upper) = match cfg.pin {
        Some(p) => {
            let mut eta = vec![0.0; lower.vertex_count()];
            if cfg.j0 < eta.len() {
                eta[cfg.j0] = p;
            }
            (lower.with_eta(eta).map_err(StatsError::from)?, cfg.w)
        }
        None => {
            let wu = cfg.w_upper.unwrap_or(2.0 * cfg.w);
            (build_box(cfg.d, cfg.l, wu, BoundaryKind::Zero).map_err(StatsError::from)?, wu)
        }
    };
    let quad = (lower.vertex_count() <= 3).then_some(cfg.quad_tol);
    let (lower, upper) = (Arc::new(lower), Arc::new(upper));
    let m = monotonicity_check(&lower, &upper, cfg.j0, cfg.j, &cfg.sampler(), exec, quad)?;
    let mut csv = Csv::new(&["side", "coupling", "estimate", "std_error", "quadrature"]);
    for (side, w, e, q) in [
        ("lower", cfg.w, &m.lower, m.lower_quadrature),
        ("upper", coupling_upper, &m.upper, m.upper_quadrature),
    ] {
        let [v, se] = est_cells(e);
        csv.row(vec![side.into(), w.into(), v, se, q.unwrap_or(f64::NAN).into()]);
    }
    let mut report = Report::new();
    report.check("ordering", m.ordering_pass);
    if let Some(q) = m.quadrature_pass {
        report.check("quadrature", q);
    }
    report.result(&m);
    report.csv("monotonicity.csv", csv);
    Ok(report)
}

/// Fixed λ vectors for the Laplace check on an `n`-vertex graph.
pub fn laplace_lambdas(n: usize) -> Vec<Vec<f64>> {
    let unit = |k: usize, s: f64| (0..n).map(|i| if i == k % n { s } else { 0.0 }).collect();
    vec![
        vec![0.5; n],
        unit(0, 1.0),
        unit(n - 1, 2.0),
        (0..n).map(|i| if i % 2 == 0 { 0.2 } else { 1.0 }).collect(),
        (0..n).map(|i| 0.1 * (i + 1) as f64).collect(),
    ]
}

fn validate(cfg: &RunConfig, exec: Execution) -> Result<Report, CliError> {
    let scfg = cfg.sampler();
    let mut report = Report::new();
    let mut csv = Csv::new(&["check", "parameter", "estimate", "std_error", "target", "pass"]);

    let graph = match &cfg.graph {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|source| CliError::Io {
                path: p.clone(),
                source,
            })?;
            WeightedGraph::from_dump(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
        }
        None => build_grid(&[2, 2], cfg.w, BoundaryKind::Wired).map_err(StatsError::from)?,
    };
    let graph = Arc::new(graph);
    report.file("validate_graph.txt", graph.to_dump());
    let lap = laplace_check(&graph, &laplace_lambdas(graph.vertex_count()), &scfg, exec)?;
    for (k, r) in lap.iter().enumerate() {
        let [v, se] = est_cells(&r.estimate);
        csv.row(vec!["laplace".into(), k.into(), v, se, r.exact.into(), r.pass.into()]);
    }
    report.check("laplace", lap.iter().all(|r| r.pass));
    report.result(&serde_json::json!({ "check": "laplace", "rows": lap }));

    let path = Arc::new(build_box(1, 1, cfg.w, BoundaryKind::Zero).map_err(StatsError::from)?);
    let origin = path.geometry().expect("box geometry").origin();
    let gamma = gamma_marginal_test(&path, origin, &scfg, exec)?;
    for (name, e, target, ok) in [
        ("mean", &gamma.mean, 0.5, gamma.mean_pass),
        ("variance", &gamma.variance, 0.5, gamma.variance_pass),
    ] {
        let [v, se] = est_cells(e);
        csv.row(vec!["gamma".into(), name.into(), v, se, target.into(), ok.into()]);
    }
    csv.row(vec![
        "gamma".into(),
        "ks".into(),
        gamma.ks_distance.into(),
        0.0.into(),
        0.0.into(),
        gamma.ks_pass.into(),
    ]);
    report.check("gamma", gamma.pass);
    report.result(&serde_json::json!({ "check": "gamma", "report": gamma }));

    let mut rig_ok = true;
    for (k, a) in [0.1, 1.0, 10.0].into_iter().enumerate() {
        let r = rig_moment_check(a, cfg.draws, cfg.seed.wrapping_add(k as u64))?;
        let [v, se] = est_cells(&r.mean_y);
        csv.row(vec!["rig_mean".into(), a.into(), v, se, (a + 1.0).into(), r.pass.into()]);
        let [v, se] = est_cells(&r.mean_inv_y);
        csv.row(vec!["rig_mean_inv".into(), a.into(), v, se, (1.0 / a).into(), r.pass.into()]);
        csv.row(vec!["rig_ks".into(), a.into(), r.ks_quadrature.into(), 0.0.into(), 0.0.into(), r.pass.into()]);
        rig_ok &= r.pass;
        report.result(&serde_json::json!({ "check": "rig", "report": r }));
    }
    report.check("rig", rig_ok);

    let id_samples = scfg.samples.min(100);
    for (d, k, l) in [(1usize, 20usize, 5usize), (2, 8, 3)] {
        let g = Arc::new(build_box(d, k, cfg.w, BoundaryKind::Wired).map_err(StatsError::from)?);
        let icfg = rso_core::SamplerConfig {
            samples: id_samples,
            ..scfg.clone()
        };
        let rows: Vec<IdentityReport> =
            run_chains(&g, &icfg, exec, |f| identity_check(f, l).map_err(StatsError::from))?;
        let s = summarize_identity(&mut report, &format!("identity_d{d}"), &rows);
        csv.row(vec![
            "identity".into(),
            Cell::Text(format!("d{d}_K{k}_L{l}")),
            s.max_rel_error.into(),
            0.0.into(),
            IDENTITY_REL_TOL.into(),
            s.pass.into(),
        ]);
    }
    report.csv("validate.csv", csv);
    Ok(report)
}
