use std::sync::Arc;

use approx::assert_relative_eq;
use nalgebra::DMatrix;
use proptest::prelude::*;

use rso_core::beta_field::{laplace_exact, log_density, sample_rig, BetaField, RigParams};
use rso_core::critical::{df_dw, f_d};
use rso_core::graph::{build_box, BoundaryKind, WeightedGraph};
use rso_core::operator::{
    assemble, assemble_beta, count_with_method, path_sum_green, Bc, CountMethod, GreenSolver,
};
use rso_core::resistance::{effective_resistance, identity_check, nash_williams_bound, ConductanceNetwork, SINK};
use rso_core::rng::chain_rng;

/// Box shapes with at most 144 vertices.
fn small_box() -> impl Strategy<Value = (usize, usize)> {
    prop_oneof![(Just(1usize), 1usize..=71), (Just(2usize), 1usize..=5), (Just(3usize), 1usize..=2)]
}

fn field_on(d: usize, l: usize, w: f64, noise: &[f64]) -> BetaField {
    let g = Arc::new(build_box(d, l, w, BoundaryKind::Wired).unwrap());
    let beta = (0..g.vertex_count())
        .map(|i| 0.5 * (g.weighted_degree(i) + g.eta()[i]) + noise[i % noise.len()])
        .collect();
    BetaField::new(g, beta).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn count_methods_agree((d, l) in small_box(), w in 0.1f64..4.0, scale in 0.05f64..3.0, e in -1.0f64..12.0, seed in any::<u64>()) {
        let g = build_box(d, l, w, BoundaryKind::Wired).unwrap();
        let mut rng = chain_rng(seed, 0);
        let beta: Vec<f64> = (0..g.vertex_count())
            .map(|_| scale * (0.05 + rand::Rng::random::<f64>(&mut rng)) * w * d as f64)
            .collect();
        let m = assemble_beta(&g, &beta, Bc::Simple, true).unwrap();
        let dense = count_with_method(&m, e, CountMethod::DenseBisection).unwrap().count;
        if let Ok(c) = count_with_method(&m, e, CountMethod::Inertia) {
            prop_assert_eq!(c.count, dense);
        }
        if d == 1 {
            prop_assert_eq!(count_with_method(&m, e, CountMethod::Sturm).unwrap().count, dense);
        }
    }

    #[test]
    fn dirichlet_counts_below_simple((d, l) in small_box(), w in 0.2f64..3.0, e in 0.0f64..6.0, n0 in 0.0f64..1.0, n1 in 0.0f64..1.0) {
        let f = field_on(d, l, w, &[n0 * w, n1 * w, 0.1 * w]);
        let s = count_with_method(&assemble(&f, Bc::Simple, true).unwrap(), e, CountMethod::DenseBisection).unwrap();
        let dch = count_with_method(&assemble(&f, Bc::Dirichlet, true).unwrap(), e, CountMethod::DenseBisection).unwrap();
        prop_assert!(dch.count <= s.count);
    }

    #[test]
    fn green_is_positive_symmetric_inverse(l in 1usize..=3, w in 0.2f64..3.0, n0 in 0.01f64..1.0, n1 in 0.01f64..1.0) {
        let f = field_on(2, l, w, &[n0, n1]);
        let m = assemble(&f, Bc::Simple, false).unwrap();
        let n = m.len();
        let solver = GreenSolver::new(&m).unwrap();
        let mut ours = DMatrix::zeros(n, n);
        for j in 0..n {
            let c = solver.column(j);
            for i in 0..n {
                ours[(i, j)] = c[i];
            }
        }
        let dense = DMatrix::from_fn(n, n, |i, j| m.get(i, j));
        let inv = dense.clone().try_inverse().unwrap();
        for i in 0..n {
            for j in 0..n {
                prop_assert!(ours[(i, j)] > 0.0);
                assert_relative_eq!(ours[(i, j)], ours[(j, i)], max_relative = 1e-10);
                assert_relative_eq!(ours[(i, j)], inv[(i, j)], max_relative = 1e-9);
            }
        }
        let det = dense.determinant();
        assert_relative_eq!(solver.log_det(), det.ln(), max_relative = 1e-9);
    }

    #[test]
    fn resistance_identity_any_field(d in 1usize..=2, w in 0.2f64..3.0, n0 in 0.01f64..1.0, n1 in 0.01f64..1.0) {
        let (k, l) = if d == 1 { (9, 3) } else { (4, 2) };
        let f = field_on(d, k, w, &[n0, n1, 0.3]);
        let r = identity_check(&f, l).unwrap();
        prop_assert!(r.rel_error < 1e-10, "{:?}", r);
        prop_assert!(r.harmonicity < 1e-10);
        prop_assert!(r.nash_williams <= r.resistance * (1.0 + 1e-12));
    }

    #[test]
    fn rayleigh_monotonicity(c in proptest::collection::vec(0.1f64..5.0, 5), bump in 0.0f64..3.0, which in 0usize..5) {
        let edges = |c: &[f64]| vec![(0, 1, c[0]), (0, 2, c[1]), (1, 2, c[2]), (1, SINK, c[3]), (2, SINK, c[4])];
        let base = ConductanceNetwork::from_edges(3, 0, &edges(&c)).unwrap();
        let mut up = c.clone();
        up[which] += bump;
        let raised = ConductanceNetwork::from_edges(3, 0, &edges(&up)).unwrap();
        let r0 = effective_resistance(&base).unwrap();
        let r1 = effective_resistance(&raised).unwrap();
        prop_assert!(r1 <= r0 * (1.0 + 1e-12));
        prop_assert!(nash_williams_bound(&base).unwrap() <= r0 * (1.0 + 1e-12));
    }

    #[test]
    fn path_sum_matches_solve(w01 in 0.1f64..2.0, w12 in 0.1f64..2.0, b in proptest::collection::vec(0.2f64..3.0, 3), i in 0usize..3, j in 0usize..3) {
        let g = WeightedGraph::from_edges(3, vec![(0, 1, w01), (1, 2, w12)], vec![0.0; 3]).unwrap();
        // Shift β so that 𝓗 is diagonally dominant and the walk expansion converges fast.
        let beta: Vec<f64> = (0..3).map(|k| b[k] + 0.5 * g.weighted_degree(k)).collect();
        let m = assemble_beta(&g, &beta, Bc::Simple, false).unwrap();
        let exact = GreenSolver::new(&m).unwrap().column(j)[i];
        let sum = path_sum_green(&g, &beta, i, j, 4000);
        prop_assert!((sum - exact).abs() <= 1e-8 * exact.max(1.0));
    }

    #[test]
    fn laplace_is_one_at_zero_and_decreasing(eta in proptest::collection::vec(0.0f64..2.0, 3), w in 0.1f64..2.0, lam in 0.0f64..2.0) {
        let g = WeightedGraph::from_edges(3, vec![(0, 1, w), (1, 2, w)], eta).unwrap();
        let one = laplace_exact(&g, &[1.0; 3], &[0.0; 3]).unwrap();
        assert_relative_eq!(one, 1.0, max_relative = 1e-14);
        let a = laplace_exact(&g, &[1.0; 3], &[lam; 3]).unwrap();
        let b = laplace_exact(&g, &[1.0; 3], &[lam + 0.5; 3]).unwrap();
        prop_assert!(b <= a && a <= 1.0);
    }

    #[test]
    fn rig_draws_positive_and_cdf_monotone(a in 0.0f64..20.0, seed in any::<u64>()) {
        let p = RigParams::new(a).unwrap();
        let mut rng = chain_rng(seed, 1);
        let mut prev = 0.0;
        for _ in 0..50 {
            let y = sample_rig(p, &mut rng);
            prop_assert!(y > 0.0 && y.is_finite());
        }
        for k in 1..60 {
            let c = p.cdf(0.05 * k as f64 * (1.0 + a));
            prop_assert!(c >= prev - 1e-15);
            prev = c;
        }
    }

    #[test]
    fn critical_function_increases_in_w(d in 2usize..=8, w in 1e-4f64..0.5) {
        prop_assert!(f_d(d, w * 1.01).unwrap() > f_d(d, w).unwrap());
        prop_assert!(df_dw(d as f64, w).unwrap() > 0.0);
    }
}

#[test]
fn log_density_sentinel_outside_support() {
    let g = Arc::new(WeightedGraph::from_edges(2, vec![(0, 1, 1.0)], vec![1.0, 1.0]).unwrap());
    let inside = BetaField::new(g.clone(), vec![1.0, 1.0]).unwrap();
    assert!(log_density(&inside).is_finite());
    let outside = BetaField::new(g, vec![0.1, 0.1]).unwrap();
    assert_eq!(log_density(&outside), f64::NEG_INFINITY);
}
