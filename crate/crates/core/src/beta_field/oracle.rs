//! Deterministic expectations under ν^{W,η} on graphs of at most three
//! vertices.
//!
//! Vertices are taken in index order and parametrized by their Schur
//! variables: `2β_k = y_k + c_k(β_{<k})` with `c_k = P_{k,<k} 𝓗_{<k}⁻¹ P_{<k,k}`
//! and `y_k = s_k²`. Then `det 𝓗 = Π y_k`, the Jacobian `Π s_k` cancels
//! `det^{−1/2}`, and the measure becomes `(2/π)^{n/2} e^{−Q/2} ds` on
//! `(0, ∞)^n`, where `Q = ⟨v, 𝓗v⟩` with `v = 1 − 𝓗⁻¹η`.

use crate::graph::WeightedGraph;
use crate::quad::{integrate_half_line_vec, QuadResult, Tolerance};

use super::BetaFieldError;

pub const ORACLE_MAX_VERTICES: usize = 3;

struct Ctx<'a, F> {
    n: usize,
    w: [[f64; 3]; 3],
    eta: [f64; 3],
    dim: usize,
    integrand: &'a F,
    tol: f64,
}

/// `E[integrand(β)]` for a vector-valued integrand of `dim` components, by
/// nested adaptive Gauss–Legendre quadrature to absolute tolerance `tol`. The
/// integrand receives β (not 2β). `converged = false` flags a result that
/// ran out of refinement budget somewhere.
pub fn quadrature_oracle<F>(
    g: &WeightedGraph,
    dim: usize,
    integrand: &F,
    tol: f64,
) -> Result<QuadResult<Vec<f64>>, BetaFieldError>
where
    F: Fn(&[f64], &mut [f64]),
{
    let n = g.vertex_count();
    if n > ORACLE_MAX_VERTICES {
        return Err(BetaFieldError::OracleTooLarge {
            max: ORACLE_MAX_VERTICES,
            got: n,
        });
    }
    if n == 0 {
        return Err(BetaFieldError::EmptyGraph);
    }
    let mut w = [[0.0; 3]; 3];
    for e in g.edges() {
        w[e.a][e.b] = e.weight;
        w[e.b][e.a] = e.weight;
    }
    let mut eta = [0.0; 3];
    eta[..n].copy_from_slice(g.eta());
    let ctx = Ctx {
        n,
        w,
        eta,
        dim,
        integrand,
        tol,
    };
    let mut converged = true;
    let value = level(&ctx, 0, [0.0; 3], &mut converged);
    Ok(QuadResult {
        value,
        error: tol,
        converged,
    })
}

fn level<F: Fn(&[f64], &mut [f64])>(
    ctx: &Ctx<'_, F>,
    k: usize,
    two_beta: [f64; 3],
    converged: &mut bool,
) -> Vec<f64> {
    let c = schur_shift(&ctx.w, &two_beta, k);
    let last = k + 1 == ctx.n;
    // Inner levels are integrated much more tightly so their errors do not
    // accumulate in the outer rule.
    let tol = if k == 0 {
        Tolerance {
            abs: ctx.tol,
            rel: 0.0,
        }
    } else {
        Tolerance {
            abs: ctx.tol * 1e-3,
            rel: 1e-10,
        }
    };
    let mut inner_ok = true;
    let r = integrate_half_line_vec(
        |s, out| {
            let mut tb = two_beta;
            tb[k] = s * s + c;
            if last {
                evaluate(ctx, &tb, out);
            } else {
                let v = level(ctx, k + 1, tb, &mut inner_ok);
                out.copy_from_slice(&v);
            }
        },
        ctx.dim,
        tol,
    );
    if !r.converged || !inner_ok {
        *converged = false;
    }
    r.value
}

/// `P_{k,<k} 𝓗_{<k}⁻¹ P_{<k,k}` for `k ≤ 2`.
fn schur_shift(w: &[[f64; 3]; 3], tb: &[f64; 3], k: usize) -> f64 {
    match k {
        0 => 0.0,
        1 => w[1][0] * w[1][0] / tb[0],
        _ => {
            let det = tb[0] * tb[1] - w[0][1] * w[0][1];
            let (p0, p1) = (w[2][0], w[2][1]);
            (p0 * p0 * tb[1] + 2.0 * p0 * p1 * w[0][1] + p1 * p1 * tb[0]) / det
        }
    }
}

fn evaluate<F: Fn(&[f64], &mut [f64])>(ctx: &Ctx<'_, F>, tb: &[f64; 3], out: &mut [f64]) {
    let n = ctx.n;
    let mut h = [[0.0; 3]; 3];
    for i in 0..n {
        for j in 0..n {
            h[i][j] = if i == j { tb[i] } else { -ctx.w[i][j] };
        }
    }
    let x = solve_small(&h, &ctx.eta, n);
    let mut v = [0.0; 3];
    for i in 0..n {
        v[i] = 1.0 - x[i];
    }
    let mut q = 0.0;
    for i in 0..n {
        for j in 0..n {
            q += v[i] * h[i][j] * v[j];
        }
    }
    let weight = (2.0 / std::f64::consts::PI).powf(0.5 * n as f64) * (-0.5 * q).exp();
    let beta: Vec<f64> = tb[..n].iter().map(|b| 0.5 * b).collect();
    if weight == 0.0 || !weight.is_finite() {
        out.iter_mut().for_each(|o| *o = 0.0);
        return;
    }
    (ctx.integrand)(&beta, out);
    for o in out.iter_mut() {
        *o *= weight;
    }
}

fn solve_small(h: &[[f64; 3]; 3], b: &[f64; 3], n: usize) -> [f64; 3] {
    let mut x = [0.0; 3];
    match n {
        1 => x[0] = b[0] / h[0][0],
        2 => {
            let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
            x[0] = (h[1][1] * b[0] - h[0][1] * b[1]) / det;
            x[1] = (h[0][0] * b[1] - h[1][0] * b[0]) / det;
        }
        _ => {
            let inv = inverse3(h);
            for i in 0..3 {
                x[i] = (0..3).map(|j| inv[i][j] * b[j]).sum();
            }
        }
    }
    x
}

pub(crate) fn inverse3(h: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let c = |i: usize, j: usize| {
        let (r0, r1) = ((i + 1) % 3, (i + 2) % 3);
        let (c0, c1) = ((j + 1) % 3, (j + 2) % 3);
        h[r0][c0] * h[r1][c1] - h[r0][c1] * h[r1][c0]
    };
    let det = h[0][0] * c(0, 0) + h[0][1] * c(0, 1) + h[0][2] * c(0, 2);
    let mut inv = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            inv[j][i] = c(i, j) / det;
        }
    }
    inv
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beta_field::laplace_exact;

    #[test]
    fn normalization() {
        for eta in [0.0, 0.5, 3.0] {
            let g = WeightedGraph::from_edges(1, vec![], vec![eta]).unwrap();
            let r = quadrature_oracle(&g, 1, &|_b: &[f64], o: &mut [f64]| o[0] = 1.0, 1e-10).unwrap();
            assert!(r.converged);
            assert!((r.value[0] - 1.0).abs() < 1e-9, "eta={eta}: {}", r.value[0]);
        }
        let g = WeightedGraph::from_edges(3, vec![(0, 1, 0.7), (1, 2, 1.2)], vec![0.3, 0.0, 0.9]).unwrap();
        let r = quadrature_oracle(&g, 1, &|_b: &[f64], o: &mut [f64]| o[0] = 1.0, 1e-9).unwrap();
        assert!((r.value[0] - 1.0).abs() < 1e-8, "{}", r.value[0]);
    }

    #[test]
    fn matches_laplace_transform() {
        let g = WeightedGraph::from_edges(2, vec![(0, 1, 0.9)], vec![0.4, 1.1]).unwrap();
        let lam = [0.6, 0.25];
        let r = quadrature_oracle(
            &g,
            1,
            &|b: &[f64], o: &mut [f64]| o[0] = (-lam[0] * b[0] - lam[1] * b[1]).exp(),
            1e-10,
        )
        .unwrap();
        let exact = laplace_exact(&g, &[1.0; 2], &lam).unwrap();
        assert!((r.value[0] - exact).abs() < 1e-8);
    }

    #[test]
    fn inverse3_is_inverse() {
        let h = [[3.0, -1.0, 0.5], [-1.0, 2.0, -0.3], [0.5, -0.3, 4.0]];
        let inv = inverse3(&h);
        for i in 0..3 {
            for j in 0..3 {
                let s: f64 = (0..3).map(|k| h[i][k] * inv[k][j]).sum();
                assert!((s - if i == j { 1.0 } else { 0.0 }).abs() < 1e-14);
            }
        }
    }
}
