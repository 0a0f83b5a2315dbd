use crate::graph::WeightedGraph;
use crate::operator::{assemble, Bc, GreenSolver};

use super::{BetaField, BetaFieldError};

/// Log of the density of ν^{W,η} at `f`:
/// `−½(⟨1,𝓗1⟩ + ⟨η,𝓗⁻¹η⟩ − 2⟨1,η⟩) − ½ log det 𝓗 + (n/2) log(2/π)`.
/// Returns `f64::NEG_INFINITY` outside the support (𝓗 not positive definite).
pub fn log_density(f: &BetaField) -> f64 {
    let m = match assemble(f, Bc::Simple, false) {
        Ok(m) => m,
        Err(_) => return f64::NEG_INFINITY,
    };
    let solver = match GreenSolver::new(&m) {
        Ok(s) => s,
        Err(_) => return f64::NEG_INFINITY,
    };
    let eta = f.graph().eta();
    let n = f.len();
    // ⟨1,𝓗1⟩ − 2⟨1,η⟩ + ⟨η,𝓗⁻¹η⟩ = ⟨v, 𝓗 v⟩ with v = 1 − 𝓗⁻¹η.
    let x = solver.solve(eta);
    let v: Vec<f64> = x.iter().map(|xi| 1.0 - xi).collect();
    let hv = m.matvec(&v);
    let q: f64 = v.iter().zip(&hv).map(|(a, b)| a * b).sum();
    -0.5 * q - 0.5 * solver.log_det() + 0.5 * n as f64 * (2.0 / std::f64::consts::PI).ln()
}

/// Closed-form `E[e^{−⟨λ,β⟩}]` under ν^{W,θ,η}:
/// `exp[−Σ_{i∼j} W_ij(√((θ_i²+λ_i)(θ_j²+λ_j)) − θ_iθ_j) − Σ_i η_i(√(θ_i²+λ_i) − θ_i)]
///  · Π_i θ_i/√(θ_i²+λ_i)`.
pub fn laplace_exact(g: &WeightedGraph, theta: &[f64], lambda: &[f64]) -> Result<f64, BetaFieldError> {
    laplace_exact_log(g, theta, lambda).map(f64::exp)
}

pub fn laplace_exact_log(g: &WeightedGraph, theta: &[f64], lambda: &[f64]) -> Result<f64, BetaFieldError> {
    let n = g.vertex_count();
    if theta.len() != n || lambda.len() != n {
        return Err(BetaFieldError::LaplaceDimension(n));
    }
    if theta.iter().any(|t| !(*t > 0.0 && t.is_finite()))
        || lambda.iter().any(|l| !(*l >= 0.0 && l.is_finite()))
    {
        return Err(BetaFieldError::LaplaceDomain);
    }
    let r: Vec<f64> = theta
        .iter()
        .zip(lambda)
        .map(|(t, l)| (t * t + l).sqrt())
        .collect();
    let mut log = 0.0;
    for e in g.edges() {
        log -= e.weight * (r[e.a] * r[e.b] - theta[e.a] * theta[e.b]);
    }
    for i in 0..n {
        log -= g.eta()[i] * (r[i] - theta[i]);
        log += (theta[i] / r[i]).ln();
    }
    Ok(log)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    #[test]
    fn single_vertex_density() {
        let h = 1.7;
        let b = 0.6;
        let g = Arc::new(WeightedGraph::from_edges(1, vec![], vec![h]).unwrap());
        let f = BetaField::new(g, vec![b]).unwrap();
        let expect = -0.5 * (2.0 * b + h * h / (2.0 * b) - 2.0 * h) - 0.5 * (2.0 * b).ln()
            + 0.5 * (2.0 / std::f64::consts::PI).ln();
        assert!((log_density(&f) - expect).abs() < 1e-13);
    }

    #[test]
    fn outside_support_is_neg_infinity() {
        let g = Arc::new(WeightedGraph::from_edges(2, vec![(0, 1, 3.0)], vec![0.0; 2]).unwrap());
        let f = BetaField::new(g, vec![0.5, 0.5]).unwrap();
        assert_eq!(log_density(&f), f64::NEG_INFINITY);
    }

    #[test]
    fn laplace_examples() {
        let g = WeightedGraph::from_edges(2, vec![(0, 1, 0.8)], vec![0.5, 0.0]).unwrap();
        assert_eq!(laplace_exact(&g, &[1.0; 2], &[0.0; 2]).unwrap(), 1.0);

        let (d, w, l) = (3usize, 0.4f64, 0.7f64);
        let single = WeightedGraph::from_edges(1, vec![], vec![2.0 * d as f64 * w]).unwrap();
        let expect = (-2.0 * d as f64 * w * ((1.0 + l).sqrt() - 1.0)).exp() / (1.0f64 + l).sqrt();
        assert!((laplace_exact(&single, &[1.0], &[l]).unwrap() - expect).abs() < 1e-15);

        let two = WeightedGraph::from_edges(2, vec![(0, 1, w)], vec![0.0; 2]).unwrap();
        let expect = (-w * ((1.0 + l).sqrt() - 1.0)).exp() / (1.0f64 + l).sqrt();
        assert!((laplace_exact(&two, &[1.0; 2], &[l, 0.0]).unwrap() - expect).abs() < 1e-15);

        assert!(laplace_exact(&two, &[1.0; 2], &[-1.0, 0.0]).is_err());
        assert!(laplace_exact(&two, &[0.0, 1.0], &[0.0, 0.0]).is_err());
        assert!(laplace_exact(&two, &[1.0], &[0.0]).is_err());
    }
}
