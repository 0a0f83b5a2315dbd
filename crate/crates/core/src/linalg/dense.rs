//! Dense symmetric kernels used as fallbacks and oracles.

use super::tridiag::Tridiagonal;
use super::LinalgError;

/// Dense symmetric matrix, full row-major storage.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseSym {
    n: usize,
    a: Vec<f64>,
}

impl DenseSym {
    pub fn zeros(n: usize) -> Self {
        DenseSym {
            n,
            a: vec![0.0; n * n],
        }
    }

    /// Takes full row-major storage and symmetrizes it.
    pub fn from_row_major(n: usize, mut a: Vec<f64>) -> Result<Self, LinalgError> {
        if a.len() != n * n {
            return Err(LinalgError::Dimension {
                expected: n * n,
                got: a.len(),
            });
        }
        for i in 0..n {
            for j in 0..i {
                let m = 0.5 * (a[i * n + j] + a[j * n + i]);
                a[i * n + j] = m;
                a[j * n + i] = m;
            }
        }
        Ok(DenseSym { n, a })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.a[i * self.n + j] = v;
        self.a[j * self.n + i] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.a
    }

    pub fn cholesky(&self) -> Result<DenseCholesky, LinalgError> {
        let n = self.n;
        let mut l = vec![0.0; n * n];
        for j in 0..n {
            let mut s = self.a[j * n + j];
            for k in 0..j {
                s -= l[j * n + k] * l[j * n + k];
            }
            if !(s > 0.0) || !s.is_finite() {
                return Err(LinalgError::NotPositiveDefinite { row: j, pivot: s });
            }
            let ljj = s.sqrt();
            l[j * n + j] = ljj;
            for i in j + 1..n {
                let mut s = self.a[i * n + j];
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                l[i * n + j] = s / ljj;
            }
        }
        Ok(DenseCholesky { n, l })
    }

    /// Householder reduction to a similar symmetric tridiagonal matrix.
    pub fn tridiagonalize(&self) -> Tridiagonal {
        let n = self.n;
        if n == 0 {
            return Tridiagonal::new(vec![], vec![]);
        }
        let mut a = self.a.clone();
        let mut diag = vec![0.0; n];
        let mut off = vec![0.0; n.saturating_sub(1)];
        let mut v = vec![0.0; n];
        let mut p = vec![0.0; n];
        for k in 0..n.saturating_sub(2) {
            let m0 = k + 1;
            let norm = (m0..n).map(|i| a[i * n + k].powi(2)).sum::<f64>().sqrt();
            let x0 = a[m0 * n + k];
            if norm == 0.0 {
                off[k] = 0.0;
                diag[k] = a[k * n + k];
                continue;
            }
            let alpha = if x0 >= 0.0 { -norm } else { norm };
            for i in m0..n {
                v[i] = a[i * n + k];
            }
            v[m0] -= alpha;
            let vnorm = (m0..n).map(|i| v[i] * v[i]).sum::<f64>().sqrt();
            if vnorm == 0.0 {
                off[k] = x0;
                diag[k] = a[k * n + k];
                continue;
            }
            for i in m0..n {
                v[i] /= vnorm;
            }
            // p = 2 A v, K = vᵀp, q = p − K v, A ← A − v qᵀ − q vᵀ.
            for i in m0..n {
                let mut s = 0.0;
                for j in m0..n {
                    s += a[i * n + j] * v[j];
                }
                p[i] = 2.0 * s;
            }
            let kk: f64 = (m0..n).map(|i| v[i] * p[i]).sum();
            for i in m0..n {
                p[i] -= kk * v[i];
            }
            for i in m0..n {
                for j in m0..n {
                    a[i * n + j] -= v[i] * p[j] + p[i] * v[j];
                }
            }
            diag[k] = a[k * n + k];
            off[k] = alpha;
        }
        if n >= 2 {
            off[n - 2] = a[(n - 1) * n + (n - 2)];
            diag[n - 2] = a[(n - 2) * n + (n - 2)];
        }
        diag[n - 1] = a[(n - 1) * n + (n - 1)];
        Tridiagonal::new(diag, off)
    }
}

#[derive(Debug, Clone)]
pub struct DenseCholesky {
    n: usize,
    l: Vec<f64>,
}

impl DenseCholesky {
    pub fn log_det(&self) -> f64 {
        (0..self.n).map(|i| 2.0 * self.l[i * self.n + i].ln()).sum()
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        let n = self.n;
        for i in 0..n {
            let mut s = x[i];
            for k in 0..i {
                s -= self.l[i * n + k] * x[k];
            }
            x[i] = s / self.l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in i + 1..n {
                s -= self.l[k * n + i] * x[k];
            }
            x[i] = s / self.l[i * n + i];
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    pub fn inverse(&self) -> Vec<f64> {
        let n = self.n;
        let mut inv = vec![0.0; n * n];
        let mut col = vec![0.0; n];
        for j in 0..n {
            col.iter_mut().for_each(|c| *c = 0.0);
            col[j] = 1.0;
            self.solve_in_place(&mut col);
            for i in 0..n {
                inv[i * n + j] = col[i];
            }
        }
        inv
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tridiagonalization_preserves_spectrum_counts() {
        let n = 5;
        let mut m = DenseSym::zeros(n);
        for i in 0..n {
            for j in 0..=i {
                let v = ((i * 7 + j * 3) % 5) as f64 - 2.0 + if i == j { 3.0 } else { 0.0 };
                m.set(i, j, v);
            }
        }
        let t = m.tridiagonalize();
        let trace: f64 = (0..n).map(|i| m.get(i, i)).sum();
        let ttrace: f64 = t.diag.iter().sum();
        assert!((trace - ttrace).abs() < 1e-12);
        let frob: f64 = m.as_slice().iter().map(|x| x * x).sum();
        let tfrob: f64 = t.diag.iter().map(|x| x * x).sum::<f64>()
            + 2.0 * t.off.iter().map(|x| x * x).sum::<f64>();
        assert!((frob - tfrob).abs() < 1e-10);
    }

    #[test]
    fn cholesky_inverse() {
        let mut m = DenseSym::zeros(3);
        m.set(0, 0, 4.0);
        m.set(1, 1, 5.0);
        m.set(2, 2, 6.0);
        m.set(1, 0, 1.0);
        m.set(2, 1, -2.0);
        let c = m.cholesky().unwrap();
        let inv = c.inverse();
        for i in 0..3 {
            for j in 0..3 {
                let s: f64 = (0..3).map(|k| m.get(i, k) * inv[k * 3 + j]).sum();
                assert!((s - if i == j { 1.0 } else { 0.0 }).abs() < 1e-14);
            }
        }
    }
}
