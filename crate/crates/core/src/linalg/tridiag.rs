//! Sturm-sequence counting for symmetric tridiagonal matrices.

/// Precomputed squares of the off-diagonal and the pivot floor used to keep
/// the recurrence away from exact zeros.
#[derive(Debug, Clone)]
pub struct Tridiagonal {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
    off_sq: Vec<f64>,
    pivmin: f64,
}

impl Tridiagonal {
    /// `off[i]` couples rows `i` and `i + 1`.
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Self {
        assert!(
            diag.is_empty() || off.len() + 1 == diag.len(),
            "off-diagonal must have n - 1 entries"
        );
        let off_sq: Vec<f64> = off.iter().map(|e| e * e).collect();
        let max_sq = off_sq.iter().cloned().fold(1.0f64, f64::max);
        Tridiagonal {
            diag,
            off,
            off_sq,
            pivmin: f64::MIN_POSITIVE * max_sq,
        }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// Number of eigenvalues `λ ≤ e`. A pivot that comes out exactly zero is
    /// replaced by `-pivmin` and counted, which is what turns the strict
    /// count of negative pivots into a count of `λ ≤ e`.
    pub fn count_leq(&self, e: f64) -> usize {
        let n = self.diag.len();
        if n == 0 {
            return 0;
        }
        let mut count = 0usize;
        let mut q = self.diag[0] - e;
        if q >= 0.0 && q <= self.pivmin {
            q = -self.pivmin;
        }
        if q < 0.0 {
            count += 1;
        }
        for i in 1..n {
            q = self.diag[i] - e - self.off_sq[i - 1] / q;
            if q >= 0.0 && q <= self.pivmin {
                q = -self.pivmin;
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// Gershgorin interval containing the spectrum.
    pub fn gershgorin(&self) -> (f64, f64) {
        let n = self.diag.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let mut r = 0.0;
            if i > 0 {
                r += self.off[i - 1].abs();
            }
            if i + 1 < n {
                r += self.off[i].abs();
            }
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        (lo, hi)
    }

    /// The `k`-th smallest eigenvalue (0-based) by bisection on the count.
    pub fn eigenvalue(&self, k: usize) -> f64 {
        assert!(k < self.len());
        let (mut lo, mut hi) = self.gershgorin();
        let scale = lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE);
        lo -= 1e-12 * scale;
        hi += 1e-12 * scale;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.count_leq(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        (0..self.len()).map(|k| self.eigenvalue(k)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplace3() -> Tridiagonal {
        Tridiagonal::new(vec![2.0; 3], vec![-1.0; 2])
    }

    #[test]
    fn three_point_laplacian() {
        let t = laplace3();
        assert_eq!(t.count_leq(0.0), 0);
        assert_eq!(t.count_leq(1.0), 1);
        assert_eq!(t.count_leq(2.0), 2);
        assert_eq!(t.count_leq(4.0), 3);
        let ev = t.eigenvalues();
        let s = 2f64.sqrt();
        for (got, want) in ev.iter().zip([2.0 - s, 2.0, 2.0 + s]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn exact_eigenvalue_is_counted() {
        let t = Tridiagonal::new(vec![1.0, 3.0], vec![0.0]);
        assert_eq!(t.count_leq(1.0), 1);
        assert_eq!(t.count_leq(3.0), 2);
        let d = Tridiagonal::new(vec![5.0], vec![]);
        assert_eq!(d.count_leq(5.0), 1);
        assert_eq!(d.count_leq(4.999), 0);
    }

    #[test]
    fn path_laplacian_spectrum() {
        let n = 50;
        let t = Tridiagonal::new(vec![2.0; n], vec![-1.0; n - 1]);
        for k in 0..n {
            let exact = 2.0 - 2.0 * ((k + 1) as f64 * std::f64::consts::PI / (n + 1) as f64).cos();
            assert!((t.eigenvalue(k) - exact).abs() < 1e-11);
        }
    }
}
