//! Symmetric band matrices in lower storage, with Cholesky and pivot-free
//! LDLᵀ inertia counting.

use super::LinalgError;

/// Symmetric matrix with `A(i, j) = 0` whenever `|i − j| > bandwidth`.
/// Row `i` stores `A(i, i), A(i, i−1), …, A(i, i−bandwidth)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BandMatrix {
    n: usize,
    bw: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, bandwidth: usize) -> Self {
        let bw = bandwidth.min(n.saturating_sub(1));
        BandMatrix {
            n,
            bw,
            data: vec![0.0; n * (bw + 1)],
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(j <= i && i - j <= self.bw);
        i * (self.bw + 1) + (i - j)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        if i - j > self.bw {
            0.0
        } else {
            self.data[self.idx(i, j)]
        }
    }

    /// Sets `A(i, j)` and `A(j, i)`. Panics outside the band.
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        assert!(i - j <= self.bw, "entry ({i}, {j}) outside the band");
        let k = self.idx(i, j);
        self.data[k] = v;
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let cur = self.get(i, j);
        self.set(i, j, cur + v);
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, x| m.max(x.abs()))
    }

    pub fn matvec(&self, x: &[f64], out: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(out.len(), self.n);
        out.iter_mut().for_each(|o| *o = 0.0);
        for i in 0..self.n {
            let row = &self.data[i * (self.bw + 1)..(i + 1) * (self.bw + 1)];
            out[i] += row[0] * x[i];
            for k in 1..=self.bw.min(i) {
                let j = i - k;
                let a = row[k];
                out[i] += a * x[j];
                out[j] += a * x[i];
            }
        }
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.n;
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for k in 0..=self.bw.min(i) {
                let v = self.data[self.idx(i, i - k)];
                a[i * n + i - k] = v;
                a[(i - k) * n + i] = v;
            }
        }
        a
    }

    pub fn cholesky(&self) -> Result<BandCholesky, LinalgError> {
        BandCholesky::factor(self)
    }

    /// Number of negative pivots of `A − shift·I` from an LDLᵀ factorization
    /// without pivoting, i.e. the number of eigenvalues below `shift`. Fails
    /// with [`LinalgError::PivotTrouble`] on a tiny pivot or when the
    /// backward-error growth `|L_ij|²|D_j| / max|A|` gets large, in which case
    /// the caller should fall back to a dense method.
    pub fn inertia_below(&self, shift: f64) -> Result<usize, LinalgError> {
        let n = self.n;
        let bw = self.bw;
        let norm = self.max_abs().max(shift.abs()).max(f64::MIN_POSITIVE);
        let tiny = 1e-13 * norm;
        let growth_cap = 1e10 * norm;
        // l[i*(bw+1) + k] = L(i, i-k) for k ≥ 1; d[i] = D_i.
        let mut l = vec![0.0; n * (bw + 1)];
        let mut d = vec![0.0; n];
        let mut ld = vec![0.0; bw + 1];
        let mut negatives = 0usize;
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            for j in lo..i {
                let mut s = self.data[self.idx(i, j)];
                let mlo = lo.max(j.saturating_sub(bw));
                for m in mlo..j {
                    s -= l[i * (bw + 1) + (i - m)] * l[j * (bw + 1) + (j - m)] * d[m];
                }
                let lij = s / d[j];
                if !lij.is_finite() || lij * lij * d[j].abs() > growth_cap {
                    return Err(LinalgError::PivotTrouble { row: i });
                }
                l[i * (bw + 1) + (i - j)] = lij;
                ld[i - j] = lij;
            }
            let mut di = self.data[self.idx(i, i)] - shift;
            for m in lo..i {
                let lim = ld[i - m];
                di -= lim * lim * d[m];
            }
            if !di.is_finite() || di.abs() <= tiny {
                return Err(LinalgError::PivotTrouble { row: i });
            }
            if di < 0.0 {
                negatives += 1;
            }
            d[i] = di;
        }
        Ok(negatives)
    }
}

/// Cholesky factor `A = L Lᵀ` with the band of `L` equal to that of `A`.
#[derive(Debug, Clone)]
pub struct BandCholesky {
    n: usize,
    bw: usize,
    l: Vec<f64>,
}

impl BandCholesky {
    pub fn factor(a: &BandMatrix) -> Result<Self, LinalgError> {
        let n = a.n;
        let bw = a.bw;
        let w = bw + 1;
        let mut l = vec![0.0; n * w];
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            for j in lo..=i {
                let mut s = a.data[a.idx(i, j)];
                let mlo = lo.max(j.saturating_sub(bw));
                for m in mlo..j {
                    s -= l[i * w + (i - m)] * l[j * w + (j - m)];
                }
                if j == i {
                    if !(s > 0.0) || !s.is_finite() {
                        return Err(LinalgError::NotPositiveDefinite { row: i, pivot: s });
                    }
                    l[i * w] = s.sqrt();
                } else {
                    l[i * w + (i - j)] = s / l[j * w];
                }
            }
        }
        Ok(BandCholesky { n, bw, l })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn log_det(&self) -> f64 {
        (0..self.n).map(|i| 2.0 * self.l[i * (self.bw + 1)].ln()).sum()
    }

    /// Solves `A x = b` in place.
    pub fn solve_in_place(&self, x: &mut [f64]) {
        let n = self.n;
        let w = self.bw + 1;
        assert_eq!(x.len(), n);
        for i in 0..n {
            let mut s = x[i];
            for m in i.saturating_sub(self.bw)..i {
                s -= self.l[i * w + (i - m)] * x[m];
            }
            x[i] = s / self.l[i * w];
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for m in i + 1..n.min(i + self.bw + 1) {
                s -= self.l[m * w + (m - i)] * x[m];
            }
            x[i] = s / self.l[i * w];
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    /// Solve followed by one step of iterative refinement against `a`.
    pub fn solve_refined(&self, a: &BandMatrix, b: &[f64]) -> Vec<f64> {
        let mut x = self.solve(b);
        let mut r = vec![0.0; self.n];
        a.matvec(&x, &mut r);
        for (ri, bi) in r.iter_mut().zip(b) {
            *ri = bi - *ri;
        }
        self.solve_in_place(&mut r);
        for (xi, ri) in x.iter_mut().zip(&r) {
            *xi += ri;
        }
        x
    }

    /// Full inverse in row-major storage.
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
        // Symmetrize away round-off asymmetry.
        for i in 0..n {
            for j in 0..i {
                let m = 0.5 * (inv[i * n + j] + inv[j * n + i]);
                inv[i * n + j] = m;
                inv[j * n + i] = m;
            }
        }
        inv
    }
}
