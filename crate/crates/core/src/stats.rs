//! Monte-Carlo summaries: means with standard errors, Kolmogorov–Smirnov
//! distances, least-squares lines.

use serde::{Deserialize, Serialize};

/// Monte-Carlo estimate with its standard error and seed provenance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateWithCI {
    pub value: f64,
    pub std_error: f64,
    pub n_samples: usize,
    pub seed: u64,
}

impl EstimateWithCI {
    pub fn exact(value: f64, n_samples: usize, seed: u64) -> Self {
        EstimateWithCI {
            value,
            std_error: 0.0,
            n_samples,
            seed,
        }
    }

    /// `|value − target| ≤ k·SE`.
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.value - target).abs() <= k * self.std_error
    }

    /// `value ≤ bound + k·SE`.
    pub fn at_most(&self, bound: f64, k: f64) -> bool {
        self.value <= bound + k * self.std_error
    }

    /// `|value − target|` in units of the standard error (∞ when SE is 0 and
    /// the values differ).
    pub fn z_score(&self, target: f64) -> f64 {
        let d = (self.value - target).abs();
        if d == 0.0 {
            0.0
        } else {
            d / self.std_error
        }
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64
}

/// Mean and standard error assuming independent draws.
pub fn mean_se_iid(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    (mean(xs), (variance(xs) / n as f64).sqrt())
}

/// Mean and batch-means standard error of a correlated sequence, with batch
/// size `⌊√n⌋`. Falls back to the i.i.d. formula for fewer than 16 points.
pub fn mean_se_batch(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n < 16 {
        return mean_se_iid(xs);
    }
    let size = (n as f64).sqrt().floor() as usize;
    let batches = n / size;
    let means: Vec<f64> = (0..batches)
        .map(|b| mean(&xs[b * size..(b + 1) * size]))
        .collect();
    let m = mean(xs);
    let bm = mean(&means);
    let var_b = means.iter().map(|x| (x - bm).powi(2)).sum::<f64>() / (batches - 1) as f64;
    (m, (var_b / batches as f64).sqrt())
}

pub fn estimate_iid(xs: &[f64], seed: u64) -> EstimateWithCI {
    let (value, std_error) = mean_se_iid(xs);
    EstimateWithCI {
        value,
        std_error,
        n_samples: xs.len(),
        seed,
    }
}

pub fn estimate_batch(xs: &[f64], seed: u64) -> EstimateWithCI {
    let (value, std_error) = mean_se_batch(xs);
    EstimateWithCI {
        value,
        std_error,
        n_samples: xs.len(),
        seed,
    }
}

/// Sample variance with a standard error from batch means of the centered
/// squares.
pub fn variance_batch(xs: &[f64], seed: u64) -> EstimateWithCI {
    let m = mean(xs);
    let n = xs.len() as f64;
    let sq: Vec<f64> = xs.iter().map(|x| (x - m).powi(2) * n / (n - 1.0)).collect();
    estimate_batch(&sq, seed)
}

/// Kolmogorov–Smirnov distance between the empirical law of `sorted` and a
/// CDF given by its values at the sample points.
pub fn ks_distance_sorted(sorted: &[f64], cdf_at_points: &[f64]) -> f64 {
    assert_eq!(sorted.len(), cdf_at_points.len());
    let n = sorted.len() as f64;
    let mut d = 0.0f64;
    for (i, &f) in cdf_at_points.iter().enumerate() {
        let lo = i as f64 / n;
        let hi = (i + 1) as f64 / n;
        d = d.max((f - lo).abs()).max((hi - f).abs());
    }
    d
}

pub fn ks_distance<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let c: Vec<f64> = s.iter().map(|&x| cdf(x)).collect();
    ks_distance_sorted(&s, &c)
}

/// Ordinary least-squares line `y ≈ intercept + slope·x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub slope_std_error: f64,
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> LinearFit {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let mx = mean(x);
    let my = mean(y);
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum();
    let r_squared = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    let slope_std_error = if n > 2.0 {
        (sse / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    LinearFit {
        slope,
        intercept,
        r_squared,
        slope_std_error,
    }
}

/// `n` log-spaced points from `lo` to `hi` inclusive.
pub fn geometric_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

pub fn linear_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}
