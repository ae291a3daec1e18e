//! Small statistics helpers: order-fixed summation, batch means and
//! weighted least squares.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Sum in a fixed binary-tree order, independent of how the slice was produced.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 32 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Neumaier compensated accumulator.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn merge(&mut self, other: CompensatedSum) {
        self.add(other.sum);
        self.add(other.carry);
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// Mean, batch-means standard error and integrated autocorrelation time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BatchStats {
    pub mean: f64,
    pub stderr: f64,
    /// `τ_int` with the convention `τ_int = 1/2` for independent samples.
    pub tau_int: f64,
    pub n_eff: f64,
}

pub fn batch_means(series: &[f64], n_batches: usize) -> Result<BatchStats> {
    let n = series.len();
    if n_batches < 2 || n < n_batches {
        return Err(Error::InsufficientStatistics(format!("{n} samples cannot fill {n_batches} batches")));
    }
    if let Some(bad) = series.iter().find(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("observable returned {bad}")));
    }
    let size = n / n_batches;
    let used = &series[..size * n_batches];
    let mean = pairwise_sum(used) / used.len() as f64;
    let bm: Vec<f64> = used.chunks(size).map(|c| pairwise_sum(c) / size as f64).collect();
    let var_b = bm.iter().map(|b| (b - mean).powi(2)).sum::<f64>() / (n_batches - 1) as f64;
    let stderr = (var_b / n_batches as f64).sqrt();
    let var = used.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (used.len().max(2) - 1) as f64;
    let tau_int = if var > 0.0 { (used.len() as f64 * stderr * stderr / (2.0 * var)).max(0.5) } else { 0.5 };
    Ok(BatchStats { mean, stderr, tau_int, n_eff: used.len() as f64 / (2.0 * tau_int) })
}

/// Least-squares fit `y ≈ X c` with optional per-row standard errors.
#[derive(Clone, Debug)]
pub struct LinearFit {
    pub coeffs: Vec<f64>,
    pub errors: Vec<f64>,
    pub chi2: f64,
}

pub fn least_squares(rows: &[Vec<f64>], y: &[f64], sigma: Option<&[f64]>) -> Result<LinearFit> {
    let n = rows.len();
    let k = rows.first().map_or(0, Vec::len);
    if n < k || k == 0 {
        return Err(Error::InsufficientStatistics(format!("{n} points for {k} parameters")));
    }
    let weighted = sigma.is_some_and(|s| s.iter().all(|&v| v > 0.0));
    let w: Vec<f64> = match sigma {
        Some(s) if weighted => s.iter().map(|v| 1.0 / (v * v)).collect(),
        _ => vec![1.0; n],
    };
    let x = DMatrix::from_fn(n, k, |i, j| rows[i][j] * w[i].sqrt());
    let b = DVector::from_fn(n, |i, _| y[i] * w[i].sqrt());
    let normal = x.transpose() * &x;
    let inv = normal
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::InsufficientStatistics("singular fit design".into()))?;
    let c = &inv * x.transpose() * &b;
    let resid = &b - &x * &c;
    let chi2 = resid.norm_squared();
    let scale = if weighted || n == k { 1.0 } else { chi2 / (n - k) as f64 };
    Ok(LinearFit {
        coeffs: c.iter().copied().collect(),
        errors: (0..k).map(|i| (inv[(i, i)] * scale).max(0.0).sqrt()).collect(),
        chi2,
    })
}

/// Fit `y = a + b x`, returning `(a, b)` with errors.
pub fn line_fit(x: &[f64], y: &[f64], sigma: Option<&[f64]>) -> Result<LinearFit> {
    let rows: Vec<Vec<f64>> = x.iter().map(|&v| vec![1.0, v]).collect();
    least_squares(&rows, y, sigma)
}
