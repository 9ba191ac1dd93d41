//! Statistical post-processing of simulated samples: survival curves with
//! confidence bands, empirical copulas, Monte Carlo estimates, and a
//! Kolmogorov-Smirnov statistic.

use crate::error::{Error, Result};
use crate::gauss::{phi_inv, Probability};
use serde::{Deserialize, Serialize};

/// Monte Carlo mean with a symmetric normal-approximation interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MCEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub level: f64,
    pub n_paths: usize,
    pub seed: u64,
}

impl MCEstimate {
    pub fn overlaps(&self, lo: f64, hi: f64) -> bool {
        self.ci_low <= hi && lo <= self.ci_high
    }
}

/// A sampled curve with pointwise confidence bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalCurve {
    pub abscissae: Vec<f64>,
    pub values: Vec<f64>,
    pub band_low: Vec<f64>,
    pub band_high: Vec<f64>,
    pub level: f64,
}

/// Two-sided normal quantile for a confidence level in (0, 1).
pub(crate) fn z_value(level: f64) -> f64 {
    phi_inv(0.5 + level / 2.0)
}

/// Empirical survival curve: value at x is the fraction of samples >= x
/// (ties inclusive), with normal-approximation bands at `level`.
pub fn empirical_survival(samples: &[f64], xs: &[f64], level: Probability) -> Result<EmpiricalCurve> {
    if samples.is_empty() {
        return Err(Error::domain("empirical_survival needs samples"));
    }
    let level = level.get();
    if level <= 0.0 || level >= 1.0 {
        return Err(Error::domain(format!(
            "confidence level must lie in (0, 1), got {level}"
        )));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let z = z_value(level);
    let mut values = Vec::with_capacity(xs.len());
    let mut lo = Vec::with_capacity(xs.len());
    let mut hi = Vec::with_capacity(xs.len());
    for &x in xs {
        // first index with sorted[i] >= x
        let idx = sorted.partition_point(|&s| s < x);
        let p = (n - idx) as f64 / n as f64;
        let half = z * (p * (1.0 - p) / n as f64).sqrt();
        values.push(p);
        lo.push((p - half).max(0.0));
        hi.push((p + half).min(1.0));
    }
    Ok(EmpiricalCurve {
        abscissae: xs.to_vec(),
        values,
        band_low: lo,
        band_high: hi,
        level,
    })
}

/// Empirical copula on a `grid_size` x `grid_size` lattice: entry (i, j)
/// (1-based) is the fraction of pairs whose component-wise ranks satisfy
/// rank1 <= i n / grid_size and rank2 <= j n / grid_size.
pub fn empirical_copula(pairs: &[(f64, f64)], grid_size: usize) -> Result<Vec<Vec<f64>>> {
    if pairs.len() < 2 {
        return Err(Error::domain("empirical_copula needs at least 2 pairs"));
    }
    if grid_size < 2 {
        return Err(Error::domain("grid_size must be >= 2"));
    }
    let n = pairs.len();
    let g = grid_size;
    let rank = |key: fn(&(f64, f64)) -> f64| -> Vec<usize> {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| key(&pairs[a]).total_cmp(&key(&pairs[b])));
        let mut ranks = vec![0usize; n];
        for (r, &i) in order.iter().enumerate() {
            ranks[i] = r + 1;
        }
        ranks
    };
    let r1 = rank(|p| p.0);
    let r2 = rank(|p| p.1);
    // bucket = smallest i with rank <= i*n/g, i.e. ceil(rank * g / n)
    let bucket = |r: usize| (r * g).div_ceil(n);
    let mut cells = vec![vec![0.0f64; g + 1]; g + 1];
    for k in 0..n {
        cells[bucket(r1[k])][bucket(r2[k])] += 1.0;
    }
    let mut out = vec![vec![0.0f64; g]; g];
    let mut prefix = vec![vec![0.0f64; g + 1]; g + 1];
    for i in 1..=g {
        for j in 1..=g {
            prefix[i][j] =
                cells[i][j] + prefix[i - 1][j] + prefix[i][j - 1] - prefix[i - 1][j - 1];
            out[i - 1][j - 1] = prefix[i][j] / n as f64;
        }
    }
    Ok(out)
}

/// Sample mean, standard error, and symmetric normal interval.
pub fn mc_estimate(values: &[f64], level: Probability, seed: u64) -> Result<MCEstimate> {
    if values.len() < 2 {
        return Err(Error::domain("mc_estimate needs n >= 2"));
    }
    let level = level.get();
    if level <= 0.0 || level >= 1.0 {
        return Err(Error::domain(format!(
            "confidence level must lie in (0, 1), got {level}"
        )));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let ss = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>();
    let stderr = (ss / (n - 1.0)).sqrt() / n.sqrt();
    let z = z_value(level);
    Ok(MCEstimate {
        mean,
        stderr,
        ci_low: mean - z * stderr,
        ci_high: mean + z * stderr,
        level,
        n_paths: values.len(),
        seed,
    })
}

/// Kolmogorov-Smirnov statistic: sup-norm distance between the empirical
/// CDF of `samples` and the given CDF.
pub fn ks_statistic<F>(samples: &[f64], cdf: F) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if samples.is_empty() {
        return Err(Error::domain("ks_statistic needs samples"));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    Ok(d)
}
