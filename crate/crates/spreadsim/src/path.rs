//! Deterministic, seedable generation of Brownian increments on a uniform
//! grid, with independent substreams per (seed, path, driver).
//!
//! Streams are keyed by a hash of `(seed, path_index, driver_index)`, so any
//! value is reproducible regardless of execution order or thread count.
//! Gaussians come from the inverse CDF applied to 64-bit uniforms, which
//! keeps the coupling monotone and easy to replicate elsewhere.

use crate::error::{Error, Result};
use crate::gauss::phi_inv_approx;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Uniform discretization of [0, t_end].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    t_end: f64,
    dt: f64,
    n_steps: usize,
}

impl TimeGrid {
    pub fn new(t_end: f64, dt: f64) -> Result<Self> {
        if !(t_end.is_finite() && t_end > 0.0) {
            return Err(Error::config(format!("t_end must be > 0, got {t_end}")));
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::config(format!("dt must be > 0, got {dt}")));
        }
        let n_steps = (t_end / dt).round();
        if n_steps < 1.0 {
            return Err(Error::config(format!(
                "grid degenerate: round(t_end/dt) = {n_steps}"
            )));
        }
        if (n_steps * dt - t_end).abs() > 1e-12 * t_end.max(1.0) {
            return Err(Error::config(format!(
                "t_end = {t_end} is not an integer multiple of dt = {dt}"
            )));
        }
        Ok(TimeGrid {
            t_end,
            dt,
            n_steps: n_steps as usize,
        })
    }

    pub fn from_steps(dt: f64, n_steps: usize) -> Result<Self> {
        if n_steps == 0 {
            return Err(Error::config("n_steps must be >= 1"));
        }
        Self::new(dt * n_steps as f64, dt)
    }

    #[inline]
    pub fn t_end(&self) -> f64 {
        self.t_end
    }
    #[inline]
    pub fn dt(&self) -> f64 {
        self.dt
    }
    #[inline]
    pub fn n_steps(&self) -> usize {
        self.n_steps
    }
    /// Grid time of step index `k`, `0 <= k <= n_steps`.
    #[inline]
    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }
}

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn stream_key(seed: u64, path_index: u64, driver_index: u64) -> [u8; 32] {
    let k0 = mix64(seed ^ 0x9E37_79B9_7F4A_7C15);
    let k1 = mix64(k0 ^ path_index);
    let k2 = mix64(k1 ^ driver_index);
    let k3 = mix64(k2);
    let mut key = [0u8; 32];
    key[0..8].copy_from_slice(&k0.to_le_bytes());
    key[8..16].copy_from_slice(&k1.to_le_bytes());
    key[16..24].copy_from_slice(&k2.to_le_bytes());
    key[24..32].copy_from_slice(&k3.to_le_bytes());
    key
}

#[inline]
fn u64_to_uniform(bits: u64) -> f64 {
    // uniform on (0, 1), centered so neither endpoint is reachable
    (bits >> 11) as f64 * (1.0 / 9_007_199_254_740_992.0) + (1.0 / 18_014_398_509_481_984.0)
}

/// One driver's stream of N(0, dt) increments.
pub struct GaussianStream {
    rng: ChaCha8Rng,
    sqrt_dt: f64,
}

impl GaussianStream {
    pub fn new(dt: f64, seed: u64, path_index: u64, driver_index: u64) -> Self {
        GaussianStream {
            rng: ChaCha8Rng::from_seed(stream_key(seed, path_index, driver_index)),
            sqrt_dt: dt.sqrt(),
        }
    }

    /// Next increment, distributed N(0, dt).
    #[inline]
    pub fn next_increment(&mut self) -> f64 {
        phi_inv_approx(u64_to_uniform(self.rng.next_u64())) * self.sqrt_dt
    }
}

/// A substream of uniforms on (0, 1), keyed like [`GaussianStream`]. Used
/// for the Brownian-bridge crossing Bernoullis in barrier detection.
pub struct UniformStream {
    rng: ChaCha8Rng,
}

impl UniformStream {
    pub fn new(seed: u64, path_index: u64, driver_index: u64) -> Self {
        UniformStream {
            rng: ChaCha8Rng::from_seed(stream_key(seed, path_index, driver_index)),
        }
    }

    #[inline]
    pub fn next_uniform(&mut self) -> f64 {
        u64_to_uniform(self.rng.next_u64())
    }
}

/// How barrier crossings are detected on the grid.
///
/// The plain mode triggers at the first grid point beyond the barrier and
/// carries a O(sqrt(dt)) detection bias (the continuous path can cross and
/// come back between grid points). The bridge-corrected mode additionally
/// flags intra-step crossings with the exact Brownian-bridge probability,
/// which removes that bias; it consumes one extra uniform substream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BarrierMonitoring {
    #[default]
    FirstGridCrossing,
    BridgeCorrected,
}

/// Per-path bundle of driver increment arrays.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSet {
    labels: Vec<String>,
    increments: Vec<Vec<f64>>,
    seed: u64,
    path_index: u64,
}

/// Generates `n_drivers` mutually independent streams of i.i.d. N(0, dt)
/// increments, deterministic in `(seed, path_index)`.
pub fn make_increments(
    grid: &TimeGrid,
    n_drivers: usize,
    seed: u64,
    path_index: u64,
) -> Result<PathSet> {
    if n_drivers == 0 {
        return Err(Error::config("n_drivers must be >= 1"));
    }
    let n = grid.n_steps();
    let mut increments = Vec::with_capacity(n_drivers);
    let mut labels = Vec::with_capacity(n_drivers);
    for d in 0..n_drivers {
        let mut stream = GaussianStream::new(grid.dt(), seed, path_index, d as u64);
        let mut arr = Vec::with_capacity(n);
        for _ in 0..n {
            arr.push(stream.next_increment());
        }
        increments.push(arr);
        labels.push(format!("w{d}"));
    }
    Ok(PathSet {
        labels,
        increments,
        seed,
        path_index,
    })
}

impl PathSet {
    /// Builds a path set from explicit increment arrays (all equal length).
    pub fn from_increments(
        labels: Vec<String>,
        increments: Vec<Vec<f64>>,
        seed: u64,
        path_index: u64,
    ) -> Result<Self> {
        if labels.len() != increments.len() {
            return Err(Error::config("labels/increments length mismatch"));
        }
        if let Some(first) = increments.first() {
            let n = first.len();
            if increments.iter().any(|a| a.len() != n) {
                return Err(Error::config("driver arrays must have equal length"));
            }
        }
        Ok(PathSet {
            labels,
            increments,
            seed,
            path_index,
        })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }
    pub fn seed(&self) -> u64 {
        self.seed
    }
    pub fn path_index(&self) -> u64 {
        self.path_index
    }
    pub fn n_drivers(&self) -> usize {
        self.increments.len()
    }
    pub fn n_steps(&self) -> usize {
        self.increments.first().map_or(0, Vec::len)
    }

    pub fn increments(&self, driver: &str) -> Result<&[f64]> {
        let idx = self
            .labels
            .iter()
            .position(|l| l == driver)
            .ok_or_else(|| Error::domain(format!("unknown driver '{driver}'")))?;
        Ok(&self.increments[idx])
    }

    pub fn increments_at(&self, index: usize) -> Result<&[f64]> {
        self.increments
            .get(index)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::domain(format!("driver index {index} out of range")))
    }

    /// Running sums B_{t_k} with B_0 = 0; length `n_steps + 1`.
    pub fn cumulate(&self, driver: &str) -> Result<Vec<f64>> {
        Ok(cumulate_slice(self.increments(driver)?))
    }

    pub fn cumulate_at(&self, index: usize) -> Result<Vec<f64>> {
        Ok(cumulate_slice(self.increments_at(index)?))
    }
}

fn cumulate_slice(increments: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(increments.len() + 1);
    let mut acc = 0.0;
    out.push(acc);
    for dx in increments {
        acc += dx;
        out.push(acc);
    }
    out
}

/// Applies `f` to every path index and collects results in index order.
/// The parallel and sequential versions produce identical vectors because
/// streams are keyed by path index, never by execution order.
#[cfg(feature = "parallel")]
pub fn map_paths<T, F>(n_paths: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..n_paths).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_paths<T, F>(n_paths: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    map_paths_sequential(n_paths, f)
}

/// Sequential fallback, always available (benchmarks compare against it).
pub fn map_paths_sequential<T, F>(n_paths: u64, f: F) -> Vec<T>
where
    F: Fn(u64) -> T,
{
    (0..n_paths).map(f).collect()
}
