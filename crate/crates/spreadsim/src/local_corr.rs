//! Local-correlation model: the instantaneous correlation of the pair is a
//! deterministic function of the current spread, with two plateaus joined by
//! an interpolation on [nu, eta]. The resulting coupled diffusion is
//! Markovian; there is no closed-form survival function, so everything here
//! is simulation.

use crate::error::{Error, Result};
use crate::gauss::Correlation;
use crate::path::{GaussianStream, TimeGrid};
use serde::{Deserialize, Serialize};

/// Interpolation rule between the plateaus. Any shape must stay inside the
/// plateau values so that sup |rho~| < 1 holds by construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorrShape {
    Linear,
    /// Cubic smoothstep: same plateaus, continuously differentiable.
    Smooth,
}

/// State-dependent correlation with plateaus rho_min (spread <= nu) and
/// rho_max (spread >= eta).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalCorrFn {
    rho_min: f64,
    rho_max: f64,
    nu: f64,
    eta: f64,
    shape: CorrShape,
}

impl LocalCorrFn {
    pub fn new(
        rho_min: Correlation,
        rho_max: Correlation,
        nu: f64,
        eta: f64,
        shape: CorrShape,
    ) -> Result<Self> {
        if rho_min.get().abs() >= 1.0 || rho_max.get().abs() >= 1.0 {
            return Err(Error::config(
                "plateau correlations must lie strictly inside (-1, 1)",
            ));
        }
        if !(nu.is_finite() && eta.is_finite() && nu < eta) {
            return Err(Error::config(format!(
                "plateau boundaries must satisfy nu < eta, got nu = {nu}, eta = {eta}"
            )));
        }
        Ok(LocalCorrFn {
            rho_min: rho_min.get(),
            rho_max: rho_max.get(),
            nu,
            eta,
            shape,
        })
    }

    pub fn linear(rho_min: Correlation, rho_max: Correlation, nu: f64, eta: f64) -> Result<Self> {
        Self::new(rho_min, rho_max, nu, eta, CorrShape::Linear)
    }

    pub fn rho_min(&self) -> f64 {
        self.rho_min
    }
    pub fn rho_max(&self) -> f64 {
        self.rho_max
    }
    pub fn nu(&self) -> f64 {
        self.nu
    }
    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// The correlation at spread level x.
    pub fn rho_tilde(&self, x: f64) -> f64 {
        if x <= self.nu {
            self.rho_min
        } else if x >= self.eta {
            self.rho_max
        } else {
            let w = (x - self.nu) / (self.eta - self.nu);
            let w = match self.shape {
                CorrShape::Linear => w,
                CorrShape::Smooth => w * w * (3.0 - 2.0 * w),
            };
            self.rho_min + (self.rho_max - self.rho_min) * w
        }
    }
}

/// Explicit time stepping of the coupled system, coefficients frozen at the
/// left endpoint of each step: X gains dBX; Y gains
/// rho~(X - Y) dBX + sqrt(1 - rho~^2) dBY. Returns the full paths.
pub fn simulate_local(
    fun: &LocalCorrFn,
    grid: &TimeGrid,
    seed: u64,
    path_index: u64,
) -> (Vec<f64>, Vec<f64>) {
    let n = grid.n_steps();
    let mut sx = GaussianStream::new(grid.dt(), seed, path_index, 0);
    let mut sy = GaussianStream::new(grid.dt(), seed, path_index, 1);
    let mut xs = Vec::with_capacity(n + 1);
    let mut ys = Vec::with_capacity(n + 1);
    let mut x = 0.0_f64;
    let mut y = 0.0_f64;
    xs.push(x);
    ys.push(y);
    for _ in 0..n {
        let r = fun.rho_tilde(x - y);
        let c = (1.0 - r * r).sqrt();
        let dx = sx.next_increment();
        let dy = sy.next_increment();
        x += dx;
        y += r * dx + c * dy;
        xs.push(x);
        ys.push(y);
    }
    (xs, ys)
}

/// Terminal values only; same draws as the full simulation.
pub fn simulate_local_terminal(
    fun: &LocalCorrFn,
    grid: &TimeGrid,
    seed: u64,
    path_index: u64,
) -> (f64, f64) {
    let n = grid.n_steps();
    let mut sx = GaussianStream::new(grid.dt(), seed, path_index, 0);
    let mut sy = GaussianStream::new(grid.dt(), seed, path_index, 1);
    let mut x = 0.0_f64;
    let mut y = 0.0_f64;
    for _ in 0..n {
        let r = fun.rho_tilde(x - y);
        let c = (1.0 - r * r).sqrt();
        let dx = sx.next_increment();
        let dy = sy.next_increment();
        x += dx;
        y += r * dx + c * dy;
    }
    (x, y)
}
