//! Single-barrier reflection model: a Brownian motion, its reflection at a
//! level h, and a partner correlated to the reflection. The pair has a
//! two-state dependence (correlation -rho before the barrier is hit, +rho
//! after) with a closed-form copula and a closed-form survival function for
//! the difference of the two motions.

use crate::error::{Error, Result};
use crate::gauss::{bvn, phi, phi_inv, Probability};
use crate::path::{BarrierMonitoring, GaussianStream, TimeGrid, UniformStream};
use serde::{Deserialize, Serialize};

/// Parameters of the single-barrier model: barrier level h > 0, correlation
/// rho strictly inside (0, 1), and the evaluation time for the static
/// formulas.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SingleBarrierParams {
    h: f64,
    rho: f64,
    t: f64,
}

impl SingleBarrierParams {
    pub fn new(h: f64, rho: f64, t: f64) -> Result<Self> {
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::config(format!("barrier h must be > 0, got {h}")));
        }
        if !(rho.is_finite() && rho > 0.0 && rho < 1.0) {
            return Err(Error::config(format!(
                "rho must lie strictly inside (0, 1), got {rho}"
            )));
        }
        if !(t.is_finite() && t > 0.0) {
            return Err(Error::config(format!("t must be > 0, got {t}")));
        }
        Ok(SingleBarrierParams { h, rho, t })
    }

    pub fn h(&self) -> f64 {
        self.h
    }
    pub fn rho(&self) -> f64 {
        self.rho
    }
    pub fn t(&self) -> f64 {
        self.t
    }
}

/// One simulated path of the triple (B1, reflected B1, B2).
#[derive(Debug, Clone)]
pub struct SingleBarrierPath {
    pub b1: Vec<f64>,
    pub reflected: Vec<f64>,
    pub b2: Vec<f64>,
    /// Grid step at which B1 first reached h, if it did.
    pub hit_step: Option<usize>,
}

/// Per-step hitting-time detector for a level above the current value.
struct HitDetector {
    level: f64,
    variance: f64,
    bridge: Option<UniformStream>,
}

impl HitDetector {
    fn new(
        level: f64,
        variance_per_dt: f64,
        monitoring: BarrierMonitoring,
        seed: u64,
        path_index: u64,
        driver_index: u64,
    ) -> Self {
        HitDetector {
            level,
            variance: variance_per_dt,
            bridge: match monitoring {
                BarrierMonitoring::FirstGridCrossing => None,
                BarrierMonitoring::BridgeCorrected => {
                    Some(UniformStream::new(seed, path_index, driver_index))
                }
            },
        }
    }

    /// Returns the pivot value if the step from `prev` to `cur` crossed the
    /// level: the realized value in plain mode (overshoot kept), the exact
    /// level when an intra-step crossing is detected by the bridge.
    fn check(&mut self, prev: f64, cur: f64, dt: f64) -> Option<f64> {
        if cur >= self.level {
            return Some(match self.bridge {
                None => cur,
                Some(_) => self.level,
            });
        }
        let stream = self.bridge.as_mut()?;
        // Brownian bridge from prev to cur crosses the level above with
        // probability exp(-2 (l - prev)(l - cur) / (sigma^2 dt))
        let exponent = 2.0 * (self.level - prev) * (self.level - cur) / (self.variance * dt);
        if exponent > 20.0 {
            return None;
        }
        if stream.next_uniform() < (-exponent).exp() {
            Some(self.level)
        } else {
            None
        }
    }
}

/// Simulates the triple on the grid. In the default first-grid-crossing
/// mode the reflection time is the first grid step with B1 >= h and the
/// overshoot is kept (the reflected path pivots on the realized value at
/// detection), so every output stays an exact function of the driver
/// increments. Bridge-corrected monitoring also catches intra-step
/// crossings and pivots on the exact level h.
pub fn simulate_single_barrier(
    params: &SingleBarrierParams,
    grid: &TimeGrid,
    seed: u64,
    path_index: u64,
) -> SingleBarrierPath {
    simulate_single_barrier_with(
        params,
        grid,
        seed,
        path_index,
        BarrierMonitoring::FirstGridCrossing,
    )
}

pub fn simulate_single_barrier_with(
    params: &SingleBarrierParams,
    grid: &TimeGrid,
    seed: u64,
    path_index: u64,
    monitoring: BarrierMonitoring,
) -> SingleBarrierPath {
    let n = grid.n_steps();
    let mut s1 = GaussianStream::new(grid.dt(), seed, path_index, 0);
    let mut sz = GaussianStream::new(grid.dt(), seed, path_index, 1);
    let mut detector = HitDetector::new(params.h, 1.0, monitoring, seed, path_index, 2);
    let comp = (1.0 - params.rho * params.rho).sqrt();

    let mut b1 = Vec::with_capacity(n + 1);
    let mut refl = Vec::with_capacity(n + 1);
    let mut b2 = Vec::with_capacity(n + 1);
    b1.push(0.0);
    refl.push(0.0);
    b2.push(0.0);

    let mut x = 0.0_f64;
    let mut z = 0.0_f64;
    let mut hit: Option<(usize, f64)> = None;
    for k in 0..n {
        let prev = x;
        x += s1.next_increment();
        z += sz.next_increment();
        if hit.is_none() {
            if let Some(pivot) = detector.check(prev, x, grid.dt()) {
                hit = Some((k + 1, pivot));
            }
        }
        let r = match hit {
            Some((_, pivot)) => x - 2.0 * pivot,
            None => -x,
        };
        b1.push(x);
        refl.push(r);
        b2.push(params.rho * r + comp * z);
    }
    SingleBarrierPath {
        b1,
        reflected: refl,
        b2,
        hit_step: hit.map(|(k, _)| k),
    }
}

/// Terminal values (B1_t, B2_t) only; same draws as the full simulation.
pub fn simulate_single_barrier_terminal(
    params: &SingleBarrierParams,
    grid: &TimeGrid,
    seed: u64,
    path_index: u64,
) -> (f64, f64) {
    simulate_single_barrier_terminal_with(
        params,
        grid,
        seed,
        path_index,
        BarrierMonitoring::FirstGridCrossing,
    )
}

pub fn simulate_single_barrier_terminal_with(
    params: &SingleBarrierParams,
    grid: &TimeGrid,
    seed: u64,
    path_index: u64,
    monitoring: BarrierMonitoring,
) -> (f64, f64) {
    let n = grid.n_steps();
    let mut s1 = GaussianStream::new(grid.dt(), seed, path_index, 0);
    let mut sz = GaussianStream::new(grid.dt(), seed, path_index, 1);
    let mut detector = HitDetector::new(params.h, 1.0, monitoring, seed, path_index, 2);
    let comp = (1.0 - params.rho * params.rho).sqrt();
    let mut x = 0.0_f64;
    let mut z = 0.0_f64;
    let mut pivot: Option<f64> = None;
    for _ in 0..n {
        let prev = x;
        x += s1.next_increment();
        z += sz.next_increment();
        if pivot.is_none() {
            pivot = detector.check(prev, x, grid.dt());
        }
    }
    let r = match pivot {
        Some(p) => x - 2.0 * p,
        None => -x,
    };
    (x, params.rho * r + comp * z)
}

/// Extended quantile: maps 0 and 1 to the infinities so copula boundary
/// cases fall through to the bivariate-CDF marginals.
fn quantile_ext(p: f64) -> f64 {
    if p <= 0.0 {
        f64::NEG_INFINITY
    } else if p >= 1.0 {
        f64::INFINITY
    } else {
        phi_inv(p)
    }
}

/// The two-state correlation copula of (B1_t, B2_t). The branch boundary
/// u = Phi(h / sqrt(t)) is evaluated with the first branch; the branches
/// agree there analytically.
pub fn copula_value(u: Probability, v: Probability, params: &SingleBarrierParams) -> Probability {
    let (u, v) = (u.get(), v.get());
    let (h, rho, t) = (params.h, params.rho, params.t);
    let st = t.sqrt();
    let threshold = phi(h / st);
    let a = quantile_ext(u);
    let b = quantile_ext(v);
    let value = if u >= threshold {
        let shifted = b + 2.0 * rho * h / st;
        bvn(a, shifted, rho) + v - phi(shifted)
    } else {
        let am = a - 2.0 * h / st;
        bvn(a, b, -rho) + bvn(am, quantile_ext(1.0 - v) - 2.0 * rho * h / st, rho)
            + bvn(am, b, rho)
            - phi(am)
    };
    // the closed form is a probability; rounding can leave it a hair outside
    Probability::new(value.clamp(0.0, 1.0)).expect("clamped")
}

/// Survival function P(B1_t - B2_t >= x) of the difference, in closed form.
pub fn survival_diff(x: f64, params: &SingleBarrierParams) -> Result<Probability> {
    if !x.is_finite() {
        return Err(Error::domain(format!("x must be finite, got {x}")));
    }
    let (h, rho, t) = (params.h, params.rho, params.t);
    let sm = (2.0 * (1.0 - rho) * t).sqrt();
    let sp = (2.0 * (1.0 + rho) * t).sqrt();
    let value = phi((-x + 2.0 * rho * h) / sm) * phi((x - 2.0 * h * (1.0 + rho)) / sp)
        + phi((2.0 * h - x) / sm) * phi(-x / sp);
    Probability::new(value.clamp(0.0, 1.0))
}

#[cfg(test)]
#[allow(clippy::excessive_precision, clippy::needless_range_loop)]
mod tests {
    use super::*;
    use crate::path::map_paths_sequential;

    fn p(v: f64) -> Probability {
        Probability::new(v).unwrap()
    }

    #[test]
    fn params_validation() {
        assert!(SingleBarrierParams::new(0.0, 0.5, 1.0).is_err());
        assert!(SingleBarrierParams::new(1.0, 0.0, 1.0).is_err());
        assert!(SingleBarrierParams::new(1.0, 1.0, 1.0).is_err());
        assert!(SingleBarrierParams::new(1.0, 0.5, 0.0).is_err());
        assert!(SingleBarrierParams::new(1.0, 0.5, 1.0).is_ok());
    }

    #[test]
    fn reflection_is_negative_mirror_before_hit() {
        // barrier far away: the path almost surely never reaches it
        let params = SingleBarrierParams::new(50.0, 0.9, 1.0).unwrap();
        let grid = TimeGrid::new(1.0, 0.01).unwrap();
        for path in 0..20 {
            let sim = simulate_single_barrier(&params, &grid, 7, path);
            assert!(sim.hit_step.is_none());
            for (a, b) in sim.b1.iter().zip(&sim.reflected) {
                assert_eq!(*b, -*a);
            }
        }
    }

    #[test]
    fn rho_near_one_pins_b2_to_reflection() {
        let params = SingleBarrierParams::new(0.25, 1.0 - 1e-12, 1.0).unwrap();
        let grid = TimeGrid::new(1.0, 1e-3).unwrap();
        for path in 0..5 {
            let sim = simulate_single_barrier(&params, &grid, 123, path);
            for (r, b2) in sim.reflected.iter().zip(&sim.b2) {
                assert!((r - b2).abs() <= 1e-5, "gap {}", (r - b2).abs());
            }
        }
    }

    #[test]
    fn b2_terminal_variance_is_brownian() {
        let params = SingleBarrierParams::new(0.25, 0.9, 1.0).unwrap();
        let grid = TimeGrid::new(1.0, 0.01).unwrap();
        let n_paths = 10_000u64;
        let values: Vec<f64> = map_paths_sequential(n_paths, |i| {
            simulate_single_barrier_terminal(&params, &grid, 42, i).1
        });
        let n = n_paths as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let tol = 3.0 * (2.0 / n).sqrt();
        assert!((var - 1.0).abs() < tol, "variance {var}");
    }

    #[test]
    fn terminal_matches_full_simulation() {
        let params = SingleBarrierParams::new(0.25, 0.9, 1.0).unwrap();
        let grid = TimeGrid::new(1.0, 1e-2).unwrap();
        for path in 0..10 {
            let full = simulate_single_barrier(&params, &grid, 9, path);
            let (b1, b2) = simulate_single_barrier_terminal(&params, &grid, 9, path);
            assert_eq!(*full.b1.last().unwrap(), b1);
            assert_eq!(*full.b2.last().unwrap(), b2);
        }
    }

    #[test]
    fn copula_margins_and_corners() {
        let params = SingleBarrierParams::new(2.0, 0.95, 1.0).unwrap();
        for i in 0..=20 {
            let u = i as f64 / 20.0;
            assert!(
                (copula_value(p(u), p(1.0), &params).get() - u).abs() <= 1e-10,
                "C(u,1) at u={u}"
            );
            assert!(
                (copula_value(p(1.0), p(u), &params).get() - u).abs() <= 1e-10,
                "C(1,v) at v={u}"
            );
            assert!(copula_value(p(u), p(0.0), &params).get() <= 1e-10);
            assert!(copula_value(p(0.0), p(u), &params).get() <= 1e-10);
        }
    }

    #[test]
    fn copula_branches_agree_at_boundary() {
        for (h, t, rho) in [(0.25, 1.0, 0.9), (2.0, 1.0, 0.95), (0.25, 20.0, 0.5)] {
            let params = SingleBarrierParams::new(h, rho, t).unwrap();
            let threshold = phi(h / t.sqrt());
            for j in 1..10 {
                let v = j as f64 / 10.0;
                let below = copula_value(p(threshold - 1e-12), p(v), &params).get();
                let at = copula_value(p(threshold), p(v), &params).get();
                assert!((below - at).abs() < 1e-9, "jump at threshold, v={v}");
            }
        }
    }

    #[test]
    fn copula_two_increasing_on_grid() {
        let m = 50;
        for &h in &[0.25, 2.0] {
            for &t in &[0.5, 1.0, 20.0] {
                for &rho in &[0.5, 0.9, 0.95] {
                    let params = SingleBarrierParams::new(h, rho, t).unwrap();
                    let mut c = vec![vec![0.0; m + 1]; m + 1];
                    for i in 0..=m {
                        for j in 0..=m {
                            c[i][j] = copula_value(
                                p(i as f64 / m as f64),
                                p(j as f64 / m as f64),
                                &params,
                            )
                            .get();
                        }
                    }
                    for i in 0..m {
                        for j in 0..m {
                            let mass = c[i + 1][j + 1] - c[i][j + 1] - c[i + 1][j] + c[i][j];
                            assert!(
                                mass >= -1e-10,
                                "rectangle mass {mass} at ({i},{j}), h={h}, t={t}, rho={rho}"
                            );
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn copula_is_asymmetric() {
        let params = SingleBarrierParams::new(2.0, 0.95, 1.0).unwrap();
        let mut max_gap = 0.0f64;
        for i in 1..20 {
            for j in 1..20 {
                let u = i as f64 / 20.0;
                let v = j as f64 / 20.0;
                let gap =
                    (copula_value(p(u), p(v), &params).get() - copula_value(p(v), p(u), &params).get()).abs();
                max_gap = max_gap.max(gap);
            }
        }
        assert!(max_gap > 1e-3, "no asymmetry witness, max gap {max_gap}");
    }

    #[test]
    fn survival_matches_reference_values() {
        // frozen from a high-precision evaluation of the closed form
        let params = SingleBarrierParams::new(0.25, 0.9, 1.0).unwrap();
        let v = survival_diff(0.0, &params).unwrap().get();
        assert!((v - 0.6979306208981018).abs() < 1e-12, "got {v}");
        let v3 = survival_diff(0.3, &params).unwrap().get();
        assert!((v3 - 0.5284026742931131).abs() < 1e-12, "got {v3}");
        let params20 = SingleBarrierParams::new(0.25, 0.9, 20.0).unwrap();
        let v20 = survival_diff(0.0, &params20).unwrap().get();
        assert!((v20 - 0.5683024578308863).abs() < 1e-12, "got {v20}");
    }

    #[test]
    fn survival_collapses_to_gaussian_as_rho_vanishes() {
        for &t in &[1.0, 20.0] {
            let params = SingleBarrierParams::new(0.25, 1e-8, t).unwrap();
            for i in -30..=30 {
                let x = i as f64 * 0.1;
                let got = survival_diff(x, &params).unwrap().get();
                let want = phi(-x / (2.0 * t).sqrt());
                assert!((got - want).abs() <= 1e-6, "x={x}, t={t}");
            }
        }
    }

    #[test]
    fn survival_nonincreasing_and_bounded_by_envelope() {
        let params = SingleBarrierParams::new(0.25, 0.9, 1.0).unwrap();
        let mut prev = 1.0f64;
        for i in -40..=40 {
            let x = i as f64 * 0.1;
            let v = survival_diff(x, &params).unwrap().get();
            assert!(v <= prev + 1e-14, "not nonincreasing at x={x}");
            prev = v;
        }
        // upper-bound envelope for x > 0 over a parameter sweep
        for &h in &[0.1, 0.25, 0.5, 1.0, 2.0] {
            for &rho in &[0.1, 0.5, 0.9, 0.99] {
                let params = SingleBarrierParams::new(h, rho, 1.0).unwrap();
                for i in 1..=30 {
                    let x = i as f64 * 0.1;
                    let v = survival_diff(x, &params).unwrap().get();
                    let bound = 2.0 * phi(-x / 2.0);
                    assert!(v <= bound + 1e-12, "x={x}, h={h}, rho={rho}: {v} > {bound}");
                }
            }
        }
    }

    #[test]
    fn asymmetry_flattens_with_horizon() {
        let p1 = SingleBarrierParams::new(0.25, 0.9, 1.0).unwrap();
        let p20 = SingleBarrierParams::new(0.25, 0.9, 20.0).unwrap();
        let a = survival_diff(0.0, &p1).unwrap().get() - 0.5;
        let b = survival_diff(0.0, &p20).unwrap().get() - 0.5;
        assert!(b > 0.0 && b < a);
    }

    #[test]
    fn survival_consistent_with_copula() {
        // P(B1 - B2 >= x) = int_0^1 dC/du (u, g(u)) du with
        // g(u) = Phi(Phi^-1(u) - x / sqrt(t)): integrate the copula density
        // over the half-plane via central differences and Simpson's rule.
        let params = SingleBarrierParams::new(0.25, 0.9, 1.0).unwrap();
        let x = 0.3;
        let st = params.t().sqrt();
        let n = 2000usize;
        let eps = 1e-6;
        let f = |u: f64| -> f64 {
            let g = phi(phi_inv(u) - x / st);
            let hi = copula_value(p((u + eps).min(1.0)), p(g), &params).get();
            let lo = copula_value(p((u - eps).max(0.0)), p(g), &params).get();
            (hi - lo) / (2.0 * eps)
        };
        let h = 1.0 / n as f64;
        let mut integral = 0.0;
        for k in 0..n {
            let a = k as f64 * h;
            integral += h / 6.0 * (f(a + 1e-9) + 4.0 * f(a + h / 2.0) + f(a + h - 1e-9));
        }
        let direct = survival_diff(x, &params).unwrap().get();
        assert!(
            (integral - direct).abs() < 1e-3,
            "copula route {integral} vs closed form {direct}"
        );
    }
}
