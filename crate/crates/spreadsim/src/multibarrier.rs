//! Multi-barrier correlation model: the coupled pair (X, Y) whose
//! instantaneous correlation flips sign each time the spread X - Y crosses
//! an alternating two-level barrier ladder, together with the analytic
//! survival series for the spread.
//!
//! The ladder alternates eta, nu, eta, ... : while the regime index k is
//! even the pair is correlated at -rho and the spread diffuses until it
//! reaches eta; while k is odd the correlation is +rho and the spread
//! diffuses down to nu. `Reflections::Infinite` lets the regime switch
//! forever (the number of switches on [0, t] is almost surely finite).

use crate::error::{Error, Result};
use crate::gauss::{phi, Probability};
use crate::path::{BarrierMonitoring, GaussianStream, TimeGrid, UniformStream};
use serde::{Deserialize, Serialize};

/// Cap on the number of regime switches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Reflections {
    Bounded(u32),
    Infinite,
}

impl Reflections {
    fn allows(&self, k: u32) -> bool {
        match self {
            Reflections::Bounded(n) => k < *n,
            Reflections::Infinite => true,
        }
    }
}

/// Barrier-ladder dependence specification: lower barrier nu, upper barrier
/// eta > nu, correlation magnitude rho in [0, 1], and the reflection budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BarrierParams {
    nu: f64,
    eta: f64,
    rho: f64,
    max_reflections: Reflections,
}

impl BarrierParams {
    pub fn new(nu: f64, eta: f64, rho: f64, max_reflections: Reflections) -> Result<Self> {
        if !(nu.is_finite() && eta.is_finite() && nu < eta) {
            return Err(Error::config(format!(
                "barriers must satisfy nu < eta, got nu = {nu}, eta = {eta}"
            )));
        }
        if !(0.0..=1.0).contains(&rho) {
            return Err(Error::config(format!("rho must lie in [0, 1], got {rho}")));
        }
        Ok(BarrierParams {
            nu,
            eta,
            rho,
            max_reflections,
        })
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }
    pub fn eta(&self) -> f64 {
        self.eta
    }
    pub fn rho(&self) -> f64 {
        self.rho
    }
    pub fn max_reflections(&self) -> Reflections {
        self.max_reflections
    }
    pub fn with_reflections(mut self, r: Reflections) -> Self {
        self.max_reflections = r;
        self
    }

    /// Barrier targeted by the (k+1)-th switch: 0 at k = 0, then eta for odd
    /// k and nu for even k >= 2.
    pub fn alpha_seq(&self, k: u32) -> f64 {
        if k == 0 {
            0.0
        } else if k.is_multiple_of(2) {
            self.nu
        } else {
            self.eta
        }
    }

    /// Standardized first-passage levels u_k: the k-th switch time has the
    /// law of a standard Brownian motion's first passage to u_k.
    pub fn u_seq(&self, k: u32) -> Result<f64> {
        if k == 0 {
            return Ok(0.0);
        }
        if self.rho >= 1.0 {
            return Err(Error::domain(
                "u_seq requires rho < 1 (the formula divides by sqrt(1 - rho))",
            ));
        }
        let (nu, eta, rho) = (self.nu, self.eta, self.rho);
        let half = |m: u32| (m / 2) as f64;
        Ok(eta / (2.0 * (1.0 + rho)).sqrt()
            + (eta - nu) / 2f64.sqrt()
                * (half(k) / (1.0 - rho).sqrt() + half(k - 1) / (1.0 + rho).sqrt()))
    }

    /// CDF of the k-th switch time: P(tau_k <= t) = 2 Phi(-u_k / sqrt(t)).
    pub fn stopping_time_cdf(&self, k: u32, t: f64) -> Result<Probability> {
        if k == 0 {
            return Err(Error::domain(
                "tau_0 = 0 deterministically; stopping_time_cdf needs k >= 1",
            ));
        }
        if !(t.is_finite() && t > 0.0) {
            return Err(Error::domain(format!("t must be > 0, got {t}")));
        }
        let u = self.u_seq(k)?;
        Probability::new((2.0 * phi(-u / t.sqrt())).min(1.0))
    }
}

/// Record of one detected regime switch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwitchRecord {
    /// Grid step index at which the crossing was detected.
    pub step: usize,
    /// Grid time of the detection.
    pub time: f64,
    /// Driver values at detection.
    pub bx: f64,
    pub by: f64,
    /// Actual spread at detection (barrier plus overshoot).
    pub spread: f64,
}

/// Per-path ladder state: the switches that happened before t_end.
#[derive(Debug, Clone, Default)]
pub struct ReflectionLadder {
    pub switches: Vec<SwitchRecord>,
}

impl ReflectionLadder {
    /// Number of reflections N_t that happened on the path.
    pub fn n_reflections(&self) -> usize {
        self.switches.len()
    }
    /// Detected switch times tau_1, tau_2, ...
    pub fn switch_times(&self) -> Vec<f64> {
        self.switches.iter().map(|s| s.time).collect()
    }
}

/// A simulated multi-barrier path.
#[derive(Debug, Clone)]
pub struct MbPath {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub ladder: ReflectionLadder,
}

/// Terminal state of a path plus everything needed to reconstruct the
/// spread under any smaller reflection budget.
#[derive(Debug, Clone)]
pub struct MbTerminal {
    pub x: f64,
    pub y: f64,
    pub by: f64,
    pub ladder: ReflectionLadder,
}

const SWITCH_SAFETY_CAP: usize = 1_000_000;

fn step_sign(k: u32) -> f64 {
    // dY = rho * (-1)^(k+1) * dBX + sqrt(1 - rho^2) * dBY in regime k
    if k.is_multiple_of(2) {
        -1.0
    } else {
        1.0
    }
}

/// Detects the spread crossing the active barrier: eta from below while the
/// regime index is even, nu from above while odd. With bridge monitoring,
/// intra-step excursions are flagged with the exact bridge probability for
/// the regime's diffusion scale.
struct SpreadDetector {
    bridge: Option<UniformStream>,
}

impl SpreadDetector {
    fn new(monitoring: BarrierMonitoring, seed: u64, path_index: u64, driver_index: u64) -> Self {
        SpreadDetector {
            bridge: match monitoring {
                BarrierMonitoring::FirstGridCrossing => None,
                BarrierMonitoring::BridgeCorrected => {
                    Some(UniformStream::new(seed, path_index, driver_index))
                }
            },
        }
    }

    fn check(&mut self, params: &BarrierParams, k: u32, prev: f64, cur: f64, dt: f64) -> bool {
        let rho = params.rho();
        let (gap_prev, gap_cur, variance) = if k.is_multiple_of(2) {
            if cur >= params.eta() {
                return true;
            }
            (params.eta() - prev, params.eta() - cur, 2.0 * (1.0 + rho))
        } else {
            if cur <= params.nu() {
                return true;
            }
            (prev - params.nu(), cur - params.nu(), 2.0 * (1.0 - rho))
        };
        let Some(stream) = self.bridge.as_mut() else {
            return false;
        };
        if variance <= 0.0 {
            return false;
        }
        let exponent = 2.0 * gap_prev * gap_cur / (variance * dt);
        exponent <= 20.0 && stream.next_uniform() < (-exponent).exp()
    }
}

/// Simulates (X, Y) on the grid. Per step the spread is checked against the
/// active barrier (eta while the regime index is even, nu while odd); on a
/// crossing the regime flips and the detection is recorded. The spread is
/// not snapped to the barrier, so X and Y remain exact functions of the
/// driver increments and X - Y stays a discrete-time martingale.
pub fn simulate_mb(
    params: &BarrierParams,
    grid: &TimeGrid,
    seed: u64,
    path_index: u64,
) -> Result<MbPath> {
    simulate_mb_with(
        params,
        grid,
        seed,
        path_index,
        BarrierMonitoring::FirstGridCrossing,
    )
}

pub fn simulate_mb_with(
    params: &BarrierParams,
    grid: &TimeGrid,
    seed: u64,
    path_index: u64,
    monitoring: BarrierMonitoring,
) -> Result<MbPath> {
    let n = grid.n_steps();
    let mut sx = GaussianStream::new(grid.dt(), seed, path_index, 0);
    let mut sy = GaussianStream::new(grid.dt(), seed, path_index, 1);
    let mut detector = SpreadDetector::new(monitoring, seed, path_index, 2);
    let rho = params.rho;
    let comp = (1.0 - rho * rho).max(0.0).sqrt();

    let mut x = Vec::with_capacity(n + 1);
    let mut y = Vec::with_capacity(n + 1);
    x.push(0.0);
    y.push(0.0);
    let mut bx = 0.0_f64;
    let mut by = 0.0_f64;
    let mut yv = 0.0_f64;
    let mut prev_spread = 0.0_f64;
    let mut k = 0u32;
    let mut ladder = ReflectionLadder::default();

    for step in 0..n {
        let dx = sx.next_increment();
        let dy = sy.next_increment();
        bx += dx;
        by += dy;
        yv += rho * step_sign(k) * dx + comp * dy;
        x.push(bx);
        y.push(yv);
        let spread = bx - yv;
        if params.max_reflections.allows(k)
            && detector.check(params, k, prev_spread, spread, grid.dt())
        {
            ladder.switches.push(SwitchRecord {
                step: step + 1,
                time: grid.time(step + 1),
                bx,
                by,
                spread,
            });
            if ladder.switches.len() >= SWITCH_SAFETY_CAP {
                return Err(Error::consistency(format!(
                    "path exceeded {SWITCH_SAFETY_CAP} regime switches"
                )));
            }
            k += 1;
        }
        prev_spread = spread;
    }
    Ok(MbPath { x, y, ladder })
}

/// Terminal-only simulation under an infinite reflection budget. The
/// recorded switches allow [`MbTerminal::spread_at_cap`] to recover
/// X_t - Y^n_t for every finite cap n from the same draws.
pub fn simulate_mb_terminal(
    params: &BarrierParams,
    grid: &TimeGrid,
    seed: u64,
    path_index: u64,
) -> Result<MbTerminal> {
    simulate_mb_terminal_with(
        params,
        grid,
        seed,
        path_index,
        BarrierMonitoring::FirstGridCrossing,
    )
}

pub fn simulate_mb_terminal_with(
    params: &BarrierParams,
    grid: &TimeGrid,
    seed: u64,
    path_index: u64,
    monitoring: BarrierMonitoring,
) -> Result<MbTerminal> {
    let n = grid.n_steps();
    let mut sx = GaussianStream::new(grid.dt(), seed, path_index, 0);
    let mut sy = GaussianStream::new(grid.dt(), seed, path_index, 1);
    let mut detector = SpreadDetector::new(monitoring, seed, path_index, 2);
    let rho = params.rho;
    let comp = (1.0 - rho * rho).max(0.0).sqrt();

    let mut bx = 0.0_f64;
    let mut by = 0.0_f64;
    let mut yv = 0.0_f64;
    let mut prev_spread = 0.0_f64;
    let mut k = 0u32;
    let mut ladder = ReflectionLadder::default();

    for step in 0..n {
        let dx = sx.next_increment();
        let dy = sy.next_increment();
        bx += dx;
        by += dy;
        yv += rho * step_sign(k) * dx + comp * dy;
        let spread = bx - yv;
        if detector.check(params, k, prev_spread, spread, grid.dt()) {
            ladder.switches.push(SwitchRecord {
                step: step + 1,
                time: grid.time(step + 1),
                bx,
                by,
                spread,
            });
            if ladder.switches.len() >= SWITCH_SAFETY_CAP {
                return Err(Error::consistency(format!(
                    "path exceeded {SWITCH_SAFETY_CAP} regime switches"
                )));
            }
            k += 1;
        }
        prev_spread = spread;
    }
    Ok(MbTerminal {
        x: bx,
        y: yv,
        by,
        ladder,
    })
}

impl MbTerminal {
    /// Spread X_t - Y^n_t under a finite reflection budget n, reconstructed
    /// from the switch records: after its last allowed switch the capped
    /// process keeps its frozen regime, so the spread is the recorded spread
    /// at that switch plus the frozen-regime increments to t.
    pub fn spread_at_cap(&self, n: u32, params: &BarrierParams) -> f64 {
        match self.ladder.switches.get(n as usize) {
            None => self.x - self.y,
            Some(s) => {
                let rho = params.rho;
                let comp = (1.0 - rho * rho).max(0.0).sqrt();
                let sign = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
                s.spread
                    + (1.0 + sign * rho) * (self.x - s.bx)
                    - comp * (self.by - s.by)
            }
        }
    }
}

/// Terms of the survival series P(X_t - Y^n_t >= x) = sum_{k<=n} p_k(t, x).
///
/// p_0 is the Gaussian anchor; for k >= 1 the term is the two-branch
/// difference split at x versus alpha_k, carried by the first-passage level
/// u_k. Each summand satisfies |p_k| <= P(tau_k <= t) = 2 Phi(-u_k/sqrt(t)).
pub fn p_term(n: u32, t: f64, x: f64, params: &BarrierParams) -> Result<f64> {
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::domain(format!("t must be > 0, got {t}")));
    }
    if !x.is_finite() {
        return Err(Error::domain(format!("x must be finite, got {x}")));
    }
    let rho = params.rho;
    if n == 0 {
        return Ok(phi(-x / (2.0 * (1.0 + rho) * t).sqrt()));
    }
    if rho >= 1.0 {
        return Err(Error::domain("survival series requires rho < 1"));
    }
    let alpha = params.alpha_seq(n);
    let u = params.u_seq(n)?;
    let st = t.sqrt();
    // regime before the n-th switch carries (-1)^(n-1), after it (-1)^n
    let sign_prev = if n.is_multiple_of(2) { -1.0 } else { 1.0 };
    let scale_prev = (2.0 * (1.0 + sign_prev * rho) * t).sqrt();
    let scale_cur = (2.0 * (1.0 - sign_prev * rho) * t).sqrt();
    let shift = if x < alpha { -u / st } else { u / st };
    Ok(phi_diff(
        (x - alpha) / scale_prev + shift,
        (x - alpha) / scale_cur + shift,
    ))
}

/// Phi(a) - Phi(b) without cancellation: when both arguments sit in the
/// right tail the difference is taken between the complementary tails,
/// which keeps terms with u_n / sqrt(t) large strictly positive.
fn phi_diff(a: f64, b: f64) -> f64 {
    if a.min(b) > 0.0 {
        phi(-b) - phi(-a)
    } else {
        phi(a) - phi(b)
    }
}

/// Survival function of X_t - Y^n_t for a finite reflection budget.
pub fn survival_mb(n: u32, t: f64, x: f64, params: &BarrierParams) -> Result<Probability> {
    let mut sum = 0.0;
    for k in 0..=n {
        sum += p_term(k, t, x, params)?;
    }
    Probability::new_clamped(sum, 1e-10)
}

/// The survival series for the uncapped process, summed to a tail bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurvivalSeries {
    pub terms: Vec<f64>,
    pub partial_sums: Vec<f64>,
    /// Bound on the omitted remainder: sum of 2 Phi(-u_j / sqrt(t)) over the
    /// dropped indices.
    pub tail_bound: f64,
    pub n_used: u32,
    value: f64,
}

impl SurvivalSeries {
    pub fn value(&self) -> Probability {
        Probability::new(self.value).expect("validated at construction")
    }
}

/// Survival function of X_t - Y_t (infinite reflection budget):
/// sums p_k until the first-passage tail bound drops below `tol`.
pub fn survival_mb_inf(
    t: f64,
    x: f64,
    params: &BarrierParams,
    tol: f64,
) -> Result<SurvivalSeries> {
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::domain(format!("tol must be > 0, got {tol}")));
    }
    if params.rho >= 1.0 {
        return Err(Error::domain("survival series requires rho < 1"));
    }
    let st = t.sqrt();
    let mut terms = Vec::new();
    let mut partial_sums = Vec::new();
    let mut sum = 0.0;
    let mut n = 0u32;
    let tail_bound = loop {
        let p = p_term(n, t, x, params)?;
        sum += p;
        terms.push(p);
        partial_sums.push(sum);
        // remainder after n: each later term is carried by {tau_j <= t}
        let mut tail = 0.0;
        let mut j = n + 1;
        loop {
            let bound = 2.0 * phi(-params.u_seq(j)? / st);
            tail += bound;
            if bound < tol / 10.0 {
                break;
            }
            j += 1;
            if j > 1_000_000 {
                return Err(Error::consistency(
                    "survival series tail bound failed to converge within 1e6 terms",
                ));
            }
        }
        if tail < tol {
            break tail;
        }
        n += 1;
        if n > 1_000_000 {
            return Err(Error::consistency(
                "survival series failed to converge within 1e6 terms",
            ));
        }
    };
    for (k, &s) in partial_sums.iter().enumerate() {
        if !(-1e-10..=1.0 + 1e-10).contains(&s) {
            return Err(Error::consistency(format!(
                "partial sum {s} at term {k} escapes [0, 1]"
            )));
        }
    }
    Ok(SurvivalSeries {
        value: sum.clamp(0.0, 1.0),
        terms,
        partial_sums,
        tail_bound,
        n_used: n,
    })
}
