//! Two-factor forward dynamics for a pair of commodities (electricity and a
//! fuel), coupled through the long-term drivers, with month-ahead delivery
//! products, spread survival curves and European spread-option pricing.
//!
//! Forward prices are lognormal with a mean-reverting short-term factor
//! (volatility sigma_s e^{-alpha_s (T - t)}) and a flat long-term factor.
//! The dependence structure applies to the two long-term drivers only; both
//! short-term drivers are independent of everything else.

use crate::error::{Error, Result};
use crate::estimators::{empirical_survival, mc_estimate, EmpiricalCurve, MCEstimate};
use crate::gauss::{Correlation, Probability};
use crate::local_corr::LocalCorrFn;
use crate::multibarrier::BarrierParams;
use crate::path::{map_paths, GaussianStream, PathSet, TimeGrid};
use serde::{Deserialize, Serialize};

/// One year is 365 days; months are approximated as 30-day blocks.
pub const DAY: f64 = 1.0 / 365.0;
pub const MONTH_DAYS: u32 = 30;

/// Driver layout inside every path: two short-term factors, then the two
/// drivers feeding the long-term dependence model.
pub mod driver {
    pub const ELEC_SHORT: usize = 0;
    pub const COAL_SHORT: usize = 1;
    pub const DEP_X: usize = 2;
    pub const DEP_Y: usize = 3;
    pub const COUNT: usize = 4;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Commodity {
    Electricity,
    Coal,
}

/// Marginal two-factor parameters, per square-root year.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoFactorParams {
    pub sigma_s: f64,
    pub alpha_s: f64,
    pub sigma_l: f64,
}

impl TwoFactorParams {
    pub fn new(sigma_s: f64, alpha_s: f64, sigma_l: f64) -> Result<Self> {
        if !(sigma_s.is_finite() && sigma_s >= 0.0) {
            return Err(Error::config(format!("sigma_s must be >= 0, got {sigma_s}")));
        }
        if !(sigma_l.is_finite() && sigma_l >= 0.0) {
            return Err(Error::config(format!("sigma_l must be >= 0, got {sigma_l}")));
        }
        if !(alpha_s.is_finite() && alpha_s > 0.0) {
            return Err(Error::config(format!("alpha_s must be > 0, got {alpha_s}")));
        }
        Ok(TwoFactorParams {
            sigma_s,
            alpha_s,
            sigma_l,
        })
    }

    /// French power forwards, 2014 estimation.
    pub fn electricity_2014() -> Self {
        TwoFactorParams {
            sigma_s: 0.972925,
            alpha_s: 17.0363,
            sigma_l: 0.102555,
        }
    }

    /// Coal forwards, 2014 estimation.
    pub fn coal_2014() -> Self {
        TwoFactorParams {
            sigma_s: 0.112134,
            alpha_s: 2.07832,
            sigma_l: 0.092602,
        }
    }

    /// Instantaneous lognormal volatility at time-to-maturity `ttm`.
    pub fn instantaneous_vol(&self, ttm: f64) -> f64 {
        ((self.sigma_s * (-self.alpha_s * ttm).exp()).powi(2) + self.sigma_l * self.sigma_l)
            .sqrt()
    }

    /// Variance of log f(t, T) accumulated over [0, t]:
    /// sigma_s^2 (e^{-2 alpha (T-t)} - e^{-2 alpha T}) / (2 alpha) + sigma_l^2 t.
    pub fn integrated_variance(&self, t: f64, maturity: f64) -> f64 {
        let a = self.alpha_s;
        self.sigma_s * self.sigma_s
            * ((-2.0 * a * (maturity - t)).exp() - (-2.0 * a * maturity).exp())
            / (2.0 * a)
            + self.sigma_l * self.sigma_l * t
    }
}

/// Initial forward curve T -> f(0, T).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "shape", content = "value")]
pub enum ForwardCurve {
    Flat(f64),
}

impl ForwardCurve {
    pub fn flat(level: f64) -> Result<Self> {
        if !(level.is_finite() && level > 0.0) {
            return Err(Error::config(format!(
                "forward curve must be strictly positive, got {level}"
            )));
        }
        Ok(ForwardCurve::Flat(level))
    }

    pub fn value(&self, _maturity: f64) -> f64 {
        match self {
            ForwardCurve::Flat(level) => *level,
        }
    }
}

/// Dependence structure applied to the pair of long-term drivers. The
/// barrier and local models leave the short-term drivers independent; the
/// constant benchmark can additionally correlate the short-term pair
/// (`rho_short`, default 0), which is how the usual constant-correlation
/// matrix treats the four drivers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Dependence {
    MultiBarrier(BarrierParams),
    Local(LocalCorrFn),
    Constant {
        rho: Correlation,
        #[serde(default)]
        rho_short: Correlation,
    },
}

impl Dependence {
    /// Constant correlation on the long-term pair only.
    pub fn constant(rho: Correlation) -> Self {
        Dependence::Constant {
            rho,
            rho_short: Correlation::default(),
        }
    }

    /// The benchmark constant-correlation matrix: the same correlation on
    /// both the long-term and the short-term pairs.
    pub fn constant_benchmark(rho: Correlation) -> Self {
        Dependence::Constant {
            rho,
            rho_short: rho,
        }
    }

    fn rho_short(&self) -> f64 {
        match self {
            Dependence::Constant { rho_short, .. } => rho_short.get(),
            _ => 0.0,
        }
    }
}

/// Full market specification for the commodity pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarketSetup {
    pub elec: TwoFactorParams,
    pub coal: TwoFactorParams,
    pub f0_elec: ForwardCurve,
    pub f0_coal: ForwardCurve,
    /// Heat rate H: conversion factor applied to the coal price in the
    /// spread f_E - H f_C.
    pub heat_rate: f64,
    pub dependence: Dependence,
}

impl MarketSetup {
    pub fn validate(&self) -> Result<()> {
        if !(self.heat_rate.is_finite() && self.heat_rate > 0.0) {
            return Err(Error::config(format!(
                "heat rate must be > 0, got {}",
                self.heat_rate
            )));
        }
        Ok(())
    }

    fn params(&self, commodity: Commodity) -> &TwoFactorParams {
        match commodity {
            Commodity::Electricity => &self.elec,
            Commodity::Coal => &self.coal,
        }
    }

    fn curve(&self, commodity: Commodity) -> &ForwardCurve {
        match commodity {
            Commodity::Electricity => &self.f0_elec,
            Commodity::Coal => &self.f0_coal,
        }
    }
}

/// A tradable product: the spot, or a one-month delivery window. Months are
/// 30-day blocks counted from the evaluation date, the block beginning at
/// the evaluation date being month 1, so the nMAH product quoted at t
/// delivers over [t + 30 (n-1) days, t + 30 n days). `resolution` maturities
/// discretize the delivery average; resolution 1 uses the single
/// mid-delivery maturity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Product {
    Spot,
    MonthAhead { months: u32, resolution: u32 },
}

impl Product {
    pub fn month_ahead(months: u32) -> Result<Self> {
        if months == 0 {
            return Err(Error::config("month-ahead products need months >= 1"));
        }
        Ok(Product::MonthAhead {
            months,
            resolution: MONTH_DAYS,
        })
    }

    pub fn with_resolution(self, resolution: u32) -> Result<Self> {
        match self {
            Product::Spot => Err(Error::config("spot has no delivery resolution")),
            Product::MonthAhead { months, .. } => {
                if resolution == 0 {
                    return Err(Error::config("delivery resolution must be >= 1"));
                }
                Ok(Product::MonthAhead { months, resolution })
            }
        }
    }

    pub fn label(&self) -> String {
        match self {
            Product::Spot => "spot".into(),
            Product::MonthAhead { months, .. } => format!("{months}mah"),
        }
    }

    /// Maturities averaged for the price quoted at evaluation time `t`.
    pub fn maturities(&self, t: f64) -> Vec<f64> {
        match *self {
            Product::Spot => vec![t],
            Product::MonthAhead { months, resolution } => {
                let start = t + (MONTH_DAYS * (months - 1)) as f64 * DAY;
                let window = MONTH_DAYS as f64 * DAY;
                if resolution == 1 {
                    vec![start + window / 2.0]
                } else {
                    (0..resolution)
                        .map(|j| start + j as f64 * window / resolution as f64)
                        .collect()
                }
            }
        }
    }
}

/// Per-step state producing the coal long-term increments from the raw
/// dependence drivers. Electricity's long-term driver is the X driver.
#[derive(Debug, Clone)]
enum Coupler {
    Constant {
        rho: f64,
        comp: f64,
    },
    MultiBarrier {
        params: BarrierParams,
        k: u32,
        allowed: bool,
        x: f64,
        y: f64,
    },
    Local {
        fun: LocalCorrFn,
        x: f64,
        y: f64,
    },
}

impl Coupler {
    fn new(dep: &Dependence) -> Self {
        match dep {
            Dependence::Constant { rho, .. } => Coupler::Constant {
                rho: rho.get(),
                comp: (1.0 - rho.get() * rho.get()).sqrt(),
            },
            Dependence::MultiBarrier(p) => Coupler::MultiBarrier {
                params: *p,
                k: 0,
                allowed: allows(p, 0),
                x: 0.0,
                y: 0.0,
            },
            Dependence::Local(f) => Coupler::Local {
                fun: *f,
                x: 0.0,
                y: 0.0,
            },
        }
    }

    /// Advances one step: consumes the raw (dx, dy) driver increments and
    /// returns the coal long-term increment.
    fn step(&mut self, dx: f64, dy: f64) -> f64 {
        match self {
            Coupler::Constant { rho, comp } => *rho * dx + *comp * dy,
            Coupler::MultiBarrier {
                params,
                k,
                allowed,
                x,
                y,
            } => {
                let rho = params.rho();
                let comp = (1.0 - rho * rho).max(0.0).sqrt();
                let sign = if *k % 2 == 0 { -1.0 } else { 1.0 };
                let d = rho * sign * dx + comp * dy;
                *x += dx;
                *y += d;
                if *allowed {
                    let spread = *x - *y;
                    let crossed = if *k % 2 == 0 {
                        spread >= params.eta()
                    } else {
                        spread <= params.nu()
                    };
                    if crossed {
                        *k += 1;
                        *allowed = allows(params, *k);
                    }
                }
                d
            }
            Coupler::Local { fun, x, y } => {
                let r = fun.rho_tilde(*x - *y);
                let d = r * dx + (1.0 - r * r).sqrt() * dy;
                *x += dx;
                *y += d;
                d
            }
        }
    }
}

fn allows(p: &BarrierParams, k: u32) -> bool {
    match p.max_reflections() {
        crate::multibarrier::Reflections::Bounded(n) => k < n,
        crate::multibarrier::Reflections::Infinite => true,
    }
}

/// Effective per-commodity increments after applying the dependence model.
#[derive(Debug, Clone)]
pub struct EffectiveDrivers {
    pub elec_short: Vec<f64>,
    pub elec_long: Vec<f64>,
    pub coal_short: Vec<f64>,
    pub coal_long: Vec<f64>,
}

/// Applies the dependence structure to a path set laid out as
/// [`driver::ELEC_SHORT`], [`driver::COAL_SHORT`], [`driver::DEP_X`],
/// [`driver::DEP_Y`].
pub fn effective_drivers(setup: &MarketSetup, paths: &PathSet) -> Result<EffectiveDrivers> {
    setup.validate()?;
    if paths.n_drivers() < driver::COUNT {
        return Err(Error::config(format!(
            "commodity paths need {} drivers, got {}",
            driver::COUNT,
            paths.n_drivers()
        )));
    }
    let dep_x = paths.increments_at(driver::DEP_X)?;
    let dep_y = paths.increments_at(driver::DEP_Y)?;
    let mut coupler = Coupler::new(&setup.dependence);
    let coal_long: Vec<f64> = dep_x
        .iter()
        .zip(dep_y)
        .map(|(&dx, &dy)| coupler.step(dx, dy))
        .collect();
    let elec_short = paths.increments_at(driver::ELEC_SHORT)?.to_vec();
    let rho_s = setup.dependence.rho_short();
    let comp_s = (1.0 - rho_s * rho_s).sqrt();
    let coal_short = paths
        .increments_at(driver::COAL_SHORT)?
        .iter()
        .zip(&elec_short)
        .map(|(&d_cs, &d_es)| rho_s * d_es + comp_s * d_cs)
        .collect();
    Ok(EffectiveDrivers {
        elec_short,
        elec_long: dep_x.to_vec(),
        coal_short,
        coal_long,
    })
}

/// Path of the forward price f(t_k, T) for a fixed maturity, stepping the
/// lognormal dynamics with the short-term coefficient frozen at the left
/// endpoint and the variance compensator integrated exactly per step.
/// The path is truncated at T when T lies inside the grid (spot usage).
pub fn forward_path(
    setup: &MarketSetup,
    commodity: Commodity,
    maturity: f64,
    grid: &TimeGrid,
    paths: &PathSet,
) -> Result<Vec<f64>> {
    if !(maturity.is_finite() && maturity >= 0.0) {
        return Err(Error::domain(format!("maturity must be >= 0, got {maturity}")));
    }
    let eff = effective_drivers(setup, paths)?;
    let (short, long) = match commodity {
        Commodity::Electricity => (&eff.elec_short, &eff.elec_long),
        Commodity::Coal => (&eff.coal_short, &eff.coal_long),
    };
    let p = setup.params(commodity);
    let f0 = setup.curve(commodity).value(maturity);
    let dt = grid.dt();
    let n_out = if maturity >= grid.t_end() {
        grid.n_steps()
    } else {
        let k = (maturity / dt).round();
        if (k * dt - maturity).abs() > 1e-9 * maturity.max(1.0) {
            return Err(Error::domain(format!(
                "maturity {maturity} inside the grid must sit on a grid point"
            )));
        }
        k as usize
    };
    let a = p.alpha_s;
    let mut out = Vec::with_capacity(n_out + 1);
    let mut log_f = 0.0_f64;
    out.push(f0);
    for k in 0..n_out {
        let t_k = grid.time(k);
        let t_k1 = grid.time(k + 1);
        let short_coeff = p.sigma_s * (-a * (maturity - t_k)).exp();
        let comp_short = 0.5
            * p.sigma_s
            * p.sigma_s
            * (((-2.0 * a * (maturity - t_k1)).exp() - (-2.0 * a * (maturity - t_k)).exp())
                / (2.0 * a));
        log_f += short_coeff * short[k] - comp_short + p.sigma_l * long[k]
            - 0.5 * p.sigma_l * p.sigma_l * dt;
        out.push(f0 * log_f.exp());
    }
    Ok(out)
}

/// Exponential accumulator for one commodity: carries
/// R = sum e^{-alpha (t - t_j)} dB_j and the cumulated long driver.
struct FactorState {
    decay: f64,
    r_short: f64,
    b_long: f64,
}

impl FactorState {
    fn new(alpha: f64, dt: f64) -> Self {
        FactorState {
            decay: (-alpha * dt).exp(),
            r_short: 0.0,
            b_long: 0.0,
        }
    }
    #[inline]
    fn step(&mut self, d_short: f64, d_long: f64) {
        self.r_short = (self.r_short + d_short) * self.decay;
        self.b_long += d_long;
    }
}

/// Closed-form log forward at the accumulator's anchor time `t` for a
/// maturity T >= t. The short-term stochastic integral for any such T is
/// e^{-alpha (T - t)} times the anchored accumulator.
fn log_forward(p: &TwoFactorParams, state: &FactorState, t: f64, maturity: f64) -> f64 {
    let a = p.alpha_s;
    let stoch_short = p.sigma_s * (-a * (maturity - t)).exp() * state.r_short;
    let comp_short = 0.5
        * p.sigma_s
        * p.sigma_s
        * (((-2.0 * a * (maturity - t)).exp() - (-2.0 * a * maturity).exp()) / (2.0 * a));
    stoch_short - comp_short + p.sigma_l * state.b_long - 0.5 * p.sigma_l * p.sigma_l * t
}

/// Electricity and coal prices of one product on one path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProductQuote {
    pub elec: f64,
    pub coal: f64,
}

fn eval_step(t: f64, grid: &TimeGrid) -> Result<usize> {
    if !(t.is_finite() && t > 0.0 && t <= grid.t_end() * (1.0 + 1e-12)) {
        return Err(Error::domain(format!(
            "evaluation time {t} outside the grid horizon {}",
            grid.t_end()
        )));
    }
    let k = (t / grid.dt()).round();
    if (k * grid.dt() - t).abs() > 1e-9 * t.max(1.0) {
        return Err(Error::domain(format!(
            "evaluation time {t} must sit on a grid point"
        )));
    }
    Ok(k as usize)
}

/// Simulates one path of the four drivers and prices every requested
/// product (both commodities) at evaluation time `t`. This is the hot loop
/// behind the Monte Carlo estimators; it consumes the same draws as
/// [`forward_path`] on the same `(seed, path_index)`.
pub fn simulate_product_quotes(
    setup: &MarketSetup,
    products: &[Product],
    t: f64,
    grid: &TimeGrid,
    seed: u64,
    path_index: u64,
) -> Result<Vec<ProductQuote>> {
    setup.validate()?;
    let k_t = eval_step(t, grid)?;
    let dt = grid.dt();
    let mut s_es = GaussianStream::new(dt, seed, path_index, driver::ELEC_SHORT as u64);
    let mut s_cs = GaussianStream::new(dt, seed, path_index, driver::COAL_SHORT as u64);
    let mut s_x = GaussianStream::new(dt, seed, path_index, driver::DEP_X as u64);
    let mut s_y = GaussianStream::new(dt, seed, path_index, driver::DEP_Y as u64);
    let mut coupler = Coupler::new(&setup.dependence);
    let mut elec = FactorState::new(setup.elec.alpha_s, dt);
    let mut coal = FactorState::new(setup.coal.alpha_s, dt);
    let rho_s = setup.dependence.rho_short();
    let comp_s = (1.0 - rho_s * rho_s).sqrt();
    for _ in 0..k_t {
        let d_es = s_es.next_increment();
        let d_cs = s_cs.next_increment();
        let dx = s_x.next_increment();
        let dy = s_y.next_increment();
        let d_coal_long = coupler.step(dx, dy);
        elec.step(d_es, dx);
        coal.step(rho_s * d_es + comp_s * d_cs, d_coal_long);
    }
    let mut out = Vec::with_capacity(products.len());
    for product in products {
        let maturities = product.maturities(t);
        let mut sum_e = 0.0;
        let mut sum_c = 0.0;
        for &m in &maturities {
            sum_e += setup.f0_elec.value(m) * log_forward(&setup.elec, &elec, t, m).exp();
            sum_c += setup.f0_coal.value(m) * log_forward(&setup.coal, &coal, t, m).exp();
        }
        let n = maturities.len() as f64;
        out.push(ProductQuote {
            elec: sum_e / n,
            coal: sum_c / n,
        });
    }
    Ok(out)
}

/// Price of one product at time `t` on the given driver paths: the
/// delivery-window average of forward prices (spot reduces to f(t, t)).
pub fn product_price(
    setup: &MarketSetup,
    commodity: Commodity,
    product: &Product,
    t: f64,
    grid: &TimeGrid,
    paths: &PathSet,
) -> Result<f64> {
    let k_t = eval_step(t, grid)?;
    let maturities = product.maturities(t);
    let mut sum = 0.0;
    for &m in &maturities {
        let path = forward_path(setup, commodity, m, grid, paths)?;
        sum += path[k_t];
    }
    Ok(sum / maturities.len() as f64)
}

/// Deterministic time-0 value of the product quoted at `t` (the martingale
/// anchor): the delivery average of the initial curve.
pub fn initial_product_price(setup: &MarketSetup, commodity: Commodity, product: &Product, t: f64) -> f64 {
    let maturities = product.maturities(t);
    let curve = setup.curve(commodity);
    maturities.iter().map(|&m| curve.value(m)).sum::<f64>() / maturities.len() as f64
}

/// Per-path spread samples f_E - H f_C for several products from one
/// simulation pass (the products share the drivers).
pub fn spread_samples(
    setup: &MarketSetup,
    products: &[Product],
    t: f64,
    n_paths: u64,
    grid: &TimeGrid,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    setup.validate()?;
    eval_step(t, grid)?;
    let h = setup.heat_rate;
    let per_path: Vec<Result<Vec<f64>>> = map_paths(n_paths, |i| {
        let quotes = simulate_product_quotes(setup, products, t, grid, seed, i)?;
        Ok(quotes.iter().map(|q| q.elec - h * q.coal).collect())
    });
    let mut out = vec![Vec::with_capacity(n_paths as usize); products.len()];
    for row in per_path {
        for (bucket, v) in out.iter_mut().zip(row?) {
            bucket.push(v);
        }
    }
    Ok(out)
}

/// Empirical survival curve of f_E(product, t) - H f_C(product, t).
#[allow(clippy::too_many_arguments)]
pub fn spread_survival(
    setup: &MarketSetup,
    product: &Product,
    t: f64,
    xs: &[f64],
    n_paths: u64,
    grid: &TimeGrid,
    seed: u64,
    level: Probability,
) -> Result<EmpiricalCurve> {
    let samples = spread_samples(setup, &[*product], t, n_paths, grid, seed)?;
    empirical_survival(&samples[0], xs, level)
}

/// Monte Carlo prices of the European spread options (X_t - H Y_t)^+ for a
/// batch of products sharing one set of simulated paths, undiscounted.
#[allow(clippy::too_many_arguments)]
pub fn price_spread_options(
    setup: &MarketSetup,
    products: &[Product],
    t: f64,
    n_paths: u64,
    grid: &TimeGrid,
    seed: u64,
    level: Probability,
) -> Result<Vec<MCEstimate>> {
    let samples = spread_samples(setup, products, t, n_paths, grid, seed)?;
    samples
        .iter()
        .map(|payoffs| {
            let clipped: Vec<f64> = payoffs.iter().map(|v| v.max(0.0)).collect();
            mc_estimate(&clipped, level, seed)
        })
        .collect()
}

/// Monte Carlo price of the European spread option (X_t - H Y_t)^+,
/// undiscounted.
pub fn price_spread_option(
    setup: &MarketSetup,
    product: &Product,
    t: f64,
    n_paths: u64,
    grid: &TimeGrid,
    seed: u64,
    level: Probability,
) -> Result<MCEstimate> {
    Ok(price_spread_options(setup, &[*product], t, n_paths, grid, seed, level)?
        .pop()
        .expect("one product in, one estimate out"))
}

/// Barrier-shift heuristic: eta' = eta + log(H f_C(0,.) / f_E(0,.)) / sigma,
/// the extra distance the long-term spread must cover when the initial
/// curves differ.
pub fn suggest_barrier_shift(setup: &MarketSetup, eta_base: f64, sigma_ref: f64) -> Result<f64> {
    setup.validate()?;
    if !(sigma_ref.is_finite() && sigma_ref > 0.0) {
        return Err(Error::domain(format!("sigma_ref must be > 0, got {sigma_ref}")));
    }
    if !eta_base.is_finite() {
        return Err(Error::domain("eta_base must be finite"));
    }
    let ratio = setup.heat_rate * setup.f0_coal.value(0.0) / setup.f0_elec.value(0.0);
    Ok(eta_base + ratio.ln() / sigma_ref)
}
