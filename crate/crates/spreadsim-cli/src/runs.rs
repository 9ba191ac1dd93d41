//! The survival and price runs driven by an experiment configuration.

use crate::config::{ExperimentConfig, ModelConfig, XsConfig};
use crate::output;
use anyhow::Context;
use serde::Serialize;
use spreadsim::estimators::{empirical_survival, EmpiricalCurve};
use spreadsim::gauss::norm_cdf;
use spreadsim::local_corr::{simulate_local_terminal, LocalCorrFn};
use spreadsim::multibarrier::{
    simulate_mb_terminal_with, survival_mb, survival_mb_inf, BarrierParams, Reflections,
};
use spreadsim::path::{map_paths, GaussianStream};
use spreadsim::reflection::{
    simulate_single_barrier_terminal_with, survival_diff, SingleBarrierParams,
};
use spreadsim::Correlation;
use std::path::Path;

/// Result of a survival run: the analytic column exists only when the model
/// admits a closed form.
pub struct SurvivalResult {
    pub xs: Vec<f64>,
    pub analytic: Option<Vec<f64>>,
    pub curve: EmpiricalCurve,
}

fn default_xs() -> XsConfig {
    XsConfig::Range {
        start: -3.0,
        stop: 3.0,
        count: 121,
    }
}

pub fn run_survival(config: &ExperimentConfig) -> anyhow::Result<SurvivalResult> {
    let grid = config.grid.build()?;
    let xs = config.xs.clone().unwrap_or_else(default_xs).values()?;
    let level = config.level_prob();
    let t = grid.t_end();
    let n_paths = config.n_paths;
    let seed = config.seed;
    let monitoring = config.monitoring;

    let (analytic, samples): (Option<Vec<f64>>, Vec<f64>) = match &config.model {
        ModelConfig::SingleBarrier { h, rho } => {
            let params = SingleBarrierParams::new(*h, *rho, t).context("model.single_barrier")?;
            let analytic = xs
                .iter()
                .map(|&x| survival_diff(x, &params).map(|p| p.get()))
                .collect::<Result<Vec<_>, _>>()?;
            let samples = map_paths(n_paths, |i| {
                let (b1, b2) =
                    simulate_single_barrier_terminal_with(&params, &grid, seed, i, monitoring);
                b1 - b2
            });
            (Some(analytic), samples)
        }
        ModelConfig::MultiBarrier {
            nu,
            eta,
            rho,
            reflections,
        } => {
            let budget: Reflections = (*reflections).into();
            let params = BarrierParams::new(*nu, *eta, *rho, budget).context("model")?;
            let analytic = xs
                .iter()
                .map(|&x| match budget {
                    Reflections::Bounded(n) => survival_mb(n, t, x, &params).map(|p| p.get()),
                    Reflections::Infinite => {
                        survival_mb_inf(t, x, &params, 1e-10).map(|s| s.value().get())
                    }
                })
                .collect::<Result<Vec<_>, _>>()?;
            let results = map_paths(n_paths, |i| {
                simulate_mb_terminal_with(&params, &grid, seed, i, monitoring).map(|term| {
                    match budget {
                        Reflections::Bounded(n) => term.spread_at_cap(n, &params),
                        Reflections::Infinite => term.x - term.y,
                    }
                })
            });
            let samples = results.into_iter().collect::<Result<Vec<_>, _>>()?;
            (Some(analytic), samples)
        }
        ModelConfig::Constant { rho } => {
            let rho = Correlation::new_open(*rho).context("model.rho")?.get();
            let scale = (2.0 * (1.0 - rho) * t).sqrt();
            let analytic = xs
                .iter()
                .map(|&x| norm_cdf(-x / scale).map(|p| p.get()))
                .collect::<Result<Vec<_>, _>>()?;
            let comp = (1.0 - rho * rho).sqrt();
            let samples = map_paths(n_paths, |i| {
                let mut sx = GaussianStream::new(grid.dt(), seed, i, 0);
                let mut sy = GaussianStream::new(grid.dt(), seed, i, 1);
                let mut bx = 0.0;
                let mut by = 0.0;
                for _ in 0..grid.n_steps() {
                    bx += sx.next_increment();
                    by += sy.next_increment();
                }
                // spread of (X, rho X + comp Z)
                (1.0 - rho) * bx - comp * by
            });
            (Some(analytic), samples)
        }
        ModelConfig::Local {
            nu,
            eta,
            rho_min,
            rho_max,
        } => {
            let fun = LocalCorrFn::linear(
                Correlation::new_open(*rho_min).context("model.rho_min")?,
                Correlation::new_open(*rho_max).context("model.rho_max")?,
                *nu,
                *eta,
            )?;
            let samples = map_paths(n_paths, |i| {
                let (x, y) = simulate_local_terminal(&fun, &grid, seed, i);
                x - y
            });
            (None, samples)
        }
        ModelConfig::Commodity(_) => {
            return Err(anyhow::Error::new(spreadsim::Error::Config(
                "survival takes a Brownian-pair model; commodity spread curves come from the reproduce presets".into(),
            )))
        }
    };

    let curve = empirical_survival(&samples, &xs, level)?;
    Ok(SurvivalResult {
        xs,
        analytic,
        curve,
    })
}

pub fn write_survival(result: &SurvivalResult, out_dir: &Path) -> anyhow::Result<std::path::PathBuf> {
    let path = out_dir.join("survival.csv");
    let csv = output::survival_csv(&result.xs, result.analytic.as_deref(), &result.curve);
    output::write_text(&path, &csv)?;
    Ok(path)
}

#[derive(Debug, Serialize)]
pub struct PriceReport {
    pub mean: f64,
    pub stderr: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub level: f64,
    pub n_paths: usize,
    pub seed: u64,
    pub product: String,
}

pub fn run_price(config: &ExperimentConfig) -> anyhow::Result<PriceReport> {
    let ModelConfig::Commodity(commodity) = &config.model else {
        return Err(anyhow::Error::new(spreadsim::Error::Config(
            "price needs a commodity model configuration".into(),
        )));
    };
    let grid = config.grid.build()?;
    let setup = commodity.build_setup()?;
    let product = commodity.product.build()?;
    let t = commodity.t.unwrap_or(grid.t_end());
    let est = spreadsim::commodities::price_spread_option(
        &setup,
        &product,
        t,
        config.n_paths,
        &grid,
        config.seed,
        config.level_prob(),
    )?;
    Ok(PriceReport {
        mean: est.mean,
        stderr: est.stderr,
        ci_low: est.ci_low,
        ci_high: est.ci_high,
        level: est.level,
        n_paths: est.n_paths,
        seed: est.seed,
        product: product.label(),
    })
}
