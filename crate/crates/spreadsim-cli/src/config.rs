//! Experiment configuration: a single JSON document, with command-line
//! flags overriding individual fields.

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};
use spreadsim::commodities::{Dependence, ForwardCurve, MarketSetup, Product, TwoFactorParams};
use spreadsim::local_corr::LocalCorrFn;
use spreadsim::multibarrier::{BarrierParams, Reflections};
use spreadsim::path::{BarrierMonitoring, TimeGrid};
use spreadsim::reflection::SingleBarrierParams;
use spreadsim::{Correlation, Probability};

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    pub grid: GridConfig,
    pub n_paths: u64,
    pub seed: u64,
    #[serde(default)]
    pub xs: Option<XsConfig>,
    #[serde(default = "default_level")]
    pub level: f64,
    #[serde(default)]
    pub monitoring: BarrierMonitoring,
}

fn default_level() -> f64 {
    0.95
}

#[derive(Debug, Clone, Copy, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub t_end: f64,
    pub dt: f64,
}

impl GridConfig {
    pub fn build(&self) -> anyhow::Result<TimeGrid> {
        TimeGrid::new(self.t_end, self.dt).context("grid")
    }
}

/// Evaluation abscissae: either an explicit list or a uniform range.
#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(untagged)]
pub enum XsConfig {
    List(Vec<f64>),
    Range { start: f64, stop: f64, count: usize },
}

impl XsConfig {
    pub fn values(&self) -> anyhow::Result<Vec<f64>> {
        match self {
            XsConfig::List(v) => {
                if v.is_empty() {
                    bail!("xs: list must not be empty");
                }
                Ok(v.clone())
            }
            XsConfig::Range { start, stop, count } => {
                if *count < 2 || stop <= start {
                    bail!("xs: range needs count >= 2 and stop > start");
                }
                let step = (stop - start) / (*count as f64 - 1.0);
                Ok((0..*count).map(|i| start + i as f64 * step).collect())
            }
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelConfig {
    SingleBarrier {
        h: f64,
        rho: f64,
    },
    MultiBarrier {
        nu: f64,
        eta: f64,
        rho: f64,
        #[serde(default)]
        reflections: ReflectionsConfig,
    },
    Local {
        nu: f64,
        eta: f64,
        rho_min: f64,
        rho_max: f64,
    },
    Constant {
        rho: f64,
    },
    Commodity(Box<CommodityConfig>),
}

/// Reflection budget: a number or the string "infinite".
#[derive(Debug, Clone, Copy, Deserialize, Serialize)]
#[serde(untagged)]
pub enum ReflectionsConfig {
    Count(u32),
    Word(InfiniteWord),
}

#[derive(Debug, Clone, Copy, Deserialize, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum InfiniteWord {
    Infinite,
}

impl Default for ReflectionsConfig {
    fn default() -> Self {
        ReflectionsConfig::Word(InfiniteWord::Infinite)
    }
}

impl From<ReflectionsConfig> for Reflections {
    fn from(c: ReflectionsConfig) -> Reflections {
        match c {
            ReflectionsConfig::Count(n) => Reflections::Bounded(n),
            ReflectionsConfig::Word(_) => Reflections::Infinite,
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct CommodityConfig {
    pub elec: FactorConfig,
    pub coal: FactorConfig,
    pub f0_elec: f64,
    pub f0_coal: f64,
    pub heat_rate: f64,
    pub dependence: DependenceConfig,
    pub product: ProductConfig,
    /// Evaluation time in years; defaults to the grid horizon.
    #[serde(default)]
    pub t: Option<f64>,
}

#[derive(Debug, Clone, Copy, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct FactorConfig {
    pub sigma_s: f64,
    pub alpha_s: f64,
    pub sigma_l: f64,
}

impl FactorConfig {
    fn build(&self, which: &str) -> anyhow::Result<TwoFactorParams> {
        TwoFactorParams::new(self.sigma_s, self.alpha_s, self.sigma_l).context(which.to_string())
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DependenceConfig {
    MultiBarrier {
        nu: f64,
        eta: f64,
        rho: f64,
        #[serde(default)]
        reflections: ReflectionsConfig,
    },
    Local {
        nu: f64,
        eta: f64,
        rho_min: f64,
        rho_max: f64,
    },
    Constant {
        rho: f64,
        #[serde(default)]
        rho_short: f64,
    },
}

impl DependenceConfig {
    pub fn build(&self) -> anyhow::Result<Dependence> {
        Ok(match self {
            DependenceConfig::MultiBarrier {
                nu,
                eta,
                rho,
                reflections,
            } => Dependence::MultiBarrier(
                BarrierParams::new(*nu, *eta, *rho, (*reflections).into())
                    .context("dependence.multi_barrier")?,
            ),
            DependenceConfig::Local {
                nu,
                eta,
                rho_min,
                rho_max,
            } => Dependence::Local(
                LocalCorrFn::linear(
                    Correlation::new_open(*rho_min).context("dependence.rho_min")?,
                    Correlation::new_open(*rho_max).context("dependence.rho_max")?,
                    *nu,
                    *eta,
                )
                .context("dependence.local")?,
            ),
            DependenceConfig::Constant { rho, rho_short } => Dependence::Constant {
                rho: Correlation::new(*rho).context("dependence.rho")?,
                rho_short: Correlation::new(*rho_short).context("dependence.rho_short")?,
            },
        })
    }
}

#[derive(Debug, Clone, Copy, Deserialize, Serialize)]
#[serde(untagged)]
pub enum ProductConfig {
    Named(NamedProduct),
    MonthAhead { months: u32, resolution: u32 },
}

#[derive(Debug, Clone, Copy, Deserialize, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum NamedProduct {
    Spot,
}

impl ProductConfig {
    pub fn build(&self) -> anyhow::Result<Product> {
        Ok(match self {
            ProductConfig::Named(NamedProduct::Spot) => Product::Spot,
            ProductConfig::MonthAhead { months, resolution } => Product::month_ahead(*months)
                .and_then(|p| p.with_resolution(*resolution))
                .context("product")?,
        })
    }
}

impl CommodityConfig {
    pub fn build_setup(&self) -> anyhow::Result<MarketSetup> {
        let setup = MarketSetup {
            elec: self.elec.build("elec")?,
            coal: self.coal.build("coal")?,
            f0_elec: ForwardCurve::flat(self.f0_elec).context("f0_elec")?,
            f0_coal: ForwardCurve::flat(self.f0_coal).context("f0_coal")?,
            heat_rate: self.heat_rate,
            dependence: self.dependence.build()?,
        };
        setup.validate().context("commodity setup")?;
        Ok(setup)
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> anyhow::Result<Self> {
        let cfg: ExperimentConfig =
            serde_json::from_str(text).context("parsing experiment config")?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if self.n_paths == 0 {
            bail!("n_paths: must be >= 1");
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            bail!("level: must lie strictly inside (0, 1), got {}", self.level);
        }
        self.grid.build()?;
        match &self.model {
            ModelConfig::SingleBarrier { h, rho } => {
                SingleBarrierParams::new(*h, *rho, self.grid.t_end).context("model.single_barrier")?;
            }
            ModelConfig::MultiBarrier {
                nu,
                eta,
                rho,
                reflections,
            } => {
                BarrierParams::new(*nu, *eta, *rho, (*reflections).into())
                    .context("model.multi_barrier")?;
            }
            ModelConfig::Local {
                nu,
                eta,
                rho_min,
                rho_max,
            } => {
                LocalCorrFn::linear(
                    Correlation::new_open(*rho_min).context("model.rho_min")?,
                    Correlation::new_open(*rho_max).context("model.rho_max")?,
                    *nu,
                    *eta,
                )
                .context("model.local")?;
            }
            ModelConfig::Constant { rho } => {
                Correlation::new_open(*rho).context("model.rho")?;
            }
            ModelConfig::Commodity(c) => {
                c.build_setup()?;
                c.product.build()?;
                let t = c.t.unwrap_or(self.grid.t_end);
                if !(t > 0.0 && t <= self.grid.t_end) {
                    bail!("commodity.t: must lie in (0, t_end], got {t}");
                }
            }
        }
        Ok(())
    }

    pub fn level_prob(&self) -> Probability {
        Probability::new(self.level).expect("validated")
    }
}
