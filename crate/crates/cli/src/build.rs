//! Builds the model and frontier step a materialized [`Config`] describes.

use std::sync::Arc;

use gcr_core::models::{
    build_consumption, build_consumption_excess, build_cvar_shortfall, build_entropic, build_expected_utility,
    build_growth, build_nested, build_quantile, build_risk_neutral, build_standard_cr, build_worst_case, Acceptance,
    AcceptanceSpec, ConsumptionConfig, ConsumptionExcessConfig, CvarDecomposition, CvarShortfallConfig,
    ExpectedUtilityConfig, FrontierModel, GrowthConfig, QuantileConfig, StandardCrConfig, TerminalWealth,
    WorstCaseConfig,
};
use gcr_core::newsvendor::{build_newsvendor, make_baselines, make_co_model, make_sc_model, make_wr_model, PolicyKind};
use gcr_core::{Axis, GcrError, InfoStateSpace64, MdpModel64, RiskFrontierStep};

use crate::config::{grid_values, Config, ConfigError, DecompositionKind, FrontierSection, Grid, ModelSection};

/// A model with its frontier step, ready to solve.
pub struct Built {
    pub label: String,
    /// Target value of the newsvendor formulations that depend on it.
    pub zeta: Option<f64>,
    pub model: MdpModel64,
    pub step: Arc<dyn RiskFrontierStep<f64>>,
    pub space: InfoStateSpace64,
}

/// Failure while building, tied to the config section it came from.
#[derive(Debug)]
pub enum BuildError {
    Grid { path: String, message: String },
    Core { section: &'static str, error: GcrError },
}

impl BuildError {
    pub fn locate(&self, text: &str) -> ConfigError {
        match self {
            BuildError::Grid { path, message } => ConfigError::at(text, path.clone(), message.clone()),
            BuildError::Core { section, error } => ConfigError::from_core(text, section, error),
        }
    }
}

impl std::fmt::Display for BuildError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BuildError::Grid { path, message } => write!(f, "{path}: {message}"),
            BuildError::Core { section, error } => write!(f, "{section}: {error}"),
        }
    }
}

fn grid((path, message): (String, String)) -> BuildError {
    BuildError::Grid { path, message }
}

fn frontier_err(error: GcrError) -> BuildError {
    BuildError::Core { section: "frontier", error }
}

fn values(g: &Option<Grid>, path: &str) -> Result<Vec<f64>, BuildError> {
    grid_values(g, path).map_err(grid)
}

fn axis(g: &Option<Grid>, path: &str) -> Result<Axis<f64>, BuildError> {
    Axis::explicit(values(g, path)?).map_err(|e| grid((path.to_string(), e.to_string())))
}

fn acceptance(specs: &[AcceptanceSpec<f64>]) -> Result<Acceptance<f64>, BuildError> {
    Acceptance::per_period(specs.to_vec()).map_err(frontier_err)
}

fn erase<S: RiskFrontierStep<f64> + 'static>(
    label: &str,
    zeta: Option<f64>,
    model: MdpModel64,
    fm: gcr_core::Result<FrontierModel<f64, S>>,
) -> Result<Built, BuildError> {
    let fm = fm.map_err(frontier_err)?;
    Ok(Built { label: label.to_string(), zeta, model, step: fm.step, space: fm.space })
}

/// `config` must be materialized.
pub fn build(config: &Config) -> Result<Built, BuildError> {
    let model = match &config.model {
        ModelSection::Newsvendor(p) => {
            build_newsvendor(p).map_err(|error| BuildError::Core { section: "model", error })?
        }
        ModelSection::Tables(t) => t.build().map_err(grid)?,
    };
    let g = &config.grids;
    let label = config.frontier.label();
    let disb = || values(&g.disbursements, "grids.disbursements");
    match &config.frontier {
        FrontierSection::RiskNeutral => erase(label, None, model.clone(), build_risk_neutral(&model)),
        FrontierSection::Entropic { gamma } => erase(label, None, model.clone(), build_entropic(&model, *gamma)),
        FrontierSection::Nested { risk } => erase(label, None, model.clone(), build_nested(&model, risk.clone())),
        FrontierSection::StandardCr { acceptance: acc, beta } => {
            let cfg = StandardCrConfig {
                acceptance: acceptance(acc)?,
                terminal: beta.map_or(TerminalWealth::Hard, |beta| TerminalWealth::Soft { beta }),
                wealth: axis(&g.wealth, "grids.wealth")?,
                wealth_projection: g.wealth_projection,
                disbursements: disb()?,
                endowments: None,
            };
            erase(label, None, model.clone(), build_standard_cr(&model, cfg))
        }
        FrontierSection::Consumption { utility, shortfall_cost } => {
            let cfg = ConsumptionConfig {
                utility: utility.clone(),
                shortfall_cost: shortfall_cost.clone(),
                wealth: axis(&g.wealth, "grids.wealth")?,
                wealth_projection: g.wealth_projection,
                disbursements: disb()?,
                initial_wealth: g.initial_wealth,
            };
            erase(label, None, model.clone(), build_consumption(&model, cfg))
        }
        FrontierSection::ConsumptionExcess { utility, targets, epsilon, saving_rate, borrowing_rate } => {
            let cfg = ConsumptionExcessConfig {
                utility: utility.clone(),
                targets: targets.clone(),
                epsilon: *epsilon,
                saving_rate: *saving_rate,
                borrowing_rate: *borrowing_rate,
                alphas: values(&g.alphas, "grids.alphas")?,
                disbursements: disb()?,
                wealth: axis(&g.wealth, "grids.wealth")?,
                wealth_projection: g.wealth_projection,
                initial_wealth: g.initial_wealth,
            };
            erase(label, None, model.clone(), build_consumption_excess(&model, cfg))
        }
        FrontierSection::ExpectedUtility { disutility, acceptance: acc } => {
            let cfg = ExpectedUtilityConfig {
                disutility: disutility.clone(),
                acceptance: acceptance(acc)?,
                disbursements: disb()?,
                shortfall: axis(&g.shortfall, "grids.shortfall")?,
                projection: g.shortfall_projection,
            };
            erase(label, None, model.clone(), build_expected_utility(&model, cfg))
        }
        FrontierSection::WorstCase { budget, acceptance: acc } => {
            let cfg = WorstCaseConfig {
                budget: *budget,
                budget_grid: values(&g.budget, "grids.budget")?,
                acceptance: acceptance(acc)?,
                disbursements: disb()?,
            };
            erase(label, None, model.clone(), build_worst_case(&model, cfg))
        }
        FrontierSection::CvarShortfall { alpha, acceptance: acc, decomposition, update } => {
            let zs = disb()?;
            let decomposition = match decomposition {
                DecompositionKind::Threshold => CvarDecomposition::exact(&zs, model.periods()).map_err(frontier_err)?,
                DecompositionKind::RiskLevel => CvarDecomposition::RiskLevel {
                    levels: axis(&g.levels, "grids.levels")?,
                    densities: values(&g.densities, "grids.densities")?,
                    update: *update,
                    projection: g.level_projection,
                },
            };
            let cfg =
                CvarShortfallConfig { alpha: *alpha, acceptance: acceptance(acc)?, disbursements: zs, decomposition };
            erase(label, None, model.clone(), build_cvar_shortfall(&model, cfg))
        }
        FrontierSection::Quantile { tau, acceptance: acc } => {
            let cfg = QuantileConfig {
                tau: *tau,
                levels: values(&g.levels, "grids.levels")?,
                acceptance: acceptance(acc)?,
                disbursements: disb()?,
            };
            erase(label, None, model.clone(), build_quantile(&model, cfg))
        }
        FrontierSection::Growth { acceptance: acc } => {
            let cfg = GrowthConfig {
                acceptance: acceptance(acc)?,
                disbursements: disb()?,
                wealth: axis(&g.wealth, "grids.wealth")?,
                max_shortfall: Some(axis(&g.shortfall, "grids.shortfall")?),
                projection: [g.wealth_projection, g.shortfall_projection],
                initial_wealth: g.initial_wealth,
            };
            erase(label, None, model.clone(), build_growth(&model, cfg))
        }
        FrontierSection::Newsvendor { policy } => {
            let ModelSection::Newsvendor(p) = &config.model else {
                return Err(frontier_err(GcrError::InvalidParameter {
                    name: "policy",
                    reason: "newsvendor formulations need a newsvendor model".into(),
                }));
            };
            let zeta = policy.uses_zeta().then_some(p.zeta);
            let model_err = |error| BuildError::Core { section: "model", error };
            match policy {
                PolicyKind::Sc => {
                    let inst = make_sc_model(p).map_err(model_err)?;
                    erase(label, zeta, inst.model, Ok(inst.frontier))
                }
                PolicyKind::Wr => {
                    let inst = make_wr_model(p).map_err(model_err)?;
                    erase(label, zeta, inst.model, Ok(inst.frontier))
                }
                PolicyKind::Co => {
                    let inst = make_co_model(p).map_err(model_err)?;
                    erase(label, zeta, inst.model, Ok(inst.frontier))
                }
                PolicyKind::Rn => {
                    let inst = make_baselines(p).map_err(model_err)?.0;
                    erase(label, zeta, inst.model, Ok(inst.frontier))
                }
                PolicyKind::N => {
                    let inst = make_baselines(p).map_err(model_err)?.1;
                    erase(label, zeta, inst.model, Ok(inst.frontier))
                }
            }
        }
    }
}
