//! Run configuration: one TOML document with `[model]`, `[frontier]`, `[grids]`
//! and `[run]` sections. Unknown keys are rejected everywhere.

use std::fmt;

use gcr_core::mdp::Dims;
use gcr_core::models::{threshold_grid, AcceptanceSpec, LevelUpdate, OneStepRiskSpec, ScalarFn};
use gcr_core::newsvendor::{NewsvendorParams, PolicyKind};
use gcr_core::{make_distribution, GcrError, MdpModel, Projection};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub model: ModelSection,
    #[serde(default)]
    pub frontier: FrontierSection,
    #[serde(default)]
    pub grids: GridsSection,
    #[serde(default)]
    pub run: RunSection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelSection {
    Newsvendor(NewsvendorParams<f64>),
    Tables(TablesModel),
}

/// Time-homogeneous model given by explicit tables.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TablesModel {
    pub horizon: usize,
    #[serde(default)]
    pub initial_state: usize,
    /// `next_state[s][a][xi]`.
    pub next_state: Vec<Vec<Vec<usize>>>,
    /// `payoff[s][a][xi]`.
    pub payoff: Vec<Vec<Vec<f64>>>,
    /// Unnormalized outcome weights, reused every period.
    pub noise: Vec<f64>,
}

impl TablesModel {
    pub fn build(&self) -> Result<MdpModel<f64>, (String, String)> {
        let err = |key: &str, msg: String| (format!("model.{key}"), msg);
        let states = self.next_state.len();
        let actions = self.next_state.first().map_or(0, Vec::len);
        let outcomes = self.noise.len();
        if states == 0 || actions == 0 || outcomes == 0 {
            return Err(err("next_state", "need at least one state, action and outcome".into()));
        }
        if self.payoff.len() != states {
            return Err(err("payoff", format!("expected {states} state rows, got {}", self.payoff.len())));
        }
        for s in 0..states {
            if self.next_state[s].len() != actions || self.payoff[s].len() != actions {
                return Err(err("next_state", format!("state {s} must list {actions} actions in both tables")));
            }
            for a in 0..actions {
                if self.next_state[s][a].len() != outcomes || self.payoff[s][a].len() != outcomes {
                    return Err(err("next_state", format!("entry [{s}][{a}] must list {outcomes} outcomes")));
                }
            }
        }
        let noise = make_distribution(&self.noise).map_err(|e| err("noise", e.to_string()))?;
        let dims = Dims { states, actions, outcomes };
        MdpModel::stationary(dims, self.horizon, noise, self.initial_state, |s, a, xi| {
            (self.next_state[s][a][xi], self.payoff[s][a][xi])
        })
        .map_err(|e| err(first_key(&e).unwrap_or("next_state"), e.to_string()))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecompositionKind {
    #[default]
    Threshold,
    RiskLevel,
}

fn no_acceptance() -> Vec<AcceptanceSpec<f64>> {
    vec![AcceptanceSpec::None]
}

/// Frontier model and its parameters. Acceptance lists hold one spec per period
/// (the last one repeats).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FrontierSection {
    #[default]
    RiskNeutral,
    Entropic {
        gamma: f64,
    },
    Nested {
        risk: Vec<OneStepRiskSpec<f64>>,
    },
    StandardCr {
        #[serde(default = "no_acceptance")]
        acceptance: Vec<AcceptanceSpec<f64>>,
        /// Soft terminal penalty `-β min(w, 0)`; negative terminal wealth is infeasible without it.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        beta: Option<f64>,
    },
    Consumption {
        utility: Vec<f64>,
        shortfall_cost: Vec<f64>,
    },
    ConsumptionExcess {
        utility: ScalarFn<f64>,
        targets: Vec<Vec<f64>>,
        epsilon: f64,
        saving_rate: f64,
        borrowing_rate: f64,
    },
    ExpectedUtility {
        disutility: ScalarFn<f64>,
        #[serde(default = "no_acceptance")]
        acceptance: Vec<AcceptanceSpec<f64>>,
    },
    WorstCase {
        budget: f64,
        #[serde(default = "no_acceptance")]
        acceptance: Vec<AcceptanceSpec<f64>>,
    },
    CvarShortfall {
        alpha: f64,
        #[serde(default = "no_acceptance")]
        acceptance: Vec<AcceptanceSpec<f64>>,
        #[serde(default)]
        decomposition: DecompositionKind,
        #[serde(default)]
        update: LevelUpdate,
    },
    Quantile {
        tau: f64,
        #[serde(default = "no_acceptance")]
        acceptance: Vec<AcceptanceSpec<f64>>,
    },
    Growth {
        #[serde(default = "no_acceptance")]
        acceptance: Vec<AcceptanceSpec<f64>>,
    },
    /// One of the inventory formulations; needs a newsvendor model.
    Newsvendor {
        policy: PolicyKind,
    },
}

impl FrontierSection {
    pub fn label(&self) -> &'static str {
        match self {
            FrontierSection::RiskNeutral => "risk_neutral",
            FrontierSection::Entropic { .. } => "entropic",
            FrontierSection::Nested { .. } => "nested",
            FrontierSection::StandardCr { .. } => "standard_cr",
            FrontierSection::Consumption { .. } => "consumption",
            FrontierSection::ConsumptionExcess { .. } => "consumption_excess",
            FrontierSection::ExpectedUtility { .. } => "expected_utility",
            FrontierSection::WorstCase { .. } => "worst_case",
            FrontierSection::CvarShortfall { .. } => "cvar_shortfall",
            FrontierSection::Quantile { .. } => "quantile",
            FrontierSection::Growth { .. } => "growth",
            FrontierSection::Newsvendor { policy } => policy.label(),
        }
    }

    fn uses(&self, grid: GridKey) -> bool {
        use FrontierSection::*;
        use GridKey::*;
        match grid {
            Disbursements => !matches!(self, RiskNeutral | Entropic { .. } | Nested { .. } | Newsvendor { .. }),
            Wealth => matches!(self, StandardCr { .. } | Consumption { .. } | ConsumptionExcess { .. } | Growth { .. }),
            Shortfall => matches!(self, ExpectedUtility { .. } | Growth { .. }),
            Levels => {
                matches!(self, Quantile { .. } | CvarShortfall { decomposition: DecompositionKind::RiskLevel, .. })
            }
            Densities => matches!(self, CvarShortfall { decomposition: DecompositionKind::RiskLevel, .. }),
            Alphas => matches!(self, ConsumptionExcess { .. }),
            Budget => matches!(self, WorstCase { .. }),
        }
    }
}

#[derive(Clone, Copy)]
enum GridKey {
    Disbursements,
    Wealth,
    Shortfall,
    Levels,
    Densities,
    Alphas,
    Budget,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Range {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

/// A grid given as `{ lo, hi, step }` or as an explicit list.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    Range(Range),
    Values(Vec<f64>),
}

impl Grid {
    pub fn values(&self) -> Result<Vec<f64>, String> {
        match self {
            Grid::Values(v) => {
                if v.is_empty() || v.iter().any(|x| !x.is_finite()) {
                    return Err("grid must be a nonempty list of finite numbers".into());
                }
                Ok(v.clone())
            }
            Grid::Range(Range { lo, hi, step }) => {
                if !(lo.is_finite() && hi.is_finite() && *step > 0.0 && hi >= lo) {
                    return Err("range needs finite lo <= hi and step > 0".into());
                }
                let n = ((hi - lo) / step).round();
                if ((lo + n * step) - hi).abs() > 1e-9 * (1.0 + hi.abs()) {
                    return Err(format!("hi = {hi} is not lo + k * step"));
                }
                if n > 1e7 {
                    return Err(format!("range has {} points", n + 1.0));
                }
                let n = n as usize;
                Ok((0..=n).map(|k| if k == n { *hi } else { lo + k as f64 * step }).collect())
            }
        }
    }
}

fn nearest() -> Projection {
    Projection::Nearest
}

fn linear() -> Projection {
    Projection::Linear
}

/// Grids for the augmenting coordinates and decisions. Missing grids that the
/// chosen frontier needs are filled in by [`Config::materialized`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridsSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub disbursements: Option<Grid>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wealth: Option<Grid>,
    /// Accumulated-shortfall grid (expected utility) or running-maximum grid (growth).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shortfall: Option<Grid>,
    /// Risk levels for the CVaR risk-level decomposition and the quantile model.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<Grid>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub densities: Option<Grid>,
    /// Perspective weights for the consumption-excess model.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alphas: Option<Grid>,
    /// Adversary budget grid for the worst-case model.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<Grid>,
    #[serde(default = "nearest")]
    pub wealth_projection: Projection,
    #[serde(default = "nearest")]
    pub shortfall_projection: Projection,
    #[serde(default = "linear")]
    pub level_projection: Projection,
    #[serde(default)]
    pub initial_wealth: f64,
}

impl Default for GridsSection {
    fn default() -> Self {
        Self {
            disbursements: None,
            wealth: None,
            shortfall: None,
            levels: None,
            densities: None,
            alphas: None,
            budget: None,
            wealth_projection: Projection::Nearest,
            shortfall_projection: Projection::Nearest,
            level_projection: Projection::Linear,
            initial_wealth: 0.0,
        }
    }
}

fn default_n() -> usize {
    50
}

fn default_zetas() -> Vec<f64> {
    vec![10.0, 15.0, 20.0, 25.0]
}

fn default_output() -> String {
    "gcr-out".into()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_n")]
    pub n_trajectories: usize,
    /// Target values swept by `bench`.
    #[serde(default = "default_zetas")]
    pub zeta_list: Vec<f64>,
    #[serde(default = "default_output")]
    pub output_dir: String,
    #[serde(default)]
    pub plots: bool,
    /// Random instances per model in `verify`.
    #[serde(default = "default_n")]
    pub verify_instances: usize,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            seed: 0,
            n_trajectories: default_n(),
            zeta_list: default_zetas(),
            output_dir: default_output(),
            plots: false,
            verify_instances: default_n(),
        }
    }
}

/// A configuration problem, located by key path and (when known) 1-based line.
#[derive(Clone, Debug, PartialEq)]
pub struct ConfigError {
    pub path: String,
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error at `{}`", self.path)?;
        if let Some(line) = self.line {
            write!(f, " (line {line})")?;
        }
        write!(f, ": {}", self.message)
    }
}

impl std::error::Error for ConfigError {}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Line of `key = ...` inside the table named by the rest of `path`, falling back
/// to the table header.
pub fn locate(text: &str, path: &str) -> Option<usize> {
    let mut parts: Vec<&str> = path.split('.').filter(|p| !p.is_empty()).collect();
    let key = parts.pop()?;
    let section = parts.join(".");
    let mut current = String::new();
    let mut header = None;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if let Some(name) = line.strip_prefix('[') {
            current = name.trim_start_matches('[').trim_end_matches(']').trim().to_string();
            if current == section || (section.is_empty() && current == key) {
                header = Some(i + 1);
            }
            continue;
        }
        if current == section {
            if let Some((k, _)) = line.split_once('=') {
                if k.trim() == key {
                    return Some(i + 1);
                }
            }
        }
    }
    header
}

/// First line inside `[section]` (or its subtables) that assigns `key`, including
/// keys of inline tables.
fn find_key_in_section(text: &str, section: &str, key: &str) -> Option<usize> {
    let mut inside = section.is_empty() || section == ".";
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.starts_with('[') {
            let name = line.trim_matches(|c| c == '[' || c == ']').trim();
            inside = name == section || name.starts_with(&format!("{section}."));
            continue;
        }
        if !inside {
            continue;
        }
        let assigns = |s: &str| s.trim_start().strip_prefix(key).is_some_and(|r| r.trim_start().starts_with('='));
        if assigns(line) || line.split([',', '{']).skip(1).any(assigns) {
            return Some(i + 1);
        }
    }
    None
}

/// First identifier of an invalid-parameter name such as `"p, c, h"` or `"acceptance.b"`.
fn first_key(e: &GcrError) -> Option<&'static str> {
    match e {
        GcrError::InvalidParameter { name, .. } => {
            let head = name.split([',', ' ']).next().unwrap_or(name);
            Some(head.split('.').next().unwrap_or(head))
        }
        _ => None,
    }
}

impl ConfigError {
    pub fn at(text: &str, path: impl Into<String>, message: impl Into<String>) -> Self {
        let path = path.into();
        Self { line: locate(text, &path), path, message: message.into() }
    }

    /// Maps a builder error onto `section.<parameter>`.
    pub fn from_core(text: &str, section: &str, e: &GcrError) -> Self {
        let message = match e {
            GcrError::InvalidParameter { reason, .. } => reason.clone(),
            other => other.to_string(),
        };
        let path = match first_key(e) {
            Some(key) => format!("{section}.{key}"),
            None => section.to_string(),
        };
        Self::at(text, path, message)
    }
}

/// Parses and validates a document. Model parameters and frontier grids are
/// checked by building the model and its frontier.
pub fn parse_config(text: &str) -> Result<Config, ConfigError> {
    let de = toml::Deserializer::new(text);
    let config: Config = serde_path_to_error::deserialize(de).map_err(|e| {
        let mut path = e.path().to_string();
        let inner = e.into_inner();
        let message = inner.message().trim().to_string();
        let mut line = inner.span().map(|s| line_of(text, s.start)).or_else(|| locate(text, &path));
        if let Some(key) = message.strip_prefix("unknown field `").and_then(|m| m.split('`').next()) {
            if let Some(l) = find_key_in_section(text, &path, key) {
                path = format!("{path}.{key}");
                line = Some(l);
            }
        }
        ConfigError { path, line, message }
    })?;
    config.validate(text)?;
    Ok(config)
}

impl Config {
    pub fn validate(&self, text: &str) -> Result<(), ConfigError> {
        if self.run.seed > i64::MAX as u64 {
            return Err(ConfigError::at(text, "run.seed", "must fit in a signed 64-bit integer"));
        }
        if self.run.n_trajectories == 0 {
            return Err(ConfigError::at(text, "run.n_trajectories", "need at least one trajectory"));
        }
        if self.run.zeta_list.iter().any(|z| !(z.is_finite() && *z >= 0.0)) {
            return Err(ConfigError::at(text, "run.zeta_list", "targets must be finite and nonnegative"));
        }
        if let ModelSection::Newsvendor(p) = &self.model {
            p.validate().map_err(|e| ConfigError::from_core(text, "model", &e))?;
        }
        let materialized = self.materialized().map_err(|(path, msg)| ConfigError::at(text, path, msg))?;
        crate::build::build(&materialized).map_err(|e| e.locate(text))?;
        Ok(())
    }

    pub fn horizon(&self) -> usize {
        match &self.model {
            ModelSection::Newsvendor(p) => p.horizon,
            ModelSection::Tables(t) => t.horizon,
        }
    }

    /// Copy with every default that the chosen frontier depends on written out.
    pub fn materialized(&self) -> Result<Config, (String, String)> {
        let mut c = self.clone();
        let f = &c.frontier;
        let g = &mut c.grids;
        let periods = self.horizon() + 1;
        if f.uses(GridKey::Disbursements) && g.disbursements.is_none() {
            g.disbursements = Some(Grid::Range(Range { lo: 0.0, hi: 4.0, step: 1.0 }));
        }
        if f.uses(GridKey::Wealth) && g.wealth.is_none() {
            g.wealth = Some(Grid::Range(Range { lo: -20.0, hi: 20.0, step: 1.0 }));
        }
        if f.uses(GridKey::Shortfall) && g.shortfall.is_none() {
            let zs = grid_values(&g.disbursements, "grids.disbursements")?;
            g.shortfall = Some(Grid::Values(match f {
                FrontierSection::Growth { .. } => zs,
                _ => threshold_grid(&zs, periods),
            }));
        }
        if f.uses(GridKey::Levels) && g.levels.is_none() {
            g.levels = Some(Grid::Values((1..=20).map(|k| k as f64 / 20.0).collect()));
        }
        if f.uses(GridKey::Densities) && g.densities.is_none() {
            g.densities = Some(Grid::Values((0..=20).map(|k| k as f64 / 2.0).collect()));
        }
        if f.uses(GridKey::Alphas) && g.alphas.is_none() {
            g.alphas = Some(Grid::Values((1..=10).map(|k| k as f64 / 10.0).collect()));
        }
        if let (true, None, FrontierSection::WorstCase { budget, .. }) = (f.uses(GridKey::Budget), &g.budget, f) {
            g.budget = Some(Grid::Values((0..=4).map(|k| budget * k as f64 / 4.0).collect()));
        }
        Ok(c)
    }

    /// Canonical document: the materialized config as TOML.
    pub fn export(&self) -> Result<String, (String, String)> {
        let m = self.materialized()?;
        toml::to_string(&m).map_err(|e| (String::new(), e.to_string()))
    }
}

pub(crate) fn grid_values(grid: &Option<Grid>, path: &str) -> Result<Vec<f64>, (String, String)> {
    match grid {
        Some(g) => g.values().map_err(|m| (path.to_string(), m)),
        None => Err((path.to_string(), "grid is required".into())),
    }
}
