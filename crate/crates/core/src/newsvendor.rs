//! Dynamic newsvendor with lost sales and inventory cap, its capital-requirement
//! formulations (SC, WR, CO), the RN and N baselines, and the ζ-sweep harness.

use std::sync::Arc;
use std::time::{Duration, Instant};

use log::info;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, GcrError, Result};
use crate::frontier::{
    Aux, Axis, Coords, DecisionGrid, InfoState, InfoStateSpace, InfoTransition, NextPremiums, Projection,
    RiskFrontierStep, Stage,
};
use crate::mdp::{make_distribution, truncated_gaussian_pmf, Dims, FiniteDistribution, MdpModel, PmfMode};
use crate::models::{
    build_nested, build_risk_neutral, build_standard_cr, expect_premium, Acceptance, AcceptanceSpec, FrontierModel,
    Nested, OneStepRiskSpec, RiskNeutral, StandardCr, StandardCrConfig, TerminalWealth,
};
use crate::premium::Premium;
use crate::real::Real;
use crate::solver::{monte_carlo, solve, MonteCarloReport, Policy};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DemandSpec<R> {
    TruncatedGaussian {
        mean: R,
        variance: R,
        #[serde(default)]
        mode: PmfMode,
    },
    /// Unnormalized weights on `0..=xi_max`.
    Weights { weights: Vec<R> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NewsvendorParams<R> {
    pub s_max: usize,
    pub a_max: usize,
    pub xi_max: usize,
    pub horizon: usize,
    pub p: R,
    pub c: R,
    pub h: R,
    pub demand: DemandSpec<R>,
    pub w_min: i64,
    pub w_max: i64,
    pub z_max: u64,
    pub beta: R,
    pub zeta: R,
    pub alpha: R,
    #[serde(default)]
    pub initial_state: usize,
}

impl<R: Real> NewsvendorParams<R> {
    pub fn paper() -> Self {
        Self {
            s_max: 9,
            a_max: 9,
            xi_max: 9,
            horizon: 10,
            p: R::lit(3.0),
            c: R::lit(2.0),
            h: R::one(),
            demand: DemandSpec::TruncatedGaussian { mean: R::lit(4.0), variance: R::lit(1.2), mode: PmfMode::Density },
            w_min: -540,
            w_max: 539,
            z_max: 1079,
            beta: R::lit(4.0),
            zeta: R::lit(15.0),
            alpha: R::lit(0.4),
            initial_state: 0,
        }
    }

    pub fn with_zeta(&self, zeta: R) -> Self {
        Self { zeta, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p > self.c && self.c > self.h && self.h >= R::zero()) {
            return Err(invalid("p, c, h", "p > c > h >= 0 required"));
        }
        if self.a_max > self.s_max {
            return Err(invalid("a_max", format!("a_max = {} exceeds s_max = {}", self.a_max, self.s_max)));
        }
        if !(self.w_min < 0 && 0 < self.w_max) {
            return Err(invalid("w_min, w_max", "w_min < 0 < w_max required"));
        }
        if self.initial_state > self.s_max {
            return Err(invalid("initial_state", "must lie in 0..=s_max"));
        }
        if !(self.zeta >= R::zero()) || !self.zeta.is_finite() {
            return Err(invalid("zeta", "must be finite and nonnegative"));
        }
        if !(self.alpha > R::zero() && self.alpha <= R::one()) {
            return Err(invalid("alpha", "must lie in (0, 1]"));
        }
        if !(self.beta > R::one()) {
            return Err(invalid("beta", "must exceed 1"));
        }
        if let DemandSpec::Weights { weights } = &self.demand {
            if weights.len() != self.xi_max + 1 {
                return Err(invalid("demand.weights", format!("need {} weights", self.xi_max + 1)));
            }
        }
        Ok(())
    }

    pub fn demand(&self) -> Result<FiniteDistribution<R>> {
        match &self.demand {
            DemandSpec::TruncatedGaussian { mean, variance, mode } => {
                truncated_gaussian_pmf(*mean, *variance, self.xi_max, *mode)
            }
            DemandSpec::Weights { weights } => make_distribution(weights),
        }
    }

    /// `(next_state, payoff)` for stock `s`, order `a` and demand `xi`.
    pub fn dynamics(&self, s: usize, a: usize, xi: usize) -> (usize, R) {
        let stock = s + a;
        let next = stock.saturating_sub(xi).min(self.s_max);
        let sold = R::lit(stock.min(xi) as f64);
        let left = R::lit(stock.saturating_sub(xi) as f64);
        (next, self.p * sold - self.c * R::lit(a as f64) - self.h * left)
    }

    fn wealth_axis(&self) -> Result<Axis<R>> {
        Axis::integers(self.w_min, self.w_max)
    }

    fn disbursements(&self) -> Vec<R> {
        (0..=self.z_max).map(|z| R::lit(z as f64)).collect()
    }

    /// Rejects wealth grids that cannot hold every cumulative payoff reachable from zero.
    fn check_wealth_range(&self, model: &MdpModel<R>) -> Result<()> {
        let (lo, hi) = model.payoff_range();
        let periods = R::lit(model.periods() as f64);
        let (need_lo, need_hi) = ((lo * periods).min(R::zero()), (hi * periods).max(R::zero()));
        if need_lo < R::lit(self.w_min as f64) || need_hi > R::lit(self.w_max as f64) {
            return Err(invalid(
                "w_min, w_max",
                format!("cumulative payoffs span [{need_lo}, {need_hi}], grid is [{}, {}]", self.w_min, self.w_max),
            ));
        }
        Ok(())
    }
}

pub fn build_newsvendor<R: Real>(params: &NewsvendorParams<R>) -> Result<MdpModel<R>> {
    params.validate()?;
    let dims = Dims { states: params.s_max + 1, actions: params.a_max + 1, outcomes: params.xi_max + 1 };
    MdpModel::stationary(dims, params.horizon, params.demand()?, params.initial_state, |s, a, xi| {
        params.dynamics(s, a, xi)
    })
}

/// A newsvendor system together with one of its frontier formulations.
#[derive(Clone, Debug)]
pub struct NewsvendorInstance<R: Real, S> {
    pub model: MdpModel<R>,
    pub frontier: FrontierModel<R, S>,
}

/// Standard capital requirement with per-period income target `E[R_t + Z_t] >= ζ`
/// and soft terminal penalty `-β min(W_{T+1}, 0)`.
pub fn make_sc_model<R: Real>(params: &NewsvendorParams<R>) -> Result<NewsvendorInstance<R, StandardCr<R>>> {
    let model = build_newsvendor(params)?;
    let (lo, _) = model.payoff_range();
    let need = params.zeta - lo;
    if need > R::lit(params.z_max as f64) {
        return Err(invalid("z_max", format!("income target needs disbursements up to {need}")));
    }
    let frontier = build_standard_cr(
        &model,
        StandardCrConfig {
            acceptance: Acceptance::every_period(AcceptanceSpec::ExpectationFloor { b: params.zeta })?,
            terminal: TerminalWealth::Soft { beta: params.beta },
            wealth: params.wealth_axis()?,
            wealth_projection: Projection::Nearest,
            disbursements: params.disbursements(),
            endowments: None,
        },
    )?;
    Ok(NewsvendorInstance { model, frontier })
}

/// Wealth reserve: minimal expected total target shortfall subject to
/// `E[W_t + R_t + Z_t] >= ζ`, with `W_{t+1} = γ(W_t + R_t)`.
#[derive(Clone, Debug)]
pub struct WealthReserve<R> {
    zeta: R,
    grid: DecisionGrid<R>,
}

impl<R: Real> WealthReserve<R> {
    pub fn new(zeta: R, disbursements: Vec<R>) -> Result<Self> {
        Ok(Self { zeta, grid: DecisionGrid::new(disbursements, vec![Aux::None])? })
    }
}

impl<R: Real> RiskFrontierStep<R> for WealthReserve<R> {
    fn name(&self) -> &str {
        "wealth_reserve"
    }

    fn decision_grid(&self, _: usize, _: &InfoState<R>) -> &DecisionGrid<R> {
        &self.grid
    }

    fn admissible(&self, _: usize, y: &InfoState<R>, stage: &Stage<'_, R>, z: R, _: Aux<R>) -> bool {
        let lhs = y.coords[0] + stage.mean_payoff + z;
        lhs >= self.zeta - R::lit(1e-12) * (R::one() + self.zeta.abs())
    }

    fn min_premium(
        &self,
        t: usize,
        y: &InfoState<R>,
        stage: &Stage<'_, R>,
        z: R,
        aux: Aux<R>,
        next: &dyn NextPremiums<R>,
    ) -> Premium<R> {
        if !self.admissible(t, y, stage, z, aux) {
            return Premium::infeasible();
        }
        expect_premium(stage, |i| next.nominal(i)).plus(z)
    }

    fn terminal_premium(&self, _: &InfoState<R>) -> Premium<R> {
        Premium::new(R::zero())
    }

    fn first_feasible_disbursement(&self) -> bool {
        true
    }
}

impl<R: Real> InfoTransition<R> for WealthReserve<R> {
    fn advance(
        &self,
        _: usize,
        y: &InfoState<R>,
        stage: &Stage<'_, R>,
        outcome: usize,
        _: R,
        _: Aux<R>,
        next: &mut Coords<R>,
    ) {
        next.clear();
        next.push(y.coords[0] + stage.payoffs[outcome]);
    }
}

/// Cash orders: maximize `E[Σ R_t]` subject to `c A_t <= W_t + ζ`, written as the
/// minimization of `φ_t >= E[Φ̄_{t+1} - X_t]`.
#[derive(Clone, Debug)]
pub struct CashOrder<R> {
    unit_cost: R,
    zeta: R,
    grid: DecisionGrid<R>,
}

impl<R: Real> CashOrder<R> {
    pub fn new(unit_cost: R, zeta: R) -> Self {
        Self { unit_cost, zeta, grid: DecisionGrid::zero() }
    }
}

impl<R: Real> RiskFrontierStep<R> for CashOrder<R> {
    fn name(&self) -> &str {
        "cash_order"
    }

    fn decision_grid(&self, _: usize, _: &InfoState<R>) -> &DecisionGrid<R> {
        &self.grid
    }

    fn admissible(&self, _: usize, y: &InfoState<R>, stage: &Stage<'_, R>, _: R, _: Aux<R>) -> bool {
        let budget = y.coords[0] + self.zeta;
        self.unit_cost * R::lit(stage.action as f64) <= budget + R::lit(1e-12) * (R::one() + budget.abs())
    }

    fn min_premium(
        &self,
        t: usize,
        y: &InfoState<R>,
        stage: &Stage<'_, R>,
        z: R,
        aux: Aux<R>,
        next: &dyn NextPremiums<R>,
    ) -> Premium<R> {
        if !self.admissible(t, y, stage, z, aux) {
            return Premium::infeasible();
        }
        expect_premium(stage, |i| next.nominal(i).plus(-stage.payoffs[i]))
    }

    fn terminal_premium(&self, _: &InfoState<R>) -> Premium<R> {
        Premium::new(R::zero())
    }
}

impl<R: Real> InfoTransition<R> for CashOrder<R> {
    fn advance(
        &self,
        _: usize,
        y: &InfoState<R>,
        stage: &Stage<'_, R>,
        outcome: usize,
        _: R,
        _: Aux<R>,
        next: &mut Coords<R>,
    ) {
        next.clear();
        next.push(y.coords[0] + stage.payoffs[outcome]);
    }
}

fn wealth_space<R: Real, S: InfoTransition<R> + 'static>(
    params: &NewsvendorParams<R>,
    model: &MdpModel<R>,
    step: Arc<S>,
) -> Result<InfoStateSpace<R>> {
    params.check_wealth_range(model)?;
    InfoStateSpace::uniform(
        model.num_states(),
        model.horizon(),
        vec![params.wealth_axis()?],
        vec![Projection::Nearest],
        InfoState::new(model.initial_state(), &[R::zero()]),
        step,
    )
}

pub fn make_wr_model<R: Real>(params: &NewsvendorParams<R>) -> Result<NewsvendorInstance<R, WealthReserve<R>>> {
    let model = build_newsvendor(params)?;
    let step = Arc::new(WealthReserve::new(params.zeta, params.disbursements())?);
    let space = wealth_space(params, &model, step.clone())?;
    Ok(NewsvendorInstance { model, frontier: FrontierModel { step, space } })
}

pub fn make_co_model<R: Real>(params: &NewsvendorParams<R>) -> Result<NewsvendorInstance<R, CashOrder<R>>> {
    let model = build_newsvendor(params)?;
    let step = Arc::new(CashOrder::new(params.c, params.zeta));
    let space = wealth_space(params, &model, step.clone())?;
    Ok(NewsvendorInstance { model, frontier: FrontierModel { step, space } })
}

/// Risk-neutral and nested payoff-form CVaR(α) baselines on the inventory state alone.
#[allow(clippy::type_complexity)]
pub fn make_baselines<R: Real>(
    params: &NewsvendorParams<R>,
) -> Result<(NewsvendorInstance<R, RiskNeutral<R>>, NewsvendorInstance<R, Nested<R>>)> {
    let model = build_newsvendor(params)?;
    let rn = build_risk_neutral(&model)?;
    let nested = build_nested(&model, vec![OneStepRiskSpec::Cvar { alpha: params.alpha }])?;
    Ok((NewsvendorInstance { model: model.clone(), frontier: rn }, NewsvendorInstance { model, frontier: nested }))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PolicyKind {
    #[serde(rename = "SC")]
    Sc,
    #[serde(rename = "WR")]
    Wr,
    #[serde(rename = "CO")]
    Co,
    #[serde(rename = "RN")]
    Rn,
    #[serde(rename = "N")]
    N,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 5] = [PolicyKind::Sc, PolicyKind::Wr, PolicyKind::Co, PolicyKind::Rn, PolicyKind::N];

    pub fn label(self) -> &'static str {
        match self {
            PolicyKind::Sc => "SC",
            PolicyKind::Wr => "WR",
            PolicyKind::Co => "CO",
            PolicyKind::Rn => "RN",
            PolicyKind::N => "N",
        }
    }

    /// Whether the policy depends on `ζ`.
    pub fn uses_zeta(self) -> bool {
        matches!(self, PolicyKind::Sc | PolicyKind::Wr | PolicyKind::Co)
    }
}

#[derive(Clone, Debug)]
pub struct CellResult<R: Real> {
    pub optimum: Premium<R>,
    pub policy: Policy<R>,
    pub space: InfoStateSpace<R>,
    pub rollout: MonteCarloReport<R>,
    pub solve_time: Duration,
    pub simulate_time: Duration,
}

#[derive(Clone, Debug)]
pub struct BenchCell<R: Real> {
    pub policy: PolicyKind,
    /// `None` for the ζ-independent baselines.
    pub zeta: Option<R>,
    pub result: std::result::Result<CellResult<R>, GcrError>,
}

#[derive(Clone, Debug)]
pub struct BenchReport<R: Real> {
    pub params: NewsvendorParams<R>,
    pub zetas: Vec<R>,
    pub n_trajectories: usize,
    pub seed: u64,
    /// Ordered by policy, then `ζ`.
    pub cells: Vec<BenchCell<R>>,
}

impl<R: Real> BenchReport<R> {
    pub fn cell(&self, policy: PolicyKind, zeta: Option<R>) -> Option<&BenchCell<R>> {
        self.cells.iter().find(|c| c.policy == policy && c.zeta == zeta)
    }
}

fn run_cell<R: Real, S: RiskFrontierStep<R> + 'static>(
    inst: NewsvendorInstance<R, S>,
    n: usize,
    seed: u64,
) -> Result<CellResult<R>> {
    let started = Instant::now();
    let sol = solve(&inst.model, inst.frontier.step.as_ref(), &inst.frontier.space)?;
    let solve_time = started.elapsed();
    if !sol.optimum.is_feasible() {
        return Err(GcrError::Structure(format!("{} is infeasible at the initial state", inst.frontier.step.name())));
    }
    let started = Instant::now();
    let rollout = monte_carlo(&inst.model, &sol.policy, &inst.frontier.space, n, seed)?;
    Ok(CellResult {
        optimum: sol.optimum,
        policy: sol.policy,
        space: inst.frontier.space,
        rollout,
        solve_time,
        simulate_time: started.elapsed(),
    })
}

/// Solves one policy for one `ζ` (ignored by the baselines) and simulates it.
pub fn run_policy<R: Real>(
    params: &NewsvendorParams<R>,
    kind: PolicyKind,
    n: usize,
    seed: u64,
) -> Result<CellResult<R>> {
    match kind {
        PolicyKind::Sc => run_cell(make_sc_model(params)?, n, seed),
        PolicyKind::Wr => run_cell(make_wr_model(params)?, n, seed),
        PolicyKind::Co => run_cell(make_co_model(params)?, n, seed),
        PolicyKind::Rn => run_cell(make_baselines(params)?.0, n, seed),
        PolicyKind::N => run_cell(make_baselines(params)?.1, n, seed),
    }
}

/// Every policy is simulated on the same outcome streams (common random numbers).
/// Failed cells are recorded and the sweep continues.
pub fn run_benchmark<R: Real>(
    params: &NewsvendorParams<R>,
    zetas: &[R],
    n_trajectories: usize,
    seed: u64,
) -> Result<BenchReport<R>> {
    params.validate()?;
    if n_trajectories == 0 {
        return Err(invalid("n_trajectories", "need at least one trajectory"));
    }
    let mut jobs = Vec::new();
    for kind in PolicyKind::ALL {
        if kind.uses_zeta() {
            jobs.extend(zetas.iter().map(|z| (kind, Some(*z))));
        } else {
            jobs.push((kind, None));
        }
    }
    let cells = jobs
        .into_par_iter()
        .map(|(policy, zeta)| {
            let p = zeta.map_or_else(|| params.clone(), |z| params.with_zeta(z));
            let result = run_policy(&p, policy, n_trajectories, seed);
            match &result {
                Ok(r) => {
                    info!("{} zeta={:?}: optimum {} solved in {:?}", policy.label(), zeta, r.optimum, r.solve_time)
                }
                Err(e) => info!("{} zeta={:?}: {e}", policy.label(), zeta),
            }
            BenchCell { policy, zeta, result }
        })
        .collect();
    Ok(BenchReport { params: params.clone(), zetas: zetas.to_vec(), n_trajectories, seed, cells })
}
