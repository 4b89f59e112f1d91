use std::sync::Arc;

use crate::error::{invalid, Result};
use crate::frontier::{
    Aux, Axis, Coords, DecisionGrid, InfoState, InfoStateSpace, InfoTransition, Lattice, NextPremiums, Projection,
    RiskFrontierStep, Stage,
};
use crate::mdp::MdpModel;
use crate::models::{expect_premium, max_premium, sorted_grid, Acceptance, FrontierModel, ScalarFn};
use crate::premium::Premium;
use crate::real::Real;

fn per_period<R: Copy>(v: &[R], t: usize) -> R {
    v[t.min(v.len() - 1)]
}

fn nonnegative<R: Real>(name: &'static str, zs: &[R]) -> Result<()> {
    if zs.iter().any(|z| *z < R::zero()) {
        return Err(invalid(name, "disbursements must be nonnegative"));
    }
    Ok(())
}

/// Terminal treatment of negative wealth in the standard capital requirement.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TerminalWealth<R> {
    /// `δ{w >= 0}`: negative terminal wealth is infeasible.
    Hard,
    /// `-β min(w, 0)`.
    Soft { beta: R },
}

#[derive(Clone, Debug)]
pub struct StandardCrConfig<R> {
    pub acceptance: Acceptance<R>,
    pub terminal: TerminalWealth<R>,
    pub wealth: Axis<R>,
    pub wealth_projection: Projection,
    pub disbursements: Vec<R>,
    /// Endowment candidates at `t = 0`; defaults to the wealth grid.
    pub endowments: Option<Vec<R>>,
}

/// Standard capital requirement: wealth `w' = w - z`, an endowment `w_0` chosen at
/// `t = 0` with `φ_0 >= w_0 + E[Φ̄_1]`, and `φ_t >= E[Φ̄_{t+1}]` afterwards.
#[derive(Clone, Debug)]
pub struct StandardCr<R> {
    acceptance: Acceptance<R>,
    terminal: TerminalWealth<R>,
    initial_grid: DecisionGrid<R>,
    grid: DecisionGrid<R>,
}

impl<R: Real> RiskFrontierStep<R> for StandardCr<R> {
    fn name(&self) -> &str {
        "standard_cr"
    }

    fn decision_grid(&self, t: usize, _: &InfoState<R>) -> &DecisionGrid<R> {
        if t == 0 {
            &self.initial_grid
        } else {
            &self.grid
        }
    }

    fn admissible(&self, _: usize, _: &InfoState<R>, stage: &Stage<'_, R>, z: R, _: Aux<R>) -> bool {
        self.acceptance.accepts(stage, z)
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
        let v = expect_premium(stage, |i| next.nominal(i));
        match aux {
            Aux::Level(w0) if t == 0 => v.plus(w0),
            _ => v,
        }
    }

    fn terminal_premium(&self, y: &InfoState<R>) -> Premium<R> {
        let w = y.coords[0];
        match self.terminal {
            TerminalWealth::Hard if w < -R::lit(1e-12) => Premium::infeasible(),
            TerminalWealth::Hard => Premium::new(R::zero()),
            TerminalWealth::Soft { beta } => Premium::new(-beta * w.min(R::zero())),
        }
    }

    fn first_feasible_disbursement(&self) -> bool {
        true
    }
}

impl<R: Real> InfoTransition<R> for StandardCr<R> {
    fn advance(&self, t: usize, y: &InfoState<R>, _: &Stage<'_, R>, _: usize, z: R, aux: Aux<R>, next: &mut Coords<R>) {
        let endowment = match aux {
            Aux::Level(w0) if t == 0 => w0,
            _ => R::zero(),
        };
        next.clear();
        next.push(y.coords[0] + endowment - z);
    }
}

pub fn build_standard_cr<R: Real>(
    model: &MdpModel<R>,
    cfg: StandardCrConfig<R>,
) -> Result<FrontierModel<R, StandardCr<R>>> {
    if let TerminalWealth::Soft { beta } = cfg.terminal {
        if !(beta > R::one()) {
            return Err(invalid("beta", format!("soft penalty needs beta > 1, got {beta}")));
        }
    }
    let zs = sorted_grid("disbursements", cfg.disbursements)?;
    let endowments = match cfg.endowments {
        Some(e) => sorted_grid("endowments", e)?,
        None => cfg.wealth.values(),
    };
    let step = Arc::new(StandardCr {
        acceptance: cfg.acceptance,
        terminal: cfg.terminal,
        initial_grid: DecisionGrid::new(zs.clone(), endowments.into_iter().map(Aux::Level).collect())?,
        grid: DecisionGrid::new(zs, vec![Aux::None])?,
    });
    let n = model.num_states();
    let mut lattices = vec![Lattice::new(n, vec![Axis::single(R::zero())])];
    lattices.extend((0..=model.horizon()).map(|_| Lattice::new(n, vec![cfg.wealth.clone()])));
    let space = InfoStateSpace::new(
        lattices,
        vec![cfg.wealth_projection],
        InfoState::new(model.initial_state(), &[R::zero()]),
        step.clone(),
    )?;
    Ok(FrontierModel { step, space })
}

#[derive(Clone, Debug)]
pub struct ConsumptionConfig<R> {
    /// Marginal consumption utility `α_t` (one entry, or one per period).
    pub utility: Vec<R>,
    /// Unit shortfall cost `c_t` (one entry, or one per period).
    pub shortfall_cost: Vec<R>,
    pub wealth: Axis<R>,
    pub wealth_projection: Projection,
    pub disbursements: Vec<R>,
    pub initial_wealth: R,
}

/// Consumption with savings: `ψ_t = c_t max(z - w - X_t, 0) - α_t z`,
/// `w' = max(w + X_t - z, 0)`, `φ_t >= E[ψ_t + Φ̄_{t+1}]`.
#[derive(Clone, Debug)]
pub struct Consumption<R> {
    utility: Vec<R>,
    cost: Vec<R>,
    grid: DecisionGrid<R>,
}

impl<R: Real> Consumption<R> {
    /// Stage cost `ψ_t` for one outcome.
    pub fn psi(&self, t: usize, w: R, x: R, z: R) -> R {
        per_period(&self.cost, t) * (z - w - x).max(R::zero()) - per_period(&self.utility, t) * z
    }
}

impl<R: Real> RiskFrontierStep<R> for Consumption<R> {
    fn name(&self) -> &str {
        "consumption"
    }

    fn decision_grid(&self, _: usize, _: &InfoState<R>) -> &DecisionGrid<R> {
        &self.grid
    }

    fn min_premium(
        &self,
        t: usize,
        y: &InfoState<R>,
        stage: &Stage<'_, R>,
        z: R,
        _: Aux<R>,
        next: &dyn NextPremiums<R>,
    ) -> Premium<R> {
        let w = y.coords[0];
        expect_premium(stage, |i| next.nominal(i).plus(self.psi(t, w, stage.payoffs[i], z)))
    }

    fn terminal_premium(&self, _: &InfoState<R>) -> Premium<R> {
        Premium::new(R::zero())
    }
}

impl<R: Real> InfoTransition<R> for Consumption<R> {
    fn advance(
        &self,
        _: usize,
        y: &InfoState<R>,
        stage: &Stage<'_, R>,
        outcome: usize,
        z: R,
        _: Aux<R>,
        next: &mut Coords<R>,
    ) {
        next.clear();
        next.push((y.coords[0] + stage.payoffs[outcome] - z).max(R::zero()));
    }
}

pub fn build_consumption<R: Real>(
    model: &MdpModel<R>,
    cfg: ConsumptionConfig<R>,
) -> Result<FrontierModel<R, Consumption<R>>> {
    if cfg.utility.is_empty() || cfg.shortfall_cost.is_empty() {
        return Err(invalid("consumption", "utility and shortfall cost need at least one entry"));
    }
    for t in 0..=model.horizon() {
        let (a, c) = (per_period(&cfg.utility, t), per_period(&cfg.shortfall_cost, t));
        if !(a > R::zero()) || !(c > a) {
            return Err(invalid("shortfall_cost", format!("need c_t > α_t > 0, got c = {c}, α = {a} at t = {t}")));
        }
    }
    let zs = sorted_grid("disbursements", cfg.disbursements)?;
    nonnegative("disbursements", &zs)?;
    let step = Arc::new(Consumption {
        utility: cfg.utility,
        cost: cfg.shortfall_cost,
        grid: DecisionGrid::new(zs, vec![Aux::None])?,
    });
    let space = InfoStateSpace::uniform(
        model.num_states(),
        model.horizon(),
        vec![cfg.wealth],
        vec![cfg.wealth_projection],
        InfoState::new(model.initial_state(), &[cfg.initial_wealth]),
        step.clone(),
    )?;
    Ok(FrontierModel { step, space })
}

#[derive(Clone, Debug)]
pub struct ConsumptionExcessConfig<R> {
    /// Concave increasing utility `u`.
    pub utility: ScalarFn<R>,
    /// Consumption targets `ζ_t(s)`: one row per period (or a single row), one entry per state.
    pub targets: Vec<Vec<R>>,
    pub epsilon: R,
    pub saving_rate: R,
    pub borrowing_rate: R,
    /// Perspective weights `α_t`; every entry must be at least `epsilon`.
    pub alphas: Vec<R>,
    pub disbursements: Vec<R>,
    pub wealth: Axis<R>,
    pub wealth_projection: Projection,
    pub initial_wealth: R,
}

/// Consumption excess: `α_t E[u((X_t + z - ζ_t(s)) / α_t)] >= 0`, `φ_t >= α_t + max_ξ Φ̄_{t+1}`,
/// wealth `w' = min((1 + β^S) w - z, (1 + β^B) w - z)`, terminal `δ{w >= 0}`.
#[derive(Clone, Debug)]
pub struct ConsumptionExcess<R> {
    utility: ScalarFn<R>,
    targets: Vec<Vec<R>>,
    saving_rate: R,
    borrowing_rate: R,
    grid: DecisionGrid<R>,
}

impl<R: Real> ConsumptionExcess<R> {
    /// `ψ_t(α, X, z; s)`.
    pub fn psi(&self, stage: &Stage<'_, R>, alpha: R, z: R) -> R {
        let targets = &self.targets[stage.t.min(self.targets.len() - 1)];
        let zeta = targets[stage.state];
        alpha * stage.dist.expect_with(|i| self.utility.eval((stage.payoffs[i] + z - zeta) / alpha))
    }
}

impl<R: Real> RiskFrontierStep<R> for ConsumptionExcess<R> {
    fn name(&self) -> &str {
        "consumption_excess"
    }

    fn decision_grid(&self, _: usize, _: &InfoState<R>) -> &DecisionGrid<R> {
        &self.grid
    }

    fn admissible(&self, _: usize, _: &InfoState<R>, stage: &Stage<'_, R>, z: R, aux: Aux<R>) -> bool {
        let alpha = aux.level().expect("perspective weight");
        self.psi(stage, alpha, z) >= -R::lit(1e-12)
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
        let alpha = aux.level().expect("perspective weight");
        max_premium(stage, |i| next.nominal(i)).plus(alpha)
    }

    fn terminal_premium(&self, y: &InfoState<R>) -> Premium<R> {
        if y.coords[0] < -R::lit(1e-12) {
            Premium::infeasible()
        } else {
            Premium::new(R::zero())
        }
    }

    fn first_feasible_disbursement(&self) -> bool {
        true
    }
}

impl<R: Real> InfoTransition<R> for ConsumptionExcess<R> {
    fn advance(&self, _: usize, y: &InfoState<R>, _: &Stage<'_, R>, _: usize, z: R, _: Aux<R>, next: &mut Coords<R>) {
        let w = y.coords[0];
        let save = (R::one() + self.saving_rate) * w - z;
        let borrow = (R::one() + self.borrowing_rate) * w - z;
        next.clear();
        next.push(save.min(borrow));
    }
}

pub fn build_consumption_excess<R: Real>(
    model: &MdpModel<R>,
    cfg: ConsumptionExcessConfig<R>,
) -> Result<FrontierModel<R, ConsumptionExcess<R>>> {
    cfg.utility.validate()?;
    if !(cfg.epsilon > R::zero()) {
        return Err(invalid("epsilon", "must be positive"));
    }
    if cfg.alphas.is_empty() {
        return Err(invalid("alphas", "perspective grid is empty"));
    }
    if cfg.alphas.iter().any(|a| *a < cfg.epsilon) {
        return Err(invalid("alphas", "every perspective weight must be at least epsilon"));
    }
    if cfg.saving_rate > cfg.borrowing_rate || cfg.saving_rate <= -R::one() {
        return Err(invalid("saving_rate", "need -1 < saving rate <= borrowing rate"));
    }
    if cfg.targets.is_empty() || cfg.targets.iter().any(|row| row.len() != model.num_states()) {
        return Err(invalid("targets", "need one target per state in every row"));
    }
    let zs = sorted_grid("disbursements", cfg.disbursements)?;
    nonnegative("disbursements", &zs)?;
    let alphas = sorted_grid("alphas", cfg.alphas)?;
    let step = Arc::new(ConsumptionExcess {
        utility: cfg.utility,
        targets: cfg.targets,
        saving_rate: cfg.saving_rate,
        borrowing_rate: cfg.borrowing_rate,
        grid: DecisionGrid::new(zs, alphas.into_iter().map(Aux::Level).collect())?,
    });
    let space = InfoStateSpace::uniform(
        model.num_states(),
        model.horizon(),
        vec![cfg.wealth],
        vec![cfg.wealth_projection],
        InfoState::new(model.initial_state(), &[cfg.initial_wealth]),
        step.clone(),
    )?;
    Ok(FrontierModel { step, space })
}

#[derive(Clone, Debug)]
pub struct GrowthConfig<R> {
    /// Applied to `w + X_t + z`.
    pub acceptance: Acceptance<R>,
    pub disbursements: Vec<R>,
    pub wealth: Axis<R>,
    /// Running-maximum grid; defaults to the disbursement grid.
    pub max_shortfall: Option<Axis<R>>,
    pub projection: [Projection; 2],
    pub initial_wealth: R,
}

/// Worst-case maximal target shortfall: `w' = w + X_t`, `η' = max(η, z)`,
/// `φ_t >= max_ξ Φ̄_{t+1}`, terminal premium `η`.
#[derive(Clone, Debug)]
pub struct Growth<R> {
    acceptance: Acceptance<R>,
    grid: DecisionGrid<R>,
}

impl<R: Real> RiskFrontierStep<R> for Growth<R> {
    fn name(&self) -> &str {
        "growth"
    }

    fn decision_grid(&self, _: usize, _: &InfoState<R>) -> &DecisionGrid<R> {
        &self.grid
    }

    fn admissible(&self, _: usize, y: &InfoState<R>, stage: &Stage<'_, R>, z: R, _: Aux<R>) -> bool {
        self.acceptance.accepts(stage, y.coords[0] + z)
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
        max_premium(stage, |i| next.nominal(i))
    }

    fn terminal_premium(&self, y: &InfoState<R>) -> Premium<R> {
        Premium::new(y.coords[1])
    }

    fn first_feasible_disbursement(&self) -> bool {
        true
    }
}

impl<R: Real> InfoTransition<R> for Growth<R> {
    fn advance(
        &self,
        _: usize,
        y: &InfoState<R>,
        stage: &Stage<'_, R>,
        outcome: usize,
        z: R,
        _: Aux<R>,
        next: &mut Coords<R>,
    ) {
        next.clear();
        next.push(y.coords[0] + stage.payoffs[outcome]);
        next.push(y.coords[1].max(z));
    }
}

pub fn build_growth<R: Real>(model: &MdpModel<R>, cfg: GrowthConfig<R>) -> Result<FrontierModel<R, Growth<R>>> {
    let zs = sorted_grid("disbursements", cfg.disbursements)?;
    nonnegative("disbursements", &zs)?;
    let eta = match cfg.max_shortfall {
        Some(a) => a,
        None => {
            let mut v = zs.clone();
            v.insert(0, R::zero());
            Axis::explicit(v)?
        }
    };
    let step = Arc::new(Growth { acceptance: cfg.acceptance, grid: DecisionGrid::new(zs, vec![Aux::None])? });
    let space = InfoStateSpace::uniform(
        model.num_states(),
        model.horizon(),
        vec![cfg.wealth, eta],
        cfg.projection.to_vec(),
        InfoState::new(model.initial_state(), &[cfg.initial_wealth, R::zero()]),
        step.clone(),
    )?;
    Ok(FrontierModel { step, space })
}
