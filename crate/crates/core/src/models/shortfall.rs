use std::sync::Arc;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::frontier::{
    Aux, Axis, Coords, DecisionGrid, InfoState, InfoStateSpace, InfoTransition, Lattice, NextPremiums, Projection,
    RiskFrontierStep, Stage,
};
use crate::mdp::MdpModel;
use crate::models::{expect_premium, sorted_grid, tv_maximize, Acceptance, FrontierModel, ScalarFn};
use crate::premium::Premium;
use crate::real::Real;

fn nonnegative<R: Real>(zs: &[R]) -> Result<()> {
    if zs.iter().any(|z| *z < R::zero()) {
        return Err(invalid("disbursements", "target shortfalls must be nonnegative"));
    }
    Ok(())
}

#[derive(Clone, Debug)]
pub struct ExpectedUtilityConfig<R> {
    /// Convex nondecreasing dis-utility of the total shortfall.
    pub disutility: ScalarFn<R>,
    pub acceptance: Acceptance<R>,
    pub disbursements: Vec<R>,
    /// Cumulative-shortfall grid.
    pub shortfall: Axis<R>,
    pub projection: Projection,
}

/// Expected dis-utility of total target shortfall: `η' = η + z`, terminal `u(η)`,
/// `φ_t >= E[Φ̄_{t+1}]`.
#[derive(Clone, Debug)]
pub struct ExpectedUtility<R> {
    disutility: ScalarFn<R>,
    acceptance: Acceptance<R>,
    grid: DecisionGrid<R>,
}

impl<R: Real> RiskFrontierStep<R> for ExpectedUtility<R> {
    fn name(&self) -> &str {
        "expected_utility"
    }

    fn decision_grid(&self, _: usize, _: &InfoState<R>) -> &DecisionGrid<R> {
        &self.grid
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
        expect_premium(stage, |i| next.nominal(i))
    }

    fn terminal_premium(&self, y: &InfoState<R>) -> Premium<R> {
        Premium::new(self.disutility.eval(y.coords[0]))
    }

    fn first_feasible_disbursement(&self) -> bool {
        true
    }
}

impl<R: Real> InfoTransition<R> for ExpectedUtility<R> {
    fn advance(&self, _: usize, y: &InfoState<R>, _: &Stage<'_, R>, _: usize, z: R, _: Aux<R>, next: &mut Coords<R>) {
        next.clear();
        next.push(y.coords[0] + z);
    }
}

fn warn_overflow<R: Real>(axis: &Axis<R>, zs: &[R], periods: usize) {
    let reach = *zs.last().expect("nonempty grid") * R::lit(periods as f64);
    if reach > axis.last() {
        warn!("cumulative shortfall can reach {reach} but the grid ends at {}; values clamp", axis.last());
    }
}

pub fn build_expected_utility<R: Real>(
    model: &MdpModel<R>,
    cfg: ExpectedUtilityConfig<R>,
) -> Result<FrontierModel<R, ExpectedUtility<R>>> {
    cfg.disutility.validate()?;
    let zs = sorted_grid("disbursements", cfg.disbursements)?;
    nonnegative(&zs)?;
    warn_overflow(&cfg.shortfall, &zs, model.periods());
    let step = Arc::new(ExpectedUtility {
        disutility: cfg.disutility,
        acceptance: cfg.acceptance,
        grid: DecisionGrid::new(zs, vec![Aux::None])?,
    });
    let space = InfoStateSpace::uniform(
        model.num_states(),
        model.horizon(),
        vec![cfg.shortfall],
        vec![cfg.projection],
        InfoState::new(model.initial_state(), &[R::zero()]),
        step.clone(),
    )?;
    Ok(FrontierModel { step, space })
}

#[derive(Clone, Debug)]
pub struct WorstCaseConfig<R> {
    /// Total-variation budget `K`; must lie on the budget grid.
    pub budget: R,
    /// Remaining-budget grid; spend amounts are drawn from the same grid.
    pub budget_grid: Vec<R>,
    pub acceptance: Acceptance<R>,
    pub disbursements: Vec<R>,
}

/// Expected total shortfall under a total-variation adversary with a budget
/// shared across periods: `φ_t >= z + max_{δ <= η} sup_{TV(Q,P) <= δ} E_Q[Φ̄_{t+1}(s', η - δ)]`.
#[derive(Clone, Debug)]
pub struct WorstCase<R> {
    budgets: Vec<R>,
    acceptance: Acceptance<R>,
    grid: DecisionGrid<R>,
}

impl<R: Real> RiskFrontierStep<R> for WorstCase<R> {
    fn name(&self) -> &str {
        "worst_case"
    }

    fn decision_grid(&self, _: usize, _: &InfoState<R>) -> &DecisionGrid<R> {
        &self.grid
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
        let eta = y.coords[0];
        let tol = R::lit(1e-12) * (R::one() + eta.abs());
        let mut best = Premium::<R>::new(R::neg_infinity());
        let mut values = vec![Premium::new(R::zero()); stage.payoffs.len()];
        for &delta in self.budgets.iter().take_while(|d| **d <= eta + tol) {
            let rest = [(eta - delta).max(R::zero())];
            for &i in stage.dist.support() {
                values[i] = next.at(i, &rest);
            }
            let v = tv_maximize(stage.dist, &values, delta);
            if !v.is_feasible() {
                return v;
            }
            if v.raw() > best.raw() {
                best = v;
            }
        }
        best.plus(z)
    }

    fn terminal_premium(&self, _: &InfoState<R>) -> Premium<R> {
        Premium::new(R::zero())
    }

    fn first_feasible_disbursement(&self) -> bool {
        true
    }
}

impl<R: Real> InfoTransition<R> for WorstCase<R> {
    fn advance(&self, _: usize, y: &InfoState<R>, _: &Stage<'_, R>, _: usize, _: R, _: Aux<R>, next: &mut Coords<R>) {
        next.clear();
        next.push(y.coords[0]);
    }
}

pub fn build_worst_case<R: Real>(
    model: &MdpModel<R>,
    cfg: WorstCaseConfig<R>,
) -> Result<FrontierModel<R, WorstCase<R>>> {
    let mut budgets = sorted_grid("budget_grid", cfg.budget_grid)?;
    if budgets[0] > R::zero() {
        budgets.insert(0, R::zero());
    }
    if budgets[0] < R::zero() {
        return Err(invalid("budget_grid", "budgets must be nonnegative"));
    }
    if !budgets.iter().any(|b| (*b - cfg.budget).abs() <= R::lit(1e-12)) {
        return Err(invalid("budget", format!("K = {} is not on the budget grid", cfg.budget)));
    }
    let zs = sorted_grid("disbursements", cfg.disbursements)?;
    nonnegative(&zs)?;
    let axis = Axis::explicit(budgets.clone())?;
    let step =
        Arc::new(WorstCase { budgets, acceptance: cfg.acceptance, grid: DecisionGrid::new(zs, vec![Aux::None])? });
    let space = InfoStateSpace::uniform(
        model.num_states(),
        model.horizon(),
        vec![axis],
        vec![Projection::Nearest],
        InfoState::new(model.initial_state(), &[cfg.budget]),
        step.clone(),
    )?;
    Ok(FrontierModel { step, space })
}

/// Risk-level update applied to the adversary's density in the CVaR recursion.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LevelUpdate {
    /// `η' = η / m(ξ)`.
    #[default]
    Divide,
    /// `η' = η · m(ξ)`.
    Multiply,
}

/// How the CVaR of cumulative shortfall is decomposed over time.
#[derive(Clone, Debug, PartialEq)]
pub enum CvarDecomposition<R> {
    /// Threshold `u` chosen at `t = 0`, state `d = Σ z - u`, terminal `max(d, 0) / α`,
    /// `φ_0 >= u + E[Φ̄_1]`. Exact on finite grids when the thresholds cover every
    /// attainable total shortfall.
    Threshold { thresholds: Vec<R>, offsets: Axis<R> },
    /// Adversarial density `m ∈ [0, 1/η]`, `E[m] = 1`, with the risk level `η`
    /// carried as state: `φ_t >= z + sup_m E[m Φ̄_{t+1}(s', η')]`.
    RiskLevel { levels: Axis<R>, densities: Vec<R>, update: LevelUpdate, projection: Projection },
}

impl<R: Real> CvarDecomposition<R> {
    /// Threshold decomposition whose grids hold every total and partial shortfall
    /// reachable with `zs` over `periods` periods, so no projection error occurs.
    pub fn exact(zs: &[R], periods: usize) -> Result<Self> {
        let thresholds = threshold_grid(zs, periods);
        let diffs = thresholds.iter().flat_map(|a| thresholds.iter().map(move |b| *a - *b)).collect();
        Ok(CvarDecomposition::Threshold { offsets: Axis::explicit(diffs)?, thresholds })
    }
}

#[derive(Clone, Debug)]
pub struct CvarShortfallConfig<R> {
    /// Tail fraction: the premium is the mean of the worst `α` share of total shortfall.
    pub alpha: R,
    pub acceptance: Acceptance<R>,
    pub disbursements: Vec<R>,
    pub decomposition: CvarDecomposition<R>,
}

/// Every sum of at most `periods` elements of `zs` (with repetition), ascending.
pub fn threshold_grid<R: Real>(zs: &[R], periods: usize) -> Vec<R> {
    let mut level = vec![R::zero()];
    let mut all = level.clone();
    for _ in 0..periods {
        let mut next: Vec<R> = level.iter().flat_map(|s| zs.iter().map(move |z| *s + *z)).collect();
        next.sort_by(|a, b| a.partial_cmp(b).unwrap());
        next.dedup_by(|a, b| (*a - *b).abs() <= R::lit(1e-12) * (R::one() + b.abs()));
        all.extend(next.iter().copied());
        level = next;
    }
    all.sort_by(|a, b| a.partial_cmp(b).unwrap());
    all.dedup_by(|a, b| (*a - *b).abs() <= R::lit(1e-12) * (R::one() + b.abs()));
    all
}

#[derive(Clone, Debug)]
enum CvarMode<R> {
    Threshold,
    RiskLevel { densities: Vec<R>, update: LevelUpdate },
}

/// CVaR of cumulative target shortfall.
#[derive(Clone, Debug)]
pub struct CvarShortfall<R> {
    alpha: R,
    acceptance: Acceptance<R>,
    mode: CvarMode<R>,
    initial_grid: DecisionGrid<R>,
    grid: DecisionGrid<R>,
}

impl<R: Real> CvarShortfall<R> {
    pub fn alpha(&self) -> R {
        self.alpha
    }

    fn density_sup(
        &self,
        eta: R,
        stage: &Stage<'_, R>,
        densities: &[R],
        update: LevelUpdate,
        next: &dyn NextPremiums<R>,
    ) -> Premium<R> {
        let support = stage.dist.support();
        let cap = R::one() / eta + R::lit(1e-12);
        let allowed: Vec<R> = densities.iter().copied().filter(|m| *m <= cap).collect();
        if allowed.is_empty() {
            return Premium::infeasible();
        }
        // Continuation value of each (outcome, density) pair.
        let mut table = vec![Premium::new(R::zero()); support.len() * allowed.len()];
        for (k, &i) in support.iter().enumerate() {
            for (j, &m) in allowed.iter().enumerate() {
                table[k * allowed.len() + j] = if m == R::zero() {
                    Premium::new(R::zero())
                } else {
                    let level = match update {
                        LevelUpdate::Divide => eta / m,
                        LevelUpdate::Multiply => eta * m,
                    };
                    let v = next.at(i, &[level]);
                    if v.is_feasible() {
                        Premium::new(m * v.raw())
                    } else {
                        v
                    }
                };
            }
        }
        let mut best = Premium::infeasible();
        let mut found = false;
        let mut choice = vec![0usize; support.len()];
        loop {
            let mass: R = support.iter().zip(&choice).map(|(&i, &j)| stage.dist.prob(i) * allowed[j]).sum();
            if (mass - R::one()).abs() <= R::lit(1e-9) {
                let mut acc = R::zero();
                let mut feasible = true;
                for (k, (&i, &j)) in support.iter().zip(&choice).enumerate() {
                    let v = table[k * allowed.len() + j];
                    if !v.is_feasible() {
                        feasible = false;
                        break;
                    }
                    acc = acc + stage.dist.prob(i) * v.raw();
                }
                if !feasible {
                    return Premium::infeasible();
                }
                if !found || acc > best.raw() {
                    best = Premium::new(acc);
                    found = true;
                }
            }
            let mut k = 0;
            while k < choice.len() {
                choice[k] += 1;
                if choice[k] < allowed.len() {
                    break;
                }
                choice[k] = 0;
                k += 1;
            }
            if k == choice.len() {
                break;
            }
        }
        best
    }
}

impl<R: Real> RiskFrontierStep<R> for CvarShortfall<R> {
    fn name(&self) -> &str {
        "cvar_shortfall"
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
        match &self.mode {
            CvarMode::Threshold => {
                let v = expect_premium(stage, |i| next.nominal(i));
                match aux {
                    Aux::Level(u) if t == 0 => v.plus(u),
                    _ => v,
                }
            }
            CvarMode::RiskLevel { densities, update } => {
                self.density_sup(y.coords[0], stage, densities, *update, next).plus(z)
            }
        }
    }

    fn terminal_premium(&self, y: &InfoState<R>) -> Premium<R> {
        match self.mode {
            CvarMode::Threshold => Premium::new(y.coords[0].max(R::zero()) / self.alpha),
            CvarMode::RiskLevel { .. } => Premium::new(R::zero()),
        }
    }

    fn first_feasible_disbursement(&self) -> bool {
        true
    }
}

impl<R: Real> InfoTransition<R> for CvarShortfall<R> {
    fn advance(&self, t: usize, y: &InfoState<R>, _: &Stage<'_, R>, _: usize, z: R, aux: Aux<R>, next: &mut Coords<R>) {
        let c = y.coords[0];
        next.clear();
        match self.mode {
            CvarMode::Threshold => match aux {
                Aux::Level(u) if t == 0 => next.push(c + z - u),
                _ => next.push(c + z),
            },
            CvarMode::RiskLevel { .. } => next.push(c),
        }
    }
}

pub fn build_cvar_shortfall<R: Real>(
    model: &MdpModel<R>,
    cfg: CvarShortfallConfig<R>,
) -> Result<FrontierModel<R, CvarShortfall<R>>> {
    if !(cfg.alpha > R::zero() && cfg.alpha < R::one()) {
        return Err(invalid("alpha", format!("must lie in (0, 1), got {}", cfg.alpha)));
    }
    let zs = sorted_grid("disbursements", cfg.disbursements)?;
    nonnegative(&zs)?;
    let n = model.num_states();
    match cfg.decomposition {
        CvarDecomposition::Threshold { thresholds, offsets } => {
            let thresholds = sorted_grid("thresholds", thresholds)?;
            let step = Arc::new(CvarShortfall {
                alpha: cfg.alpha,
                acceptance: cfg.acceptance,
                mode: CvarMode::Threshold,
                initial_grid: DecisionGrid::new(zs.clone(), thresholds.into_iter().map(Aux::Level).collect())?,
                grid: DecisionGrid::new(zs, vec![Aux::None])?,
            });
            let mut lattices = vec![Lattice::new(n, vec![Axis::single(R::zero())])];
            lattices.extend((0..=model.horizon()).map(|_| Lattice::new(n, vec![offsets.clone()])));
            let space = InfoStateSpace::new(
                lattices,
                vec![Projection::Nearest],
                InfoState::new(model.initial_state(), &[R::zero()]),
                step.clone(),
            )?;
            Ok(FrontierModel { step, space })
        }
        CvarDecomposition::RiskLevel { levels, densities, update, projection } => {
            if !levels.values().iter().any(|l| (*l - cfg.alpha).abs() <= R::lit(1e-12)) {
                return Err(invalid("alpha", "must lie on the risk-level grid"));
            }
            let densities = sorted_grid("densities", densities)?;
            if densities[0] < R::zero() {
                return Err(invalid("densities", "densities must be nonnegative"));
            }
            let grid = DecisionGrid::new(zs, vec![Aux::None])?;
            let step = Arc::new(CvarShortfall {
                alpha: cfg.alpha,
                acceptance: cfg.acceptance,
                mode: CvarMode::RiskLevel { densities, update },
                initial_grid: grid.clone(),
                grid,
            });
            let space = InfoStateSpace::uniform(
                n,
                model.horizon(),
                vec![levels],
                vec![projection],
                InfoState::new(model.initial_state(), &[cfg.alpha]),
                step.clone(),
            )?;
            Ok(FrontierModel { step, space })
        }
    }
}

#[derive(Clone, Debug)]
pub struct QuantileConfig<R> {
    pub tau: R,
    /// Extra risk levels; `0`, `τ` and `1` are always present.
    pub levels: Vec<R>,
    pub acceptance: Acceptance<R>,
    pub disbursements: Vec<R>,
}

/// `τ`-quantile of cumulative shortfall with a binary exclusion indicator `m` as
/// auxiliary decision: outcomes in `m` carry less than `η` mass in total and drop
/// out of the worst case; the remaining branches continue at level `0`.
#[derive(Clone, Debug)]
pub struct Quantile<R> {
    acceptance: Acceptance<R>,
    grid: DecisionGrid<R>,
}

impl<R: Real> Quantile<R> {
    fn mask_allowed(&self, eta: R, stage: &Stage<'_, R>, mask: u32) -> bool {
        let dist = stage.dist;
        let mut excluded = R::zero();
        let mut kept = 0;
        for i in 0..dist.len() {
            let bit = mask & (1 << i) != 0;
            if bit && dist.prob(i) == R::zero() {
                return false;
            }
            if bit {
                excluded = excluded + dist.prob(i);
            } else if dist.prob(i) > R::zero() {
                kept += 1;
            }
        }
        kept > 0 && (mask == 0 || excluded < eta - R::lit(1e-12))
    }
}

impl<R: Real> RiskFrontierStep<R> for Quantile<R> {
    fn name(&self) -> &str {
        "quantile"
    }

    fn decision_grid(&self, _: usize, _: &InfoState<R>) -> &DecisionGrid<R> {
        &self.grid
    }

    fn admissible(&self, _: usize, y: &InfoState<R>, stage: &Stage<'_, R>, z: R, aux: Aux<R>) -> bool {
        let Aux::Mask(mask) = aux else { return false };
        self.mask_allowed(y.coords[0], stage, mask) && self.acceptance.accepts(stage, z)
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
        let Aux::Mask(mask) = aux else { unreachable!() };
        let mut best = R::neg_infinity();
        for &i in stage.dist.support() {
            if mask & (1 << i) != 0 {
                continue;
            }
            let v = next.nominal(i);
            if !v.is_feasible() {
                return v;
            }
            best = best.max(v.raw());
        }
        Premium::new(best + z)
    }

    fn terminal_premium(&self, _: &InfoState<R>) -> Premium<R> {
        Premium::new(R::zero())
    }

    fn first_feasible_disbursement(&self) -> bool {
        true
    }
}

impl<R: Real> InfoTransition<R> for Quantile<R> {
    fn advance(
        &self,
        _: usize,
        _: &InfoState<R>,
        _: &Stage<'_, R>,
        outcome: usize,
        _: R,
        aux: Aux<R>,
        next: &mut Coords<R>,
    ) {
        let excluded = matches!(aux, Aux::Mask(m) if m & (1 << outcome) != 0);
        next.clear();
        next.push(if excluded { R::one() } else { R::zero() });
    }
}

pub fn build_quantile<R: Real>(model: &MdpModel<R>, cfg: QuantileConfig<R>) -> Result<FrontierModel<R, Quantile<R>>> {
    if !(cfg.tau > R::zero() && cfg.tau < R::one()) {
        return Err(invalid("tau", format!("must lie in (0, 1), got {}", cfg.tau)));
    }
    let outcomes = model.num_outcomes();
    if outcomes > 16 {
        return Err(invalid("outcomes", "exclusion indicators support at most 16 outcomes"));
    }
    let zs = sorted_grid("disbursements", cfg.disbursements)?;
    nonnegative(&zs)?;
    let full = (1u32 << outcomes) - 1;
    let masks = (0..full).map(Aux::Mask).collect();
    let mut levels = cfg.levels;
    levels.extend([R::zero(), cfg.tau, R::one()]);
    let step = Arc::new(Quantile { acceptance: cfg.acceptance, grid: DecisionGrid::new(zs, masks)? });
    let space = InfoStateSpace::uniform(
        model.num_states(),
        model.horizon(),
        vec![Axis::explicit(levels)?],
        vec![Projection::Nearest],
        InfoState::new(model.initial_state(), &[cfg.tau]),
        step.clone(),
    )?;
    Ok(FrontierModel { step, space })
}
