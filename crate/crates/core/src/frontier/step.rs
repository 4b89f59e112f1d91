use crate::error::{invalid, GcrError, Result};
use crate::frontier::{Coords, InfoState, InfoStateSpace};
use crate::mdp::{FiniteDistribution, MdpModel};
use crate::premium::Premium;
use crate::real::Real;

/// Model-specific auxiliary decision attached to a disbursement.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub enum Aux<R> {
    #[default]
    None,
    /// A scalar choice: endowment, perspective weight, CVaR threshold.
    Level(R),
    /// Bit set over outcomes (quantile exclusion indicator).
    Mask(u32),
}

impl<R: Real> Aux<R> {
    pub fn level(self) -> Option<R> {
        match self {
            Aux::Level(v) => Some(v),
            _ => None,
        }
    }

    /// Numeric form used in tables and CSV output.
    pub fn as_f64(self) -> Option<f64> {
        match self {
            Aux::None => None,
            Aux::Level(v) => Some(v.as_f64()),
            Aux::Mask(m) => Some(m as f64),
        }
    }
}

/// Candidate disbursements (ascending) and auxiliary decisions for one stage.
#[derive(Clone, Debug, PartialEq)]
pub struct DecisionGrid<R> {
    disbursements: Vec<R>,
    auxiliaries: Vec<Aux<R>>,
}

impl<R: Real> DecisionGrid<R> {
    pub fn new(mut disbursements: Vec<R>, auxiliaries: Vec<Aux<R>>) -> Result<Self> {
        if disbursements.is_empty() || auxiliaries.is_empty() {
            return Err(invalid("decision grid", "disbursement and auxiliary lists must be nonempty"));
        }
        if disbursements.iter().any(|z| !z.is_finite()) {
            return Err(invalid("decision grid", "disbursements must be finite"));
        }
        disbursements.sort_by(|a, b| a.partial_cmp(b).unwrap());
        disbursements.dedup();
        Ok(Self { disbursements, auxiliaries })
    }

    /// Only `z = 0`, no auxiliary decision.
    pub fn zero() -> Self {
        Self { disbursements: vec![R::zero()], auxiliaries: vec![Aux::None] }
    }

    pub fn disbursements(&self) -> &[R] {
        &self.disbursements
    }

    pub fn auxiliaries(&self) -> &[Aux<R>] {
        &self.auxiliaries
    }
}

/// `(action, disbursement, auxiliary)` chosen at one information state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Decision<R> {
    pub action: usize,
    pub z: R,
    pub aux: Aux<R>,
}

/// Everything a frontier step may read about the current `(t, s, a)`.
#[derive(Clone, Copy, Debug)]
pub struct Stage<'a, R> {
    pub t: usize,
    pub state: usize,
    pub action: usize,
    /// `r_t(s, a, ·)` by outcome.
    pub payoffs: &'a [R],
    /// `f_t(s, a, ·)` by outcome.
    pub next_states: &'a [usize],
    pub dist: &'a FiniteDistribution<R>,
    pub mean_payoff: R,
}

impl<'a, R: Real> Stage<'a, R> {
    pub fn new(model: &'a MdpModel<R>, t: usize, state: usize, action: usize) -> Self {
        let payoffs = model.payoffs(t, state, action);
        let dist = model.noise(t);
        Self {
            t,
            state,
            action,
            payoffs,
            next_states: model.next_states(t, state, action),
            dist,
            mean_payoff: dist.expect(payoffs),
        }
    }

    /// A stage not tied to a model, e.g. for evaluating a step on raw payoffs.
    pub fn detached(
        t: usize,
        state: usize,
        payoffs: &'a [R],
        next_states: &'a [usize],
        dist: &'a FiniteDistribution<R>,
    ) -> Self {
        Self { t, state, action: 0, payoffs, next_states, dist, mean_payoff: dist.expect(payoffs) }
    }
}

/// Next-period premiums `Φ̄_{t+1}` as seen from one stage candidate.
pub trait NextPremiums<R: Real> {
    /// Premium at `g_t(y, z, ξ)` for the candidate being evaluated.
    fn nominal(&self, outcome: usize) -> Premium<R>;
    /// Premium at next state `f_t(s, a, ξ)` with explicitly chosen coordinates.
    /// Used by steps whose adversary moves the augmenting coordinates.
    fn at(&self, outcome: usize, coords: &[R]) -> Premium<R>;
}

/// Next premiums given directly per outcome; coordinates are ignored.
pub struct PerOutcome<'a, R>(pub &'a [Premium<R>]);

impl<R: Real> NextPremiums<R> for PerOutcome<'_, R> {
    fn nominal(&self, outcome: usize) -> Premium<R> {
        self.0[outcome]
    }

    fn at(&self, outcome: usize, _: &[R]) -> Premium<R> {
        self.0[outcome]
    }
}

/// Next premiums given by a function of `(outcome, coords)`.
pub struct FnPremiums<'a, R> {
    pub nominal_coords: &'a dyn Fn(usize) -> Coords<R>,
    pub value: &'a dyn Fn(usize, &[R]) -> Premium<R>,
}

impl<R: Real> NextPremiums<R> for FnPremiums<'_, R> {
    fn nominal(&self, outcome: usize) -> Premium<R> {
        (self.value)(outcome, &(self.nominal_coords)(outcome))
    }

    fn at(&self, outcome: usize, coords: &[R]) -> Premium<R> {
        (self.value)(outcome, coords)
    }
}

/// Reads the solver's period-`t+1` table through the space's projection.
pub struct TableContinuation<'a, R: Real> {
    pub space: &'a InfoStateSpace<R>,
    pub t: usize,
    pub y: &'a InfoState<R>,
    pub stage: &'a Stage<'a, R>,
    pub z: R,
    pub aux: Aux<R>,
    pub values: &'a [Premium<R>],
}

impl<R: Real> TableContinuation<'_, R> {
    pub fn nominal_coords(&self, outcome: usize) -> Coords<R> {
        let mut c = Coords::new();
        self.space.transition_fn().advance(self.t, self.y, self.stage, outcome, self.z, self.aux, &mut c);
        c
    }
}

impl<R: Real> NextPremiums<R> for TableContinuation<'_, R> {
    #[inline]
    fn nominal(&self, outcome: usize) -> Premium<R> {
        let c = self.nominal_coords(outcome);
        self.at(outcome, &c)
    }

    #[inline]
    fn at(&self, outcome: usize, coords: &[R]) -> Premium<R> {
        self.space.read(self.t + 1, self.values, self.stage.next_states[outcome], coords)
    }
}

/// The compressed one-step risk frontier `Ū_t(y, Φ̄_{t+1})`.
///
/// `min_premium` must be nonincreasing in the stage payoffs and nondecreasing in
/// the next premiums, pointwise.
pub trait RiskFrontierStep<R: Real>: Send + Sync {
    fn name(&self) -> &str;

    fn decision_grid(&self, t: usize, y: &InfoState<R>) -> &DecisionGrid<R>;

    /// Constraints that do not involve the continuation (acceptance, action limits).
    fn admissible(&self, _t: usize, _y: &InfoState<R>, _stage: &Stage<'_, R>, _z: R, _aux: Aux<R>) -> bool {
        true
    }

    /// Least `φ_t` with `([X_t|y], z, φ_t) ∈ Ū_t(y, Φ̄_{t+1})`, or `INFEASIBLE`.
    fn min_premium(
        &self,
        t: usize,
        y: &InfoState<R>,
        stage: &Stage<'_, R>,
        z: R,
        aux: Aux<R>,
        next: &dyn NextPremiums<R>,
    ) -> Premium<R>;

    fn terminal_premium(&self, y: &InfoState<R>) -> Premium<R>;

    /// True when, for fixed `(t, y, a, aux)`, the admissible disbursements form an
    /// upper set of the grid and no larger admissible `z` ever yields a strictly
    /// smaller premium. The solver then stops at the first admissible `z`.
    fn first_feasible_disbursement(&self) -> bool {
        false
    }
}

impl<R: Real, S: RiskFrontierStep<R> + ?Sized> RiskFrontierStep<R> for std::sync::Arc<S> {
    fn name(&self) -> &str {
        (**self).name()
    }
    fn decision_grid(&self, t: usize, y: &InfoState<R>) -> &DecisionGrid<R> {
        (**self).decision_grid(t, y)
    }
    fn admissible(&self, t: usize, y: &InfoState<R>, stage: &Stage<'_, R>, z: R, aux: Aux<R>) -> bool {
        (**self).admissible(t, y, stage, z, aux)
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
        (**self).min_premium(t, y, stage, z, aux, next)
    }
    fn terminal_premium(&self, y: &InfoState<R>) -> Premium<R> {
        (**self).terminal_premium(y)
    }
    fn first_feasible_disbursement(&self) -> bool {
        (**self).first_feasible_disbursement()
    }
}

/// Validated entry point to a step's stage problem on raw per-outcome inputs.
#[allow(clippy::too_many_arguments)]
pub fn min_stage_premium<R: Real, S: RiskFrontierStep<R> + ?Sized>(
    step: &S,
    t: usize,
    y: &InfoState<R>,
    dist: &FiniteDistribution<R>,
    payoffs: &[R],
    z: R,
    aux: Aux<R>,
    next_premiums: &[Premium<R>],
) -> Result<Premium<R>> {
    if payoffs.len() != dist.len() {
        return Err(GcrError::LengthMismatch { expected: dist.len(), got: payoffs.len() });
    }
    if next_premiums.len() != dist.len() {
        return Err(GcrError::LengthMismatch { expected: dist.len(), got: next_premiums.len() });
    }
    if payoffs.iter().any(|x| x.is_nan()) || z.is_nan() || next_premiums.iter().any(|p| p.raw().is_nan()) {
        return Err(GcrError::NotANumber("stage premium inputs"));
    }
    let next_states = vec![y.state; dist.len()];
    let stage = Stage::detached(t, y.state, payoffs, &next_states, dist);
    Ok(step.min_premium(t, y, &stage, z, aux, &PerOutcome(next_premiums)))
}
