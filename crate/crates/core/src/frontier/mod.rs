//! Compressed one-step risk frontiers, information-state spaces, and the
//! tail-risk recursion on pure payoff streams.

mod space;
mod step;

pub use space::{Axis, Coords, InfoState, InfoStateSpace, InfoTransition, Lattice, NoAugmentation, Projection};
pub use step::{
    min_stage_premium, Aux, Decision, DecisionGrid, FnPremiums, NextPremiums, PerOutcome, RiskFrontierStep, Stage,
    TableContinuation,
};

use crate::error::{invalid, GcrError, Result};
use crate::mdp::MdpModel;
use crate::premium::Premium;
use crate::real::Real;
use crate::solver::{self, InfeasibilityWitness, Policy, ValueTable};

/// Stage premiums `Φ_t` and the disbursements `Z_t` that attain them.
#[derive(Clone, Debug)]
pub struct PremiumSchedule<R> {
    pub premiums: ValueTable<R>,
    pub disbursements: Policy<R>,
    /// `ϱ(X_{0:T})`, the premium at `(0, y_0)`.
    pub risk: Premium<R>,
    pub witness: Option<InfeasibilityWitness<R>>,
}

/// GCR of the payoff stream of a single-action model by backward recursion.
pub fn tail_risk_evaluate<R: Real, S: RiskFrontierStep<R> + ?Sized>(
    step: &S,
    space: &InfoStateSpace<R>,
    stream_model: &MdpModel<R>,
) -> Result<PremiumSchedule<R>> {
    if stream_model.num_actions() != 1 {
        return Err(invalid("stream_model", "payoff streams must have exactly one action"));
    }
    let res = solver::solve(stream_model, step, space)?;
    Ok(PremiumSchedule { premiums: res.values, disbursements: res.policy, risk: res.optimum, witness: res.witness })
}

/// Whether every stage inclusion `(X_t, Z_t, Φ_t) ∈ Ū_t(y_t, Φ̄_{t+1})` holds on the
/// grid points reachable from `y_0` under `z_table`. The terminal row always comes
/// from the step's terminal premium.
pub fn check_membership<R: Real, S: RiskFrontierStep<R> + ?Sized>(
    step: &S,
    space: &InfoStateSpace<R>,
    model: &MdpModel<R>,
    z_table: &Policy<R>,
    premiums: &ValueTable<R>,
) -> Result<bool> {
    premiums.check_shape(space)?;
    let reach = solver::reachable(model, space, z_table)?;
    let horizon = model.horizon();
    let last = space.lattice(horizon + 1);
    let terminal: Vec<Premium<R>> = (0..last.len()).map(|i| step.terminal_premium(&last.decode(i))).collect();
    for t in 0..=horizon {
        let lattice = space.lattice(t);
        let next = if t == horizon { &terminal[..] } else { premiums.row(t + 1) };
        for (i, &r) in reach[t].iter().enumerate() {
            if !r {
                continue;
            }
            let y = lattice.decode(i);
            let d = z_table.get(t, i).ok_or_else(|| GcrError::PolicyHole { t, state: y.to_string() })?;
            let least = solver::fixed_value(step, space, model, t, &y, next, d);
            let phi = premiums.get(t, i);
            if !least.is_feasible() || !phi.is_feasible() {
                return Ok(false);
            }
            let tol = R::lit(1e-12) * (R::one() + least.raw().abs());
            if phi.raw() < least.raw() - tol {
                return Ok(false);
            }
        }
    }
    Ok(true)
}
