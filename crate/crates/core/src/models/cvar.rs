use serde::{Deserialize, Serialize};

use crate::error::{invalid, GcrError, Result};
use crate::mdp::FiniteDistribution;
use crate::premium::Premium;
use crate::real::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CvarForm {
    /// `min_η η + E[(X - η)^+] / (1 - α)`: mean of the upper `1 - α` tail of a cost.
    Cost,
    /// `max_η η - E[(η - X)^+] / α`: mean of the lower `α` tail of a payoff.
    Payoff,
}

/// CVaR by the variational formula, evaluated at every support value (where the
/// piecewise-linear objective attains its optimum).
pub fn cvar_variational<R: Real>(dist: &FiniteDistribution<R>, values: &[R], alpha: R, form: CvarForm) -> Result<R> {
    if values.len() != dist.len() {
        return Err(GcrError::LengthMismatch { expected: dist.len(), got: values.len() });
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(GcrError::NotANumber("CVaR values"));
    }
    let support = dist.support();
    if support.is_empty() {
        return Err(GcrError::DegenerateDistribution("empty support".into()));
    }
    match form {
        CvarForm::Cost => {
            if !(alpha >= R::zero() && alpha < R::one()) {
                return Err(invalid("alpha", format!("cost-form level must lie in [0, 1), got {alpha}")));
            }
            let scale = R::one() / (R::one() - alpha);
            Ok(support
                .iter()
                .map(|&k| {
                    let eta = values[k];
                    eta + scale * dist.expect_with(|i| (values[i] - eta).max(R::zero()))
                })
                .fold(R::infinity(), R::min))
        }
        CvarForm::Payoff => {
            if !(alpha > R::zero() && alpha <= R::one()) {
                return Err(invalid("alpha", format!("payoff-form level must lie in (0, 1], got {alpha}")));
            }
            let scale = R::one() / alpha;
            Ok(support
                .iter()
                .map(|&k| {
                    let eta = values[k];
                    eta - scale * dist.expect_with(|i| (eta - values[i]).max(R::zero()))
                })
                .fold(R::neg_infinity(), R::max))
        }
    }
}

/// One-step coherent risk measure of a payoff, `ρ(Y) = -E[Y]` or `-CVaR_α(Y)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OneStepRiskSpec<R> {
    Expectation,
    Cvar { alpha: R },
}

impl<R: Real> OneStepRiskSpec<R> {
    pub fn validate(&self) -> Result<()> {
        match *self {
            OneStepRiskSpec::Cvar { alpha } if !(alpha > R::zero() && alpha <= R::one()) => {
                Err(invalid("alpha", format!("CVaR level must lie in (0, 1], got {alpha}")))
            }
            _ => Ok(()),
        }
    }

    pub fn risk(&self, dist: &FiniteDistribution<R>, payoff: &[R]) -> R {
        match *self {
            OneStepRiskSpec::Expectation => -dist.expect(payoff),
            OneStepRiskSpec::Cvar { alpha } => {
                -cvar_variational(dist, payoff, alpha, CvarForm::Payoff).expect("validated CVaR spec")
            }
        }
    }
}

/// `sup { E_Q[v] : Q ≪ P, TV(Q, P) ≤ δ }`: moves up to `δ` mass from the lowest
/// values onto the highest one. Ties in value keep the smaller outcome index first.
pub fn tv_maximize<R: Real>(dist: &FiniteDistribution<R>, values: &[Premium<R>], delta: R) -> Premium<R> {
    let support = dist.support();
    if support.iter().any(|&i| !values[i].is_feasible()) {
        return Premium::infeasible();
    }
    let mut order: Vec<usize> = support.to_vec();
    order.sort_by(|&a, &b| values[b].raw().partial_cmp(&values[a].raw()).unwrap().then(a.cmp(&b)));
    let mut q: Vec<R> = order.iter().map(|&i| dist.prob(i)).collect();
    let moved = delta.max(R::zero()).min(R::one() - q[0]);
    q[0] = q[0] + moved;
    let mut remaining = moved;
    for k in (1..q.len()).rev() {
        if remaining <= R::zero() {
            break;
        }
        let take = remaining.min(q[k]);
        q[k] = q[k] - take;
        remaining = remaining - take;
    }
    Premium::new(order.iter().zip(&q).map(|(&i, &qi)| qi * values[i].raw()).sum())
}
