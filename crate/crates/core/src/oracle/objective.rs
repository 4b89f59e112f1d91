use serde::{Deserialize, Serialize};

use crate::error::{invalid, GcrError, Result};
use crate::frontier::Stage;
use crate::mdp::{FiniteDistribution, MdpModel};
use crate::models::{tv_maximize, Acceptance, CvarForm, OneStepRiskSpec, ScalarFn};
use crate::oracle::HistoryPolicy;
use crate::premium::Premium;
use crate::real::Real;

/// Closed-form objectives evaluated on the full outcome tree.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ObjectiveSpec<R> {
    /// `-E[Σ X_t]`.
    NegExpectedTotal,
    /// `E[exp(-γ Σ X_t)]`; the entropic risk is `ln(·)/γ` negated.
    Entropic { gamma: R },
    /// `V(h) = ρ_t(X_t - V(h, ξ))` on the history tree.
    Nested { specs: Vec<OneStepRiskSpec<R>> },
    /// `E[u(Σ Z_t)]`.
    ExpectedUtilityOfShortfall { utility: ScalarFn<R> },
    /// Mean of the worst `α` share of `Σ Z_t`.
    CvarOfShortfall { alpha: R },
    /// `-Q_τ(-Σ Z_t)`.
    QuantileOfShortfall { tau: R },
    /// `V(h, η) = Z(h) + max_{δ <= η} sup_{TV <= δ} E_Q[V(h ξ, η - δ)]`, `δ` on `budget_grid`.
    WorstCaseShortfall { budget: R, budget_grid: Vec<R> },
    /// Worst positive-probability path of `max_t Z_t`; acceptance is applied to
    /// `initial_wealth + Σ_{k<t} X_k + X_t + Z_t`.
    MaxShortfall { initial_wealth: R },
}

impl<R: Real> ObjectiveSpec<R> {
    pub fn validate(&self) -> Result<()> {
        match self {
            ObjectiveSpec::Entropic { gamma } if !(*gamma > R::zero()) => Err(invalid("gamma", "must be positive")),
            ObjectiveSpec::Nested { specs } if specs.is_empty() => Err(invalid("specs", "need at least one spec")),
            ObjectiveSpec::Nested { specs } => specs.iter().try_for_each(|s| s.validate()),
            ObjectiveSpec::ExpectedUtilityOfShortfall { utility } => utility.validate(),
            ObjectiveSpec::CvarOfShortfall { alpha } if !(*alpha > R::zero() && *alpha <= R::one()) => {
                Err(invalid("alpha", "tail fraction must lie in (0, 1]"))
            }
            ObjectiveSpec::QuantileOfShortfall { tau } if !(*tau > R::zero() && *tau < R::one()) => {
                Err(invalid("tau", "must lie in (0, 1)"))
            }
            ObjectiveSpec::WorstCaseShortfall { budget, budget_grid }
                if budget_grid.is_empty() || *budget < R::zero() =>
            {
                Err(invalid("budget", "needs a nonnegative budget and a nonempty grid"))
            }
            _ => Ok(()),
        }
    }

    fn wealth_offset(&self) -> Option<R> {
        match self {
            ObjectiveSpec::MaxShortfall { initial_wealth } => Some(*initial_wealth),
            _ => None,
        }
    }
}

/// One positive-probability path of the outcome tree.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Leaf<R> {
    pub prob: R,
    pub total_payoff: R,
    pub total_shortfall: R,
    pub max_shortfall: R,
}

/// Positive-probability leaves under `policy`, or `None` when some reached node
/// violates `acceptance`.
pub fn expand_leaves<R: Real>(
    model: &MdpModel<R>,
    policy: &HistoryPolicy<R>,
    acceptance: &Acceptance<R>,
    wealth_offset: Option<R>,
) -> Option<Vec<Leaf<R>>> {
    let mut leaves = Vec::new();
    let root = Leaf { prob: R::one(), total_payoff: R::zero(), total_shortfall: R::zero(), max_shortfall: R::zero() };
    let ok = expand(model, policy, acceptance, wealth_offset, 0, model.initial_state(), 0, root, &mut leaves);
    ok.then_some(leaves)
}

#[allow(clippy::too_many_arguments)]
fn expand<R: Real>(
    model: &MdpModel<R>,
    policy: &HistoryPolicy<R>,
    acceptance: &Acceptance<R>,
    wealth_offset: Option<R>,
    t: usize,
    s: usize,
    index: usize,
    acc: Leaf<R>,
    out: &mut Vec<Leaf<R>>,
) -> bool {
    let (a, z) = policy.get(t, index);
    let stage = Stage::new(model, t, s, a);
    let shift = wealth_offset.map_or(z, |w| w + acc.total_payoff + z);
    if !acceptance.accepts(&stage, shift) {
        return false;
    }
    for &xi in stage.dist.support() {
        let leaf = Leaf {
            prob: acc.prob * stage.dist.prob(xi),
            total_payoff: acc.total_payoff + stage.payoffs[xi],
            total_shortfall: acc.total_shortfall + z,
            max_shortfall: acc.max_shortfall.max(z),
        };
        if t == model.horizon() {
            out.push(leaf);
        } else if !expand(
            model,
            policy,
            acceptance,
            wealth_offset,
            t + 1,
            stage.next_states[xi],
            policy.child(index, a, xi),
            leaf,
            out,
        ) {
            return false;
        }
    }
    true
}

/// The objective of `policy` by full expansion of the outcome tree; `INFEASIBLE`
/// when acceptance fails at any positive-probability node.
pub fn direct_objective<R: Real>(
    model: &MdpModel<R>,
    policy: &HistoryPolicy<R>,
    spec: &ObjectiveSpec<R>,
    acceptance: &Acceptance<R>,
) -> Result<Premium<R>> {
    spec.validate()?;
    if policy.horizon() != model.horizon() {
        return Err(invalid("policy", "horizon differs from the model"));
    }
    Ok(objective_unchecked(model, policy, spec, acceptance))
}

pub(crate) fn objective_unchecked<R: Real>(
    model: &MdpModel<R>,
    policy: &HistoryPolicy<R>,
    spec: &ObjectiveSpec<R>,
    acceptance: &Acceptance<R>,
) -> Premium<R> {
    let Some(leaves) = expand_leaves(model, policy, acceptance, spec.wealth_offset()) else {
        return Premium::infeasible();
    };
    let expect = |f: &dyn Fn(&Leaf<R>) -> R| leaves.iter().map(|l| l.prob * f(l)).sum::<R>();
    let v = match spec {
        ObjectiveSpec::NegExpectedTotal => -expect(&|l| l.total_payoff),
        ObjectiveSpec::Entropic { gamma } => expect(&|l| (-*gamma * l.total_payoff).exp()),
        ObjectiveSpec::ExpectedUtilityOfShortfall { utility } => expect(&|l| utility.eval(l.total_shortfall)),
        ObjectiveSpec::CvarOfShortfall { alpha } => {
            let (p, v): (Vec<R>, Vec<R>) = leaves.iter().map(|l| (l.prob, l.total_shortfall)).unzip();
            upper_tail_mean(&p, &v, *alpha)
        }
        ObjectiveSpec::QuantileOfShortfall { tau } => {
            let (p, v): (Vec<R>, Vec<R>) = leaves.iter().map(|l| (l.prob, -l.total_shortfall)).unzip();
            -lower_quantile(&p, &v, *tau)
        }
        ObjectiveSpec::MaxShortfall { .. } => leaves.iter().map(|l| l.max_shortfall).fold(R::neg_infinity(), R::max),
        ObjectiveSpec::Nested { specs } => return nested(model, policy, specs, 0, model.initial_state(), 0),
        ObjectiveSpec::WorstCaseShortfall { budget, budget_grid } => {
            let mut grid = budget_grid.clone();
            grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
            return worst_case(model, policy, &grid, *budget, 0, model.initial_state(), 0);
        }
    };
    Premium::new(v)
}

fn nested<R: Real>(
    model: &MdpModel<R>,
    policy: &HistoryPolicy<R>,
    specs: &[OneStepRiskSpec<R>],
    t: usize,
    s: usize,
    index: usize,
) -> Premium<R> {
    let (a, _) = policy.get(t, index);
    let stage = Stage::new(model, t, s, a);
    let mut y = stage.payoffs.to_vec();
    if t < model.horizon() {
        for &xi in stage.dist.support() {
            let v = nested(model, policy, specs, t + 1, stage.next_states[xi], policy.child(index, a, xi));
            if !v.is_feasible() {
                return v;
            }
            y[xi] = y[xi] - v.raw();
        }
    }
    Premium::new(specs[t.min(specs.len() - 1)].risk(stage.dist, &y))
}

fn worst_case<R: Real>(
    model: &MdpModel<R>,
    policy: &HistoryPolicy<R>,
    grid: &[R],
    eta: R,
    t: usize,
    s: usize,
    index: usize,
) -> Premium<R> {
    let (a, z) = policy.get(t, index);
    if t == model.horizon() {
        return Premium::new(z);
    }
    let stage = Stage::new(model, t, s, a);
    let tol = R::lit(1e-12) * (R::one() + eta.abs());
    let mut best: Option<Premium<R>> = None;
    let mut values = vec![Premium::new(R::zero()); stage.payoffs.len()];
    for &delta in grid.iter().filter(|d| **d <= eta + tol) {
        let rest = (eta - delta).max(R::zero());
        for &xi in stage.dist.support() {
            values[xi] =
                worst_case(model, policy, grid, rest, t + 1, stage.next_states[xi], policy.child(index, a, xi));
        }
        let v = tv_maximize(stage.dist, &values, delta);
        if !v.is_feasible() {
            return v;
        }
        if best.map_or(true, |b| v.raw() > b.raw()) {
            best = Some(v);
        }
    }
    best.map_or(Premium::infeasible(), |b| b.plus(z))
}

/// Mean of the largest `α` probability mass of `values` (sort-based).
pub fn upper_tail_mean<R: Real>(probs: &[R], values: &[R], alpha: R) -> R {
    let mut order: Vec<usize> = (0..values.len()).filter(|&i| probs[i] > R::zero()).collect();
    order.sort_by(|&a, &b| values[b].partial_cmp(&values[a]).unwrap());
    let mut left = alpha;
    let mut acc = R::zero();
    for i in order {
        if left <= R::zero() {
            break;
        }
        let take = probs[i].min(left);
        acc = acc + take * values[i];
        left = left - take;
    }
    acc / alpha
}

/// `inf { x : P(Y <= x) >= τ }` over the positive-probability values.
pub fn lower_quantile<R: Real>(probs: &[R], values: &[R], tau: R) -> R {
    let mut order: Vec<usize> = (0..values.len()).filter(|&i| probs[i] > R::zero()).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
    let mut cdf = R::zero();
    let tol = R::lit(1e-12);
    for &i in &order {
        cdf = cdf + probs[i];
        if cdf >= tau - tol {
            return values[i];
        }
    }
    values[*order.last().expect("nonempty support")]
}

/// CVaR by sorting: cost form averages the worst `1 - α` mass from above, payoff
/// form averages the lowest `α` mass.
pub fn sorted_tail_cvar<R: Real>(dist: &FiniteDistribution<R>, values: &[R], alpha: R, form: CvarForm) -> Result<R> {
    if values.len() != dist.len() {
        return Err(GcrError::LengthMismatch { expected: dist.len(), got: values.len() });
    }
    match form {
        CvarForm::Cost if alpha >= R::zero() && alpha < R::one() => {
            Ok(upper_tail_mean(dist.probs(), values, R::one() - alpha))
        }
        CvarForm::Payoff if alpha > R::zero() && alpha <= R::one() => {
            let neg: Vec<R> = values.iter().map(|v| -*v).collect();
            Ok(-upper_tail_mean(dist.probs(), &neg, alpha))
        }
        _ => Err(invalid("alpha", format!("{alpha} is outside the range of the {form:?} form"))),
    }
}
