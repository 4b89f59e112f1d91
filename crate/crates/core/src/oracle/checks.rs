use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::frontier::{tail_risk_evaluate, Aux, InfoState, InfoStateSpace, RiskFrontierStep, Stage};
use crate::mdp::{History, MdpModel};
use crate::oracle::policy::project;
use crate::premium::Premium;
use crate::real::Real;
use crate::solver::{evaluate_policy, solve_with, Policy, SolveOptions};

#[derive(Clone, Debug, PartialEq)]
pub struct TimeConsistencyViolation<R> {
    pub t: usize,
    pub history: History,
    pub info_state: InfoState<R>,
    /// Value of the policy's tail from `σ_t(h_t)`.
    pub attained: Premium<R>,
    /// `V̄_t(σ_t(h_t))` from a fresh exhaustive solve.
    pub optimal: Premium<R>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TimeConsistencyReport<R> {
    pub histories_checked: usize,
    pub violations: Vec<TimeConsistencyViolation<R>>,
}

impl<R> TimeConsistencyReport<R> {
    pub fn is_consistent(&self) -> bool {
        self.violations.is_empty()
    }
}

/// For every history reached with positive probability under `policy`, compresses
/// it with `σ_t`, and compares the policy's tail value there with the optimal tail
/// value of an independent exhaustive solve.
pub fn check_time_consistency<R: Real, S: RiskFrontierStep<R> + ?Sized>(
    model: &MdpModel<R>,
    step: &S,
    space: &InfoStateSpace<R>,
    policy: &Policy<R>,
) -> Result<TimeConsistencyReport<R>> {
    let optimal = solve_with(model, step, space, SolveOptions { exhaustive: true, parallel: false })?;
    let attained = evaluate_policy(model, step, space, policy)?;
    let mut report = TimeConsistencyReport { histories_checked: 0, violations: Vec::new() };
    // (history, financial decisions so far, projected info state)
    let mut frontier: Vec<(History, Vec<(R, Aux<R>)>, InfoState<R>)> =
        vec![(History::new(model.initial_state()), Vec::new(), project(space, 0, space.initial()))];
    for t in 0..=model.horizon() {
        let mut next = Vec::new();
        for (h, fin, y) in frontier {
            report.histories_checked += 1;
            let sigma = project(space, t, &space.compress_history(model, &h, &fin)?);
            let opt = optimal.values.at(space, t, &sigma);
            let got = attained.at(space, t, &sigma);
            let tol = R::lit(1e-12) * (R::one() + opt.raw().abs().min(R::max_value()));
            let bad = match (got.is_feasible(), opt.is_feasible()) {
                (true, true) => got.raw() > opt.raw() + tol,
                (false, true) => true,
                _ => false,
            };
            if bad || sigma != y {
                report.violations.push(TimeConsistencyViolation {
                    t,
                    history: h.clone(),
                    info_state: sigma.clone(),
                    attained: got,
                    optimal: opt,
                });
            }
            if t == model.horizon() {
                continue;
            }
            let Some(d) = policy.at(space, t, &y) else {
                continue;
            };
            let stage = Stage::new(model, t, y.state, d.action);
            for &xi in stage.dist.support() {
                let y2 = project(space, t + 1, &space.transition(t, &y, &stage, xi, d.z, d.aux));
                let mut f = fin.clone();
                f.push((d.z, d.aux));
                next.push((h.extended(d.action, xi), f, y2));
            }
        }
        frontier = next;
    }
    Ok(report)
}

#[derive(Clone, Debug, PartialEq)]
pub struct MonotonicityReport<R> {
    pub trials: usize,
    /// Largest `GCR(X') - GCR(X)` seen (`+inf` when `X'` is infeasible but `X` is not).
    pub max_violation: R,
    pub violations: usize,
}

/// Draws `n_trials` perturbations `X' = X + D` with integer `D >= 0` of the payoff
/// stream and checks `GCR(X') <= GCR(X)`. The first trial uses `D = 0`.
pub fn check_monotonicity<R: Real, S: RiskFrontierStep<R> + ?Sized>(
    step: &S,
    space: &InfoStateSpace<R>,
    base_model: &MdpModel<R>,
    n_trials: usize,
    seed: u64,
) -> Result<MonotonicityReport<R>> {
    let base = tail_risk_evaluate(step, space, base_model)?.risk;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = MonotonicityReport { trials: n_trials, max_violation: R::neg_infinity(), violations: 0 };
    for trial in 0..n_trials {
        let bumped = base_model.map_payoffs(|_, _, _, _, r| {
            if trial == 0 || rng.gen_bool(0.5) {
                r
            } else {
                r + R::lit(rng.gen_range(1..=3) as f64)
            }
        })?;
        let risk = tail_risk_evaluate(step, space, &bumped)?.risk;
        let gap = match (risk.is_feasible(), base.is_feasible()) {
            (true, true) => risk.raw() - base.raw(),
            (false, true) => R::infinity(),
            (_, false) => R::neg_infinity(),
        };
        report.max_violation = report.max_violation.max(gap);
        if gap > R::lit(1e-12) {
            report.violations += 1;
        }
    }
    Ok(report)
}
