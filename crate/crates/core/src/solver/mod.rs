//! Epigraph-form backward induction on information states, greedy policies,
//! fixed-policy evaluation and Monte Carlo rollout.

mod backward;
mod rollout;
mod tables;

pub(crate) use backward::fixed_value;
pub use backward::{
    decision, evaluate_policy, reachable, solve, solve_stage, solve_with, Diagnostics, InfeasibilityWitness,
    PeriodDiagnostics, SolveOptions, SolveResult,
};
pub use rollout::{monte_carlo, trajectory_seed, MonteCarloReport, Summary};
pub use tables::{Policy, ValueTable};
