//! Finite-horizon risk-aware dynamic programming with generalized capital
//! requirements: risk frontiers, information-state backward induction, a model
//! catalog, a brute-force oracle, and the dynamic newsvendor benchmark.
//!
//! Everything numeric is generic over [`Real`] (`f32` or `f64`); the `*64`
//! aliases at the crate root fix the scalar to `f64`.

pub mod error;
pub mod frontier;
pub mod mdp;
pub mod models;
pub mod newsvendor;
pub mod oracle;
pub mod premium;
pub mod real;
pub mod solver;

pub use error::{GcrError, Result};
pub use frontier::{
    check_membership, tail_risk_evaluate, Aux, Axis, Decision, DecisionGrid, InfoState, InfoStateSpace, InfoTransition,
    Lattice, NextPremiums, PremiumSchedule, Projection, RiskFrontierStep, Stage,
};
pub use mdp::{
    enumerate_histories, expectation, make_distribution, simulate_trajectory, truncated_gaussian_pmf,
    FiniteDistribution, History, MdpModel, PmfMode, Trajectory,
};
pub use models::FrontierModel;
pub use premium::Premium;
pub use real::Real;
pub use solver::{evaluate_policy, monte_carlo, solve, solve_with, Policy, SolveOptions, SolveResult, ValueTable};

pub type MdpModel64 = MdpModel<f64>;
pub type FiniteDistribution64 = FiniteDistribution<f64>;
pub type InfoStateSpace64 = InfoStateSpace<f64>;
pub type InfoState64 = InfoState<f64>;
pub type Premium64 = Premium<f64>;
pub type Policy64 = Policy<f64>;
pub type ValueTable64 = ValueTable<f64>;
pub type SolveResult64 = SolveResult<f64>;
pub type Trajectory64 = Trajectory<f64>;
