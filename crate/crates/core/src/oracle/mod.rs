//! Brute-force ground truth on tiny instances. Nothing here uses information
//! states: policies are functions of full histories and objectives are computed
//! on the expanded outcome tree.

mod checks;
mod enumerate;
mod instances;
mod objective;
mod policy;
pub mod suite;

pub use checks::{
    check_monotonicity, check_time_consistency, MonotonicityReport, TimeConsistencyReport, TimeConsistencyViolation,
};
pub use enumerate::{
    brute_force_optimum, classical_backward_induction, count_policies, count_reduced_policies, enumerate_policies,
    EnumerationBudget, PolicyIter,
};
pub use instances::{random_distribution, random_model, random_stream, InstanceCaps};
pub use objective::{
    direct_objective, expand_leaves, lower_quantile, sorted_tail_cvar, upper_tail_mean, Leaf, ObjectiveSpec,
};
pub use policy::HistoryPolicy;
