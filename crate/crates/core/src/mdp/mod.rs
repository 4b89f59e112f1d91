//! Finite controlled systems: distributions, dynamics, histories and simulation.

mod distribution;
mod history;
mod model;
mod trajectory;

pub use distribution::{expectation, make_distribution, truncated_gaussian_pmf, FiniteDistribution, PmfMode};
pub use history::{enumerate_histories, History, DEFAULT_HISTORY_CAP};
pub use model::{Dims, MdpModel};
pub use trajectory::{simulate_trajectory, Trajectory};
