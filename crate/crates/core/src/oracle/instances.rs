use rand::Rng;

use crate::error::Result;
use crate::mdp::{make_distribution, Dims, FiniteDistribution, MdpModel};
use crate::real::Real;

/// Size caps for random tiny instances; each dimension is drawn uniformly from `1..=cap`
/// (`0..=max_horizon` for the horizon).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct InstanceCaps {
    pub max_horizon: usize,
    pub max_states: usize,
    pub max_actions: usize,
    pub max_outcomes: usize,
}

impl Default for InstanceCaps {
    fn default() -> Self {
        Self { max_horizon: 2, max_states: 3, max_actions: 2, max_outcomes: 2 }
    }
}

/// Weights drawn from `1..=4` (so every outcome has positive mass), normalized.
pub fn random_distribution<R: Real>(rng: &mut impl Rng, len: usize) -> FiniteDistribution<R> {
    let w: Vec<R> = (0..len).map(|_| R::lit(rng.gen_range(1..=4) as f64)).collect();
    make_distribution(&w).expect("positive weights")
}

/// Payoffs are multiples of `0.5` in `[-4, 4]`, so partial sums are exact.
pub fn random_model<R: Real>(rng: &mut impl Rng, caps: InstanceCaps) -> Result<MdpModel<R>> {
    let horizon = rng.gen_range(0..=caps.max_horizon);
    let dims = Dims {
        states: rng.gen_range(1..=caps.max_states),
        actions: rng.gen_range(1..=caps.max_actions),
        outcomes: rng.gen_range(1..=caps.max_outcomes),
    };
    let noise = (0..=horizon).map(|_| random_distribution(rng, dims.outcomes)).collect();
    let initial = rng.gen_range(0..dims.states);
    MdpModel::from_fn(dims, horizon, noise, initial, |_, _, _, _| {
        (rng.gen_range(0..dims.states), R::lit(rng.gen_range(-8..=8) as f64 * 0.5))
    })
}

/// A single-action payoff stream.
pub fn random_stream<R: Real>(rng: &mut impl Rng, caps: InstanceCaps) -> Result<MdpModel<R>> {
    random_model(rng, InstanceCaps { max_actions: 1, ..caps })
}
