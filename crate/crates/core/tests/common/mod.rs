#![allow(dead_code)]

use gcr_core::mdp::Dims;
use gcr_core::{make_distribution, FiniteDistribution, MdpModel};

/// Single-state, single-action stream; `payoff(t, xi)`.
pub fn stream(horizon: usize, weights: &[f64], payoff: impl Fn(usize, usize) -> f64) -> MdpModel<f64> {
    let dims = Dims { states: 1, actions: 1, outcomes: weights.len() };
    let noise = vec![make_distribution(weights).unwrap(); horizon + 1];
    MdpModel::from_fn(dims, horizon, noise, 0, |t, _, _, xi| (0, payoff(t, xi))).unwrap()
}

/// Deterministic stream with `xs[t]` in period `t`.
pub fn deterministic(xs: &[f64]) -> MdpModel<f64> {
    stream(xs.len() - 1, &[1.0], |t, _| xs[t])
}

/// T = 1, a fair coin at `t = 0` picks the state; period 1 pays `tail[state]`.
pub fn split(tail: [f64; 2]) -> MdpModel<f64> {
    let dims = Dims { states: 2, actions: 1, outcomes: 2 };
    let coin = make_distribution(&[1.0, 1.0]).unwrap();
    let det = FiniteDistribution::point_mass(2, 0).unwrap();
    MdpModel::from_fn(dims, 1, vec![coin, det], 0, |t, s, _, xi| if t == 0 { (xi, 0.0) } else { (s, tail[s]) }).unwrap()
}

pub fn ints(lo: i64, hi: i64) -> Vec<f64> {
    (lo..=hi).map(|k| k as f64).collect()
}
