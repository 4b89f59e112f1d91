use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::frontier::InfoStateSpace;
use crate::mdp::{simulate_trajectory, MdpModel, Trajectory};
use crate::real::Real;
use crate::solver::Policy;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Summary<R> {
    pub mean: R,
    /// Sample standard deviation (n - 1 denominator; zero for a single sample).
    pub sigma: R,
    pub min: R,
    pub max: R,
}

impl<R: Real> Summary<R> {
    pub fn of(samples: &[R]) -> Self {
        let n = samples.len();
        if n == 0 {
            return Self { mean: R::nan(), sigma: R::nan(), min: R::nan(), max: R::nan() };
        }
        let nr = R::lit(n as f64);
        let mean = samples.iter().copied().sum::<R>() / nr;
        let sigma = if n > 1 {
            let ss: R = samples.iter().map(|x| (*x - mean) * (*x - mean)).sum();
            (ss / R::lit((n - 1) as f64)).sqrt()
        } else {
            R::zero()
        };
        let min = samples.iter().copied().fold(R::infinity(), R::min);
        let max = samples.iter().copied().fold(R::neg_infinity(), R::max);
        Self { mean, sigma, min, max }
    }
}

#[derive(Clone, Debug)]
pub struct MonteCarloReport<R> {
    pub trajectories: Vec<Trajectory<R>>,
    pub cumulative: Vec<R>,
    pub summary: Summary<R>,
}

impl<R: Real> MonteCarloReport<R> {
    /// Realized payoffs of period `t` across trajectories.
    pub fn period_payoffs(&self, t: usize) -> Vec<R> {
        self.trajectories.iter().map(|tr| tr.payoffs[t]).collect()
    }

    pub fn wealth_paths(&self) -> Vec<Vec<R>> {
        self.trajectories.iter().map(Trajectory::wealth_path).collect()
    }
}

/// Seed of trajectory `i` in a run with base seed `seed` (SplitMix64 finalizer).
pub fn trajectory_seed(seed: u64, i: usize) -> u64 {
    let mut z = seed.wrapping_add((i as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn monte_carlo<R: Real>(
    model: &MdpModel<R>,
    policy: &Policy<R>,
    space: &InfoStateSpace<R>,
    n: usize,
    seed: u64,
) -> Result<MonteCarloReport<R>> {
    if n == 0 {
        return Err(invalid("n", "need at least one trajectory"));
    }
    let trajectories = (0..n)
        .into_par_iter()
        .map(|i| simulate_trajectory(model, policy, space, trajectory_seed(seed, i)))
        .collect::<Result<Vec<_>>>()?;
    let cumulative: Vec<R> = trajectories.iter().map(|t| t.cumulative_payoff).collect();
    let summary = Summary::of(&cumulative);
    Ok(MonteCarloReport { trajectories, cumulative, summary })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_statistics() {
        let s = Summary::of(&[1.0, 3.0]);
        assert_eq!(s.mean, 2.0);
        assert!((s.sigma - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!((s.min, s.max), (1.0, 3.0));
        assert_eq!(Summary::of(&[4.0]).sigma, 0.0);
    }
}
