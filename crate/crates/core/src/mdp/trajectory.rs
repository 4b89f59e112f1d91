use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{GcrError, Result};
use crate::frontier::{Aux, InfoState, InfoStateSpace, Stage};
use crate::mdp::{FiniteDistribution, History, MdpModel};
use crate::real::Real;
use crate::solver::Policy;

/// One simulated path over periods `0..=T`.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory<R> {
    pub history: History,
    pub payoffs: Vec<R>,
    pub disbursements: Vec<R>,
    pub auxiliaries: Vec<Aux<R>>,
    /// `y_0, ..., y_{T+1}` as produced by `g_t` (before projection).
    pub info_states: Vec<InfoState<R>>,
    pub cumulative_payoff: R,
}

impl<R: Real> Trajectory<R> {
    /// `s_0, ..., s_{T+1}`.
    pub fn states(&self) -> Vec<usize> {
        self.info_states.iter().map(|y| y.state).collect()
    }

    /// Running payoff total after each period.
    pub fn wealth_path(&self) -> Vec<R> {
        let mut acc = R::zero();
        self.payoffs
            .iter()
            .map(|r| {
                acc = acc + *r;
                acc
            })
            .collect()
    }
}

pub(crate) fn sample<R: Real>(dist: &FiniteDistribution<R>, rng: &mut impl Rng) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    let support = dist.support();
    for &i in support {
        acc += dist.prob(i).as_f64();
        if u < acc {
            return i;
        }
    }
    *support.last().expect("distribution has support")
}

/// Rolls the policy forward from `y_0`, drawing outcomes from a ChaCha8 stream seeded with `seed`.
pub fn simulate_trajectory<R: Real>(
    model: &MdpModel<R>,
    policy: &Policy<R>,
    space: &InfoStateSpace<R>,
    seed: u64,
) -> Result<Trajectory<R>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let horizon = model.horizon();
    let mut y = space.initial().clone();
    let mut history = History::new(y.state);
    let mut payoffs = Vec::with_capacity(horizon + 1);
    let mut disbursements = Vec::with_capacity(horizon + 1);
    let mut auxiliaries = Vec::with_capacity(horizon + 1);
    let mut info_states = Vec::with_capacity(horizon + 2);
    for t in 0..=horizon {
        let d = policy.at(space, t, &y).ok_or_else(|| GcrError::PolicyHole { t, state: y.to_string() })?;
        let stage = Stage::new(model, t, y.state, d.action);
        let xi = sample(stage.dist, &mut rng);
        let next = space.transition(t, &y, &stage, xi, d.z, d.aux);
        history.steps.push((d.action, xi));
        payoffs.push(stage.payoffs[xi]);
        disbursements.push(d.z);
        auxiliaries.push(d.aux);
        info_states.push(std::mem::replace(&mut y, next));
    }
    info_states.push(y);
    let cumulative_payoff = payoffs.iter().copied().sum();
    Ok(Trajectory { history, payoffs, disbursements, auxiliaries, info_states, cumulative_payoff })
}
