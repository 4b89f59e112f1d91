use crate::error::{invalid, GcrError, Result};
use crate::mdp::FiniteDistribution;
use crate::real::Real;

/// Finite-horizon controlled system with periods `0..=horizon`.
///
/// Transition and payoff tables are flat, indexed `[t][s][a][xi]` with the outcome
/// innermost so that per-(t, s, a) slices are contiguous.
#[derive(Clone, Debug)]
pub struct MdpModel<R> {
    num_states: usize,
    num_actions: usize,
    num_outcomes: usize,
    horizon: usize,
    transition: Vec<usize>,
    payoff: Vec<R>,
    noise: Vec<FiniteDistribution<R>>,
    initial_state: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Dims {
    pub states: usize,
    pub actions: usize,
    pub outcomes: usize,
}

impl<R: Real> MdpModel<R> {
    /// Builds the tables by calling `f(t, s, a, xi) -> (next_state, payoff)`.
    pub fn from_fn(
        dims: Dims,
        horizon: usize,
        noise: Vec<FiniteDistribution<R>>,
        initial_state: usize,
        mut f: impl FnMut(usize, usize, usize, usize) -> (usize, R),
    ) -> Result<Self> {
        let periods = horizon + 1;
        let n = periods * dims.states * dims.actions * dims.outcomes;
        let mut transition = Vec::with_capacity(n);
        let mut payoff = Vec::with_capacity(n);
        for t in 0..periods {
            for s in 0..dims.states {
                for a in 0..dims.actions {
                    for xi in 0..dims.outcomes {
                        let (next, r) = f(t, s, a, xi);
                        transition.push(next);
                        payoff.push(r);
                    }
                }
            }
        }
        Self::from_tables(dims, horizon, transition, payoff, noise, initial_state)
    }

    /// Time-homogeneous model: one noise distribution reused every period.
    pub fn stationary(
        dims: Dims,
        horizon: usize,
        noise: FiniteDistribution<R>,
        initial_state: usize,
        mut f: impl FnMut(usize, usize, usize) -> (usize, R),
    ) -> Result<Self> {
        Self::from_fn(dims, horizon, vec![noise; horizon + 1], initial_state, |_, s, a, xi| f(s, a, xi))
    }

    pub fn from_tables(
        dims: Dims,
        horizon: usize,
        transition: Vec<usize>,
        payoff: Vec<R>,
        noise: Vec<FiniteDistribution<R>>,
        initial_state: usize,
    ) -> Result<Self> {
        if dims.states == 0 || dims.actions == 0 || dims.outcomes == 0 {
            return Err(invalid("dims", "state, action and outcome counts must be positive"));
        }
        let n = (horizon + 1) * dims.states * dims.actions * dims.outcomes;
        if transition.len() != n {
            return Err(GcrError::LengthMismatch { expected: n, got: transition.len() });
        }
        if payoff.len() != n {
            return Err(GcrError::LengthMismatch { expected: n, got: payoff.len() });
        }
        if noise.len() != horizon + 1 {
            return Err(GcrError::LengthMismatch { expected: horizon + 1, got: noise.len() });
        }
        if let Some(d) = noise.iter().find(|d| d.len() != dims.outcomes) {
            return Err(GcrError::LengthMismatch { expected: dims.outcomes, got: d.len() });
        }
        if let Some(&bad) = transition.iter().find(|&&s| s >= dims.states) {
            return Err(GcrError::OutOfRange { what: "next state", index: bad, limit: dims.states });
        }
        if payoff.iter().any(|r| !r.is_finite()) {
            return Err(invalid("payoff", "payoffs must be finite"));
        }
        if initial_state >= dims.states {
            return Err(GcrError::OutOfRange { what: "initial state", index: initial_state, limit: dims.states });
        }
        Ok(Self {
            num_states: dims.states,
            num_actions: dims.actions,
            num_outcomes: dims.outcomes,
            horizon,
            transition,
            payoff,
            noise,
            initial_state,
        })
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn num_outcomes(&self) -> usize {
        self.num_outcomes
    }

    /// Last period index `T`.
    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn periods(&self) -> usize {
        self.horizon + 1
    }

    pub fn initial_state(&self) -> usize {
        self.initial_state
    }

    pub fn dims(&self) -> Dims {
        Dims { states: self.num_states, actions: self.num_actions, outcomes: self.num_outcomes }
    }

    pub fn noise(&self, t: usize) -> &FiniteDistribution<R> {
        &self.noise[t]
    }

    #[inline]
    fn base(&self, t: usize, s: usize, a: usize) -> usize {
        ((t * self.num_states + s) * self.num_actions + a) * self.num_outcomes
    }

    /// Payoffs `r_t(s, a, ·)` indexed by outcome.
    #[inline]
    pub fn payoffs(&self, t: usize, s: usize, a: usize) -> &[R] {
        let b = self.base(t, s, a);
        &self.payoff[b..b + self.num_outcomes]
    }

    /// Next states `f_t(s, a, ·)` indexed by outcome.
    #[inline]
    pub fn next_states(&self, t: usize, s: usize, a: usize) -> &[usize] {
        let b = self.base(t, s, a);
        &self.transition[b..b + self.num_outcomes]
    }

    pub fn step(&self, t: usize, s: usize, a: usize, xi: usize) -> Result<(usize, R)> {
        check(t, self.horizon + 1, "period")?;
        check(s, self.num_states, "state")?;
        check(a, self.num_actions, "action")?;
        check(xi, self.num_outcomes, "outcome")?;
        let i = self.base(t, s, a) + xi;
        Ok((self.transition[i], self.payoff[i]))
    }

    /// `max |r|` over all table entries.
    pub fn max_abs_payoff(&self) -> R {
        self.payoff.iter().fold(R::zero(), |m, r| m.max(r.abs()))
    }

    pub fn payoff_range(&self) -> (R, R) {
        self.payoff.iter().fold((R::infinity(), R::neg_infinity()), |(lo, hi), r| (lo.min(*r), hi.max(*r)))
    }

    /// Copy of the model with every payoff replaced by `f(t, s, a, xi, r)`.
    pub fn map_payoffs(&self, mut f: impl FnMut(usize, usize, usize, usize, R) -> R) -> Result<Self> {
        let mut out = self.clone();
        let mut i = 0;
        for t in 0..self.periods() {
            for s in 0..self.num_states {
                for a in 0..self.num_actions {
                    for xi in 0..self.num_outcomes {
                        out.payoff[i] = f(t, s, a, xi, self.payoff[i]);
                        i += 1;
                    }
                }
            }
        }
        if out.payoff.iter().any(|r| !r.is_finite()) {
            return Err(invalid("payoff", "payoffs must be finite"));
        }
        Ok(out)
    }

    /// Same model restricted to one action; used to turn a controlled system
    /// into a pure payoff stream.
    pub fn restrict_action(&self, a: usize) -> Result<Self> {
        check(a, self.num_actions, "action")?;
        let dims = Dims { actions: 1, ..self.dims() };
        Self::from_fn(dims, self.horizon, self.noise.clone(), self.initial_state, |t, s, _, xi| {
            let i = self.base(t, s, a) + xi;
            (self.transition[i], self.payoff[i])
        })
    }
}

fn check(index: usize, limit: usize, what: &'static str) -> Result<()> {
    if index < limit {
        Ok(())
    } else {
        Err(GcrError::OutOfRange { what, index, limit })
    }
}
