use crate::error::{GcrError, Result};
use crate::mdp::MdpModel;
use crate::real::Real;

pub const DEFAULT_HISTORY_CAP: u128 = 1_000_000;

/// `h_t = (s_0, a_0, xi_0, ..., a_{t-1}, xi_{t-1})`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct History {
    pub initial_state: usize,
    /// `(action, outcome)` per elapsed period.
    pub steps: Vec<(usize, usize)>,
}

impl History {
    pub fn new(initial_state: usize) -> Self {
        Self { initial_state, steps: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn extended(&self, action: usize, outcome: usize) -> Self {
        let mut h = self.clone();
        h.steps.push((action, outcome));
        h
    }

    /// Replays the transition map: `s_0, ..., s_t`.
    pub fn states<R: Real>(&self, model: &MdpModel<R>) -> Result<Vec<usize>> {
        let mut states = Vec::with_capacity(self.steps.len() + 1);
        let mut s = self.initial_state;
        states.push(s);
        for (t, &(a, xi)) in self.steps.iter().enumerate() {
            s = model.step(t, s, a, xi)?.0;
            states.push(s);
        }
        Ok(states)
    }

    pub fn payoffs<R: Real>(&self, model: &MdpModel<R>) -> Result<Vec<R>> {
        let mut out = Vec::with_capacity(self.steps.len());
        let mut s = self.initial_state;
        for (t, &(a, xi)) in self.steps.iter().enumerate() {
            let (next, r) = model.step(t, s, a, xi)?;
            out.push(r);
            s = next;
        }
        Ok(out)
    }
}

/// All histories of length `t` from the model's initial state, in lexicographic order.
pub fn enumerate_histories<R: Real>(model: &MdpModel<R>, t: usize, cap: Option<u128>) -> Result<Vec<History>> {
    let cap = cap.unwrap_or(DEFAULT_HISTORY_CAP);
    let branch = (model.num_actions() * model.num_outcomes()) as u128;
    let count = branch.checked_pow(t as u32).unwrap_or(u128::MAX);
    if count > cap {
        return Err(GcrError::TooLarge { count, cap });
    }
    let mut out = vec![History::new(model.initial_state())];
    for _ in 0..t {
        let mut next = Vec::with_capacity(out.len() * branch as usize);
        for h in &out {
            for a in 0..model.num_actions() {
                for xi in 0..model.num_outcomes() {
                    next.push(h.extended(a, xi));
                }
            }
        }
        out = next;
    }
    Ok(out)
}
