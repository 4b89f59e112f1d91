use rayon::prelude::*;

use crate::error::{GcrError, Result};
use crate::frontier::Stage;
use crate::mdp::MdpModel;
use crate::models::Acceptance;
use crate::oracle::objective::objective_unchecked;
use crate::oracle::policy::{check_grid, history_slots};
use crate::oracle::{HistoryPolicy, ObjectiveSpec};
use crate::premium::Premium;
use crate::real::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EnumerationBudget {
    pub max_policies: u128,
}

impl Default for EnumerationBudget {
    fn default() -> Self {
        Self { max_policies: 10_000_000 }
    }
}

impl EnumerationBudget {
    fn admit(&self, count: Option<u128>) -> Result<u128> {
        match count {
            Some(c) if c <= self.max_policies => Ok(c),
            Some(c) => Err(GcrError::TooLarge { count: c, cap: self.max_policies }),
            None => Err(GcrError::TooLarge { count: u128::MAX, cap: self.max_policies }),
        }
    }
}

/// `(|A|·|z|)^{Σ_t |H_t|}`, the number of deterministic history-dependent policies.
pub fn count_policies<R: Real>(model: &MdpModel<R>, z_len: usize) -> Option<u128> {
    let slots = history_slots((model.num_actions() * model.num_outcomes()) as u128, model.periods())?;
    ((model.num_actions() * z_len) as u128).checked_pow(u32::try_from(slots).ok()?)
}

/// Upper bound on policies that differ on positive-probability histories:
/// `(|A|·|z|)` to the number of nodes of the outcome tree.
pub fn count_reduced_policies<R: Real>(model: &MdpModel<R>, z_len: usize) -> Option<u128> {
    let widest = (0..model.periods()).map(|t| model.noise(t).support().len()).max().unwrap_or(1) as u128;
    let nodes = history_slots(widest, model.periods())?;
    ((model.num_actions() * z_len) as u128).checked_pow(u32::try_from(nodes).ok()?)
}

/// Odometer over every deterministic history-dependent policy, the last history
/// of the last period varying fastest.
pub struct PolicyIter<R> {
    choices: Vec<(usize, R)>,
    digits: Vec<usize>,
    current: HistoryPolicy<R>,
    done: bool,
}

impl<R: Real> Iterator for PolicyIter<R> {
    type Item = HistoryPolicy<R>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let out = self.current.clone();
        let mut k = self.digits.len();
        loop {
            if k == 0 {
                self.done = true;
                break;
            }
            k -= 1;
            self.digits[k] += 1;
            let (t, i) = slot(&self.current, k);
            if self.digits[k] < self.choices.len() {
                self.current.set(t, i, self.choices[self.digits[k]]);
                break;
            }
            self.digits[k] = 0;
            self.current.set(t, i, self.choices[0]);
        }
        Some(out)
    }
}

fn slot<R: Real>(p: &HistoryPolicy<R>, mut k: usize) -> (usize, usize) {
    for (t, row) in p.rows().iter().enumerate() {
        if k < row.len() {
            return (t, k);
        }
        k -= row.len();
    }
    unreachable!("slot index within the policy")
}

pub fn enumerate_policies<R: Real>(
    model: &MdpModel<R>,
    z_grid: &[R],
    budget: EnumerationBudget,
) -> Result<PolicyIter<R>> {
    check_grid(z_grid)?;
    let count = budget.admit(count_policies(model, z_grid.len()))?;
    let choices: Vec<(usize, R)> = (0..model.num_actions()).flat_map(|a| z_grid.iter().map(move |z| (a, *z))).collect();
    let current = HistoryPolicy::constant(model, choices[0], usize::MAX)?;
    let slots = current.rows().iter().map(Vec::len).sum();
    debug_assert!(count >= 1);
    Ok(PolicyIter { choices, digits: vec![0; slots], current, done: false })
}

#[derive(Clone, Copy)]
struct Node<R> {
    t: usize,
    s: usize,
    index: usize,
    wealth: R,
}

struct Search<'a, R: Real> {
    model: &'a MdpModel<R>,
    spec: &'a ObjectiveSpec<R>,
    acceptance: &'a Acceptance<R>,
    choices: &'a [(usize, R)],
    offset: Option<R>,
    current: HistoryPolicy<R>,
    pending: Vec<Node<R>>,
    best: Option<(Premium<R>, HistoryPolicy<R>)>,
}

impl<R: Real> Search<'_, R> {
    fn assign(&mut self, node: Node<R>, (a, z): (usize, R)) -> bool {
        let stage = Stage::new(self.model, node.t, node.s, a);
        let shift = self.offset.map_or(z, |w| w + node.wealth + z);
        if !self.acceptance.accepts(&stage, shift) {
            return false;
        }
        self.current.set(node.t, node.index, (a, z));
        if node.t < self.model.horizon() {
            for &xi in stage.dist.support().iter().rev() {
                self.pending.push(Node {
                    t: node.t + 1,
                    s: stage.next_states[xi],
                    index: self.current.child(node.index, a, xi),
                    wealth: node.wealth + stage.payoffs[xi],
                });
            }
        }
        true
    }

    fn run(&mut self) {
        let Some(node) = self.pending.pop() else {
            let v = objective_unchecked(self.model, &self.current, self.spec, self.acceptance);
            if v.is_feasible() && self.best.as_ref().map_or(true, |(b, _)| v < *b) {
                self.best = Some((v, self.current.clone()));
            }
            return;
        };
        let depth = self.pending.len();
        for &d in self.choices {
            if self.assign(node, d) {
                self.run();
            }
            self.pending.truncate(depth);
        }
        self.pending.push(node);
    }
}

/// Global minimum of [`direct_objective`](crate::oracle::direct_objective) over
/// deterministic history-dependent policies. Policies that agree on every
/// positive-probability history are enumerated once; the budget applies to
/// [`count_reduced_policies`]. Ties keep the first policy in enumeration order,
/// and histories off the optimal tree map to the first grid choice.
pub fn brute_force_optimum<R: Real>(
    model: &MdpModel<R>,
    spec: &ObjectiveSpec<R>,
    z_grid: &[R],
    acceptance: &Acceptance<R>,
    budget: EnumerationBudget,
) -> Result<(Premium<R>, HistoryPolicy<R>)> {
    spec.validate()?;
    check_grid(z_grid)?;
    budget.admit(count_reduced_policies(model, z_grid.len()))?;
    let choices: Vec<(usize, R)> = (0..model.num_actions()).flat_map(|a| z_grid.iter().map(move |z| (a, *z))).collect();
    let blank = HistoryPolicy::constant(model, choices[0], usize::MAX)?;
    let offset = match spec {
        ObjectiveSpec::MaxShortfall { initial_wealth } => Some(*initial_wealth),
        _ => None,
    };
    let root = Node { t: 0, s: model.initial_state(), index: 0, wealth: R::zero() };
    let shards: Vec<Option<(Premium<R>, HistoryPolicy<R>)>> = choices
        .par_iter()
        .map(|&d| {
            let mut search = Search {
                model,
                spec,
                acceptance,
                choices: &choices,
                offset,
                current: blank.clone(),
                pending: Vec::new(),
                best: None,
            };
            if search.assign(root, d) {
                search.run();
            }
            search.best
        })
        .collect();
    let mut best: Option<(Premium<R>, HistoryPolicy<R>)> = None;
    for (v, p) in shards.into_iter().flatten() {
        if best.as_ref().map_or(true, |(b, _)| v < *b) {
            best = Some((v, p));
        }
    }
    Ok(match best {
        Some((v, p)) => (v, clean(model, &p, choices[0])),
        None => (Premium::infeasible(), blank),
    })
}

/// Copy of `p` with every history it does not reach reset to `fill`.
fn clean<R: Real>(model: &MdpModel<R>, p: &HistoryPolicy<R>, fill: (usize, R)) -> HistoryPolicy<R> {
    let mut out = HistoryPolicy::constant(model, fill, usize::MAX).expect("same shape as p");
    let mut frontier = vec![(model.initial_state(), 0usize)];
    for t in 0..model.periods() {
        let mut next = Vec::new();
        for (s, i) in frontier {
            let (a, z) = p.get(t, i);
            out.set(t, i, (a, z));
            if t < model.horizon() {
                let stage = Stage::new(model, t, s, a);
                next.extend(stage.dist.support().iter().map(|&xi| (stage.next_states[xi], p.child(i, a, xi))));
            }
        }
        frontier = next;
    }
    out
}

/// Classical backward induction `V_t(s) = max_a E[r_t + V_{t+1}(s')]`, `V_{T+1} = 0`.
/// Returns the value rows `t = 0..=T+1`.
pub fn classical_backward_induction<R: Real>(model: &MdpModel<R>) -> Vec<Vec<R>> {
    let n = model.num_states();
    let mut rows = vec![vec![R::zero(); n]; model.periods() + 1];
    for t in (0..model.periods()).rev() {
        for s in 0..n {
            let mut best = R::neg_infinity();
            for a in 0..model.num_actions() {
                let dist = model.noise(t);
                let payoffs = model.payoffs(t, s, a);
                let next = model.next_states(t, s, a);
                let mut v = R::zero();
                for xi in 0..model.num_outcomes() {
                    let p = dist.prob(xi);
                    if p > R::zero() {
                        v = v + p * (payoffs[xi] + rows[t + 1][next[xi]]);
                    }
                }
                best = best.max(v);
            }
            rows[t][s] = best;
        }
    }
    rows
}
