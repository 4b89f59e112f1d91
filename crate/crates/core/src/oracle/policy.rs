use crate::error::{invalid, GcrError, Result};
use crate::frontier::{InfoState, InfoStateSpace, Stage};
use crate::mdp::{History, MdpModel};
use crate::real::Real;
use crate::solver::Policy;

/// Deterministic history-dependent policy: one `(action, disbursement)` per
/// history `h_t`, indexed in the lexicographic order of [`crate::mdp::enumerate_histories`].
#[derive(Clone, Debug, PartialEq)]
pub struct HistoryPolicy<R> {
    branch: usize,
    outcomes: usize,
    rows: Vec<Vec<(usize, R)>>,
}

impl<R: Real> HistoryPolicy<R> {
    /// Every history mapped to `fill`. Fails when some `|H_t|` exceeds `cap`.
    pub fn constant<T: Real>(model: &MdpModel<T>, fill: (usize, R), cap: usize) -> Result<Self> {
        let branch = model.num_actions() * model.num_outcomes();
        let mut rows = Vec::with_capacity(model.periods());
        let mut width = 1usize;
        for _ in 0..model.periods() {
            if width > cap {
                return Err(GcrError::TooLarge { count: width as u128, cap: cap as u128 });
            }
            rows.push(vec![fill; width]);
            width = width.saturating_mul(branch);
        }
        Ok(Self { branch, outcomes: model.num_outcomes(), rows })
    }

    pub fn horizon(&self) -> usize {
        self.rows.len() - 1
    }

    /// Index of the child history `h_t (a, ξ)` given the index of `h_t`.
    #[inline]
    pub fn child(&self, index: usize, action: usize, outcome: usize) -> usize {
        index * self.branch + action * self.outcomes + outcome
    }

    pub fn index_of(&self, h: &History) -> usize {
        h.steps.iter().fold(0, |i, &(a, xi)| self.child(i, a, xi))
    }

    #[inline]
    pub fn get(&self, t: usize, index: usize) -> (usize, R) {
        self.rows[t][index]
    }

    #[inline]
    pub fn set(&mut self, t: usize, index: usize, d: (usize, R)) {
        self.rows[t][index] = d;
    }

    pub fn decide(&self, h: &History) -> (usize, R) {
        self.get(h.len(), self.index_of(h))
    }

    pub fn rows(&self) -> &[Vec<(usize, R)>] {
        &self.rows
    }

    /// Lifts an info-state policy to histories by replaying `g_t` along each
    /// history the policy itself follows; histories it never follows get `fill`.
    pub fn from_table(
        model: &MdpModel<R>,
        space: &InfoStateSpace<R>,
        policy: &Policy<R>,
        fill: (usize, R),
        cap: usize,
    ) -> Result<Self> {
        let mut out = Self::constant(model, fill, cap)?;
        let mut frontier = vec![(0usize, space.initial().clone())];
        for t in 0..=model.horizon() {
            let mut next = Vec::new();
            for (index, y) in frontier {
                let d = policy.at(space, t, &y).ok_or_else(|| GcrError::PolicyHole { t, state: y.to_string() })?;
                out.set(t, index, (d.action, d.z));
                if t == model.horizon() {
                    continue;
                }
                let stage = Stage::new(model, t, y.state, d.action);
                for &xi in stage.dist.support() {
                    let y2 = space.transition(t, &y, &stage, xi, d.z, d.aux);
                    next.push((out.child(index, d.action, xi), project(space, t + 1, &y2)));
                }
            }
            frontier = next;
        }
        Ok(out)
    }
}

pub(crate) fn project<R: Real>(space: &InfoStateSpace<R>, t: usize, y: &InfoState<R>) -> InfoState<R> {
    space.lattice(t).decode(space.locate(t, y))
}

/// `Σ_t |H_t|` for a model with `branch = |A|·|Ξ|`.
pub(crate) fn history_slots(branch: u128, periods: usize) -> Option<u128> {
    let mut total: u128 = 0;
    let mut width: u128 = 1;
    for _ in 0..periods {
        total = total.checked_add(width)?;
        width = width.checked_mul(branch)?;
    }
    Some(total)
}

pub(crate) fn check_grid<R: Real>(z_grid: &[R]) -> Result<()> {
    if z_grid.is_empty() || z_grid.iter().any(|z| !z.is_finite()) {
        return Err(invalid("z_grid", "disbursement grid must be nonempty and finite"));
    }
    Ok(())
}
