use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::error::{GcrError, Result};
use crate::frontier::{Aux, Decision, InfoState, InfoStateSpace, RiskFrontierStep, Stage, TableContinuation};
use crate::mdp::MdpModel;
use crate::premium::Premium;
use crate::real::Real;
use crate::solver::{Policy, ValueTable};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SolveOptions {
    /// Scan every disbursement even when the step allows stopping at the first admissible one.
    pub exhaustive: bool,
    /// Solve the grid points of a period on the rayon pool.
    pub parallel: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { exhaustive: false, parallel: true }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct PeriodDiagnostics {
    pub grid_points: usize,
    pub feasible: usize,
    pub infeasible: usize,
    /// Grid points not reached from `y_0` under the greedy policy.
    pub unreachable: usize,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Diagnostics {
    /// Periods `0..=T+1`.
    pub periods: Vec<PeriodDiagnostics>,
    pub elapsed: Duration,
}

/// Where an infeasible root traces back to: the first state on a failing path
/// at which no candidate was admissible (or whose terminal premium is infinite).
#[derive(Clone, Debug, PartialEq)]
pub struct InfeasibilityWitness<R> {
    pub t: usize,
    pub state: InfoState<R>,
}

#[derive(Clone, Debug)]
pub struct SolveResult<R> {
    pub values: ValueTable<R>,
    pub policy: Policy<R>,
    /// `V̄_0(y_0)`.
    pub optimum: Premium<R>,
    pub diagnostics: Diagnostics,
    pub witness: Option<InfeasibilityWitness<R>>,
}

struct Best<R> {
    value: Premium<R>,
    key: (usize, usize, usize),
    decision: Option<Decision<R>>,
}

impl<R: Real> Best<R> {
    fn new() -> Self {
        Self { value: Premium::infeasible(), key: (usize::MAX, usize::MAX, usize::MAX), decision: None }
    }

    fn offer(&mut self, value: Premium<R>, key: (usize, usize, usize), decision: Decision<R>) {
        if !value.is_feasible() {
            return;
        }
        if value < self.value || (value == self.value && key < self.key) {
            self.value = value;
            self.key = key;
            self.decision = Some(decision);
        }
    }
}

/// Minimum over actions and the decision grid at grid point `index` of period `t`,
/// reading the period-`t+1` values from `next`. Ties go to the smallest action,
/// then the smallest disbursement, then the smallest auxiliary index.
pub fn solve_stage<R: Real, S: RiskFrontierStep<R> + ?Sized>(
    step: &S,
    space: &InfoStateSpace<R>,
    model: &MdpModel<R>,
    t: usize,
    index: usize,
    next: &[Premium<R>],
) -> Result<(Premium<R>, Option<Decision<R>>)> {
    check_row(space, t + 1, next)?;
    let y = space.lattice(t).decode(index);
    Ok(stage_min(step, space, model, t, &y, next, false))
}

fn check_row<R: Real>(space: &InfoStateSpace<R>, t: usize, row: &[Premium<R>]) -> Result<()> {
    let n = space.lattice(t).len();
    if row.len() != n {
        return Err(GcrError::Structure(format!("period {t} values have {} entries, grid has {n}", row.len())));
    }
    Ok(())
}

pub(crate) fn stage_min<R: Real, S: RiskFrontierStep<R> + ?Sized>(
    step: &S,
    space: &InfoStateSpace<R>,
    model: &MdpModel<R>,
    t: usize,
    y: &InfoState<R>,
    next: &[Premium<R>],
    exhaustive: bool,
) -> (Premium<R>, Option<Decision<R>>) {
    let grid = step.decision_grid(t, y);
    let zs = grid.disbursements();
    let first_only = step.first_feasible_disbursement() && !exhaustive;
    let mut best = Best::new();
    for a in 0..model.num_actions() {
        let stage = Stage::new(model, t, y.state, a);
        for (ai, &aux) in grid.auxiliaries().iter().enumerate() {
            let mut eval = |zi: usize| {
                let z = zs[zi];
                let cont = TableContinuation { space, t, y, stage: &stage, z, aux, values: next };
                let v = step.min_premium(t, y, &stage, z, aux, &cont);
                best.offer(v, (a, zi, ai), Decision { action: a, z, aux });
            };
            if first_only {
                let zi = zs.partition_point(|&z| !step.admissible(t, y, &stage, z, aux));
                if zi < zs.len() {
                    eval(zi);
                }
            } else {
                for zi in 0..zs.len() {
                    eval(zi);
                }
            }
        }
    }
    (best.value, best.decision)
}

pub(crate) fn fixed_value<R: Real, S: RiskFrontierStep<R> + ?Sized>(
    step: &S,
    space: &InfoStateSpace<R>,
    model: &MdpModel<R>,
    t: usize,
    y: &InfoState<R>,
    next: &[Premium<R>],
    d: Decision<R>,
) -> Premium<R> {
    let stage = Stage::new(model, t, y.state, d.action);
    let cont = TableContinuation { space, t, y, stage: &stage, z: d.z, aux: d.aux, values: next };
    step.min_premium(t, y, &stage, d.z, d.aux, &cont)
}

fn map_grid<T: Send>(len: usize, parallel: bool, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    if parallel {
        (0..len).into_par_iter().map(f).collect()
    } else {
        (0..len).map(f).collect()
    }
}

fn check_compatible<R: Real>(model: &MdpModel<R>, space: &InfoStateSpace<R>) -> Result<()> {
    if space.horizon() != model.horizon() {
        return Err(GcrError::Structure(format!(
            "space horizon {} differs from model horizon {}",
            space.horizon(),
            model.horizon()
        )));
    }
    for t in 0..=space.horizon() + 1 {
        if space.lattice(t).num_states() != model.num_states() {
            return Err(GcrError::Structure(format!("period {t} grid has the wrong number of states")));
        }
    }
    Ok(())
}

fn terminal_row<R: Real, S: RiskFrontierStep<R> + ?Sized>(
    step: &S,
    space: &InfoStateSpace<R>,
    parallel: bool,
) -> Vec<Premium<R>> {
    let t = space.horizon() + 1;
    let lattice = space.lattice(t);
    map_grid(lattice.len(), parallel, |i| step.terminal_premium(&lattice.decode(i)))
}

pub fn solve<R: Real, S: RiskFrontierStep<R> + ?Sized>(
    model: &MdpModel<R>,
    step: &S,
    space: &InfoStateSpace<R>,
) -> Result<SolveResult<R>> {
    solve_with(model, step, space, SolveOptions::default())
}

/// Backward induction over `t = T, ..., 0` with greedy policy extraction.
pub fn solve_with<R: Real, S: RiskFrontierStep<R> + ?Sized>(
    model: &MdpModel<R>,
    step: &S,
    space: &InfoStateSpace<R>,
    opts: SolveOptions,
) -> Result<SolveResult<R>> {
    check_compatible(model, space)?;
    let started = Instant::now();
    let horizon = model.horizon();
    let mut rows = vec![Vec::new(); horizon + 2];
    let mut policy_rows = vec![Vec::new(); horizon + 1];
    rows[horizon + 1] = terminal_row(step, space, opts.parallel);
    for t in (0..=horizon).rev() {
        let lattice = space.lattice(t);
        let next = &rows[t + 1];
        let solved = map_grid(lattice.len(), opts.parallel, |i| {
            let y = lattice.decode(i);
            stage_min(step, space, model, t, &y, next, opts.exhaustive)
        });
        let (vals, decs): (Vec<_>, Vec<_>) = solved.into_iter().unzip();
        rows[t] = vals;
        policy_rows[t] = decs;
    }
    let values = ValueTable::from_rows(rows);
    let policy = Policy::from_rows(policy_rows);
    let root = space.locate(0, space.initial());
    let optimum = values.get(0, root);
    let reach = reachable(model, space, &policy)?;
    let periods = (0..=horizon + 1)
        .map(|t| {
            let row = values.row(t);
            let feasible = row.iter().filter(|v| v.is_feasible()).count();
            PeriodDiagnostics {
                grid_points: row.len(),
                feasible,
                infeasible: row.len() - feasible,
                unreachable: reach[t].iter().filter(|r| !**r).count(),
            }
        })
        .collect();
    let witness = if optimum.is_feasible() { None } else { Some(witness(model, step, space, &values)) };
    Ok(SolveResult {
        values,
        policy,
        optimum,
        diagnostics: Diagnostics { periods, elapsed: started.elapsed() },
        witness,
    })
}

/// Backward pass with the policy's decisions fixed. Grid points without a
/// decision evaluate to `INFEASIBLE`.
pub fn evaluate_policy<R: Real, S: RiskFrontierStep<R> + ?Sized>(
    model: &MdpModel<R>,
    step: &S,
    space: &InfoStateSpace<R>,
    policy: &Policy<R>,
) -> Result<ValueTable<R>> {
    check_compatible(model, space)?;
    policy.check_shape(space)?;
    let horizon = model.horizon();
    for row in policy.rows() {
        for d in row.iter().flatten() {
            if d.action >= model.num_actions() {
                return Err(GcrError::OutOfRange {
                    what: "policy action",
                    index: d.action,
                    limit: model.num_actions(),
                });
            }
            if d.z.is_nan() {
                return Err(GcrError::NotANumber("policy disbursement"));
            }
        }
    }
    let mut rows = vec![Vec::new(); horizon + 2];
    rows[horizon + 1] = terminal_row(step, space, true);
    for t in (0..=horizon).rev() {
        let lattice = space.lattice(t);
        let next = &rows[t + 1];
        rows[t] = map_grid(lattice.len(), true, |i| match policy.get(t, i) {
            Some(d) => fixed_value(step, space, model, t, &lattice.decode(i), next, d),
            None => Premium::infeasible(),
        });
    }
    Ok(ValueTable::from_rows(rows))
}

/// Grid points reached from `y_0` with positive probability under `policy`.
/// With linear projection every bracketing point with positive weight counts.
pub fn reachable<R: Real>(
    model: &MdpModel<R>,
    space: &InfoStateSpace<R>,
    policy: &Policy<R>,
) -> Result<Vec<Vec<bool>>> {
    policy.check_shape(space)?;
    let horizon = model.horizon();
    let mut reach: Vec<Vec<bool>> = (0..=horizon + 1).map(|t| vec![false; space.lattice(t).len()]).collect();
    reach[0][space.locate(0, space.initial())] = true;
    for t in 0..=horizon {
        let lattice = space.lattice(t);
        for i in 0..lattice.len() {
            if !reach[t][i] {
                continue;
            }
            let Some(d) = policy.get(t, i) else { continue };
            let y = lattice.decode(i);
            let stage = Stage::new(model, t, y.state, d.action);
            for &xi in stage.dist.support() {
                let y2 = space.transition(t, &y, &stage, xi, d.z, d.aux);
                let row = &mut reach[t + 1];
                space.for_each_corner(t + 1, y2.state, &y2.coords, |j, _| row[j] = true);
            }
        }
    }
    Ok(reach)
}

fn witness<R: Real, S: RiskFrontierStep<R> + ?Sized>(
    model: &MdpModel<R>,
    step: &S,
    space: &InfoStateSpace<R>,
    values: &ValueTable<R>,
) -> InfeasibilityWitness<R> {
    let mut t = 0;
    let mut y = space.lattice(0).decode(space.locate(0, space.initial()));
    'descend: while t <= model.horizon() {
        let grid = step.decision_grid(t, &y);
        for a in 0..model.num_actions() {
            let stage = Stage::new(model, t, y.state, a);
            for &z in grid.disbursements() {
                for &aux in grid.auxiliaries() {
                    if !step.admissible(t, &y, &stage, z, aux) {
                        continue;
                    }
                    for &xi in stage.dist.support() {
                        let y2 = space.transition(t, &y, &stage, xi, z, aux);
                        let j = space.locate(t + 1, &y2);
                        if !values.get(t + 1, j).is_feasible() {
                            y = space.lattice(t + 1).decode(j);
                            t += 1;
                            continue 'descend;
                        }
                    }
                    return InfeasibilityWitness { t, state: y };
                }
            }
        }
        return InfeasibilityWitness { t, state: y };
    }
    InfeasibilityWitness { t, state: y }
}

/// Convenience for tests and callers that hold an auxiliary-free decision.
pub fn decision<R: Real>(action: usize, z: R) -> Decision<R> {
    Decision { action, z, aux: Aux::None }
}
