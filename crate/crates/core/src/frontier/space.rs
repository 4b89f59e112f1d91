use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{invalid, GcrError, Result};
use crate::frontier::{Aux, Stage};
use crate::mdp::{History, MdpModel};
use crate::real::Real;

pub type Coords<R> = SmallVec<[R; 2]>;

/// System state plus the augmenting coordinates (wealth, budget, risk level, ...).
#[derive(Clone, Debug, PartialEq)]
pub struct InfoState<R> {
    pub state: usize,
    pub coords: Coords<R>,
}

impl<R: Real> InfoState<R> {
    pub fn new(state: usize, coords: &[R]) -> Self {
        Self { state, coords: SmallVec::from_slice(coords) }
    }

    pub fn plain(state: usize) -> Self {
        Self { state, coords: SmallVec::new() }
    }
}

impl<R: Real> fmt::Display for InfoState<R> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(s={}", self.state)?;
        for c in &self.coords {
            write!(f, ", {c}")?;
        }
        f.write_str(")")
    }
}

/// One augmenting coordinate grid.
#[derive(Clone, Debug, PartialEq)]
pub enum Axis<R> {
    Uniform { start: R, step: R, len: usize },
    Explicit(Vec<R>),
}

impl<R: Real> Axis<R> {
    pub fn uniform(start: R, step: R, len: usize) -> Result<Self> {
        if len == 0 || !(step > R::zero()) || !start.is_finite() {
            return Err(invalid("axis", "uniform axis needs len > 0 and step > 0"));
        }
        Ok(Axis::Uniform { start, step, len })
    }

    /// Integers `lo..=hi`.
    pub fn integers(lo: i64, hi: i64) -> Result<Self> {
        if hi < lo {
            return Err(invalid("axis", format!("empty integer range {lo}..={hi}")));
        }
        Self::uniform(R::lit(lo as f64), R::one(), (hi - lo + 1) as usize)
    }

    pub fn explicit(mut values: Vec<R>) -> Result<Self> {
        if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("axis", "explicit axis needs finite values"));
        }
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        values.dedup_by(|a, b| (*a - *b).abs() <= R::lit(1e-12) * (R::one() + b.abs()));
        Ok(Axis::Explicit(values))
    }

    pub fn single(v: R) -> Self {
        Axis::Explicit(vec![v])
    }

    pub fn len(&self) -> usize {
        match self {
            Axis::Uniform { len, .. } => *len,
            Axis::Explicit(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn value(&self, i: usize) -> R {
        match self {
            Axis::Uniform { start, step, .. } => *start + *step * R::lit(i as f64),
            Axis::Explicit(v) => v[i],
        }
    }

    pub fn first(&self) -> R {
        self.value(0)
    }

    pub fn last(&self) -> R {
        self.value(self.len() - 1)
    }

    pub fn values(&self) -> Vec<R> {
        (0..self.len()).map(|i| self.value(i)).collect()
    }

    fn outside(&self, x: R) -> bool {
        let tol = R::lit(1e-9) * (R::one() + x.abs());
        x < self.first() - tol || x > self.last() + tol
    }

    /// Nearest grid index, ties toward the smaller coordinate. Out-of-range
    /// inputs clamp to the end points; the flag reports clamping.
    #[inline]
    pub fn nearest(&self, x: R) -> (usize, bool) {
        let clamped = self.outside(x);
        let n = self.len();
        let i = match self {
            Axis::Uniform { start, step, len } => {
                let f = (x - *start) / *step;
                if !(f > R::zero()) {
                    0
                } else if f >= R::lit((*len - 1) as f64) {
                    len - 1
                } else {
                    let i = f.floor();
                    let frac = f - i;
                    let i = i.to_usize().unwrap_or(0);
                    if frac > R::lit(0.5) {
                        i + 1
                    } else {
                        i
                    }
                }
            }
            Axis::Explicit(v) => {
                let hi = v.partition_point(|g| *g < x);
                if hi == 0 {
                    0
                } else if hi >= n {
                    n - 1
                } else if x - v[hi - 1] <= v[hi] - x {
                    hi - 1
                } else {
                    hi
                }
            }
        };
        (i, clamped)
    }

    /// Bracketing indices and the weight on the upper one, so that
    /// `x = (1 - w) * value(lo) + w * value(hi)` after clamping.
    #[inline]
    pub fn bracket(&self, x: R) -> (usize, usize, R, bool) {
        let clamped = self.outside(x);
        let n = self.len();
        if n == 1 || x <= self.first() {
            return (0, 0, R::zero(), clamped);
        }
        if x >= self.last() {
            return (n - 1, n - 1, R::zero(), clamped);
        }
        let lo = match self {
            Axis::Uniform { start, step, len } => {
                let f = ((x - *start) / *step).floor().to_usize().unwrap_or(0);
                f.min(len - 2)
            }
            Axis::Explicit(v) => v.partition_point(|g| *g <= x) - 1,
        };
        let (a, b) = (self.value(lo), self.value(lo + 1));
        let w = ((x - a) / (b - a)).max(R::zero()).min(R::one());
        if w == R::zero() {
            (lo, lo, R::zero(), clamped)
        } else if w == R::one() {
            (lo + 1, lo + 1, R::zero(), clamped)
        } else {
            (lo, lo + 1, w, clamped)
        }
    }
}

/// How an off-grid coordinate reads the value table.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Projection {
    /// Value at the nearest grid point (ties toward the smaller coordinate).
    #[default]
    Nearest,
    /// Linear interpolation of premium values between the bracketing points.
    Linear,
}

/// Product grid `S × axis_1 × ... × axis_k` for one period.
#[derive(Clone, Debug, PartialEq)]
pub struct Lattice<R> {
    states: usize,
    axes: Vec<Axis<R>>,
    block: usize,
}

impl<R: Real> Lattice<R> {
    pub fn new(states: usize, axes: Vec<Axis<R>>) -> Self {
        let block = axes.iter().map(Axis::len).product();
        Self { states, axes, block }
    }

    pub fn len(&self) -> usize {
        self.states * self.block
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn axes(&self) -> &[Axis<R>] {
        &self.axes
    }

    pub fn num_states(&self) -> usize {
        self.states
    }

    pub fn index(&self, state: usize, idx: &[usize]) -> usize {
        let mut i = 0;
        for (k, axis) in self.axes.iter().enumerate() {
            i = i * axis.len() + idx[k];
        }
        state * self.block + i
    }

    pub fn decode(&self, mut i: usize) -> InfoState<R> {
        let state = i / self.block;
        i %= self.block;
        let mut coords: Coords<R> = SmallVec::from_elem(R::zero(), self.axes.len());
        for (k, axis) in self.axes.iter().enumerate().rev() {
            coords[k] = axis.value(i % axis.len());
            i /= axis.len();
        }
        InfoState { state, coords }
    }
}

/// Augmenting-coordinate part of the information-state transition `g_t`.
/// The state component always follows the model's transition map.
pub trait InfoTransition<R: Real>: Send + Sync {
    fn advance(
        &self,
        t: usize,
        y: &InfoState<R>,
        stage: &Stage<'_, R>,
        outcome: usize,
        z: R,
        aux: Aux<R>,
        next: &mut Coords<R>,
    );
}

/// Per-period grids, initial information state, and the transition `g_t`.
#[derive(Clone)]
pub struct InfoStateSpace<R: Real> {
    lattices: Vec<Lattice<R>>,
    projection: Vec<Projection>,
    initial: InfoState<R>,
    transition: Arc<dyn InfoTransition<R>>,
}

impl<R: Real> fmt::Debug for InfoStateSpace<R> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("InfoStateSpace")
            .field("lattices", &self.lattices.len())
            .field("projection", &self.projection)
            .field("initial", &self.initial)
            .finish()
    }
}

/// Transition for spaces without augmenting coordinates.
pub struct NoAugmentation;

impl<R: Real> InfoTransition<R> for NoAugmentation {
    fn advance(&self, _: usize, _: &InfoState<R>, _: &Stage<'_, R>, _: usize, _: R, _: Aux<R>, next: &mut Coords<R>) {
        next.clear();
    }
}

impl<R: Real> InfoStateSpace<R> {
    /// `lattices` holds one grid per period `0..=T+1`.
    pub fn new(
        lattices: Vec<Lattice<R>>,
        projection: Vec<Projection>,
        initial: InfoState<R>,
        transition: Arc<dyn InfoTransition<R>>,
    ) -> Result<Self> {
        if lattices.len() < 2 {
            return Err(invalid("lattices", "need grids for at least periods 0 and 1"));
        }
        let k = lattices[0].axes.len();
        if projection.len() != k {
            return Err(GcrError::LengthMismatch { expected: k, got: projection.len() });
        }
        for (t, l) in lattices.iter().enumerate() {
            if l.axes.len() != k || l.is_empty() {
                return Err(GcrError::Structure(format!("period {t} grid has inconsistent axes")));
            }
        }
        if initial.coords.len() != k || initial.state >= lattices[0].states {
            return Err(invalid("initial", "initial information state does not match the grids"));
        }
        let space = Self { lattices, projection, initial, transition };
        let on_grid = space.lattices[0].decode(space.locate(0, &space.initial));
        let close = on_grid
            .coords
            .iter()
            .zip(&space.initial.coords)
            .all(|(a, b)| (*a - *b).abs() <= R::lit(1e-12) * (R::one() + b.abs()));
        if !close {
            return Err(invalid("initial", format!("{} is not a period-0 grid point", space.initial)));
        }
        Ok(space)
    }

    /// Space with the same grid for every period of a model with horizon `T`.
    pub fn uniform(
        num_states: usize,
        horizon: usize,
        axes: Vec<Axis<R>>,
        projection: Vec<Projection>,
        initial: InfoState<R>,
        transition: Arc<dyn InfoTransition<R>>,
    ) -> Result<Self> {
        let lattice = Lattice::new(num_states, axes);
        Self::new(vec![lattice; horizon + 2], projection, initial, transition)
    }

    /// Plain state space (no augmenting coordinates).
    pub fn plain(num_states: usize, horizon: usize, initial_state: usize) -> Result<Self> {
        Self::uniform(
            num_states,
            horizon,
            Vec::new(),
            Vec::new(),
            InfoState::plain(initial_state),
            Arc::new(NoAugmentation),
        )
    }

    /// Horizon `T`; grids exist for periods `0..=T+1`.
    pub fn horizon(&self) -> usize {
        self.lattices.len() - 2
    }

    pub fn lattice(&self, t: usize) -> &Lattice<R> {
        &self.lattices[t]
    }

    pub fn projection(&self) -> &[Projection] {
        &self.projection
    }

    pub fn initial(&self) -> &InfoState<R> {
        &self.initial
    }

    pub fn num_axes(&self) -> usize {
        self.projection.len()
    }

    pub fn transition_fn(&self) -> &dyn InfoTransition<R> {
        &*self.transition
    }

    /// `g_t` before projection: next state from the stage, coordinates from the transition.
    pub fn transition(
        &self,
        t: usize,
        y: &InfoState<R>,
        stage: &Stage<'_, R>,
        outcome: usize,
        z: R,
        aux: Aux<R>,
    ) -> InfoState<R> {
        let mut coords = Coords::new();
        self.transition.advance(t, y, stage, outcome, z, aux, &mut coords);
        InfoState { state: stage.next_states[outcome], coords }
    }

    /// Index of the nearest period-`t` grid point.
    pub fn locate(&self, t: usize, y: &InfoState<R>) -> usize {
        let lattice = &self.lattices[t];
        let mut idx: SmallVec<[usize; 2]> = SmallVec::new();
        for (axis, &c) in lattice.axes.iter().zip(&y.coords) {
            idx.push(axis.nearest(c).0);
        }
        lattice.index(y.state, &idx)
    }

    /// Calls `f(index, weight)` for each grid point contributing to the value at
    /// `(state, coords)` in period `t`, honoring the per-axis projection mode.
    /// Returns true when any coordinate was clamped to the grid boundary.
    #[inline]
    pub fn for_each_corner(&self, t: usize, state: usize, coords: &[R], mut f: impl FnMut(usize, R)) -> bool {
        let lattice = &self.lattices[t];
        let k = lattice.axes.len();
        let mut lo: SmallVec<[usize; 2]> = SmallVec::new();
        let mut hi: SmallVec<[usize; 2]> = SmallVec::new();
        let mut w: SmallVec<[R; 2]> = SmallVec::new();
        let mut clamped = false;
        let mut split = 0u32;
        for (j, axis) in lattice.axes.iter().enumerate() {
            match self.projection[j] {
                Projection::Nearest => {
                    let (i, c) = axis.nearest(coords[j]);
                    lo.push(i);
                    hi.push(i);
                    w.push(R::zero());
                    clamped |= c;
                }
                Projection::Linear => {
                    let (a, b, wb, c) = axis.bracket(coords[j]);
                    lo.push(a);
                    hi.push(b);
                    w.push(wb);
                    clamped |= c;
                    if a != b {
                        split |= 1 << j;
                    }
                }
            }
        }
        if split == 0 {
            f(lattice.index(state, &lo), R::one());
            return clamped;
        }
        let mut idx: SmallVec<[usize; 2]> = SmallVec::from_elem(0, k);
        for mask in 0u32..(1 << k) {
            if mask & !split != 0 {
                continue;
            }
            let mut weight = R::one();
            for j in 0..k {
                if mask & (1 << j) != 0 {
                    idx[j] = hi[j];
                    weight = weight * w[j];
                } else {
                    idx[j] = lo[j];
                    if split & (1 << j) != 0 {
                        weight = weight * (R::one() - w[j]);
                    }
                }
            }
            if weight > R::zero() {
                f(lattice.index(state, &idx), weight);
            }
        }
        clamped
    }

    /// Reads a period-`t` premium table at an arbitrary information state.
    pub fn read(&self, t: usize, values: &[crate::Premium<R>], state: usize, coords: &[R]) -> crate::Premium<R> {
        let mut acc = R::zero();
        let mut infeasible = false;
        self.for_each_corner(t, state, coords, |i, w| {
            let v = values[i];
            if v.is_feasible() {
                acc = acc + w * v.raw();
            } else {
                infeasible = true;
            }
        });
        if infeasible {
            crate::Premium::infeasible()
        } else {
            crate::Premium::new(acc)
        }
    }

    /// `sigma_t(h_t)`: replays the history through `g_t`, using the recorded
    /// `(z, aux)` of each elapsed period.
    pub fn compress_history(
        &self,
        model: &MdpModel<R>,
        h: &History,
        financial: &[(R, Aux<R>)],
    ) -> Result<InfoState<R>> {
        if financial.len() != h.len() {
            return Err(GcrError::LengthMismatch { expected: h.len(), got: financial.len() });
        }
        if h.initial_state != self.initial.state {
            return Err(invalid("history", "initial state differs from the space's initial state"));
        }
        let mut y = self.initial.clone();
        for (t, (&(a, xi), &(z, aux))) in h.steps.iter().zip(financial).enumerate() {
            model.step(t, y.state, a, xi)?;
            let stage = Stage::new(model, t, y.state, a);
            y = self.transition(t, &y, &stage, xi, z, aux);
        }
        Ok(y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nearest_ties_go_down() {
        let a = Axis::<f64>::integers(-2, 2).unwrap();
        assert_eq!(a.nearest(0.5), (2, false));
        assert_eq!(a.nearest(0.51), (3, false));
        assert_eq!(a.nearest(-7.0), (0, true));
        assert_eq!(a.nearest(9.0), (4, true));
        let e = Axis::explicit(vec![0.0, 1.0, 3.0]).unwrap();
        assert_eq!(e.nearest(2.0).0, 1);
        assert_eq!(e.nearest(2.01).0, 2);
        assert_eq!(e.nearest(-0.4).0, 0);
    }

    #[test]
    fn bracket_weights() {
        let a = Axis::<f64>::uniform(0.0, 0.5, 5).unwrap();
        let (lo, hi, w, _) = a.bracket(0.6);
        assert_eq!((lo, hi), (1, 2));
        assert!((w - 0.2).abs() < 1e-12);
        assert_eq!(a.bracket(1.0), (2, 2, 0.0, false));
        let e = Axis::<f64>::explicit(vec![0.0, 1.0, 3.0]).unwrap();
        let (lo, hi, w, _) = e.bracket(2.5);
        assert_eq!((lo, hi), (1, 2));
        assert!((w - 0.75).abs() < 1e-12);
    }

    #[test]
    fn lattice_roundtrip() {
        let l = Lattice::new(3, vec![Axis::<f64>::integers(0, 3).unwrap(), Axis::explicit(vec![0.5, 1.0]).unwrap()]);
        assert_eq!(l.len(), 24);
        for i in 0..l.len() {
            let y = l.decode(i);
            let idx: Vec<usize> = l.axes().iter().zip(&y.coords).map(|(a, c)| a.nearest(*c).0).collect();
            assert_eq!(l.index(y.state, &idx), i);
        }
    }
}
