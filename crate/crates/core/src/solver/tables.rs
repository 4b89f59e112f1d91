use crate::error::{GcrError, Result};
use crate::frontier::{Decision, InfoState, InfoStateSpace};
use crate::premium::Premium;
use crate::real::Real;

/// `V̄_t` on each period's grid, periods `0..=T+1` (the last row is terminal).
#[derive(Clone, Debug, PartialEq)]
pub struct ValueTable<R> {
    rows: Vec<Vec<Premium<R>>>,
}

impl<R: Real> ValueTable<R> {
    pub fn from_rows(rows: Vec<Vec<Premium<R>>>) -> Self {
        Self { rows }
    }

    pub fn rows(&self) -> &[Vec<Premium<R>>] {
        &self.rows
    }

    pub fn row(&self, t: usize) -> &[Premium<R>] {
        &self.rows[t]
    }

    pub fn row_mut(&mut self, t: usize) -> &mut [Premium<R>] {
        &mut self.rows[t]
    }

    pub fn get(&self, t: usize, index: usize) -> Premium<R> {
        self.rows[t][index]
    }

    /// Value at the grid point nearest to `y`.
    pub fn at(&self, space: &InfoStateSpace<R>, t: usize, y: &InfoState<R>) -> Premium<R> {
        self.rows[t][space.locate(t, y)]
    }

    pub(crate) fn check_shape(&self, space: &InfoStateSpace<R>) -> Result<()> {
        let periods = space.horizon() + 2;
        if self.rows.len() != periods {
            return Err(GcrError::Structure(format!("value table has {} rows, expected {periods}", self.rows.len())));
        }
        for (t, row) in self.rows.iter().enumerate() {
            if row.len() != space.lattice(t).len() {
                return Err(GcrError::Structure(format!(
                    "value table row {t} has {} entries, grid has {}",
                    row.len(),
                    space.lattice(t).len()
                )));
            }
        }
        Ok(())
    }
}

/// Decision per grid point for periods `0..=T`; `None` where no decision is feasible.
#[derive(Clone, Debug, PartialEq)]
pub struct Policy<R> {
    rows: Vec<Vec<Option<Decision<R>>>>,
}

impl<R: Real> Policy<R> {
    pub fn from_rows(rows: Vec<Vec<Option<Decision<R>>>>) -> Self {
        Self { rows }
    }

    pub fn rows(&self) -> &[Vec<Option<Decision<R>>>] {
        &self.rows
    }

    pub fn get(&self, t: usize, index: usize) -> Option<Decision<R>> {
        self.rows.get(t).and_then(|r| r.get(index)).copied().flatten()
    }

    pub fn set(&mut self, t: usize, index: usize, d: Option<Decision<R>>) {
        self.rows[t][index] = d;
    }

    /// Decision at the grid point nearest to `y`.
    pub fn at(&self, space: &InfoStateSpace<R>, t: usize, y: &InfoState<R>) -> Option<Decision<R>> {
        self.get(t, space.locate(t, y))
    }

    pub(crate) fn check_shape(&self, space: &InfoStateSpace<R>) -> Result<()> {
        let periods = space.horizon() + 1;
        if self.rows.len() != periods {
            return Err(GcrError::Structure(format!("policy has {} rows, expected {periods}", self.rows.len())));
        }
        for (t, row) in self.rows.iter().enumerate() {
            if row.len() != space.lattice(t).len() {
                return Err(GcrError::PolicyHole { t, state: format!("row of length {}", row.len()) });
            }
        }
        Ok(())
    }
}
