use std::cmp::Ordering;
use std::fmt;

use crate::real::Real;

/// A stage premium, or `INFEASIBLE` (encoded as `+inf`) when no premium is acceptable.
///
/// Infeasibility absorbs addition and loses every minimum against a real value.
#[derive(Clone, Copy, PartialEq, PartialOrd, Debug)]
#[repr(transparent)]
pub struct Premium<R>(R);

impl<R: Real> Premium<R> {
    pub fn infeasible() -> Self {
        Premium(R::infinity())
    }

    /// Wraps a value; `+inf` maps to `INFEASIBLE`.
    pub fn new(v: R) -> Self {
        debug_assert!(!v.is_nan(), "premium must not be NaN");
        Premium(v)
    }

    pub fn is_feasible(self) -> bool {
        self.0 < R::infinity()
    }

    pub fn value(self) -> Option<R> {
        self.is_feasible().then_some(self.0)
    }

    /// The raw scalar, `+inf` when infeasible.
    pub fn raw(self) -> R {
        self.0
    }

    pub fn min(self, other: Self) -> Self {
        if other.0 < self.0 {
            other
        } else {
            self
        }
    }

    pub fn plus(self, x: R) -> Self {
        if self.is_feasible() {
            Premium(self.0 + x)
        } else {
            self
        }
    }

    pub fn total_cmp(&self, other: &Self) -> Ordering {
        self.0.partial_cmp(&other.0).unwrap_or(Ordering::Equal)
    }

    /// Absolute difference, with two infeasible values counting as equal.
    pub fn gap(self, other: Self) -> R {
        match (self.is_feasible(), other.is_feasible()) {
            (true, true) => (self.0 - other.0).abs(),
            (false, false) => R::zero(),
            _ => R::infinity(),
        }
    }
}

impl<R: Real> From<R> for Premium<R> {
    fn from(v: R) -> Self {
        Premium::new(v)
    }
}

impl<R: Real> fmt::Display for Premium<R> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.value() {
            Some(v) => write!(f, "{v}"),
            None => f.write_str("INFEASIBLE"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn infeasible_absorbs_and_loses_minimum() {
        let inf = Premium::<f64>::infeasible();
        assert!(!inf.plus(3.0).is_feasible());
        assert_eq!(inf.min(Premium::new(2.0)).value(), Some(2.0));
        assert_eq!(Premium::new(2.0).min(inf).value(), Some(2.0));
        assert!(Premium::new(1e300) < inf);
        assert_eq!(inf.gap(inf), 0.0);
        assert_eq!(inf.to_string(), "INFEASIBLE");
    }
}
