use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::real::Real;

/// Scalar utility / dis-utility functions used by the shortfall and consumption models.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScalarFn<R> {
    /// `slope * x + intercept`
    Linear { slope: R, intercept: R },
    /// `scale * x^2`
    Quadratic { scale: R },
    /// `exp(rate * x) - 1`
    Exponential { rate: R },
    /// `(1 - exp(-rate * x)) / rate`, concave and increasing
    ConcaveExponential { rate: R },
    /// `slope * max(x - knot, 0)`
    Hinge { knot: R, slope: R },
    /// Linear interpolation through `(x, y)` points, extended linearly past the ends.
    PiecewiseLinear { points: Vec<(R, R)> },
}

impl<R: Real> ScalarFn<R> {
    pub fn identity() -> Self {
        ScalarFn::Linear { slope: R::one(), intercept: R::zero() }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ScalarFn::Exponential { rate } | ScalarFn::ConcaveExponential { rate } if !(*rate > R::zero()) => {
                Err(invalid("utility.rate", "must be positive"))
            }
            ScalarFn::PiecewiseLinear { points } => {
                if points.len() < 2 {
                    return Err(invalid("utility.points", "need at least two points"));
                }
                if points.windows(2).any(|w| !(w[1].0 > w[0].0)) {
                    return Err(invalid("utility.points", "x coordinates must increase"));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn eval(&self, x: R) -> R {
        match self {
            ScalarFn::Linear { slope, intercept } => *slope * x + *intercept,
            ScalarFn::Quadratic { scale } => *scale * x * x,
            ScalarFn::Exponential { rate } => (*rate * x).exp() - R::one(),
            ScalarFn::ConcaveExponential { rate } => (R::one() - (-*rate * x).exp()) / *rate,
            ScalarFn::Hinge { knot, slope } => *slope * (x - *knot).max(R::zero()),
            ScalarFn::PiecewiseLinear { points } => {
                let n = points.len();
                let k = points.partition_point(|p| p.0 <= x).clamp(1, n - 1);
                let (x0, y0) = points[k - 1];
                let (x1, y1) = points[k];
                y0 + (y1 - y0) * (x - x0) / (x1 - x0)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evaluations() {
        assert_eq!(ScalarFn::<f64>::identity().eval(3.0), 3.0);
        assert_eq!(ScalarFn::Quadratic { scale: 1.0 }.eval(2.0), 4.0);
        assert_eq!(ScalarFn::Hinge { knot: 1.0, slope: 2.0 }.eval(3.0), 4.0);
        let pl = ScalarFn::PiecewiseLinear { points: vec![(0.0, 0.0), (1.0, 2.0), (2.0, 3.0)] };
        assert_eq!(pl.eval(0.5), 1.0);
        assert_eq!(pl.eval(3.0), 4.0);
        assert_eq!(pl.eval(-1.0), -2.0);
        assert!(ScalarFn::<f64>::Exponential { rate: 0.0 }.validate().is_err());
    }
}
