use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::frontier::Stage;
use crate::models::cvar::{cvar_variational, CvarForm};
use crate::real::Real;

/// Per-period acceptance test on `[X_t | s_t] + shift`, where the shift is the
/// disbursement (plus current wealth for wealth-dependent models).
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AcceptanceSpec<R> {
    #[default]
    None,
    /// `E[X] + shift >= b`.
    ExpectationFloor { b: R },
    /// `X(ξ) + shift >= b` for every outcome with positive mass.
    PointwiseFloor { b: R },
    /// Payoff-form `CVaR_α(X) + shift >= b`.
    CvarFloor { alpha: R, b: R },
}

fn tol<R: Real>(b: R) -> R {
    R::lit(1e-12) * (R::one() + b.abs())
}

impl<R: Real> AcceptanceSpec<R> {
    pub fn validate(&self) -> Result<()> {
        match *self {
            AcceptanceSpec::CvarFloor { alpha, b } => {
                if !(alpha > R::zero() && alpha <= R::one()) {
                    return Err(invalid("acceptance.alpha", format!("must lie in (0, 1], got {alpha}")));
                }
                if !b.is_finite() {
                    return Err(invalid("acceptance.b", "must be finite"));
                }
            }
            AcceptanceSpec::ExpectationFloor { b } | AcceptanceSpec::PointwiseFloor { b } if !b.is_finite() => {
                return Err(invalid("acceptance.b", "must be finite"));
            }
            _ => {}
        }
        Ok(())
    }

    /// Smallest shift that makes the stage payoff acceptable (`-inf` when any shift works).
    pub fn required_shift(&self, stage: &Stage<'_, R>) -> R {
        match *self {
            AcceptanceSpec::None => R::neg_infinity(),
            AcceptanceSpec::ExpectationFloor { b } => b - stage.mean_payoff,
            AcceptanceSpec::PointwiseFloor { b } => {
                let worst = stage.dist.support().iter().map(|&i| stage.payoffs[i]).fold(R::infinity(), R::min);
                b - worst
            }
            AcceptanceSpec::CvarFloor { alpha, b } => {
                let c =
                    cvar_variational(stage.dist, stage.payoffs, alpha, CvarForm::Payoff).expect("validated CVaR level");
                b - c
            }
        }
    }

    pub fn accepts(&self, stage: &Stage<'_, R>, shift: R) -> bool {
        match *self {
            AcceptanceSpec::None => true,
            AcceptanceSpec::ExpectationFloor { b }
            | AcceptanceSpec::PointwiseFloor { b }
            | AcceptanceSpec::CvarFloor { b, .. } => shift >= self.required_shift(stage) - tol(b),
        }
    }
}

/// Acceptance specs by period; a single spec applies to every period.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Acceptance<R> {
    specs: Vec<AcceptanceSpec<R>>,
}

impl<R: Real> Acceptance<R> {
    pub fn every_period(spec: AcceptanceSpec<R>) -> Result<Self> {
        Self::per_period(vec![spec])
    }

    pub fn per_period(specs: Vec<AcceptanceSpec<R>>) -> Result<Self> {
        if specs.is_empty() {
            return Err(invalid("acceptance", "need at least one spec"));
        }
        for s in &specs {
            s.validate()?;
        }
        Ok(Self { specs })
    }

    pub fn none() -> Self {
        Self { specs: vec![AcceptanceSpec::None] }
    }

    pub fn spec(&self, t: usize) -> &AcceptanceSpec<R> {
        &self.specs[t.min(self.specs.len() - 1)]
    }

    pub fn accepts(&self, stage: &Stage<'_, R>, shift: R) -> bool {
        self.spec(stage.t).accepts(stage, shift)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::make_distribution;

    #[test]
    fn floors() {
        let d = make_distribution(&[1.0, 1.0]).unwrap();
        let x = [-2.0, 4.0];
        let ns = [0, 0];
        let stage = Stage::detached(0, 0, &x, &ns, &d);
        let e = AcceptanceSpec::ExpectationFloor { b: 0.0 };
        assert!(!e.accepts(&stage, -1.5));
        assert!(e.accepts(&stage, -1.0));
        let p = AcceptanceSpec::PointwiseFloor { b: 0.0 };
        assert!(!p.accepts(&stage, 1.0));
        assert!(p.accepts(&stage, 2.0));
        let c = AcceptanceSpec::CvarFloor { alpha: 0.5, b: 0.0 };
        assert_eq!(c.required_shift(&stage), 2.0);
        assert!(AcceptanceSpec::None.accepts(&stage, -1e9));
        assert!(AcceptanceSpec::CvarFloor { alpha: 0.0, b: 0.0 }.validate().is_err());
    }
}
