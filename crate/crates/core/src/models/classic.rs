use std::sync::Arc;

use crate::error::{invalid, Result};
use crate::frontier::{Aux, DecisionGrid, InfoState, InfoStateSpace, NextPremiums, RiskFrontierStep, Stage};
use crate::mdp::MdpModel;
use crate::models::{expect_premium, FrontierModel, OneStepRiskSpec};
use crate::premium::Premium;
use crate::real::Real;

/// Negative expected total payoff: `φ_t >= E[Φ̄_{t+1} - X_t]`.
#[derive(Clone, Debug)]
pub struct RiskNeutral<R> {
    grid: DecisionGrid<R>,
}

impl<R: Real> Default for RiskNeutral<R> {
    fn default() -> Self {
        Self { grid: DecisionGrid::zero() }
    }
}

impl<R: Real> RiskFrontierStep<R> for RiskNeutral<R> {
    fn name(&self) -> &str {
        "risk_neutral"
    }

    fn decision_grid(&self, _: usize, _: &InfoState<R>) -> &DecisionGrid<R> {
        &self.grid
    }

    fn min_premium(
        &self,
        _: usize,
        _: &InfoState<R>,
        stage: &Stage<'_, R>,
        _: R,
        _: Aux<R>,
        next: &dyn NextPremiums<R>,
    ) -> Premium<R> {
        expect_premium(stage, |i| next.nominal(i).plus(-stage.payoffs[i]))
    }

    fn terminal_premium(&self, _: &InfoState<R>) -> Premium<R> {
        Premium::new(R::zero())
    }

    fn first_feasible_disbursement(&self) -> bool {
        true
    }
}

pub fn build_risk_neutral<R: Real>(model: &MdpModel<R>) -> Result<FrontierModel<R, RiskNeutral<R>>> {
    Ok(FrontierModel {
        step: Arc::new(RiskNeutral::default()),
        space: InfoStateSpace::plain(model.num_states(), model.horizon(), model.initial_state())?,
    })
}

/// Exponential moment of the cumulative payoff: `φ_t >= E[exp(-γ X_t) Φ̄_{t+1}]`, `Φ_{T+1} = 1`.
#[derive(Clone, Debug)]
pub struct Entropic<R> {
    gamma: R,
    grid: DecisionGrid<R>,
}

impl<R: Real> Entropic<R> {
    pub fn new(gamma: R) -> Result<Self> {
        if !(gamma > R::zero()) || !gamma.is_finite() {
            return Err(invalid("gamma", format!("must be positive, got {gamma}")));
        }
        Ok(Self { gamma, grid: DecisionGrid::zero() })
    }

    pub fn gamma(&self) -> R {
        self.gamma
    }
}

impl<R: Real> RiskFrontierStep<R> for Entropic<R> {
    fn name(&self) -> &str {
        "entropic"
    }

    fn decision_grid(&self, _: usize, _: &InfoState<R>) -> &DecisionGrid<R> {
        &self.grid
    }

    fn min_premium(
        &self,
        _: usize,
        _: &InfoState<R>,
        stage: &Stage<'_, R>,
        _: R,
        _: Aux<R>,
        next: &dyn NextPremiums<R>,
    ) -> Premium<R> {
        expect_premium(stage, |i| {
            let v = next.nominal(i);
            if v.is_feasible() {
                Premium::new((-self.gamma * stage.payoffs[i]).exp() * v.raw())
            } else {
                v
            }
        })
    }

    fn terminal_premium(&self, _: &InfoState<R>) -> Premium<R> {
        Premium::new(R::one())
    }

    fn first_feasible_disbursement(&self) -> bool {
        true
    }
}

/// Converts the solver's exponential-moment value into the entropic risk `-(1/γ) log v`.
pub fn entropic_risk<R: Real>(value: R, gamma: R) -> R {
    -value.ln() / gamma
}

pub fn build_entropic<R: Real>(model: &MdpModel<R>, gamma: R) -> Result<FrontierModel<R, Entropic<R>>> {
    Ok(FrontierModel {
        step: Arc::new(Entropic::new(gamma)?),
        space: InfoStateSpace::plain(model.num_states(), model.horizon(), model.initial_state())?,
    })
}

/// Nested composition of one-step coherent risk measures: `φ_t = ρ_t(X_t - Φ̄_{t+1})`.
#[derive(Clone, Debug)]
pub struct Nested<R> {
    specs: Vec<OneStepRiskSpec<R>>,
    grid: DecisionGrid<R>,
}

impl<R: Real> Nested<R> {
    /// One spec per period, or a single spec used for every period.
    pub fn new(specs: Vec<OneStepRiskSpec<R>>) -> Result<Self> {
        if specs.is_empty() {
            return Err(invalid("specs", "need at least one one-step risk spec"));
        }
        for s in &specs {
            s.validate()?;
        }
        Ok(Self { specs, grid: DecisionGrid::zero() })
    }

    pub fn spec(&self, t: usize) -> &OneStepRiskSpec<R> {
        &self.specs[t.min(self.specs.len() - 1)]
    }
}

impl<R: Real> RiskFrontierStep<R> for Nested<R> {
    fn name(&self) -> &str {
        "nested"
    }

    fn decision_grid(&self, _: usize, _: &InfoState<R>) -> &DecisionGrid<R> {
        &self.grid
    }

    fn min_premium(
        &self,
        t: usize,
        _: &InfoState<R>,
        stage: &Stage<'_, R>,
        _: R,
        _: Aux<R>,
        next: &dyn NextPremiums<R>,
    ) -> Premium<R> {
        let mut y = vec![R::zero(); stage.payoffs.len()];
        for &i in stage.dist.support() {
            let v = next.nominal(i);
            if !v.is_feasible() {
                return Premium::infeasible();
            }
            y[i] = stage.payoffs[i] - v.raw();
        }
        Premium::new(self.spec(t).risk(stage.dist, &y))
    }

    fn terminal_premium(&self, _: &InfoState<R>) -> Premium<R> {
        Premium::new(R::zero())
    }

    fn first_feasible_disbursement(&self) -> bool {
        true
    }
}

pub fn build_nested<R: Real>(
    model: &MdpModel<R>,
    specs: Vec<OneStepRiskSpec<R>>,
) -> Result<FrontierModel<R, Nested<R>>> {
    Ok(FrontierModel {
        step: Arc::new(Nested::new(specs)?),
        space: InfoStateSpace::plain(model.num_states(), model.horizon(), model.initial_state())?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontier::min_stage_premium;
    use crate::mdp::{make_distribution, FiniteDistribution};

    fn p(v: f64) -> Premium<f64> {
        Premium::new(v)
    }

    #[test]
    fn risk_neutral_stage() {
        let rn = RiskNeutral::default();
        let y = InfoState::plain(0);
        let det = FiniteDistribution::point_mass(1, 0).unwrap();
        let u = make_distribution(&[1.0, 1.0]).unwrap();
        let r = |d: &FiniteDistribution<f64>, x: &[f64], n: &[Premium<f64>]| {
            min_stage_premium(&rn, 0, &y, d, x, 0.0, Aux::None, n).unwrap()
        };
        assert_eq!(r(&det, &[2.0], &[p(0.0)]), p(-2.0));
        assert_eq!(r(&u, &[0.0, 2.0], &[p(3.0), p(3.0)]), p(2.0));
        assert_eq!(r(&u, &[0.0, 2.0], &[p(0.0), p(0.0)]), p(-1.0));
        assert_eq!(r(&u, &[0.0, 2.0], &[p(5.0), p(5.0)]), p(4.0));
        assert!(min_stage_premium(&rn, 0, &y, &u, &[f64::NAN, 0.0], 0.0, Aux::None, &[p(0.0), p(0.0)]).is_err());
    }

    #[test]
    fn entropic_stage() {
        let y = InfoState::plain(0);
        let e1 = Entropic::new(1.0).unwrap();
        let u = make_distribution(&[1.0, 1.0]).unwrap();
        let det = FiniteDistribution::point_mass(1, 0).unwrap();
        let v = min_stage_premium(&e1, 0, &y, &u, &[0.0, 2f64.ln()], 0.0, Aux::None, &[p(1.0), p(1.0)]).unwrap();
        assert!((v.raw() - 0.75).abs() < 1e-15);
        let v = min_stage_premium(&e1, 0, &y, &det, &[0.0], 0.0, Aux::None, &[p(1.0)]).unwrap();
        assert_eq!(v, p(1.0));
        let e2 = Entropic::new(2.0).unwrap();
        let v = min_stage_premium(&e2, 0, &y, &det, &[1.0], 0.0, Aux::None, &[p(1.0)]).unwrap();
        assert!((v.raw() - (-2f64).exp()).abs() < 1e-15);
        assert!(Entropic::new(0.0).is_err());
    }

    #[test]
    fn nested_stage() {
        let y = InfoState::plain(0);
        let det = FiniteDistribution::point_mass(1, 0).unwrap();
        let n = Nested::new(vec![OneStepRiskSpec::Cvar { alpha: 0.4 }]).unwrap();
        assert_eq!(min_stage_premium(&n, 0, &y, &det, &[3.0], 0.0, Aux::None, &[p(5.0)]).unwrap(), p(2.0));
        let u = make_distribution(&[1.0, 1.0]).unwrap();
        let v = min_stage_premium(&n, 0, &y, &u, &[0.0, 2.0], 0.0, Aux::None, &[p(0.0), p(0.0)]).unwrap();
        assert_eq!(v.raw(), 0.0);
        let e = Nested::new(vec![OneStepRiskSpec::Expectation]).unwrap();
        let rn = RiskNeutral::default();
        let x = [1.5, -2.0];
        let next = [p(0.25), p(4.0)];
        assert_eq!(
            min_stage_premium(&e, 0, &y, &u, &x, 0.0, Aux::None, &next).unwrap(),
            min_stage_premium(&rn, 0, &y, &u, &x, 0.0, Aux::None, &next).unwrap()
        );
        assert!(Nested::<f64>::new(vec![OneStepRiskSpec::Cvar { alpha: 1.5 }]).is_err());
    }
}
