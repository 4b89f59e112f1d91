//! Catalog of compressed risk frontiers. Each builder returns the step together
//! with the information-state space it runs on.

mod acceptance;
mod capital;
mod classic;
pub(crate) mod cvar;
mod functions;
mod shortfall;

use std::sync::Arc;

pub use acceptance::{Acceptance, AcceptanceSpec};
pub use capital::{
    build_consumption, build_consumption_excess, build_growth, build_standard_cr, Consumption, ConsumptionConfig,
    ConsumptionExcess, ConsumptionExcessConfig, Growth, GrowthConfig, StandardCr, StandardCrConfig, TerminalWealth,
};
pub use classic::{build_entropic, build_nested, build_risk_neutral, entropic_risk, Entropic, Nested, RiskNeutral};
pub use cvar::{cvar_variational, tv_maximize, CvarForm, OneStepRiskSpec};
pub use functions::ScalarFn;
pub use shortfall::{
    build_cvar_shortfall, build_expected_utility, build_quantile, build_worst_case, threshold_grid, CvarDecomposition,
    CvarShortfall, CvarShortfallConfig, ExpectedUtility, ExpectedUtilityConfig, LevelUpdate, Quantile, QuantileConfig,
    WorstCase, WorstCaseConfig,
};

use crate::frontier::{InfoStateSpace, Stage};
use crate::premium::Premium;
use crate::real::Real;

/// A built frontier step with its information-state space.
#[derive(Clone, Debug)]
pub struct FrontierModel<R: Real, S> {
    pub step: Arc<S>,
    pub space: InfoStateSpace<R>,
}

/// `E[f(ξ)]` over the support; infeasible if any supported term is.
#[inline]
pub(crate) fn expect_premium<R: Real>(stage: &Stage<'_, R>, mut f: impl FnMut(usize) -> Premium<R>) -> Premium<R> {
    let mut acc = R::zero();
    for &i in stage.dist.support() {
        let v = f(i);
        if !v.is_feasible() {
            return Premium::infeasible();
        }
        acc = acc + stage.dist.prob(i) * v.raw();
    }
    Premium::new(acc)
}

/// `max f(ξ)` over the support; infeasible if any supported term is.
#[inline]
pub(crate) fn max_premium<R: Real>(stage: &Stage<'_, R>, mut f: impl FnMut(usize) -> Premium<R>) -> Premium<R> {
    let mut best = R::neg_infinity();
    for &i in stage.dist.support() {
        let v = f(i);
        if !v.is_feasible() {
            return Premium::infeasible();
        }
        best = best.max(v.raw());
    }
    Premium::new(best)
}

pub(crate) fn sorted_grid<R: Real>(name: &'static str, mut v: Vec<R>) -> crate::error::Result<Vec<R>> {
    if v.is_empty() || v.iter().any(|x| !x.is_finite()) {
        return Err(crate::error::invalid(name, "grid must be nonempty and finite"));
    }
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v.dedup();
    Ok(v)
}
