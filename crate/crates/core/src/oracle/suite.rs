//! Seeded tiny-instance suites that pit the solver against the brute-force oracle.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::frontier::{Axis, Projection, RiskFrontierStep};
use crate::mdp::{Dims, FiniteDistribution, MdpModel};
use crate::models::{
    build_consumption, build_consumption_excess, build_cvar_shortfall, build_entropic, build_expected_utility,
    build_growth, build_nested, build_quantile, build_risk_neutral, build_standard_cr, build_worst_case,
    cvar_variational, entropic_risk, threshold_grid, Acceptance, AcceptanceSpec, ConsumptionConfig,
    ConsumptionExcessConfig, CvarDecomposition, CvarForm, CvarShortfallConfig, ExpectedUtilityConfig, FrontierModel,
    GrowthConfig, OneStepRiskSpec, QuantileConfig, ScalarFn, StandardCrConfig, TerminalWealth, WorstCaseConfig,
};
use crate::oracle::{
    brute_force_optimum, check_monotonicity, check_time_consistency, classical_backward_induction, direct_objective,
    expand_leaves, random_distribution, random_model, random_stream, sorted_tail_cvar, EnumerationBudget,
    HistoryPolicy, InstanceCaps, MonotonicityReport, ObjectiveSpec, TimeConsistencyReport,
};
use crate::premium::Premium;
use crate::real::Real;
use crate::solver::solve;

/// Models covered by the oracle-equivalence suite.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuiteModel {
    RiskNeutral,
    Entropic,
    NestedCvar,
    ExpectedUtility,
    CvarShortfall,
    MaxShortfall,
}

impl SuiteModel {
    pub const ALL: [SuiteModel; 6] = [
        SuiteModel::RiskNeutral,
        SuiteModel::Entropic,
        SuiteModel::NestedCvar,
        SuiteModel::ExpectedUtility,
        SuiteModel::CvarShortfall,
        SuiteModel::MaxShortfall,
    ];

    pub fn label(self) -> &'static str {
        match self {
            SuiteModel::RiskNeutral => "risk_neutral",
            SuiteModel::Entropic => "entropic",
            SuiteModel::NestedCvar => "nested_cvar",
            SuiteModel::ExpectedUtility => "expected_utility",
            SuiteModel::CvarShortfall => "cvar_shortfall",
            SuiteModel::MaxShortfall => "max_shortfall",
        }
    }
}

#[derive(Clone, Debug)]
pub struct CaseOutcome<R> {
    pub model: SuiteModel,
    pub seed: u64,
    pub dims: Dims,
    pub horizon: usize,
    pub z_grid: Vec<R>,
    /// Solver optimum `V̄_0(y_0)`.
    pub dp: Premium<R>,
    /// Minimum of the direct objective over all history-dependent policies.
    pub oracle: Premium<R>,
    /// Direct objective of the solver's greedy policy lifted to histories.
    pub greedy: Premium<R>,
    pub time_consistency: TimeConsistencyReport<R>,
}

impl<R: Real> CaseOutcome<R> {
    /// `|dp - oracle|`, zero when both are infeasible.
    pub fn gap(&self) -> R {
        self.dp.gap(self.oracle)
    }
}

fn pick<T: Copy>(rng: &mut impl Rng, xs: &[T]) -> T {
    *xs.choose(rng).expect("nonempty choice")
}

fn lit<R: Real>(xs: &[f64]) -> Vec<R> {
    xs.iter().map(|x| R::lit(*x)).collect()
}

fn random_z_grid<R: Real>(rng: &mut impl Rng) -> Vec<R> {
    let k = rng.gen_range(1..=3);
    let mut zs: Vec<f64> = [0.0, 0.5, 1.0, 1.5, 2.0, 3.0].choose_multiple(rng, k).copied().collect();
    zs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    lit(&zs)
}

fn random_acceptance<R: Real>(rng: &mut impl Rng) -> Result<Acceptance<R>> {
    let spec = if rng.gen_bool(0.5) {
        AcceptanceSpec::ExpectationFloor { b: R::lit(pick(rng, &[-1.0, 0.0, 0.5, 1.0])) }
    } else {
        AcceptanceSpec::PointwiseFloor { b: R::lit(pick(rng, &[-3.0, -2.0, -1.0, 0.0])) }
    };
    Acceptance::every_period(spec)
}

fn finish<R: Real, S: RiskFrontierStep<R> + 'static>(
    kind: SuiteModel,
    seed: u64,
    model: MdpModel<R>,
    fm: FrontierModel<R, S>,
    objective: ObjectiveSpec<R>,
    z_grid: Vec<R>,
    acceptance: Acceptance<R>,
) -> Result<CaseOutcome<R>> {
    let sol = solve(&model, fm.step.as_ref(), &fm.space)?;
    let (oracle, _) = brute_force_optimum(&model, &objective, &z_grid, &acceptance, EnumerationBudget::default())?;
    let greedy = if sol.optimum.is_feasible() {
        let lifted = HistoryPolicy::from_table(&model, &fm.space, &sol.policy, (0, z_grid[0]), 1 << 20)?;
        direct_objective(&model, &lifted, &objective, &acceptance)?
    } else {
        Premium::infeasible()
    };
    let time_consistency = check_time_consistency(&model, fm.step.as_ref(), &fm.space, &sol.policy)?;
    Ok(CaseOutcome {
        model: kind,
        seed,
        dims: model.dims(),
        horizon: model.horizon(),
        z_grid,
        dp: sol.optimum,
        oracle,
        greedy,
        time_consistency,
    })
}

/// One seeded random instance of `kind` (`T <= 2`, `|S| <= 3`, `|A| <= 2`,
/// `|Ξ| <= 2`, `|z| <= 3`), solved both ways.
pub fn oracle_case<R: Real>(kind: SuiteModel, seed: u64) -> Result<CaseOutcome<R>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let model: MdpModel<R> = random_model(&mut rng, InstanceCaps::default())?;
    let periods = model.periods();
    match kind {
        SuiteModel::RiskNeutral => {
            let fm = build_risk_neutral(&model)?;
            finish(kind, seed, model, fm, ObjectiveSpec::NegExpectedTotal, vec![R::zero()], Acceptance::none())
        }
        SuiteModel::Entropic => {
            let gamma = R::lit(pick(&mut rng, &[0.25, 0.5, 1.0]));
            let fm = build_entropic(&model, gamma)?;
            finish(kind, seed, model, fm, ObjectiveSpec::Entropic { gamma }, vec![R::zero()], Acceptance::none())
        }
        SuiteModel::NestedCvar => {
            let specs: Vec<OneStepRiskSpec<R>> = (0..periods)
                .map(|_| match rng.gen_range(0..4) {
                    0 => OneStepRiskSpec::Expectation,
                    k => OneStepRiskSpec::Cvar { alpha: R::lit([0.3, 0.5, 0.8][k - 1]) },
                })
                .collect();
            let fm = build_nested(&model, specs.clone())?;
            finish(kind, seed, model, fm, ObjectiveSpec::Nested { specs }, vec![R::zero()], Acceptance::none())
        }
        SuiteModel::ExpectedUtility => {
            let zs = random_z_grid(&mut rng);
            let acceptance = random_acceptance(&mut rng)?;
            let utility = match rng.gen_range(0..3) {
                0 => ScalarFn::identity(),
                1 => ScalarFn::Quadratic { scale: R::one() },
                _ => ScalarFn::Exponential { rate: R::lit(0.3) },
            };
            let fm = build_expected_utility(
                &model,
                ExpectedUtilityConfig {
                    disutility: utility.clone(),
                    acceptance: acceptance.clone(),
                    disbursements: zs.clone(),
                    shortfall: Axis::explicit(threshold_grid(&zs, periods))?,
                    projection: Projection::Nearest,
                },
            )?;
            finish(kind, seed, model, fm, ObjectiveSpec::ExpectedUtilityOfShortfall { utility }, zs, acceptance)
        }
        SuiteModel::CvarShortfall => {
            let zs = random_z_grid(&mut rng);
            let acceptance = random_acceptance(&mut rng)?;
            let alpha = R::lit(pick(&mut rng, &[0.25, 0.5, 0.7]));
            let fm = build_cvar_shortfall(
                &model,
                CvarShortfallConfig {
                    alpha,
                    acceptance: acceptance.clone(),
                    disbursements: zs.clone(),
                    decomposition: CvarDecomposition::exact(&zs, periods)?,
                },
            )?;
            finish(kind, seed, model, fm, ObjectiveSpec::CvarOfShortfall { alpha }, zs, acceptance)
        }
        SuiteModel::MaxShortfall => {
            let zs = random_z_grid(&mut rng);
            let w0 = R::lit(pick(&mut rng, &[2.0, 4.0]));
            let b = R::lit(pick(&mut rng, &[0.0, 1.0, 2.0]));
            let acceptance = Acceptance::every_period(AcceptanceSpec::ExpectationFloor { b })?;
            let reach = R::lit(4.0 * periods as f64);
            let fm = build_growth(
                &model,
                GrowthConfig {
                    acceptance: acceptance.clone(),
                    disbursements: zs.clone(),
                    wealth: Axis::uniform(w0 - reach, R::lit(0.5), 16 * periods + 1)?,
                    max_shortfall: None,
                    projection: [Projection::Nearest; 2],
                    initial_wealth: w0,
                },
            )?;
            finish(kind, seed, model, fm, ObjectiveSpec::MaxShortfall { initial_wealth: w0 }, zs, acceptance)
        }
    }
}

/// Risk-neutral premium and negated classical value on one random instance.
pub fn classical_case<R: Real>(seed: u64) -> Result<(Premium<R>, R)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let model: MdpModel<R> =
        random_model(&mut rng, InstanceCaps { max_actions: 3, max_outcomes: 3, ..Default::default() })?;
    let fm = build_risk_neutral(&model)?;
    let sol = solve(&model, fm.step.as_ref(), &fm.space)?;
    let classical = classical_backward_induction(&model);
    Ok((sol.optimum, -classical[0][model.initial_state()]))
}

#[derive(Clone, Copy, Debug)]
pub struct EntropicOutcome<R> {
    pub gamma: R,
    /// Solver value `E[exp(-γ Σ X)]` at the root.
    pub dp: R,
    /// The same moment by expanding the tree under the solver's policy.
    pub direct: R,
    /// `-(1/γ) log` of the solver value.
    pub risk: R,
    /// `-(1/γ) log E[exp(-γ Σ X)]` evaluated from the leaves with a shifted log-sum-exp.
    pub risk_definition: R,
}

pub fn entropic_case<R: Real>(seed: u64) -> Result<EntropicOutcome<R>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let model: MdpModel<R> = random_model(&mut rng, InstanceCaps { max_outcomes: 3, ..Default::default() })?;
    let gamma = R::lit(pick(&mut rng, &[0.1, 0.5, 1.0]));
    let fm = build_entropic(&model, gamma)?;
    let sol = solve(&model, fm.step.as_ref(), &fm.space)?;
    let lifted = HistoryPolicy::from_table(&model, &fm.space, &sol.policy, (0, R::zero()), 1 << 20)?;
    let direct = direct_objective(&model, &lifted, &ObjectiveSpec::Entropic { gamma }, &Acceptance::none())?.raw();
    let leaves = expand_leaves(&model, &lifted, &Acceptance::none(), None).expect("no acceptance");
    let m = leaves.iter().map(|l| -gamma * l.total_payoff).fold(R::neg_infinity(), R::max);
    let lse = m + leaves.iter().map(|l| l.prob * (-gamma * l.total_payoff - m).exp()).sum::<R>().ln();
    Ok(EntropicOutcome {
        gamma,
        dp: sol.optimum.raw(),
        direct,
        risk: entropic_risk(sol.optimum.raw(), gamma),
        risk_definition: -lse / gamma,
    })
}

/// Largest `|cvar_variational - sorted_tail_cvar|` over `n` random distributions,
/// both forms, with levels drawn uniformly.
pub fn cvar_formula_gap<R: Real>(n: usize, seed: u64) -> Result<R> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = R::zero();
    for _ in 0..n {
        let len = rng.gen_range(1..=8);
        let dist: FiniteDistribution<R> = random_distribution(&mut rng, len);
        let values: Vec<R> = (0..len).map(|_| R::lit(rng.gen_range(-10.0..10.0))).collect();
        let cost_alpha = R::lit(rng.gen_range(0.0..0.99));
        let payoff_alpha = R::lit(rng.gen_range(0.01..=1.0));
        for (alpha, form) in [(cost_alpha, CvarForm::Cost), (payoff_alpha, CvarForm::Payoff)] {
            let a = cvar_variational(&dist, &values, alpha, form)?;
            let b = sorted_tail_cvar(&dist, &values, alpha, form)?;
            worst = worst.max((a - b).abs());
        }
    }
    Ok(worst)
}

fn mono<R: Real, S: RiskFrontierStep<R> + 'static>(
    out: &mut Vec<(&'static str, MonotonicityReport<R>)>,
    name: &'static str,
    fm: FrontierModel<R, S>,
    stream: &MdpModel<R>,
    trials: usize,
    seed: u64,
) -> Result<()> {
    out.push((name, check_monotonicity(fm.step.as_ref(), &fm.space, stream, trials, seed)?));
    Ok(())
}

/// Monotonicity of every catalog model on a random payoff stream per model.
pub fn catalog_monotonicity<R: Real>(trials: usize, seed: u64) -> Result<Vec<(&'static str, MonotonicityReport<R>)>> {
    let caps = InstanceCaps { max_outcomes: 3, ..Default::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut streams = Vec::new();
    for _ in 0..11 {
        streams.push(random_stream::<R>(&mut rng, caps)?);
    }
    let half = R::lit(0.5);
    let zs: Vec<R> = (0..=8).map(|k| R::lit(k as f64) * half).collect();
    let floor = |b: f64| Acceptance::every_period(AcceptanceSpec::ExpectationFloor { b: R::lit(b) });
    let pointwise = |b: f64| Acceptance::every_period(AcceptanceSpec::PointwiseFloor { b: R::lit(b) });
    let mut out = Vec::new();
    let mut it = streams.iter();
    let mut next = || it.next().expect("one stream per model");

    let s = next();
    mono(&mut out, "risk_neutral", build_risk_neutral(s)?, s, trials, seed)?;
    let s = next();
    mono(&mut out, "entropic", build_entropic(s, R::lit(0.5))?, s, trials, seed)?;
    let s = next();
    mono(&mut out, "nested", build_nested(s, vec![OneStepRiskSpec::Cvar { alpha: half }])?, s, trials, seed)?;
    let s = next();
    let fm = build_standard_cr(
        s,
        StandardCrConfig {
            acceptance: floor(0.0)?,
            terminal: TerminalWealth::Soft { beta: R::lit(2.0) },
            wealth: Axis::integers(-12, 12)?,
            wealth_projection: Projection::Nearest,
            disbursements: (0..=4).map(|k| R::lit(k as f64)).collect(),
            endowments: None,
        },
    )?;
    mono(&mut out, "standard_cr", fm, s, trials, seed)?;
    let s = next();
    let fm = build_consumption(
        s,
        ConsumptionConfig {
            utility: vec![half],
            shortfall_cost: vec![R::lit(2.0)],
            wealth: Axis::uniform(R::zero(), half, 61)?,
            wealth_projection: Projection::Nearest,
            disbursements: zs.clone(),
            initial_wealth: R::lit(2.0),
        },
    )?;
    mono(&mut out, "consumption", fm, s, trials, seed)?;
    let s = next();
    let fm = build_consumption_excess(
        s,
        ConsumptionExcessConfig {
            utility: ScalarFn::ConcaveExponential { rate: R::one() },
            targets: vec![vec![R::one(); s.num_states()]],
            epsilon: half,
            saving_rate: R::zero(),
            borrowing_rate: R::lit(0.1),
            alphas: lit(&[0.5, 1.0, 2.0]),
            disbursements: lit(&[0.0, 1.0, 2.0, 3.0, 4.0]),
            wealth: Axis::uniform(R::lit(-5.0), half, 41)?,
            wealth_projection: Projection::Nearest,
            initial_wealth: R::lit(10.0),
        },
    )?;
    mono(&mut out, "consumption_excess", fm, s, trials, seed)?;
    let s = next();
    let fm = build_expected_utility(
        s,
        ExpectedUtilityConfig {
            disutility: ScalarFn::Quadratic { scale: R::one() },
            acceptance: floor(0.0)?,
            disbursements: zs.clone(),
            shortfall: Axis::explicit(threshold_grid(&zs, s.periods()))?,
            projection: Projection::Nearest,
        },
    )?;
    mono(&mut out, "expected_utility", fm, s, trials, seed)?;
    let s = next();
    let fm = build_worst_case(
        s,
        WorstCaseConfig {
            budget: R::lit(0.2),
            budget_grid: lit(&[0.0, 0.1, 0.2]),
            acceptance: floor(0.0)?,
            disbursements: zs.clone(),
        },
    )?;
    mono(&mut out, "worst_case", fm, s, trials, seed)?;
    let s = next();
    let fm = build_cvar_shortfall(
        s,
        CvarShortfallConfig {
            alpha: R::lit(0.3),
            acceptance: pointwise(0.0)?,
            disbursements: zs.clone(),
            decomposition: CvarDecomposition::exact(&zs, s.periods())?,
        },
    )?;
    mono(&mut out, "cvar_shortfall", fm, s, trials, seed)?;
    let s = next();
    let fm = build_quantile(
        s,
        QuantileConfig { tau: half, levels: Vec::new(), acceptance: pointwise(0.0)?, disbursements: zs.clone() },
    )?;
    mono(&mut out, "quantile", fm, s, trials, seed)?;
    let s = next();
    let fm = build_growth(
        s,
        GrowthConfig {
            acceptance: floor(1.0)?,
            disbursements: (0..=24).map(|k| R::lit(k as f64) * half).collect(),
            wealth: Axis::uniform(R::lit(-20.0), half, 121)?,
            max_shortfall: None,
            projection: [Projection::Nearest; 2],
            initial_wealth: R::lit(4.0),
        },
    )?;
    mono(&mut out, "growth", fm, s, trials, seed)?;
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct ReductionOutcome<R> {
    /// `|worst_case(K = 0) - expected_utility(identity)|`.
    pub worst_case_vs_expected: R,
    /// `|nested(expectation) - risk_neutral|`.
    pub nested_vs_risk_neutral: R,
    /// Spread of CVaR-shortfall values over several `α` on a deterministic stream.
    pub cvar_alpha_spread: R,
}

pub fn reduction_case<R: Real>(seed: u64) -> Result<ReductionOutcome<R>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let model: MdpModel<R> = random_model(&mut rng, InstanceCaps { max_outcomes: 3, ..Default::default() })?;
    let zs = random_z_grid::<R>(&mut rng);
    let mut zs_full = zs.clone();
    zs_full.extend(lit::<R>(&[4.0, 5.0]));
    let acceptance = random_acceptance(&mut rng)?;
    let wc = build_worst_case(
        &model,
        WorstCaseConfig {
            budget: R::zero(),
            budget_grid: vec![R::zero()],
            acceptance: acceptance.clone(),
            disbursements: zs_full.clone(),
        },
    )?;
    let eu = build_expected_utility(
        &model,
        ExpectedUtilityConfig {
            disutility: ScalarFn::identity(),
            acceptance,
            disbursements: zs_full.clone(),
            shortfall: Axis::explicit(threshold_grid(&zs_full, model.periods()))?,
            projection: Projection::Nearest,
        },
    )?;
    let wc = solve(&model, wc.step.as_ref(), &wc.space)?.optimum;
    let eu = solve(&model, eu.step.as_ref(), &eu.space)?.optimum;

    let nested = build_nested(&model, vec![OneStepRiskSpec::Expectation])?;
    let rn = build_risk_neutral(&model)?;
    let nested = solve(&model, nested.step.as_ref(), &nested.space)?.optimum;
    let rn = solve(&model, rn.step.as_ref(), &rn.space)?.optimum;

    let deterministic = MdpModel::from_fn(
        Dims { states: 1, actions: 1, outcomes: 1 },
        model.horizon(),
        vec![FiniteDistribution::point_mass(1, 0)?; model.periods()],
        0,
        |t, _, _, _| (0, model.payoffs(t, model.initial_state(), 0)[0]),
    )?;
    let mut cvar = Vec::new();
    for alpha in [0.1, 0.3, 0.5, 0.9] {
        let fm = build_cvar_shortfall(
            &deterministic,
            CvarShortfallConfig {
                alpha: R::lit(alpha),
                acceptance: Acceptance::every_period(AcceptanceSpec::PointwiseFloor { b: R::zero() })?,
                disbursements: zs_full.clone(),
                decomposition: CvarDecomposition::exact(&zs_full, deterministic.periods())?,
            },
        )?;
        cvar.push(solve(&deterministic, fm.step.as_ref(), &fm.space)?.optimum);
    }
    let spread = cvar.iter().map(|v| v.gap(cvar[0])).fold(R::zero(), R::max);
    Ok(ReductionOutcome {
        worst_case_vs_expected: wc.gap(eu),
        nested_vs_risk_neutral: nested.gap(rn),
        cvar_alpha_spread: spread,
    })
}
