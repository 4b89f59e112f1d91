mod common;

use common::{deterministic, ints, split, stream};
use gcr_core::frontier::min_stage_premium;
use gcr_core::models::*;
use gcr_core::{
    check_membership, tail_risk_evaluate, Aux, Axis, FiniteDistribution, History, InfoState, Premium, Projection,
    RiskFrontierStep, ValueTable,
};

fn pointwise(b: f64) -> Acceptance<f64> {
    Acceptance::every_period(AcceptanceSpec::PointwiseFloor { b }).unwrap()
}

fn expectation_floor(b: f64) -> Acceptance<f64> {
    Acceptance::every_period(AcceptanceSpec::ExpectationFloor { b }).unwrap()
}

fn close(a: Premium<f64>, b: f64) {
    let v = a.value().unwrap_or_else(|| panic!("expected {b}, got INFEASIBLE"));
    assert!((v - b).abs() < 1e-12, "expected {b}, got {v}");
}

fn standard_cr(
    acceptance: Acceptance<f64>,
    terminal: TerminalWealth<f64>,
    endowments: Option<Vec<f64>>,
) -> StandardCrConfig<f64> {
    StandardCrConfig {
        acceptance,
        terminal,
        wealth: Axis::integers(-10, 10).unwrap(),
        wealth_projection: Projection::Nearest,
        disbursements: ints(0, 10),
        endowments,
    }
}

#[test]
fn risk_neutral_stream() {
    let m = deterministic(&[1.0, 1.0]);
    let fm = build_risk_neutral(&m).unwrap();
    close(tail_risk_evaluate(fm.step.as_ref(), &fm.space, &m).unwrap().risk, -2.0);
}

#[test]
fn entropic_streams() {
    let m = deterministic(&[0.0, 0.0, 0.0]);
    let fm = build_entropic(&m, 1.0).unwrap();
    close(tail_risk_evaluate(fm.step.as_ref(), &fm.space, &m).unwrap().risk, 1.0);

    let ln2 = 2f64.ln();
    let m = stream(0, &[1.0, 1.0], |_, xi| if xi == 0 { 0.0 } else { ln2 });
    let fm = build_entropic(&m, 1.0).unwrap();
    let moment = tail_risk_evaluate(fm.step.as_ref(), &fm.space, &m).unwrap().risk.raw();
    assert!((moment - 0.75).abs() < 1e-15);
    assert!((entropic_risk(moment, 1.0) - -(0.75f64.ln())).abs() < 1e-15);
}

#[test]
fn nested_cvar_stream() {
    let m = stream(0, &[1.0, 1.0], |_, xi| 2.0 * xi as f64);
    let fm = build_nested(&m, vec![OneStepRiskSpec::Cvar { alpha: 0.4 }]).unwrap();
    close(tail_risk_evaluate(fm.step.as_ref(), &fm.space, &m).unwrap().risk, 0.0);

    let e = build_nested(&m, vec![OneStepRiskSpec::Expectation]).unwrap();
    close(tail_risk_evaluate(e.step.as_ref(), &e.space, &m).unwrap().risk, -1.0);
}

#[test]
fn standard_cr_endowment() {
    let m = deterministic(&[-5.0]);
    let fm = build_standard_cr(&m, standard_cr(expectation_floor(0.0), TerminalWealth::Hard, None)).unwrap();
    let sched = tail_risk_evaluate(fm.step.as_ref(), &fm.space, &m).unwrap();
    close(sched.risk, 5.0);
    let d = sched.disbursements.get(0, fm.space.locate(0, fm.space.initial())).unwrap();
    assert_eq!((d.z, d.aux.as_f64()), (5.0, Some(5.0)));

    let m = deterministic(&[5.0]);
    let fm = build_standard_cr(&m, standard_cr(expectation_floor(0.0), TerminalWealth::Hard, None)).unwrap();
    close(tail_risk_evaluate(fm.step.as_ref(), &fm.space, &m).unwrap().risk, 0.0);
}

#[test]
fn standard_cr_soft_terminal() {
    let m = split([0.0, -1.0]);
    let cfg = standard_cr(pointwise(0.0), TerminalWealth::Soft { beta: 4.0 }, Some(vec![0.0]));
    let fm = build_standard_cr(&m, cfg).unwrap();
    close(fm.step.terminal_premium(&InfoState::new(0, &[-1.0])), 4.0);
    close(tail_risk_evaluate(fm.step.as_ref(), &fm.space, &m).unwrap().risk, 2.0);
}

#[test]
fn standard_cr_rejects_short_disbursement() {
    let m = deterministic(&[-5.0, 0.0]);
    let fm = build_standard_cr(&m, standard_cr(expectation_floor(0.0), TerminalWealth::Hard, None)).unwrap();
    let det = FiniteDistribution::point_mass(1, 0).unwrap();
    let y = InfoState::new(0, &[0.0]);
    let v = min_stage_premium(fm.step.as_ref(), 1, &y, &det, &[-5.0], 3.0, Aux::None, &[Premium::new(0.0)]).unwrap();
    assert!(!v.is_feasible());
}

fn consumption(m: &gcr_core::MdpModel<f64>, zs: Vec<f64>) -> FrontierModel<f64, Consumption<f64>> {
    let cfg = ConsumptionConfig {
        utility: vec![1.0],
        shortfall_cost: vec![2.0],
        wealth: Axis::integers(0, 20).unwrap(),
        wealth_projection: Projection::Nearest,
        disbursements: zs,
        initial_wealth: 0.0,
    };
    build_consumption(m, cfg).unwrap()
}

#[test]
fn consumption_stage_costs() {
    let m = deterministic(&[0.0]);
    let fm = consumption(&m, vec![0.0, 5.0]);
    let det = FiniteDistribution::point_mass(1, 0).unwrap();
    let next = [Premium::new(0.0)];
    let rich = InfoState::new(0, &[10.0]);
    let broke = InfoState::new(0, &[0.0]);
    assert_eq!(fm.step.psi(0, 10.0, 0.0, 5.0), -5.0);
    close(min_stage_premium(fm.step.as_ref(), 0, &rich, &det, &[0.0], 5.0, Aux::None, &next).unwrap(), -5.0);
    assert_eq!(fm.step.psi(0, 0.0, 0.0, 5.0), 5.0);
    close(min_stage_premium(fm.step.as_ref(), 0, &broke, &det, &[0.0], 5.0, Aux::None, &next).unwrap(), 5.0);

    let m = stream(2, &[1.0, 3.0], |_, xi| xi as f64 * 2.0);
    let fm = consumption(&m, vec![0.0]);
    close(tail_risk_evaluate(fm.step.as_ref(), &fm.space, &m).unwrap().risk, 0.0);
    assert!(build_consumption(
        &m,
        ConsumptionConfig { utility: vec![2.0], shortfall_cost: vec![1.0], ..consumption_cfg() }
    )
    .is_err());
}

fn consumption_cfg() -> ConsumptionConfig<f64> {
    ConsumptionConfig {
        utility: vec![1.0],
        shortfall_cost: vec![2.0],
        wealth: Axis::integers(0, 4).unwrap(),
        wealth_projection: Projection::Nearest,
        disbursements: vec![0.0],
        initial_wealth: 0.0,
    }
}

#[test]
fn consumption_excess_stage() {
    let m = deterministic(&[0.0]);
    let cfg = ConsumptionExcessConfig {
        utility: ScalarFn::identity(),
        targets: vec![vec![0.0]],
        epsilon: 0.1,
        saving_rate: 0.0,
        borrowing_rate: 0.0,
        alphas: vec![0.1, 0.5, 1.0],
        disbursements: vec![0.0, 1.0],
        wealth: Axis::integers(-4, 4).unwrap(),
        wealth_projection: Projection::Nearest,
        initial_wealth: 0.0,
    };
    let fm = build_consumption_excess(&m, cfg).unwrap();
    let y = InfoState::new(0, &[0.0]);
    let det = FiniteDistribution::point_mass(1, 0).unwrap();
    let stage = |x: f64, z: f64, alpha: f64, next: &[Premium<f64>], dist: &FiniteDistribution<f64>| {
        let xs = vec![x; dist.len()];
        min_stage_premium(fm.step.as_ref(), 0, &y, dist, &xs, z, Aux::Level(alpha), next).unwrap()
    };
    let zero = [Premium::new(0.0)];
    for alpha in [0.1, 0.5, 1.0] {
        close(stage(0.0, 0.0, alpha, &zero, &det), alpha);
        assert!(!stage(-1.0, 0.0, alpha, &zero, &det).is_feasible());
    }
    let coin = gcr_core::make_distribution(&[1.0, 1.0]).unwrap();
    close(stage(0.0, 0.0, 0.5, &[Premium::new(1.0), Premium::new(3.0)], &coin), 3.5);
}

fn shortfall_axis(zs: &[f64], periods: usize) -> Axis<f64> {
    Axis::explicit(threshold_grid(zs, periods)).unwrap()
}

#[test]
fn expected_utility_of_shortfall() {
    let m = split([0.0, -2.0]);
    let zs = vec![0.0, 1.0, 2.0];
    let cfg = |u: ScalarFn<f64>| ExpectedUtilityConfig {
        disutility: u,
        acceptance: pointwise(0.0),
        disbursements: zs.clone(),
        shortfall: shortfall_axis(&zs, 2),
        projection: Projection::Nearest,
    };
    let fm = build_expected_utility(&m, cfg(ScalarFn::Quadratic { scale: 1.0 })).unwrap();
    close(tail_risk_evaluate(fm.step.as_ref(), &fm.space, &m).unwrap().risk, 2.0);

    let lin = build_expected_utility(&m, cfg(ScalarFn::identity())).unwrap();
    let wc = build_worst_case(
        &m,
        WorstCaseConfig {
            budget: 0.0,
            budget_grid: vec![0.0, 0.5, 1.0],
            acceptance: pointwise(0.0),
            disbursements: zs.clone(),
        },
    )
    .unwrap();
    close(tail_risk_evaluate(lin.step.as_ref(), &lin.space, &m).unwrap().risk, 1.0);
    close(tail_risk_evaluate(wc.step.as_ref(), &wc.space, &m).unwrap().risk, 1.0);

    let calm = deterministic(&[1.0, 1.0]);
    let fm = build_expected_utility(&calm, cfg(ScalarFn::Linear { slope: 1.0, intercept: 0.5 })).unwrap();
    close(tail_risk_evaluate(fm.step.as_ref(), &fm.space, &calm).unwrap().risk, 0.5);
}

#[test]
fn worst_case_budget() {
    let m = split([0.0, -2.0]);
    let zs = vec![0.0, 1.0, 2.0];
    let full = build_worst_case(
        &m,
        WorstCaseConfig {
            budget: 1.0,
            budget_grid: vec![0.0, 0.5, 1.0],
            acceptance: pointwise(0.0),
            disbursements: zs,
        },
    )
    .unwrap();
    close(tail_risk_evaluate(full.step.as_ref(), &full.space, &m).unwrap().risk, 2.0);

    let one = deterministic(&[-3.0]);
    let fm = build_worst_case(
        &one,
        WorstCaseConfig {
            budget: 1.0,
            budget_grid: vec![0.0, 1.0],
            acceptance: pointwise(0.0),
            disbursements: ints(0, 4),
        },
    )
    .unwrap();
    close(tail_risk_evaluate(fm.step.as_ref(), &fm.space, &one).unwrap().risk, 3.0);

    let dist = gcr_core::make_distribution(&[0.9, 0.1]).unwrap();
    close(tv_maximize(&dist, &[Premium::new(0.0), Premium::new(10.0)], 0.2), 3.0);
}

#[test]
fn cvar_of_shortfall() {
    let m = split([0.0, -2.0]);
    let zs = vec![0.0, 1.0, 2.0];
    let cfg = |alpha: f64| CvarShortfallConfig {
        alpha,
        acceptance: pointwise(0.0),
        disbursements: zs.clone(),
        decomposition: CvarDecomposition::exact(&zs, 2).unwrap(),
    };
    let fm = build_cvar_shortfall(&m, cfg(0.5)).unwrap();
    close(tail_risk_evaluate(fm.step.as_ref(), &fm.space, &m).unwrap().risk, 2.0);
    assert!(build_cvar_shortfall(&m, cfg(0.0)).is_err());

    let c = deterministic(&[-1.0, -1.0, -1.0]);
    let zs = vec![0.0, 1.0];
    for alpha in [0.2, 0.5, 0.9] {
        let cfg = CvarShortfallConfig {
            alpha,
            acceptance: pointwise(0.0),
            disbursements: zs.clone(),
            decomposition: CvarDecomposition::exact(&zs, 3).unwrap(),
        };
        let fm = build_cvar_shortfall(&c, cfg).unwrap();
        close(tail_risk_evaluate(fm.step.as_ref(), &fm.space, &c).unwrap().risk, 3.0);
    }
}

#[test]
fn cvar_variational_forms() {
    let d = gcr_core::make_distribution::<f64>(&[1.0, 1.0]).unwrap();
    assert!((cvar_variational(&d, &[0.0, 2.0], 0.5, CvarForm::Cost).unwrap() - 2.0).abs() < 1e-12);
    assert!((cvar_variational(&d, &[0.0, 2.0], 0.0, CvarForm::Cost).unwrap() - 1.0).abs() < 1e-12);
    assert!(cvar_variational(&d, &[0.0, 2.0], 0.4, CvarForm::Payoff).unwrap().abs() < 1e-12);
}

#[test]
fn quantile_of_shortfall() {
    let m = split([0.0, -2.0]);
    let zs = vec![0.0, 1.0, 2.0];
    let cfg = |tau: f64| QuantileConfig { tau, levels: vec![], acceptance: pointwise(0.0), disbursements: zs.clone() };
    let fm = build_quantile(&m, cfg(0.5)).unwrap();
    close(tail_risk_evaluate(fm.step.as_ref(), &fm.space, &m).unwrap().risk, 2.0);

    let c = deterministic(&[-2.0, -2.0]);
    for tau in [0.1, 0.5, 0.9] {
        let fm = build_quantile(&c, cfg(tau)).unwrap();
        close(tail_risk_evaluate(fm.step.as_ref(), &fm.space, &c).unwrap().risk, 4.0);
    }
}

fn growth(m: &gcr_core::MdpModel<f64>) -> FrontierModel<f64, Growth<f64>> {
    let cfg = GrowthConfig {
        acceptance: pointwise(0.0),
        disbursements: ints(0, 6),
        wealth: Axis::integers(-20, 20).unwrap(),
        max_shortfall: None,
        projection: [Projection::Nearest; 2],
        initial_wealth: 0.0,
    };
    build_growth(m, cfg).unwrap()
}

#[test]
fn growth_running_maximum() {
    let calm = deterministic(&[1.0, 0.0, 2.0]);
    let fm = growth(&calm);
    close(tail_risk_evaluate(fm.step.as_ref(), &fm.space, &calm).unwrap().risk, 0.0);

    // Minimal disbursements 1, 3, 2 along the only path.
    let m = deterministic(&[-1.0, -2.0, 1.0]);
    let fm = growth(&m);
    close(tail_risk_evaluate(fm.step.as_ref(), &fm.space, &m).unwrap().risk, 3.0);

    let m = split([-3.0, -5.0]);
    let fm = growth(&m);
    close(tail_risk_evaluate(fm.step.as_ref(), &fm.space, &m).unwrap().risk, 5.0);
}

#[test]
fn membership_of_schedules() {
    let m = stream(2, &[1.0, 2.0], |t, xi| xi as f64 - t as f64 * 0.5);
    let fm = build_risk_neutral(&m).unwrap();
    let sched = tail_risk_evaluate(fm.step.as_ref(), &fm.space, &m).unwrap();
    let step = fm.step.as_ref();
    assert!(check_membership(step, &fm.space, &m, &sched.disbursements, &sched.premiums).unwrap());

    let shift = |delta: f64, only: Option<(usize, usize)>| {
        let rows = sched
            .premiums
            .rows()
            .iter()
            .enumerate()
            .map(|(t, row)| {
                row.iter()
                    .enumerate()
                    .map(|(i, p)| match only {
                        Some(at) if at != (t, i) => *p,
                        _ => p.plus(delta),
                    })
                    .collect()
            })
            .collect();
        ValueTable::from_rows(rows)
    };
    assert!(!check_membership(step, &fm.space, &m, &sched.disbursements, &shift(-1.0, Some((1, 0)))).unwrap());
    assert!(check_membership(step, &fm.space, &m, &sched.disbursements, &shift(10.0, None)).unwrap());
}

#[test]
fn wealth_compression() {
    let m = deterministic(&[0.0, 0.0]);
    let fm = build_standard_cr(&m, standard_cr(expectation_floor(0.0), TerminalWealth::Hard, None)).unwrap();
    let h = History::new(0);
    assert_eq!(fm.space.compress_history(&m, &h, &[]).unwrap(), InfoState::new(0, &[0.0]));
    let h = h.extended(0, 0);
    let y = fm.space.compress_history(&m, &h, &[(3.0, Aux::Level(0.0))]).unwrap();
    assert_eq!(y, InfoState::new(0, &[-3.0]));
}
