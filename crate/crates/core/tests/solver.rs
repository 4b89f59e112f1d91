mod common;

use common::{deterministic, ints};
use gcr_core::mdp::Dims;
use gcr_core::models::{
    build_entropic, build_risk_neutral, build_standard_cr, Acceptance, AcceptanceSpec, StandardCrConfig, TerminalWealth,
};
use gcr_core::oracle::{classical_backward_induction, random_model, InstanceCaps};
use gcr_core::solver::{reachable, solve_stage};
use gcr_core::{
    evaluate_policy, monte_carlo, solve, solve_with, Axis, FiniteDistribution, InfoStateSpace, MdpModel, Projection,
    RiskFrontierStep, SolveOptions,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn two_actions() -> MdpModel<f64> {
    let dims = Dims { states: 1, actions: 2, outcomes: 1 };
    let det = FiniteDistribution::point_mass(1, 0).unwrap();
    MdpModel::stationary(dims, 0, det, 0, |_, a, _| (0, if a == 0 { 1.0 } else { 3.0 })).unwrap()
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn cr_config() -> StandardCrConfig<f64> {
    StandardCrConfig {
        acceptance: Acceptance::every_period(AcceptanceSpec::PointwiseFloor { b: 0.0 }).unwrap(),
        terminal: TerminalWealth::Hard,
        wealth: Axis::integers(-10, 10).unwrap(),
        wealth_projection: Projection::Nearest,
        disbursements: ints(0, 6),
        endowments: None,
    }
}

/// Every finite value is reproduced by re-solving its stage.
fn stage_residual<S: RiskFrontierStep<f64> + ?Sized>(model: &MdpModel<f64>, step: &S, space: &InfoStateSpace<f64>) {
    let sol = solve(model, step, space).unwrap();
    for t in 0..=model.horizon() {
        for (i, v) in sol.values.row(t).iter().enumerate() {
            if !v.is_feasible() {
                continue;
            }
            let (again, d) = solve_stage(step, space, model, t, i, sol.values.row(t + 1)).unwrap();
            assert_eq!(again, *v, "t = {t}, index {i}");
            assert_eq!(d, sol.policy.get(t, i));
        }
    }
}

#[test]
fn picks_the_larger_mean() {
    let m = two_actions();
    let fm = build_risk_neutral(&m).unwrap();
    let sol = solve(&m, fm.step.as_ref(), &fm.space).unwrap();
    assert_eq!(sol.optimum.value(), Some(-3.0));
    let i = fm.space.locate(0, fm.space.initial());
    assert_eq!(sol.policy.get(0, i).unwrap().action, 1);
    let (v, d) = solve_stage(fm.step.as_ref(), &fm.space, &m, 0, i, sol.values.row(1)).unwrap();
    assert_eq!((v, d), (sol.optimum, sol.policy.get(0, i)));
}

#[test]
fn risk_neutral_matches_classical_induction() {
    let caps = InstanceCaps { max_horizon: 3, max_states: 3, max_actions: 3, max_outcomes: 3 };
    for seed in 0..100 {
        let m: MdpModel<f64> = random_model(&mut rng(seed), caps).unwrap();
        let fm = build_risk_neutral(&m).unwrap();
        let sol = solve(&m, fm.step.as_ref(), &fm.space).unwrap();
        let classical = classical_backward_induction(&m)[0][m.initial_state()];
        assert!((sol.optimum.raw() + classical).abs() < 1e-12, "seed {seed}");
    }
}

#[test]
fn stage_equation_residual() {
    for seed in 0..20 {
        let m: MdpModel<f64> = random_model(&mut rng(100 + seed), InstanceCaps::default()).unwrap();
        let rn = build_risk_neutral(&m).unwrap();
        stage_residual(&m, rn.step.as_ref(), &rn.space);
        let e = build_entropic(&m, 0.5).unwrap();
        stage_residual(&m, e.step.as_ref(), &e.space);
        let cr = build_standard_cr(&m, cr_config()).unwrap();
        stage_residual(&m, cr.step.as_ref(), &cr.space);
    }
}

#[test]
fn first_feasible_search_agrees_with_exhaustive() {
    for seed in 0..30 {
        let m: MdpModel<f64> = random_model(&mut rng(200 + seed), InstanceCaps::default()).unwrap();
        let cr = build_standard_cr(&m, cr_config()).unwrap();
        let fast = solve(&m, cr.step.as_ref(), &cr.space).unwrap();
        let full =
            solve_with(&m, cr.step.as_ref(), &cr.space, SolveOptions { exhaustive: true, parallel: false }).unwrap();
        assert_eq!(fast.values.rows(), full.values.rows(), "seed {seed}");
    }
}

#[test]
fn greedy_policy_reproduces_values() {
    for seed in 0..20 {
        let m: MdpModel<f64> = random_model(&mut rng(300 + seed), InstanceCaps::default()).unwrap();
        let cr = build_standard_cr(&m, cr_config()).unwrap();
        let sol = solve(&m, cr.step.as_ref(), &cr.space).unwrap();
        let eval = evaluate_policy(&m, cr.step.as_ref(), &cr.space, &sol.policy).unwrap();
        let reach = reachable(&m, &cr.space, &sol.policy).unwrap();
        for t in 0..=m.horizon() {
            for (i, r) in reach[t].iter().enumerate() {
                if *r {
                    assert_eq!(eval.get(t, i), sol.values.get(t, i), "seed {seed}, t = {t}");
                }
            }
        }
    }
}

#[test]
fn suboptimal_action_costs_more() {
    let m = two_actions();
    let fm = build_risk_neutral(&m).unwrap();
    let mut policy = solve(&m, fm.step.as_ref(), &fm.space).unwrap().policy;
    let i = fm.space.locate(0, fm.space.initial());
    let mut d = policy.get(0, i).unwrap();
    d.action = 0;
    policy.set(0, i, Some(d));
    let eval = evaluate_policy(&m, fm.step.as_ref(), &fm.space, &policy).unwrap();
    assert_eq!(eval.get(0, i).value(), Some(-1.0));
}

#[test]
fn infeasible_disbursement_propagates() {
    let m = deterministic(&[0.0, -5.0]);
    let cr = build_standard_cr(&m, cr_config()).unwrap();
    let sol = solve(&m, cr.step.as_ref(), &cr.space).unwrap();
    assert_eq!(sol.optimum.value(), Some(5.0));
    let reach = reachable(&m, &cr.space, &sol.policy).unwrap();
    let mut policy = sol.policy.clone();
    for (i, r) in reach[1].iter().enumerate() {
        if *r {
            let mut d = policy.get(1, i).unwrap();
            d.z = 3.0;
            policy.set(1, i, Some(d));
        }
    }
    let eval = evaluate_policy(&m, cr.step.as_ref(), &cr.space, &policy).unwrap();
    assert!(!eval.at(&cr.space, 0, cr.space.initial()).is_feasible());
}

#[test]
fn rollouts() {
    let m = deterministic(&[1.0, -2.0, 4.0]);
    let fm = build_risk_neutral(&m).unwrap();
    let sol = solve(&m, fm.step.as_ref(), &fm.space).unwrap();
    let one = monte_carlo(&m, &sol.policy, &fm.space, 1, 5).unwrap();
    assert_eq!(one.cumulative, vec![3.0]);
    assert_eq!(one.trajectories[0].payoffs.len(), 3);
    assert!(monte_carlo(&m, &sol.policy, &fm.space, 0, 5).is_err());

    let caps = InstanceCaps { max_horizon: 3, max_states: 3, max_actions: 2, max_outcomes: 3 };
    for seed in 0..5 {
        let m: MdpModel<f64> = random_model(&mut rng(400 + seed), caps).unwrap();
        let fm = build_risk_neutral(&m).unwrap();
        let sol = solve(&m, fm.step.as_ref(), &fm.space).unwrap();
        let n = 4000;
        let a = monte_carlo(&m, &sol.policy, &fm.space, n, seed).unwrap();
        let b = monte_carlo(&m, &sol.policy, &fm.space, n, seed).unwrap();
        assert_eq!(a.cumulative, b.cumulative);
        let exact = -sol.optimum.raw();
        let gap = (a.summary.mean - exact).abs();
        assert!(gap <= 3.0 * a.summary.sigma / (n as f64).sqrt() + 1e-12, "seed {seed}: gap {gap}");
    }
}
