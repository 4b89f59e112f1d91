mod common;

use common::{deterministic, split};
use gcr_core::mdp::Dims;
use gcr_core::models::{build_consumption, build_risk_neutral, Acceptance, AcceptanceSpec, ConsumptionConfig};
use gcr_core::oracle::*;
use gcr_core::{make_distribution, solve, Axis, FiniteDistribution, MdpModel, Projection};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn no_acceptance() -> Acceptance<f64> {
    Acceptance::every_period(AcceptanceSpec::None).unwrap()
}

fn pointwise(b: f64) -> Acceptance<f64> {
    Acceptance::every_period(AcceptanceSpec::PointwiseFloor { b }).unwrap()
}

/// One state, two actions paying 1 and 3.
fn two_actions(horizon: usize, outcomes: usize) -> MdpModel<f64> {
    let dims = Dims { states: 1, actions: 2, outcomes };
    let noise = make_distribution(&vec![1.0; outcomes]).unwrap();
    MdpModel::stationary(dims, horizon, noise, 0, |_, a, _| (0, if a == 0 { 1.0 } else { 3.0 })).unwrap()
}

#[test]
fn policy_counts() {
    let m = two_actions(0, 1);
    assert_eq!(count_policies(&m, 1), Some(2));
    assert_eq!(enumerate_policies(&m, &[0.0], EnumerationBudget::default()).unwrap().count(), 2);

    let m = two_actions(1, 2);
    assert_eq!(count_policies(&m, 1), Some(32));
    assert_eq!(enumerate_policies(&m, &[0.0], EnumerationBudget::default()).unwrap().count(), 32);

    let big = two_actions(4, 3);
    assert!(enumerate_policies(&big, &[0.0, 1.0, 2.0], EnumerationBudget::default()).is_err());
}

#[test]
fn direct_objectives() {
    let m = deterministic(&[1.0, 1.0]);
    let p = HistoryPolicy::constant(&m, (0, 0.0), usize::MAX).unwrap();
    let v = direct_objective(&m, &p, &ObjectiveSpec::NegExpectedTotal, &no_acceptance()).unwrap();
    assert_eq!(v.value(), Some(-2.0));

    // Total shortfall 0 or 2 with equal probability.
    let m = split([0.0, -2.0]);
    let mut p = HistoryPolicy::constant(&m, (0, 0.0), usize::MAX).unwrap();
    p.set(1, p.child(0, 0, 1), (0, 2.0));
    let acc = pointwise(0.0);
    let cvar = direct_objective(&m, &p, &ObjectiveSpec::CvarOfShortfall { alpha: 0.5 }, &acc).unwrap();
    assert_eq!(cvar.value(), Some(2.0));
    let q = direct_objective(&m, &p, &ObjectiveSpec::QuantileOfShortfall { tau: 0.5 }, &acc).unwrap();
    assert_eq!(q.value(), Some(2.0));

    // Short by one on the bad branch.
    p.set(1, p.child(0, 0, 1), (0, 1.0));
    assert!(!direct_objective(&m, &p, &ObjectiveSpec::CvarOfShortfall { alpha: 0.5 }, &acc).unwrap().is_feasible());
}

#[test]
fn tail_statistics() {
    let probs = [0.5, 0.5];
    assert_eq!(upper_tail_mean(&probs, &[0.0, 2.0], 0.5), 2.0);
    assert_eq!(upper_tail_mean(&probs, &[0.0, 2.0], 1.0), 1.0);
    assert_eq!(lower_quantile(&probs, &[0.0, -2.0], 0.5), -2.0);
}

#[test]
fn brute_force_baselines() {
    let m = split([1.0, -1.0]);
    let p = HistoryPolicy::constant(&m, (0, 0.0), usize::MAX).unwrap();
    let spec = ObjectiveSpec::NegExpectedTotal;
    let direct = direct_objective(&m, &p, &spec, &no_acceptance()).unwrap();
    let (best, _) = brute_force_optimum(&m, &spec, &[0.0], &no_acceptance(), EnumerationBudget::default()).unwrap();
    assert_eq!(best, direct);

    let caps = InstanceCaps::default();
    for seed in 0..30 {
        let m: MdpModel<f64> = random_model(&mut rng(seed), caps).unwrap();
        let (best, _) = brute_force_optimum(&m, &spec, &[0.0], &no_acceptance(), EnumerationBudget::default()).unwrap();
        let classical = classical_backward_induction(&m)[0][m.initial_state()];
        assert!((best.raw() + classical).abs() < 1e-12, "seed {seed}");
    }
}

#[test]
fn greedy_policies_are_time_consistent() {
    for seed in 0..20 {
        let m: MdpModel<f64> = random_model(&mut rng(50 + seed), InstanceCaps::default()).unwrap();
        let fm = build_risk_neutral(&m).unwrap();
        let sol = solve(&m, fm.step.as_ref(), &fm.space).unwrap();
        let report = check_time_consistency(&m, fm.step.as_ref(), &fm.space, &sol.policy).unwrap();
        assert!(report.is_consistent(), "seed {seed}: {:?}", report.violations);
    }

    let m = two_actions(0, 1);
    let fm = build_risk_neutral(&m).unwrap();
    let sol = solve(&m, fm.step.as_ref(), &fm.space).unwrap();
    let report = check_time_consistency(&m, fm.step.as_ref(), &fm.space, &sol.policy).unwrap();
    assert_eq!(report.histories_checked, 1);
    assert!(report.is_consistent());
}

#[test]
fn detects_an_inconsistent_tail() {
    let m = two_actions(1, 1);
    let fm = build_risk_neutral(&m).unwrap();
    let mut policy = solve(&m, fm.step.as_ref(), &fm.space).unwrap().policy;
    let i = fm.space.locate(1, &gcr_core::InfoState::plain(0));
    let mut d = policy.get(1, i).unwrap();
    d.action = 0;
    policy.set(1, i, Some(d));
    let report = check_time_consistency(&m, fm.step.as_ref(), &fm.space, &policy).unwrap();
    assert!(!report.violations.is_empty());
    assert!(report.violations.iter().any(|v| v.t == 1));
}

#[test]
fn risk_neutral_translation() {
    for seed in 0..20 {
        let m: MdpModel<f64> = random_stream(&mut rng(80 + seed), InstanceCaps::default()).unwrap();
        let up = m.map_payoffs(|_, _, _, _, r| r + 1.0).unwrap();
        let fm = build_risk_neutral(&m).unwrap();
        let a = gcr_core::tail_risk_evaluate(fm.step.as_ref(), &fm.space, &m).unwrap().risk.raw();
        let b = gcr_core::tail_risk_evaluate(fm.step.as_ref(), &fm.space, &up).unwrap().risk.raw();
        assert!((a - b - m.periods() as f64).abs() < 1e-12, "seed {seed}");
        let report = check_monotonicity(fm.step.as_ref(), &fm.space, &m, 50, seed).unwrap();
        assert_eq!(report.violations, 0);
    }
}

/// `min c·s - α·z` subject to `s >= z - w - x` and `s >= 0`, solved on the
/// vertices of the feasible half-line.
fn shortfall_lp(c: f64, alpha: f64, w: f64, x: f64, z: f64) -> f64 {
    [0.0, z - w - x]
        .into_iter()
        .filter(|&s| s >= 0.0 && s >= z - w - x)
        .map(|s| c * s - alpha * z)
        .fold(f64::INFINITY, f64::min)
}

/// `E[Σ_t (c·s_t - α·z_t)]` with the dummy shortfall `s_t` chosen by the LP at
/// every node, wealth `w' = w + x - z + s`.
fn lp_objective(m: &MdpModel<f64>, p: &HistoryPolicy<f64>, c: f64, alpha: f64) -> f64 {
    fn walk(
        m: &MdpModel<f64>,
        p: &HistoryPolicy<f64>,
        c: f64,
        alpha: f64,
        t: usize,
        s: usize,
        idx: usize,
        w: f64,
    ) -> f64 {
        let (a, z) = p.get(t, idx);
        let dist = m.noise(t);
        dist.support()
            .iter()
            .map(|&xi| {
                let (next, x) = m.step(t, s, a, xi).unwrap();
                let cost = shortfall_lp(c, alpha, w, x, z);
                let short = (cost + alpha * z) / c;
                let tail = if t < m.horizon() {
                    walk(m, p, c, alpha, t + 1, next, p.child(idx, a, xi), w + x - z + short)
                } else {
                    0.0
                };
                dist.prob(xi) * (cost + tail)
            })
            .sum()
    }
    walk(m, p, c, alpha, 0, m.initial_state(), 0, 0.0)
}

#[test]
fn consumption_matches_dummy_variable_program() {
    let (c, alpha) = (2.0, 1.0);
    let zs = [0.0, 1.0, 2.0];
    let caps = InstanceCaps { max_horizon: 2, max_states: 2, max_actions: 1, max_outcomes: 2 };
    for seed in 0..25 {
        let m: MdpModel<f64> = random_stream(&mut rng(900 + seed), caps).unwrap();
        let cfg = ConsumptionConfig {
            utility: vec![alpha],
            shortfall_cost: vec![c],
            wealth: Axis::uniform(0.0, 0.5, 25).unwrap(),
            wealth_projection: Projection::Nearest,
            disbursements: zs.to_vec(),
            initial_wealth: 0.0,
        };
        let fm = build_consumption(&m, cfg).unwrap();
        let dp = solve(&m, fm.step.as_ref(), &fm.space).unwrap().optimum.raw();
        let best = enumerate_policies(&m, &zs, EnumerationBudget::default())
            .unwrap()
            .map(|p| lp_objective(&m, &p, c, alpha))
            .fold(f64::INFINITY, f64::min);
        assert!((dp - best).abs() < 1e-9, "seed {seed}: dp {dp}, program {best}");
    }
    // The LP optimum is the nonlinear stage cost.
    for (w, x, z) in [(10.0, 0.0, 5.0), (0.0, 0.0, 5.0), (1.0, -2.0, 0.0), (0.5, 1.5, 2.0)] {
        assert_eq!(shortfall_lp(c, alpha, w, x, z), c * f64::max(z - w - x, 0.0) - alpha * z);
    }
}

#[test]
fn distributions_for_instances() {
    let mut r = rng(3);
    for len in 1..6 {
        let d: FiniteDistribution<f64> = random_distribution(&mut r, len);
        assert_eq!(d.support().len(), len);
        assert!((d.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
