use gcr_core::models::{build_entropic, build_risk_neutral, entropic_risk};
use gcr_core::oracle::suite::catalog_monotonicity;
use gcr_core::oracle::{random_model, InstanceCaps};
use gcr_core::{make_distribution, solve, MdpModel, Premium};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    /// One unperturbed and one perturbed stream per catalog model and case.
    #[test]
    fn catalog_is_monotone(seed in any::<u64>()) {
        for (name, report) in catalog_monotonicity::<f64>(2, seed).unwrap() {
            prop_assert_eq!(report.violations, 0, "{} max violation {}", name, report.max_violation);
        }
    }

    #[test]
    fn weights_normalize(weights in prop::collection::vec(0.0f64..10.0, 1..8)) {
        prop_assume!(weights.iter().any(|w| *w > 0.0));
        let d = make_distribution(&weights).unwrap();
        prop_assert!((d.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for (p, w) in d.probs().iter().zip(&weights) {
            prop_assert_eq!(*p == 0.0, *w == 0.0);
        }
    }

    #[test]
    fn infeasible_is_largest(x in -1e300f64..1e300) {
        let inf = Premium::<f64>::infeasible();
        prop_assert!(Premium::new(x) < inf);
        prop_assert!(!inf.plus(x).is_feasible());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    /// The entropic certainty equivalent never exceeds the best expected total.
    #[test]
    fn entropic_dominates_mean(seed in any::<u64>(), gamma in 0.1f64..2.0) {
        let m: MdpModel<f64> = random_model(&mut ChaCha8Rng::seed_from_u64(seed), InstanceCaps::default()).unwrap();
        let rn = build_risk_neutral(&m).unwrap();
        let e = build_entropic(&m, gamma).unwrap();
        let mean = solve(&m, rn.step.as_ref(), &rn.space).unwrap().optimum.raw();
        let moment = solve(&m, e.step.as_ref(), &e.space).unwrap().optimum.raw();
        let ce = entropic_risk(moment, gamma);
        prop_assert!(ce <= -mean + 1e-9, "certainty equivalent {} above mean {}", ce, -mean);
    }
}
