//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use gcr_cli::commands;
use gcr_cli::config::{parse_config, Config, FrontierSection, RunSection};
use gcr_core::make_distribution;
use gcr_core::models::{cvar_variational, CvarForm};
use gcr_core::newsvendor::{NewsvendorParams, PolicyKind};
use gcr_core::oracle::suite::{
    catalog_monotonicity, classical_case, cvar_formula_gap, entropic_case, oracle_case, reduction_case, SuiteModel,
};
use rayon::prelude::*;

struct Outcome {
    passed: bool,
    detail: String,
}

fn report(results: &mut Vec<bool>, id: usize, name: &str, outcome: Result<Outcome, String>) {
    let (passed, detail) = match outcome {
        Ok(o) => (o.passed, o.detail),
        Err(e) => (false, format!("error: {e}")),
    };
    println!("{} [{id}] {name}: {detail}", if passed { "PASS" } else { "FAIL" });
    results.push(passed);
}

fn oracle_and_time_consistency() -> Result<(Outcome, Outcome), String> {
    let started = Instant::now();
    let jobs: Vec<(SuiteModel, u64)> =
        SuiteModel::ALL.iter().flat_map(|&m| (0..50u64).map(move |s| (m, 1000 + s))).collect();
    let cases = jobs
        .into_par_iter()
        .map(|(m, s)| oracle_case::<f64>(m, s))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    let secs = started.elapsed().as_secs_f64();
    let mut per_model = Vec::new();
    let mut worst_all = 0.0f64;
    for m in SuiteModel::ALL {
        let worst = cases.iter().filter(|c| c.model == m).map(|c| c.gap()).fold(0.0, f64::max);
        let feasible = cases.iter().filter(|c| c.model == m && c.oracle.is_feasible()).count();
        worst_all = worst_all.max(worst);
        per_model.push(format!("{} {worst:.1e} ({feasible}/50 feasible)", m.label()));
    }
    let mismatched_feasibility = cases.iter().filter(|c| c.dp.is_feasible() != c.oracle.is_feasible()).count();
    let equivalence = Outcome {
        passed: worst_all <= 1e-9 && mismatched_feasibility == 0 && secs <= 60.0,
        detail: format!("max gap {worst_all:.2e} over {} cases in {secs:.2} s; {}", cases.len(), per_model.join(", ")),
    };
    let violations: usize = cases.iter().map(|c| c.time_consistency.violations.len()).sum();
    let histories: usize = cases.iter().map(|c| c.time_consistency.histories_checked).sum();
    let greedy = cases.iter().map(|c| c.greedy.gap(c.dp)).fold(0.0, f64::max);
    let consistency = Outcome {
        passed: violations == 0 && greedy <= 1e-9,
        detail: format!(
            "{violations} violations over {histories} reachable histories; greedy direct objective gap {greedy:.1e}"
        ),
    };
    Ok((equivalence, consistency))
}

fn classical() -> Result<Outcome, String> {
    let gaps = (0..100u64)
        .into_par_iter()
        .map(|s| classical_case::<f64>(2000 + s).map(|(dp, c)| (dp.raw() - c).abs()))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    let worst = gaps.iter().copied().fold(0.0, f64::max);
    Ok(Outcome { passed: worst <= 1e-12, detail: format!("max gap {worst:.2e} over 100 instances") })
}

fn entropic() -> Result<Outcome, String> {
    let cases = (0..100u64)
        .into_par_iter()
        .map(|s| entropic_case::<f64>(3000 + s))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    let moment = cases.iter().map(|c| (c.dp - c.direct).abs()).fold(0.0, f64::max);
    let risk = cases.iter().map(|c| (c.risk - c.risk_definition).abs()).fold(0.0, f64::max);
    Ok(Outcome {
        passed: moment <= 1e-9 && risk <= 1e-9,
        detail: format!("E[exp(-gamma sum X)] gap {moment:.2e}, -(1/gamma) log gap {risk:.2e} over 100 instances"),
    })
}

fn cvar() -> Result<Outcome, String> {
    let gap = cvar_formula_gap::<f64>(1000, 4000).map_err(|e| e.to_string())?;
    let d = make_distribution::<f64>(&[0.5, 0.5]).map_err(|e| e.to_string())?;
    let example = cvar_variational(&d, &[0.0, 2.0], 0.4, CvarForm::Payoff).map_err(|e| e.to_string())?;
    Ok(Outcome {
        passed: gap <= 1e-12 && example.abs() <= 1e-12,
        detail: format!("max gap {gap:.2e} over 1000 distributions; payoff form {{0: .5, 2: .5}} at 0.4 = {example}"),
    })
}

fn monotonicity() -> Result<Outcome, String> {
    let reports = catalog_monotonicity::<f64>(200, 5000).map_err(|e| e.to_string())?;
    let bad: Vec<String> = reports
        .iter()
        .filter(|(_, r)| r.violations > 0 || r.max_violation > 1e-12 || r.trials != 200)
        .map(|(n, r)| format!("{n} ({} violations, max {:.2e})", r.violations, r.max_violation))
        .collect();
    Ok(Outcome {
        passed: bad.is_empty(),
        detail: if bad.is_empty() {
            format!("0 violations in 200 trials for each of {} models", reports.len())
        } else {
            bad.join(", ")
        },
    })
}

fn reductions() -> Result<Outcome, String> {
    let cases = (0..100u64)
        .into_par_iter()
        .map(|s| reduction_case::<f64>(6000 + s))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    let wc = cases.iter().map(|c| c.worst_case_vs_expected).fold(0.0, f64::max);
    let nested = cases.iter().map(|c| c.nested_vs_risk_neutral).fold(0.0, f64::max);
    let spread = cases.iter().map(|c| c.cvar_alpha_spread).fold(0.0, f64::max);
    Ok(Outcome {
        passed: wc <= 1e-12 && nested <= 1e-12 && spread <= 1e-12,
        detail: format!(
            "worst-case(K=0) vs expected shortfall {wc:.2e}, nested(E) vs risk-neutral {nested:.2e}, CVaR alpha spread {spread:.2e}"
        ),
    })
}

fn paper_config(n: usize, seed: u64) -> Config {
    Config {
        model: gcr_cli::config::ModelSection::Newsvendor(NewsvendorParams::paper()),
        frontier: FrontierSection::RiskNeutral,
        grids: Default::default(),
        run: RunSection { seed, n_trajectories: n, ..Default::default() },
    }
}

/// Count of `xs[k+1] < xs[k]` and the largest relative drop.
fn inversions(xs: &[f64]) -> (usize, f64) {
    xs.windows(2).filter(|w| w[1] < w[0]).fold((0, 0.0), |(n, worst), w| (n + 1, f64::max(worst, (w[0] - w[1]) / w[0])))
}

fn newsvendor(dir: &Path) -> Result<Outcome, String> {
    let config = paper_config(50, 20240601);
    let p = NewsvendorParams::<f64>::paper();
    let exact = p.s_max == 9 && p.a_max == 9 && p.xi_max == 9 && p.horizon == 10 && p.p == 3.0 && p.c == 2.0;
    let exact =
        exact && p.h == 1.0 && p.beta == 4.0 && p.alpha == 0.4 && (p.w_min, p.w_max, p.z_max) == (-540, 539, 1079);
    let started = Instant::now();
    let (_, report) = commands::bench(&config, dir).map_err(|e| e.to_string())?;
    let secs = started.elapsed().as_secs_f64();
    let zetas = [10.0, 15.0, 20.0, 25.0];
    let stats = |kind: PolicyKind| -> Result<Vec<(f64, f64)>, String> {
        zetas
            .iter()
            .map(|z| {
                let cell = report.cell(kind, Some(*z)).ok_or("missing cell")?;
                let r = cell.result.as_ref().map_err(|e| format!("{} zeta={z}: {e}", kind.label()))?;
                Ok((r.rollout.summary.mean, r.rollout.summary.sigma))
            })
            .collect()
    };
    let wr = stats(PolicyKind::Wr)?;
    let co = stats(PolicyKind::Co)?;
    let a = wr.iter().zip(zetas).all(|((m, _), z)| (m - z).abs() <= 0.1 * z);
    let wr_sigma: Vec<f64> = wr.iter().map(|s| s.1).collect();
    let co_sigma: Vec<f64> = co.iter().map(|s| s.1).collect();
    let co_mean: Vec<f64> = co.iter().map(|s| s.0).collect();
    let (wr_inv, wr_drop) = inversions(&wr_sigma);
    let (co_inv, co_drop) = inversions(&co_sigma);
    let b = wr_inv <= 1 && co_inv <= 1;
    let c = inversions(&co_mean).0 == 0;
    let d = secs <= 600.0;
    let fmt = |xs: &[f64]| xs.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>().join("/");
    Ok(Outcome {
        passed: exact && a && b && c && d,
        detail: format!(
            "(a) {} WR means {} vs zeta 10/15/20/25; (b) {} WR sigma {} ({wr_inv} inversion, max drop {:.0}%), CO sigma {} ({co_inv} inversion, max drop {:.0}%); (c) {} CO means {}; (d) {} {secs:.1} s",
            if a { "ok" } else { "FAIL" },
            fmt(&wr.iter().map(|s| s.0).collect::<Vec<_>>()),
            if b { "ok" } else { "FAIL" },
            fmt(&wr_sigma),
            100.0 * wr_drop,
            fmt(&co_sigma),
            100.0 * co_drop,
            if c { "ok" } else { "FAIL" },
            fmt(&co_mean),
            if d { "ok" } else { "FAIL" },
        ),
    })
}

fn read_all(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .expect("output dir")
        .map(|e| {
            let e = e.expect("dir entry");
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).expect("read artifact"))
        })
        .collect();
    files.sort();
    files
}

const TINY: &str = r#"
[model]
kind = "tables"
horizon = 2
next_state = [[[0, 1], [1, 1]], [[0, 0], [1, 0]]]
payoff = [[[1.0, -2.0], [0.5, 0.0]], [[2.0, -1.0], [-0.5, 1.5]]]
noise = [1.0, 2.0]

[frontier]
kind = "cvar_shortfall"
alpha = 0.5
acceptance = [{ kind = "expectation_floor", b = 0.5 }]

[grids]
disbursements = [0.0, 0.5, 1.0, 2.0]

[run]
seed = 11
n_trajectories = 25
"#;

fn determinism(root: &Path) -> Result<Outcome, String> {
    let tiny = parse_config(TINY).map_err(|e| e.to_string())?;
    let bench = paper_config(3, 99);
    let mut checked = Vec::new();
    for (name, run) in [("solve", 0usize), ("simulate", 1), ("verify", 2), ("bench", 3), ("export", 4)] {
        let mut outputs = Vec::new();
        for k in 0..2 {
            let dir = root.join(format!("{name}{k}"));
            match run {
                0 => drop(commands::solve(&tiny, &dir).map_err(|e| e.to_string())?),
                1 => drop(commands::simulate(&tiny, &dir).map_err(|e| e.to_string())?),
                2 => drop(
                    commands::verify(&RunSection { verify_instances: 10, ..tiny.run.clone() }, &dir)
                        .map_err(|e| e.to_string())?,
                ),
                3 => drop(commands::bench(&bench, &dir).map_err(|e| e.to_string())?),
                _ => {
                    std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
                    let text = commands::export(&tiny).map_err(|e| e.to_string())?;
                    std::fs::write(dir.join("config.toml"), text).map_err(|e| e.to_string())?;
                }
            }
            outputs.push(read_all(&dir));
        }
        if outputs[0] != outputs[1] || outputs[0].is_empty() {
            return Ok(Outcome { passed: false, detail: format!("{name} artifacts differ between runs") });
        }
        checked.push(format!("{name} ({} files)", outputs[0].len()));
    }
    Ok(Outcome { passed: true, detail: format!("byte-identical reruns: {}", checked.join(", ")) })
}

fn main() -> ExitCode {
    let tmp = tempfile::tempdir().expect("temp dir");
    let mut results = Vec::new();
    match oracle_and_time_consistency() {
        Ok((eq, tc)) => {
            report(&mut results, 1, "oracle equivalence", Ok(eq));
            report(&mut results, 2, "classical DP equivalence", classical());
            report(&mut results, 3, "entropic closed form", entropic());
            report(&mut results, 4, "CVaR formula", cvar());
            report(&mut results, 5, "monotonicity", monotonicity());
            report(&mut results, 6, "time consistency", Ok(tc));
        }
        Err(e) => {
            report(&mut results, 1, "oracle equivalence", Err(e.clone()));
            report(&mut results, 2, "classical DP equivalence", classical());
            report(&mut results, 3, "entropic closed form", entropic());
            report(&mut results, 4, "CVaR formula", cvar());
            report(&mut results, 5, "monotonicity", monotonicity());
            report(&mut results, 6, "time consistency", Err(e));
        }
    }
    report(&mut results, 7, "reductions", reductions());
    report(&mut results, 8, "newsvendor qualitative reproduction", newsvendor(&tmp.path().join("bench")));
    report(&mut results, 9, "determinism", determinism(tmp.path()));
    let failed = results.iter().filter(|p| !**p).count();
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
