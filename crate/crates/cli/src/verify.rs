//! The tiny-instance verification suite behind `gcr verify`.

use std::path::Path;
use std::time::Instant;

use gcr_core::make_distribution;
use gcr_core::models::{cvar_variational, CvarForm};
use gcr_core::oracle::suite::{
    catalog_monotonicity, classical_case, cvar_formula_gap, entropic_case, oracle_case, reduction_case, SuiteModel,
};
use gcr_core::GcrError;
use rayon::prelude::*;

use crate::artifacts::{num, write_csv, Manifest};

/// Sizes of the suite.
#[derive(Clone, Copy, Debug)]
pub struct SuiteSize {
    /// Random instances per oracle model.
    pub instances: usize,
    pub classical: usize,
    pub entropic: usize,
    pub cvar_distributions: usize,
    pub monotonicity_trials: usize,
    pub reductions: usize,
}

impl SuiteSize {
    pub fn with_instances(instances: usize) -> Self {
        Self {
            instances,
            classical: 100,
            entropic: 100,
            cvar_distributions: 1000,
            monotonicity_trials: 200,
            reductions: 100,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub cases: usize,
    /// Largest observed error (or count of violations for the counting checks).
    pub worst: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn within(name: &'static str, cases: usize, worst: f64, tolerance: f64, detail: String) -> Self {
        Self { name, cases, worst, tolerance, passed: worst <= tolerance, detail }
    }
}

/// Oracle equivalence, time consistency, classical and entropic agreement, the
/// CVaR formula, monotonicity and the model reductions.
pub fn run_suite(size: SuiteSize, seed: u64) -> Result<Vec<Check>, GcrError> {
    let mut checks = Vec::new();

    let started = Instant::now();
    let jobs: Vec<(SuiteModel, u64)> = SuiteModel::ALL
        .iter()
        .flat_map(|&m| (0..size.instances as u64).map(move |i| (m, seed.wrapping_add(i))))
        .collect();
    let cases = jobs.into_par_iter().map(|(m, s)| oracle_case::<f64>(m, s)).collect::<Result<Vec<_>, _>>()?;
    let elapsed = started.elapsed().as_secs_f64();
    let worst = cases.iter().map(|c| c.gap().max(c.greedy.gap(c.dp))).fold(0.0, f64::max);
    let feasible = cases.iter().filter(|c| c.dp.is_feasible()).count();
    let mut eq = Check::within("oracle_equivalence", cases.len(), worst, 1e-9, format!("{feasible} feasible"));
    log::info!("oracle equivalence: {} cases in {elapsed:.2} s", cases.len());
    eq.passed &= elapsed <= 60.0;
    checks.push(eq);

    let violations: usize = cases.iter().map(|c| c.time_consistency.violations.len()).sum();
    let histories: usize = cases.iter().map(|c| c.time_consistency.histories_checked).sum();
    checks.push(Check::within(
        "time_consistency",
        cases.len(),
        violations as f64,
        0.0,
        format!("{histories} histories"),
    ));

    let classical = (0..size.classical as u64)
        .into_par_iter()
        .map(|i| classical_case::<f64>(seed.wrapping_add(i)).map(|(dp, c)| (dp.raw() - c).abs()))
        .collect::<Result<Vec<_>, _>>()?;
    checks.push(Check::within(
        "classical_dp",
        classical.len(),
        classical.iter().copied().fold(0.0, f64::max),
        1e-12,
        String::new(),
    ));

    let entropic = (0..size.entropic as u64)
        .into_par_iter()
        .map(|i| {
            entropic_case::<f64>(seed.wrapping_add(i))
                .map(|e| ((e.dp - e.direct).abs(), (e.risk - e.risk_definition).abs()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let moment = entropic.iter().map(|e| e.0).fold(0.0, f64::max);
    let risk = entropic.iter().map(|e| e.1).fold(0.0, f64::max);
    checks.push(Check::within(
        "entropic_closed_form",
        entropic.len(),
        moment.max(risk),
        1e-9,
        format!("moment {moment:.3e}, risk {risk:.3e}"),
    ));

    let gap = cvar_formula_gap::<f64>(size.cvar_distributions, seed)?;
    let d = make_distribution::<f64>(&[0.5, 0.5])?;
    let example = cvar_variational(&d, &[0.0, 2.0], 0.4, CvarForm::Payoff)?;
    let mut cvar = Check::within(
        "cvar_formula",
        size.cvar_distributions,
        gap,
        1e-12,
        format!("payoff form {{0: .5, 2: .5}} at 0.4 = {example}"),
    );
    cvar.passed &= example.abs() <= 1e-12;
    checks.push(cvar);

    let mono = catalog_monotonicity::<f64>(size.monotonicity_trials, seed)?;
    let count: usize = mono.iter().map(|(_, r)| r.violations).sum();
    let worst = mono.iter().map(|(_, r)| r.max_violation).fold(f64::NEG_INFINITY, f64::max);
    let names: Vec<&str> = mono.iter().map(|(n, _)| *n).collect();
    let mut m = Check::within(
        "monotonicity",
        mono.iter().map(|(_, r)| r.trials).sum(),
        count as f64,
        0.0,
        format!("max violation {worst:.3e} over {}", names.join(" ")),
    );
    m.passed &= worst <= 1e-12;
    checks.push(m);

    let red = (0..size.reductions as u64)
        .into_par_iter()
        .map(|i| reduction_case::<f64>(seed.wrapping_add(i)))
        .collect::<Result<Vec<_>, _>>()?;
    let wc = red.iter().map(|r| r.worst_case_vs_expected).fold(0.0, f64::max);
    let nested = red.iter().map(|r| r.nested_vs_risk_neutral).fold(0.0, f64::max);
    let spread = red.iter().map(|r| r.cvar_alpha_spread).fold(0.0, f64::max);
    checks.push(Check::within(
        "reductions",
        red.len(),
        wc.max(nested).max(spread),
        1e-12,
        format!("worst_case {wc:.3e}, nested {nested:.3e}, cvar_alpha {spread:.3e}"),
    ));
    Ok(checks)
}

pub const VERIFY_HEADER: [&str; 6] = ["check", "cases", "worst", "tolerance", "status", "detail"];

pub fn write_report(path: &Path, manifest: &Manifest, checks: &[Check]) -> std::io::Result<()> {
    let rows = checks.iter().map(|c| {
        vec![
            c.name.to_string(),
            c.cases.to_string(),
            num(c.worst),
            num(c.tolerance),
            if c.passed { "PASS" } else { "FAIL" }.to_string(),
            c.detail.clone(),
        ]
    });
    write_csv(path, manifest, &VERIFY_HEADER, rows)
}
