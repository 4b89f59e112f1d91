//! The five commands. Each writes its artifacts into an output directory and
//! reports what it wrote.

use std::fmt;
use std::path::{Path, PathBuf};

use gcr_core::newsvendor::{run_benchmark, BenchReport, PolicyKind};
use gcr_core::{monte_carlo, solve as solve_model};

use crate::artifacts::{self, Manifest, Rollout, SummaryRow};
use crate::build::build;
use crate::config::{Config, ConfigError, ModelSection, RunSection};
use crate::plots;
use crate::verify::{run_suite, write_report, Check, SuiteSize};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Solve,
    Simulate,
    Verify,
    Bench,
    Export,
}

#[derive(Debug)]
pub enum CliError {
    Config(ConfigError),
    Verification(String),
    Infeasible(String),
    Io(String),
    Runtime(String),
}

impl CliError {
    /// 0 ok, 1 verification failure, 2 configuration or I/O error, 3 infeasible top-level solve.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Verification(_) => 1,
            CliError::Infeasible(_) => 3,
            CliError::Config(_) | CliError::Io(_) | CliError::Runtime(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(e) => write!(f, "{e}"),
            CliError::Verification(m) => write!(f, "verification failed: {m}"),
            CliError::Infeasible(m) => write!(f, "infeasible: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
            CliError::Runtime(m) => write!(f, "error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<gcr_core::GcrError> for CliError {
    fn from(e: gcr_core::GcrError) -> Self {
        CliError::Runtime(e.to_string())
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub lines: Vec<String>,
}

fn prepared(config: &Config) -> Result<Config, CliError> {
    config.materialized().map_err(|(path, message)| CliError::Config(ConfigError { path, line: None, message }))
}

fn out_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))
}

/// `values.csv` and `policy.csv`; exits with the infeasible status after writing
/// them when the initial state has no feasible decision.
pub fn solve(config: &Config, dir: &Path) -> Result<Outcome, CliError> {
    let config = prepared(config)?;
    let manifest = Manifest::for_config(&config);
    let built = build(&config).map_err(|e| CliError::Config(e.locate("")))?;
    let sol = solve_model(&built.model, built.step.as_ref(), &built.space)?;
    out_dir(dir)?;
    let values = dir.join("values.csv");
    let policy = dir.join("policy.csv");
    artifacts::write_values(&values, &manifest, &built.space, &sol.values)?;
    artifacts::write_policy(&policy, &manifest, &built.space, &sol.policy)?;
    if !sol.optimum.is_feasible() {
        return Err(CliError::Infeasible(format!("{} has no feasible decision at the initial state", built.label)));
    }
    Ok(Outcome {
        files: vec![values, policy],
        lines: vec![format!("{}: optimum {}", built.label, artifacts::premium(sol.optimum))],
    })
}

/// `trajectories.csv` and `summary.csv` for the optimal policy.
pub fn simulate(config: &Config, dir: &Path) -> Result<Outcome, CliError> {
    let config = prepared(config)?;
    let manifest = Manifest::for_config(&config);
    let built = build(&config).map_err(|e| CliError::Config(e.locate("")))?;
    let sol = solve_model(&built.model, built.step.as_ref(), &built.space)?;
    if !sol.optimum.is_feasible() {
        return Err(CliError::Infeasible(format!("{} has no feasible decision at the initial state", built.label)));
    }
    let report = monte_carlo(&built.model, &sol.policy, &built.space, config.run.n_trajectories, config.run.seed)?;
    out_dir(dir)?;
    let rollout = [Rollout { policy: &built.label, zeta: built.zeta, report: &report }];
    let trajectories = dir.join("trajectories.csv");
    let summary = dir.join("summary.csv");
    artifacts::write_trajectories(&trajectories, &manifest, &rollout)?;
    let row = [SummaryRow { policy: &built.label, zeta: built.zeta, result: Ok((sol.optimum, &report)) }];
    artifacts::write_summary(&summary, &manifest, &row)?;
    Ok(Outcome {
        files: vec![trajectories, summary],
        lines: vec![format!(
            "{}: mean {:.6} sigma {:.6} over {} trajectories",
            built.label, report.summary.mean, report.summary.sigma, config.run.n_trajectories
        )],
    })
}

/// Runs the oracle suite and writes `verify.csv`; see [`verification_status`].
pub fn verify(run: &RunSection, dir: &Path) -> Result<(Outcome, Vec<Check>), CliError> {
    let checks = run_suite(SuiteSize::with_instances(run.verify_instances), run.seed)?;
    out_dir(dir)?;
    let mut run = run.clone();
    run.output_dir = String::new();
    let manifest = Manifest::for_document(&toml::to_string(&run).expect("run section serializes"));
    let path = dir.join("verify.csv");
    write_report(&path, &manifest, &checks)?;
    let lines = checks
        .iter()
        .map(|c| {
            let status = if c.passed { "PASS" } else { "FAIL" };
            format!(
                "{status} {} ({} cases, worst {:.3e}, tol {:.0e}) {}",
                c.name, c.cases, c.worst, c.tolerance, c.detail
            )
        })
        .collect();
    Ok((Outcome { files: vec![path], lines }, checks))
}

/// `Err` naming the failed checks, if any.
pub fn verification_status(checks: &[Check]) -> Result<(), CliError> {
    let failed: Vec<&str> = checks.iter().filter(|c| !c.passed).map(|c| c.name).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Verification(failed.join(", ")))
    }
}

fn file_tag(policy: PolicyKind, zeta: Option<f64>) -> String {
    match zeta {
        Some(z) => format!("{}_zeta{z}", policy.label()),
        None => policy.label().to_string(),
    }
}

/// Newsvendor sweep over `run.zeta_list`: summary, trajectories, per-period
/// summary and wealth CSVs, plus SVG charts when `run.plots` is set.
pub fn bench(config: &Config, dir: &Path) -> Result<(Outcome, BenchReport<f64>), CliError> {
    let config = prepared(config)?;
    let ModelSection::Newsvendor(params) = &config.model else {
        return Err(CliError::Config(ConfigError {
            path: "model.kind".into(),
            line: None,
            message: "bench needs a newsvendor model".into(),
        }));
    };
    let manifest = Manifest::for_config(&config);
    let report = run_benchmark(params, &config.run.zeta_list, config.run.n_trajectories, config.run.seed)?;
    out_dir(dir)?;

    let mut summary = Vec::new();
    let mut rollouts = Vec::new();
    for cell in &report.cells {
        let label = cell.policy.label();
        match &cell.result {
            Ok(r) => {
                summary.push(SummaryRow { policy: label, zeta: cell.zeta, result: Ok((r.optimum, &r.rollout)) });
                rollouts.push(Rollout { policy: label, zeta: cell.zeta, report: &r.rollout });
            }
            Err(e) => summary.push(SummaryRow { policy: label, zeta: cell.zeta, result: Err(e.to_string()) }),
        }
    }
    let files: Vec<PathBuf> =
        ["summary.csv", "trajectories.csv", "period_summary.csv", "wealth.csv"].iter().map(|f| dir.join(f)).collect();
    artifacts::write_summary(&files[0], &manifest, &summary)?;
    artifacts::write_trajectories(&files[1], &manifest, &rollouts)?;
    artifacts::write_period_summary(&files[2], &manifest, &rollouts)?;
    artifacts::write_wealth(&files[3], &manifest, &rollouts)?;

    let mut all = files;
    if config.run.plots {
        for cell in &report.cells {
            let Ok(r) = &cell.result else { continue };
            let tag = file_tag(cell.policy, cell.zeta);
            let periods = r.rollout.trajectories.first().map_or(0, |t| t.payoffs.len());
            let columns: Vec<Vec<f64>> = (0..periods).map(|t| r.rollout.period_payoffs(t)).collect();
            let charts = [
                (format!("hist_{tag}.svg"), format!("cumulative payoff, {tag}")),
                (format!("periods_{tag}.svg"), format!("per-period payoff, {tag}")),
                (format!("wealth_{tag}.svg"), format!("wealth, {tag}")),
            ];
            plots::histogram(&dir.join(&charts[0].0), &charts[0].1, &r.rollout.cumulative, 20)?;
            plots::box_series(&dir.join(&charts[1].0), &charts[1].1, &columns)?;
            plots::trajectories(&dir.join(&charts[2].0), &charts[2].1, &r.rollout.wealth_paths())?;
            all.extend(charts.iter().map(|c| dir.join(&c.0)));
        }
    }

    let lines = summary
        .iter()
        .map(|row| {
            let zeta = row.zeta.map_or_else(String::new, |z| format!(" zeta={z}"));
            match &row.result {
                Ok((_, rep)) => {
                    format!("{}{zeta}: mean {:.4} sigma {:.4}", row.policy, rep.summary.mean, rep.summary.sigma)
                }
                Err(e) => format!("{}{zeta}: {e}", row.policy),
            }
        })
        .collect();
    Ok((Outcome { files: all, lines }, report))
}

/// The config with every default written out.
pub fn export(config: &Config) -> Result<String, CliError> {
    config.export().map_err(|(path, message)| CliError::Config(ConfigError { path, line: None, message }))
}
