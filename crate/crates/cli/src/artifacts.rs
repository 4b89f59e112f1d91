//! CSV artifacts. Every file starts with a `# manifest:` comment line, then a fixed
//! header; floats use 17 significant digits.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use gcr_core::solver::{MonteCarloReport, Summary};
use gcr_core::{InfoStateSpace64, Policy64, Premium64, ValueTable64};
use sha2::{Digest, Sha256};

use crate::config::Config;

pub const TOOL: &str = "gcr";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Manifest {
    pub config_sha256: String,
}

impl Manifest {
    /// Hash of the canonical config with the output directory blanked, so the
    /// same run written to two places carries the same manifest.
    pub fn for_config(config: &Config) -> Self {
        let mut c = config.clone();
        c.run.output_dir = String::new();
        Self::for_document(&toml::to_string(&c).expect("config serializes"))
    }

    pub fn for_document(text: &str) -> Self {
        let digest = Sha256::digest(text.as_bytes());
        Self { config_sha256: digest.iter().map(|b| format!("{b:02x}")).collect() }
    }

    pub fn line(&self) -> String {
        format!("# manifest: tool={TOOL} {VERSION} config_sha256={}", self.config_sha256)
    }
}

pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn premium(p: Premium64) -> String {
    p.value().map_or_else(|| "INFEASIBLE".to_string(), num)
}

pub fn write_csv(
    path: &Path,
    manifest: &Manifest,
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<String>>,
) -> io::Result<()> {
    let mut file = BufWriter::new(File::create(path)?);
    writeln!(file, "{}", manifest.line())?;
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(file);
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn coord_header(space: &InfoStateSpace64, lead: &[&'static str], tail: &[&'static str]) -> Vec<String> {
    let mut h: Vec<String> = lead.iter().map(|s| s.to_string()).collect();
    h.extend((1..=space.num_axes()).map(|k| format!("y{k}")));
    h.extend(tail.iter().map(|s| s.to_string()));
    h
}

fn state_cells(space: &InfoStateSpace64, t: usize, index: usize) -> Vec<String> {
    let y = space.lattice(t).decode(index);
    let mut row = vec![t.to_string(), y.state.to_string()];
    row.extend(y.coords.iter().map(|c| num(*c)));
    row
}

/// `t, s, y1.., value` for every grid point, in period then lattice order.
pub fn write_values(
    path: &Path,
    manifest: &Manifest,
    space: &InfoStateSpace64,
    values: &ValueTable64,
) -> io::Result<()> {
    let header = coord_header(space, &["t", "s"], &["value"]);
    let rows = values.rows().iter().enumerate().flat_map(|(t, row)| {
        row.iter().enumerate().map(move |(i, v)| {
            let mut cells = state_cells(space, t, i);
            cells.push(premium(*v));
            cells
        })
    });
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    write_csv(path, manifest, &header, rows)
}

/// `t, s, y1.., action, z, aux` for every grid point with a decision.
pub fn write_policy(path: &Path, manifest: &Manifest, space: &InfoStateSpace64, policy: &Policy64) -> io::Result<()> {
    let header = coord_header(space, &["t", "s"], &["action", "z", "aux"]);
    let rows = policy.rows().iter().enumerate().flat_map(|(t, row)| {
        row.iter().enumerate().filter_map(move |(i, d)| {
            let d = (*d)?;
            let mut cells = state_cells(space, t, i);
            cells.push(d.action.to_string());
            cells.push(num(d.z));
            cells.push(d.aux.as_f64().map(num).unwrap_or_default());
            Some(cells)
        })
    });
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    write_csv(path, manifest, &header, rows)
}

/// One simulated policy: a label, its target (if any) and the rollout.
pub struct Rollout<'a> {
    pub policy: &'a str,
    pub zeta: Option<f64>,
    pub report: &'a MonteCarloReport<f64>,
}

fn zeta_cell(z: Option<f64>) -> String {
    z.map(num).unwrap_or_default()
}

fn summary_cells(s: &Summary<f64>) -> [String; 4] {
    [num(s.mean), num(s.sigma), num(s.min), num(s.max)]
}

pub const TRAJECTORY_HEADER: [&str; 10] = ["policy", "zeta", "run_id", "t", "s", "a", "xi", "z", "payoff", "wealth"];

pub fn write_trajectories(path: &Path, manifest: &Manifest, rollouts: &[Rollout<'_>]) -> io::Result<()> {
    let rows = rollouts.iter().flat_map(|r| {
        r.report.trajectories.iter().enumerate().flat_map(move |(run, tr)| {
            let wealth = tr.wealth_path();
            (0..tr.payoffs.len()).map(move |t| {
                let (a, xi) = tr.history.steps[t];
                vec![
                    r.policy.to_string(),
                    zeta_cell(r.zeta),
                    run.to_string(),
                    t.to_string(),
                    tr.info_states[t].state.to_string(),
                    a.to_string(),
                    xi.to_string(),
                    num(tr.disbursements[t]),
                    num(tr.payoffs[t]),
                    num(wealth[t]),
                ]
            })
        })
    });
    write_csv(path, manifest, &TRAJECTORY_HEADER, rows)
}

pub const SUMMARY_HEADER: [&str; 9] = ["policy", "zeta", "n", "mean", "sigma", "min", "max", "optimum", "status"];

/// One summary line; `result` carries the solver optimum or the failure text.
pub struct SummaryRow<'a> {
    pub policy: &'a str,
    pub zeta: Option<f64>,
    pub result: Result<(Premium64, &'a MonteCarloReport<f64>), String>,
}

pub fn write_summary(path: &Path, manifest: &Manifest, rows: &[SummaryRow<'_>]) -> io::Result<()> {
    let rows = rows.iter().map(|r| {
        let mut cells = vec![r.policy.to_string(), zeta_cell(r.zeta)];
        match &r.result {
            Ok((opt, report)) => {
                cells.push(report.cumulative.len().to_string());
                cells.extend(summary_cells(&report.summary));
                cells.push(premium(*opt));
                cells.push("ok".into());
            }
            Err(msg) => {
                cells.extend(std::iter::repeat(String::new()).take(6));
                cells.push(msg.clone());
            }
        }
        cells
    });
    write_csv(path, manifest, &SUMMARY_HEADER, rows)
}

pub const PERIOD_HEADER: [&str; 7] = ["policy", "zeta", "t", "mean", "sigma", "min", "max"];

/// Per-period statistics of `series(report)[trajectory][t]`.
fn write_period_stats(
    path: &Path,
    manifest: &Manifest,
    rollouts: &[Rollout<'_>],
    series: impl Fn(&MonteCarloReport<f64>) -> Vec<Vec<f64>>,
) -> io::Result<()> {
    let mut rows = Vec::new();
    for r in rollouts {
        let paths = series(r.report);
        let periods = paths.first().map_or(0, Vec::len);
        for t in 0..periods {
            let column: Vec<f64> = paths.iter().map(|p| p[t]).collect();
            let mut cells = vec![r.policy.to_string(), zeta_cell(r.zeta), t.to_string()];
            cells.extend(summary_cells(&Summary::of(&column)));
            rows.push(cells);
        }
    }
    write_csv(path, manifest, &PERIOD_HEADER, rows)
}

/// Per-period payoff statistics.
pub fn write_period_summary(path: &Path, manifest: &Manifest, rollouts: &[Rollout<'_>]) -> io::Result<()> {
    write_period_stats(path, manifest, rollouts, |r| r.trajectories.iter().map(|t| t.payoffs.clone()).collect())
}

/// Statistics of the running cumulative payoff after each period.
pub fn write_wealth(path: &Path, manifest: &Manifest, rollouts: &[Rollout<'_>]) -> io::Result<()> {
    write_period_stats(path, manifest, rollouts, MonteCarloReport::wealth_paths)
}
