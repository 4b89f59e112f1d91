use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gcr_cli::commands::{self, verification_status, CliError};
use gcr_cli::config::{parse_config, Config, ConfigError};

#[derive(Parser)]
#[command(name = "gcr", version, about = "Risk-aware dynamic programming with generalized capital requirements")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(clap::Args, Clone)]
struct Common {
    /// TOML configuration file.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Output directory (overrides `run.output_dir`).
    #[arg(short, long)]
    out: Option<PathBuf>,
    /// Overrides `run.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides `run.n_trajectories`.
    #[arg(short = 'n', long)]
    trajectories: Option<usize>,
    /// Write SVG charts next to the bench CSVs.
    #[arg(long)]
    plots: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve and write values.csv and policy.csv.
    Solve(Common),
    /// Solve, roll out the optimal policy and write trajectories.csv and summary.csv.
    Simulate(Common),
    /// Run the oracle suite and write verify.csv.
    Verify(Common),
    /// Newsvendor sweep over run.zeta_list.
    Bench(Common),
    /// Print the configuration with defaults filled in.
    Export(Common),
}

fn load(common: &Common) -> Result<Option<Config>, CliError> {
    let Some(path) = &common.config else {
        return Ok(None);
    };
    let text = std::fs::read_to_string(path).map_err(|e| {
        CliError::Config(ConfigError { path: String::new(), line: None, message: format!("{}: {e}", path.display()) })
    })?;
    let mut config = parse_config(&text).map_err(CliError::Config)?;
    if let Some(seed) = common.seed {
        config.run.seed = seed;
    }
    if let Some(n) = common.trajectories {
        config.run.n_trajectories = n;
    }
    config.run.plots |= common.plots;
    if let Some(out) = &common.out {
        config.run.output_dir = out.display().to_string();
    }
    Ok(Some(config))
}

fn required(config: Option<Config>) -> Result<Config, CliError> {
    config.ok_or_else(|| {
        CliError::Config(ConfigError { path: String::new(), line: None, message: "--config is required".into() })
    })
}

fn run(cmd: Cmd) -> Result<Vec<String>, CliError> {
    let (Cmd::Solve(common) | Cmd::Simulate(common) | Cmd::Verify(common) | Cmd::Bench(common) | Cmd::Export(common)) =
        &cmd;
    let config = load(common)?;
    let dir = |c: &Config| PathBuf::from(&c.run.output_dir);
    let outcome = match cmd {
        Cmd::Solve(_) => {
            let c = required(config)?;
            commands::solve(&c, &dir(&c))?
        }
        Cmd::Simulate(_) => {
            let c = required(config)?;
            commands::simulate(&c, &dir(&c))?
        }
        Cmd::Bench(_) => {
            let c = required(config)?;
            commands::bench(&c, &dir(&c))?.0
        }
        Cmd::Verify(ref common) => {
            let mut run = config.map(|c| c.run).unwrap_or_default();
            if let Some(seed) = common.seed {
                run.seed = seed;
            }
            if let Some(out) = &common.out {
                run.output_dir = out.display().to_string();
            }
            let (outcome, checks) = commands::verify(&run, &PathBuf::from(&run.output_dir))?;
            for line in &outcome.lines {
                println!("{line}");
            }
            verification_status(&checks)?;
            return Ok(Vec::new());
        }
        Cmd::Export(_) => {
            let c = required(config)?;
            return Ok(vec![commands::export(&c)?]);
        }
    };
    let mut lines = outcome.lines;
    lines.extend(outcome.files.iter().map(|f| format!("wrote {}", f.display())));
    Ok(lines)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Ok(n) = std::env::var("GCR_THREADS") {
        match n.parse::<usize>() {
            Ok(n) if n > 0 => {
                if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                    eprintln!("GCR_THREADS: {e}");
                }
            }
            _ => {
                eprintln!("GCR_THREADS must be a positive integer, got `{n}`");
                return ExitCode::from(2);
            }
        }
    }
    match run(Cli::parse().command) {
        Ok(lines) => {
            for line in lines {
                println!("{line}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
