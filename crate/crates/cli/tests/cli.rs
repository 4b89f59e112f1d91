use std::path::Path;
use std::process::{Command, Output};

use gcr_cli::artifacts::{SUMMARY_HEADER, TRAJECTORY_HEADER};
use gcr_cli::commands;
use gcr_cli::config::parse_config;

const PAPER: &str = r#"
[model]
kind = "newsvendor"
s_max = 9
a_max = 9
xi_max = 9
horizon = 10
p = 3.0
c = 2.0
h = 1.0
demand = { kind = "truncated_gaussian", mean = 4.0, variance = 1.2 }
w_min = -540
w_max = 539
z_max = 1079
beta = 4.0
zeta = 15.0
alpha = 0.4

[frontier]
kind = "newsvendor"
policy = "WR"
"#;

const SMALL_NV: &str = r#"
[model]
kind = "newsvendor"
s_max = 3
a_max = 3
xi_max = 3
horizon = 2
p = 3.0
c = 2.0
h = 1.0
demand = { kind = "weights", weights = [1.0, 2.0, 2.0, 1.0] }
w_min = -40
w_max = 40
z_max = 80
beta = 4.0
zeta = 2.0
alpha = 0.4

[frontier]
kind = "newsvendor"
policy = "WR"

[run]
seed = 3
zeta_list = [1.0, 2.0]
"#;

const TABLES: &str = r#"
[model]
kind = "tables"
horizon = 1
next_state = [[[0, 1], [1, 1]], [[0, 0], [1, 0]]]
payoff = [[[1.0, -2.0], [0.5, 0.0]], [[2.0, -1.0], [-0.5, 1.5]]]
noise = [1.0, 1.0]

[frontier]
kind = "risk_neutral"
"#;

const UNREACHABLE: &str = r#"
[model]
kind = "tables"
horizon = 1
next_state = [[[0, 0]]]
payoff = [[[1.0, -1.0]]]
noise = [1.0, 1.0]

[frontier]
kind = "standard_cr"
acceptance = [{ kind = "pointwise_floor", b = 100.0 }]

[grids]
disbursements = [0.0, 1.0]
wealth = [-2.0, -1.0, 0.0, 1.0]
"#;

fn gcr(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_gcr"));
    cmd.args(args).env_remove("GCR_THREADS");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("config.toml");
    std::fs::write(&path, text).unwrap();
    path.display().to_string()
}

fn data_lines(path: &Path) -> Vec<String> {
    std::fs::read_to_string(path).unwrap().lines().map(str::to_string).collect()
}

#[test]
fn paper_newsvendor_config_is_accepted() {
    let config = parse_config(PAPER).unwrap();
    assert_eq!(config.frontier.label(), "WR");
    assert_eq!(config.horizon(), 10);
}

#[test]
fn price_below_cost_is_rejected() {
    let text = PAPER.replace("p = 3.0", "p = 1.0");
    let err = parse_config(&text).unwrap_err();
    assert!(err.to_string().contains("p > c > h"), "{err}");
    assert_eq!(err.line, Some(8));
}

#[test]
fn unknown_key_reports_path_and_line() {
    let text = PAPER.replace("alpha = 0.4", "alpha = 0.4\nfoo = 1");
    let err = parse_config(&text).unwrap_err();
    assert!(err.to_string().contains("foo"), "{err}");
    assert_eq!(err.line, Some(18));
}

#[test]
fn type_mismatch_reports_path() {
    let text = format!("{PAPER}\n[run]\nseed = \"seven\"\n");
    let err = parse_config(&text).unwrap_err();
    assert_eq!(err.path, "run.seed");
    assert!(err.line.is_some());
}

#[test]
fn export_round_trips() {
    for text in [PAPER, SMALL_NV, TABLES, UNREACHABLE] {
        let config = parse_config(text).unwrap();
        let exported = commands::export(&config).unwrap();
        let again = parse_config(&exported).unwrap();
        assert_eq!(commands::export(&again).unwrap(), exported);
        assert_eq!(again.materialized().unwrap(), config.materialized().unwrap());
    }
}

#[test]
fn solve_writes_sorted_tables_with_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let config = parse_config(TABLES).unwrap();
    let out = commands::solve(&config, dir.path()).unwrap();
    assert_eq!(out.files.len(), 2);
    let values = data_lines(&dir.path().join("values.csv"));
    assert!(values[0].starts_with("# manifest: tool=gcr "));
    assert!(values[0].contains("config_sha256="));
    assert_eq!(values[1], "t,s,value");
    let keys: Vec<(usize, usize)> = values[2..]
        .iter()
        .map(|l| {
            let mut it = l.split(',');
            (it.next().unwrap().parse().unwrap(), it.next().unwrap().parse().unwrap())
        })
        .collect();
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted);
    let policy = data_lines(&dir.path().join("policy.csv"));
    assert_eq!(policy[1], "t,s,action,z,aux");
}

#[test]
fn manifest_ignores_output_dir() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let config = parse_config(TABLES).unwrap();
    commands::solve(&config, a.path()).unwrap();
    commands::solve(&config, b.path()).unwrap();
    for f in ["values.csv", "policy.csv"] {
        assert_eq!(data_lines(&a.path().join(f)), data_lines(&b.path().join(f)));
    }
}

#[test]
fn simulate_headers() {
    let dir = tempfile::tempdir().unwrap();
    let config = parse_config(TABLES).unwrap();
    commands::simulate(&config, dir.path()).unwrap();
    let traj = data_lines(&dir.path().join("trajectories.csv"));
    assert_eq!(traj[1], TRAJECTORY_HEADER.join(","));
    let summary = data_lines(&dir.path().join("summary.csv"));
    assert_eq!(summary[1], SUMMARY_HEADER.join(","));
    assert_eq!(summary.len(), 3);
    assert!(summary[2].ends_with(",ok"));
}

#[test]
fn binary_verify_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("v");
    let out = gcr(&["verify", "-o", out_dir.to_str().unwrap()], &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out_dir.join("verify.csv").exists());
    assert!(String::from_utf8_lossy(&out.stdout).contains("PASS oracle_equivalence"));
}

#[test]
fn binary_bench_writes_four_csvs() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SMALL_NV);
    let out_dir = dir.path().join("b");
    let out = gcr(&["bench", "-c", &config, "-o", out_dir.to_str().unwrap(), "-n", "1"], &[("GCR_THREADS", "2")]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["summary.csv", "trajectories.csv", "period_summary.csv", "wealth.csv"] {
        assert!(out_dir.join(f).exists(), "{f}");
    }
    let summary = data_lines(&out_dir.join("summary.csv"));
    // SC, WR and CO at two targets, plus RN and N.
    assert_eq!(summary.len(), 2 + 8);
}

#[test]
fn binary_infeasible_solve_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), UNREACHABLE);
    let out_dir = dir.path().join("s");
    let out = gcr(&["solve", "-c", &config, "-o", out_dir.to_str().unwrap()], &[]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    let values = std::fs::read_to_string(out_dir.join("values.csv")).unwrap();
    assert!(values.contains("INFEASIBLE"));
}

#[test]
fn binary_bad_config_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), &PAPER.replace("p = 3.0", "p = 1.0"));
    let out = gcr(&["solve", "-c", &config], &[]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("model.p") && err.contains("line 8"), "{err}");

    let missing = gcr(&["solve", "-c", "/nonexistent/gcr.toml"], &[]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn binary_rejects_bad_thread_count() {
    let out = gcr(&["verify"], &[("GCR_THREADS", "zero")]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn binary_export_prints_materialized_config() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), TABLES);
    let out = gcr(&["export", "-c", &config], &[]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("[grids]"));
    parse_config(&text).unwrap();
}

#[test]
fn bundled_configs_parse() {
    for text in [include_str!("../../../configs/newsvendor.toml"), include_str!("../../../configs/tables.toml")] {
        parse_config(text).unwrap();
    }
}
