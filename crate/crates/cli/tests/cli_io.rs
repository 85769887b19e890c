//! Command-level behavior: output formats, determinism, exit codes.

use std::fs;
use std::process::Command;

use mechsqueeze_cli::commands::{cmd_analytic, cmd_simulate, cmd_sweep, trajectory_csv};
use mechsqueeze_cli::config::RunConfig;

const REFERENCE_CONFIG: &str = "\
setup = setup1_rwa

[system]
kappa = 0.05
gamma_m = 0.0
n_th = 0.0

[drive]
chi1 = 0.01
chi2 = 0.03

[grid]
t_end = 800.0
points = 40
";

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mechsqueeze"))
}

#[test]
fn simulate_writes_csv_with_contract_header_and_is_deterministic() {
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    let cfg = RunConfig::parse(REFERENCE_CONFIG).unwrap();
    cmd_simulate(&cfg, dir_a.path()).unwrap();
    cmd_simulate(&cfg, dir_b.path()).unwrap();
    let a = fs::read(dir_a.path().join("trajectory.csv")).unwrap();
    let b = fs::read(dir_b.path().join("trajectory.csv")).unwrap();
    assert_eq!(a, b, "reruns must be byte-identical");
    let text = String::from_utf8(a).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "t,epr_min,n_c1,n_c2,re_c1c2,im_c1c2,purity"
    );
    // 17 significant digits per field.
    let first = lines.next().unwrap();
    for field in first.split(',') {
        assert!(field.contains('e'), "field `{field}` not in scientific form");
    }
    // Last row has epr_min ~ 1 (the gamma_m = 0 reference point).
    let last = text.lines().last().unwrap();
    let epr: f64 = last.split(',').nth(1).unwrap().parse().unwrap();
    assert!((epr - 1.0).abs() < 1e-6, "final epr {epr}");

    // Manifest echoes a config that reparses to the original.
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir_a.path().join("manifest.json")).unwrap())
            .unwrap();
    let echo = manifest["config_echo"].as_str().unwrap();
    assert_eq!(RunConfig::parse(echo).unwrap(), cfg);
    assert!(manifest["summary"]["final_epr_min"].as_f64().is_some());
}

#[test]
fn analytic_reports_the_thermal_tolerance() {
    let dir = tempfile::tempdir().unwrap();
    let text = REFERENCE_CONFIG.replace("gamma_m = 0.0", "gamma_m = 1e-4");
    let cfg = RunConfig::parse(&text).unwrap();
    cmd_analytic(&cfg, dir.path()).unwrap();
    let table = fs::read_to_string(dir.path().join("analytic.txt")).unwrap();
    assert!(table.contains("n_th,max"), "{table}");
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("manifest.json")).unwrap())
            .unwrap();
    let nmax = manifest["prediction"]["nth_max"].as_f64().unwrap();
    assert!((68.0..72.0).contains(&nmax), "nth_max {nmax}");
    let tmin = manifest["prediction"]["t_min"].as_f64().unwrap();
    assert!((tmin - 80.0).abs() < 1e-9);
}

#[test]
fn sweep_marks_unstable_rows_and_matches_simulate() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig::parse(REFERENCE_CONFIG).unwrap();
    cmd_sweep(&cfg, "chi1", &[0.01, 0.031], 2, dir.path()).unwrap();
    let csv = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows[0], "chi1,status,epr_min,predicted_epr_min,n_c1,n_c2,purity");
    assert!(rows[1].contains(",ok,"));
    assert!(rows[2].contains(",unstable,"));
    // The single-value row reproduces the simulate summary.
    let epr_sweep: f64 = rows[1].split(',').nth(2).unwrap().parse().unwrap();
    let sim_dir = tempfile::tempdir().unwrap();
    cmd_simulate(&cfg, sim_dir.path()).unwrap();
    let traj = fs::read_to_string(sim_dir.path().join("trajectory.csv")).unwrap();
    let epr_sim: f64 = traj
        .lines()
        .last()
        .unwrap()
        .split(',')
        .nth(1)
        .unwrap()
        .parse()
        .unwrap();
    assert_eq!(epr_sweep, epr_sim);
}

#[test]
fn binary_exit_codes_follow_the_contract() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.conf");
    fs::write(&good, REFERENCE_CONFIG).unwrap();
    let out = bin()
        .args(["analytic", "--config"])
        .arg(&good)
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("Delta_EPR,min"), "{stdout}");

    // chi1 >= chi2: exit code 2, stability message.
    let unstable = dir.path().join("unstable.conf");
    fs::write(&unstable, REFERENCE_CONFIG.replace("chi1 = 0.01", "chi1 = 0.05")).unwrap();
    let out = bin()
        .args(["analytic", "--config"])
        .arg(&unstable)
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("stability"));

    // Malformed config: exit code 1.
    let broken = dir.path().join("broken.conf");
    fs::write(&broken, "points = 0\n").unwrap();
    let out = bin()
        .args(["simulate", "--config"])
        .arg(&broken)
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn setup2_config_runs_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let text = "\
setup = setup2
[system]
kappa = 0.05
[drive]
chi1 = 0.01
chi2 = 0.03
[setup2]
j12 = 10.0
[grid]
t_end = 480.0
points = 30
";
    let cfg = RunConfig::parse(text).unwrap();
    let out = cmd_simulate(&cfg, dir.path()).unwrap();
    assert_eq!(out.outputs.len(), 2);
    let traj = fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    let epr: f64 = traj
        .lines()
        .last()
        .unwrap()
        .split(',')
        .nth(1)
        .unwrap()
        .parse()
        .unwrap();
    // Default schedule switches at 3 t_min = 240; after both steps the pair
    // approaches the TMSV value 1 up to rotating-wave corrections.
    assert!((epr - 1.0).abs() < 0.01, "epr {epr}");
}

#[test]
fn trajectory_csv_uses_full_precision() {
    let cfg = RunConfig::parse(REFERENCE_CONFIG).unwrap();
    let resolved = mechsqueeze_cli::commands::resolve(&cfg).unwrap();
    let res = mechsqueeze::protocols::run_setup1(&resolved.params, 10.0, 2).unwrap();
    let csv = trajectory_csv(&res);
    let row = csv.lines().nth(2).unwrap();
    let reparsed: f64 = row.split(',').nth(1).unwrap().parse().unwrap();
    assert_eq!(reparsed, res.epr_min_series[1], "roundtrip must be exact");
}
