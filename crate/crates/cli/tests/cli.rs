use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_betamomentum"));
    cmd.env_remove("BETAMOMENTUM_OUT");
    cmd
}

fn write_config(dir: &Path, body: &str) -> std::path::PathBuf {
    let path = dir.join("config.json");
    fs::write(&path, body).unwrap();
    path
}

fn run(dir: &Path, body: &str) -> (Output, std::path::PathBuf) {
    let cfg = write_config(dir, body);
    let out = dir.join("out");
    let output = bin().arg("run").arg(&cfg).arg("--out").arg(&out).output().unwrap();
    (output, out)
}

fn files_with_prefix(dir: &Path, prefix: &str) -> Vec<String> {
    let mut names: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n.starts_with(prefix))
        .collect();
    names.sort();
    names
}

const MINIMAL: &str = r#"{
    "objective": {"kind": "quadratic", "spectrum": [1, 10]},
    "x0": [1, 1],
    "betas": [0, 1],
    "steps": [0.025],
    "max_iter": 200,
    "checks": ["energy_decrement"]
}"#;

#[test]
fn minimal_config_writes_trajectories_energies_and_clean_summary() {
    let tmp = tempfile::tempdir().unwrap();
    let (output, out) = run(tmp.path(), MINIMAL);
    assert_eq!(output.status.code(), Some(0), "{}", String::from_utf8_lossy(&output.stdout));
    assert_eq!(files_with_prefix(&out, "trajectory_").len(), 2);
    assert_eq!(files_with_prefix(&out, "energy_").len(), 2);
    let summary = fs::read_to_string(out.join("summary.txt")).unwrap();
    assert!(summary.contains("binding failures: 0"));
    assert!(summary.contains("0 violations over 199 steps"));
    assert!(!summary.contains("FAIL "));
    assert!(summary.trim_end().ends_with("result: PASS"));

    let energy = fs::read_to_string(out.join("energy_b1_s0.025.csv")).unwrap();
    assert_eq!(energy.lines().next().unwrap(), "k,E,dE,rhs,violated");
    assert_eq!(energy.lines().count(), 200);
}

#[test]
fn step_outside_every_hypothesis_is_advisory_and_exits_zero() {
    let tmp = tempfile::tempdir().unwrap();
    let body = MINIMAL
        .replace(r#""steps": [0.025]"#, r#""steps": [1]"#)
        .replace(r#"["energy_decrement"]"#, r#"["energy_decrement", "continuous_bound"]"#);
    let (output, out) = run(tmp.path(), &body);
    assert_eq!(output.status.code(), Some(0));
    let summary = fs::read_to_string(out.join("summary.txt")).unwrap();
    let rows: Vec<&str> = summary.lines().filter(|l| l.split_whitespace().nth(1).is_some_and(|c| c.starts_with('b'))).collect();
    assert!(!rows.is_empty());
    assert!(rows.iter().all(|l| l.starts_with("ADVISORY-")), "{summary}");
}

#[test]
fn empty_method_grid_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let (output, out) = run(tmp.path(), &MINIMAL.replace(r#""betas": [0, 1]"#, r#""betas": []"#));
    assert_eq!(output.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&output.stderr).contains("empty"));
    assert!(!out.exists());
}

#[test]
fn malformed_config_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let (output, _) = run(tmp.path(), "{ not json");
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn invalid_cell_is_reported_and_the_rest_still_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let (output, out) = run(tmp.path(), &MINIMAL.replace(r#""betas": [0, 1]"#, r#""betas": [-0.5, 1]"#));
    assert_eq!(output.status.code(), Some(1));
    let summary = fs::read_to_string(out.join("summary.txt")).unwrap();
    assert!(summary.lines().any(|l| l.starts_with("FAIL") && l.contains("cell/parameter_domain")));
    assert_eq!(files_with_prefix(&out, "trajectory_"), vec!["trajectory_b1_s0.025.csv"]);
}

#[test]
fn identical_config_gives_identical_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let body = r#"{
        "objective": {"kind": "logsumexp", "dim": 2, "mu": 1, "curvature": 9, "seed": 7},
        "x0": [1, 1],
        "betas": [0.5],
        "steps": [0.025],
        "max_iter": 100,
        "ode": {"t_end": 2},
        "checks": ["energy_decrement", "continuous_bound"]
    }"#;
    let cfg = write_config(tmp.path(), body);
    for name in ["a", "b"] {
        let status = bin().arg("run").arg(&cfg).arg("--out").arg(tmp.path().join(name)).status().unwrap();
        assert_eq!(status.code(), Some(0));
    }
    for file in files_with_prefix(&tmp.path().join("a"), "") {
        let a = fs::read(tmp.path().join("a").join(&file)).unwrap();
        let b = fs::read(tmp.path().join("b").join(&file)).unwrap();
        assert!(a == b, "{file} differs between runs");
    }
}

#[test]
fn output_root_comes_from_the_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &MINIMAL.replace(r#""max_iter": 200"#, r#""max_iter": 50, "output_dir": "nested""#));
    let status = bin().arg("run").arg(&cfg).env("BETAMOMENTUM_OUT", tmp.path().join("root")).status().unwrap();
    assert_eq!(status.code(), Some(0));
    assert!(tmp.path().join("root/nested/summary.txt").exists());
}

#[test]
fn phase_sweep_flips_once_near_critical_beta() {
    let tmp = tempfile::tempdir().unwrap();
    let output = bin()
        .args(["sweep-phase", "--mu-over-l", "0.1", "--c", "4", "--beta", "0:1:0.05", "--out"])
        .arg(tmp.path())
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&output.stdout);
    let flips: Vec<&str> = stdout.lines().filter(|l| l.starts_with("regime flip")).collect();
    assert_eq!(flips.len(), 1, "{stdout}");
    assert!(flips[0].contains("between beta = 0.85") && flips[0].ends_with("and 0.9"), "{}", flips[0]);

    let csv = fs::read_to_string(tmp.path().join("phase_sweep.csv")).unwrap();
    let rows: Vec<Vec<&str>> = csv.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 21);
    let beta_c: f64 = rows[0][8].parse().unwrap();
    assert!((beta_c - 0.8922).abs() < 5e-4);
    assert!(rows.iter().all(|r| r[10] == "true"));
}

#[test]
fn phase_sweep_flags_out_of_window_steps() {
    let tmp = tempfile::tempdir().unwrap();
    let output = bin()
        .args(["sweep-phase", "--mu-over-l", "0.1", "--c", "2,4,500", "--beta", "0.5", "--out"])
        .arg(tmp.path())
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0));
    let csv = fs::read_to_string(tmp.path().join("phase_sweep.csv")).unwrap();
    let flags: Vec<&str> = csv.lines().skip(1).map(|l| l.rsplit(',').next().unwrap()).collect();
    assert_eq!(flags, vec!["false", "true", "false"]);
}

#[test]
fn phase_sweep_rejects_bad_grids() {
    let output = bin().args(["sweep-phase", "--mu-over-l", "", "--c", "4", "--beta", "0.5"]).output().unwrap();
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn plots_after_minimal_run_and_on_empty_dir() {
    let tmp = tempfile::tempdir().unwrap();
    let (_, out) = run(tmp.path(), MINIMAL);
    let output = bin().arg("plots").arg(&out).output().unwrap();
    assert_eq!(output.status.code(), Some(0));
    assert_eq!(files_with_prefix(&out, "plot_"), vec!["plot_energy.py", "plot_gaps.py"]);
    let gaps = fs::read_to_string(out.join("plot_gaps.py")).unwrap();
    assert!(gaps.contains("\"trajectory_b0_s0.025.csv\"") && gaps.contains("\"trajectory_b1_s0.025.csv\""));

    let empty = tmp.path().join("empty");
    fs::create_dir(&empty).unwrap();
    let output = bin().arg("plots").arg(&empty).output().unwrap();
    assert_eq!(output.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("notice:") && stdout.contains("0 plot scripts"));
    assert!(files_with_prefix(&empty, "").is_empty());
}

#[test]
fn plots_for_phase_sweep_draw_the_critical_curve() {
    let tmp = tempfile::tempdir().unwrap();
    let status = bin()
        .args(["sweep-phase", "--mu-over-l", "0.1", "--c", "4:40:4", "--beta", "0:1:0.1", "--out"])
        .arg(tmp.path())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let output = bin().arg("plots").arg(tmp.path()).output().unwrap();
    assert_eq!(output.status.code(), Some(0));
    let script = fs::read_to_string(tmp.path().join("plot_phase.py")).unwrap();
    assert!(script.contains("imshow") && script.contains("beta_c"));
}
