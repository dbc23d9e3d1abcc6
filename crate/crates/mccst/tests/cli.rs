use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_mccst");

fn mccst(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

const TWO_ROBOTS: &str = r#"
step_count = 50

[config]
safe_radius = 0.1
seed = 4

[[robots]]
id = 0
position = [0.0, 0.0]
subgroup = 0

[[robots]]
id = 1
position = [0.5, 0.0]
subgroup = 1

[[behaviors]]
subgroup = 0
gain = 1.0
kind = { type = "rendezvous", target = [-2.0, 0.0] }

[[behaviors]]
subgroup = 1
gain = 1.0
kind = { type = "waypoint", target = [2.0, 0.0] }
"#;

fn column_mean(csv: &str, name: &str) -> f64 {
    let mut lines = csv.lines();
    let col = lines.next().unwrap().split(',').position(|c| c == name).unwrap();
    let vals: Vec<f64> = lines.map(|l| l.split(',').nth(col).unwrap().parse().unwrap()).collect();
    vals.iter().sum::<f64>() / vals.len() as f64
}

#[test]
fn two_robot_scenario_writes_three_files() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = dir.path().join("two.toml");
    fs::write(&scenario, TWO_ROBOTS).unwrap();
    let out = dir.path().join("out");
    let o = mccst(&["run", "--scenario", scenario.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let mut names: Vec<String> = fs::read_dir(&out).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    names.sort();
    assert_eq!(names, ["metrics.csv", "trajectory.csv", "tree.txt"]);
    let traj = fs::read_to_string(out.join("trajectory.csv")).unwrap();
    assert_eq!(traj.lines().next().unwrap(), "t,robot_id,x,y,heading,ux_nom,uy_nom,ux_star,uy_star");
    assert_eq!(traj.lines().count(), 1 + 50 * 2);
    let tree = fs::read_to_string(out.join("tree.txt")).unwrap();
    let rows: Vec<&str> = tree.lines().collect();
    assert_eq!(rows[0], "# i j w intra_flag");
    assert_eq!(rows.len(), 2);
    assert!(rows[1].starts_with("0 1 ") && rows[1].ends_with(" 0"));
    let metrics = fs::read_to_string(out.join("metrics.csv")).unwrap();
    assert_eq!(metrics.lines().count(), 51);
}

#[test]
fn missing_scenario_names_the_path() {
    let o = mccst(&["run", "--scenario", "/definitely/not/here.toml", "--out", "/tmp/unused-mccst"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("/definitely/not/here.toml"));
}

#[test]
fn invalid_scenario_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = dir.path().join("far.toml");
    fs::write(&scenario, TWO_ROBOTS.replace("[0.5, 0.0]", "[5.0, 0.0]")).unwrap();
    let o = mccst(&["run", "--scenario", scenario.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("initial graph disconnected"));
}

fn run_demo(dir: &Path, mode: &str, extra: &[&str]) -> String {
    let out = dir.join(mode);
    let mut args = vec!["run", "--mode", mode, "--steps", "200", "--seed", "2", "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    let o = mccst(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    fs::read_to_string(out.join("metrics.csv")).unwrap()
}

#[test]
fn fixed_graph_perturbs_more_than_mccst() {
    let dir = tempfile::tempdir().unwrap();
    let mccst_metrics = run_demo(dir.path(), "mccst", &["--plots", "--trace"]);
    let fixed = run_demo(dir.path(), "fixed-graph", &[]);
    assert!(column_mean(&fixed, "perturbation") > column_mean(&mccst_metrics, "perturbation"));
    for f in ["plots/min_distance.svg", "plots/lambda2.svg", "plots/perturbation.svg", "plots/distance_to_target.svg", "trace.txt", "qp.txt"] {
        assert!(dir.path().join("mccst").join(f).exists(), "{f}");
    }
}

#[test]
fn identical_runs_write_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        let o = mccst(&["run", "--steps", "100", "--seed", "5", "--out", out.to_str().unwrap()]);
        assert!(o.status.success());
    }
    for f in ["trajectory.csv", "metrics.csv", "tree.txt"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn sweep_writes_four_rows_per_mode() {
    let dir = tempfile::tempdir().unwrap();
    let o = mccst(&["sweep", "--sweep", "10,20", "--reps", "2", "--steps", "10", "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    for mode in ["mccst", "centralized", "fixed-mst", "fixed-graph"] {
        assert_eq!(csv.lines().filter(|l| l.starts_with(&format!("{mode},"))).count(), 4);
    }
    assert!(dir.path().join("sweep_timing.csv").exists());
}

#[test]
fn verify_reports_the_injected_comparator_bug() {
    let ok = mccst(&["verify", "--only", "1,2"]);
    assert!(ok.status.success());
    let stdout = String::from_utf8_lossy(&ok.stdout);
    assert_eq!(stdout.lines().filter(|l| l.starts_with("PASS")).count(), 2);
    let bad = mccst(&["verify", "--only", "1", "--inject-comparator-bug"]);
    assert!(!bad.status.success());
    assert!(String::from_utf8_lossy(&bad.stdout).contains("FAIL [ 1] oracle equivalence"));
}

#[test]
fn no_arguments_print_usage() {
    let o = mccst(&[]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
}

#[test]
fn demo_document_loads_back() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("demo.toml");
    assert!(mccst(&["demo", "--seed", "3", "--out", path.to_str().unwrap()]).status.success());
    let o = mccst(&["run", "--scenario", path.to_str().unwrap(), "--steps", "5", "--out", dir.path().join("o").to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}
