use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const STATIC: &str = r#"
schema = "1"
name = "plate"
[geometry]
a_m = 1.0
b_m = 1.0
h_m = 0.2
[material]
ceramic = "zro2-1"
metal = "al"
gradient_index = 1.0
homogenization = "rule-of-mixtures"
[mesh]
degree = 2
control_points = 8
[boundary]
edges = "SSSS"
in_plane = "tangential"
[analysis]
kind = "static"
pressure_pa = 1.0
"#;

const FLUTTER: &str = r#"
schema = "1"
name = "panel"
[geometry]
a_m = 1.0
b_m = 1.0
h_m = 0.01
[material]
ceramic = "al2o3"
metal = "al"
gradient_index = 1.0
[mesh]
degree = 2
control_points = 7
[boundary]
edges = "SSSS"
[analysis]
kind = "flutter"
flow_angle_deg = 0.0
lambda_max_nondim = 50.0
steps = 5
"#;

fn fgm(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fgm-iga")).arg("--out").arg(out).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, file: &str, text: &str) -> PathBuf {
    let p = dir.join(file);
    fs::write(&p, text).unwrap();
    p
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Header and data rows of a CSV written by the tool.
fn csv_body(text: &str) -> Vec<Vec<String>> {
    text.lines().filter(|l| !l.starts_with('#')).map(|l| l.split(',').map(String::from).collect()).collect()
}

fn column(rows: &[Vec<String>], name: &str) -> Vec<String> {
    let k = rows[0].iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"));
    rows[1..].iter().map(|r| r[k].clone()).collect()
}

#[test]
fn run_writes_one_row_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "plate.toml", STATIC);
    let o = fgm(&["run", cfg.to_str().unwrap()], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let csv_path = dir.path().join("plate.result.csv");
    let first = fs::read_to_string(&csv_path).unwrap();
    let rows = csv_body(&first);
    assert_eq!(rows.len(), 2);
    let w: f64 = column(&rows, "w_bar")[0].parse().unwrap();
    assert!(w > 0.2 && w < 0.3, "{w}");
    assert!(first.starts_with("# config_hash: "));
    assert!(dir.path().join("plate.summary.txt").exists());

    let again = fgm(&["run", cfg.to_str().unwrap()], dir.path());
    assert!(again.status.success());
    assert_eq!(fs::read_to_string(&csv_path).unwrap(), first);

    let stamped = fgm(&["--timestamp", "run", cfg.to_str().unwrap()], dir.path());
    assert!(stamped.status.success());
    let text = fs::read_to_string(&csv_path).unwrap();
    assert!(text.lines().any(|l| l.starts_with("# timestamp")), "{text}");
}

#[test]
fn digits_flag_controls_precision() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "plate.toml", STATIC);
    let o = fgm(&["--digits", "3", "run", cfg.to_str().unwrap()], dir.path());
    assert!(o.status.success());
    let rows = csv_body(&fs::read_to_string(dir.path().join("plate.result.csv")).unwrap());
    assert_eq!(column(&rows, "w_bar")[0].len(), "0.272".len());
}

#[test]
fn missing_thickness_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.toml", &STATIC.replace("h_m = 0.2\n", ""));
    let o = fgm(&["run", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("h_m"), "{}", stderr(&o));
}

#[test]
fn unknown_key_and_unreadable_file_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.toml", &STATIC.replace("[mesh]", "[mesh]\nrefine = true"));
    let o = fgm(&["run", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("refine"));
    let o = fgm(&["run", "/nonexistent/config.toml"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn solver_failure_exits_3() {
    // No in-plane restraint leaves rigid in-plane motions: K is singular.
    let dir = tempfile::tempdir().unwrap();
    let text = STATIC.replace("in_plane = \"tangential\"", "in_plane = \"free\"");
    let cfg = write_config(dir.path(), "free.toml", &text);
    let o = fgm(&["run", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("singular"), "{}", stderr(&o));
}

#[test]
fn flutter_below_onset_is_reported_stable() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "panel.toml", FLUTTER);
    let o = fgm(&["run", cfg.to_str().unwrap()], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = csv_body(&fs::read_to_string(dir.path().join("panel.result.csv")).unwrap());
    assert_eq!(column(&rows, "status"), vec!["stable up to lambda_max".to_string()]);
    let lmax: f64 = column(&rows, "lambda_max_bar")[0].parse().unwrap();
    assert!((lmax - 50.0).abs() < 1e-3);
}

#[test]
fn table_rejects_unknown_id() {
    let dir = tempfile::tempdir().unwrap();
    let o = fgm(&["table", "foo"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("static-ssss-alzro2") && err.contains("flutter-iso"), "{err}");
}

#[test]
fn list_benchmarks_shows_ids() {
    let dir = tempfile::tempdir().unwrap();
    let o = fgm(&["list-benchmarks"], dir.path());
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    for id in ["static-ssss-alzro2", "buck-skew-ah100", "tbuck-skew", "flutter-iso"] {
        assert!(text.contains(id), "{text}");
    }
}

#[test]
fn help_and_bad_usage() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(fgm(&["--help"], dir.path()).status.code(), Some(0));
    assert_eq!(fgm(&["frobnicate"], dir.path()).status.code(), Some(2));
    assert_eq!(fgm(&["--digits", "0", "list-benchmarks"], dir.path()).status.code(), Some(2));
}

#[test]
fn sweep_validation() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "plate.toml", STATIC);
    let path = cfg.to_str().unwrap();
    let o = fgm(&["sweep", path, "--param", "n"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let o = fgm(&["sweep", path, "--param", "n", "--values", ""], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let o = fgm(&["sweep", path, "--param", "density", "--values", "1,2"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("density"));
}

#[test]
fn sweep_over_gradient_index() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "plate.toml", STATIC);
    let o = fgm(&["sweep", cfg.to_str().unwrap(), "--param", "n", "--values", "0,0.5,1,2"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = csv_body(&fs::read_to_string(dir.path().join("plate.sweep-n.csv")).unwrap());
    assert_eq!(rows.len(), 5);
    let w: Vec<f64> = column(&rows, "w_bar").iter().map(|s| s.parse().unwrap()).collect();
    assert!(w.windows(2).all(|p| p[1] > p[0]), "{w:?}");
}
