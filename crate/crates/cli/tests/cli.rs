use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_curvespeed"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn curvespeed")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Copies the built-in configs into a temp dir, replacing the search
/// section so a sweep only takes a handful of runs per scenario.
fn cheap_configs() -> TempDir {
    let dir = TempDir::new().unwrap();
    for entry in fs::read_dir(configs_dir()).unwrap() {
        let entry = entry.unwrap();
        fs::copy(entry.path(), dir.path().join(entry.file_name())).unwrap();
    }
    let scenario = dir.path().join("scenario.toml");
    let text = fs::read_to_string(&scenario).unwrap();
    let text = text
        .replace("start_mph = 15.0", "start_mph = 45.0")
        .replace("increment_mph = 1.0", "increment_mph = 5.0");
    fs::write(&scenario, text).unwrap();
    dir
}

fn data_lines(text: &str) -> Vec<&str> {
    text.lines().filter(|l| !l.starts_with('#')).collect()
}

#[test]
fn simulate_exit_codes() {
    let tmp = TempDir::new().unwrap();
    let safe = tmp.path().join("safe");
    let o = run(&["simulate", "--v-curve", "15", "--out", safe.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("safe"));
    let traj = fs::read_to_string(safe.join("trajectory.csv")).unwrap();
    assert!(traj.starts_with("# curvespeed"));
    assert!(safe.join("outcome.json").exists());

    let fast = tmp.path().join("fast");
    let o = run(&["simulate", "--v-curve", "120", "--out", fast.to_str().unwrap()]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
    assert!(fast.join("trajectory.csv").exists());
}

#[test]
fn simulate_refuses_non_empty_out_without_force() {
    let tmp = TempDir::new().unwrap();
    fs::write(tmp.path().join("keep.txt"), "x").unwrap();
    let out = tmp.path().to_str().unwrap();
    let o = run(&["simulate", "--v-curve", "15", "--out", out]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("--force"));
    let o = run(&["simulate", "--v-curve", "15", "--out", out, "--force"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
}

#[test]
fn missing_vehicle_file_names_the_path() {
    let dir = cheap_configs();
    fs::remove_file(dir.path().join("suv.toml")).unwrap();
    let cfg = dir.path().join("scenario.toml");
    let o = run(&["--config", cfg.to_str().unwrap(), "aashto"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("suv.toml"), "{}", stderr(&o));
}

#[test]
fn malformed_config_is_a_usage_error() {
    let dir = cheap_configs();
    let cfg = dir.path().join("scenario.toml");
    fs::write(&cfg, "curve = [unclosed\n").unwrap();
    let o = run(&["--config", cfg.to_str().unwrap(), "aashto"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("scenario.toml"), "{}", stderr(&o));

    let o = run(&["simulate", "--v-curve", "not-a-number"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn sweep_writes_reports_and_refuses_rerun() {
    let dir = cheap_configs();
    let cfg = dir.path().join("scenario.toml");
    let out = dir.path().join("results");
    let args = ["--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "sweep"];
    let o = run(&args);
    assert_eq!(code(&o), 0, "{}", stderr(&o));

    let comparison = fs::read_to_string(out.join("comparison.csv")).unwrap();
    let rows = data_lines(&comparison);
    assert_eq!(rows.len(), 7, "{comparison}");
    assert!(rows[0].starts_with("vehicle,condition,"));
    for row in &rows[1..] {
        let fields: Vec<&str> = row.split(',').collect();
        assert_eq!(fields[4], "", "no observed speeds given: {row}");
        let sim: f64 = fields[2].parse().unwrap();
        assert!(sim >= 45.0 && (sim % 5.0) == 0.0, "{row}");
    }
    let manifest = fs::read_to_string(out.join("MANIFEST")).unwrap();
    assert!(manifest.contains("status: complete"));
    assert!(manifest.contains("results.json"));
    assert!(fs::read_dir(out.join("trajectories")).unwrap().count() >= 6);

    let again = run(&args);
    assert_eq!(code(&again), 1);
    assert!(stderr(&again).contains("not empty"));
}

#[test]
fn sweep_with_observed_speeds_fills_deviation() {
    let dir = cheap_configs();
    let cfg = dir.path().join("scenario.toml");
    let observed = dir.path().join("observed.csv");
    fs::write(&observed, "vehicle,condition,observed_max_mph\nsedan,dry,60\n").unwrap();
    let out = dir.path().join("results");
    let o = run(&[
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "sweep",
        "--vehicle",
        "sedan",
        "--condition",
        "dry",
        "--observed",
        observed.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let comparison = fs::read_to_string(out.join("comparison.csv")).unwrap();
    let rows = data_lines(&comparison);
    assert_eq!(rows.len(), 2, "{comparison}");
    let fields: Vec<&str> = rows[1].split(',').collect();
    assert_eq!(fields[4], "60");
    let sim: f64 = fields[2].parse().unwrap();
    let dev: f64 = fields[5].parse().unwrap();
    assert!((dev - (sim - 60.0) / 60.0 * 100.0).abs() < 1e-3, "{}", rows[1]);
    assert!(!fields[6].is_empty());
}

#[test]
fn aashto_subcommand() {
    let o = run(&["aashto"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).starts_with("48.57 mph"), "{}", stdout(&o));

    let o = run(&["aashto", "--round"]);
    let v: f64 = stdout(&o).trim().parse().unwrap();
    assert_eq!(v, 45.0);
    assert_eq!(v % 5.0, 0.0);

    let o = run(&["aashto", "--radius", "500", "--e", "0", "--f-const", "0.15"]);
    assert!(stdout(&o).starts_with("33.54 mph"), "{}", stdout(&o));

    let o = run(&["aashto", "--f-const", "0.15", "--table", "x.csv"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn route_export_offset_column() {
    let o = run(&["route-export"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = stdout(&o);
    let rows = data_lines(&text);
    assert_eq!(rows[0], "index,x_ft,y_ft,z_ft,station_ft,offset_ft");
    assert!(rows[1..].iter().all(|r| r.ends_with(",1.25")));

    let dir = cheap_configs();
    let curve = dir.path().join("curve.toml");
    let text = fs::read_to_string(&curve).unwrap().replace("offset_ft = 1.25", "offset_ft = 0.0");
    fs::write(&curve, text).unwrap();
    let cfg = dir.path().join("scenario.toml");
    let o = run(&["--config", cfg.to_str().unwrap(), "route-export"]);
    let text = stdout(&o);
    assert!(data_lines(&text)[1..].iter().all(|r| r.ends_with(",0")));
}

#[test]
fn route_export_refuses_overwrite() {
    let tmp = TempDir::new().unwrap();
    let path = tmp.path().join("route.csv");
    fs::write(&path, "x").unwrap();
    let o = run(&["--out", path.to_str().unwrap(), "route-export"]);
    assert_eq!(code(&o), 1);
    let o = run(&["--out", path.to_str().unwrap(), "--force", "route-export"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(fs::read_to_string(&path).unwrap().contains("offset_ft"));
}

#[test]
fn imported_route_reproduces_trajectory() {
    let dir = cheap_configs();
    let cfg = dir.path().join("scenario.toml");
    let route = dir.path().join("route.csv");
    let o = run(&["--config", cfg.to_str().unwrap(), "--out", route.to_str().unwrap(), "route-export"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));

    let generated = dir.path().join("generated");
    let o = run(&["--config", cfg.to_str().unwrap(), "--out", generated.to_str().unwrap(), "simulate", "--v-curve", "40"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));

    let mut text = fs::read_to_string(&cfg).unwrap();
    text = text.replacen("output_dir", "route_file = \"route.csv\"\noutput_dir", 1);
    fs::write(&cfg, text).unwrap();
    let imported = dir.path().join("imported");
    let o = run(&["--config", cfg.to_str().unwrap(), "--out", imported.to_str().unwrap(), "simulate", "--v-curve", "40"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));

    let a = fs::read_to_string(generated.join("trajectory.csv")).unwrap();
    let b = fs::read_to_string(imported.join("trajectory.csv")).unwrap();
    assert!(data_lines(&a).len() > 100);
    assert_eq!(data_lines(&a), data_lines(&b));
}

#[test]
fn dump_config_round_trips() {
    let o = run(&["--dump-config"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    assert!(text.contains("[search]") && text.contains("[control]"), "{text}");
    // The dump is itself a valid set of section overrides.
    let dir = cheap_configs();
    let cfg = dir.path().join("scenario.toml");
    let head: String = fs::read_to_string(&cfg)
        .unwrap()
        .lines()
        .take_while(|l| !l.starts_with('['))
        .map(|l| format!("{l}\n"))
        .collect();
    fs::write(&cfg, format!("{head}{text}")).unwrap();
    let o = run(&["--config", cfg.to_str().unwrap(), "aashto", "--round"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(code(&run(&["--help"])), 0);
    assert_eq!(code(&run(&["--version"])), 0);
    assert_eq!(code(&run(&["bogus"])), 1);
}
