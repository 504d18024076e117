use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn emclosure(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_emclosure"))
        .args(args)
        .current_dir(dir)
        .env_remove("RUST_LOG")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn unknown_scenario_is_a_configuration_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = emclosure(dir.path(), &["run-full", "--scenario", "tachyon-gas", "--n", "32"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("tachyon-gas"));

    fs::write(dir.path().join("c.toml"), "[scenario]\nname = \"tachyon-gas\"\n").unwrap();
    let o = emclosure(dir.path(), &["run-reduced", "--config", "c.toml"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unknown_config_key_names_the_key() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.toml"), "[time]\nt_end = 0.1\nstep = 0.01\n").unwrap();
    let o = emclosure(dir.path(), &["run-full", "--config", "c.toml"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("step"), "{}", stderr(&o));
}

#[test]
fn bad_grid_size_is_a_configuration_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = emclosure(dir.path(), &["run-full", "--n", "100"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("grid"));
}

#[test]
fn large_time_step_warns() {
    let dir = tempfile::tempdir().unwrap();
    let o = emclosure(dir.path(), &["run-full", "--n", "32", "--dt", "0.15", "--t-end", "0.3", "--out", "o"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stderr(&o).contains("WARN") && stderr(&o).contains("time.dt"), "{}", stderr(&o));

    let o = emclosure(dir.path(), &["run-full", "--n", "32", "--t-end", "0.3", "--out", "o2"]);
    assert!(!stderr(&o).contains("WARN"), "{}", stderr(&o));
}

#[test]
fn compare_passes_and_fails_on_tolerance() {
    let dir = tempfile::tempdir().unwrap();
    let o = emclosure(dir.path(), &["compare", "--scenario", "matter-packet", "--n", "256", "--t-end", "1.0", "--out", "c"]);
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), stderr(&o));
    let csv = fs::read_to_string(dir.path().join("c/compare.csv")).unwrap();
    assert!(csv.starts_with("t,linf_B0"));
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("c/summary.json")).unwrap()).unwrap();
    assert!(summary["max_linf"].as_f64().unwrap() <= 1e-3);

    let o = emclosure(dir.path(), &["compare", "--n", "32", "--t-end", "0.2", "--out", "d", "--tolerance", "1e-12"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn carleman_riccati_prints_readout_and_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = emclosure(dir.path(), &["carleman", "riccati", "--xi0", "0.5", "--cutoff", "16", "--t-end", "1.0"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let line = out.lines().find(|l| l.trim_start().starts_with("xi ")).expect("readout line");
    let cells: Vec<f64> = line.split_whitespace().skip(1).map(|c| c.parse().unwrap()).collect();
    assert!((cells[1] - 1.0 / 3.0).abs() < 1e-9);
    assert!((cells[0] - cells[1]).abs() <= 1e-4 && cells[2] <= 1e-4, "{line}");

    let o = emclosure(dir.path(), &["carleman", "rotation", "--xi0", "0.5"]);
    assert_eq!(o.status.code(), Some(2), "rotation needs two initial values");
}

#[test]
fn check_suite_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = emclosure(dir.path(), &["check", "--out", "scratch"]);
    let out = stdout(&o);
    assert_eq!(o.status.code(), Some(0), "{out}");
    assert!(out.lines().count() >= 7 && out.lines().all(|l| l.starts_with("[PASS]")), "{out}");
}

#[test]
fn repeated_runs_are_byte_identical_and_config_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let args = |out: &'static str| ["run-full", "--n", "64", "--t-end", "0.4", "--every", "4", "--out", out];
    assert!(emclosure(dir.path(), &args("a")).status.success());
    assert!(emclosure(dir.path(), &args("b")).status.success());
    let mut frames = 0;
    for entry in fs::read_dir(dir.path().join("a")).unwrap() {
        let name = entry.unwrap().file_name();
        let name = name.to_str().unwrap();
        if name.ends_with(".bin") {
            frames += 1;
            assert_eq!(fs::read(dir.path().join("a").join(name)).unwrap(), fs::read(dir.path().join("b").join(name)).unwrap());
        }
    }
    assert!(frames >= 2);

    // The echoed configuration reproduces the run when fed back in.
    let echoed = fs::read_to_string(dir.path().join("a/config.toml")).unwrap();
    fs::write(dir.path().join("echo.toml"), echoed.replace("dir = \"a\"", "dir = \"c\"")).unwrap();
    assert!(emclosure(dir.path(), &["run-full", "--config", "echo.toml"]).status.success());
    assert_eq!(
        fs::read(dir.path().join("a/frame_00001.bin")).unwrap(),
        fs::read(dir.path().join("c/frame_00001.bin")).unwrap()
    );
    let again = fs::read_to_string(dir.path().join("c/config.toml")).unwrap();
    assert_eq!(again, fs::read_to_string(dir.path().join("echo.toml")).unwrap());
}
