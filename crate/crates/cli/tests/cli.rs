use std::path::PathBuf;
use std::process::{Command, Output};

fn histlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_histlab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("scenarios")
        .join(format!("{name}.json"))
        .display()
        .to_string()
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).expect("stdout is JSON")
}

#[test]
fn history_build_reports_the_ghz_amplitudes() {
    let o = histlab(&["history", "build", "--scenario", &fixture("trivial_ghz")]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let v = json(&o);
    assert_eq!(v["passed"], true);
    assert_eq!(v["results"][0]["analysis"], "history");
}

#[test]
fn subcommands_run_on_their_fixtures() {
    for (cmd, sub, name) in [
        ("monitor", "run", "x_step_history"),
        ("channel", "history", "channel_depolarizing"),
        ("pointer", "run", "two_time_pointer"),
        ("uncertainty", "report", "time_fixed"),
        ("run", "", "repeated_spin"),
    ] {
        let mut args = vec![cmd];
        if !sub.is_empty() {
            args.push(sub);
        }
        let path = fixture(name);
        args.extend(["--scenario", path.as_str()]);
        let o = histlab(&args);
        assert_eq!(
            o.status.code(),
            Some(0),
            "{cmd} {sub}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
    }
}

#[test]
fn missing_file_is_an_input_error() {
    let o = histlab(&["run", "--scenario", "/nonexistent/scenario.json"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("nonexistent"));
}

#[test]
fn invalid_scenario_exits_2_and_lists_violations() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(
        &path,
        r#"{"schema_version":1,"name":"bad","chain":{"instants":2,"step":"x"},
            "initial":{"re":[1,0,0],"im":[0,0,0]},"analyses":["history","lg"]}"#,
    )
    .unwrap();
    let o = histlab(&["run", "--scenario", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(
        err.contains("dimension mismatch") && err.contains("'lg'"),
        "{err}"
    );
}

#[test]
fn failed_expectation_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("wrong.json");
    std::fs::write(
        &path,
        r#"{"schema_version":1,"name":"wrong","chain":{"instants":2},
            "initial":{"re":[1,0],"im":[0,0]},"analyses":["history"],
            "expect":{"history.norm":{"value":2}}}"#,
    )
    .unwrap();
    let o = histlab(&["run", "--scenario", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(json(&o)["expectations"][0]["passed"], false);
}

#[test]
fn out_flag_writes_the_report_and_seed_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let o = histlab(&[
        "run",
        "--scenario",
        &fixture("repeated_spin"),
        "--seed",
        "99",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["seed"], 99);
    assert!(v["duration_ms"].is_u64());
}

#[test]
fn lg_sweep_writes_csv() {
    let o = histlab(&[
        "lg",
        "sweep",
        "--scenario",
        &fixture("lg_sweep"),
        "--steps",
        "7",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    assert_eq!(
        rdr.headers().unwrap().iter().collect::<Vec<_>>(),
        ["theta", "c12", "c23", "c13", "k", "violated"]
    );
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 7);
    let k: f64 = rows[2][4].parse().unwrap();
    assert!((k - 1.5).abs() < 1e-12, "θ = π/3 row has K = {k}");
    assert!(String::from_utf8_lossy(&o.stderr).contains("max K"));
}

#[test]
fn reproduce_lists_and_filters_checks() {
    let o = histlab(&["reproduce-paper", "--list"]);
    let names = String::from_utf8(o.stdout).unwrap();
    assert!(names.lines().any(|l| l == "lg_demo"));
    let o = histlab(&["reproduce-paper", "--only", "ghz_form", "--only", "lg_demo"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert_eq!(v["checks"].as_array().unwrap().len(), 2);
    assert_eq!(
        histlab(&["reproduce-paper", "--only", "nope"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn validate_accepts_every_fixture() {
    for entry in
        std::fs::read_dir(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios")).unwrap()
    {
        let path = entry.unwrap().path();
        let o = histlab(&["validate", "--scenario", path.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", path.display());
    }
}
