use histlab_cli::error::CliError;
use histlab_cli::report::Status;
use histlab_cli::reproduce::FIXTURES;
use histlab_cli::run::run_scenario;
use histlab_cli::scenario::{parse_scenario_str, Analysis};

fn prepare_err(json: &str) -> Vec<String> {
    let s = parse_scenario_str(json).expect("schema-valid");
    match s.prepare(&s.analyses, None) {
        Err(e) => e.violations(),
        Ok(_) => panic!("scenario should be rejected"),
    }
}

#[test]
fn every_fixture_meets_its_expectations() {
    for (name, text) in FIXTURES {
        let s = parse_scenario_str(text).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(&s.name, name);
        assert!(!s.expect.is_empty(), "{name} declares no expectations");
        let p = s
            .prepare(&s.analyses, None)
            .unwrap_or_else(|e| panic!("{name}: {:?}", e.violations()));
        let r = run_scenario(&p, &s.analyses);
        assert!(r.passed, "{name}: {}", r.body_json());
        assert_eq!(r.expectations.len(), s.expect.len());
    }
}

#[test]
fn dimension_mismatch_names_both_fields() {
    let errs = prepare_err(
        r#"{"schema_version":1,"name":"m","chain":{"instants":2,"step":"x"},
            "initial":{"re":[1,0,0],"im":[0,0,0]},"analyses":["history"]}"#,
    );
    let hit = errs
        .iter()
        .find(|e| e.contains("dimension mismatch"))
        .expect("mismatch reported");
    assert!(
        hit.contains("chain.step") && hit.contains("initial"),
        "{hit}"
    );
}

#[test]
fn all_violations_are_reported_together() {
    let errs = prepare_err(
        r#"{"schema_version":2,"name":"m","tolerance":-1,"chain":{"instants":1},
            "analyses":["history","pointer"]}"#,
    );
    assert!(errs.iter().any(|e| e.contains("schema_version")));
    assert!(errs.iter().any(|e| e.contains("tolerance")));
    assert!(errs.iter().any(|e| e.contains("instants")));
    assert!(errs.iter().any(|e| e.contains("'pointer'")));
}

#[test]
fn shots_require_a_seed() {
    let json = r#"{"schema_version":1,"name":"m","chain":{"instants":2},
        "initial":{"re":[1,0],"im":[0,0]},
        "measurements":{"instants":[0,1],"observables":["z","z"],"shots":10},
        "analyses":["sequential"]}"#;
    assert!(prepare_err(json).iter().any(|e| e.contains("seed")));
    let s = parse_scenario_str(json).unwrap();
    assert!(s.prepare(&s.analyses, Some(3)).is_ok());
}

#[test]
fn unknown_keys_are_rejected() {
    let e = parse_scenario_str(r#"{"schema_version":1,"name":"m","analyses":["lg"],"bogus":1}"#)
        .unwrap_err();
    assert!(matches!(e, CliError::Schema(_)), "{e}");
}

#[test]
fn expectations_must_name_a_requested_analysis() {
    let errs = prepare_err(
        r#"{"schema_version":1,"name":"m","lg":{"theta_min":0,"theta_max":1,"steps":3},
            "analyses":["lg"],"expect":{"history.norm":{"value":1}}}"#,
    );
    assert!(errs.iter().any(|e| e.contains("history.norm")));
}

#[test]
fn tau_and_explicit_steps_conflict() {
    let errs = prepare_err(
        r#"{"schema_version":1,"name":"m","chain":{"instants":2,"step":"x"},
            "initial":{"re":[1,0],"im":[0,0]},"energy":{"hamiltonian":"z","tau":1.0},
            "analyses":["uncertainty"]}"#,
    );
    assert!(errs.iter().any(|e| e.contains("tau")));
}

#[test]
fn identical_runs_give_identical_reports() {
    let text = FIXTURES.iter().find(|f| f.0 == "repeated_spin").unwrap().1;
    let s = parse_scenario_str(text).unwrap();
    let run = |seed| {
        let p = s.prepare(&s.analyses, seed).unwrap();
        run_scenario(&p, &s.analyses).body_json()
    };
    assert_eq!(run(None), run(None));
    assert_ne!(run(Some(1)), run(Some(2)));
}

#[test]
fn a_failing_analysis_does_not_suppress_the_others() {
    let s = parse_scenario_str(
        r#"{"schema_version":1,"name":"m","chain":{"instants":2},
            "initial":{"re":[1,0],"im":[0,0]},"monitor":{"postselect":{"re":[0,1],"im":[0,0]}},
            "analyses":["monitor","history"],"expect":{"history.norm":{"value":1}}}"#,
    )
    .unwrap();
    let p = s.prepare(&s.analyses, None).unwrap();
    let r = run_scenario(&p, &s.analyses);
    assert_eq!(r.block(Analysis::Monitor).unwrap().status, Status::Error);
    assert!(r.block(Analysis::Monitor).unwrap().error.is_some());
    assert_eq!(r.block(Analysis::History).unwrap().status, Status::Ok);
    assert!(r.expectations[0].passed);
    assert!(!r.passed);
}

#[test]
fn metrics_resolve_nested_paths() {
    let text = FIXTURES.iter().find(|f| f.0 == "trivial_ghz").unwrap().1;
    let s = parse_scenario_str(text).unwrap();
    let r = run_scenario(&s.prepare(&s.analyses, None).unwrap(), &s.analyses);
    assert!((r.metric("history.norm").unwrap() - 1.0).abs() < 1e-12);
    assert!(r.metric("history.state.re.0").is_some());
    assert!(r.metric("history.no_such_field").is_none());
    assert!(r.metric("lg.max.k").is_none());
}
