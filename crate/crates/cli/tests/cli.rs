use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures").join(name)
}

fn contiplan(args: &[&dyn AsRef<std::ffi::OsStr>]) -> Output {
    let mut c = Command::new(env!("CARGO_BIN_EXE_contiplan"));
    for a in args {
        c.arg(a);
    }
    c.output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn plan_then_validate() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("p1.plan");
    let o = contiplan(&[&"plan", &fixture("delivery-domain.pddl"), &fixture("delivery-p1.pddl"), &"-o", &out]);
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(stdout(&o), text);
    assert_eq!(text.lines().count(), 4);
    assert!(text.starts_with("0.000: (load r1 b1 w1) [1.000]"));
    let v = contiplan(&[&"validate", &fixture("delivery-domain.pddl"), &fixture("delivery-p1.pddl"), &out]);
    assert_eq!(v.status.code(), Some(0), "{}", stdout(&v));
}

#[test]
fn unsolvable_plan_prints_unsat() {
    let o = contiplan(&[&"plan", &fixture("delivery-domain.pddl"), &fixture("delivery-unsolvable.pddl")]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stdout(&o).trim(), "UNSAT");
}

#[test]
fn missing_or_broken_input_exits_2() {
    let o = contiplan(&[&"plan", &fixture("delivery-domain.pddl"), &"no-such-problem.pddl"]);
    assert_eq!(o.status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.pddl");
    std::fs::write(&bad, "(define (problem x) (:domain delivery) (:init (at r1").unwrap();
    let o = contiplan(&[&"plan", &fixture("delivery-domain.pddl"), &bad]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("error"));
    let o = contiplan(&[&"plan", &fixture("delivery-domain.pddl"), &fixture("delivery-p1.pddl"), &"--min-commit", &"0"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn validate_reports_failing_step() {
    let dir = tempfile::tempdir().unwrap();
    let swapped = dir.path().join("swapped.plan");
    std::fs::write(&swapped, "0.000: (move r1 w1 w2) [2.000]\n2.001: (load r1 b1 w1) [1.000]\n").unwrap();
    let o = contiplan(&[&"validate", &fixture("delivery-domain.pddl"), &fixture("delivery-p1.pddl"), &swapped]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("step 2"), "{}", stdout(&o));

    let empty = dir.path().join("empty.plan");
    std::fs::write(&empty, "").unwrap();
    let o = contiplan(&[&"validate", &fixture("delivery-domain.pddl"), &fixture("delivery-p1.pddl"), &empty]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("GoalNotReached"));
}

fn last_record(trace: &str) -> serde_json::Value {
    serde_json::from_str(trace.lines().last().unwrap()).unwrap()
}

#[test]
fn run_writes_trace() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("t.jsonl");
    let o = contiplan(&[&"run", &fixture("scenarios/delivery.json"), &"--trace", &trace]);
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(&trace).unwrap();
    let last = last_record(&text);
    assert_eq!(last["kind"], "outcome");
    assert_eq!(last["outcome"], "GoalAchieved");
}

#[test]
fn road_closure_replans() {
    let o = contiplan(&[&"run", &fixture("scenarios/closure-a.json")]);
    assert_eq!(o.status.code(), Some(0));
    let replans = stdout(&o)
        .lines()
        .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap())
        .filter(|r| r["kind"] == "search_started" && r["reason"] == "forecast")
        .count();
    assert!(replans >= 1);
}

#[test]
fn run_is_deterministic_and_honours_overrides() {
    let a = contiplan(&[&"run", &fixture("scenarios/closure-b.json"), &"--seed", &"7"]);
    let b = contiplan(&[&"run", &fixture("scenarios/closure-b.json"), &"--seed", &"7"]);
    assert_eq!(a.stdout, b.stdout);
    let small = contiplan(&[&"run", &fixture("scenarios/delivery.json"), &"--plan-size-limit", &"8", &"--deterministic=true"]);
    let rounds = stdout(&small).lines().filter(|l| l.contains(r#""kind":"round""#) && l.contains("non_improving")).count();
    assert_eq!(rounds, 1);
    let short = contiplan(&[&"run", &fixture("scenarios/delivery.json"), &"--time-limit", &"2.5"]);
    assert_eq!(short.status.code(), Some(1));
    assert_eq!(last_record(&stdout(&short))["outcome"], "TimeLimit");
}

#[test]
fn malformed_scenario_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"domain_path": "x.pddl", "events": 3}"#).unwrap();
    assert_eq!(contiplan(&[&"run", &bad]).status.code(), Some(2));
    assert_eq!(contiplan(&[&"run", &"missing.json"]).status.code(), Some(2));
}
