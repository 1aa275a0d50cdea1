use std::path::{Path, PathBuf};
use std::process::Command;

use forcelab_cli::doc::{Document, SetFamily};
use forcelab_core::format;
use forcelab_core::hposet::{extend_height, HCondition, Policy};
use forcelab_core::Rational;
use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_forcelab"));
    c.env_remove("FORCELAB_SEED");
    c
}

fn scenarios() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios")
}

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

fn run(cmd: &mut Command) -> Run {
    let out = cmd.output().expect("binary runs");
    Run {
        code: out.status.code().unwrap_or(-1),
        stdout: String::from_utf8(out.stdout).unwrap(),
        stderr: String::from_utf8(out.stderr).unwrap(),
    }
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn generated_h() -> HCondition<Rational> {
    let q = HCondition::trivial([5].into());
    extend_height(&q, 3, Policy { fanout: 2, seed: 4 }).unwrap()
}

#[test]
fn validate_generated_condition_passes() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "q.json", &Document::H(generated_h()).to_json());
    let r = run(bin().arg("validate").arg(&f));
    assert_eq!(r.code, 0, "{}{}", r.stdout, r.stderr);
    assert!(r.stdout.contains("ok"));
}

#[test]
fn duplicate_sibling_label_is_a_c1_violation() {
    let dir = TempDir::new().unwrap();
    let mut v = Document::H(generated_h()).to_value();
    let nodes = v["tree"]["nodes"].as_array_mut().unwrap();
    let label = nodes[1]["label"].clone();
    nodes[2]["label"] = label;
    let f = write(&dir, "q.json", &v.to_string());
    let r = run(bin().args(["--format", "structured", "validate"]).arg(&f));
    assert_eq!(r.code, 1);
    let out: Value = serde_json::from_str(&r.stdout).unwrap();
    let clauses: Vec<&str> = out["violations"].as_array().unwrap().iter().map(|v| v["clause"].as_str().unwrap()).collect();
    assert!(clauses.contains(&"c1"), "{clauses:?}");
}

#[test]
fn zero_denominator_is_an_input_error() {
    let dir = TempDir::new().unwrap();
    let f = write(
        &dir,
        "t.json",
        r#"{"schema":1,"kind":"tree","nodes":[{"id":"n0","level":0,"label":"1/0"}]}"#,
    );
    let r = run(bin().arg("validate").arg(&f));
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("zero denominator"), "{}", r.stderr);
}

fn final_condition(report: &Value) -> &Value {
    &report["summary"]["final_condition"]
}

#[test]
fn generic_scenario_meets_its_goals() {
    let r = run(bin().args(["--format", "structured", "run"]).arg(scenarios().join("generic_h.json")));
    assert_eq!(r.code, 0, "{}", r.stderr);
    let rep: Value = serde_json::from_str(&r.stdout).unwrap();
    let q = final_condition(&rep);
    assert!(q["alpha"].as_u64().unwrap() >= 4);
    let keys: Vec<&String> = q["branch_map"].as_object().unwrap().keys().collect();
    assert_eq!(keys, ["12", "7", "9"]);
    assert_eq!(rep["steps"].as_array().unwrap().len(), 4);
    assert!(rep["summary"]["c6_vacuous_total"].as_u64().unwrap() > 0);
}

#[test]
fn f_scenario_adds_two_pairs() {
    let r = run(bin().args(["--format", "structured", "run"]).arg(scenarios().join("f_pairs.json")));
    assert_eq!(r.code, 0, "{}", r.stderr);
    let rep: Value = serde_json::from_str(&r.stdout).unwrap();
    assert_eq!(final_condition(&rep)["phi"].as_object().unwrap().len(), 2);
    assert_eq!(rep["summary"]["phi_size"], 2);
}

#[test]
fn p_scenario_runs() {
    let r = run(bin().arg("run").arg(scenarios().join("p_shoot.json")));
    assert_eq!(r.code, 0, "{}{}", r.stdout, r.stderr);
    assert!(r.stdout.contains("status: ok"));
}

#[test]
fn unresolvable_reference_is_an_input_error() {
    let dir = TempDir::new().unwrap();
    let f = write(
        &dir,
        "s.json",
        r#"{"schema":1,"kind":"scenario","poset":"f","ambient":"missing.json",
            "schedule":[{"op":"add-pair","xi":1,"eta":1}]}"#,
    );
    let r = run(bin().arg("run").arg(&f));
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("missing.json"));
}

#[test]
fn tactic_failure_stops_the_run() {
    let dir = TempDir::new().unwrap();
    let f = write(
        &dir,
        "s.json",
        r#"{"schema":1,"kind":"scenario","poset":"h",
            "schedule":[{"op":"extend-height","height":2},{"op":"extend-height","height":1},{"op":"add-index","index":3}]}"#,
    );
    let r = run(bin().args(["--format", "structured", "run"]).arg(&f));
    assert_eq!(r.code, 1);
    let rep: Value = serde_json::from_str(&r.stdout).unwrap();
    assert_eq!(rep["stopped_at"], 1);
    let outcomes: Vec<&str> = rep["steps"].as_array().unwrap().iter().map(|s| s["outcome"].as_str().unwrap()).collect();
    assert_eq!(outcomes, ["ok", "error", "skipped"]);
}

#[test]
fn max_height_guards_steps() {
    let r = run(bin().args(["--max-height", "3", "run"]).arg(scenarios().join("generic_h.json")));
    assert_eq!(r.code, 1);
    assert!(r.stdout.contains("exceeds"), "{}", r.stdout);
}

#[test]
fn reports_are_deterministic_and_rerenderable() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    let s = scenarios().join("generic_h.json");
    assert_eq!(run(bin().arg("run").arg(&s).arg("-o").arg(&a)).code, 0);
    assert_eq!(run(bin().arg("run").arg(&s).arg("-o").arg(&b)).code, 0);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());

    let human = run(bin().arg("report").arg(&a));
    assert_eq!(human.code, 0);
    assert_eq!(human.stdout.lines().filter(|l| l.trim_start().starts_with("step")).count(), 4);
    assert!(human.stdout.contains("c6-vacuous="));
    let structured = run(bin().args(["--format", "structured", "report"]).arg(&a));
    assert_eq!(structured.stdout.trim_end(), std::fs::read_to_string(&a).unwrap().trim_end());

    let other = dir.path().join("c.json");
    assert_eq!(run(bin().args(["--seed", "8", "run"]).arg(&s).arg("-o").arg(&other)).code, 0);
    assert_ne!(std::fs::read(&a).unwrap(), std::fs::read(&other).unwrap());
}

#[test]
fn stale_report_schema_is_rejected() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a.json");
    run(bin().arg("run").arg(scenarios().join("p_shoot.json")).arg("-o").arg(&a));
    let text = std::fs::read_to_string(&a).unwrap().replace("\"schema\": 1", "\"schema\": 0");
    std::fs::write(&a, text).unwrap();
    let r = run(bin().arg("report").arg(&a));
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("schema"));
}

#[test]
fn seed_environment_variable_is_a_fallback() {
    let dir = TempDir::new().unwrap();
    let f = write(
        &dir,
        "s.json",
        r#"{"schema":1,"kind":"scenario","poset":"h","schedule":[{"op":"goal","goal":"height-above","arg":1}]}"#,
    );
    let seed_of = |cmd: &mut Command| -> u64 {
        let r = run(cmd.args(["--format", "structured", "run"]).arg(&f));
        serde_json::from_str::<Value>(&r.stdout).unwrap()["seed"].as_u64().unwrap()
    };
    assert_eq!(seed_of(&mut bin()), 0);
    assert_eq!(seed_of(bin().env("FORCELAB_SEED", "41")), 41);
    assert_eq!(seed_of(bin().env("FORCELAB_SEED", "41").args(["--seed", "5"])), 5);
    let r = run(bin().env("FORCELAB_SEED", "x").arg("run").arg(&f));
    assert_eq!(r.code, 2);
}

#[test]
fn extend_applies_one_tactic() {
    let dir = TempDir::new().unwrap();
    let q = write(&dir, "q.json", &Document::H(generated_h()).to_json());
    let out = dir.path().join("q2.json");
    let r = run(bin().args(["extend", "--index", "3", "--fanout", "3"]).arg(&q).arg("-o").arg(&out));
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert_eq!(run(bin().arg("validate").arg(&out)).code, 0);
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["alpha"], 4);

    let r = run(bin().args(["extend", "--pair", "1:2"]).arg(&q));
    assert_eq!(r.code, 2);
    let r = run(bin().args(["extend", "--height", "2"]).arg(&q));
    assert_eq!(r.code, 1);
    let r = run(bin().args(["extend", "--height", "5", "--index", "1"]).arg(&q));
    assert_eq!(r.code, 2);

    let f = scenarios().join("f_ambient.json");
    let fc = write(
        &dir,
        "f.json",
        &format!(
            r#"{{"schema":1,"kind":"f-condition","ambient":{:?},"a":[0],"f":{{"n0":"n0"}}}}"#,
            f.to_str().unwrap()
        ),
    );
    let r = run(bin().args(["extend", "--pair", "10:11"]).arg(&fc));
    assert_eq!(r.code, 0, "{}", r.stderr);
    let v: Value = serde_json::from_str(&r.stdout).unwrap();
    assert_eq!(v["phi"]["10"], 11);
}

#[test]
fn delta_system_from_set_family() {
    let dir = TempDir::new().unwrap();
    let fam = SetFamily {
        sets: vec![[1, 2, 3].into(), [1, 2, 4].into(), [1, 2, 5].into(), [1, 6].into()],
    };
    let f = write(&dir, "d.json", &format::to_json(&fam));
    let r = run(bin().args(["--format", "structured", "delta-system"]).arg(&f));
    assert_eq!(r.code, 0, "{}", r.stderr);
    let v: Value = serde_json::from_str(&r.stdout).unwrap();
    assert_eq!(v["root"], serde_json::json!([1, 2]));
    assert_eq!(v["positions"], serde_json::json!([0, 1, 2]));
}

#[test]
fn capture_against_order_and_tree() {
    let dir = TempDir::new().unwrap();
    let order = write(
        &dir,
        "l.json",
        r#"{"schema":1,"kind":"order","elements":[["a","0/1"],["b","1/1"],["c","2/1"]]}"#,
    );
    let set = write(&dir, "z.json", r#"{"schema":1,"kind":"capture-set","cuts":["3/2"]}"#);
    let r = run(bin().args(["--format", "structured", "capture"]).arg(&set).arg("--order").arg(&order).args(["--gamma", "1"]));
    assert_eq!(r.code, 0, "{}", r.stderr);
    let v: Value = serde_json::from_str(&r.stdout).unwrap();
    assert_eq!(v["in_omega"], true);
    assert_eq!(v["gamma"], serde_json::json!([]));

    let bset = write(
        &dir,
        "zb.json",
        r#"{"schema":1,"kind":"capture-set","branches":[["n0","n1","n3"],["n0","n1","n4"]]}"#,
    );
    let r = run(bin().arg("capture").arg(&bset).arg("--tree").arg(scenarios().join("tree2.json")));
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert!(r.stdout.contains("alpha_z: 2"));
    assert!(r.stdout.contains("in omega (tree): false"));
}

#[test]
fn rank_of_terms() {
    let r = run(bin().args(["rank", "wsum(wsum(wsum(fin(1))))"]));
    assert_eq!(r.code, 0);
    assert!(r.stdout.contains("rank 3"));
    let r = run(bin().args(["rank", "sum(omega,eta)"]));
    assert!(r.stdout.contains("not scattered"));
    assert_eq!(run(bin().args(["rank", "wsum("])).code, 2);
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(run(bin().arg("frobnicate")).code, 2);
    assert_eq!(run(bin().arg("--help")).code, 0);
}
