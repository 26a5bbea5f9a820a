use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_recurrencelab"))
        .args(args)
        .env_remove("RECURRENCELAB_CAP")
        .output()
        .expect("binary runs")
}

fn lines(out: &Output) -> Vec<Value> {
    String::from_utf8_lossy(&out.stdout)
        .lines()
        .map(|l| serde_json::from_str(l).unwrap_or_else(|e| panic!("{l}: {e}")))
        .collect()
}

#[test]
fn classify_log_below_one_is_dimension_zero() {
    let out = run(&["classify", "--phi", "log(n)", "--alpha", "0.5", "--beta", "2"]);
    assert!(out.status.success());
    let v = &lines(&out)[0];
    assert_eq!(v["classification"]["dimension"], 0);
    assert_eq!(v["classification"]["case"], Value::Null);
}

#[test]
fn classify_reports_case_and_infinity() {
    let out = run(&["classify", "--phi", "log(n)", "--alpha", "inf", "--beta", "inf"]);
    let v = &lines(&out)[0];
    assert_eq!(v["classification"]["dimension"], 1);
    assert_eq!(v["classification"]["case"], "i");
    assert_eq!(v["alpha"], "inf");
}

#[test]
fn dim_of_f4_is_one_half() {
    let out = run(&["dim", "--fp", "4", "--m", "2", "--depths", "40:800:40"]);
    assert!(out.status.success());
    let est = lines(&out)[0]["fit"]["estimate"].as_f64().unwrap();
    assert!((est - 0.5).abs() < 0.02);
}

#[test]
fn plan_build_rates_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let plan = dir.path().join("plan.json");
    let word = dir.path().join("word.txt");
    let p = plan.to_str().unwrap();
    let out = run(&["plan", "--phi", "log(n)", "--alpha", "1", "--beta", "1", "--horizon", "3", "--out", p]);
    assert!(out.status.success());
    let saved: Value = serde_json::from_str(&std::fs::read_to_string(&plan).unwrap()).unwrap();
    let ns: Vec<&str> = saved["terms"].as_array().unwrap().iter().map(|t| t["n"].as_str().unwrap()).collect();
    assert_eq!(ns, ["3", "55", "8104"]);

    let out = run(&["build", "--plan", p, "--len", "81041", "--out", word.to_str().unwrap()]);
    assert!(out.status.success());
    let from_plan = run(&["rates", "--plan", p, "--phi", "log(n)", "--range", "56:8104"]);
    let from_word = run(&["rates", "--word", word.to_str().unwrap(), "--phi", "log(n)", "--range", "56:8104"]);
    let (a, b) = (lines(&from_plan), lines(&from_word));
    assert_eq!(a.len(), 8049 + 1);
    assert_eq!(a, b);
    assert_eq!(a[0]["R"], "72937");
}

#[test]
fn verify_passes_on_a_desk_scale_plan() {
    let out = run(&["verify", "--phi", "log(n)", "--alpha", "1", "--beta", "1", "--horizon", "3"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = &lines(&out)[0];
    assert_eq!(v["status"], "PASS");
    assert_eq!(v["report"]["checked"], 8049);
}

#[test]
fn verify_beyond_the_cap_is_not_a_pass() {
    let args = ["verify", "--phi", "log(n)", "--alpha", "2", "--beta", "2", "--horizon", "12", "--cap", "1000000"];
    let out = run(&args);
    assert_eq!(out.status.code(), Some(4));
    let l = lines(&out);
    assert_eq!(l[0]["status"], "UNCHECKED");
    assert_eq!(l[1]["error"]["kind"], "capacity");
}

#[test]
fn cap_env_overrides_flag() {
    let out = Command::new(env!("CARGO_BIN_EXE_recurrencelab"))
        .args(["verify", "--phi", "log(n)", "--alpha", "1", "--beta", "1", "--horizon", "3", "--cap", "1000000"])
        .env("RECURRENCELAB_CAP", "5000")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(4));
    let out = Command::new(env!("CARGO_BIN_EXE_recurrencelab"))
        .args(["dim", "--fp", "4", "--depths", "1:9:1"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let out = Command::new(env!("CARGO_BIN_EXE_recurrencelab"))
        .args(["verify", "--phi", "log(n)", "--alpha", "1", "--beta", "1"])
        .env("RECURRENCELAB_CAP", "10")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn return_times_and_witnesses() {
    let out = run(&["return-times", "--input", "0100101"]);
    let l = lines(&out);
    assert_eq!(l.len(), 7);
    assert_eq!(l[0]["R"], serde_json::json!({"kind": "exact", "value": 2}));
    assert_eq!(l[6]["R"]["kind"], "lower_bound");
    let naive = run(&["return-times", "--input", "0100101", "--oracle", "naive"]);
    assert_eq!(lines(&naive), l);

    let out = run(&["witnesses", "--input", "00000000", "--alpha", "0.5", "--eps", "0.1"]);
    let ns: Vec<u64> = lines(&out).iter().map(|v| v["n"].as_u64().unwrap()).collect();
    assert_eq!(ns, (2..=7).collect::<Vec<_>>());
}

#[test]
fn errors_have_distinct_exit_codes() {
    let parse = run(&["classify", "--phi", "log(", "--alpha", "1", "--beta", "1"]);
    assert_eq!(parse.status.code(), Some(3));
    assert_eq!(lines(&parse)[0]["error"]["kind"], "input");

    let guard = run(&["plan", "--phi", "log(n)", "--alpha", "0.5", "--beta", "2"]);
    assert_eq!(guard.status.code(), Some(5));
    assert_eq!(lines(&guard)[0]["error"]["kind"], "guard");

    let digits = run(&["plan", "--phi", "log(n)", "--alpha", "2", "--beta", "2", "--horizon", "30", "--max-digits", "0"]);
    assert_eq!(digits.status.code(), Some(4));

    let usage = run(&["dim", "--fp", "4"]);
    assert_eq!(usage.status.code(), Some(2));

    let estimate = run(&["rates", "--input", "0110", "--phi", "log(n)", "--range", "4:4"]);
    assert_eq!(estimate.status.code(), Some(7));
}
