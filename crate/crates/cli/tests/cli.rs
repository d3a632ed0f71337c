use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn ltvab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ltvab"))
        .args(args)
        .output()
        .expect("run ltvab")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Two power-law groups over 14 days with a little deterministic wiggle.
fn two_group_csv(test_scale: f64, test_slope: f64) -> String {
    let mut text = String::from("group,day,avg_revenue\n");
    for (group, scale, slope) in [("control", 1.0, -0.3), ("test", test_scale, test_slope)] {
        for d in 1..=14u32 {
            let wiggle = 1.0 + 0.04 * f64::sin(f64::from(d) * 2.3);
            writeln!(text, "{group},{d},{}", scale * f64::from(d).powf(slope) * wiggle).unwrap();
        }
    }
    text
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    fs::write(&path, text).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn evaluate(input: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        "evaluate",
        "--input",
        s(input),
        "--control",
        "control",
        "--test",
        "test",
        "--seed",
        "7",
    ];
    args.extend_from_slice(extra);
    ltvab(&args)
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("json on stdout")
}

#[test]
fn control_decision_exits_zero_and_reruns_identically() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "data.csv", &two_group_csv(1.02, -0.3));
    let first = evaluate(&input, &["--iterations", "500"]);
    assert_eq!(code(&first), 0, "{}", stderr(&first));
    let report = json(&first);
    assert_eq!(report["decision"], "control");
    assert_eq!(report["config"]["iterations"], 500);
    assert_eq!(report["config"]["horizon"], 365);
    assert_eq!(report["config"]["seed"], 7);
    let q = &report["control"]["ltv_quantiles"];
    let qs: Vec<f64> = ["q025", "q25", "q50", "q75", "q975"]
        .iter()
        .map(|k| q[k].as_f64().unwrap())
        .collect();
    assert!(qs.windows(2).all(|w| w[0] <= w[1]));

    let second = evaluate(&input, &["--iterations", "500"]);
    assert_eq!(first.stdout, second.stdout);
}

#[test]
fn test_decision_exits_ten() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "data.csv", &two_group_csv(2.0, -0.2));
    let out = evaluate(&input, &["--iterations", "400", "--horizon", "90"]);
    assert_eq!(code(&out), 10, "{}", stderr(&out));
    let report = json(&out);
    assert_eq!(report["decision"], "test");
    assert!(report["p_test_minus_control_positive"].as_f64().unwrap() >= 0.95);
}

#[test]
fn same_group_in_both_roles_ties() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "data.csv", &two_group_csv(1.0, -0.3));
    let out = ltvab(&[
        "evaluate",
        "--input",
        s(&input),
        "--control",
        "control",
        "--test",
        "control",
        "--seed",
        "3",
        "--iterations",
        "300",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let report = json(&out);
    assert_eq!(report["p_control_minus_test_positive"].as_f64(), Some(0.0));
    assert_eq!(report["p_test_minus_control_positive"].as_f64(), Some(0.0));
    assert_eq!(report["decision"], "control");
}

#[test]
fn output_file_and_plot_data() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "data.csv", &two_group_csv(1.1, -0.35));
    let report = dir.path().join("report.json");
    let plot = dir.path().join("plot.csv");
    let out = evaluate(
        &input,
        &[
            "--iterations",
            "200",
            "--horizon",
            "30",
            "--output",
            s(&report),
            "--plot-data",
            s(&plot),
        ],
    );
    assert!(out.status.success() || code(&out) == 10);
    assert!(out.stdout.is_empty());
    let parsed: Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(parsed["control"]["band"].as_array().unwrap().len(), 30);

    let plot = fs::read_to_string(&plot).unwrap();
    let lines: Vec<&str> = plot.lines().collect();
    assert_eq!(lines[0], "group,day,observed,extrap_median,extrap_p05,extrap_p95");
    assert_eq!(lines.len(), 1 + 2 * 30);
    assert!(lines[14].starts_with("control,14,") && !lines[14].starts_with("control,14,,"));
    assert!(lines[15].starts_with("control,15,,"));
    assert!(lines[31].starts_with("test,1,"));
}

#[test]
fn weekday_column_adds_coefficients() {
    let dir = TempDir::new().unwrap();
    let mut text = String::from("group,day,avg_revenue,weekday\n");
    for group in ["control", "test"] {
        for d in 1..=21u32 {
            let w = (d + 2) % 7;
            let bump = if w >= 5 { 1.3 } else { 1.0 };
            writeln!(text, "{group},{d},{},{w}", bump * f64::from(d).powf(-0.2)).unwrap();
        }
    }
    let input = write(&dir, "weekday.csv", &text);
    let out = evaluate(&input, &["--iterations", "100"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(json(&out)["control"]["weekday_coefs"].as_array().unwrap().len(), 6);
}

#[test]
fn zero_revenue_names_the_line() {
    let dir = TempDir::new().unwrap();
    let text = two_group_csv(1.0, -0.3).replacen("control,3,", "control,3,0\ncontrol,99,", 1);
    let input = write(&dir, "zero.csv", &text);
    let out = evaluate(&input, &[]);
    assert_eq!(code(&out), 23);
    assert!(stderr(&out).contains("line 4"), "{}", stderr(&out));
}

#[test]
fn log_offset_admits_zero_revenue() {
    let dir = TempDir::new().unwrap();
    let text = two_group_csv(1.0, -0.3).replacen("control,3,", "control,3,0\ncontrol,99,", 1);
    let input = write(&dir, "zero.csv", &text);
    let out = evaluate(&input, &["--log-offset", "0.01", "--iterations", "100"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(json(&out)["config"]["log_offset"].as_f64(), Some(0.01));
}

#[test]
fn input_errors_have_distinct_codes() {
    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("absent.csv");
    assert_eq!(code(&evaluate(&missing, &[])), 20);

    let bad_header = write(&dir, "header.csv", "grp,day,avg_revenue\ncontrol,1,1\n");
    assert_eq!(code(&evaluate(&bad_header, &[])), 21);

    let dup = write(&dir, "dup.csv", &format!("{}control,1,1.5\n", two_group_csv(1.0, -0.3)));
    let out = evaluate(&dup, &[]);
    assert_eq!(code(&out), 22);
    assert!(stderr(&out).contains("line 30"), "{}", stderr(&out));

    let three = write(
        &dir,
        "three.csv",
        &format!("{}other,1,1\nother,2,1\nother,3,1\n", two_group_csv(1.0, -0.3)),
    );
    assert_eq!(code(&evaluate(&three, &[])), 33);

    let data = write(&dir, "data.csv", &two_group_csv(1.0, -0.3));
    assert_eq!(code(&evaluate(&data, &["--horizon", "10"])), 26);
    assert_eq!(code(&evaluate(&data, &["--alpha", "1.5"])), 31);
}

#[test]
fn missing_seed_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "data.csv", &two_group_csv(1.0, -0.3));
    let out = ltvab(&[
        "evaluate",
        "--input",
        s(&input),
        "--control",
        "control",
        "--test",
        "test",
    ]);
    assert_eq!(code(&out), 2);
}

#[test]
fn simulated_crossover_round_trip() {
    let dir = TempDir::new().unwrap();
    let data = dir.path().join("sim.csv");
    let out = ltvab(&[
        "simulate",
        "--preset",
        "crossover",
        "--users",
        "20000",
        "--through-day",
        "14",
        "--output",
        s(&data),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = fs::read_to_string(&data).unwrap();
    assert_eq!(text.lines().count(), 1 + 2 * 14);

    let out = evaluate(&data, &["--iterations", "500"]);
    let report = json(&out);
    let decision = report["decision"].as_str().unwrap();
    assert_eq!(code(&out), if decision == "test" { 10 } else { 0 });
    let p = report["p_test_minus_control_positive"].as_f64().unwrap();
    assert_eq!(decision == "test", 1.0 - p <= report["alpha"].as_f64().unwrap());
}

#[test]
fn scenario_preset_feeds_retrospective() {
    let dir = TempDir::new().unwrap();
    let out = ltvab(&["scenario", "crossover"]);
    assert_eq!(code(&out), 0);
    let mut scenario: Value = serde_json::from_slice(&out.stdout).unwrap();
    scenario["control_n_users"] = 2000.into();
    scenario["test_n_users"] = 2000.into();
    let path = write(&dir, "scenario.json", &scenario.to_string());

    let table = dir.path().join("table.csv");
    let replicates = dir.path().join("replicates.csv");
    let run = || {
        ltvab(&[
            "retrospective",
            "--scenario",
            s(&path),
            "--experiments",
            "1",
            "--seed",
            "5",
            "--iterations",
            "200",
            "--table",
            s(&table),
            "--replicates",
            s(&replicates),
        ])
    };
    let out = run();
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let summary = json(&out);
    for method in ["proposed", "standard"] {
        let m = &summary[method];
        assert_eq!(m["success"].as_u64().unwrap() + m["failure"].as_u64().unwrap(), 1);
    }
    assert_eq!(summary["n_experiments"], 1);
    assert_eq!(summary["truth_day"], 60);
    assert_eq!(run().stdout, out.stdout);

    let table = fs::read_to_string(&table).unwrap();
    assert_eq!(table.lines().next(), Some("method,success,failure,accuracy"));
    assert_eq!(fs::read_to_string(&replicates).unwrap().lines().count(), 2);
}

#[test]
fn retrospective_day_overrides() {
    let out = ltvab(&[
        "retrospective",
        "--preset",
        "crossover",
        "--users",
        "1000",
        "--experiments",
        "2",
        "--iterations",
        "100",
        "--evaluation-day",
        "10",
        "--truth-day",
        "30",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let summary = json(&out);
    assert_eq!(summary["evaluation_day"], 10);
    assert_eq!(summary["truth_day"], 30);
    assert_eq!(summary["true_winner"], "test");

    let bad = ltvab(&[
        "retrospective",
        "--preset",
        "crossover",
        "--experiments",
        "1",
        "--truth-day",
        "500",
    ]);
    assert_eq!(code(&bad), 31);
    let none = ltvab(&["retrospective", "--preset", "crossover", "--experiments", "0"]);
    assert_eq!(code(&none), 31);
}
