use std::process::{Command, Output};

use serde_json::Value;

fn cu_bound(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cu-bound"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(args: &[&str]) -> Value {
    let out = cu_bound(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("valid json")
}

fn number(v: &Value) -> f64 {
    v.as_str().expect("numbers are strings").parse().unwrap()
}

fn truncate5(x: f64) -> f64 {
    (x * 1e5).floor() / 1e5
}

#[test]
fn bounds_two_state_chain() {
    let v = json(&["bounds", "--m", "3", "--d", "2", "--g", "1", "--t", "1"]);
    assert_eq!(v["command"], "bounds");
    assert_eq!(v["results"]["lower"], "0.33333333333333331");
    assert_eq!(v["results"]["upper"], "0.33333333333333331");
    assert_eq!(v["results"]["states"], 2);
    assert_eq!(v["results"]["edges"], 3);
    assert!(number(&v["wall_time_seconds"]) >= 0.0);
}

#[test]
fn bounds_zero_gap_is_rejected() {
    let out = cu_bound(&["bounds", "--m", "3", "--d", "2", "--g", "0", "--t", "1"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("gap cap g must be at least 1"));
}

#[test]
fn bounds_m50_d4_g2_both_windows() {
    let args = ["bounds", "--m", "50", "--d", "4", "--g", "2", "--t", "250"];
    let standard = json(&args);
    let l = number(&standard["results"]["lower"]);
    let u = number(&standard["results"]["upper"]);
    assert!((l - 0.0294453012).abs() < 1e-9, "{l}");
    assert!((u - 0.0407286991).abs() < 1e-9, "{u}");

    let mut shifted_args = args.to_vec();
    shifted_args.extend(["--window", "shifted"]);
    let shifted = json(&shifted_args);
    assert_eq!(truncate5(number(&shifted["results"]["lower"])), 0.02956);
    assert_eq!(truncate5(number(&shifted["results"]["upper"])), 0.04090);
    assert_eq!(shifted["parameters"]["window"], "shifted");
}

#[test]
fn bounds_csv_layout() {
    let out = cu_bound(&[
        "bounds", "--m", "4", "--d", "2", "--g", "2", "--t", "5", "--format", "csv",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "m,d,g,t,window,variant,value,states,edges");
    assert!(lines[1].starts_with("4,2,2,5,standard,lb,"));
    assert!(lines[2].starts_with("4,2,2,5,standard,ub,"));
    assert_eq!(lines.len(), 3);
}

#[test]
fn bounds_dump_kernel_per_variant() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("kernel.json");
    let v = json(&[
        "bounds",
        "--m",
        "3",
        "--d",
        "2",
        "--g",
        "1",
        "--t",
        "2",
        "--dump-kernel",
        path.to_str().unwrap(),
    ]);
    assert_eq!(v["results"]["kernel_dumps"].as_array().unwrap().len(), 2);
    for (variant, file) in [("lb", "kernel.lb.json"), ("ub", "kernel.ub.json")] {
        let text = std::fs::read_to_string(dir.path().join(file)).unwrap();
        let dump: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(dump["variant"], variant);
        assert_eq!(dump["m"], 3);
        assert_eq!(dump["states"], serde_json::json!([[3, 0], [1, 2]]));
        let edges = dump["edges"].as_array().unwrap();
        assert_eq!(edges.len(), 3);
        let out_of_0: f64 = edges
            .iter()
            .filter(|e| e[0] == 0)
            .map(|e| e[4].as_f64().unwrap())
            .sum();
        assert!((out_of_0 - 1.0).abs() < 1e-15);
    }
    assert!(!path.exists());

    let single = dir.path().join("only.json");
    json(&[
        "bounds",
        "--m",
        "3",
        "--d",
        "2",
        "--g",
        "1",
        "--t",
        "2",
        "--variant",
        "ub",
        "--dump-kernel",
        single.to_str().unwrap(),
    ]);
    assert!(single.exists());
}

#[test]
fn asymptotic_examples() {
    let v = json(&["asymptotic", "--m", "3", "--d", "2", "--g", "1"]);
    assert!((number(&v["results"]["lower"]["value"]) - 0.4).abs() < 1e-10);
    assert!((number(&v["results"]["upper"]["value"]) - 0.6).abs() < 1e-10);
    assert!(v["results"]["lower"]["iterations"].as_u64().unwrap() > 0);

    let v = json(&["asymptotic", "--m", "50", "--d", "49", "--g", "1"]);
    assert!((number(&v["results"]["lower"]["value"]) - 49.0 / 99.0).abs() < 1e-10);
    assert!((number(&v["results"]["upper"]["value"]) - 50.0 / 99.0).abs() < 1e-10);

    let v = json(&["asymptotic", "--m", "5", "--d", "5", "--g", "1"]);
    assert_eq!(number(&v["results"]["lower"]["value"]), 1.0);
    assert_eq!(number(&v["results"]["upper"]["value"]), 1.0);
}

#[test]
fn asymptotic_non_convergence_exit_code() {
    let out = cu_bound(&[
        "asymptotic",
        "--m",
        "6",
        "--d",
        "2",
        "--g",
        "3",
        "--tol",
        "1e-15",
        "--max-iters",
        "3",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("residual"));
}

#[test]
fn closed_form_examples() {
    let v = json(&["closed-form", "--m", "3"]);
    let pi = v["results"]["limiting"].as_array().unwrap();
    assert_eq!(pi.len(), 11);
    assert!((number(&pi[0]) - 0.25).abs() < 1e-15);
    assert!((number(&pi[1]) - 0.375).abs() < 1e-15);
    assert!((number(&v["results"]["g1_lower"]) - 0.4).abs() < 1e-15);
    assert!((number(&v["results"]["g1_upper"]) - 0.6).abs() < 1e-15);
    assert!((number(&v["results"]["error_rate"]) - 0.5).abs() < 1e-12);
    assert!((number(&v["results"]["counter_rate"]) - 0.5).abs() < 1e-12);

    let v = json(&["closed-form", "--m", "10", "--g", "2"]);
    let tail = &v["results"]["gap_tail"][0];
    assert_eq!(tail[0], 2);
    assert!((number(&tail[1]) - 10.0 / 162.0).abs() < 1e-15);

    assert_eq!(
        cu_bound(&["closed-form", "--m", "2"]).status.code(),
        Some(1)
    );
}

#[test]
fn simulate_birth_death_rate() {
    let v = json(&[
        "simulate", "--m", "10", "--d", "9", "--t", "100000", "--runs", "20", "--seed", "7",
    ]);
    assert!((number(&v["results"]["mean_error_rate"]) - 0.5).abs() < 0.01);
    assert!((number(&v["results"]["mean_counter_rate"]) - 0.5).abs() < 0.01);
}

#[test]
fn simulate_matches_oracle_and_is_deterministic() {
    let args = [
        "simulate", "--m", "3", "--d", "2", "--t", "1", "--runs", "100000", "--seed", "1",
    ];
    let a = json(&args);
    let b = json(&args);
    assert!((number(&a["results"]["mean_error_rate"]) - 1.0 / 3.0).abs() < 0.005);
    assert_eq!(a["results"], b["results"]);
    assert_eq!(a["parameters"], b["parameters"]);
}

#[test]
fn simulate_capped_variants_and_flags() {
    let v = json(&[
        "simulate",
        "--m",
        "6",
        "--d",
        "3",
        "--t",
        "50",
        "--runs",
        "10",
        "--variant",
        "ub",
        "--cap",
        "2",
        "--keep-runs",
    ]);
    assert_eq!(v["parameters"]["variant"], "ub");
    assert_eq!(v["results"]["per_run"].as_array().unwrap().len(), 10);

    let out = cu_bound(&[
        "simulate",
        "--m",
        "6",
        "--d",
        "3",
        "--t",
        "5",
        "--variant",
        "lb",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let out = cu_bound(&["simulate", "--m", "6", "--d", "3", "--t", "5", "--cap", "1"]);
    assert_eq!(out.status.code(), Some(1));
    let out = cu_bound(&[
        "simulate",
        "--m",
        "6",
        "--d",
        "3",
        "--t",
        "5",
        "--variant",
        "ub",
        "--cap",
        "0",
    ]);
    assert_eq!(out.status.code(), Some(1));

    let out = cu_bound(&[
        "simulate", "--m", "6", "--d", "3", "--t", "5", "--runs", "4", "--format", "csv",
    ]);
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "run,error,counter_rate");
    assert_eq!(lines[5], "g,fraction");
}

#[test]
fn oracle_examples() {
    let v = json(&["oracle", "--m", "3", "--d", "2", "--t", "2"]);
    assert_eq!(v["results"]["numerator"], "8");
    assert_eq!(v["results"]["denominator"], "9");
    assert!(v["results"]["expected_error"]
        .as_str()
        .unwrap()
        .starts_with("0.888888888888"));

    let v = json(&["oracle", "--m", "3", "--d", "2", "--t", "1"]);
    assert_eq!(v["results"]["expected_error"], "0.33333333333333331");

    let v = json(&["oracle", "--m", "4", "--d", "4", "--t", "3"]);
    assert_eq!(number(&v["results"]["expected_error"]), 3.0);

    assert_eq!(
        cu_bound(&["oracle", "--m", "10", "--d", "5", "--t", "3"])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn table1_first_row() {
    let v = json(&["table1", "--gmax", "1"]);
    let row = &v["results"]["rows"][0];
    assert_eq!(row["g"], 1);
    assert_eq!(row["states"], 47);
    assert!((number(&row["lower"]) - 0.01853574).abs() < 1e-8);
    assert!((number(&row["upper"]) - 0.07622998).abs() < 1e-8);
    assert_eq!(truncate5(number(&row["lower_shifted"])), 0.01860);
    assert_eq!(truncate5(number(&row["upper_shifted"])), 0.07654);
    assert_eq!(number(&row["reference_upper"]), 0.07654);

    let out = cu_bound(&["table1", "--gmax", "6"]);
    assert_eq!(out.status.code(), Some(1));
    let out = cu_bound(&["table1", "--gmax", "1", "--format", "csv"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with(
        "g,states,edges,lower,upper,lower_shifted,upper_shifted,reference_lower,reference_upper\n1,47,"
    ));
}

#[test]
fn verify_quick_passes() {
    let v = json(&["verify", "--level", "quick"]);
    assert_eq!(v["results"]["passed"], true);
    assert!(v["results"]["checks"].as_array().unwrap().len() >= 4);
}

#[test]
fn thread_override() {
    let out = Command::new(env!("CARGO_BIN_EXE_cu-bound"))
        .args(["oracle", "--m", "3", "--d", "2", "--t", "1"])
        .env("CU_BOUND_THREADS", "1")
        .output()
        .unwrap();
    assert!(out.status.success());
    let out = Command::new(env!("CARGO_BIN_EXE_cu-bound"))
        .args(["oracle", "--m", "3", "--d", "2", "--t", "1"])
        .env("CU_BOUND_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn argument_errors_exit_one() {
    assert_eq!(cu_bound(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(cu_bound(&["bounds", "--m", "3"]).status.code(), Some(1));
    assert_eq!(
        cu_bound(&[
            "bounds",
            "--m",
            "3",
            "--d",
            "2",
            "--g",
            "1",
            "--t",
            "1",
            "--variant",
            "mid"
        ])
        .status
        .code(),
        Some(1)
    );
    assert_eq!(
        cu_bound(&["bounds", "--m", "3", "--d", "4", "--g", "1", "--t", "1"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(cu_bound(&["--help"]).status.code(), Some(0));
}
