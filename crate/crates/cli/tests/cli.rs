use std::process::{Command, Output};

use serde_json::Value;

fn framepath(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_framepath"))
        .args(args)
        .env_remove("FRAMEPATH_SEED")
        .output()
        .expect("run framepath")
}

fn stdout_of(args: &[&str]) -> String {
    let out = framepath(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).expect("utf-8 output")
}

fn json_of(args: &[&str]) -> Value {
    serde_json::from_str(&stdout_of(args)).expect("JSON output")
}

#[test]
fn sample_writes_one_row_per_grid_point() {
    let text = stdout_of(&["sample", "--level", "6", "--seed", "3"]);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "k,x,f");
    assert_eq!(lines.len(), 1 + 129);
    assert!(lines[1].starts_with("0,-1"));
    assert_eq!(text, stdout_of(&["sample", "--level", "6", "--seed", "3"]));
    assert_ne!(text, stdout_of(&["sample", "--level", "6", "--seed", "4"]));
}

#[test]
fn seed_variable_overrides_the_flag() {
    let with_env = Command::new(env!("CARGO_BIN_EXE_framepath"))
        .args(["sample", "--level", "5", "--seed", "1"])
        .env("FRAMEPATH_SEED", "9")
        .output()
        .unwrap();
    assert!(with_env.status.success());
    let direct = stdout_of(&["sample", "--level", "5", "--seed", "9"]);
    assert_eq!(String::from_utf8(with_env.stdout).unwrap(), direct);

    let bad = Command::new(env!("CARGO_BIN_EXE_framepath"))
        .args(["sample"])
        .env("FRAMEPATH_SEED", "abc")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn exit_codes_follow_the_failure_kind() {
    assert_eq!(
        framepath(&["sample", "--level", "40"]).status.code(),
        Some(3)
    );
    assert_eq!(
        framepath(&["constants", "--alpha", "0.5"]).status.code(),
        Some(2)
    );
    assert_eq!(
        framepath(&["variation", "--h1", "1/2", "--h2", "1/4", "--level", "8"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        framepath(&["sample", "--threads", "0"]).status.code(),
        Some(2)
    );
    assert_eq!(
        framepath(&["constants", "--format", "csv"]).status.code(),
        Some(2)
    );
    let missing = framepath(&["sample", "--level", "4", "-o", "/nonexistent/dir/out.csv"]);
    assert_eq!(missing.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("/nonexistent/dir/out.csv"));
}

#[test]
fn constants_name_the_violated_constraint() {
    let out = framepath(&["constants", "--p", "1.5"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("p > 2"));
}

#[test]
fn variation_bound_dominates_the_norm() {
    let v = json_of(&["variation", "--level", "10", "--seed", "5"]);
    let ratio = v["bound_ratio"].as_f64().unwrap();
    assert!(ratio >= 1.0, "bound ratio {ratio}");
    assert!(v["pvar_norm"].as_f64().unwrap() > 0.0);
    assert_eq!(v["params"]["p"], 4.0);
}

#[test]
fn ramp_variation_has_closed_form() {
    // T_h f - T_0 f = h for the ramp, a constant: sup = h2 - h1, p-variation 0.
    let v = json_of(&["variation", "--deterministic", "ramp", "--level", "8"]);
    assert_eq!(v["sup"].as_f64().unwrap(), 0.25);
    assert_eq!(v["pvar"].as_f64().unwrap(), 0.0);
}

#[test]
fn equal_windows_give_zero_and_no_bound() {
    let v = json_of(&["variation", "--level", "8", "--h1", "1/4", "--h2", "1/4"]);
    assert_eq!(v["sup"].as_f64().unwrap(), 0.0);
    assert_eq!(v["pvar"].as_f64().unwrap(), 0.0);
    assert!(v["dyadic_bound"].is_null());
}

#[test]
fn area_surface_covers_every_grid_pair() {
    let text = stdout_of(&["area-surface", "--level", "10", "--m", "5"]);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "s,t,area");
    // all s < t on {0, 1/32, ..., 1}: 33 * 32 / 2
    assert_eq!(lines.len() - 1, 528);
    let ramp = stdout_of(&[
        "area-surface",
        "--deterministic",
        "ramp",
        "--level",
        "8",
        "--m",
        "3",
    ]);
    for row in ramp.lines().skip(1) {
        let area: f64 = row.rsplit(',').next().unwrap().parse().unwrap();
        assert_eq!(area, 0.0, "{row}");
    }
}

#[test]
fn diagonal_reports_both_orders() {
    let v = json_of(&[
        "diagonal",
        "--level",
        "10",
        "--trials",
        "20",
        "--offsets",
        "4..6",
    ]);
    let above = v["mean_above"].as_array().unwrap();
    let below = v["mean_below"].as_array().unwrap();
    assert_eq!(above.len(), 3);
    for (a, b) in above.iter().zip(below) {
        assert_eq!(a.as_f64().unwrap(), -b.as_f64().unwrap());
    }
    let csv = stdout_of(&[
        "diagonal",
        "--level",
        "10",
        "--trials",
        "20",
        "--offsets",
        "4,5",
        "--format",
        "csv",
    ]);
    assert_eq!(csv.lines().count(), 3);
}

#[test]
fn tail_csv_and_json_agree() {
    let args = ["tail", "--level", "8", "--trials", "100", "--r-grid", "1,2"];
    let v = json_of(&args);
    let mut with_csv = args.to_vec();
    with_csv.extend(["--format", "csv"]);
    let csv = stdout_of(&with_csv);
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows[0], "r,survival,bound");
    assert_eq!(rows.len(), 3);
    let bound: f64 = rows[2].split(',').nth(2).unwrap().parse().unwrap();
    assert_eq!(bound, v["bound"][1].as_f64().unwrap());
    assert_eq!(
        framepath(&["tail", "--level", "8", "--trials", "10"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn output_file_matches_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("c.json");
    let out = framepath(&["constants", "-o", file.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    assert_eq!(
        std::fs::read_to_string(&file).unwrap(),
        stdout_of(&["constants"])
    );
}
