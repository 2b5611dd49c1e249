//! Behavioral tests of the binary: exit codes, file outputs, determinism.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn tracerisk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tracerisk"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn assert_ok(out: &Output) {
    assert!(
        out.status.success(),
        "command failed ({:?}): {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn assert_exit(out: &Output, code: i32, stderr_needle: &str) {
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert_eq!(out.status.code(), Some(code), "stderr: {stderr}");
    assert!(
        stderr.contains(stderr_needle),
        "stderr missing `{stderr_needle}`: {stderr}"
    );
}

/// Generates a small fixture dataset and returns (dir, cdr path, hierarchy path).
fn fixture(seed: &str) -> (TempDir, PathBuf, PathBuf) {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("data");
    let out_str = out.to_str().unwrap().to_owned();
    let output = tracerisk(&[
        "generate",
        "--users", "40",
        "--days", "2",
        "--towers", "12",
        "--zips", "12",
        "--districts", "4",
        "--municipalities", "2",
        "--calls-median", "8",
        "--seed", seed,
        "--out", &out_str,
    ]);
    assert_ok(&output);
    let cdr = out.join("cdr.csv");
    let hierarchy = out.join("hierarchy.csv");
    assert!(cdr.is_file() && hierarchy.is_file());
    (dir, cdr, hierarchy)
}

fn assess_args<'a>(
    cdr: &'a str,
    hierarchy: &'a str,
    out: &'a str,
    extra: &[&'a str],
) -> Vec<&'a str> {
    let mut args = vec![
        "assess",
        "--cdr", cdr,
        "--hierarchy", hierarchy,
        "--trials", "3",
        "--unicity-trials", "30",
        "--p", "1,2",
        "--temporal", "1,24",
        "--seed", "5",
        "--out", out,
    ];
    args.extend_from_slice(extra);
    args
}

fn read(path: &Path) -> Vec<u8> {
    fs::read(path).unwrap()
}

#[test]
fn generate_is_deterministic_in_the_seed() {
    let (_da, cdr_a, hier_a) = fixture("11");
    let (_db, cdr_b, hier_b) = fixture("11");
    let (_dc, cdr_c, _) = fixture("12");
    assert_eq!(read(&cdr_a), read(&cdr_b));
    assert_eq!(read(&hier_a), read(&hier_b));
    assert_ne!(read(&cdr_a), read(&cdr_c));
}

#[test]
fn assess_writes_a_reproducible_json_report() {
    let (dir, cdr, hierarchy) = fixture("1");
    let cdr = cdr.to_str().unwrap();
    let hierarchy = hierarchy.to_str().unwrap();
    let out_a = dir.path().join("a.json");
    let out_b = dir.path().join("b.json");

    assert_ok(&tracerisk(&assess_args(cdr, hierarchy, out_a.to_str().unwrap(), &[])));
    assert_ok(&tracerisk(&assess_args(cdr, hierarchy, out_b.to_str().unwrap(), &[])));
    assert_eq!(read(&out_a), read(&out_b));

    let report: serde_json::Value = serde_json::from_slice(&read(&out_a)).unwrap();
    let metrics = report["metrics"].as_array().unwrap();
    // three hierarchy levels by default, two temporal widths requested
    assert_eq!(metrics.len(), 6);
    for m in metrics {
        assert!(m["profile"]["spatial_level"].is_string());
        let n = m["n"].as_u64().unwrap();
        assert_eq!(n, 40);
        let unicity = m["unicity"].as_array().unwrap();
        assert_eq!(unicity.len(), 2);
    }
    assert_eq!(report["config"]["seed"].as_u64(), Some(5));
}

#[test]
fn thread_count_does_not_change_the_report() {
    let (dir, cdr, hierarchy) = fixture("2");
    let cdr = cdr.to_str().unwrap();
    let hierarchy = hierarchy.to_str().unwrap();
    let out_a = dir.path().join("a.json");
    let out_b = dir.path().join("b.json");

    let mut one = assess_args(cdr, hierarchy, out_a.to_str().unwrap(), &[]);
    one.extend_from_slice(&["--threads", "1"]);
    let mut three = assess_args(cdr, hierarchy, out_b.to_str().unwrap(), &[]);
    three.extend_from_slice(&["--threads", "3"]);
    assert_ok(&tracerisk(&one));
    assert_ok(&tracerisk(&three));
    assert_eq!(read(&out_a), read(&out_b));
}

#[test]
fn assess_csv_has_the_documented_header() {
    let (dir, cdr, hierarchy) = fixture("3");
    let out = dir.path().join("report.csv");
    let args = assess_args(
        cdr.to_str().unwrap(),
        hierarchy.to_str().unwrap(),
        out.to_str().unwrap(),
        &["--format", "csv"],
    );
    assert_ok(&tracerisk(&args));
    let text = String::from_utf8(read(&out)).unwrap();
    assert_eq!(
        text.lines().next().unwrap(),
        "profile,c,r,gain,nonreident_fraction,ci_c_low,ci_c_high,ci_r_low,ci_r_high"
    );
    assert_eq!(text.lines().count(), 7);
}

#[test]
fn unicity_writes_json_to_stdout_by_default() {
    let (_dir, cdr, hierarchy) = fixture("4");
    let args = [
        "unicity",
        "--cdr", cdr.to_str().unwrap(),
        "--hierarchy", hierarchy.to_str().unwrap(),
        "--spatial", "zip,municipality",
        "--temporal", "1",
        "--p", "1,2,3",
        "--trials", "40",
        "--seed", "9",
    ];
    let out_a = tracerisk(&args);
    let out_b = tracerisk(&args);
    assert_ok(&out_a);
    assert_eq!(out_a.stdout, out_b.stdout);

    let report: serde_json::Value = serde_json::from_slice(&out_a.stdout).unwrap();
    let rows = report["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 6);
    for row in rows {
        let u_p = row["u_p"].as_f64().unwrap();
        assert!((0.0..=1.0).contains(&u_p));
    }
    assert_eq!(report["trials"].as_u64(), Some(40));
}

#[test]
fn pareto_partitions_the_grid_when_utilities_cover_it() {
    let (dir, cdr, hierarchy) = fixture("5");
    let utility = dir.path().join("utility.csv");
    let mut rows = String::from("spatial_level,temporal_granularity,score\n");
    for level in ["zip", "district", "municipality"] {
        let score = if level == "zip" { 9.0 } else { 4.0 };
        rows.push_str(&format!("{level},1,{score}\n"));
    }
    fs::write(&utility, rows).unwrap();

    let out = dir.path().join("report.json");
    // the coarsest cells of this tiny fixture censor everyone and carry no
    // ratio, so the pareto run sticks to the 1h column
    let mut args = assess_args(
        cdr.to_str().unwrap(),
        hierarchy.to_str().unwrap(),
        out.to_str().unwrap(),
        &["--utility", utility.to_str().unwrap(), "--pareto"],
    );
    let pos = args.iter().position(|a| *a == "1,24").unwrap();
    args[pos] = "1";
    assert_ok(&tracerisk(&args));
    let report: serde_json::Value = serde_json::from_slice(&read(&out)).unwrap();
    let pareto = &report["pareto"];
    let kept = pareto["nondominated"].as_array().unwrap().len();
    let dropped = pareto["dominated"].as_array().unwrap().len();
    assert_eq!(kept + dropped, 3);
    assert!(kept >= 1);
    assert_eq!(report["utilities"].as_array().unwrap().len(), 3);
}

#[test]
fn unknown_spatial_level_is_a_usage_error() {
    let (dir, cdr, hierarchy) = fixture("6");
    let out = dir.path().join("report.json");
    let args = assess_args(
        cdr.to_str().unwrap(),
        hierarchy.to_str().unwrap(),
        out.to_str().unwrap(),
        &["--spatial", "zipcode"],
    );
    assert_exit(&tracerisk(&args), 2, "unknown spatial level `zipcode`");
}

#[test]
fn temporal_width_must_divide_a_day() {
    let (dir, cdr, hierarchy) = fixture("7");
    let out = dir.path().join("report.json");
    let mut args = assess_args(
        cdr.to_str().unwrap(),
        hierarchy.to_str().unwrap(),
        out.to_str().unwrap(),
        &[],
    );
    let pos = args.iter().position(|a| *a == "1,24").unwrap();
    args[pos] = "5";
    assert_exit(&tracerisk(&args), 2, "does not divide");
}

#[test]
fn pareto_without_utility_is_rejected_by_the_parser() {
    let (dir, cdr, hierarchy) = fixture("8");
    let out = dir.path().join("report.json");
    let args = assess_args(
        cdr.to_str().unwrap(),
        hierarchy.to_str().unwrap(),
        out.to_str().unwrap(),
        &["--pareto"],
    );
    assert_exit(&tracerisk(&args), 2, "--utility");
}

#[test]
fn incomplete_utility_table_is_a_data_error() {
    let (dir, cdr, hierarchy) = fixture("9");
    let utility = dir.path().join("utility.csv");
    fs::write(&utility, "spatial_level,temporal_granularity,score\nzip,1,9.0\n").unwrap();
    let out = dir.path().join("report.json");
    let args = assess_args(
        cdr.to_str().unwrap(),
        hierarchy.to_str().unwrap(),
        out.to_str().unwrap(),
        &["--utility", utility.to_str().unwrap(), "--pareto"],
    );
    assert_exit(&tracerisk(&args), 3, "no utility for");
}

#[test]
fn malformed_timestamp_is_a_data_error_with_its_line() {
    let dir = TempDir::new().unwrap();
    let cdr = dir.path().join("cdr.csv");
    let hierarchy = dir.path().join("hierarchy.csv");
    fs::write(
        &cdr,
        "caller_id,receiver_id,tower_id,time\n\
         u1,u2,t1,13-03-01 10:00\n\
         u2,u1,t1,not-a-time\n",
    )
    .unwrap();
    fs::write(&hierarchy, "tower,zip\nt1,z1\n").unwrap();
    let out = dir.path().join("report.json");
    let args = assess_args(
        cdr.to_str().unwrap(),
        hierarchy.to_str().unwrap(),
        out.to_str().unwrap(),
        &[],
    );
    let output = tracerisk(&args);
    assert_exit(&output, 3, "line 3");
}

#[test]
fn missing_input_is_a_data_error() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("report.json");
    let args = assess_args(
        "/nonexistent/cdr.csv",
        "/nonexistent/hierarchy.csv",
        out.to_str().unwrap(),
        &[],
    );
    assert_exit(&tracerisk(&args), 3, "cannot read");
}

#[test]
fn unwritable_output_is_a_usage_error() {
    let (_dir, cdr, hierarchy) = fixture("10");
    let args = assess_args(
        cdr.to_str().unwrap(),
        hierarchy.to_str().unwrap(),
        "/nonexistent-dir/report.json",
        &[],
    );
    assert_exit(&tracerisk(&args), 2, "cannot write");
}

#[test]
fn zero_p_is_rejected_by_the_parser() {
    let (dir, cdr, hierarchy) = fixture("13");
    let out = dir.path().join("report.json");
    let mut args = assess_args(
        cdr.to_str().unwrap(),
        hierarchy.to_str().unwrap(),
        out.to_str().unwrap(),
        &[],
    );
    let pos = args.iter().position(|a| *a == "1,2").unwrap();
    args[pos] = "0,1";
    let output = tracerisk(&args);
    assert_eq!(output.status.code(), Some(2));
}
