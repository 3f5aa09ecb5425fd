//! End-to-end tests of the qfdiv binary: exit codes, report shape,
//! determinism under a fixed seed.

use std::path::PathBuf;
use std::process::{Command, Output};

fn write_temp(name: &str, contents: &str) -> PathBuf {
    let mut path = std::env::temp_dir();
    path.push(format!("qfdiv-test-{}-{name}", std::process::id()));
    std::fs::write(&path, contents).unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qfdiv")).args(args).output().unwrap()
}

const TV_PROBLEM: &str = r#"{"family":{"family":"tv"},"rho1":[[[1,0],[0,0]],[[0,0],[0,0]]],"rho2":[[[0.5,0],[0,0]],[[0,0],[0.5,0]]]}"#;

const CHI2_PROBLEM: &str = r#"{"family":{"family":"chi2"},"rho1":[[[0.6,0],[0.2,0.1]],[[0.2,-0.1],[0.4,0]]],"rho2":[[[0.3,0],[-0.1,0]],[[-0.1,0],[0.7,0]]]}"#;

#[test]
fn compute_reports_value_and_exits_zero() {
    let path = write_temp("tv.json", TV_PROBLEM);
    let out = run(&["compute", "-f", path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["command"], "compute");
    let value: f64 = report["value"].as_f64().unwrap();
    assert!((value - 1.0).abs() < 1e-12);
    std::fs::remove_file(path).ok();
}

#[test]
fn compute_force_path_generic() {
    let path = write_temp("chi2.json", CHI2_PROBLEM);
    let default_out = run(&["compute", "-f", path.to_str().unwrap()]);
    let forced_out = run(&[
        "compute",
        "-f",
        path.to_str().unwrap(),
        "--force-path",
        "generic_gradient",
    ]);
    assert!(default_out.status.success());
    assert!(forced_out.status.success());
    let default_report: serde_json::Value = serde_json::from_slice(&default_out.stdout).unwrap();
    let forced_report: serde_json::Value = serde_json::from_slice(&forced_out.stdout).unwrap();
    assert_eq!(default_report["path"], "closed_form_f2");
    assert_eq!(forced_report["path"], "generic_gradient");
    let a = default_report["value"].as_f64().unwrap();
    let b = forced_report["value"].as_f64().unwrap();
    assert!((a - b).abs() <= 1e-8 * a.abs(), "{a} vs {b}");
    std::fs::remove_file(path).ok();
}

#[test]
fn compute_infinite_answer_is_exit_zero() {
    let problem = r#"{"family":{"family":"kl"},"rho1":[[[0.5,0],[0,0]],[[0,0],[0.5,0]]],"rho2":[[[1,0],[0,0]],[[0,0],[0,0]]]}"#;
    let path = write_temp("klinf.json", problem);
    let out = run(&["compute", "-f", path.to_str().unwrap()]);
    assert!(out.status.success());
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["value"], "inf");
    assert_eq!(report["finite"], false);
    std::fs::remove_file(path).ok();
}

#[test]
fn malformed_input_exits_two() {
    let path = write_temp("bad.json", r#"{"family":{"family":"tv"},"rho1":[[[1,0]]]}"#);
    let out = run(&["compute", "-f", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("rho2"), "{stderr}");
    std::fs::remove_file(path).ok();

    let out = run(&["compute", "-f", "/nonexistent/problem.json"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_is_byte_identical_for_fixed_seed() {
    let path = write_temp("verify.json", CHI2_PROBLEM);
    let a = run(&["verify", "-f", path.to_str().unwrap(), "--restarts", "8", "--seed", "7"]);
    let b = run(&["verify", "-f", path.to_str().unwrap(), "--restarts", "8", "--seed", "7"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout, "seeded verify runs must match byte for byte");
    let report: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    let solver: f64 = report["solver_value"].as_f64().unwrap();
    let oracle: f64 = report["oracle_value"].as_f64().unwrap();
    assert!(oracle <= solver + 1e-6);
    assert!((solver - oracle).abs() <= 1e-4);
    assert!(report["best_measurement"].as_array().unwrap().len() == 2);
    std::fs::remove_file(path).ok();
}

#[test]
fn fisher_builtin_binary_mixture_fidelity() {
    let out = run(&["fisher", "--builtin", "binary-mixture", "--eta", "0.3", "--step", "1e-3"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["family"], "renyi");
    let gap: f64 = report["gap"].as_f64().unwrap();
    assert!(gap <= 5e-3, "gap {gap}");
    // J_S of the binary mixture at η = 0.3 is 1/0.3 + 1/0.7
    let j_s: f64 = report["j_s"].as_f64().unwrap();
    assert!((j_s - (1.0 / 0.3 + 1.0 / 0.7)).abs() < 1e-5);
}

#[test]
fn fisher_from_samples() {
    // binary mixture sampled at 0.3 ± 1e-3
    let h = 1e-3;
    let sample = |eta: f64| format!("[[[{},0],[0,0]],[[0,0],[{},0]]]", 1.0 - eta, eta);
    let doc = format!(
        r#"{{"family":{{"family":"fidelity"}},"eta0":0.3,"step":{h},"rho_minus":{},"rho_zero":{},"rho_plus":{}}}"#,
        sample(0.3 - h),
        sample(0.3),
        sample(0.3 + h)
    );
    let path = write_temp("fisher.json", &doc);
    let out = run(&["fisher", "-f", path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["richardson"], false);
    let gap: f64 = report["gap"].as_f64().unwrap();
    assert!(gap <= 5e-3, "gap {gap}");
    std::fs::remove_file(path).ok();
}

#[test]
fn exhausted_iteration_budget_exits_three() {
    // force the gradient route and give it one iteration: the answer comes
    // back with a non-convergence warning and exit code 3
    let problem = r#"{"family":{"family":"renyi","alpha":0.3},"rho1":[[[0.6,0],[0.2,0.1]],[[0.2,-0.1],[0.4,0]]],"rho2":[[[0.3,0],[-0.1,0]],[[-0.1,0],[0.7,0]]]}"#;
    let path = write_temp("slow.json", problem);
    let out = run(&["compute", "-f", path.to_str().unwrap(), "--max-iter", "1"]);
    assert_eq!(out.status.code(), Some(3));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(!report["warnings"].as_array().unwrap().is_empty());
    std::fs::remove_file(path).ok();
}

#[test]
fn compare_noncommuting_chi2() {
    let path = write_temp("compare.json", CHI2_PROBLEM);
    let out = run(&["compare", "-f", path.to_str().unwrap(), "--alpha", "2.0"]);
    assert!(out.status.success());
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["commuting"], false);
    let gap: f64 = report["gap"].as_f64().unwrap();
    assert!(gap >= 0.0);
    std::fs::remove_file(path).ok();
}

#[test]
fn all_floats_have_seventeen_significant_digits() {
    let path = write_temp("digits.json", CHI2_PROBLEM);
    let out = run(&["compute", "-f", path.to_str().unwrap()]);
    let text = String::from_utf8(out.stdout).unwrap();
    // every numeric value is rendered in the fixed e-notation, e.g.
    // "value":-?d.dddddddddddddddde±e
    let value_field = text.split("\"value\":").nth(1).unwrap();
    let mantissa = value_field.split('e').next().unwrap();
    let digits = mantissa.chars().filter(|c| c.is_ascii_digit()).count();
    assert_eq!(digits, 17, "expected 17 significant digits, got {mantissa}");
    std::fs::remove_file(path).ok();
}
