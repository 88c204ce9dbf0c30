use std::fs;
use std::process::Command;

fn phplate(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_phplate")).args(args).output().unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned() + &String::from_utf8_lossy(&out.stderr),
    )
}

#[test]
fn verify_passes_for_every_scheme() {
    for scheme in ["bjt", "afw", "hhj"] {
        let (code, text) = phplate(&["verify", "--scheme", scheme, "--degree", "2", "--n", "2,3"]);
        assert_eq!(code, 0, "{text}");
        assert!(text.contains("J: skew"));
    }
}

#[test]
fn run_writes_energy_trace_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let (code, text) = phplate(&["run", "--scheme", "hhj", "--n", "8", "--out", out]);
    assert_eq!(code, 0, "{text}");
    let csv = fs::read_to_string(dir.path().join("energy_n8.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 80 + 1);
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("errors_n8.json")).unwrap()).unwrap();
    let errors = json["run"]["errors"].as_array().unwrap();
    assert!(errors.iter().all(|e| e["error"].as_f64().unwrap().is_finite()));
    // Below the norm of the exact velocity profile.
    assert_eq!(errors[0]["field"], "e_w");
    assert!(errors[0]["error"].as_f64().unwrap() < 0.5);
    assert!(json["conventions"]["load_quadrature"].is_string());
}

#[test]
fn unforced_run_balances_power() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let (code, text) = phplate(&["run", "--scheme", "afw", "--n", "4", "--unforced", "--format", "csv", "--out", out]);
    assert_eq!(code, 0, "{text}");
    let csv = fs::read_to_string(dir.path().join("energy_n4.csv")).unwrap();
    let rows: Vec<Vec<f64>> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    let h0 = rows[0][1];
    assert!(h0 > 0.0);
    assert!(rows.iter().all(|r| r[2].abs() <= 1e-10 * h0));
    assert!(!dir.path().join("errors_n4.json").exists());
}

#[test]
fn convergence_outputs_are_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let (code, text) = phplate(&[
            "converge",
            "--scheme",
            "bjt",
            "--n",
            "2,4,8",
            "--out",
            dir.path().to_str().unwrap(),
        ]);
        assert_eq!(code, 0, "{text}");
    }
    let csv = fs::read(a.path().join("convergence.csv")).unwrap();
    assert_eq!(csv, fs::read(b.path().join("convergence.csv")).unwrap());
    let text = String::from_utf8(csv).unwrap();
    assert_eq!(text.lines().next(), Some("field,h,error,rate"));
    assert_eq!(text.lines().count(), 1 + 4 * 3);
    for field in ["e_w", "e_theta", "E_kappa", "e_gamma"] {
        let svg = fs::read_to_string(a.path().join(format!("convergence_{field}.svg"))).unwrap();
        assert!(svg.contains("stroke-dasharray"));
    }
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(a.path().join("convergence.json")).unwrap()).unwrap();
    assert_eq!(json["fields"].as_array().unwrap().len(), 4);
}

#[test]
fn bad_arguments_fail() {
    let (code, _) = phplate(&["run", "--scheme", "bjt", "--n", "2", "--degree", "7"]);
    assert_eq!(code, 1);
    let (code, _) = phplate(&["converge", "--scheme", "hhj", "--n", "4"]);
    assert_eq!(code, 1);
    let (code, _) = phplate(&["verify", "--scheme", "plate"]);
    assert_eq!(code, 1);
}
