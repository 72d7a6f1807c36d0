//! Exit-code contract of the command-line interface.

use std::process::Command;

fn curvelab(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_curvelab"))
        .args(args)
        .output()
        .expect("binary runs")
}

#[test]
fn curvature_success_and_usage_errors() {
    let out = curvelab(&["curvature", "--metric", "flat4", "--point", "0,0,0,0"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("R = 0.000000"), "{text}");

    let out = curvelab(&["curvature", "--metric", "sphere4", "--point", "0,0,0,0"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("R = 12.000000"));

    let out = curvelab(&["curvature", "--metric", "nope", "--point", "0,0,0,0"]);
    assert_eq!(out.status.code(), Some(2));

    let out = curvelab(&["curvature", "--metric", "flat4", "--point", "0,zap,0,0"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn deform_exit_codes() {
    // weyl over the ball: strictly positive
    let out = curvelab(&[
        "deform", "--metric", "flat4", "--kind", "weyl", "--count", "200",
    ]);
    assert_eq!(out.status.code(), Some(0));

    // cotton over the full ball vanishes at the center
    let out = curvelab(&[
        "deform", "--metric", "flat4", "--kind", "cotton", "--count", "200",
    ]);
    assert_eq!(out.status.code(), Some(1));

    // cotton on the annulus: positive
    let out = curvelab(&[
        "deform", "--metric", "flat4", "--kind", "cotton", "--count", "200", "--region",
        "annulus",
    ]);
    assert_eq!(out.status.code(), Some(0));

    // repeated alphas are a precondition error for cotton
    let out = curvelab(&[
        "deform", "--metric", "flat4", "--kind", "cotton", "--alpha", "1,1,3/2,2",
        "--count", "50",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn coeffs_prints_reference_table() {
    let out = curvelab(&["coeffs", "--family", "weyl"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("a[1][2] = 5/48"));
    assert!(text.contains("a[1][2][3] = -15/8"));

    let out = curvelab(&["coeffs", "--family", "cotton", "--alpha", "1,5/4,3/2,2"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("a[1][2][3] = 15/8"));

    let out = curvelab(&["coeffs", "--family", "sideways"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn obstruction_exit_codes() {
    let out = curvelab(&["obstruction", "--system", "wplus"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("INFEASIBLE"));
    assert!(text.contains("15*x2*x3 + 4*x1*x4"));

    // unit budget exhausts immediately on the branch-and-bound system
    let out = curvelab(&["obstruction", "--system", "bach", "--budget", "1"]);
    assert_eq!(out.status.code(), Some(3));

    let out = curvelab(&["obstruction", "--system", "weyl-single", "--coordinate", "2"]);
    assert_eq!(out.status.code(), Some(0));

    let out = curvelab(&["obstruction", "--system", "unknown"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn validate_subset_and_overrides() {
    let out = curvelab(&[
        "validate", "--check", "coeff_weyl_table", "--check", "bach_constant",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("verdict: pass"));

    // zero tolerance forces a failure
    let out = curvelab(&[
        "validate", "--check", "pipeline_sphere", "--tolerance", "sphere_scalar_abs=0",
    ]);
    assert_eq!(out.status.code(), Some(1));

    // unknown check is a usage error
    let out = curvelab(&["validate", "--check", "bogus"]);
    assert_eq!(out.status.code(), Some(2));

    let out = curvelab(&["validate", "--list-checks"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("nonvanishing_scans"));
}

#[test]
fn outputs_are_written() {
    let dir = std::env::temp_dir().join(format!("curvelab-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let json = dir.join("scan.json");
    let csv = dir.join("scan.csv");
    let out = curvelab(&[
        "deform", "--kind", "weyl", "--count", "64", "--output",
        json.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let parsed: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(parsed["verdict"], serde_json::json!(true));
    let out = curvelab(&[
        "deform", "--kind", "weyl", "--count", "64", "--format", "csv", "--output",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("kind,index,norm_sq"));
    assert_eq!(text.lines().count(), 65);
    std::fs::remove_dir_all(&dir).ok();
}
