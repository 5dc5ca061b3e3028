use std::path::Path;

use hyperpam::cli::run;

fn hp(args: &[&str]) -> i32 {
    run(std::iter::once("hyperpam").chain(args.iter().copied()))
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const FIXTURE_AT: &str = "2025-06-01T12:00:00Z";

#[test]
fn fixture_check_and_detections() {
    let dir = tempfile::tempdir().unwrap();
    let pol = dir.path().join("fixture.json");
    let gt = dir.path().join("truth.json");
    assert_eq!(hp(&["generate", "--fixture", "--out", s(&pol), "--truth", s(&gt)]), 0);
    let q = ["check", "--policy", s(&pol), "--user", "Alice", "--op", "Read", "--resource", "ProductionDB", "--at", FIXTURE_AT, "--account", "acct-dev"];
    assert_eq!(hp(&q), 0);
    let mut gate = q.to_vec();
    gate.push("--expect-deny");
    assert_eq!(hp(&gate), 1);
    assert_eq!(hp(&["escalations", "--policy", s(&pol), "--sensitive", "env=production", "--at", FIXTURE_AT]), 1);
    assert_eq!(hp(&["escalations", "--policy", s(&pol), "--sensitive", "env=nowhere", "--at", FIXTURE_AT]), 0);
    assert_eq!(hp(&["overprivileged", "--policy", s(&pol), "--ground-truth", s(&gt)]), 1);
    assert_eq!(hp(&["window", "--policy", s(&pol), "--at", FIXTURE_AT, "--expiring-within", "2h"]), 1);
    let out = dir.path().join("revoked.json");
    assert_eq!(hp(&["revoke-expired", "--policy", s(&pol), "--at", FIXTURE_AT, "--out", s(&out)]), 0);
    assert_eq!(hp(&["window", "--policy", s(&out), "--at", FIXTURE_AT]), 0);
}

#[test]
fn check_on_empty_policy_denies() {
    assert_eq!(hp(&["check", "--user", "Alice", "--op", "Read", "--resource", "ProductionDB"]), 1);
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(hp(&["check", "--user", "Alice"]), 2);
    assert_eq!(hp(&["frobnicate"]), 2);
    assert_eq!(hp(&["check", "--policy", "/nonexistent.json", "--user", "a", "--op", "Read", "--resource", "r"]), 2);
    assert_eq!(hp(&["bench", "--models", "quantum", "--n-end", "200"]), 2);
    assert_eq!(hp(&["bench", "--models", "hyper", "--n-start", "400", "--n-end", "200"]), 2);
    assert_eq!(hp(&["--help"]), 0);
}

#[test]
fn bench_writes_one_row_per_point() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("b.csv");
    let report = dir.path().join("r.md");
    let args = ["bench", "--models", "hyper", "--n-start", "200", "--n-end", "600", "--n-step", "200", "--repeats", "2", "--out", s(&csv), "--report", s(&report)];
    assert_eq!(hp(&args), 0);
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 4);
    assert!(text.starts_with("model,n,seed,build_time_s,detect_time_s,traversal_ops,graph_size,fp_rate\n"));
    let md = std::fs::read_to_string(&report).unwrap();
    assert!(md.contains("| hyper | detect_time | 3 |"));
    assert_eq!(hp(&["fit", "--in", s(&csv), "--metric", "graph_size"]), 0);
    assert_eq!(hp(&["fit", "--in", s(&csv), "--metric", "graph_size", "--model", "abac"]), 2);
}

#[test]
fn ingest_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let iam = dir.path().join("iam.json");
    std::fs::write(
        &iam,
        r#"{"users": [{"name": "Alice"}],
            "roles": [{"name": "Developer", "assumable_by": ["Alice"]}],
            "resources": [{"name": "Bucket123", "type": "S3:Bucket"}],
            "policies": [{"role": "Developer", "actions": ["s3:GetObject"], "resources": ["Bucket*"]}]}"#,
    )
    .unwrap();
    let pol = dir.path().join("p.json");
    assert_eq!(hp(&["ingest", "--in", s(&iam), "--out", s(&pol)]), 0);
    assert_eq!(hp(&["check", "--policy", s(&pol), "--user", "Alice", "--op", "Read", "--resource", "Bucket123"]), 0);
    assert_eq!(hp(&["check", "--policy", s(&pol), "--user", "Alice", "--op", "Write", "--resource", "Bucket123"]), 1);
    std::fs::write(&iam, r#"{"users": []}"#).unwrap();
    assert_eq!(hp(&["ingest", "--in", s(&iam), "--out", s(&pol)]), 2);
}
