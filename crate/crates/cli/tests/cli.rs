use std::path::Path;
use std::process::{Command, Output};

const S1: [&str; 3] = ["gaussian:0:1", "gaussian:-0.5:1", "gaussian:0.5:1"];
const S3: [&str; 3] = ["gaussian:0:1", "gaussian:1:1", "gaussian:0.5:1"];

fn qcd(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qcd"))
        .args(args)
        .current_dir(dir)
        .env_remove("QCD_SEED")
        .output()
        .expect("qcd runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn line_count(path: &Path) -> usize {
    std::fs::read_to_string(path).unwrap().lines().count()
}

#[test]
fn classify_presets() {
    let dir = tempfile::tempdir().unwrap();
    for (models, expected) in [(S1, 1), (S3, 3)] {
        let out = qcd(dir.path(), &["classify", models[0], models[1], models[2]]);
        assert!(out.status.success());
        let json: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
        assert_eq!(json["scenario"], expected);
    }
}

#[test]
fn classify_rejects_identical_models() {
    let dir = tempfile::tempdir().unwrap();
    let out = qcd(
        dir.path(),
        &["classify", "gaussian:0:1", "gaussian:0:1", "gaussian:1:1"],
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bounds_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = qcd(
        dir.path(),
        &["bounds", S3[0], S3[1], S3[2], "--gamma", "e^4,2.718281828459045"],
    );
    assert!(out.status.success());
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "gamma,log_gamma,universal_lower,s_upper,j_upper");
    let fields: Vec<f64> = lines[1].split(',').map(|f| f.parse().unwrap()).collect();
    assert!((fields[1] - 4.0).abs() < 1e-9);
    assert!((fields[2] - 32.0).abs() < 1e-6);
    assert!((fields[3] - 64.0).abs() < 1e-6);
    assert!((fields[4] - 64.0).abs() < 1e-6);
    let fields: Vec<f64> = lines[2].split(',').map(|f| f.parse().unwrap()).collect();
    assert!((fields[2] - 8.0).abs() < 1e-4);
    assert!((fields[3] - 16.0).abs() < 1e-4);
}

#[test]
fn bounds_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        qcd(dir.path(), &["bounds", S3[0], S3[1], S3[2]]).status.code(),
        Some(2)
    );
    assert_eq!(
        qcd(dir.path(), &["bounds", S3[0], S3[1], S3[2], "--gamma", "1"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        qcd(dir.path(), &["bounds", S3[0], S3[1], S3[2], "--gamma", "abc"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn replicate_writes_expected_shape() {
    let dir = tempfile::tempdir().unwrap();
    let out = qcd(dir.path(), &["replicate", "3", "--trials", "60"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    // 4 detectors x 6 thresholds x 3 regimes x 60 trials, plus a header.
    assert_eq!(line_count(&dir.path().join("records_s3.csv")), 4321);
    assert_eq!(line_count(&dir.path().join("summary_s3.csv")), 25);
}

#[test]
fn replicate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "replicate",
        "3",
        "--seed",
        "7",
        "--trials",
        "20",
        "--records",
        "a.csv",
        "--summary",
        "sa.csv",
    ];
    assert!(qcd(dir.path(), &args).status.success());
    let args = [
        "replicate",
        "3",
        "--seed",
        "7",
        "--trials",
        "20",
        "--records",
        "b.csv",
        "--summary",
        "sb.csv",
    ];
    assert!(qcd(dir.path(), &args).status.success());
    let read = |name: &str| std::fs::read(dir.path().join(name)).unwrap();
    assert_eq!(read("a.csv"), read("b.csv"));
    assert_eq!(read("sa.csv"), read("sb.csv"));
}

#[test]
fn replicate_all_suffixes_given_paths() {
    let dir = tempfile::tempdir().unwrap();
    let out = qcd(
        dir.path(),
        &["replicate", "all", "--trials", "5", "--summary", "sum.csv"],
    );
    assert!(out.status.success());
    for n in 1..=3 {
        assert!(dir.path().join(format!("sum_s{n}.csv")).exists());
        assert!(dir.path().join(format!("records_s{n}.csv")).exists());
    }
}

#[test]
fn unwritable_output_is_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = qcd(
        dir.path(),
        &[
            "replicate",
            "1",
            "--trials",
            "2",
            "--records",
            "/nonexistent/dir/x.csv",
        ],
    );
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        qcd(dir.path(), &["replicate", "3", "--bogus"]).status.code(),
        Some(2)
    );
    assert_eq!(qcd(dir.path(), &["replicate", "4"]).status.code(), Some(2));
    assert_eq!(
        qcd(dir.path(), &["replicate", "3", "--detectors", "cusum"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        qcd(dir.path(), &["replicate", "3", "--trials", "0"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn help_lists_flags() {
    let dir = tempfile::tempdir().unwrap();
    let out = qcd(dir.path(), &["replicate", "--help"]);
    assert!(out.status.success());
    let text = stdout(&out);
    for flag in [
        "--trials",
        "--seed",
        "--b",
        "--detectors",
        "--nu-grid",
        "--config",
        "--records",
        "--summary",
    ] {
        assert!(text.contains(flag), "missing {flag}");
    }
}

#[test]
fn config_file_composes_with_flags() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("cfg.json"),
        r#"{"trials": 3, "b": [2.0], "detectors": ["s-cusum"], "summary": "from_file.csv"}"#,
    )
    .unwrap();
    let out = qcd(
        dir.path(),
        &["replicate", "2", "--config", "cfg.json", "--trials", "4"],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    // 1 detector x 1 threshold x 3 regimes x 4 trials.
    assert_eq!(line_count(&dir.path().join("records_s2.csv")), 13);
    assert_eq!(line_count(&dir.path().join("from_file.csv")), 2);
}

#[test]
fn config_file_unknown_key_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("cfg.json"), r#"{"trails": 3}"#).unwrap();
    assert_eq!(
        qcd(dir.path(), &["replicate", "2", "--config", "cfg.json"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn seed_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let run = |seed: Option<&str>, name: &str| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_qcd"));
        cmd.args([
            "replicate",
            "3",
            "--trials",
            "5",
            "--records",
            name,
            "--summary",
            "s.csv",
        ])
        .current_dir(dir.path())
        .env_remove("QCD_SEED");
        if let Some(s) = seed {
            cmd.env("QCD_SEED", s);
        }
        assert!(cmd.output().unwrap().status.success());
        std::fs::read_to_string(dir.path().join(name)).unwrap()
    };
    let env9 = run(Some("9"), "env9.csv");
    let flag9 = {
        let out = qcd(
            dir.path(),
            &[
                "replicate",
                "3",
                "--trials",
                "5",
                "--seed",
                "9",
                "--records",
                "flag9.csv",
                "--summary",
                "s.csv",
            ],
        );
        assert!(out.status.success());
        std::fs::read_to_string(dir.path().join("flag9.csv")).unwrap()
    };
    let default = run(None, "default.csv");
    assert_eq!(env9, flag9);
    assert_ne!(env9, default);
    assert!(env9.lines().nth(1).unwrap().ends_with(",9"));
}

#[test]
fn simulate_custom_triple() {
    let dir = tempfile::tempdir().unwrap();
    let out = qcd(
        dir.path(),
        &[
            "simulate",
            "--f0",
            "gaussian:0:1",
            "--fc",
            "gaussian:0.3:1",
            "--fb",
            "gaussian:1:2",
            "--label",
            "mine",
            "--trials",
            "4",
            "--b",
            "2,3",
        ],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = std::fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 9);
    assert!(summary.lines().skip(1).all(|l| l.starts_with("mine,")));
    assert_eq!(line_count(&dir.path().join("records.csv")), 4 * 2 * 3 * 4 + 1);
}

#[test]
fn simulate_requires_models() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        qcd(dir.path(), &["simulate", "--f0", "gaussian:0:1"])
            .status
            .code(),
        Some(2)
    );
}
