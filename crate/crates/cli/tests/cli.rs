use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn dlyap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dlyap"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn config(name: &str) -> String {
    configs().join(name).to_string_lossy().into_owned()
}

fn write_config(dir: &TempDir, name: &str, text: &str) -> String {
    let path = dir.path().join(name);
    fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

fn parse_rows(csv: &str) -> Vec<Vec<f64>> {
    csv.lines()
        .skip(1)
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect()
}

#[test]
fn example1_table_starts_at_reported_value() {
    let out = TempDir::new().unwrap();
    let o = out.path().to_str().unwrap();
    let run = dlyap(&[
        "solve",
        "--config",
        &config("example1.json"),
        "--out",
        o,
        "--quiet",
    ]);
    assert_eq!(
        run.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&run.stderr)
    );
    assert!(run.stdout.is_empty());

    let csv = fs::read_to_string(out.path().join("P_tau.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "tau,p_11,p_12,p_21,p_22");
    let rows = parse_rows(&csv);
    assert_eq!(rows.len(), 201);
    let expected = [0.0, 0.7072, 0.0, 0.0, 0.7072];
    for (got, want) in rows[0].iter().zip(expected) {
        assert!((got - want).abs() < 5e-4, "{:?}", rows[0]);
    }
    assert_eq!(rows[200][0], 1.0);

    let report = fs::read_to_string(out.path().join("report.txt")).unwrap();
    assert!(report.contains("spectrum condition: satisfied"));
    assert!(report.contains("Omega4: [0.19087135, -0.36422736, 0.36422736, 0.19087135]"));
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.path().join("summary.json")).unwrap())
            .unwrap();
    assert_eq!(summary["spectrum"]["n_s"], 24);
    assert!(summary["residuals"]["dde"].as_f64().unwrap() < 1e-5);
}

#[test]
fn zero_weight_gives_zero_table() {
    let dir = TempDir::new().unwrap();
    let text = fs::read_to_string(configs().join("example1.json"))
        .unwrap()
        .replace(
            r#""q": [[1.0, 0.0], [0.0, 1.0]]"#,
            r#""q": [[0.0, 0.0], [0.0, 0.0]]"#,
        );
    let cfg = write_config(&dir, "zero.json", &text);
    let out = dir.path().join("out");
    let run = dlyap(&[
        "solve",
        "--config",
        &cfg,
        "--out",
        out.to_str().unwrap(),
        "-q",
        "--tau-points",
        "11",
    ]);
    assert_eq!(run.status.code(), Some(0));
    let rows = parse_rows(&fs::read_to_string(out.join("P_tau.csv")).unwrap());
    assert_eq!(rows.len(), 11);
    assert!(rows.iter().all(|r| r[1..].iter().all(|&x| x == 0.0)));
}

#[test]
fn degenerate_scalar_exits_with_violation() {
    let out = TempDir::new().unwrap();
    let run = dlyap(&[
        "solve",
        "--config",
        &config("degenerate_scalar.json"),
        "--out",
        out.path().to_str().unwrap(),
    ]);
    assert_eq!(run.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&run.stderr).contains("spectrum condition violated"));
    assert!(!out.path().join("P_tau.csv").exists());
    let summary = fs::read_to_string(out.path().join("summary.json")).unwrap();
    assert!(summary.contains("spectrum_violated"));
}

#[test]
fn check_verdicts_and_exit_codes() {
    let run = dlyap(&["check", "--config", &config("example1.json")]);
    assert_eq!(run.status.code(), Some(0));
    let text = String::from_utf8_lossy(&run.stdout);
    assert!(text.contains("verdict: satisfied"));
    assert!(text.contains("n_s: 24"));

    let run = dlyap(&["check", "--config", &config("degenerate_scalar.json")]);
    assert_eq!(run.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&run.stdout).contains("verdict: violated"));

    let run = dlyap(&["check", "--config", &config("delay_free_scalar.json")]);
    assert_eq!(run.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&run.stdout).contains("verdict: satisfied"));

    // Raising the borderline threshold above the example's relative σ_min.
    let run = dlyap(&[
        "check",
        "--config",
        &config("example1.json"),
        "--tolerance",
        "spectrum_borderline=0.5",
    ]);
    assert_eq!(run.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&run.stdout).contains("verdict: borderline"));
}

#[test]
fn input_errors_exit_with_three() {
    let dir = TempDir::new().unwrap();
    let bad = write_config(
        &dir,
        "bad.json",
        "{\n  \"system\": {\n    \"a0\": [[1, 2], [3]],",
    );
    let run = dlyap(&["check", "--config", &bad]);
    assert_eq!(run.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&run.stderr).contains("line"));

    let text = fs::read_to_string(configs().join("example1.json"))
        .unwrap()
        .replace(
            r#""a1": [[0.0, 1.0], [-1.0, 0.0]]"#,
            r#""a1": [[0.0, 1.0, 2.0], [-1.0, 0.0, 0.0]]"#,
        );
    let inconsistent = write_config(&dir, "dims.json", &text);
    let run = dlyap(&["solve", "--config", &inconsistent, "-q"]);
    assert_eq!(run.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&run.stderr).contains("A1"));

    assert_eq!(dlyap(&["solve"]).status.code(), Some(3));
    assert_eq!(dlyap(&["frobnicate"]).status.code(), Some(3));
    let run = dlyap(&[
        "check",
        "--config",
        &config("example1.json"),
        "--tolerance",
        "nope=1",
    ]);
    assert_eq!(run.status.code(), Some(3));
}

#[test]
fn dumped_config_round_trips() {
    let dir = TempDir::new().unwrap();
    let first = dlyap(&["dump-config"]);
    assert_eq!(first.status.code(), Some(0));
    let path = write_config(
        &dir,
        "dumped.json",
        &String::from_utf8(first.stdout.clone()).unwrap(),
    );
    let second = dlyap(&["dump-config", "--config", &path]);
    assert_eq!(first.stdout, second.stdout);

    // The shipped example file is the same configuration.
    let shipped = dlyap(&["dump-config", "--config", &config("example1.json")]);
    assert_eq!(first.stdout, shipped.stdout);
}

#[test]
fn solve_output_is_deterministic() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    for d in [&a, &b] {
        let run = dlyap(&[
            "solve",
            "--config",
            &config("example1.json"),
            "--out",
            d.path().to_str().unwrap(),
            "-q",
        ]);
        assert_eq!(run.status.code(), Some(0));
    }
    for file in ["P_tau.csv", "report.txt", "summary.json"] {
        assert_eq!(
            fs::read(a.path().join(file)).unwrap(),
            fs::read(b.path().join(file)).unwrap(),
            "{file}"
        );
    }
}

#[test]
fn factored_and_harmonic_forms_agree() {
    let run_a = dlyap(&[
        "sample",
        "--config",
        &config("example1.json"),
        "--tau=-1,-0.3,0,0.5,1",
    ]);
    let run_b = dlyap(&[
        "sample",
        "--config",
        &config("example1_factored.json"),
        "--tau=-1,-0.3,0,0.5,1",
    ]);
    assert_eq!(run_a.status.code(), Some(0));
    let a = parse_rows(&String::from_utf8(run_a.stdout).unwrap());
    let b = parse_rows(&String::from_utf8(run_b.stdout).unwrap());
    assert_eq!(a.len(), 5);
    for (ra, rb) in a.iter().zip(&b) {
        for (x, y) in ra.iter().zip(rb) {
            assert!((x - y).abs() < 1e-12);
        }
    }
    // P(-τ) = P(τ)ᵀ: row for τ = -1 against the τ = 1 entries transposed.
    assert!((a[0][2] - a[4][3]).abs() < 1e-15);

    let outside = dlyap(&[
        "sample",
        "--config",
        &config("example1.json"),
        "--tau",
        "1.5",
    ]);
    assert_eq!(outside.status.code(), Some(3));
}

#[test]
fn validate_example1_passes() {
    let out = TempDir::new().unwrap();
    let run = dlyap(&[
        "validate",
        "--config",
        &config("example1.json"),
        "--out",
        out.path().to_str().unwrap(),
        "--tau-points",
        "21",
    ]);
    let stdout = String::from_utf8_lossy(&run.stdout);
    assert_eq!(run.status.code(), Some(0), "{stdout}");
    assert!(!stdout.contains("FAIL"));
    assert!(stdout.contains("PASS cost from x0 = [1.0, 0.0]"));
    let traj = fs::read_to_string(out.path().join("trajectory.csv")).unwrap();
    assert_eq!(traj.lines().next().unwrap(), "t,x_1,x_2,y_1,y_2");
}

#[test]
fn validate_zero_weight_and_closed_form() {
    let dir = TempDir::new().unwrap();
    let text = fs::read_to_string(configs().join("delay_free_scalar.json"))
        .unwrap()
        .replace(r#""q": [[1.0]]"#, r#""q": [[0.0]]"#);
    let cfg = write_config(&dir, "zero.json", &text);
    let out = dir.path().join("zero");
    let run = dlyap(&[
        "validate",
        "--config",
        &cfg,
        "--out",
        out.to_str().unwrap(),
        "-q",
    ]);
    assert_eq!(run.status.code(), Some(0));
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    for check in summary["checks"].as_array().unwrap() {
        assert_eq!(check["value"].as_f64().unwrap(), 0.0, "{check}");
    }

    let out = dir.path().join("scalar");
    let run = dlyap(&[
        "validate",
        "--config",
        &config("delay_free_scalar.json"),
        "--out",
        out.to_str().unwrap(),
        "-q",
    ]);
    assert_eq!(run.status.code(), Some(0));
    let rows = {
        let run = dlyap(&[
            "sample",
            "--config",
            &config("delay_free_scalar.json"),
            "-q",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(run.status.code(), Some(0));
        parse_rows(&fs::read_to_string(out.join("P_tau.csv")).unwrap())
    };
    for r in rows {
        assert!((r[1] - 0.5 * (-r[0]).exp()).abs() < 1e-8);
    }
}

#[test]
fn unstable_system_fails_validation() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "unstable.json",
        r#"{"system": {"a0": [[0.3]], "a1": [[0.0]], "h": 1.0, "kernel": "none"},
            "q": [[1.0]], "tau_grid": {"count": 3},
            "simulation": {"histories": [[1.0]], "horizon": 20.0}}"#,
    );
    let run = dlyap(&[
        "validate",
        "--config",
        &cfg,
        "--out",
        dir.path().join("o").to_str().unwrap(),
    ]);
    assert_eq!(run.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&run.stdout).contains("FAIL"));
}
