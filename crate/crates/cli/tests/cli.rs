use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use queuetail_cli::output::COLUMNS;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_queuetail"))
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

/// Rows keyed by `(x_or_theta, quantity)`, for the first matching `n`.
fn lookup(csv: &str, quantity: &str, x: &str) -> String {
    let mut rdr = csv::Reader::from_reader(csv.as_bytes());
    for rec in rdr.records() {
        let rec = rec.unwrap();
        if &rec[4] == quantity && &rec[3] == x {
            return rec[5].to_string();
        }
    }
    panic!("no row {quantity} at {x} in\n{csv}");
}

fn value(csv: &str, quantity: &str, x: &str) -> f64 {
    lookup(csv, quantity, x).parse().unwrap()
}

fn assert_matches_golden(actual: &str, golden: &Path) {
    let expected = std::fs::read_to_string(golden).unwrap();
    let (a, e): (Vec<_>, Vec<_>) = (actual.lines().collect(), expected.lines().collect());
    assert_eq!(a.len(), e.len(), "row count differs from {}", golden.display());
    for (ra, re) in a.iter().zip(&e) {
        let (ca, ce): (Vec<_>, Vec<_>) = (ra.split(',').collect(), re.split(',').collect());
        assert_eq!(ca.len(), ce.len());
        for (x, y) in ca.iter().zip(&ce) {
            match (x.parse::<f64>(), y.parse::<f64>()) {
                (Ok(u), Ok(v)) => assert!((u - v).abs() <= 1e-12 * v.abs().max(1e-300), "{ra} vs {re}"),
                _ => assert_eq!(x, y, "{ra} vs {re}"),
            }
        }
    }
}

#[test]
fn sweep_matches_golden_files() {
    for name in ["jsq_single_server", "mmn_halfin_whitt"] {
        let out = run(&["sweep", "--config", fixture(&format!("{name}.json")).to_str().unwrap()]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        assert_matches_golden(&stdout(&out), &fixture(&format!("{name}.golden.csv")));
    }
}

#[test]
fn header_is_fixed() {
    let out = run(&["exact", "mm1", "--eps", "0.2", "--x", "1"]);
    assert_eq!(stdout(&out).lines().next().unwrap(), COLUMNS.join(","));
}

#[test]
fn bounds_jsq_rate() {
    let out = run(&["bounds", "jsq", "--n", "1", "--eps", "3e-4", "--x", "5,10,20"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!((value(&text, "rate", "na") - 1.00015).abs() < 1e-5);
    assert_eq!(text.matches(",tail_upper,").count(), 3);
    assert!(!text.contains("NaN"));
}

#[test]
fn bounds_mmn_flags_vacuous_prefactor() {
    let out = run(&["bounds", "mmn", "--n", "100", "--alpha", "0.7", "--c", "1", "--x", "1,2,3"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(value(&text, "idle_tail_c0", "na") > 1.0);
    assert_eq!(lookup(&text, "p_r_gt_0_upper", "na"), "vacuous");
    for x in ["1", "2", "3"] {
        assert_eq!(lookup(&text, "idle_tail_upper", x), "vacuous");
    }
}

#[test]
fn bounds_ssq_fixture() {
    let (a, s) = (fixture("bernoulli_0.4.json"), fixture("bernoulli_0.5.json"));
    let out = run(&["bounds", "ssq", "--arrival", a.to_str().unwrap(), "--service", s.to_str().unwrap()]);
    assert!(out.status.success());
    let text = stdout(&out);
    let theta = 2.0 * 0.5 / 0.49;
    assert!((value(&text, "theta_eps", "na") - theta).abs() < 1e-12);
    let kappa = 0.2 * 9.0 * 0.25 / 0.49f64.powi(3);
    assert!((value(&text, "rate", "na") - theta * (1.0 - kappa * 0.2)).abs() < 1e-9);
}

#[test]
fn exact_mm1_and_mmn_examples() {
    let out = run(&["exact", "mm1", "--eps", "0.2", "--x", "1"]);
    assert!((value(&stdout(&out), "tail_ge", "1") - 0.32768).abs() < 1e-14);

    let out = run(&["exact", "mmn", "--n", "2", "--eps", "0.5"]);
    assert!(out.status.success());
    let text = stdout(&out);
    for q in ["p_q_eq_n_integral", "p_q_eq_n_birth_death"] {
        assert!((value(&text, q, "na") - 1.0 / 6.0).abs() < 1e-12);
    }
    assert!(value(&text, "max_relative_residual", "na") < 1e-8);

    let out = run(&["exact", "mmn", "--n", "1", "--eps", "0.5"]);
    assert!((value(&stdout(&out), "integral_neg", "na") - 2.0).abs() < 1e-10);
}

#[test]
fn exact_mmn_residual_failure_exits_three() {
    let out = run(&["exact", "mmn", "--n", "2", "--eps", "0.5", "--tol", "0"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn invalid_input_exits_one() {
    assert_eq!(run(&["bounds", "jsq", "--n", "2", "--eps", "1.5", "--x", "1"]).status.code(), Some(1));
    assert_eq!(run(&["bounds", "jsq", "--n", "2"]).status.code(), Some(1));
    assert_eq!(run(&["simulate", "jsq", "--n", "2", "--eps", "0.2", "--events", "1e5"]).status.code(), Some(1));
    assert_eq!(run(&["sweep", "--config", "/nonexistent.json"]).status.code(), Some(1));
    let bad = tempfile::NamedTempFile::new().unwrap();
    std::fs::write(bad.path(), r#"{"system": {"kind": "jsq", "n": [2], "eps": 0.2}, "colour": 1}"#).unwrap();
    assert_eq!(run(&["sweep", "--config", bad.path().to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn simulate_is_reproducible_and_seed_sensitive() {
    let args = |seed: &'static str| {
        vec!["simulate", "jsq", "--n", "2", "--eps", "0.2", "--events", "2e5", "--seed", seed, "--theta", "-0.5,0.3"]
    };
    let a = run(&args("42"));
    let b = run(&args("42"));
    let c = run(&args("43"));
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
    let text = stdout(&a);
    assert!(text.contains(",empty_frac,"));
    assert!(text.contains(",perp_mgf,"));
}

#[test]
fn simulate_ssq_mean_unused_service() {
    let (a, s) = (fixture("bernoulli_0.4.json"), fixture("bernoulli_0.5.json"));
    let out = run(&[
        "simulate", "ssq", "--arrival", a.to_str().unwrap(), "--service", s.to_str().unwrap(), "--slots", "1e7",
        "--seed", "7",
    ]);
    assert!(out.status.success());
    let mut rdr = csv::Reader::from_reader(out.stdout.as_slice());
    let row = rdr.records().map(Result::unwrap).find(|r| &r[4] == "mean_u").unwrap();
    let (lo, hi): (f64, f64) = (row[6].parse().unwrap(), row[7].parse().unwrap());
    assert!(lo <= 0.1 && 0.1 <= hi, "CI [{lo}, {hi}]");
}

#[test]
fn json_output_and_output_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.json");
    let out = run(&["--format", "json", "--output", path.to_str().unwrap(), "exact", "mm1", "--eps", "0.2", "--x", "1"]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let keys: Vec<&String> = v[0].as_object().unwrap().keys().collect();
    assert_eq!(keys, COLUMNS.to_vec());
    assert_eq!(v[0]["ci_lo"], "na");
}

#[test]
fn sweep_with_simulation_block() {
    let out = run(&["sweep", "--config", fixture("ssq_bernoulli.json").to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert!((value(&text, "decay_rate", "na") - 5.0 * 1.5f64.ln()).abs() < 1e-9);
    assert!(text.contains(",e_neg_theta_u,"));
}

#[test]
fn verify_none_and_report_file() {
    let out = run(&["verify", "--suite", "none"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out).trim(), "[]");

    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("r.json");
    let out = run(&["verify", "--suite", "gn-identities", "--report", report.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    let rec = v[0].as_object().unwrap();
    let keys: Vec<&str> = rec.keys().map(String::as_str).collect();
    assert_eq!(keys, ["suite", "check", "expected", "observed", "tolerance", "pass"]);
}

#[test]
fn verify_failure_exits_three() {
    assert_eq!(run(&["verify", "--suite", "jsq-sandwich"]).status.code(), Some(3));
}

#[test]
fn verify_suite_from_config() {
    let cfg = tempfile::NamedTempFile::new().unwrap();
    std::fs::write(cfg.path(), r#"{"suite": "markov-lemma"}"#).unwrap();
    let out = run(&["verify", "--config", cfg.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
}
