use std::path::PathBuf;
use std::process::{Command as Process, Output};

use manifold_points::scalar::ratio;
use manifold_points::{ApproxFunction, Support, Window};
use mpoints_cli::commands::{chain_summary, scan_rows, series_report};
use mpoints_cli::{execute_to_bytes, Arithmetic, Command, Options, RunConfig, Status};

fn mpoints(args: &[&str]) -> Output {
    Process::new(env!("CARGO_BIN_EXE_mpoints"))
        .args(args)
        .env_remove("MPOINTS_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).expect("valid JSON")
}

fn temp_path(name: &str) -> PathBuf {
    std::env::temp_dir().join(format!("mpoints-{}-{name}", std::process::id()))
}

#[test]
fn count_on_borderline_example() {
    let o = mpoints(&["count", "--manifold", "parabola", "--q", "5", "--psi", "table:{5:1/5}", "--theta", "0,0"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert_eq!(v["A"], 2);
    assert_eq!(v["borderline"], 4);
    assert_eq!(v["arithmetic"], "exact");
}

#[test]
fn count_with_wide_psi() {
    let o = mpoints(&["count", "--manifold", "parabola", "--q", "2", "--psi", "table:{2:2/5}"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(json(&o)["A"], 2);
}

#[test]
fn bad_psi_grammar_names_the_token() {
    let o = mpoints(&["count", "--q", "5", "--psi", "pwr:1/2"]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("`pwr`"), "{err}");

    let o = mpoints(&["count", "--q", "5", "--psi", "pow:1/x"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("1/x"));
}

#[test]
fn unknown_flag_is_a_usage_error() {
    assert_eq!(mpoints(&["scan", "--qmax", "5", "--bogus"]).status.code(), Some(2));
    assert_eq!(mpoints(&["count", "--psi", "pow:1"]).status.code(), Some(2));
}

#[test]
fn scan_has_one_row_per_q() {
    let o = mpoints(&["scan", "--manifold", "parabola", "--psi", "powlog:1/3:2/3", "--qmin", "2", "--qmax", "100", "--no-timing"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "q,psi_q,A,heuristic,trivial,bound_rhs,ratio_A_over_heuristic,borderline,micros"
    );
    let qs: Vec<u64> = lines.map(|l| l.split(',').next().unwrap().parse().unwrap()).collect();
    assert_eq!(qs, (2..=100).collect::<Vec<_>>());
}

#[test]
fn scan_respects_lacunary_support() {
    let cfg = RunConfig {
        psi: Some(ApproxFunction::power(ratio(1, 2)).unwrap().with_support(Support::Lacunary { base: 2 }).unwrap()),
        qmin: Some(2),
        qmax: Some(1024),
        ..RunConfig::default()
    };
    let qs: Vec<u64> = scan_rows(&cfg).unwrap().iter().map(|r| r.q).collect();
    assert_eq!(qs, (1..=10).map(|t| 1u64 << t).collect::<Vec<_>>());
}

#[test]
fn scan_with_empty_support_prints_header_only() {
    let o = mpoints(&["scan", "--psi", "table:{5:1/5}", "--qmin", "6", "--qmax", "50"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().count(), 1);
}

#[test]
fn bounds_reports_kernel_zero_blocks() {
    // H = ⌊1/(2ψ)⌋ = 2 puts distances 1/4 on a zero of the Fejér kernel
    let o = mpoints(&["bounds", "--manifold", "parabola", "--q", "64", "--psi", "table:{64:1/4}", "--C1", "2"]);
    assert_eq!(o.status.code(), Some(1));
    let text = stdout(&o);
    assert_eq!(text.lines().next().unwrap(), "u,A_u,B_u,B_star,chain_ok");
    assert_eq!(text.lines().count(), 34);
    assert!(text.lines().any(|l| l.starts_with("3,1,2,") && l.ends_with(",false")));

    let o = mpoints(&[
        "bounds", "--manifold", "parabola", "--q", "64", "--psi", "table:{64:1/4}", "--C1", "2", "--window", "half",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).lines().skip(1).all(|l| l.ends_with(",true")));
}

#[test]
fn bounds_block_sum_matches_total() {
    let cfg = RunConfig {
        manifold: "paraboloid(2)".into(),
        psi: Some(ApproxFunction::constant(ratio(1, 4)).unwrap()),
        q: Some(128),
        window: Window::Half,
        ..RunConfig::default()
    };
    let s = chain_summary(&cfg).unwrap();
    assert_eq!(s.sum_a_u, s.a_total);
    assert!(s.all_ok());
}

#[test]
fn small_taylor_constant_is_rejected() {
    let o = mpoints(&["bounds", "--q", "64", "--psi", "table:{64:1/4}", "--C1", "1/4"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn series_diverges_at_boundary_exponent() {
    let o = mpoints(&["series", "--d", "1", "--m", "1", "--tau", "0.5", "--s", "1", "--qmax", "100000"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert_eq!(v["classification"], "diverges");
    assert!(v["partial_sum"].as_f64().unwrap() > 10.0);
    assert_eq!(v["critical_exponents"]["s0_monotonic"], "5/4");
}

#[test]
fn series_on_lacunary_support() {
    let cfg = RunConfig {
        psi: Some(ApproxFunction::power(ratio(1, 1)).unwrap().with_support(Support::Lacunary { base: 2 }).unwrap()),
        d: Some(1),
        m: Some(1),
        s: Some(ratio(1, 2)),
        qmax: Some(1 << 20),
        ..RunConfig::default()
    };
    let r = series_report(&cfg).unwrap();
    // exponent 2 - (3/2)·2 = -1 < 0 over q = 2^t
    assert_eq!(r.classification, "converges");
    assert_eq!(r.exponent.as_deref(), Some("-1"));
}

#[test]
fn cover_csv_schema() {
    let o = mpoints(&["cover", "--q", "10", "--psi", "table:{10:1/5}", "--lipschitz", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert_eq!(text.lines().next().unwrap(), "q,a1,b1,diameter,s_power");
    assert_eq!(text.lines().count(), 9);
}

#[test]
fn verify_fast_suite_passes() {
    let o = mpoints(&["verify", "--suite", "fast", "--seed", "42"]);
    let text = stdout(&o);
    assert_eq!(o.status.code(), Some(0), "{text}");
    assert!(text.starts_with("seed 42\n"));
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 9);
}

#[test]
fn presets_are_listed() {
    let o = mpoints(&["presets"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    for name in ["parabola", "paraboloid(d)", "moment_curve(n)", "veronese_counterexample(k)"] {
        assert!(text.contains(name));
    }
}

#[test]
fn config_round_trips_through_canonical_text() {
    let o = Options {
        manifold: Some("paraboloid(2)".into()),
        psi: Some("powlog:0.5:2/4:x3".into()),
        support: Some("lacunary:3".into()),
        theta: Some("0.25,-1/3,2".into()),
        q: Some(17),
        s: Some("1.50".into()),
        taylor_c1: Some("9".into()),
        window: Some("half".into()),
        arithmetic: Some("float".into()),
        seed: Some(9),
        no_timing: true,
        format: Some("json".into()),
        ..Options::default()
    };
    let cfg = RunConfig::from_options(&o).unwrap();
    assert_eq!(cfg.arithmetic, Arithmetic::Float);
    assert_eq!(cfg.s, Some(ratio(3, 2)));
    let text = cfg.to_canonical_text();
    assert!(text.contains("psi = \"powlog:1/2:1/2:x3\""), "{text}");
    assert!(text.contains("C1 = \"9\""), "{text}");
    let back = RunConfig::from_text(&text).unwrap();
    assert_eq!(back, cfg);
    assert_eq!(back.to_canonical_text(), text);
}

#[test]
fn config_file_is_overridden_by_flags() {
    let path = temp_path("config.toml");
    std::fs::write(&path, "psi = \"pow:1/2\"\nqmin = 2\nqmax = 40\nno_timing = true\n").unwrap();
    let p = path.to_str().unwrap();
    let from_file = mpoints(&["scan", "--config", p]);
    assert_eq!(from_file.status.code(), Some(0));
    assert_eq!(stdout(&from_file).lines().count(), 40);
    let overridden = mpoints(&["scan", "--config", p, "--qmax", "10"]);
    assert_eq!(stdout(&overridden).lines().count(), 10);

    std::fs::write(&path, "psi = \"pow:1/2\"\nqmx = 40\n").unwrap();
    let o = mpoints(&["scan", "--config", p]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("qmx"));
    std::fs::remove_file(&path).ok();
}

#[test]
fn thread_count_from_environment() {
    let o = Process::new(env!("CARGO_BIN_EXE_mpoints"))
        .args(["scan", "--psi", "pow:1/2", "--qmax", "60", "--no-timing"])
        .env("MPOINTS_THREADS", "3")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    let single = mpoints(&["scan", "--psi", "pow:1/2", "--qmax", "60", "--no-timing", "--threads", "1"]);
    assert_eq!(o.stdout, single.stdout);
    let bad = Process::new(env!("CARGO_BIN_EXE_mpoints"))
        .args(["scan", "--psi", "pow:1/2", "--qmax", "60"])
        .env("MPOINTS_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn output_file_and_json_scan() {
    let path = temp_path("scan.json");
    let o = mpoints(&[
        "scan", "--psi", "const:1/3", "--qmax", "12", "--format", "json", "--no-timing", "--output",
        path.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let rows: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(rows.as_array().unwrap().len(), 11);
    assert_eq!(rows[0]["micros"], 0);
    std::fs::remove_file(&path).ok();
}

#[test]
fn manifold_file_matches_preset() {
    let path = temp_path("surface.toml");
    std::fs::write(
        &path,
        "d = 2\nm = 1\n[[coordinate]]\nterms = [{ exponents = [2, 0], coeff = \"1\" }, { exponents = [0, 2], coeff = \"1\" }]\n",
    )
    .unwrap();
    let from_file = RunConfig {
        manifold: path.to_str().unwrap().into(),
        psi: Some(ApproxFunction::constant(ratio(1, 5)).unwrap()),
        q: Some(31),
        ..RunConfig::default()
    };
    let preset = RunConfig {
        manifold: "paraboloid(2)".into(),
        ..from_file.clone()
    };
    let a = execute_to_bytes(Command::Count, &RunConfig { no_timing: true, ..from_file }).unwrap();
    let b = execute_to_bytes(Command::Count, &RunConfig { no_timing: true, ..preset }).unwrap();
    assert_eq!(a.0, Status::Success);
    assert_eq!(a.1, b.1);
    std::fs::remove_file(&path).ok();
}
