use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use stableks_cli::table::{read_table, Schema, BANDIT_SUMMARY, GRADCHECK, LOG1MEXP, ORACLE, POINT_MASS, TRACE};
use tempfile::TempDir;

fn stableks(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stableks"))
        .arg("--out-dir")
        .arg(out)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(out: &Path, args: &[&str]) -> String {
    let o = stableks(out, args);
    assert!(
        o.status.success(),
        "{args:?} failed: {}\n{}",
        String::from_utf8_lossy(&o.stdout),
        String::from_utf8_lossy(&o.stderr)
    );
    String::from_utf8(o.stdout).unwrap()
}

fn sidecar(out: &Path, name: &str) -> Value {
    let text = std::fs::read_to_string(out.join(format!("{name}.json"))).unwrap();
    serde_json::from_str(&text).unwrap()
}

fn col(rows: &[csv::StringRecord], schema: Schema, name: &str) -> Vec<f64> {
    let i = schema.columns.iter().position(|c| *c == name).unwrap();
    rows.iter().map(|r| r[i].parse().unwrap()).collect()
}

#[test]
fn dist_examples() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    assert_eq!(ok(d, &["dist", "--log-a", "0", "--log-b", "0", "icdf", "0.25"]).trim(), "0.75");
    assert_eq!(ok(d, &["dist", "--log-a", "0", "--log-b", "0", "entropy"]).trim(), "0");
    let v: f64 = ok(d, &["dist", "--a", "2", "--b", "3", "logpdf", "0.3"]).trim().parse().unwrap();
    // log(2 · 3 · 0.3 · 0.91²)
    assert!((v - 1.490_58f64.ln()).abs() < 1e-6, "{v}");
    assert!((v - 0.399163).abs() < 1e-5);

    let out = ok(d, &["dist", "--a", "2", "--b", "3", "--grad", "logpdf", "0.3"]);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with("d_log_a ") && lines[3].starts_with("d_log_x "));

    let rows = read_table(d.join("dist.csv"), stableks_cli::table::DIST).unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(&rows[0][0], "logpdf");
    assert_eq!(sidecar(d, "dist")["summary"]["query"], "logpdf");
}

#[test]
fn dist_reports_domain_errors() {
    let dir = TempDir::new().unwrap();
    let o = stableks(dir.path(), &["dist", "--log-a", "0", "--log-b", "0", "icdf", "1.5"]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("0 < x < 1"), "{err}");

    let o = stableks(dir.path(), &["dist", "--a", "-1", "--b", "2", "entropy"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("a > 0"));

    let o = stableks(dir.path(), &["dist", "--log-a", "0", "--a", "1", "--log-b", "0", "entropy"]);
    assert_eq!(o.status.code(), Some(2), "--log-a and --a conflict");
}

#[test]
fn dist_single_precision_and_log_input() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let v = ok(d, &["dist", "--log-a", "0", "--log-b", "0", "--precision", "single", "icdf", "0.25"]);
    assert_eq!(v.trim(), "0.75");
    // u = exp(-1e-9) is 1 - 1e-9, which double cannot hold exactly
    let v: f64 = ok(d, &["dist", "--log-a", "0", "--log-b", "0", "--log-input", "icdf", "-1e-9"])
        .trim()
        .parse()
        .unwrap();
    assert!((v - 1e-9).abs() < 1e-18, "{v}");
}

#[test]
fn diagnose_single_precision_tables() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    ok(d, &["diagnose"]);

    let rows = read_table(d.join("diagnose_log1mexp.csv"), LOG1MEXP).unwrap();
    let log2 = col(&rows, LOG1MEXP, "log2_abs_x");
    let naive = col(&rows, LOG1MEXP, "naive");
    let stable = col(&rows, LOG1MEXP, "stable");
    let err = col(&rows, LOG1MEXP, "stable_rel_err");
    assert_eq!(rows.len(), 601);
    assert!(stable.iter().all(|v| v.is_finite()));
    assert!(err.iter().all(|&e| e <= 1e-6));
    // f32 rounds exp(x) to 1 once |x| <= 2^-25; the half-decade above
    // that is finite but already inaccurate
    for i in 0..rows.len() {
        if log2[i] <= -25.0 {
            assert_eq!(naive[i], f64::NEG_INFINITY, "log2|x| = {}", log2[i]);
        }
        if log2[i] > -25.0 {
            assert!(naive[i].is_finite(), "log2|x| = {}", log2[i]);
        }
    }

    let rows = read_table(d.join("diagnose_point_mass.csv"), POINT_MASS).unwrap();
    for f in col(&rows, POINT_MASS, "naive_zero_fraction") {
        assert!((f - 0.3935).abs() < 0.002, "{f}");
    }
    assert!(col(&rows, POINT_MASS, "stable_boundary_fraction").iter().all(|&f| f == 0.0));

    let s = sidecar(d, "diagnose");
    assert_eq!(s["summary"]["pass"], true);
    assert_eq!(s["outputs"].as_array().unwrap().len(), 4);
}

#[test]
fn diagnose_double_precision_onset_shifts() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    ok(d, &["diagnose", "--precision", "double", "--log2-min", "-60", "--draws", "1000"]);
    let rows = read_table(d.join("diagnose_log1mexp.csv"), LOG1MEXP).unwrap();
    let log2 = col(&rows, LOG1MEXP, "log2_abs_x");
    let naive = col(&rows, LOG1MEXP, "naive");
    let onset = (0..rows.len())
        .filter(|&i| naive[i] == f64::NEG_INFINITY)
        .map(|i| log2[i])
        .fold(f64::NEG_INFINITY, f64::max);
    assert_eq!(onset, -54.0);
    assert!((0..rows.len()).all(|i| log2[i] > -54.0 || naive[i] == f64::NEG_INFINITY));
}

#[test]
fn diagnose_unwritable_output() {
    let dir = TempDir::new().unwrap();
    let file = dir.path().join("not-a-dir");
    std::fs::write(&file, "").unwrap();
    let o = stableks(&file, &["diagnose", "--draws", "10"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("cannot create output directory"));
}

#[test]
fn gradcheck_default_grid_passes() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let out = ok(d, &["gradcheck"]);
    assert!(out.contains("PASS"));
    let rows = read_table(d.join("gradcheck.csv"), GRADCHECK).unwrap();
    assert!(rows.iter().all(|r| &r[8] == "true"));
    for component in ["log_pdf/d_log_a", "log_pdf/d_log_x", "icdf/d_log_b", "entropy/d_log_a"] {
        assert!(out.contains(component), "{component} missing from report");
    }
}

#[test]
fn gradcheck_uniform_log_x_gradient_is_zero() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    ok(d, &["gradcheck", "--log-params", "0"]);
    let rows = read_table(d.join("gradcheck.csv"), GRADCHECK).unwrap();
    let zero: Vec<_> = rows
        .iter()
        .filter(|r| &r[0] == "log_pdf/d_log_x" && &r[1] == "0" && &r[2] == "0")
        .collect();
    assert_eq!(zero.len(), 5);
    assert!(zero.iter().all(|r| r[4].parse::<f64>().unwrap() == 0.0));
}

#[test]
fn gradcheck_negative_control_exits_1() {
    let dir = TempDir::new().unwrap();
    let o = stableks(dir.path(), &["gradcheck", "--corrupt"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL"));
}

#[test]
fn sample_stable_vs_naive_at_sharp_b() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let args = ["sample", "--a", "1", "--b", "16777216", "--precision", "single", "-n", "20000"];
    ok(d, &args);
    let s = sidecar(d, "sample")["summary"].clone();
    assert_eq!(s["boundary"], 0);
    assert!(s["ks_statistic"].as_f64().unwrap() < s["ks_critical_1pct"].as_f64().unwrap());

    let mut naive = args.to_vec();
    naive.extend(["--method", "naive"]);
    ok(d, &naive);
    let s = sidecar(d, "sample")["summary"].clone();
    let frac = s["boundary"].as_f64().unwrap() / 20000.0;
    assert!((frac - 0.3935).abs() < 0.015, "{frac}");
}

#[test]
fn oracle_regen_writes_reference_values() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    ok(d, &["oracle-regen"]);
    let rows = read_table(d.join("oracle.csv"), ORACLE).unwrap();
    let get = |name: &str| -> f64 {
        rows.iter().find(|r| &r[0] == name).unwrap_or_else(|| panic!("{name}"))[1].parse().unwrap()
    };
    assert!((get("entropy(a=1, b=2)") - (0.5 - 2f64.ln())).abs() < 1e-12);
    assert!((get("icdf(0.75; a=2, b=2)") - (1.0 - 0.75f64.sqrt()).sqrt()).abs() < 1e-15);
    assert!((get("naive_point_mass(b=2^24, f32)") - 0.393_469_340_287_366_6).abs() < 1e-15);
}

#[test]
fn bandit_random_matches_closed_form() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    ok(d, &["bandit", "--policy", "random", "--K", "1000", "--T", "2000", "--seeds", "5"]);
    let s = sidecar(d, "bandit")["summary"].clone();
    let mean = s["policies"][0]["mean_cum_regret"].as_f64().unwrap();
    let expected = s["expected_random_regret"].as_f64().unwrap();
    let se = s["expected_random_regret_se"].as_f64().unwrap();
    assert!((mean - expected).abs() < 4.0 * se, "{mean} vs {expected} +/- {se}");

    let rows = read_table(d.join("bandit_summary.csv"), BANDIT_SUMMARY).unwrap();
    assert_eq!(rows.len(), 1);
    for seed in 0..5 {
        let trace = read_table(d.join(format!("trace_random_seed{seed}.csv")), TRACE).unwrap();
        assert_eq!(trace.len(), 2000);
    }
}

#[test]
fn bandit_vbe_beats_random() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    ok(d, &["bandit", "--policy", "vbe-ks,random", "--K", "1000", "--T", "2000", "--seeds", "5"]);
    let s = sidecar(d, "bandit")["summary"].clone();
    let mean = |i: usize| s["policies"][i]["mean_cum_regret"].as_f64().unwrap();
    assert_eq!(s["policies"][0]["policy"], "vbe-ks");
    assert!(mean(0) < 0.5 * mean(1), "{} vs {}", mean(0), mean(1));
    assert_eq!(s["policies"][0]["aborted_runs"], 0);
    assert_eq!(s["policies"][0]["nonfinite_events"], 0);
}

fn trace_bytes(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut v: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().unwrap().to_string_lossy().starts_with("trace_"))
        .map(|p| (PathBuf::from(p.file_name().unwrap()), std::fs::read(&p).unwrap()))
        .collect();
    v.sort();
    v
}

#[test]
fn bandit_traces_are_deterministic() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    let args = ["--seed", "11", "bandit", "--policy", "vbe-ks,greedy-no-entropy", "--K", "60", "--T", "150", "--seeds", "2"];
    ok(a.path(), &args);
    ok(b.path(), &args);
    let (ta, tb) = (trace_bytes(a.path()), trace_bytes(b.path()));
    assert_eq!(ta.len(), 4);
    assert_eq!(ta, tb);

    let c = TempDir::new().unwrap();
    let mut other = args.to_vec();
    other[1] = "12";
    ok(c.path(), &other);
    assert_ne!(trace_bytes(c.path())[0].1, ta[0].1);
}

#[test]
fn sidecar_argv_replays_the_run() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    let cfg = a.path().join("run.cfg");
    std::fs::write(&cfg, "# tiny run\nsteps = 80\narms = 40  # K\npolicy = vbe-ks\nseeds = 1\nseed = 5\n").unwrap();
    ok(a.path(), &["--config", cfg.to_str().unwrap(), "bandit", "--steps", "60"]);
    let s = sidecar(a.path(), "bandit");
    assert_eq!(s["seed"], 5);
    assert_eq!(s["args"]["command"]["bandit"]["steps"], 60, "flag beats config");
    assert_eq!(s["args"]["command"]["bandit"]["arms"], 40);

    // replay without the config file, into another directory
    let argv: Vec<String> = s["argv"].as_array().unwrap().iter().map(|v| v.as_str().unwrap().to_string()).collect();
    assert!(!argv.iter().any(|x| x == "--config"));
    let mut replay: Vec<&str> = Vec::new();
    let mut it = argv[1..].iter();
    while let Some(x) = it.next() {
        if x == "--out-dir" {
            it.next();
        } else {
            replay.push(x);
        }
    }
    ok(b.path(), &replay);
    let r = sidecar(b.path(), "bandit");
    let hashes = |v: &Value| -> Vec<String> {
        v["outputs"].as_array().unwrap().iter().map(|o| o["sha256"].as_str().unwrap().to_string()).collect()
    };
    assert_eq!(hashes(&s), hashes(&r));
}

#[test]
fn config_errors_name_the_line() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "log-a = 0\nsteps = 3\n").unwrap();
    let o = stableks(dir.path(), &["--config", cfg.to_str().unwrap(), "dist", "--log-b", "0", "entropy"]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 2") && err.contains("steps"), "{err}");
}

#[test]
fn readers_reject_schema_drift() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    ok(d, &["bandit", "--policy", "random", "--K", "20", "--T", "10", "--seeds", "1"]);
    let path = d.join("trace_random_seed0.csv");
    let good = std::fs::read_to_string(&path).unwrap();
    assert!(read_table(&path, TRACE).is_ok());

    let renamed = good.replacen("inst_regret", "instant_regret", 1);
    std::fs::write(&path, renamed).unwrap();
    assert!(read_table(&path, TRACE).unwrap_err().to_string().contains("do not match"));

    let bumped = good.replacen("version=1", "version=2", 1);
    std::fs::write(&path, bumped).unwrap();
    assert!(read_table(&path, TRACE).is_err());

    let extra = good.replacen("cum_regret\n", "cum_regret,note\n", 1);
    std::fs::write(&path, extra).unwrap();
    assert!(read_table(&path, TRACE).is_err());

    let headless: String = good.lines().skip(1).map(|l| format!("{l}\n")).collect();
    std::fs::write(&path, headless).unwrap();
    assert!(read_table(&path, TRACE).is_err());
}
