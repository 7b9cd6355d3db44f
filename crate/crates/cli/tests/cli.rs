use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn qdka(args: &[&str], seed_env: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_qdka"));
    cmd.args(args).env_remove("QDKA_SEED");
    if let Some(s) = seed_env {
        cmd.env("QDKA_SEED", s);
    }
    cmd.output().expect("qdka runs")
}

fn manifest(out: &Path) -> Value {
    let text = std::fs::read_to_string(format!("{}.manifest.json", out.display())).unwrap();
    serde_json::from_str(&text).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn defaults_are_the_reference_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("scan.csv");
    let o = qdka(&["scan-eta", "--out", out.to_str().unwrap()], None);
    assert!(o.status.success(), "{}", stderr(&o));
    let m = manifest(&out);
    let c = &m["config"];
    assert_eq!(c["ell"], 1);
    assert_eq!(c["phi_d"].as_f64(), Some(0.6));
    assert_eq!(c["kicks"], 4);
    assert_eq!(c["reversal"].as_f64(), Some(2.4));
    assert_eq!(c["beta0"].as_f64(), Some(0.5));
    assert_eq!(c["fwhm"].as_f64(), Some(0.06));
    assert_eq!(m["engine"], "analytic");
    assert_eq!(m["subcommand"], "scan-eta");
    assert!(m["config_digest"].is_null());
    let csv = std::fs::read_to_string(&out).unwrap();
    assert_eq!(csv.lines().count(), 302);
}

#[test]
fn ell_zero_is_a_configuration_error() {
    let o = qdka(&["scan-eta", "--ell", "0"], None);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("ell must be ≥ 1"), "{}", stderr(&o));
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# reference width\nfwhm = 0.06\nell=2\n\nbeta0 = 0.5 # center\n").unwrap();
    let out = dir.path().join("scan.csv");
    let o = qdka(
        &["scan-eta", "--config", cfg.to_str().unwrap(), "--fwhm", "0.07", "--eta-points", "3", "--out", out.to_str().unwrap()],
        None,
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let m = manifest(&out);
    assert_eq!(m["config"]["fwhm"].as_f64(), Some(0.07));
    assert_eq!(m["config"]["ell"], 2);
    assert_eq!(m["config_digest"].as_str().map(str::len), Some(64));
}

#[test]
fn seed_precedence_is_file_then_env_then_flag() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "seed = 5\n").unwrap();
    let out = dir.path().join("s.csv");
    let base = ["scan-eta", "--config", cfg.to_str().unwrap(), "--eta-points", "1", "--out", out.to_str().unwrap()];

    assert!(qdka(&base, None).status.success());
    assert_eq!(manifest(&out)["seed"], 5);

    assert!(qdka(&base, Some("9")).status.success());
    assert_eq!(manifest(&out)["seed"], 9);

    let mut with_flag = base.to_vec();
    with_flag.extend(["--seed", "11"]);
    assert!(qdka(&with_flag, Some("9")).status.success());
    assert_eq!(manifest(&out)["seed"], 11);
}

#[test]
fn unknown_key_and_type_mismatch_name_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "pulse_count = 4\n").unwrap();
    let o = qdka(&["scan-eta", "--config", cfg.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("`pulse_count`"));

    std::fs::write(&cfg, "kicks = four\n").unwrap();
    let o = qdka(&["scan-eta", "--config", cfg.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("`kicks`") && stderr(&o).contains("four"));

    let o = qdka(&["scan-eta", "--engine", "exact"], None);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("`engine`"));
}

#[test]
fn three_point_scan_has_four_lines_and_empty_std_error() {
    let o = qdka(&["scan-eta", "--eta-min", "-0.5", "--eta-max", "0.5", "--eta-points", "3"], None);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 4);
    assert_eq!(lines[0], "eta,g_mps2,fidelity,std_error");
    for line in &lines[1..] {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols.len(), 4);
        assert!(cols[3].is_empty());
        let mantissa = cols[2].split('e').next().unwrap().trim_start_matches('-').replace('.', "");
        assert_eq!(mantissa.len(), 17, "{}", cols[2]);
    }
}

#[test]
fn noisy_engine_reports_std_error() {
    let o = qdka(&["scan-eta", "--engine", "noisy", "--realizations", "8", "--eta-points", "2", "--eta-min", "-0.1", "--eta-max", "0.1"], None);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    for line in text.lines().skip(1) {
        let se: f64 = line.split(',').nth(3).unwrap().parse().unwrap();
        assert!(se > 0.0);
    }
}

#[test]
fn noise_on_a_noiseless_engine_is_rejected() {
    let o = qdka(&["scan-eta", "--amp-frac", "0.07", "--eta-points", "2"], None);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn json_output_is_parseable() {
    let o = qdka(&["scan-eta", "--format", "json", "--eta-points", "3", "--eta-min", "-1", "--eta-max", "1"], None);
    assert!(o.status.success());
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["records"].as_array().unwrap().len(), 3);
    assert!(v["records"][1]["std_error"].is_null());
    assert_eq!(v["records"][1]["eta"].as_f64(), Some(0.0));
}

#[test]
fn unwritable_output_is_an_io_error() {
    let o = qdka(&["scan-eta", "--eta-points", "2", "--out", "/nonexistent-dir/x.csv"], None);
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).contains("/nonexistent-dir/x.csv"));
}

#[test]
fn scan_ell_writes_one_table_per_order() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("widths.csv");
    let o = qdka(
        &["scan-ell", "--eta-min", "-0.3", "--eta-max", "0.3", "--eta-points", "121", "--out", out.to_str().unwrap()],
        None,
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let table = std::fs::read_to_string(&out).unwrap();
    assert_eq!(table.lines().count(), 4);
    for ell in 1..=3 {
        let per = std::fs::read_to_string(dir.path().join(format!("widths.ell{ell}.csv"))).unwrap();
        assert_eq!(per.lines().count(), 122);
    }
}

#[test]
fn thermometry_and_asymmetry_run() {
    let o = qdka(&["thermometry", "--ell", "2", "--format", "json"], None);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["monotone"], true);
    assert!(v["r_squared"].as_f64().unwrap() >= 0.95);

    let o = qdka(&["asymmetry", "--ell", "2", "--beta0", "0", "--eta-star", "0.3"], None);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    let visibility: f64 = text.lines().nth(1).unwrap().split(',').nth(5).unwrap().parse().unwrap();
    assert!(visibility.abs() < 1e-9);
}

#[test]
fn selftest_passes_and_detects_perturbation() {
    let o = qdka(&["selftest"], None);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    let o = qdka(&["selftest", "--seed", "12345"], None);
    assert!(o.status.success());

    let o = qdka(&["selftest", "--perturb-bessel", "1e-6"], None);
    assert_eq!(o.status.code(), Some(3));
    let report = String::from_utf8(o.stdout).unwrap();
    assert!(report.contains("FAIL bessel-normalization"));
    assert!(report.lines().filter(|l| l.starts_with("FAIL")).count() == 1, "{report}");
}

#[test]
fn manifest_replay_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first.csv");
    let second = dir.path().join("second.csv");
    let o = qdka(&["scan-eta", "--ell", "2", "--fwhm", "0.07", "--eta-points", "41", "--out", first.to_str().unwrap()], None);
    assert!(o.status.success());
    let m = format!("{}.manifest.json", first.display());
    let o = qdka(&["scan-eta", "--config", &m, "--out", second.to_str().unwrap()], None);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(std::fs::read(&first).unwrap(), std::fs::read(&second).unwrap());
    assert_eq!(manifest(&second)["config"], manifest(&first)["config"]);
}
