use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name);
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn noiselab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_noiselab")).args(args).output().unwrap()
}

/// Writes `toml` next to the run and returns `(exit code, stdout, dir)`.
fn run_with(name: &str, sub: &str, toml: &str, extra: &[&str]) -> (i32, String, PathBuf) {
    let dir = scratch(name);
    let cfg = dir.join("config.toml");
    fs::write(&cfg, toml).unwrap();
    let out = dir.join("out");
    let mut args = vec![sub, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    let o = noiselab(&args);
    (o.status.code().unwrap(), String::from_utf8(o.stdout).unwrap() + &String::from_utf8(o.stderr).unwrap(), out)
}

fn record(out: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(out.join("record.json")).unwrap()).unwrap()
}

fn scalar(rec: &Value, name: &str) -> f64 {
    rec["scalars"].as_array().unwrap().iter().find(|s| s["name"] == name).unwrap()["value"].as_f64().unwrap()
}

#[test]
fn bt_verify_trivial_pair_passes() {
    let (code, stdout, out) =
        run_with("bt_trivial", "bt-verify", "[bt_verify]\nm = [8]\npairs = [[\"q3\", \"q3\"]]\n", &[]);
    assert_eq!(code, 0, "{stdout}");
    let rec = record(&out);
    assert!(scalar(&rec, "defect4[q3,q3] at m=8") <= 1e-12);
    assert!(stdout.contains("PASS correspondence[q3,q3]"));
}

#[test]
fn bt_verify_convergence_column_is_monotone() {
    let (code, stdout, out) = run_with("bt_conv", "bt-verify", "[bt_verify]\nm = [16, 32, 64]\n", &[]);
    assert_eq!(code, 0, "{stdout}");
    let csv = fs::read_to_string(out.join("defects.csv")).unwrap();
    let d4: Vec<f64> = csv.lines().skip(1).map(|l| l.split(',').nth(5).unwrap().parse().unwrap()).collect();
    assert_eq!(d4.len(), 3);
    assert!(d4[1] < d4[0] && d4[2] < d4[1]);
}

#[test]
fn csv_has_header_and_lf_endings() {
    let (code, _, out) = run_with("csv_format", "bt-verify", "[bt_verify]\nm = [4, 8]\n", &[]);
    assert_eq!(code, 0);
    let csv = fs::read_to_string(out.join("defects.csv")).unwrap();
    assert!(!csv.contains('\r'));
    assert!(csv.ends_with('\n'));
    assert_eq!(csv.lines().next().unwrap(), "f,g,m,defect1,defect3,defect4,defect5,resolved");
    assert_eq!(csv.lines().count(), 3);
    // The JSON record embeds the same CSV.
    assert_eq!(record(&out)["tables"][0]["csv"].as_str().unwrap(), csv);
}

#[test]
fn config_errors_exit_with_2() {
    let cases = [
        ("missing_m", "bt-verify", "[bt_verify]\npairs = [[\"q1\", \"q2\"]]\n"),
        ("empty_m", "bt-verify", "[bt_verify]\nm = []\n"),
        ("unknown_key", "bt-verify", "[bt_verify]\nm = [8]\ncolour = 3\n"),
        ("unknown_section", "pb4-quad", "[pb4quad]\nshrink = 0.5\n"),
        ("wrong_experiment", "pb4-quad", "experiment = \"bt-verify\"\n"),
        ("m_ceiling", "bt-verify", "[bt_verify]\nm = [512]\n"),
        ("bad_symbol", "bt-verify", "[bt_verify]\nm = [8]\npairs = [[\"q4\", \"q1\"]]\n"),
        ("spin_n_one", "spin-overlap", "[spin_overlap]\nn = [1, 4]\n"),
        ("c1_too_small", "noise-localization", "[noise_localization]\nm = [8]\nc1 = 2.0\n"),
        ("errorbar_c", "errorbar", "[errorbar]\nm = [8]\nn = 3\nc = 0.5\n"),
        ("not_toml", "cover-build", "r = = 1\n"),
    ];
    for (name, sub, toml) in cases {
        let (code, msg, out) = run_with(name, sub, toml, &[]);
        assert_eq!(code, 2, "{name}: {msg}");
        assert!(msg.contains("config error"), "{name}: {msg}");
        assert!(!out.exists(), "{name}: nothing is written");
    }
    assert_eq!(noiselab(&["bt-verify", "--config", "/nonexistent/config.toml"]).status.code(), Some(2));
    assert_eq!(noiselab(&["no-such-experiment"]).status.code(), Some(2));
}

#[test]
fn reruns_reproduce_csv_payloads() {
    let toml = "seed = 11\n[cover_build]\nr = 0.6\nk = [1, 2]\n";
    let (c1, _, a) = run_with("repro_a", "cover-build", toml, &[]);
    let (c2, _, b) = run_with("repro_b", "cover-build", toml, &[]);
    assert_eq!((c1, c2), (0, 0));
    for t in ["colorings.csv", "regions.csv"] {
        assert_eq!(fs::read(a.join(t)).unwrap(), fs::read(b.join(t)).unwrap(), "{t}");
    }
    // The flag overrides the configured seed.
    let (_, _, c) = run_with("repro_c", "cover-build", toml, &["--seed", "12"]);
    assert_eq!(record(&c)["inputs"]["seed"], 12);
    assert_ne!(fs::read(a.join("regions.csv")).unwrap(), fs::read(c.join("regions.csv")).unwrap());
}

#[test]
fn cover_build_checks_colors_and_distances() {
    let (code, stdout, out) =
        run_with("cover", "cover-build", "[cover_build]\nr = 0.5\nk = [1, 2]\n", &["--threads", "2"]);
    assert_eq!(code, 0, "{stdout}");
    let rec = record(&out);
    let ids: Vec<&str> = rec["criteria"].as_array().unwrap().iter().map(|c| c["id"].as_str().unwrap()).collect();
    for id in ["center-count", "degree", "colors k=1", "distance k=1", "colors k=2", "distance k=2"] {
        assert!(ids.contains(&id), "{id}");
    }
    let csv = fs::read_to_string(out.join("colorings.csv")).unwrap();
    let k2: Vec<&str> = csv.lines().nth(2).unwrap().split(',').collect();
    // Same-colored regions are at distance ≥ 3 in the nerve.
    assert!(k2[3] == "none" || k2[3].parse::<usize>().unwrap() >= 3);
}

#[test]
fn pb4_quad_examples() {
    let toml = "[pb4_quad]\nu = [-0.1118, 0.1118]\nv = [-0.1118, 0.1118]\nareas = [0.05, 6.283185307179586]\n";
    let (code, stdout, out) = run_with("pb4", "pb4-quad", toml, &[]);
    assert_eq!(code, 0, "{stdout}");
    let formula = fs::read_to_string(out.join("formula.csv")).unwrap();
    let rows: Vec<Vec<f64>> =
        formula.lines().skip(1).map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    assert_eq!(rows[0][1], 20.0);
    // Both branches of the maximum agree at half the sphere.
    assert!((rows[1][1] - 1.0 / (2.0 * std::f64::consts::PI)).abs() <= 1e-15);
    let rec = record(&out);
    let area = scalar(&rec, "area");
    assert!((area - 0.05).abs() < 1e-3, "{area}");
    assert!(scalar(&rec, "pb4 ramp estimate") <= 40.0);
}

#[test]
fn pb4_quad_without_quadrilateral_records_zero() {
    let (code, stdout, out) = run_with("pb4_empty", "pb4-quad", "[pb4_quad]\nu = [0.8, 0.9]\nv = [0.8, 0.9]\n", &[]);
    assert_eq!(code, 0, "{stdout}");
    let rec = record(&out);
    assert_eq!(scalar(&rec, "pb4"), 0.0);
    assert!(!rec["warnings"].as_array().unwrap().is_empty());
}

#[test]
fn spin_overlap_single_n_has_no_fit() {
    let (code, stdout, out) = run_with("spin_single", "spin-overlap", "[spin_overlap]\nn = [6]\njoint_m = 8\n", &[]);
    assert_eq!(code, 0, "{stdout}");
    let rec = record(&out);
    let ids: Vec<&str> = rec["criteria"].as_array().unwrap().iter().map(|c| c["id"].as_str().unwrap()).collect();
    assert_eq!(ids, ["joint-marginals"]);
    let csv = fs::read_to_string(out.join("overlap.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
}

#[test]
fn spin_overlap_sweep_fits_slope_two() {
    let (code, stdout, out) = run_with("spin_sweep", "spin-overlap", "[spin_overlap]\nc1 = 2.5\n", &[]);
    assert_eq!(code, 0, "{stdout}");
    let slope = scalar(&record(&out), "log-log slope of mu lower vs N");
    assert!((slope - 2.0).abs() <= 0.1);
}

#[test]
fn noise_estimates_are_labelled_bracketed() {
    let toml = "[noise_localization]\nm = [4, 8]\nn = 2\naxis = 3\n";
    let (code, stdout, out) = run_with("noise_n2", "noise-localization", toml, &[]);
    assert_eq!(code, 0, "{stdout}");
    let rec = record(&out);
    for s in rec["scalars"].as_array().unwrap() {
        let name = s["name"].as_str().unwrap();
        if name.starts_with("N_in") {
            assert_eq!(s["label"], "bracketed estimate");
            // Commuting registration: every noise column vanishes.
            assert!(s["value"].as_f64().unwrap().abs() <= 1e-9, "{name}");
        }
        assert!(["upper", "lower", "exact", "heuristic"].contains(&s["kind"].as_str().unwrap()));
    }
    assert!(stdout.contains("(bracketed estimate)"));
}

#[test]
fn errorbar_small_run() {
    let toml = "[errorbar]\nm = [16]\ngradient_starts = 2\n";
    let (code, stdout, out) = run_with("errorbar", "errorbar", toml, &[]);
    let rec = record(&out);
    let theta = scalar(&rec, "theta m=16");
    assert!(theta <= 1.0, "{theta}");
    let self_test = rec["criteria"].as_array().unwrap().iter().find(|c| c["id"] == "self-test").unwrap();
    assert_eq!(self_test["passed"], true);
    assert_eq!(code == 0, rec["criteria"].as_array().unwrap().iter().all(|c| c["passed"] == true), "{stdout}");
}
