use std::io::Write;
use std::path::Path;
use std::process::{Command, Output, Stdio};

use serde_json::Value;

fn epsicomp(args: &[&str]) -> Output {
    epsicomp_with_stdin(args, b"")
}

fn epsicomp_with_stdin(args: &[&str], stdin: &[u8]) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_epsicomp"))
        .args(args)
        .env_remove("EPSICOMP_THREADS")
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    // the child may exit before reading, e.g. on a usage error
    let _ = child.stdin.take().unwrap().write_all(stdin);
    child.wait_with_output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

/// Column `col` of the data row whose first field is `key`.
fn field(table: &str, key: &str, col: usize) -> String {
    table
        .lines()
        .map(|l| l.split(',').collect::<Vec<_>>())
        .find(|r| r[0] == key)
        .unwrap_or_else(|| panic!("no row {key} in\n{table}"))[col]
        .to_string()
}

#[test]
fn class_examples() {
    let o = epsicomp(&[
        "class", "--holder-L", "1", "--holder-p", "1", "--radius", "1", "--dim", "1", "--eps-list", "0.1,0.5",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    let s: f64 = field(&out, "0.1", 1).parse().unwrap();
    assert!((s - 5f64.ln()).abs() < 1e-12, "{s}");
    assert_eq!(field(&out, "0.5", 1), "0");

    let o = epsicomp(&["class", "--holder-L", "1", "--holder-p", "1", "--dim", "4", "--eps-list", "0.5"]);
    let s: f64 = field(&stdout(&o), "0.5", 1).parse().unwrap();
    assert!((s - 2f64.ln()).abs() < 1e-12);
}

#[test]
fn class_marks_too_large_rows_and_runs_oracle() {
    let o = epsicomp(&[
        "class", "--holder-L", "1", "--holder-p", "0.5", "--dim", "2", "--eps-list", "0.2,5", "--oracle",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert_eq!(field(&out, "5", 2), "error_too_large");
    assert_eq!(field(&out, "0.2", 2), "ok");
    let discrepancy: f64 = field(&out, "0.2", 6).parse().unwrap();
    assert!(discrepancy < 1e-2, "{out}");
}

#[test]
fn class_rejects_bad_flags_with_usage_status() {
    let o = epsicomp(&["class", "--holder-L", "1", "--holder-p", "1.5", "--eps-list", "0.1"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    let o = epsicomp(&["class", "--holder-L", "1"]);
    assert_eq!(o.status.code(), Some(2));
    let o = epsicomp(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn gen_weierstrass_rows_and_first_value() {
    let o = epsicomp(&["gen", "--kind", "weierstrass", "--a", "0.5", "--b", "3", "--n", "4096"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert_eq!(out.lines().count(), 4096);
    let first: f64 = out.lines().next().unwrap().parse().unwrap();
    assert!((first - 2.0).abs() < 1e-9, "{first}");
}

#[test]
fn gen_writes_series_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("g");
    let o = epsicomp(&["gen", "--kind", "fbm", "--hurst", "0.7", "--seed", "4", "--n", "300", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(std::fs::read_to_string(out.join("series.csv")).unwrap().lines().count(), 300);
    let m = json(&out.join("manifest.json"));
    assert_eq!(m["command"], "gen");
    assert_eq!(m["seeds"]["generator_seed"], 4);
}

#[test]
fn gen_rejects_fractional_weierstrass_base() {
    let o = epsicomp(&["gen", "--kind", "weierstrass", "--b", "2.5", "--n", "10"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn estimate_affine_is_degenerate_with_exit_zero() {
    let dir = tempfile::tempdir().unwrap();
    let input: String = (0..500).map(|i| format!("{}\n", 3.0 - 0.01 * i as f64)).collect();
    let out = dir.path().join("e");
    let o = epsicomp_with_stdin(&["estimate", "--out", out.to_str().unwrap()], input.as_bytes());
    assert!(o.status.success(), "{}", stderr(&o));
    let c = json(&out.join("coefficients.json"));
    assert_eq!(c["degenerate"], true);
    assert_eq!(c["log_base"], "natural");
    assert_eq!(c["normalization"], "uniform");
}

#[test]
fn gen_piped_into_estimate() {
    let dir = tempfile::tempdir().unwrap();
    let g = epsicomp(&["gen", "--kind", "weierstrass", "--n", "3000"]);
    let out = dir.path().join("e");
    let o = epsicomp_with_stdin(&["estimate", "-", "--out", out.to_str().unwrap()], &g.stdout);
    assert!(o.status.success(), "{}", stderr(&o));
    let c = json(&out.join("coefficients.json"));
    assert_eq!(c["degenerate"], false);
    assert!(c["a"].as_f64().unwrap().is_finite());
    assert!(c["b"].as_f64().unwrap() < 0.0);
    assert!(c["r_squared"].as_f64().is_some());

    let curve = std::fs::read_to_string(out.join("curve.csv")).unwrap();
    assert_eq!(curve.lines().next().unwrap(), "fraction,mean_error,stddev,n_schemes");
    assert_eq!(curve.lines().count(), 20);

    let m = json(&out.join("manifest.json"));
    assert_eq!(m["command"], "estimate");
    assert_eq!(m["input"]["source"], "-");
    assert_eq!(m["input"]["sha256"].as_str().unwrap().len(), 64);
    assert_eq!(m["input"]["n_values"], 3000);
}

#[test]
fn estimate_parse_error_names_line() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("bad.csv");
    std::fs::write(&input, "value\n0.1\n0.2\n0.3x\n0.4\n").unwrap();
    let o = epsicomp(&["estimate", input.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("line 4"), "{}", stderr(&o));
}

#[test]
fn estimate_missing_file_is_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = epsicomp(&["estimate", "/nonexistent/series.csv", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn estimate_zero_series_is_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = epsicomp_with_stdin(&["estimate", "--out", dir.path().to_str().unwrap()], b"0\n0\n0\n0\n");
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn estimate_fit_interval_too_narrow_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let input: String = (0..200).map(|i| format!("{}\n", (i as f64 * 0.1).sin())).collect();
    let o = epsicomp_with_stdin(
        &["estimate", "--fit-interval", "0.5,0.55", "--out", dir.path().to_str().unwrap()],
        input.as_bytes(),
    );
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn estimate_difference_orders() {
    let dir = tempfile::tempdir().unwrap();
    let g = epsicomp(&["gen", "--kind", "fbm", "--hurst", "0.6", "--n", "1500"]);
    let out = dir.path().join("e");
    let o = epsicomp_with_stdin(
        &["estimate", "--diff-orders", "2", "--family", "linear,nearest", "--out", out.to_str().unwrap()],
        &g.stdout,
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let c = json(&out.join("coefficients.json"));
    let orders = c["difference_orders"].as_array().unwrap();
    assert_eq!(orders.len(), 2);
    assert_eq!(orders[0]["order"], 1);
    assert!(out.join("curve_order1.csv").exists());
    assert!(out.join("curve_order2.csv").exists());
}

#[test]
fn two_column_input_with_uniform_t() {
    let dir = tempfile::tempdir().unwrap();
    let rows: String = (0..400)
        .map(|i| {
            let t = i as f64 / 399.0;
            format!("{t},{}\n", (9.0 * t).sin() + 0.3 * (40.0 * t).cos())
        })
        .collect();
    let input = dir.path().join("tv.csv");
    std::fs::write(&input, format!("t,value\n{rows}")).unwrap();
    let o = epsicomp(&["estimate", input.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));

    std::fs::write(&input, "0,1\n0.1,2\n0.25,3\n0.3,4\n").unwrap();
    let o = epsicomp(&["estimate", input.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn threads_env_var_matches_flag() {
    let dir = tempfile::tempdir().unwrap();
    let g = epsicomp(&["gen", "--kind", "fbm", "--n", "800"]);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let o = epsicomp_with_stdin(&["--threads", "3", "estimate", "--out", a.to_str().unwrap()], &g.stdout);
    assert!(o.status.success());
    let o = Command::new(env!("CARGO_BIN_EXE_epsicomp"))
        .args(["estimate", "--out", b.to_str().unwrap(), "-"])
        .env("EPSICOMP_THREADS", "2")
        .stdin(Stdio::piped())
        .stdout(Stdio::null())
        .spawn()
        .and_then(|mut c| {
            c.stdin.take().unwrap().write_all(&g.stdout)?;
            c.wait_with_output()
        })
        .unwrap();
    assert!(o.status.success());
    for name in ["curve.csv", "coefficients.json", "manifest.json"] {
        assert_eq!(std::fs::read(a.join(name)).unwrap(), std::fs::read(b.join(name)).unwrap(), "{name}");
    }
    let o = epsicomp(&["--threads", "0", "gen", "--kind", "sine", "--n", "5"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn segment_finds_the_seam() {
    let dir = tempfile::tempdir().unwrap();
    let mut input = epsicomp(&["gen", "--kind", "weierstrass", "--n", "5000"]).stdout;
    input.extend(epsicomp(&["gen", "--kind", "sine", "--freq", "5", "--n", "5000"]).stdout);
    let out = dir.path().join("s");
    let o = epsicomp_with_stdin(&["segment", "--window", "1000", "--hop", "250", "--out", out.to_str().unwrap()], &input);
    assert!(o.status.success(), "{}", stderr(&o));
    let cp = json(&out.join("change_points.json"));
    let points = cp["change_points"].as_array().unwrap();
    assert_eq!(points.len(), 1);
    assert!(points[0].as_u64().unwrap().abs_diff(5000) <= 1000);
    let tracks = std::fs::read_to_string(out.join("tracks.csv")).unwrap();
    assert_eq!(tracks.lines().next().unwrap(), "start,a,b,r_squared,degenerate");
    assert_eq!(tracks.lines().count(), 1 + 37);
    assert_eq!(json(&out.join("manifest.json"))["command"], "segment");
}

#[test]
fn segment_short_series_is_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let input = epsicomp(&["gen", "--kind", "sine", "--n", "500"]).stdout;
    let o = epsicomp_with_stdin(&["segment", "--window", "1000", "--out", dir.path().to_str().unwrap()], &input);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

fn gaps(out: &str) -> Vec<f64> {
    out.lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
        .collect()
}

#[test]
fn converge_square_has_final_row_minimum() {
    let o = epsicomp(&[
        "converge", "--kind", "polynomial", "--coeffs", "0,0,1", "--eps", "0.05", "--n-list", "51,101,201,401,801",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let g = gaps(&stdout(&o));
    assert_eq!(g.len(), 5);
    // the quadratic member of the default family rebuilds t² exactly
    assert!(g.iter().all(|&x| x == 0.0), "{g:?}");

    let o = epsicomp(&[
        "converge", "--kind", "polynomial", "--coeffs", "0,0,1", "--family", "linear", "--eps", "0.05", "--n-list",
        "51,201,801,3201",
    ]);
    let g = gaps(&stdout(&o));
    let last = *g.last().unwrap();
    assert!(g.iter().all(|&x| x >= last), "{g:?}");
}

#[test]
fn converge_rejects_unsorted_sizes() {
    let o = epsicomp(&["converge", "--kind", "sine", "--n-list", "201,51,801"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn rerun_from_manifest_reproduces_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("x.csv");
    std::fs::write(&input, epsicomp(&["gen", "--kind", "logistic", "--r", "3.9", "--n", "700"]).stdout).unwrap();
    let first = dir.path().join("first");
    let args = ["estimate", input.to_str().unwrap(), "--seed", "5", "--schemes", "4", "--family", "linear,spline"];
    let o = epsicomp(&[&args[..], &["--out", first.to_str().unwrap()]].concat());
    assert!(o.status.success(), "{}", stderr(&o));

    // rebuild the command line from the manifest alone
    let m = json(&first.join("manifest.json"));
    let cfg = &m["config"];
    assert_eq!(m["seeds"]["rng_seed"], 5);
    let fractions: Vec<String> = cfg["fractions"].as_array().unwrap().iter().map(|v| v.to_string()).collect();
    let second = dir.path().join("second");
    let o = epsicomp(&[
        "estimate",
        m["input"]["source"].as_str().unwrap(),
        "--seed",
        &cfg["rng_seed"].to_string(),
        "--schemes",
        &cfg["schemes_per_fraction"].to_string(),
        "--fractions",
        &fractions.join(","),
        "--fit-interval",
        &format!("{},{}", cfg["fit_interval"][0], cfg["fit_interval"][1]),
        "--family",
        "linear,spline",
        "--out",
        second.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    for name in ["curve.csv", "coefficients.json", "manifest.json"] {
        assert_eq!(std::fs::read(first.join(name)).unwrap(), std::fs::read(second.join(name)).unwrap(), "{name}");
    }
}
