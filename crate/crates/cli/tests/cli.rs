//! End-to-end tests of the command-line surface: config diagnostics, exit
//! codes, report determinism, and the refinement study.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_wentropy"))
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path
}

fn small_torus_config(checks: &str) -> String {
    format!(
        r#"
[grid]
domain = "torus"
dimension = 1
points_per_axis = 64

[potential]
kind = "trig"
terms = [{{ amplitude = 0.3, freq = [1, 0] }}]

[constants]
k = -0.3
m = "inf"

[time]
start = 0.1
end = 0.6
samples = 11

[initial]
kind = "trig-exp"
amplitude = 0.3

[family]
generator = "random-trig"
count = 6
seed = 11

[checks]
run = [{checks}]
pairs = [[0.0, 0.25]]
allowance = 2.0
"#
    )
}

fn run_ok(out: &Output) -> bool {
    out.status.code() == Some(0)
}

#[test]
fn rejects_small_resolution_naming_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "bad.toml",
        &small_torus_config("").replace("points_per_axis = 64", "points_per_axis = 7"),
    );
    let out = bin().args(["run"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("grid.points_per_axis"), "stderr: {err}");
}

#[test]
fn rejects_unknown_keys_and_unknown_checks() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "unknown.toml",
        &(small_torus_config("") + "\n[grid.extra]\nfoo = 1\n"),
    );
    let out = bin().args(["run"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));

    let cfg = write_config(dir.path(), "badcheck.toml", &small_torus_config("\"no-such-check\""));
    let out = bin().args(["run"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("checks.run[0]"), "stderr: {err}");
}

#[test]
fn minimal_config_fills_defaults_and_parses_inf_and_auto() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "minimal.toml",
        r#"
[grid]
domain = "torus"
dimension = 1
points_per_axis = 64

[constants]
k = "auto"
m = "inf"

[time]
start = 0.1
end = 0.5
samples = 9
"#,
    );
    let outdir = dir.path().join("out");
    let out = bin().args(["run"]).arg(&cfg).arg("--out").arg(&outdir).output().unwrap();
    assert!(run_ok(&out), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(outdir.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["scenario"]["m"], "inf");
    assert_eq!(report["scenario"]["k_was_auto"], true);
    // empty checks list: curves only, aggregate pass
    assert_eq!(report["checks"].as_array().unwrap().len(), 0);
    assert_eq!(report["pass"], true);
    assert!(outdir.join("curve_entropy.csv").exists());
}

#[test]
fn reports_are_byte_identical_for_same_config_and_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "det.toml",
        &small_torus_config("\"theorem-suite\", \"entropy-monotonicity\""),
    );
    let out1 = dir.path().join("out1");
    let out2 = dir.path().join("out2");
    for out in [&out1, &out2] {
        let o = bin()
            .args(["run"])
            .arg(&cfg)
            .arg("--out")
            .arg(out)
            .args(["--seed", "99", "--quiet"])
            .output()
            .unwrap();
        assert!(run_ok(&o), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    }
    for file in ["report.json", "curve_entropy.csv"] {
        let a = fs::read(out1.join(file)).unwrap();
        let b = fs::read(out2.join(file)).unwrap();
        assert_eq!(a, b, "{file} not byte-identical");
    }
    // the seed override lands in the report
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out1.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["seed"], 99);
}

#[test]
fn two_d_conformal_runs_are_also_deterministic() {
    // the 2-D torus path goes through the iterative solver
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "det2d.toml",
        r#"
[grid]
domain = "torus"
dimension = 2
points_per_axis = 16

[metric]
variant = "conformal"
amplitude = 0.05
freq = [1, 0]
decay = 1.0

[potential]
kind = "trig"
terms = [{ amplitude = 0.2, freq = [1, 0] }]
mode = "fixed-measure"

[constants]
k = "auto"

[time]
start = 0.1
end = 0.6
samples = 9

[initial]
kind = "trig-exp"
amplitude = 0.3

[family]
count = 4
seed = 3

[checks]
run = ["theorem-suite", "w-dissipation"]
pairs = [[0.0, 0.25]]
allowance = 2.0
"#,
    );
    let out1 = dir.path().join("out1");
    let out2 = dir.path().join("out2");
    for out in [&out1, &out2] {
        let o = bin()
            .args(["run"])
            .arg(&cfg)
            .arg("--out")
            .arg(out)
            .arg("--quiet")
            .output()
            .unwrap();
        assert!(run_ok(&o), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    }
    for file in ["report.json", "curve_entropy.csv"] {
        let a = fs::read(out1.join(file)).unwrap();
        let b = fs::read(out2.join(file)).unwrap();
        assert_eq!(a, b, "{file} not byte-identical");
    }
}

#[test]
fn csv_has_the_documented_columns() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "cols.toml", &small_torus_config(""));
    let outdir = dir.path().join("out");
    let out = bin().args(["run"]).arg(&cfg).arg("--out").arg(&outdir).output().unwrap();
    assert!(run_ok(&out));
    let csv = fs::read_to_string(outdir.join("curve_entropy.csv")).unwrap();
    let header = csv.lines().next().unwrap();
    assert_eq!(header, "t,H_K,dH,d2H,W_K,dW,rhs,fisher,hessian_integral");
    assert_eq!(csv.lines().count(), 12); // header + 11 samples
}

#[test]
fn failing_check_yields_exit_code_one() {
    let dir = tempfile::tempdir().unwrap();
    // the violating flow fails the super-flow margin check
    let cfg = write_config(
        dir.path(),
        "fail.toml",
        &small_torus_config("\"superflow-margin\"")
            .replace("amplitude = 0.3", "amplitude = 0.5")
            .replace("k = -0.3", "k = 0.0"),
    );
    let outdir = dir.path().join("out");
    let out = bin()
        .args(["run"])
        .arg(&cfg)
        .arg("--out")
        .arg(&outdir)
        .arg("--quiet")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(outdir.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["pass"], false);
}

#[test]
fn shipped_violating_config_detects_the_violation() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../..");
    let cfg = root.join("configs/violating_flow.toml");
    let dir = tempfile::tempdir().unwrap();
    let outdir = dir.path().join("out");
    let out = bin()
        .args(["run"])
        .arg(&cfg)
        .arg("--out")
        .arg(&outdir)
        .arg("--quiet")
        .output()
        .unwrap();
    assert!(run_ok(&out), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(outdir.join("report.json")).unwrap()).unwrap();
    let checks = report["checks"].as_array().unwrap();
    assert!(!checks.is_empty());
    for c in checks {
        assert_eq!(c["kind"], "contrapositive");
        assert_eq!(c["pass"], true, "check {c}");
        assert!(c["min_margin"].as_f64().unwrap() < 0.0);
    }
}

#[test]
fn study_requires_three_levels_and_fits_orders() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "study.toml", &small_torus_config("\"bochner-residual\""));
    let out = bin().args(["study"]).arg(&cfg).args(["--levels", "2"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));

    let outdir = dir.path().join("out");
    let out = bin()
        .args(["study"])
        .arg(&cfg)
        .args(["--levels", "3", "--quiet", "--out"])
        .arg(&outdir)
        .output()
        .unwrap();
    assert!(run_ok(&out), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(outdir.join("report.json")).unwrap()).unwrap();
    let conv = report["convergence"].as_array().unwrap();
    assert_eq!(conv.len(), 1);
    assert_eq!(conv[0]["target"], "bochner-residual");
    let order: f64 = conv[0]["observed_order"].as_str().unwrap().parse().unwrap();
    assert!((order - 2.0).abs() < 0.3, "order {order}");
    assert_eq!(conv[0]["rows"].as_array().unwrap().len(), 3);
}

#[test]
fn soliton_exactness_study_row_is_marked_exact() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "soliton.toml",
        r#"
[grid]
domain = "box"
dimension = 1
points_per_axis = 64
half_width = 8.0

[potential]
kind = "quadratic"
kappa = 1.0
normalized = true

[constants]
k = 1.0

[time]
start = 0.1
end = 0.5
samples = 9

[initial]
kind = "gaussian"
sigma = 0.9
normalize = true

[checks]
run = ["soliton-exactness"]
"#,
    );
    let outdir = dir.path().join("out");
    let out = bin()
        .args(["study"])
        .arg(&cfg)
        .args(["--levels", "3", "--quiet", "--out"])
        .arg(&outdir)
        .output()
        .unwrap();
    assert!(run_ok(&out), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(outdir.join("report.json")).unwrap()).unwrap();
    let conv = report["convergence"].as_array().unwrap();
    assert_eq!(conv[0]["observed_order"], "exact");
}

#[test]
fn list_catalog_names_every_check() {
    let out = bin().arg("list-catalog").output().unwrap();
    assert!(run_ok(&out));
    let text = String::from_utf8_lossy(&out.stdout);
    for name in ["theorem-suite", "harnack", "hmk-curve", "k-seam", "bochner-residual"] {
        assert!(text.contains(name), "catalog missing {name}");
    }
}
