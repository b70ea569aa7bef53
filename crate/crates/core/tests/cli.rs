//! End-to-end CLI checks: experiment runs, report comparison, snapshot
//! norms, grid caching, exit codes, and worker-count determinism.

use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_hardsphere")
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn base_config(out_dir: &Path, cache_dir: &Path, workers: usize) -> String {
    format!(
        r#"
output_dir = "{out}"
seed = 11
workers = {workers}

[grid]
r = 4.5
n_v = 6
n_angular = 14

[space]
dim = 1
n_x = 8
box_length = {l}

[solver]
dt = 0.1
scheme = "strang"
n_order = 4
monitor_every = 5

[force]
kind = "zero"

[init]
kind = "shell"
s0 = 0.0
amplitude = 1e-3

[experiment]
kind = "cauchy"
t_end = 1.0
"#,
        out = out_dir.display(),
        l = 2.0 * std::f64::consts::PI,
        workers = workers,
    )
    .replace("CACHE", &cache_dir.display().to_string())
}

fn run_cli(args: &[&str], cache: &Path) -> (i32, String, String) {
    let out = Command::new(bin())
        .args(args)
        .env("HARDSPHERE_CACHE_DIR", cache)
        .output()
        .expect("binary runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

#[test]
fn cauchy_zero_run_and_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("out");
    let cache = tmp.path().join("cache");
    let mut cfg_text = base_config(&out_dir, &cache, 1);
    // Zero initial data and zero force: the trace is identically zero.
    cfg_text = cfg_text.replace("kind = \"shell\"", "kind = \"zero\"");
    let cfg = write_config(tmp.path(), "run.toml", &cfg_text);
    let (code, stdout, stderr) = run_cli(&["run", cfg.to_str().unwrap()], &cache);
    assert_eq!(code, 0, "stdout: {stdout} stderr: {stderr}");
    assert!(out_dir.join("manifest.json").exists());
    assert!(out_dir.join("trace.csv").exists());
    assert!(out_dir.join("final.snap").exists());
    let trace = std::fs::read_to_string(out_dir.join("trace.csv")).unwrap();
    for line in trace.lines().skip(1) {
        let l2: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(l2, 0.0);
    }
    // Norm report of the final snapshot.
    let (code, stdout, _) = run_cli(
        &["norms", out_dir.join("final.snap").to_str().unwrap()],
        &cache,
    );
    assert_eq!(code, 0);
    assert!(stdout.contains("total"));
}

#[test]
fn validation_error_has_diagnostic_and_exit_code() {
    let tmp = tempfile::tempdir().unwrap();
    let cache = tmp.path().join("cache");
    let cfg_text = base_config(&tmp.path().join("out"), &cache, 1).replace("n_v = 6", "n_v = 7");
    let cfg = write_config(tmp.path(), "bad.toml", &cfg_text);
    let (code, _, stderr) = run_cli(&["run", cfg.to_str().unwrap()], &cache);
    assert_eq!(code, 2, "stderr: {stderr}");
    assert!(stderr.contains("velocity grid must be even"), "{stderr}");
}

#[test]
fn budget_overrun_exits_with_code_four() {
    let tmp = tempfile::tempdir().unwrap();
    let cache = tmp.path().join("cache");
    let mut cfg_text = base_config(&tmp.path().join("out"), &cache, 1);
    cfg_text.push_str("\n[budget]\nmax_quadrature = 10\nmax_dense_nodes = 4096\n");
    let cfg = write_config(tmp.path(), "budget.toml", &cfg_text);
    let (code, _, stderr) = run_cli(&["run", cfg.to_str().unwrap()], &cache);
    assert_eq!(code, 4, "stderr: {stderr}");
}

#[test]
fn cache_grid_subcommand_writes_cache() {
    let tmp = tempfile::tempdir().unwrap();
    let cache = tmp.path().join("cache");
    let cfg = write_config(
        tmp.path(),
        "cache.toml",
        &base_config(&tmp.path().join("out"), &cache, 1),
    );
    let (code, stdout, stderr) = run_cli(&["cache-grid", cfg.to_str().unwrap()], &cache);
    assert_eq!(code, 0, "{stderr}");
    let path = PathBuf::from(stdout.trim());
    assert!(path.exists(), "cache file not written: {stdout}");
}

#[test]
fn reports_identical_across_worker_counts() {
    // One versus many workers: all artifacts except the manifest (which
    // carries wall-clock timings) must be byte-identical.
    let tmp = tempfile::tempdir().unwrap();
    let cache = tmp.path().join("cache");
    let out1 = tmp.path().join("w1");
    let out8 = tmp.path().join("w8");
    let cfg1 = write_config(tmp.path(), "w1.toml", &base_config(&out1, &cache, 1));
    let cfg8 = write_config(
        tmp.path(),
        "w8.toml",
        &base_config(&out8, &cache, 8).replace("workers = 8", "workers = 8"),
    );
    let (code1, _, err1) = run_cli(&["run", cfg1.to_str().unwrap()], &cache);
    assert_eq!(code1, 0, "{err1}");
    let (code8, _, err8) = run_cli(&["run", cfg8.to_str().unwrap()], &cache);
    assert_eq!(code8, 0, "{err8}");
    for name in ["trace.csv", "final.snap"] {
        let a = std::fs::read(out1.join(name)).unwrap();
        let b = std::fs::read(out8.join(name)).unwrap();
        assert_eq!(a, b, "artifact {name} differs across worker counts");
    }
    // cauchy.json embeds the config hash, which includes the worker count;
    // compare the report bodies only.
    let ja: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out1.join("cauchy.json")).unwrap()).unwrap();
    let jb: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out8.join("cauchy.json")).unwrap()).unwrap();
    assert_eq!(ja["report"], jb["report"]);
}

#[test]
fn compare_subcommand_matches_and_rejects() {
    let tmp = tempfile::tempdir().unwrap();
    let cache = tmp.path().join("cache");
    let a = tmp.path().join("a.json");
    std::fs::write(&a, r#"{"config_hash":"h","report":{"v":1.0}}"#).unwrap();
    let b = tmp.path().join("b.json");
    std::fs::write(&b, r#"{"config_hash":"h","report":{"v":1.0000001}}"#).unwrap();
    let (code, _, _) = run_cli(
        &["compare", a.to_str().unwrap(), a.to_str().unwrap()],
        &cache,
    );
    assert_eq!(code, 0);
    let (code, _, _) = run_cli(
        &["compare", a.to_str().unwrap(), b.to_str().unwrap()],
        &cache,
    );
    assert_eq!(code, 3, "loose values must fail the default tolerance");
    let (code, _, _) = run_cli(
        &[
            "compare",
            a.to_str().unwrap(),
            b.to_str().unwrap(),
            "--tol",
            "1e-3",
        ],
        &cache,
    );
    assert_eq!(code, 0);
    // Different schema: exit 3 with a schema diagnostic.
    let c = tmp.path().join("c.json");
    std::fs::write(&c, r#"{"config_hash":"h","report":{"other":2.0}}"#).unwrap();
    let (code, _, stderr) = run_cli(
        &["compare", a.to_str().unwrap(), c.to_str().unwrap()],
        &cache,
    );
    assert_eq!(code, 3);
    assert!(stderr.contains("schema"), "{stderr}");
}
