use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_immersoflow"))
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(args: &[&str]) -> Output {
    bin().env_remove("IMMERSOFLOW_THREADS").args(args).output().unwrap()
}

fn small_case(sub: &str, out: &Path, extra: &[&str]) -> Output {
    let cfg = configs().join("quarter_annulus.json");
    let mut args = vec![sub, "-c", cfg.to_str().unwrap(), "-o", out.to_str().unwrap(), "--set", "study.meshes=[11,15]"];
    args.extend_from_slice(extra);
    run(&args)
}

#[test]
fn help_lists_every_flag() {
    let o = run(&["run", "--help"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    for flag in ["--config", "--set", "--out", "--threads", "--seed", "--verbose"] {
        assert!(text.contains(flag), "missing {flag}");
    }
    let top = String::from_utf8(run(&["--help"]).stdout).unwrap();
    for sub in ["run", "converge", "sweep", "infsup", "quadcheck", "export"] {
        assert!(top.contains(sub), "missing {sub}");
    }
}

#[test]
fn usage_errors_exit_with_one() {
    let cfg = configs().join("quarter_annulus.json");
    let cfg = cfg.to_str().unwrap();
    assert_eq!(run(&["run", "--bogus"]).status.code(), Some(1));
    assert_eq!(run(&["run", "-c", cfg, "--set", "nonsense=1"]).status.code(), Some(1));
    assert_eq!(run(&["run", "-c", cfg, "--set", "degree=7"]).status.code(), Some(1));
    assert_eq!(run(&["run", "-c", "/nonexistent.json"]).status.code(), Some(1));
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"name\": 3}").unwrap();
    let o = run(&["run", "-c", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!o.stderr.is_empty());
    assert_eq!(run(&["sweep", "-c", cfg, "--param", "zeta", "--values", "1"]).status.code(), Some(1));
}

#[test]
fn non_converged_picard_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = small_case("run", dir.path(), &["--set", "solver.max_iterations=1", "--set", "solver.tolerance=1e-14"]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn run_writes_tables_and_rates() {
    let dir = tempfile::tempdir().unwrap();
    let o = small_case("run", dir.path(), &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rates: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(rates["velocity_l2"]["least_squares"].as_f64().unwrap() > 1.5);
    for f in ["convergence.csv", "summary.json", "timings.json", "picard_11.csv", "picard_15.csv"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let csv = std::fs::read_to_string(dir.path().join("convergence.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
}

#[test]
fn quadcheck_and_infsup_subcommands() {
    let dir = tempfile::tempdir().unwrap();
    let o = small_case("quadcheck", dir.path(), &["--set", "immersion.rho_max=3"]);
    assert!(o.status.success());
    let q: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(q["rows"].as_array().unwrap().len(), 3);
    let o = small_case("infsup", dir.path(), &["--set", "study.meshes=[11]"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.path().join("infsup.csv").exists());
}

#[test]
fn outputs_do_not_depend_on_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let mut snapshots = Vec::new();
    for threads in ["1", "8"] {
        let out = dir.path().join(threads);
        let o = small_case("export", &out, &["--threads", threads, "--samples", "2"]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(&out)
            .unwrap()
            .map(|e| e.unwrap().path())
            .filter(|p| p.file_name().unwrap() != "timings.json")
            .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
            .collect();
        files.sort();
        snapshots.push((files, o.stdout));
    }
    assert!(snapshots[0].0.len() >= 4);
    assert_eq!(snapshots[0], snapshots[1]);
}
