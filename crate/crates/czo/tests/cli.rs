use std::fs;
use std::path::Path;

use czo::run_cli;

fn run(dir: &Path, args: &[&str]) -> i32 {
    let mut all = vec!["czo".to_string()];
    all.extend(args.iter().map(|s| s.to_string()));
    all.extend(["--out".to_string(), dir.display().to_string()]);
    run_cli(all)
}

/// CSV body without the comment lines.
fn body(path: &Path) -> String {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn registry_misses_and_bad_config_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), &["apply", "kernel=nonexistent"]), 2);
    assert!(fs::read_to_string(dir.path().join("manifest.txt")).unwrap().contains("config-error"));
    assert_eq!(run(dir.path(), &["partition", "curve=bogus"]), 2);
    assert_eq!(run(dir.path(), &["metric", "colour=red"]), 2);
    assert_eq!(run(dir.path(), &["decompose", "lambda=fast"]), 2);
    assert_eq!(run(dir.path(), &["no-such-experiment"]), 2);
    // λ below the root average is rejected by the decomposition
    assert_eq!(run(dir.path(), &["decompose", "lambda=0.1"]), 2);
}

#[test]
fn failed_check_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), &["hormander", "box=-4..4", "grid=64"]), 1);
    let text = fs::read_to_string(dir.path().join("hormander.csv")).unwrap();
    assert!(text.contains("relative_error"));
}

#[test]
fn config_file_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# worked example\nfunction = indicator\nsupport = 0..1\nlambda = 0.9\n").unwrap();
    let code = run(dir.path(), &["decompose", "--config", cfg.to_str().unwrap(), "lambda=0.3"]);
    assert_eq!(code, 0);
    assert_eq!(body(&dir.path().join("cubes.csv")), "lo,hi,depth,abs_average\n0.0,2.0,1,0.5");
    let manifest = fs::read_to_string(dir.path().join("manifest.txt")).unwrap();
    assert!(manifest.contains("lambda = 0.3"));
    assert!(manifest.contains("status = pass"));
}

#[test]
fn examples_from_the_registry_pass() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), &["metric-equivalence", "curve=two-lines", "pairs=10000", "seed=7"]), 0);
    assert_eq!(run(dir.path(), &["recover", "curve=two-lines", "b=1,sin"]), 0);
    assert_eq!(run(dir.path(), &["metric", "curve=diagonal", "x=0,1", "y=1,1"]), 0);
    assert_eq!(
        body(&dir.path().join("metric.csv")).lines().nth(2).unwrap(),
        "1.0,1.0,0.0,0.0,0.0,0"
    );
}

#[test]
fn results_do_not_depend_on_threads_or_repetition() {
    let runs: Vec<_> = [1, 4, 4]
        .iter()
        .map(|t| {
            let dir = tempfile::tempdir().unwrap();
            let threads = t.to_string();
            assert_eq!(run(dir.path(), &["weaktype", "--threads", &threads, "n=128"]), 0);
            assert_eq!(run(dir.path(), &["qtheta", "--threads", &threads, "cubes=2", "mc=20000"]), 0);
            let w = body(&dir.path().join("weaktype.csv"));
            let q = fs::read_to_string(dir.path().join("qtheta.csv")).unwrap();
            (w, q)
        })
        .collect();
    assert_eq!(runs[0], runs[1]);
    assert_eq!(runs[1], runs[2]);
}

#[test]
fn grid_files_round_trip_through_apply() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), &["apply", "n=256", "epsilon=0.5,0.25"]), 0);
    let first = dir.path().join("apply_output.grid");
    assert!(dir.path().join("convergence.csv").exists());
    let g = czo::output::read_grid::<1>(&first).unwrap();
    assert_eq!(g.geometry.cells_per_axis, 256);

    let input = dir.path().join("input.grid");
    fs::copy(&first, &input).unwrap();
    let other = tempfile::tempdir().unwrap();
    let spec = format!("function=csv:{}", input.display());
    assert_eq!(run(other.path(), &["apply", "n=256", "epsilon=0.5", &spec]), 0);
    let spec = format!("function=csv:{}", dir.path().join("missing.grid").display());
    assert_eq!(run(other.path(), &["apply", &spec]), 2);
}
