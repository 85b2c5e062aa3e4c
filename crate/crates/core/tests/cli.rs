use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn wcreg(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wcreg"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn files(dir: &Path) -> Vec<String> {
    let mut v: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    v.sort();
    v
}

#[test]
fn solve_writes_three_files_and_diagnose_agrees() {
    let tmp = tempfile::tempdir().unwrap();
    let o = wcreg(&["solve", "--out", "run"], tmp.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(
        files(&tmp.path().join("run")),
        ["reconstruction.csv", "summary.json", "trace.csv"]
    );

    let summary: serde_json::Value =
        serde_json::from_slice(&fs::read(tmp.path().join("run/summary.json")).unwrap()).unwrap();
    assert_eq!(summary["command"], "solve");

    fs::write(tmp.path().join("d.toml"), "[diagnose]\ntrace = \"run\"\n").unwrap();
    let o = wcreg(&["diagnose", "--config", "d.toml", "--out", "diag"], tmp.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let diag: serde_json::Value =
        serde_json::from_slice(&fs::read(tmp.path().join("diag/diagnosis.json")).unwrap()).unwrap();
    assert_eq!(diag["pass"], true);
}

#[test]
fn doctored_trace_fails_diagnosis_with_exit_4() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(wcreg(&["solve", "--out", "run"], tmp.path()).status.code(), Some(0));
    let path = tmp.path().join("run/trace.csv");
    let text = fs::read_to_string(&path).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let col = lines[0].split(',').position(|h| h == "descent_margin").unwrap();
    let mut cells: Vec<String> = lines[10].split(',').map(String::from).collect();
    cells[col] = "-1.0e0".into();
    lines[10] = cells.join(",");
    fs::write(&path, lines.join("\n") + "\n").unwrap();

    fs::write(tmp.path().join("d.toml"), "[diagnose]\ntrace = \"run\"\n").unwrap();
    let o = wcreg(&["diagnose", "--config", "d.toml", "--out", "diag"], tmp.path());
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
    let diag: serde_json::Value =
        serde_json::from_slice(&fs::read(tmp.path().join("diag/diagnosis.json")).unwrap()).unwrap();
    assert_eq!(diag["pass"], false);
}

#[test]
fn bad_steps_name_every_violated_constraint() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("c.toml"), "[solver]\ntau = 100.0\nsigma = 1.0\n").unwrap();
    let o = wcreg(&["solve", "--config", "c.toml", "--out", "run"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    let e = stderr(&o);
    assert!(e.contains("tau*sigma*||A||^2 < 1"), "{e}");
    assert!(e.contains("tau*rho < 1"), "{e}");
    assert!(e.contains("mu*sigma > 3"), "{e}");
}

#[test]
fn config_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("c.toml"), "seed = 1\n[solver]\nalpah = 0.5\n").unwrap();
    let o = wcreg(&["solve", "--config", "c.toml"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));

    let o = wcreg(&["regpath", "--override-constraints"], tmp.path());
    assert_eq!(o.status.code(), Some(2));

    let o = wcreg(&["diagnose"], tmp.path());
    assert_eq!(o.status.code(), Some(2));

    fs::write(tmp.path().join("r.toml"), "[regpath]\nrule = \"constant\"\n").unwrap();
    let o = wcreg(&["regpath", "--config", "r.toml"], tmp.path());
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn missing_config_file_is_reported() {
    let tmp = tempfile::tempdir().unwrap();
    let o = wcreg(&["solve", "--config", "nope.toml"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("nope.toml"));
}

#[test]
fn override_runs_outside_the_constraints_and_skips_certificates() {
    let tmp = tempfile::tempdir().unwrap();
    // mu*sigma = 2 breaks the dual condition; the run itself is stable
    fs::write(
        tmp.path().join("c.toml"),
        "[solver]\ntau = 0.005\nsigma = 100.0\nmax_iters = 200\n",
    )
    .unwrap();
    let o = wcreg(&["solve", "--config", "c.toml", "--out", "run"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    let o = wcreg(
        &["solve", "--config", "c.toml", "--out", "run", "--override-constraints"],
        tmp.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let s: serde_json::Value = serde_json::from_slice(&fs::read(tmp.path().join("run/summary.json")).unwrap()).unwrap();
    assert_eq!(s["skipped_certificates"][0]["name"], "min_residual");
}

#[test]
fn divergence_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(
        tmp.path().join("c.toml"),
        "[solver]\ntau = 0.5\nsigma = 100.0\nmax_iters = 50\n",
    )
    .unwrap();
    let o = wcreg(
        &["solve", "--config", "c.toml", "--out", "run", "--override-constraints"],
        tmp.path(),
    );
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("diverged"));
}

#[test]
fn phantom_and_counterexample_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(wcreg(&["phantom", "--out", "ph"], tmp.path()).status.code(), Some(0));
    assert_eq!(
        files(&tmp.path().join("ph")),
        ["phantom.bin", "phantom.json", "phantom.pgm"]
    );
    let pgm = fs::read(tmp.path().join("ph/phantom.pgm")).unwrap();
    assert!(pgm.starts_with(b"P5\n64 64\n255\n"));
    assert_eq!(pgm.len(), b"P5\n64 64\n255\n".len() + 64 * 64);

    let o = wcreg(&["counterexample", "--out", "ce"], tmp.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(
        files(&tmp.path().join("ce")),
        [
            "bounds.csv",
            "critical_points.csv",
            "stability_control.csv",
            "summary.json"
        ]
    );
}

#[test]
fn seed_flag_changes_the_data() {
    let tmp = tempfile::tempdir().unwrap();
    for (dir, seed) in [("a", "1"), ("b", "1"), ("c", "2")] {
        assert_eq!(
            wcreg(&["solve", "--out", dir, "--seed", seed], tmp.path())
                .status
                .code(),
            Some(0)
        );
    }
    let read = |d: &str| fs::read(tmp.path().join(d).join("reconstruction.csv")).unwrap();
    assert_eq!(read("a"), read("b"));
    assert_ne!(read("a"), read("c"));
}
