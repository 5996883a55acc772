use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lattice-imaging"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

const CONFIG: &str = r#"
name = "pair"

[lattice]
sites = 4
spacing = 0.6

[optics]
numerical_aperture = 0.5

[state]
kind = "dimer"

[[protocols]]
kind = "coherent"

[[protocols]]
kind = "centroid-amplitude"
"#;

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("scenario.toml");
    fs::write(&path, text).unwrap();
    path.display().to_string()
}

#[test]
fn lists_presets() {
    let out = run(&["list-presets"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["fig2", "fig3", "fig4"] {
        assert!(text.lines().any(|l| l.starts_with(name)), "{text}");
    }
}

#[test]
fn runs_a_config_with_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CONFIG);
    let out = run(&["--samples", "33", "--normalization", "raw", "run", &cfg]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let warnings = String::from_utf8(out.stderr).unwrap();
    assert!(warnings.contains("analysis report skipped"), "{warnings}");
    let csv = fs::read_to_string(dir.path().join("out/pair_coherent.csv")).unwrap();
    assert_eq!(csv.lines().count(), 34);
    let meta = fs::read_to_string(dir.path().join("out/pair_coherent.meta.json")).unwrap();
    assert!(meta.contains("\"normalization\": \"raw\""));
    let echo = fs::read_to_string(dir.path().join("out/pair.scenario.toml")).unwrap();
    assert!(echo.contains("samples = 33"));
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &CONFIG.replace("sites = 4", "sites = 5"));
    let out = run(&["run", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("line 11") && err.contains("[state]"), "{err}");

    let cfg = write_config(dir.path(), "name = \n");
    assert_eq!(run(&["run", &cfg]).status.code(), Some(2));
    assert_eq!(run(&["preset", "fig7"]).status.code(), Some(2));
}

#[test]
fn nonconvergence_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        &CONFIG.replace("centroid-amplitude", "centroid-intensity"),
    );
    let out = run(&["--panels", "16", "run", &cfg]);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("centroid-intensity"), "{err}");
}

#[test]
fn io_failures_exit_with_four() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("absent.toml");
    assert_eq!(
        run(&["run", &missing.display().to_string()]).status.code(),
        Some(4)
    );
    let blocker = dir.path().join("blocker");
    fs::write(&blocker, "").unwrap();
    let out = run(&["preset", "fig2", "--out", &blocker.display().to_string()]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn preset_reruns_are_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for dir in [&a, &b] {
        let out = run(&["preset", "fig3", "--out", &dir.path().display().to_string()]);
        assert!(out.status.success());
    }
    let mut names: Vec<_> = fs::read_dir(a.path())
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    assert_eq!(names.len(), 3 * (2 + 3 * 2));
    for name in names {
        let left = fs::read(a.path().join(&name)).unwrap();
        let right = fs::read(b.path().join(&name)).unwrap();
        assert_eq!(left, right, "{name:?}");
    }
}
