use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn malab(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_malab"))
        .args(args)
        .current_dir(dir)
        .env_remove("MALAB_TOLERANCE_FILE")
        .env("RUST_LOG", "warn")
        .output()
        .expect("spawn malab")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn euclidean_defaults_pass() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.txt");
    let spectra = dir.path().join("spectra.tsv");
    let phi = dir.path().join("phi.tsv");
    let o = malab(
        &[
            "--model",
            "euclidean(2)",
            "--out",
            out.to_str().unwrap(),
            "--export-spectra",
            spectra.to_str().unwrap(),
            "--export-phi",
            phi.to_str().unwrap(),
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let report = fs::read_to_string(&out).unwrap();
    for suite in ["psh", "ma", "foliation", "deformation", "catalog"] {
        assert!(report.contains(&format!("suite.{suite}.status = pass")), "{suite}");
    }
    assert!(report.ends_with("overall = pass\n"));
    assert!(fs::read_to_string(&spectra).unwrap().lines().count() >= 400);
    assert!(fs::read_to_string(&phi).unwrap().contains("fibre-twist"));
}

#[test]
fn log_control_on_sphere_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = malab(&["--model", "sphere(2)", "--suite", "ma", "--ma-kind", "log_tau"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    let report = stdout(&o);
    assert!(report.contains("suite.ma.status = fail"));
    assert!(report.contains("overall = fail"));
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["--model", "torus(2)"][..],
        &["--model", "euclidean(2)", "--suite", "structure"],
        &["--model", "euclidean(2)", "--suite", "nope"],
        &["--model", "euclidean(2)", "--tol", "nope=1"],
        &["--model", "euclidean(2)", "--samples", "0"],
        &["--model", "euclidean(2)", "--h", "-1"],
        &["--model", "euclidean(2)", "--bogus"],
        &[],
    ] {
        assert_eq!(malab(args, dir.path()).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn reports_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["--model", "sphere(2)", "--samples", "8", "--seed", "7"];
    let a = malab(&args, dir.path());
    let b = malab(&args, dir.path());
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(stdout(&a), stdout(&b));
    let c = malab(&["--model", "sphere(2)", "--samples", "8", "--seed", "8"], dir.path());
    assert_ne!(stdout(&a), stdout(&c));
}

#[test]
fn tolerance_file_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("malab-tolerances.toml"), "[ma]\ndet_ratio = 1e-30\n").unwrap();
    let strict = malab(&["--model", "sphere(2)", "--suite", "ma", "--samples", "5"], dir.path());
    assert!(stdout(&strict).contains("tolerance.ma.det_ratio = 1e-30"));
    assert_eq!(strict.status.code(), Some(1));
    let relaxed =
        malab(&["--model", "sphere(2)", "--suite", "ma", "--samples", "5", "--tol", "ma.det_ratio=1e-6"], dir.path());
    assert_eq!(relaxed.status.code(), Some(0));

    let missing = Command::new(env!("CARGO_BIN_EXE_malab"))
        .args(["--model", "sphere(2)"])
        .current_dir(dir.path())
        .env("MALAB_TOLERANCE_FILE", dir.path().join("absent.toml"))
        .output()
        .unwrap();
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn traces_export() {
    let dir = tempfile::tempdir().unwrap();
    let traces = dir.path().join("traces.tsv");
    let o = malab(
        &[
            "--model",
            "sphere(2)",
            "--suite",
            "foliation",
            "--samples",
            "4",
            "--export-traces",
            traces.to_str().unwrap(),
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0));
    let text = fs::read_to_string(&traces).unwrap();
    assert!(text.lines().all(|l| l.starts_with("foliation\t")));
    assert!(text.lines().count() > 100);
}
