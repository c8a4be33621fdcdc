use std::path::Path;
use std::process::{Command, Output};

fn dmsol(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dmsol"))
        .args(args)
        .current_dir(cwd)
        .env_remove("DMSOL_OUT_DIR")
        .env("SOURCE_DATE_EPOCH", "0")
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

const QUICK: &str = "d_av = 1.0\nlambda = 3.0\nmeasure = \"dirac\"\n\n[solver]\nbox_radius = 30\nrestarts = 0\n";

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(code(&dmsol(&["--help"], d)), 0);
    assert_eq!(code(&dmsol(&["--version"], d)), 0);
    assert_eq!(code(&dmsol(&["frobnicate"], d)), 2);
    assert_eq!(code(&dmsol(&["solve", "--no-such-flag"], d)), 2);
    assert_eq!(code(&dmsol(&["decay"], d)), 2);
    std::fs::write(d.join("bad.toml"), "lambda = 1.0\nwat = 3\n").unwrap();
    let o = dmsol(&["solve", "-c", "bad.toml"], d);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
    assert_eq!(code(&dmsol(&["solve", "-c", "missing.toml"], d)), 2);
    assert_eq!(code(&dmsol(&["decay", "nope.txt", "--omega", "-1"], d)), 2);
    assert_eq!(code(&dmsol(&["replay", "nowhere"], d)), 2);
}

#[test]
fn solve_then_decay_and_replay() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("run.toml"), QUICK).unwrap();
    let o = dmsol(&["solve", "-c", "run.toml", "-o", "gs"], d);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["field.txt", "field.bin", "solve.json", "manifest.json"] {
        assert!(d.join("gs").join(f).is_file(), "{f}");
    }
    let text = dmsol::io::read_field(&d.join("gs/field.txt")).unwrap();
    let bin = dmsol::io::read_field(&d.join("gs/field.bin")).unwrap();
    assert!(dmsol::io::same_bits(&text, &bin));
    assert!((bin.norm_sq() - 3.0).abs() < 1e-12);

    let o = dmsol(&["decay", "-c", "run.toml", "gs", "-o", "dec"], d);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(d.join("dec/decay.json").is_file() && d.join("dec/tail_000.csv").is_file());

    let o = dmsol(&["replay", "gs", "-o", "again"], d);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(std::fs::read(d.join("gs/field.bin")).unwrap(), std::fs::read(d.join("again/field.bin")).unwrap());
}

#[test]
fn verify_writes_reports_to_env_dir() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let o = Command::new(env!("CARGO_BIN_EXE_dmsol"))
        .args(["verify", "--suite", "identities", "--trials", "2", "--seed", "5"])
        .current_dir(d)
        .env("DMSOL_OUT_DIR", "from-env")
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let out = d.join("from-env");
    assert!(out.join("manifest.json").is_file());
    let manifest = dmsol::manifest::read_manifest(&out.join("manifest.json")).unwrap();
    assert_eq!(manifest.command, "verify");
    assert!(std::fs::read_dir(&out).unwrap().count() >= 2);
}
