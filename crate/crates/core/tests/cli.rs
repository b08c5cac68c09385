use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use radtrans::io::pgrid::write_pgrid;
use radtrans::io::{run_experiment, RunOptions};
use radtrans::medium::GridField;

const GOLDEN_INTEGRAL_H: f64 = 6.509058462065335;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_radtrans"))
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn run(config: &Path, out: &Path, extra: &[&str]) -> (i32, String) {
    let o = bin()
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(extra)
        .output()
        .unwrap();
    (o.status.code().unwrap(), String::from_utf8_lossy(&o.stderr).into_owned())
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

#[test]
fn missing_config_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let (code, err) = run(&tmp.path().join("absent.json"), tmp.path(), &[]);
    assert_eq!(code, 2, "{err}");
}

#[test]
fn schema_errors_exit_2_with_the_line() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "bad.json",
        "{\n  \"geometry\": {\"dimension\": 2},\n  \"medium\": {\"sigma\": {\"constant\": 1}},\n  \"task\": {\"kind\": \"forward\", \"soruce\": 1}\n}",
    );
    let (code, err) = run(&cfg, &tmp.path().join("out"), &[]);
    assert_eq!(code, 2);
    assert!(err.contains("line 4"), "{err}");
}

#[test]
fn nonphysical_medium_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "neg.json",
        r#"{"geometry": {"dimension": 2}, "medium": {"sigma": {"constant": 0.2}, "sigma_s": {"constant": 0.5}},
            "task": {"kind": "selftest"}}"#,
    );
    let (code, err) = run(&cfg, &tmp.path().join("out"), &[]);
    assert_eq!(code, 2, "{err}");
}

#[test]
fn unconverged_solve_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "slow.json",
        r#"{"geometry": {"dimension": 2}, "medium": {"sigma": {"constant": 1.0}, "sigma_s": {"constant": 0.9}},
            "task": {"kind": "forward", "source": {"uniform": 1.0}, "grid_n": 16, "angles": 8, "tol": 1e-12, "max_orders": 2}}"#,
    );
    let (code, err) = run(&cfg, &tmp.path().join("out"), &[]);
    assert_eq!(code, 3, "{err}");
}

#[test]
fn selftest_exits_0() {
    let tmp = tempfile::tempdir().unwrap();
    let (code, err) = run(&configs().join("selftest.json"), tmp.path(), &[]);
    assert_eq!(code, 0, "{err}");
    let table = fs::read_to_string(tmp.path().join("selftest.csv")).unwrap();
    assert!(table.lines().count() > 10);
    assert!(!table.contains(",false"));
}

#[test]
fn smoke_forward_matches_the_golden_integral() {
    let tmp = tempfile::tempdir().unwrap();
    let report = run_experiment(
        &configs().join("smoke_forward.json"),
        &RunOptions {
            out: Some(tmp.path().to_path_buf()),
            ..Default::default()
        },
    )
    .unwrap();
    let got = report.summary["result"]["integral_h"].as_f64().unwrap();
    assert!((got - GOLDEN_INTEGRAL_H).abs() < 1e-10, "{got}");
    let h = radtrans::io::pgrid::read_pgrid(&tmp.path().join("H.pgrid")).unwrap();
    assert_eq!(h.dims(), &[32, 32]);
}

#[test]
fn outputs_are_byte_identical_across_runs_and_thread_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let cfg = configs().join("smoke_forward.json");
    assert_eq!(run(&cfg, &a, &["--threads", "1"]).0, 0);
    assert_eq!(run(&cfg, &b, &["--threads", "3"]).0, 0);
    let mut names: Vec<_> = fs::read_dir(&a)
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .filter(|n| n != "manifest.json")
        .collect();
    names.sort();
    assert_eq!(names.len(), 3);
    for n in names {
        assert_eq!(fs::read(a.join(&n)).unwrap(), fs::read(b.join(&n)).unwrap(), "{n:?}");
    }
    let manifest = |d: &Path| -> serde_json::Value {
        serde_json::from_slice(&fs::read(d.join("manifest.json")).unwrap()).unwrap()
    };
    assert_eq!(manifest(&a)["outputs"], manifest(&b)["outputs"]);
    assert_eq!(manifest(&a)["config"]["sha256"], manifest(&b)["config"]["sha256"]);
}

#[test]
fn seed_flag_overrides_the_config() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(run(&configs().join("selftest.json"), tmp.path(), &["--seed", "99"]).0, 0);
    let m: serde_json::Value = serde_json::from_slice(&fs::read(tmp.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["seed"], 99);
}

#[test]
fn pgrid_profiles_resolve_relative_to_the_config() {
    let tmp = tempfile::tempdir().unwrap();
    let grid = GridField::from_fn(vec![41, 41], vec![-1.0, 1.0, -1.0, 1.0], |x| 1.0 + 0.1 * x.x).unwrap();
    write_pgrid(&tmp.path().join("sigma.pgrid"), &grid).unwrap();
    let cfg = write(
        tmp.path(),
        "grid.json",
        r#"{"geometry": {"dimension": 2}, "medium": {"sigma": {"pgrid": "sigma.pgrid"}, "sigma_s": {"constant": 0.2}},
            "task": {"kind": "kernel", "pair": {"planar": {"phi": 3.0, "theta": 0.0}}, "lattice": 8}, "output": "res"}"#,
    );
    let report = run_experiment(&cfg, &RunOptions::default()).unwrap();
    assert_eq!(report.out, tmp.path().join("res"));
    assert!(tmp.path().join("res/alpha1.csv").is_file());

    let small = GridField::from_fn(vec![5, 5], vec![-0.5, 0.5, -1.0, 1.0], |_| 1.0).unwrap();
    write_pgrid(&tmp.path().join("sigma.pgrid"), &small).unwrap();
    let (code, err) = run(&cfg, &tmp.path().join("res2"), &[]);
    assert_eq!(code, 2, "{err}");
    assert!(err.contains("cover"), "{err}");
}
