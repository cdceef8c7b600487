use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const VACUUM: &str = r#"
regime = "vacuum"
[potential]
kind = "harmonic"
k = 1.0
[grid]
q_min = -10.0
q_max = 10.0
n = 2001
[vacuum]
modes = 3
"#;

const SPIN: &str = r#"
regime = "spin"
[spin]
u = [[0.0, 1.0, 0.5], [1.0, 0.0, 0.3], [0.5, 0.3, 0.0]]
dt = 0.01
steps = 50
"#;

const FREE: &str = r#"
regime = "schrodinger"
[potential]
kind = "box"
[grid]
q_min = -15.0
q_max = 15.0
n = 601
[schrodinger]
center = 0.0
sigma = 1.0
dt = 0.01
steps = 20
"#;

fn varq(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_varq"));
    cmd.args(args);
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn report(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

#[test]
fn vacuum_run_reports_oscillator_levels() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "vac.toml", VACUUM);
    let out = tmp.path().join("out");
    let o = varq(&["run", &cfg, "--out", out.to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&out);
    assert_eq!(r["schema"], "varq-report/1");
    for (k, want) in [("w_0", 0.5), ("w_1", 1.5), ("w_2", 2.5)] {
        let w = r["body"]["scalars"][k].as_f64().unwrap();
        assert!((w - want).abs() < 1e-4, "{k} = {w}");
    }
    let csv = fs::read_to_string(out.join("spectrum.csv")).unwrap();
    assert!(csv.starts_with("r,w\n"));
    assert_eq!(csv.lines().count(), 4);
}

#[test]
fn malformed_config_names_the_key() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "bad.toml", &VACUUM.replace("modes = 3", "modes = 3\nwidth = 2.0"));
    let o = varq(&["check", &cfg], &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("width"));
    let cfg = write(tmp.path(), "bad2.toml", &VACUUM.replace("n = 2001", "n = 1"));
    let o = varq(&["run", &cfg, "--out", tmp.path().join("x").to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("grid.n"));
    let good = write(tmp.path(), "good.toml", VACUUM);
    assert_eq!(varq(&["check", &good], &[]).status.code(), Some(0));
}

#[test]
fn repeated_runs_have_identical_bodies() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "spin.toml", SPIN);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for d in [&a, &b] {
        assert_eq!(varq(&["run", &cfg, "--out", d.to_str().unwrap(), "--seed", "9"], &[]).status.code(), Some(0));
    }
    assert_eq!(report(&a)["body"], report(&b)["body"]);
    let pa = fs::read_to_string(a.join("populations.csv")).unwrap();
    assert_eq!(pa, fs::read_to_string(b.join("populations.csv")).unwrap());
    assert!(pa.starts_with("t,p_1,p_2,p_3\n"));
    assert_eq!(report(&a)["body"]["seed"], 9);

    let c = tmp.path().join("c");
    varq(&["run", &cfg, "--out", c.to_str().unwrap(), "--seed", "10"], &[]);
    assert_ne!(pa, fs::read_to_string(c.join("populations.csv")).unwrap());
}

#[test]
fn failing_invariant_exits_four_unless_waived() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "free.toml", FREE);
    let out = tmp.path().join("o");
    let o = varq(&["run", &cfg, "--out", out.to_str().unwrap(), "--tol-scale", "1e-30"], &[]);
    assert_eq!(o.status.code(), Some(4));
    assert_eq!(report(&out)["body"]["status"], "invariant-failed");
    let waived = write(tmp.path(), "w.toml", &format!("waive_invariants = true\n{FREE}"));
    let o = varq(&["run", &waived, "--out", out.to_str().unwrap(), "--tol-scale", "1e-30"], &[]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(report(&out)["body"]["status"], "waived");
}

#[test]
fn escaping_packet_is_a_numerical_failure() {
    let tmp = tempfile::tempdir().unwrap();
    let text = FREE.replace("q_min = -15.0", "q_min = -4.0").replace("q_max = 15.0", "q_max = 4.0").replace(
        "steps = 20",
        "steps = 400\np0 = 5.0",
    );
    let cfg = write(tmp.path(), "esc.toml", &text);
    let o = varq(&["run", &cfg, "--out", tmp.path().join("o").to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn sweep_runs_every_config() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("cfg");
    fs::create_dir(&dir).unwrap();
    write(&dir, "spin.toml", SPIN);
    write(&dir, "free.toml", FREE);
    write(&dir, "notes.txt", "ignored");
    let out = tmp.path().join("out");
    let o = varq(&["sweep", dir.to_str().unwrap(), "--out", out.to_str().unwrap()], &[("VARQ_THREADS", "2")]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    assert!(out.join("spin/report.json").exists());
    assert!(out.join("free/moments.csv").exists());
    let o = varq(&["sweep", dir.to_str().unwrap(), "--out", out.to_str().unwrap()], &[("VARQ_THREADS", "zero")]);
    assert_eq!(o.status.code(), Some(2));
}
