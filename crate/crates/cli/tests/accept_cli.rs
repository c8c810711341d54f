//! Command-line contract: exit codes, precedence, headers, outputs.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const FIG2: &str = r#"{"hm": {"exp": 1}, "he": {"exp": 2}, "hz": {"exp": 1}}"#;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_secrecy-lab"));
    c.env_remove("SECRECY_LAB_SEED");
    c
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn config_line(text: &str) -> &str {
    text.lines().find_map(|l| l.strip_prefix("# config: ")).expect("config header")
}

#[test]
fn bounds_in_dominated_regime() {
    let dir = tempfile::tempdir().unwrap();
    let model = write(dir.path(), "m.json", FIG2);
    let o = run(bin().args(["bounds", "--pt", "10", "--pj", "1", "--samples", "200000", "--seed", "42"]).arg("--model").arg(&model));
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.starts_with("# "));
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "p,pt,pj,bound_kind,value_bits,ci,n_samples,seed");
    for row in &rows[1..] {
        let value: f64 = row.split(',').nth(4).unwrap().parse().unwrap();
        assert!(value.abs() < 0.02, "{row}");
    }
}

#[test]
fn config_errors_exit_2_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let model = write(dir.path(), "m.json", FIG2);
    let out = dir.path().join("out.csv");
    let o = run(bin().args(["bounds", "--pt", "-1"]).arg("--model").arg(&model).arg("--out").arg(&out));
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());

    let o = run(bin().args(["bounds", "--no-such-flag"]));
    assert_eq!(o.status.code(), Some(2));

    let bad = write(dir.path(), "bad.json", r#"{"hm": {"exp": -1}, "he": {"exp": 2}, "hz": {"exp": 1}}"#);
    let o = run(bin().arg("bounds").arg("--model").arg(&bad).arg("--out").arg(&out));
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());

    let o = run(bin().arg("bounds").arg("--out").arg(&out));
    assert_eq!(o.status.code(), Some(2), "missing model");

    let cfg = write(dir.path(), "c.json", r#"{"pt": 1, "colour": "blue"}"#);
    let o = run(bin().arg("bounds").arg("--model").arg(&model).arg("--config").arg(&cfg));
    assert_eq!(o.status.code(), Some(2), "unknown config field");

    let o = run(bin().args(["simulate", "--adversary", "sometimes"]).arg("--model").arg(&model).args(["--rate", "1"]));
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn runtime_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let point = write(dir.path(), "p.json", r#"{"hm": {"point": 1}, "he": {"point": 0}, "hz": {"point": 0}}"#);
    // log2(1 + 10) < 5: no single block can carry the group.
    let o = run(bin().args(["feedback", "--scheme", "plain_arq", "--rate", "5", "--pt", "10", "--samples", "4000"]).arg("--model").arg(&point));
    assert_eq!(o.status.code(), Some(1), "{}", String::from_utf8_lossy(&o.stderr));

    let model = write(dir.path(), "m.json", FIG2);
    let o = run(bin().args(["bounds", "--samples", "100", "--out", "/nonexistent-dir/x.csv"]).arg("--model").arg(&model));
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let model = write(dir.path(), "m.json", FIG2);
    let cfg = write(dir.path(), "c.json", r#"{"pt": 5, "pj": 2, "samples": 1000, "seed": 3}"#);
    let o = run(bin().arg("bounds").arg("--model").arg(&model).arg("--config").arg(&cfg).args(["--pt", "7"]));
    let text = stdout(&o);
    let c: serde_json::Value = serde_json::from_str(config_line(&text)).unwrap();
    assert_eq!(c["pt"], 7.0);
    assert_eq!(c["pj"], 2.0);
    assert_eq!(c["seed"], 3);

    // The environment seed sits below the file.
    let o = run(bin().arg("bounds").arg("--model").arg(&model).arg("--config").arg(&cfg).env("SECRECY_LAB_SEED", "9"));
    assert!(stdout(&o).contains("# seed: 3\n"));
    let o = run(bin().args(["bounds", "--samples", "1000"]).arg("--model").arg(&model).env("SECRECY_LAB_SEED", "9"));
    assert!(stdout(&o).contains("# seed: 9\n"));
}

#[test]
fn header_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let model = write(dir.path(), "m.json", FIG2);
    let first = stdout(&run(bin().args(["feedback", "--scheme", "mrc", "--samples", "8000", "--seed", "11"]).arg("--model").arg(&model)));
    let cfg = write(dir.path(), "c.json", config_line(&first));
    let again = stdout(&run(bin().arg("feedback").arg("--config").arg(&cfg)));
    assert_eq!(first, again);
}

#[test]
fn simulate_writes_one_event_per_block() {
    let dir = tempfile::tempdir().unwrap();
    let model = write(dir.path(), "m.json", FIG2);
    let events = dir.path().join("ev.jsonl");
    let o = run(bin()
        .args(["simulate", "--rate", "2", "--blocks", "500", "--adversary", "periodic:2"])
        .arg("--model")
        .arg(&model)
        .arg("--events")
        .arg(&events));
    assert!(o.status.success());
    let text = std::fs::read_to_string(&events).unwrap();
    assert_eq!(text.lines().count(), 500);
    let second: serde_json::Value = serde_json::from_str(text.lines().nth(1).unwrap()).unwrap();
    assert_eq!(second["phi"], 1);
    assert_eq!(second["leaked_info"], 0.0);
}

#[test]
fn help_documents_precedence() {
    let o = run(bin().arg("--help"));
    assert!(o.status.success());
    assert!(stdout(&o).contains("precedence"));
}

#[test]
fn figures_have_fixed_columns() {
    let o = run(bin().args(["figures", "--figure", "fig3", "--samples", "2000"]));
    assert!(o.status.success());
    let text = stdout(&o);
    let mut rows = text.lines().filter(|l| !l.starts_with('#'));
    assert_eq!(rows.next(), Some("x,series,value_bits,ci"));
    assert_eq!(rows.count(), 10);
}
