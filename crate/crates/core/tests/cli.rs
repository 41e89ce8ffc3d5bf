use std::path::Path;
use std::process::{Command, Output};

fn ssd(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ssd"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn ok(out: &Output) {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn simulate_writes_one_line_per_sample() {
    let dir = tempfile::tempdir().unwrap();
    ok(&ssd(&["simulate", "--experiment", "1", "--count", "10", "--seed", "7", "--out", "d.jsonl"], dir.path()));
    let text = std::fs::read_to_string(dir.path().join("d.jsonl")).unwrap();
    assert_eq!(text.lines().count(), 10);
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let run = |tag: &str| {
        let data = format!("d{tag}.jsonl");
        let ckpt = format!("m{tag}.ckpt");
        let metrics = format!("e{tag}.json");
        ok(&ssd(&["simulate", "--experiment", "3", "--count", "6", "--seed", "5", "--seq-len", "120", "--out", &data], dir.path()));
        ok(&ssd(
            &["train", "--experiment", "3", "--model", "bgru", "--width", "6", "--epochs", "2", "--seed", "5", "--data", &data, "--crop", "50", "--clip-norm", "1", "--out", &ckpt],
            dir.path(),
        ));
        ok(&ssd(&["eval", "--checkpoint", &ckpt, "--data", &data, "--out", &metrics, "--seed", "5"], dir.path()));
        [data, ckpt, metrics].map(|f| std::fs::read(dir.path().join(f)).unwrap())
    };
    let (a, b) = (run("1"), run("2"));
    for (x, y) in a.iter().zip(&b) {
        assert!(!x.is_empty());
        assert_eq!(x, y);
    }
}

#[test]
fn eval_class_mismatch_names_both_files() {
    let dir = tempfile::tempdir().unwrap();
    ok(&ssd(&["simulate", "--experiment", "2", "--count", "2", "--seq-len", "40", "--out", "two.jsonl"], dir.path()));
    ok(&ssd(&["simulate", "--experiment", "1", "--count", "2", "--seq-len", "40", "--out", "one.jsonl"], dir.path()));
    ok(&ssd(&["train", "--experiment", "2", "--width", "4", "--epochs", "1", "--data", "two.jsonl", "--out", "m.ckpt"], dir.path()));
    let out = ssd(&["eval", "--checkpoint", "m.ckpt", "--data", "one.jsonl"], dir.path());
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("m.ckpt") && err.contains("one.jsonl"), "{err}");
}

#[test]
fn unknown_flag_prints_usage() {
    let dir = tempfile::tempdir().unwrap();
    let out = ssd(&["simulate", "--experiment", "1", "--bogus"], dir.path());
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn gradcheck_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = ssd(&["gradcheck", "--seeds", "3", "--seed", "1"], dir.path());
    ok(&out);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.lines().count() >= 20 && !text.contains("FAIL"));
}

#[test]
fn sweep_and_baseline_write_csv() {
    let dir = tempfile::tempdir().unwrap();
    ok(&ssd(&["simulate", "--experiment", "2", "--count", "3", "--seq-len", "150", "--split", "test", "--out", "t.jsonl.gz"], dir.path()));
    ok(&ssd(&["train", "--experiment", "2", "--width", "4", "--epochs", "1", "--count", "3", "--seq-len", "60", "--out", "m.ckpt"], dir.path()));
    ok(&ssd(&["sweep", "--checkpoint", "m.ckpt", "--condition", "c", "--grid", "0,0.1", "--count", "2", "--seq-len", "60", "--out", "s.csv"], dir.path()));
    let csv = std::fs::read_to_string(dir.path().join("s.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("model,experiment,condition,rho_l,rho_n,accuracy,n_pulses"));
    assert_eq!(csv.lines().count(), 3);

    std::fs::write(dir.path().join("cfg.json"), r#"{"method":"pritran","tau_min":15,"tau_max":120,"bins":105,"peak_threshold":0.3,"clutter_factor":1.5,"alpha":0.3,"search":{"tolerance":0.05,"max_misses":3,"min_chain":5,"min_direct_fraction":0.25}}"#).unwrap();
    ok(&ssd(&["baseline", "pritran", "--data", "t.jsonl.gz", "--config", "cfg.json", "--tune", "0.2,0.4", "--out", "b.csv"], dir.path()));
    let csv = std::fs::read_to_string(dir.path().join("b.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2 * 3);
    let wrong = ssd(&["baseline", "sdif", "--data", "t.jsonl.gz", "--config", "cfg.json", "--out", "x.csv"], dir.path());
    assert!(!wrong.status.success());
}
