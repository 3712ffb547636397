use std::path::Path;
use std::process::{Command, Output};

fn mima(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mima")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn generate(dir: &Path) -> String {
    let o = mima(&[
        "gen",
        "--seed",
        "3",
        "--out",
        dir.to_str().unwrap(),
        "--train-per-class",
        "8",
        "--test-per-class",
        "12",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    dir.join("experiment.cfg").to_str().unwrap().to_owned()
}

fn metric(tsv: &str, key: &str) -> String {
    tsv.lines()
        .find_map(|l| l.strip_prefix(&format!("{key}\t")))
        .unwrap()
        .to_owned()
}

#[test]
fn gen_run_and_rescore() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = generate(dir.path());
    let out = dir.path().join("runs");
    let o = mima(&["run", "--config", &cfg, "--seed", "3", "--dn", "3", "--output", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report = stdout(&o);
    assert_eq!(metric(&report, "algorithm"), "mima");

    let run_dir = std::fs::read_dir(&out).unwrap().next().unwrap().unwrap().path();
    let o = mima(&[
        "eval",
        "--predictions",
        run_dir.join("predictions.tsv").to_str().unwrap(),
        "--truth",
        dir.path().join("test_0.txt").to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    assert_eq!(metric(&stdout(&o), "oa"), metric(&report, "oa"));
    assert!(run_dir.join("mapper_0.dot").exists());

    // identical invocation, identical bytes
    let again = mima(&["run", "--config", &cfg, "--seed", "3", "--dn", "3"]);
    assert_eq!(stdout(&again), report);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = generate(dir.path());
    assert_eq!(code(&mima(&["run", "--config", &cfg])), 2);
    assert_eq!(code(&mima(&["run", "--config", &cfg, "--seed", "1", "--algorithm", "svm"])), 2);
    assert_eq!(code(&mima(&["run", "--config", &cfg, "--seed", "1", "--algorithm", "ssma", "--dn", "99"])), 3);
    assert_eq!(code(&mima(&["run", "--config", &cfg, "--seed", "1", "--train", "/nonexistent/a.txt,/nonexistent/b.txt"])), 4);
    assert_eq!(code(&mima(&["gen", "--out", dir.path().to_str().unwrap()])), 2);
    std::fs::write(dir.path().join("bad.txt"), "2 2\n1 0\nNaN 1\n").unwrap();
    let o = mima(&["mapper", "--input", dir.path().join("bad.txt").to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("bad.txt:3"));
}

#[test]
fn sweep_prints_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = generate(dir.path());
    let o = mima(&["sweep", "--config", &cfg, "--seed", "2", "--dn", "3", "--bins-list", "5:5:15", "--mu-list", "0.5,1"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let table = stdout(&o);
    assert_eq!(table.lines().count(), 7);
    assert!(table.starts_with("algorithm\tmu\tdn\tbins\toverlap\tk\toa\taa\tkappa\n"));
    let o = mima(&["sweep", "--config", &cfg, "--seed", "2", "--bins-list", "5:5:50", "--cap", "4"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn mapper_exports() {
    let dir = tempfile::tempdir().unwrap();
    generate(dir.path());
    let input = dir.path().join("train_0.txt");
    let o = mima(&["mapper", "--input", input.to_str().unwrap(), "--bins", "4"]);
    assert_eq!(code(&o), 0);
    let dot = stdout(&o);
    assert!(dot.starts_with("graph mapper {\n") && dot.ends_with("}\n"));
    let json = dir.path().join("g.json");
    let o = mima(&["mapper", "--input", input.to_str().unwrap(), "--format", "json", "--out", json.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert!(std::fs::read_to_string(&json).unwrap().contains("\"edges\""));
}
