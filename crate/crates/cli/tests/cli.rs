use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn corpus(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../core/corpus")
        .join(name)
}

fn sdbgen(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sdbgen"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn plays() -> String {
    corpus("plays.sdb").display().to_string()
}

const WORKED_PATH: &str = r#"{"steps":[
    {"stmt":2,"d":"enter"},{"stmt":6,"d":"exn"},{"stmt":7,"d":"T"},{"stmt":8,"d":"ok"},
    {"stmt":10,"d":"ok"},{"stmt":11,"d":"T"},{"stmt":2,"d":"exit"}],"terminal":"exit"}"#;

#[test]
fn check_accepts_corpus_and_rejects_bad_models() {
    let o = sdbgen(&["check", &plays()]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("2 tables, 14 statements"));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.sdb");
    fs::write(&bad, "MODEL m COMMIT(); y = x; COMMIT(); ENDMODEL").unwrap();
    let o = sdbgen(&["check", bad.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("before initialization"));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(code(&sdbgen(&["bogus"])), 1);
    assert_eq!(code(&sdbgen(&["solve", &plays()])), 1);
    assert_eq!(code(&sdbgen(&["--help"])), 0);
}

#[test]
fn verify_published_solution_and_empty_load() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("path.json");
    fs::write(&path, WORKED_PATH).unwrap();
    let good = dir.path().join("good.json");
    fs::write(
        &good,
        r#"{"tables":{"author":[],"play":[]},"reads":[7],"loads":[[7]]}"#,
    )
    .unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(
        &bad,
        r#"{"tables":{"author":[],"play":[]},"reads":[7],"loads":[[]]}"#,
    )
    .unwrap();
    let args = |input: &PathBuf| {
        sdbgen(&[
            "verify",
            &plays(),
            path.to_str().unwrap(),
            input.to_str().unwrap(),
        ])
    };
    let o = args(&good);
    assert_eq!((code(&o), stdout(&o).trim()), (0, "pass"));
    let o = args(&bad);
    assert_eq!(code(&o), 2);
    assert!(stdout(&o).starts_with("fail: step 0: expected 2:enter"), "{}", stdout(&o));
}

#[test]
fn solved_input_verifies() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("path.json");
    fs::write(&path, WORKED_PATH).unwrap();
    let input = dir.path().join("input.json");
    let o = sdbgen(&[
        "solve",
        &plays(),
        "--path",
        path.to_str().unwrap(),
        "-o",
        input.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let o = sdbgen(&[
        "verify",
        &plays(),
        path.to_str().unwrap(),
        input.to_str().unwrap(),
    ]);
    assert_eq!(stdout(&o).trim(), "pass");
}

#[test]
fn symexec_writes_constraint_document() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("path.json");
    fs::write(&path, WORKED_PATH).unwrap();
    let als = dir.path().join("worked.als");
    let o = sdbgen(&[
        "symexec",
        &plays(),
        "--path",
        path.to_str().unwrap(),
        "-o",
        als.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    let text = fs::read_to_string(&als).unwrap();
    assert!(text.starts_with("module example"));
    assert!(text.contains("check inputsExist"));
}

#[test]
fn testgen_is_deterministic_and_reports() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for out in [&a, &b] {
        let o = sdbgen(&["testgen", &plays(), "--seed", "9", "-o", out.to_str().unwrap()]);
        assert_eq!(code(&o), 0);
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert!(dir.path().join("a.timings.json").exists());

    let o = sdbgen(&["report", a.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 4);
    assert!(text.lines().nth(3).unwrap().starts_with("example |           31 |"));
}

#[test]
fn unsat_only_suite_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("stuck.sdb");
    fs::write(
        &m,
        "MODEL stuck COMMIT(); x = 1; WHILE (x = 1) DO x = 1; ENDWHILE; COMMIT(); ENDMODEL",
    )
    .unwrap();
    let o = sdbgen(&["testgen", m.to_str().unwrap()]);
    assert_eq!(code(&o), 3);
    assert!(stdout(&o).contains("\"result\": \"unsat\""));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"bounds":{"max_loop_iterations":0},"scope":{"bitwidth":3}}"#).unwrap();
    let model = plays();
    let count = |extra: &[&str]| {
        let mut args = vec!["paths", &model, "--config", cfg.to_str().unwrap()];
        args.extend_from_slice(extra);
        stdout(&sdbgen(&args)).lines().count()
    };
    assert_eq!(count(&[]), 1);
    assert_eq!(count(&["--loops", "1"]), 31);
}
