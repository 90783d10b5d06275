use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_uwa-sim"))
}

fn scenarios() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("terminated by signal")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_owned()
}

const QUICK: &str = r#"
name = "quick"
duration_s = 1200
replications = 2
seed = 5

[topology]
nodes = 4

[oracle]
draws = 500

[[policy]]
kind = "bilevel"

[[policy]]
kind = "fixed"
action = "psk16:high"
interval_min = 1
"#;

#[test]
fn validate_accepts_shipped_scenarios() {
    for entry in std::fs::read_dir(scenarios()).unwrap() {
        let path = entry.unwrap().path();
        let out = run(&["validate", path.to_str().unwrap()]);
        assert_eq!(
            code(&out),
            0,
            "{}: {}",
            path.display(),
            String::from_utf8_lossy(&out.stderr)
        );
        assert!(String::from_utf8_lossy(&out.stdout).contains(": ok"));
    }
}

#[test]
fn config_problems_exit_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        write(dir.path(), "syntax.toml", "[topology\nnodes = 4"),
        write(
            dir.path(),
            "schema.toml",
            "[topology]\nnodes = 4\nbogus = 1\n",
        ),
        write(dir.path(), "empty.toml", ""),
        write(dir.path(), "nodes.toml", "[topology]\nnodes = 5\n"),
        write(
            dir.path(),
            "frame.toml",
            "[topology]\nnodes = 4\n[radio]\nframe_bits = 40000\n",
        ),
        dir.path().join("missing.toml").to_str().unwrap().to_owned(),
    ];
    for path in &cases {
        let out = run(&["validate", path]);
        assert_eq!(
            code(&out),
            3,
            "{path}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
        let out = run(&["run", path, "--out", dir.path().join("o").to_str().unwrap()]);
        assert_eq!(code(&out), 3, "{path}");
    }
    assert!(!dir.path().join("o").exists());
}

#[test]
fn bad_command_lines_exit_with_2() {
    assert_eq!(code(&run(&[])), 2);
    assert_eq!(code(&run(&["run", "x.toml"])), 2);
    assert_eq!(
        code(&run(&["run", "x.toml", "--out", "o", "--seed", "abc"])),
        2
    );
}

#[test]
fn run_writes_results_and_refuses_to_mix_configurations() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = write(dir.path(), "quick.toml", QUICK);
    let out = dir.path().join("results");
    let out_s = out.to_str().unwrap();

    let first = run(&["run", &scenario, "--out", out_s]);
    assert_eq!(
        code(&first),
        0,
        "{}",
        String::from_utf8_lossy(&first.stderr)
    );
    let stdout = String::from_utf8_lossy(&first.stdout);
    assert!(stdout.contains("bilevel"), "{stdout}");
    for f in [
        "summary.csv",
        "oracle.csv",
        "bilevel/intervals.csv",
        "bilevel/regret.csv",
    ] {
        assert!(out.join(f).is_file(), "{f}");
    }
    let summary = std::fs::read_to_string(out.join("summary.csv")).unwrap();
    assert!(summary.contains("seed=5"));

    // identical configuration and seed: byte-identical files
    let again = dir.path().join("again");
    assert_eq!(
        code(&run(&["run", &scenario, "--out", again.to_str().unwrap()])),
        0
    );
    assert_eq!(
        std::fs::read(out.join("bilevel/intervals.csv")).unwrap(),
        std::fs::read(again.join("bilevel/intervals.csv")).unwrap()
    );

    // a different seed changes the hash; the directory is refused
    let other = run(&[
        "run",
        &scenario,
        "--out",
        out_s,
        "--seed",
        "6",
        "--replications",
        "1",
    ]);
    assert_eq!(code(&other), 4);
    assert!(String::from_utf8_lossy(&other.stderr).contains("hash mismatch"));
}

#[test]
fn unwritable_output_exits_with_4() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = write(dir.path(), "quick.toml", QUICK);
    let blocker = write(dir.path(), "file", "not a directory");
    let out = run(&["run", &scenario, "--out", &blocker]);
    assert_eq!(code(&out), 4, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn oracle_writes_its_table() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = write(dir.path(), "quick.toml", QUICK);
    let out = dir.path().join("genie");
    let res = run(&["oracle", &scenario, "--out", out.to_str().unwrap()]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    assert!(String::from_utf8_lossy(&res.stdout).contains("psk16:low"));
    let table = std::fs::read_to_string(out.join("oracle.csv")).unwrap();
    let mut lines = table.lines();
    assert!(lines.next().unwrap().starts_with("# config_hash="));
    assert_eq!(
        lines.next().unwrap(),
        "snr_class,class_weight,filled,action,expected_norm,best"
    );
    assert_eq!(table.lines().count(), 2 + 3 * 9);
}
