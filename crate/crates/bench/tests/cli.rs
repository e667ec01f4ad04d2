use std::path::Path;
use std::process::{Command, Output};

fn bench(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ctnet-bench")).args(args).output().unwrap()
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn one_line_error(out: &Output) -> String {
    assert!(!out.status.success());
    let err = String::from_utf8(out.stderr.clone()).unwrap();
    assert_eq!(err.trim_end().lines().count(), 1, "{err}");
    err
}

#[test]
fn run_prints_header_and_row() {
    let text = stdout(&bench(&["run", "--algo", "fixed", "--n", "15", "--m", "100", "--seed", "2"]));
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("policy,workload,n,m,seed,access_total,adjust_total,cost_total,ws_bound"));
    assert!(lines[1].starts_with("fixed,uniform,15,100,2,"));
    let fields: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(fields[6], "0");
}

#[test]
fn json_output_and_mru_check() {
    let text = stdout(&bench(&[
        "run", "--algo", "max-push", "--n", "31", "--workload", "zipf", "--alpha", "1.2", "--m", "500", "--check-mru",
        "--format", "json",
    ]));
    assert!(text.contains("\"ws_bound\""));
    assert!(text.contains("\"mru_violations\":0"));
    assert!(text.contains("zipf(1.2)"));
}

#[test]
fn append_writes_one_header() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.csv");
    let out_s = out.to_str().unwrap();
    for seed in ["1", "2"] {
        stdout(&bench(&["run", "--algo", "move-half", "--n", "7", "--m", "50", "--seed", seed, "--out", out_s, "--append"]));
    }
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 3);
    assert_eq!(ctnet_core::report::read_csv(&out).unwrap().len(), 2);
}

#[test]
fn trace_workload() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("t.txt");
    std::fs::write(&trace, "# three requests\n2\n2\n1\n").unwrap();
    let text = stdout(&bench(&[
        "run", "--algo", "move-half", "--n", "3", "--workload", "trace", "--trace", trace.to_str().unwrap(), "--oracle",
    ]));
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[3], "3");
    assert!(!row[12].is_empty());
}

#[test]
fn errors_are_one_line_and_nonzero() {
    let err = one_line_error(&bench(&["run", "--algo", "move-half", "--n", "10"]));
    assert!(err.contains("2^d - 1"));
    let err = one_line_error(&bench(&["run", "--algo", "move-half", "--n", "15", "--oracle"]));
    assert!(err.contains("refused"));
    let err = one_line_error(&bench(&["run", "--algo", "move-half", "--n", "7", "--workload", "cyclic", "--subset", "9"]));
    assert!(err.contains("subset"));
    let bad = Path::new("/nonexistent-dir/out.csv");
    let err = one_line_error(&bench(&["run", "--algo", "fixed", "--n", "7", "--out", bad.to_str().unwrap()]));
    assert!(err.contains("/nonexistent-dir/out.csv"));
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("bad.txt");
    std::fs::write(&trace, "0\n1\n7\n").unwrap();
    let err = one_line_error(&bench(&["run", "--algo", "fixed", "--n", "7", "--workload", "trace", "--trace", trace.to_str().unwrap()]));
    assert!(err.contains("bad.txt:3:"), "{err}");
}

#[test]
fn matrix_rows_in_run_order() {
    let text = stdout(&bench(&["matrix", "--algo", "fixed,move-half", "--n", "7", "--workload", "uniform", "--m", "100", "--seeds", "2", "--seed", "9"]));
    let rows: Vec<Vec<String>> = text.lines().skip(1).map(|l| l.split(',').map(String::from).collect()).collect();
    let keys: Vec<(&str, &str)> = rows.iter().map(|r| (r[0].as_str(), r[4].as_str())).collect();
    assert_eq!(keys, vec![("fixed", "9"), ("fixed", "10"), ("move-half", "9"), ("move-half", "10")]);
}

#[test]
fn depth_stats_markov_and_oracle_checks() {
    let text = stdout(&bench(&["depth-stats", "--n", "15", "--m", "500", "--seeds", "2"]));
    assert!(text.starts_with("rank,depth_samples,mean_depth"));
    assert_eq!(text.lines().count(), 16);
    assert!(text.lines().nth(1).unwrap().starts_with("1,"));

    let text = stdout(&bench(&["markov-check", "--i", "4,8", "--w-max", "64"]));
    assert!(text.contains("4,") && text.contains("true"));

    let text = stdout(&bench(&["oracle-check", "--n", "3", "--m", "6", "--seeds", "4"]));
    assert_eq!(text.lines().count(), 5);
    one_line_error(&bench(&["oracle-check", "--n", "15"]));
    one_line_error(&bench(&["oracle-check", "--n", "7", "--m", "9"]));
}
