use std::fs;
use std::process::{Command, Output};

fn parisian(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_parisian"))
        .args(args)
        .env_remove("PARISIAN_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn last_field(line: &str) -> f64 {
    line.rsplit(',').next().unwrap().parse().unwrap()
}

#[test]
fn eval_prints_a_csv_row() {
    let o = parisian(&["eval", "g", "--x", "2"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("identity,q,r,a,b,x,theta,value"));
    let row = lines.next().unwrap();
    assert!(row.starts_with("g,"));
    assert!((last_field(row) - 1.0).abs() < 1e-12);
}

#[test]
fn eval_trace_lists_kernels_and_source() {
    let o = parisian(&["eval", "ruin_laplace", "--theta", "0.3", "--trace"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("kernel,value"));
    assert!(text.lines().any(|l| l.starts_with("source,")));
}

#[test]
fn dividends_above_the_barrier_add_the_overshoot() {
    let at_b = last_field(stdout(&parisian(&["eval", "j_hat", "--x", "2"])).lines().nth(1).unwrap());
    let above = last_field(stdout(&parisian(&["eval", "j_hat", "--x", "3"])).lines().nth(1).unwrap());
    assert!((above - at_b - 1.0).abs() < 1e-9);
}

#[test]
fn usage_errors_exit_with_two() {
    for args in [
        &["eval", "no_such_identity"][..],
        &["eval", "g", "--a", "1"],
        &["simulate", "f", "--q", "0", "--paths", "10"],
        &["--model", "jump_diffusion", "simulate", "g", "--paths", "10"],
        &["--model", "no_such_model.json", "eval", "g"],
        &["sweep", "g", "--var", "x", "--from", "1", "--to", "1", "--steps", "3"],
        &["sweep", "g", "--var", "nope", "--from", "0", "--to", "1", "--steps", "3"],
        &["verify", "--suite", "nope"],
        &["frobnicate"],
    ] {
        let o = parisian(args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert!(!o.stderr.is_empty(), "{args:?}");
    }
}

#[test]
fn failed_evaluations_exit_with_one() {
    let o = parisian(&["eval", "u1", "--x", "1"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn sweep_writes_one_row_per_grid_point() {
    let o = parisian(&["sweep", "g,h", "--var", "x", "--from", "-1", "--to", "2", "--steps", "4"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "x,g,h");
    assert_eq!(lines.len(), 5);
    assert!(lines[4].starts_with("2,1,"));
}

#[test]
fn model_files_and_output_files() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("model.json");
    fs::write(&model, r#"{"sigma": 1.4142135623730951, "gamma": 0.5, "jumps": []}"#).unwrap();
    let out = dir.path().join("out.csv");
    let o = parisian(&[
        "--model",
        model.to_str().unwrap(),
        "--output",
        out.to_str().unwrap(),
        "eval",
        "g",
        "--x",
        "0.5",
    ]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let from_file = fs::read_to_string(&out).unwrap();
    let builtin = stdout(&parisian(&["--model", "brownian", "eval", "g", "--x", "0.5"]));
    assert_eq!(from_file, builtin);

    fs::write(&model, r#"{"sigma": -1.0, "jumps": []}"#).unwrap();
    let o = parisian(&["--model", model.to_str().unwrap(), "eval", "g"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn simulate_reports_estimates_next_to_identities() {
    let o = parisian(&["simulate", "g,j_hat", "--paths", "2000", "--seed", "3"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "target,q,r,a,b,x,theta,mean,std_error,n,analytic,bias_note");
    assert_eq!(lines.len(), 3);
    for row in &lines[1..] {
        let f: Vec<&str> = row.split(',').collect();
        let (mean, se, analytic): (f64, f64, f64) = (f[7].parse().unwrap(), f[8].parse().unwrap(), f[10].parse().unwrap());
        assert!((mean - analytic).abs() <= 4.0 * se, "{row}");
    }
}

#[test]
fn traces_are_reproducible() {
    let args = ["simulate", "h_hat", "--paths", "3", "--seed", "11", "--trace"];
    let first = parisian(&args);
    assert!(first.status.success());
    assert_eq!(first.stdout, parisian(&args).stdout);
    let text = stdout(&first);
    assert_eq!(text.lines().filter(|l| l.starts_with("# path")).count(), 3);
}
