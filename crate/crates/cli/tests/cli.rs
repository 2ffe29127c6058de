use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn ssn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ssn"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn line<'a>(text: &'a str, key: &str) -> &'a str {
    text.lines()
        .find_map(|l| l.strip_prefix(key).and_then(|r| r.strip_prefix(": ")))
        .unwrap_or_else(|| panic!("no `{key}` in\n{text}"))
}

#[test]
fn cycle_example_exits_two() {
    let dir = TempDir::new().unwrap();
    let p = write(
        dir.path(),
        "cycle.json",
        r#"{"kind":"pwls","T":[[-2,3],[-1,1]],"b":[-5,-3]}"#,
    );
    let x0 = write(dir.path(), "x0.json", "[1, 1]");
    let o = ssn(&["solve", p.to_str().unwrap(), "--x0", x0.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", stdout(&o));
    let out = stdout(&o);
    assert_eq!(line(&out, "status"), "cycled");
    assert_eq!(line(&out, "cycle_period"), "2");
    assert!(line(&out, "condition").starts_with("inv_norm=3.86"));
}

#[test]
fn diagonal_system_converges_quickly() {
    let dir = TempDir::new().unwrap();
    let p = write(
        dir.path(),
        "t3.json",
        r#"{"kind":"pwls","T":[[3,0],[0,3]],"b":[4,-3]}"#,
    );
    let x0 = write(dir.path(), "x0.json", "[9, 9]");
    let report = dir.path().join("report.json");
    let o = ssn(&[
        "solve",
        p.to_str().unwrap(),
        "--x0",
        x0.to_str().unwrap(),
        "--report",
        report.to_str().unwrap(),
        "--trace",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert_eq!(line(&out, "status"), "converged_exact");
    assert!(line(&out, "iterations").parse::<usize>().unwrap() <= 3);
    assert_eq!(line(&out, "x"), "[1.0,-1.0]");
    assert!(line(&out, "iterates").starts_with("[[9.0,9.0]"));

    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(report).unwrap()).unwrap();
    assert_eq!(json["report"]["status"], "ConvergedExact");
    assert_eq!(json["report"]["solution"], serde_json::json!([1.0, -1.0]));
}

#[test]
fn identity_qp_takes_one_step() {
    let dir = TempDir::new().unwrap();
    let p = write(
        dir.path(),
        "qp.json",
        r#"{"kind":"qp","Q":[[1,0,0],[0,1,0],[0,0,1]],"b_tilde":[3,-1,0.5],"c":0.0}"#,
    );
    let o = ssn(&[
        "solve",
        p.to_str().unwrap(),
        "--x0",
        "random",
        "--seed",
        "4",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let out = stdout(&o);
    assert_eq!(line(&out, "iterations"), "1");
    assert_eq!(line(&out, "qp_minimizer"), "[0.0,1.0,0.0]");

    // Q − I is singular, so there is no pwls form.
    let o = ssn(&["solve", p.to_str().unwrap(), "--formulation", "pwls"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn qp_solves_in_both_formulations() {
    let dir = TempDir::new().unwrap();
    let p = write(
        dir.path(),
        "qp.json",
        r#"{"kind":"qp","Q":[[1.2]],"b_tilde":[-2.4]}"#,
    );
    for f in ["qp", "pwls"] {
        let o = ssn(&["solve", p.to_str().unwrap(), "--formulation", f]);
        assert_eq!(o.status.code(), Some(0));
        assert_eq!(
            line(&stdout(&o), "qp_minimizer"),
            "[2.0]",
            "formulation {f}"
        );
    }
}

#[test]
fn known_solution_mode_and_iteration_cap() {
    let dir = TempDir::new().unwrap();
    let p = write(
        dir.path(),
        "p.json",
        r#"{"kind":"pwls","T":[[3,0],[0,3]],"b":[4,-3]}"#,
    );
    let u = write(dir.path(), "u.json", "[1, -1]");
    let o = ssn(&[
        "solve",
        p.to_str().unwrap(),
        "--reference",
        u.to_str().unwrap(),
        "--tolx",
        "1e-12",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(line(&stdout(&o), "status"), "converged");

    // A wrong reference is never met: the stationary iterate runs to the cap.
    let w = write(dir.path(), "w.json", "[5, 5]");
    let o = ssn(&[
        "solve",
        p.to_str().unwrap(),
        "--reference",
        w.to_str().unwrap(),
        "--tolx",
        "1e-6",
        "--max-iter",
        "7",
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(line(&stdout(&o), "iterations"), "7");
}

#[test]
fn singular_newton_matrix_exits_four() {
    let dir = TempDir::new().unwrap();
    let p = write(
        dir.path(),
        "s.json",
        r#"{"kind":"pwls","T":[[-1,0],[0,1]],"b":[0,2]}"#,
    );
    // Pattern (1,0) makes diag(s) + T = diag(0, 1).
    let x0 = write(dir.path(), "x0.json", "[1, -1]");
    let o = ssn(&["solve", p.to_str().unwrap(), "--x0", x0.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4));
    assert_eq!(line(&stdout(&o), "status"), "singular_jacobian");
}

#[test]
fn malformed_files_exit_one_naming_the_field() {
    let dir = TempDir::new().unwrap();
    let p = write(
        dir.path(),
        "bad.json",
        r#"{"kind":"pwls","T":[[1,2],[3,4]],"b":[1,2,3]}"#,
    );
    let o = ssn(&["solve", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("field `b`"), "{err}");

    let o = ssn(&["solve", dir.path().join("missing.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));

    let p = write(
        dir.path(),
        "notcone.json",
        r#"{"kind":"qp","Q":[[1]],"b_tilde":[1]}"#,
    );
    let o = ssn(&["project", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("cone"));
}

#[test]
fn project_examples() {
    let dir = TempDir::new().unwrap();
    let p = write(
        dir.path(),
        "c.json",
        r#"{"kind":"cone","A":[[1,0],[1,1]],"z":[-1,2]}"#,
    );
    let o = ssn(&["project", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert_eq!(line(&out, "v"), "[0.0,2.0]");
    assert_eq!(line(&out, "projection"), "[0.0,2.0]");

    let p = write(
        dir.path(),
        "i.json",
        r#"{"kind":"cone","A":[[1,0,0],[0,1,0],[0,0,1]],"z":[-1,2,-3.5]}"#,
    );
    let o = ssn(&["project", p.to_str().unwrap()]);
    assert_eq!(line(&stdout(&o), "projection"), "[0.0,2.0,0.0]");

    // z = A [1, 2] is already in the cone.
    let p = write(
        dir.path(),
        "in.json",
        r#"{"kind":"cone","A":[[1,0],[1,1]],"z":[1,3]}"#,
    );
    let o = ssn(&["project", p.to_str().unwrap()]);
    assert_eq!(line(&stdout(&o), "projection"), "[1.0,3.0]");
}

#[test]
fn bench_commands_write_stable_csv() {
    let dir = TempDir::new().unwrap();
    let header = "experiment,n,beta,tolx,index,status,iterations,error,runtime_s";

    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for out in [&a, &b] {
        let o = ssn(&[
            "bench-dim",
            "--n",
            "20",
            "--count",
            "5",
            "--tolx",
            "1e-6",
            "--seed",
            "3",
            "--repeats",
            "2",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(
            o.status.code(),
            Some(0),
            "{}",
            String::from_utf8_lossy(&o.stderr)
        );
    }
    let read = |p: &Path| -> Vec<Vec<String>> {
        csv::Reader::from_path(p)
            .unwrap()
            .records()
            .map(|r| r.unwrap().iter().map(str::to_string).collect())
            .collect()
    };
    assert!(fs::read_to_string(&a).unwrap().starts_with(header));
    let (ra, rb) = (read(&a), read(&b));
    assert_eq!(ra.len(), 5 + 3);
    for (x, y) in ra.iter().zip(&rb) {
        assert_eq!(x[..8], y[..8]);
    }
    assert!(ra[..5].iter().all(|r| r[0] == "dim" && r[5] == "converged"));

    let o = ssn(&["bench-dim", "--n", "10", "--count", "0"]);
    assert_eq!(stdout(&o), format!("{header}\n"));
    let o = ssn(&["bench-beta", "--no-ranges"]);
    assert_eq!(stdout(&o), format!("{header}\n"));

    let o = ssn(&[
        "bench-starts",
        "--n",
        "8",
        "--count",
        "3",
        "--starts",
        "1",
        "--tolx",
        "1e-6",
        "--repeats",
        "1",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(
        text.contains("starts-summary,8,\"(0,0.5)\",0.000001,,mean_of_stds,0,,"),
        "{text}"
    );

    let o = ssn(&["bench-beta", "--beta-low", "0.5"]);
    assert_eq!(o.status.code(), Some(1));
}
