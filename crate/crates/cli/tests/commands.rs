use std::path::PathBuf;
use std::process::{Command, Output};

use mnewton_cli::report::{Payload, RunReport};

fn mnewton(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mnewton"))
        .args(args)
        .current_dir(concat!(env!("CARGO_MANIFEST_DIR"), "/../.."))
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn json(out: &Output) -> RunReport {
    RunReport::from_json(std::str::from_utf8(&out.stdout).unwrap()).expect("valid report")
}

fn scratch(name: &str, contents: &str) -> PathBuf {
    let path = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name);
    std::fs::write(&path, contents).unwrap();
    path
}

#[test]
fn solve_rosenbrock_defaults() {
    let out = mnewton(&["solve", "rosenbr", "--json"]);
    assert_eq!(code(&out), 0);
    let r = json(&out);
    assert_eq!(r.schema_version, 1);
    assert_eq!(r.command, "solve");
    assert_eq!(
        (r.config.eps, r.config.delta, r.config.cap),
        (1e-5, 1e-8, 1e12)
    );
    let Payload::Solve(s) = r.result else {
        panic!("solve payload")
    };
    assert!((15..=40).contains(&s.iterations));
    assert!(s.grad_norm_final < 1e-5);
}

#[test]
fn solve_at_minimizer_and_unknown() {
    let out = mnewton(&["solve", "rosenbr", "--x0", "1,1", "--json"]);
    assert_eq!(code(&out), 0);
    let Payload::Solve(s) = json(&out).result else {
        panic!()
    };
    assert_eq!(s.iterations, 0);

    let out = mnewton(&["solve", "nosuch"]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown problem"));

    assert_eq!(code(&mnewton(&["solve", "rosenbr", "--x0", "1,2,3"])), 1);
    assert_eq!(code(&mnewton(&["solve", "rosenbr", "--delta", "2"])), 1);
    assert_eq!(code(&mnewton(&["solve"])), 1);
    assert_eq!(code(&mnewton(&["frobnicate"])), 1);
    assert_eq!(code(&mnewton(&["--help"])), 0);
}

#[test]
fn solve_non_converged_exits_2() {
    let out = mnewton(&["solve", "rosenbr", "--max-iter", "2"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stdout).contains("max_iterations"));
}

#[test]
fn solve_flags_are_echoed() {
    let out = mnewton(&[
        "solve", "cube", "--eps", "1e-7", "--delta", "1e-6", "--Delta", "1e10", "--norm", "inf",
        "--json",
    ]);
    assert_eq!(code(&out), 0);
    let r = json(&out);
    assert_eq!(
        (r.config.eps, r.config.delta, r.config.cap),
        (1e-7, 1e-6, 1e10)
    );
    assert_eq!(r.config.x0, Some(vec![-1.2, 1.0]));
}

#[test]
fn solve_problem_file() {
    let out = mnewton(&["solve", "data/quadratic2.txt", "--x0", "5,5", "--json"]);
    assert_eq!(code(&out), 0);
    let Payload::Solve(s) = json(&out).result else {
        panic!()
    };
    assert_eq!(s.iterations, 1);
    assert!((s.x_final[0] - 1.0).abs() < 1e-12 && (s.x_final[1] - 1.0).abs() < 1e-12);

    let indefinite = scratch("indefinite.txt", "2\n1 0\n0 -1\n0 0\n");
    assert_eq!(code(&mnewton(&["solve", indefinite.to_str().unwrap()])), 1);
}

#[test]
fn report_round_trip_is_byte_identical() {
    for args in [
        vec!["solve", "helix", "--json"],
        vec!["eig", "data/toeplitz16.txt", "--json"],
        vec!["bench", "--json"],
        vec!["check", "sisser", "--json"],
    ] {
        let out = mnewton(&args);
        let text = String::from_utf8(out.stdout).unwrap();
        let again = RunReport::from_json(&text).unwrap().to_json().unwrap() + "\n";
        assert_eq!(text, again, "{args:?}");
    }
}

#[test]
fn eig_toeplitz_presets() {
    for (start, limit) in [("alt", 30), ("e1", 160)] {
        let out = mnewton(&[
            "eig",
            "data/toeplitz16.txt",
            "--which",
            "min",
            "--x0",
            start,
            "--json",
        ]);
        assert_eq!(code(&out), 0);
        let r = json(&out);
        assert_eq!(r.config.eig_tol, Some(1e-9));
        let Payload::Eig(e) = r.result else { panic!() };
        assert!(e.max.is_none());
        let min = e.min.unwrap();
        assert!((min.value - 0.00325850037049).abs() <= 1e-9);
        assert!(min.iterations <= limit, "{start}: {}", min.iterations);
    }
}

#[test]
fn eig_identity_and_bad_files() {
    let id = scratch("identity3.txt", "3\n1 0 0\n0 1 0\n0 0 1\n");
    let out = mnewton(&["eig", id.to_str().unwrap(), "--json"]);
    assert_eq!(code(&out), 0);
    let Payload::Eig(e) = json(&out).result else {
        panic!()
    };
    for est in [e.min.unwrap(), e.max.unwrap()] {
        assert!((est.value - 1.0).abs() < 1e-15);
        assert_eq!(est.iterations, 0);
    }

    let malformed = scratch("malformed.txt", "2\n1 x\n0 1\n");
    assert_eq!(code(&mnewton(&["eig", malformed.to_str().unwrap()])), 1);
    let asym = scratch("asym.txt", "2\n1 2\n3 1\n");
    assert_eq!(code(&mnewton(&["eig", asym.to_str().unwrap()])), 1);
    assert_eq!(code(&mnewton(&["eig", "no/such/file.txt"])), 1);

    let start = scratch("start3.txt", "0 0 2\n");
    let diag = scratch("diag3.txt", "3\n1 0 0\n0 2 0\n0 0 3\n");
    let out = mnewton(&[
        "eig",
        diag.to_str().unwrap(),
        "--which",
        "max",
        "--x0",
        start.to_str().unwrap(),
        "--json",
    ]);
    let Payload::Eig(e) = json(&out).result else {
        panic!()
    };
    assert_eq!(e.max.unwrap().value, 3.0);
    let short = scratch("start2.txt", "1 1\n");
    assert_eq!(
        code(&mnewton(&[
            "eig",
            diag.to_str().unwrap(),
            "--x0",
            short.to_str().unwrap()
        ])),
        1
    );
}

#[test]
fn bench_standard_suite() {
    let out = mnewton(&[
        "bench", "--suite", "standard", "--norm", "inf", "--eps", "1e-6", "--json",
    ]);
    assert_eq!(code(&out), 0);
    let Payload::Bench(rows) = json(&out).result else {
        panic!()
    };
    assert_eq!(rows.len(), mnewton::problems::standard_set().len());
    assert!(rows.windows(2).all(|w| w[0].name < w[1].name));
    let rosen = rows.iter().find(|r| r.name == "rosenbr").unwrap();
    assert!(rosen.obj < 1e-10);

    let seq = mnewton(&["bench", "--sequential", "--json"]);
    let par = mnewton(&["bench", "--json"]);
    assert_eq!(seq.stdout, par.stdout);

    let csv = String::from_utf8(mnewton(&["bench", "--csv"]).stdout).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "name,dim,iter,obj,grad_norm,status");
    assert_eq!(lines.len(), rows.len() + 1);

    assert_eq!(code(&mnewton(&["bench", "--suite", "cute"])), 1);
}

#[test]
fn check_commands() {
    assert_eq!(code(&mnewton(&["check", "rosenbr"])), 0);
    assert_eq!(code(&mnewton(&["check", "beale"])), 0);
    assert_eq!(code(&mnewton(&["check", "nosuch"])), 1);
    let out = mnewton(&["check", "rosenbr", "--fault-scale", "1.01"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL"));
}
