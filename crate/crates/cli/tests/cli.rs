//! End-to-end tests of the command-line interface: exit codes, flag
//! validation, trace emission plus checking, reproducibility, and the
//! benchmark harness.

use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_qsolve"))
}

fn tmpdir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("qsolve-cli-{name}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

const UNSAT: &str = "p cnf 2 2\ne 1 0\na 2 0\n1 2 0\n-1 2 0\n";
const SAT: &str = "p cnf 2 2\na 1 0\ne 2 0\n1 2 0\n-1 -2 0\n";

fn write_instance(dir: &std::path::Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

#[test]
fn exit_codes_match_verdicts() {
    let dir = tmpdir("codes");
    let unsat = write_instance(&dir, "u.qdimacs", UNSAT);
    let sat = write_instance(&dir, "s.qdimacs", SAT);

    let out = run(&[unsat.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(20));
    assert_eq!(String::from_utf8_lossy(&out.stdout), "s cnf 0\n");

    let out = run(&[sat.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(10));
    assert_eq!(String::from_utf8_lossy(&out.stdout), "s cnf 1\n");

    let limited = run(&["--max-conflicts", "0", "--max-decisions", "0", unsat.to_str().unwrap()]);
    assert_eq!(limited.status.code(), Some(0));
    assert_eq!(String::from_utf8_lossy(&limited.stdout), "s cnf -1\n");
}

#[test]
fn usage_and_parse_errors_exit_one() {
    let dir = tmpdir("usage");
    let sat = write_instance(&dir, "s.qdimacs", SAT);

    let out = run(&["--ldq", "--dep", "std", sat.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!String::from_utf8_lossy(&out.stderr).is_empty());

    let bad = write_instance(&dir, "bad.qdimacs", "p cnf 1 1\n1 2 0\n");
    let out = run(&[bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));

    let out = run(&["--no-such-flag"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn variant_flags_are_accepted() {
    let dir = tmpdir("variants");
    let sat = write_instance(&dir, "s.qdimacs", SAT);
    let flag_sets: &[&[&str]] = &[
        &[],
        &["--no-gen-cl"],
        &["--no-gen-cu"],
        &["--no-gen"],
        &["--no-qbce"],
        &["--dep", "trivial"],
        &["--dep", "trivial", "--ldq"],
        &["--ldq"],
        &["--oracle"],
    ];
    for flags in flag_sets {
        let mut args: Vec<&str> = flags.to_vec();
        let path = sat.to_str().unwrap();
        args.push(path);
        let out = run(&args);
        assert_eq!(out.status.code(), Some(10), "flags {flags:?}");
    }
}

#[test]
fn trace_check_round_trip_via_files() {
    let dir = tmpdir("trace");
    let unsat = write_instance(&dir, "u.qdimacs", UNSAT);
    let trace = dir.join("u.trace");

    let out = run(&[
        "--trace",
        trace.to_str().unwrap(),
        "--check",
        unsat.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(20));
    let text = std::fs::read_to_string(&trace).unwrap();
    assert!(text.starts_with("p qrp-x 2\n"));
    assert!(text.ends_with("r unsat\n"));

    let out = run(&[
        "check",
        unsat.to_str().unwrap(),
        trace.to_str().unwrap(),
        "--recheck-gen",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8_lossy(&out.stdout), "valid unsat\n");

    // A corrupted trace is rejected with exit code 3.
    let mangled = text.replace("r unsat", "r sat");
    std::fs::write(&trace, mangled).unwrap();
    let out = run(&["check", unsat.to_str().unwrap(), trace.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn seeded_runs_are_byte_identical() {
    let dir = tmpdir("seed");
    let unsat = write_instance(&dir, "u.qdimacs", UNSAT);
    let trace_a = dir.join("a.trace");
    let trace_b = dir.join("b.trace");
    let run_once = |trace: &PathBuf| {
        let out = run(&[
            "--stats",
            "--seed",
            "11",
            "--trace",
            trace.to_str().unwrap(),
            unsat.to_str().unwrap(),
        ]);
        (out.stdout, std::fs::read(trace).unwrap())
    };
    let (stdout_a, bytes_a) = run_once(&trace_a);
    let (stdout_b, bytes_b) = run_once(&trace_b);
    assert_eq!(stdout_a, stdout_b);
    assert_eq!(bytes_a, bytes_b);
}

#[test]
fn stdin_input_works() {
    let mut child = bin()
        .stdin(std::process::Stdio::piped())
        .stdout(std::process::Stdio::piped())
        .stderr(std::process::Stdio::null())
        .spawn()
        .unwrap();
    use std::io::Write;
    child
        .stdin
        .as_mut()
        .unwrap()
        .write_all(SAT.as_bytes())
        .unwrap();
    let out = child.wait_with_output().unwrap();
    assert_eq!(out.status.code(), Some(10));
}

#[test]
fn trace_and_check_across_random_instances_and_variants() {
    use qsolve::instgen::{random_pcnf, RandomParams};
    let dir = tmpdir("tracecheck");
    let variants: &[&[&str]] = &[
        &[],
        &["--no-gen"],
        &["--dep", "trivial", "--ldq"],
    ];
    for seed in 0..12u64 {
        let psi = random_pcnf(0xc11e_0000 + seed, &RandomParams::default());
        let path = write_instance(&dir, &format!("i{seed}.qdimacs"), &qsolve::qdimacs::write(&psi));
        for (vi, extra) in variants.iter().enumerate() {
            let trace = dir.join(format!("i{seed}-{vi}.trace"));
            let mut args: Vec<&str> = extra.to_vec();
            let tp = trace.to_str().unwrap().to_string();
            args.extend_from_slice(&["--trace", &tp, "--check"]);
            let p = path.to_str().unwrap().to_string();
            args.push(&p);
            let out = run(&args.iter().map(|s| &**s).collect::<Vec<_>>());
            let code = out.status.code().unwrap();
            assert!(
                code == 10 || code == 20,
                "seed {seed} variant {vi}: exit {code}, stderr: {}",
                String::from_utf8_lossy(&out.stderr)
            );
            assert!(
                String::from_utf8_lossy(&out.stderr).contains("c check ok"),
                "seed {seed} variant {vi}: check did not pass"
            );
            // The standalone checker accepts the emitted file as well.
            let mut check_args = vec!["check", path.to_str().unwrap(), trace.to_str().unwrap()];
            if extra.contains(&"--dep") {
                check_args.extend_from_slice(&["--dep", "trivial"]);
            }
            let out = run(&check_args);
            assert_eq!(out.status.code(), Some(0), "seed {seed} variant {vi}");
        }
    }
}

#[test]
fn bench_emits_csv_matrix() {
    let dir = tmpdir("bench");
    write_instance(&dir, "a.qdimacs", SAT);
    write_instance(&dir, "b.qdimacs", UNSAT);
    let csv_path = dir.join("out.csv");
    let out = run(&[
        "bench",
        "--dir",
        dir.to_str().unwrap(),
        "--out",
        csv_path.to_str().unwrap(),
        "--configs",
        "dq,dq-n",
        "--jobs",
        "2",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(&csv_path).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "instance,config,verdict,seconds,conflicts,decisions,gen_cl_hits,gen_cu_hits"
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 4);
    assert!(rows[0].starts_with("a.qdimacs,dq,SAT,"));
    assert!(rows[1].starts_with("a.qdimacs,dq-n,SAT,"));
    assert!(rows[2].starts_with("b.qdimacs,dq,UNSAT,"));
    assert!(rows[3].starts_with("b.qdimacs,dq-n,UNSAT,"));

    let out = run(&["bench", "--dir", dir.to_str().unwrap(), "--configs", "nope"]);
    assert_eq!(out.status.code(), Some(1));
}
