//! Batch command-line front end for the QBF solver.
//!
//! Exit codes: 10 = SAT, 20 = UNSAT, 0 = UNKNOWN, 1 = usage or parse error,
//! 3 = trace check failure.

use clap::{Args, Parser, Subcommand};
use qsolve::depsched::DepKind;
use qsolve::engine::{solve, SolverConfig, Verdict};
use qsolve::oracle::{self, OracleBudget, Truth};
use qsolve::proof::{check_proof, parse_trace, write_trace, CheckOptions};
use qsolve::Pcnf;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

mod bench;

#[derive(Parser)]
#[command(
    name = "qsolve",
    about = "Search-based QBF solver for prenex CNF (QDIMACS)",
    version
)]
struct Cli {
    #[command(subcommand)]
    cmd: Option<Cmd>,

    #[command(flatten)]
    solve: SolveArgs,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a directory of instances against a configuration matrix and
    /// emit a CSV of results.
    Bench(bench::BenchArgs),
    /// Check a resolution trace against its QDIMACS instance.
    Check(CheckArgs),
}

#[derive(Args)]
struct SolveArgs {
    /// QDIMACS input; standard input when omitted.
    file: Option<PathBuf>,

    /// Disable the generalized clause axiom (variant DQ-ncl).
    #[arg(long = "no-gen-cl")]
    no_gen_cl: bool,

    /// Disable the generalized cube axiom (variant DQ-ncu).
    #[arg(long = "no-gen-cu")]
    no_gen_cu: bool,

    /// Disable all generalized axioms including dynamic QBCE (variant DQ-n).
    #[arg(long = "no-gen")]
    no_gen: bool,

    /// Disable dynamic QBCE (variant DQ-nq).
    #[arg(long = "no-qbce")]
    no_qbce: bool,

    /// Dependency scheme: `std` (default) or `trivial` (variant DQ-lin).
    #[arg(long, value_parser = ["trivial", "std"])]
    dep: Option<String>,

    /// Learn clauses with long-distance resolution (variant DQ-linldq;
    /// enforces the trivial dependency scheme).
    #[arg(long)]
    ldq: bool,

    /// Write the resolution trace to a file.
    #[arg(long, value_name = "FILE")]
    trace: Option<PathBuf>,

    /// Check the emitted trace after solving; a failure exits with code 3.
    #[arg(long)]
    check: bool,

    /// Wall-clock limit in seconds.
    #[arg(long, value_name = "S")]
    max_time: Option<f64>,

    /// Conflict limit.
    #[arg(long, value_name = "N")]
    max_conflicts: Option<u64>,

    /// Decision limit.
    #[arg(long, value_name = "N")]
    max_decisions: Option<u64>,

    /// Seed for heuristic tie-breaking; runs are reproducible per seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Print statistics as `c` lines.
    #[arg(long)]
    stats: bool,

    /// Decide by brute-force expansion instead of search (small instances).
    #[arg(long)]
    oracle: bool,
}

#[derive(Args)]
struct CheckArgs {
    /// QDIMACS instance the trace refers to.
    formula: PathBuf,
    /// Trace file produced with --trace.
    trace: PathBuf,
    /// Dependency scheme the reduction steps are validated under.
    #[arg(long, value_parser = ["trivial", "std"], default_value = "std")]
    dep: String,
    /// Re-verify generalized axiom steps with the expansion oracle.
    #[arg(long)]
    recheck_gen: bool,
}

fn usage_error(msg: &str) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(1)
}

fn read_input(path: Option<&Path>) -> Result<Vec<u8>, String> {
    match path {
        Some(p) => std::fs::read(p).map_err(|e| format!("cannot read {}: {e}", p.display())),
        None => {
            let mut buf = Vec::new();
            std::io::stdin()
                .read_to_end(&mut buf)
                .map_err(|e| format!("cannot read standard input: {e}"))?;
            Ok(buf)
        }
    }
}

fn parse_formula(bytes: &[u8]) -> Result<Pcnf, String> {
    match qsolve::qdimacs::parse(bytes) {
        Ok((psi, diags)) => {
            if diags.dropped_tautologies > 0 {
                eprintln!("c dropped {} tautological clauses", diags.dropped_tautologies);
            }
            if diags.free_vars_closed > 0 {
                eprintln!(
                    "c closed {} free variables existentially",
                    diags.free_vars_closed
                );
            }
            if diags.header_mismatch {
                eprintln!("c header clause count does not match the matrix");
            }
            Ok(psi)
        }
        Err(e) => Err(e.to_string()),
    }
}

fn dep_kind(name: &str) -> DepKind {
    match name {
        "trivial" => DepKind::Trivial,
        _ => DepKind::Standard,
    }
}

fn verdict_line(v: Verdict) -> (&'static str, u8) {
    match v {
        Verdict::Sat => ("s cnf 1", 10),
        Verdict::Unsat => ("s cnf 0", 20),
        Verdict::Unknown(_) => ("s cnf -1", 0),
    }
}

fn run_solve(args: &SolveArgs) -> ExitCode {
    // Variant matrix: --ldq enforces the trivial scheme and rejects an
    // explicit request for the standard one.
    if args.ldq && args.dep.as_deref() == Some("std") {
        return usage_error("--ldq cannot be combined with --dep=std");
    }
    let cfg = SolverConfig {
        use_gen_clause_axiom: !(args.no_gen_cl || args.no_gen),
        use_gen_cube_axiom: !(args.no_gen_cu || args.no_gen),
        use_qbce: !(args.no_qbce || args.no_gen),
        dep_scheme: match &args.dep {
            Some(d) => dep_kind(d),
            None if args.ldq => DepKind::Trivial,
            None => DepKind::Standard,
        },
        ldq: args.ldq,
        trace: args.trace.is_some() || args.check,
        max_conflicts: args.max_conflicts,
        max_decisions: args.max_decisions,
        max_seconds: args.max_time,
        seed: args.seed,
        ..SolverConfig::default()
    };

    let bytes = match read_input(args.file.as_deref()) {
        Ok(b) => b,
        Err(e) => return usage_error(&e),
    };
    let psi = match parse_formula(&bytes) {
        Ok(p) => p,
        Err(e) => return usage_error(&e),
    };

    if args.oracle {
        let start = std::time::Instant::now();
        let verdict = match oracle::eval(&psi, OracleBudget::default()) {
            Ok(Truth::Sat) => Verdict::Sat,
            Ok(Truth::Unsat) => Verdict::Unsat,
            Err(e) => {
                eprintln!("c oracle gave up: {e}");
                Verdict::Unknown(qsolve::engine::LimitReason::Time)
            }
        };
        eprintln!("c time_seconds {:.3}", start.elapsed().as_secs_f64());
        let (line, code) = verdict_line(verdict);
        println!("{line}");
        return ExitCode::from(code);
    }

    let start = std::time::Instant::now();
    let dep = cfg.dep_scheme;
    let result = solve(&psi, cfg);
    let elapsed = start.elapsed().as_secs_f64();

    if let Some(trace) = &result.trace {
        let text = write_trace(trace);
        if let Some(path) = &args.trace {
            if let Err(e) = std::fs::write(path, &text) {
                return usage_error(&format!("cannot write {}: {e}", path.display()));
            }
        }
    }

    if args.stats {
        for (k, v) in result.stats.lines() {
            println!("c {k} {v}");
        }
    }
    eprintln!("c time_seconds {elapsed:.3}");

    let (line, code) = verdict_line(result.verdict);
    println!("{line}");

    if args.check {
        let trace = result.trace.as_ref().expect("trace collected for --check");
        let opts = CheckOptions {
            dep,
            recheck_gen_axioms_with_oracle: false,
            oracle_budget: OracleBudget::default(),
        };
        match result.verdict {
            Verdict::Unknown(_) => {
                eprintln!("c check skipped: run hit a limit, no complete proof");
            }
            _ => match check_proof(&psi, trace, &opts) {
                Ok(proved) if Some(proved) == result.verdict.truth() => {
                    eprintln!("c check ok");
                }
                Ok(proved) => {
                    eprintln!("error: trace proves {proved:?} but solver reported differently");
                    return ExitCode::from(3);
                }
                Err(e) => {
                    eprintln!("error: trace check failed: {e}");
                    return ExitCode::from(3);
                }
            },
        }
    }
    ExitCode::from(code)
}

fn run_check(args: &CheckArgs) -> ExitCode {
    let bytes = match std::fs::read(&args.formula) {
        Ok(b) => b,
        Err(e) => return usage_error(&format!("cannot read {}: {e}", args.formula.display())),
    };
    let psi = match parse_formula(&bytes) {
        Ok(p) => p,
        Err(e) => return usage_error(&e),
    };
    let trace_bytes = match std::fs::read(&args.trace) {
        Ok(b) => b,
        Err(e) => return usage_error(&format!("cannot read {}: {e}", args.trace.display())),
    };
    let trace = match parse_trace(&trace_bytes) {
        Ok(t) => t,
        Err(e) => return usage_error(&e.to_string()),
    };
    let opts = CheckOptions {
        dep: dep_kind(&args.dep),
        recheck_gen_axioms_with_oracle: args.recheck_gen,
        oracle_budget: OracleBudget::default(),
    };
    match check_proof(&psi, &trace, &opts) {
        Ok(verdict) => {
            println!(
                "valid {}",
                match verdict {
                    Truth::Sat => "sat",
                    Truth::Unsat => "unsat",
                }
            );
            ExitCode::from(0)
        }
        Err(e) => {
            eprintln!("invalid: {e}");
            ExitCode::from(3)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            // Help and version requests are not usage errors.
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::from(0);
            }
            eprint!("{e}");
            return ExitCode::from(1);
        }
    };
    match &cli.cmd {
        Some(Cmd::Bench(b)) => bench::run(b),
        Some(Cmd::Check(c)) => run_check(c),
        None => run_solve(&cli.solve),
    }
}
