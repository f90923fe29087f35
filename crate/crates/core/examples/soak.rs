//! Long randomized soak: verdicts against the oracle across presets and
//! fuzzed configurations. Not part of the test suite; run manually:
//!
//! ```text
//! cargo run --release -p qsolve --example soak -- 20000
//! ```

use qsolve::depsched::DepKind;
use qsolve::engine::{solve, SolverConfig};
use qsolve::instgen::{random_pcnf, RandomParams, Rng};
use qsolve::oracle::{self, OracleBudget};
use std::sync::atomic::{AtomicU64, Ordering};

fn shape(i: u64) -> RandomParams {
    match i % 5 {
        0 => RandomParams::default(),
        1 => RandomParams {
            min_blocks: 1,
            max_blocks: 1,
            min_vars: 4,
            max_vars: 10,
            min_clauses: 5,
            max_clauses: 30,
            min_width: 2,
            max_width: 3,
        },
        2 => RandomParams {
            min_blocks: 5,
            max_blocks: 8,
            min_vars: 8,
            max_vars: 12,
            min_clauses: 8,
            max_clauses: 30,
            min_width: 2,
            max_width: 4,
        },
        3 => RandomParams {
            min_blocks: 2,
            max_blocks: 3,
            min_vars: 5,
            max_vars: 10,
            min_clauses: 10,
            max_clauses: 25,
            min_width: 1,
            max_width: 2,
        },
        _ => RandomParams {
            min_blocks: 2,
            max_blocks: 4,
            min_vars: 8,
            max_vars: 12,
            min_clauses: 6,
            max_clauses: 20,
            min_width: 4,
            max_width: 6,
        },
    }
}

fn fuzz_config(rng: &mut Rng) -> SolverConfig {
    let ldq = rng.below(4) == 0;
    SolverConfig {
        use_gen_clause_axiom: rng.flip(),
        use_gen_cube_axiom: rng.flip(),
        use_qbce: rng.flip(),
        dep_scheme: if ldq || rng.flip() {
            DepKind::Trivial
        } else {
            DepKind::Standard
        },
        ldq,
        sat_budget: [0, 3, 50, 1000][rng.below(4) as usize],
        qbce_include_learned: rng.below(8) == 0,
        seed: rng.next_u64(),
        max_conflicts: Some(500_000),
        ..SolverConfig::default()
    }
}

fn main() {
    let n: u64 = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(20_000);
    let verbose = std::env::var("SOAK_VERBOSE").is_ok();
    let done = AtomicU64::new(0);
    let next = AtomicU64::new(0);
    let jobs = std::thread::available_parallelism()
        .map(|p| p.get())
        .unwrap_or(4);
    std::thread::scope(|scope| {
        for _ in 0..jobs {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= n {
                    break;
                }
                let psi = random_pcnf(0x50a7_50a7u64 ^ i.wrapping_mul(2654435761), &shape(i));
                let truth = oracle::eval(&psi, OracleBudget::default()).expect("oracle");
                for name in SolverConfig::preset_names() {
                    if verbose {
                        eprintln!("i={i} preset {name}");
                    }
                    let mut cfg = SolverConfig::preset(name).unwrap();
                    cfg.max_conflicts = Some(500_000);
                    let r = solve(&psi, cfg);
                    assert_eq!(r.verdict.truth(), Some(truth), "instance {i} preset {name}");
                }
                let mut rng = Rng::new(i ^ 0xf022_f022u64);
                for k in 0..3 {
                    let cfg = fuzz_config(&mut rng);
                    if verbose {
                        eprintln!("i={i} fuzz {k}: {cfg:?}");
                    }
                    let r = solve(&psi, cfg.clone());
                    assert_eq!(
                        r.verdict.truth(),
                        Some(truth),
                        "instance {i} fuzz {k}: {cfg:?}"
                    );
                }
                let d = done.fetch_add(1, Ordering::Relaxed) + 1;
                if d.is_multiple_of(1000) {
                    eprintln!("{d}/{n}");
                }
            });
        }
    });
    println!("soak ok: {n} instances x (7 presets + 3 fuzzed configs)");
}
