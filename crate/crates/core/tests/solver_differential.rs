//! Medium-scale differential tests: every variant configuration must agree
//! with the expansion oracle, and every emitted trace must check out. The
//! acceptance suite runs the same checks at full scale; this suite is the
//! fast regression net with all internal audits switched on.

use qsolve::engine::{solve, SolverConfig, Verdict};
use qsolve::instgen::{random_pcnf, RandomParams};
use qsolve::oracle::{self, OracleBudget};
use qsolve::proof::{check_proof, parse_trace, write_trace, CheckOptions};

#[test]
fn variants_agree_with_oracle_with_audits_on() {
    let params = RandomParams::default();
    let budget = OracleBudget::default();
    for seed in 0..300u64 {
        let psi = random_pcnf(0x5eed_0000 + seed, &params);
        let truth = oracle::eval(&psi, budget).expect("oracle budget");
        for name in SolverConfig::preset_names() {
            let mut cfg = SolverConfig::preset(name).unwrap();
            cfg.trace = true;
            cfg.check_fixpoint = true;
            cfg.qbce_differential = true;
            cfg.max_conflicts = Some(200_000);
            let dep = cfg.dep_scheme;
            let r = solve(&psi, cfg);
            assert_eq!(
                r.verdict.truth(),
                Some(truth),
                "seed {seed} variant {name}: solver disagrees with oracle"
            );
            let trace = r.trace.unwrap();
            let text = write_trace(&trace);
            let parsed = parse_trace(text.as_bytes()).expect("trace parses");
            assert_eq!(parsed.steps, trace.steps, "trace round trip");
            let opts = CheckOptions {
                dep,
                recheck_gen_axioms_with_oracle: true,
                oracle_budget: budget,
            };
            let proved = check_proof(&psi, &parsed, &opts)
                .unwrap_or_else(|e| panic!("seed {seed} variant {name}: invalid trace: {e}"));
            assert_eq!(proved, truth, "seed {seed} variant {name}: proof verdict");
        }
    }
}

#[test]
fn variants_agree_with_oracle_on_varied_shapes() {
    let shapes = [
        // Single existential block (plain SAT instances).
        RandomParams {
            min_blocks: 1,
            max_blocks: 1,
            min_vars: 4,
            max_vars: 10,
            min_clauses: 5,
            max_clauses: 30,
            min_width: 2,
            max_width: 3,
        },
        // Deep alternation, almost one variable per block.
        RandomParams {
            min_blocks: 5,
            max_blocks: 8,
            min_vars: 8,
            max_vars: 12,
            min_clauses: 8,
            max_clauses: 30,
            min_width: 2,
            max_width: 4,
        },
        // Unit-heavy narrow clauses.
        RandomParams {
            min_blocks: 2,
            max_blocks: 3,
            min_vars: 5,
            max_vars: 10,
            min_clauses: 10,
            max_clauses: 25,
            min_width: 1,
            max_width: 2,
        },
        // Wide clauses.
        RandomParams {
            min_blocks: 2,
            max_blocks: 4,
            min_vars: 8,
            max_vars: 12,
            min_clauses: 6,
            max_clauses: 20,
            min_width: 4,
            max_width: 6,
        },
    ];
    let budget = OracleBudget::default();
    for (si, params) in shapes.iter().enumerate() {
        for seed in 0..150u64 {
            let psi = random_pcnf(((0x517a_0000 + si as u64) << 16) | seed, params);
            let truth = oracle::eval(&psi, budget).expect("oracle budget");
            for name in SolverConfig::preset_names() {
                let mut cfg = SolverConfig::preset(name).unwrap();
                cfg.check_fixpoint = true;
                cfg.qbce_differential = true;
                cfg.max_conflicts = Some(200_000);
                let r = solve(&psi, cfg);
                assert_eq!(
                    r.verdict.truth(),
                    Some(truth),
                    "shape {si} seed {seed} variant {name}"
                );
            }
        }
    }
}

#[test]
fn fuzzed_configurations_with_audits_agree_with_oracle() {
    use qsolve::depsched::DepKind;
    use qsolve::instgen::Rng;
    let params = RandomParams::default();
    let budget = OracleBudget::default();
    for seed in 0..200u64 {
        let psi = random_pcnf(0xf220_0000u64 + seed, &params);
        let truth = oracle::eval(&psi, budget).expect("oracle budget");
        let mut rng = Rng::new(seed ^ 0xc0f1_6000);
        for k in 0..3 {
            let ldq = rng.below(4) == 0;
            let cfg = SolverConfig {
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
                max_conflicts: Some(200_000),
                check_fixpoint: true,
                qbce_differential: true,
                ..SolverConfig::default()
            };
            let r = solve(&psi, cfg.clone());
            assert_eq!(
                r.verdict.truth(),
                Some(truth),
                "seed {seed} fuzz {k}: {cfg:?}"
            );
        }
    }
}

#[test]
fn reference_verdicts_on_handcrafted_instances() {
    // ∃x∀u.(x∨u)∧(¬x∨u) → UNSAT; ∀u∃e.(u∨e)∧(¬u∨¬e) → SAT.
    let cases: &[(&[u8], Verdict)] = &[
        (b"p cnf 2 2\ne 1 0\na 2 0\n1 2 0\n-1 2 0\n", Verdict::Unsat),
        (b"p cnf 2 2\na 1 0\ne 2 0\n1 2 0\n-1 -2 0\n", Verdict::Sat),
        (b"p cnf 2 0\ne 1 0\na 2 0\n", Verdict::Sat),
        (b"p cnf 1 1\ne 1 0\n0\n", Verdict::Unsat),
    ];
    for (text, expect) in cases {
        let (psi, _) = qsolve::qdimacs::parse(text).unwrap();
        for name in SolverConfig::preset_names() {
            let cfg = SolverConfig::preset(name).unwrap();
            assert_eq!(solve(&psi, cfg).verdict, *expect, "variant {name}");
        }
    }
}
