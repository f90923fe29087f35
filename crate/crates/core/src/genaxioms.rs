//! Incomplete semantic satisfiability checks backing the generalized
//! clause/cube axioms.
//!
//! Trivial truth: delete every universal literal from the matrix of ψ[A];
//! propositional satisfiability of the result proves ψ[A] satisfiable (the
//! constant existential model works against every universal play).
//!
//! Full-existential abstraction: treat every variable as existential and
//! solve the matrix plus learned clauses under A; propositional
//! unsatisfiability proves ψ[A] unsatisfiable. Refutations found here
//! amount to resolutions over universal pivots, which plain Q-resolution
//! learning cannot perform directly.
//!
//! Both checks run on persistent SAT cores. The assignment is passed as
//! assumptions instead of reloading clauses: for the trivial-truth core,
//! unassigned universals are additionally assumed false, which deletes them
//! from every clause.

use crate::formula::{Constraint, ConstraintKind, Lit, Pcnf, Quant, Var};
use crate::satcore::{SatCore, SatOutcome};

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum AbstractionOutcome {
    Established,
    NotEstablished,
    BudgetExhausted,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Witness {
    /// Constant existential model from the trivial-truth check, indexed by
    /// `Var::index()`.
    Model(Vec<bool>),
    /// The existential abstraction was refuted.
    Refutation,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct AbstractionResult {
    pub outcome: AbstractionOutcome,
    pub witness: Option<Witness>,
    /// SAT-core conflicts spent by this check.
    pub cost: u64,
}

/// Persistent checker owning one SAT core per check kind.
pub struct GenAxiomChecker {
    tt: SatCore,
    ea: SatCore,
    /// Matrix clauses, for recomputing which are satisfied under A.
    matrix: Vec<Vec<Lit>>,
    quant: Vec<Option<Quant>>,
    num_real_vars: u32,
    budget: u64,
}

impl GenAxiomChecker {
    pub fn new(psi: &Pcnf, budget: u64) -> GenAxiomChecker {
        let n = psi.max_var();
        let mut quant = vec![None; n as usize];
        for b in psi.prefix.blocks() {
            for &v in &b.vars {
                quant[v.index()] = Some(b.quant);
            }
        }
        // The trivial-truth core sees only existential literals; one
        // activation variable per clause turns clauses satisfied under A
        // off, mirroring their removal from ψ[A].
        let mut tt = SatCore::new(n + psi.clauses.len() as u32);
        let mut ea = SatCore::new(n);
        let mut matrix = Vec::with_capacity(psi.clauses.len());
        for (i, c) in psi.clauses.iter().enumerate() {
            let act = Lit::positive(Var::new(n + i as u32 + 1));
            let mut abstracted: Vec<Lit> = c
                .lits()
                .iter()
                .copied()
                .filter(|l| quant[l.var().index()] == Some(Quant::Exists))
                .collect();
            abstracted.push(act);
            tt.add_clause(&abstracted);
            ea.add_clause(c.lits());
            matrix.push(c.lits().to_vec());
        }
        GenAxiomChecker {
            tt,
            ea,
            matrix,
            quant,
            num_real_vars: n,
            budget,
        }
    }

    /// Learned clauses strengthen the unsat check; they are sound there
    /// because the learned store is satisfiability-equivalent to the input
    /// under any QCDCL assignment. Merged (long-distance) clauses are
    /// propositional tautologies and are skipped inside the core.
    pub fn add_learned_clause(&mut self, lits: &[Lit]) {
        self.ea.add_clause(lits);
    }

    /// Trivial truth: SAT of the universal-literal-deleted matrix of ψ[A]
    /// establishes that ψ[A] is satisfiable.
    pub fn check_sat_trivial_truth(&mut self, assigned: &[Lit]) -> AbstractionResult {
        let mut assumptions: Vec<Lit> = assigned
            .iter()
            .copied()
            .filter(|l| self.quant[l.var().index()] == Some(Quant::Exists))
            .collect();
        let true_under = |l: &Lit| {
            assigned
                .iter()
                .any(|a| a.var() == l.var() && a.is_positive() == l.is_positive())
        };
        for (i, c) in self.matrix.iter().enumerate() {
            let act = Lit::positive(Var::new(self.num_real_vars + i as u32 + 1));
            if c.iter().any(true_under) {
                assumptions.push(act); // clause removed from the view
            } else {
                assumptions.push(!act);
            }
        }
        let (out, cost) = self.tt.solve(&assumptions, self.budget);
        match out {
            SatOutcome::Sat(model) => AbstractionResult {
                outcome: AbstractionOutcome::Established,
                witness: Some(Witness::Model(
                    model[..self.num_real_vars as usize].to_vec(),
                )),
                cost,
            },
            SatOutcome::Unsat => AbstractionResult {
                outcome: AbstractionOutcome::NotEstablished,
                witness: None,
                cost,
            },
            SatOutcome::Budget => AbstractionResult {
                outcome: AbstractionOutcome::BudgetExhausted,
                witness: None,
                cost,
            },
        }
    }

    /// Full-existential abstraction: UNSAT of matrix plus learned clauses
    /// under A establishes that ψ[A] is unsatisfiable.
    pub fn check_unsat_existential_abstraction(&mut self, assigned: &[Lit]) -> AbstractionResult {
        let (out, cost) = self.ea.solve(assigned, self.budget);
        match out {
            SatOutcome::Unsat => AbstractionResult {
                outcome: AbstractionOutcome::Established,
                witness: Some(Witness::Refutation),
                cost,
            },
            SatOutcome::Sat(_) => AbstractionResult {
                outcome: AbstractionOutcome::NotEstablished,
                witness: None,
                cost,
            },
            SatOutcome::Budget => AbstractionResult {
                outcome: AbstractionOutcome::BudgetExhausted,
                witness: None,
                cost,
            },
        }
    }
}

/// One-shot trivial-truth check over ψ[A] (fresh SAT core).
pub fn check_sat_trivial_truth(psi: &Pcnf, assigned: &[Lit], budget: u64) -> AbstractionResult {
    GenAxiomChecker::new(psi, budget).check_sat_trivial_truth(assigned)
}

/// One-shot full-existential abstraction check over ψ[A] plus optional
/// learned clauses (fresh SAT core).
pub fn check_unsat_existential_abstraction(
    psi: &Pcnf,
    learned: &[Vec<Lit>],
    assigned: &[Lit],
    budget: u64,
) -> AbstractionResult {
    let mut ch = GenAxiomChecker::new(psi, budget);
    for c in learned {
        ch.add_learned_clause(c);
    }
    ch.check_unsat_existential_abstraction(assigned)
}

/// Builds the constraint a generalized axiom derives from a QCDCL
/// assignment: the clause of negated trail literals, or the cube of trail
/// literals.
pub fn derive_generalized_constraint(
    assigned: &[Lit],
    which: ConstraintKind,
    psi: &Pcnf,
) -> Constraint {
    let lits: Vec<Lit> = match which {
        ConstraintKind::Clause => assigned.iter().map(|&l| !l).collect(),
        ConstraintKind::Cube => assigned.to_vec(),
    };
    Constraint::new(which, lits, &psi.prefix)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::{Pcnf, Prefix};
    use crate::oracle::{self, OracleBudget, Truth};

    fn lit(l: i64) -> Lit {
        Lit::from_dimacs(l)
    }

    fn pcnf(blocks: Vec<(Quant, Vec<u32>)>, clauses: Vec<Vec<i64>>) -> Pcnf {
        let prefix = Prefix::new(
            blocks
                .into_iter()
                .map(|(q, vs)| (q, vs.into_iter().map(Var::new).collect()))
                .collect(),
        )
        .unwrap();
        let raw = clauses
            .into_iter()
            .map(|c| c.into_iter().map(lit).collect())
            .collect();
        Pcnf::new(prefix, raw).0
    }

    #[test]
    fn trivial_truth_establishes_constant_model() {
        // ∀u∃e.(e∨u)∧(e∨¬u): abstraction (e)∧(e) is SAT.
        let psi = pcnf(
            vec![(Quant::Forall, vec![1]), (Quant::Exists, vec![2])],
            vec![vec![2, 1], vec![2, -1]],
        );
        let r = check_sat_trivial_truth(&psi, &[], 1000);
        assert_eq!(r.outcome, AbstractionOutcome::Established);
        match r.witness {
            Some(Witness::Model(m)) => assert!(m[1], "constant e=⊤ expected"),
            other => panic!("expected model, got {other:?}"),
        }
    }

    #[test]
    fn trivial_truth_incomplete_on_dependent_sat() {
        // ∀u∃e.(u∨e)∧(¬u∨¬e): abstraction (e)∧(¬e) UNSAT, but the QBF is
        // SAT — the check says nothing.
        let psi = pcnf(
            vec![(Quant::Forall, vec![1]), (Quant::Exists, vec![2])],
            vec![vec![1, 2], vec![-1, -2]],
        );
        let r = check_sat_trivial_truth(&psi, &[], 1000);
        assert_eq!(r.outcome, AbstractionOutcome::NotEstablished);
        assert_eq!(
            oracle::eval(&psi, OracleBudget::default()).unwrap(),
            Truth::Sat
        );
    }

    #[test]
    fn budget_zero_exhausts() {
        // With a zero conflict budget, any instance that needs search
        // reports exhaustion.
        let psi = pcnf(
            vec![(Quant::Exists, vec![1, 2, 3])],
            vec![
                vec![1, 2],
                vec![-1, 3],
                vec![-2, -3],
                vec![1, 3],
                vec![-1, -3],
            ],
        );
        let r = check_sat_trivial_truth(&psi, &[], 0);
        assert_eq!(r.outcome, AbstractionOutcome::BudgetExhausted);
    }

    #[test]
    fn existential_abstraction_establishes_unsat() {
        // ∀u∃e with all four clauses over {u,e}: plain CNF UNSAT.
        let psi = pcnf(
            vec![(Quant::Forall, vec![1]), (Quant::Exists, vec![2])],
            vec![vec![1, 2], vec![1, -2], vec![-1, 2], vec![-1, -2]],
        );
        let r = check_unsat_existential_abstraction(&psi, &[], &[], 1000);
        assert_eq!(r.outcome, AbstractionOutcome::Established);
        assert_eq!(r.witness, Some(Witness::Refutation));
    }

    #[test]
    fn existential_abstraction_incomplete_on_unsat() {
        // ∃x∀u.(x∨u)∧(¬x∨u): plain CNF SAT at u=⊤, but the QBF is UNSAT.
        let psi = pcnf(
            vec![(Quant::Exists, vec![1]), (Quant::Forall, vec![2])],
            vec![vec![1, 2], vec![-1, 2]],
        );
        let r = check_unsat_existential_abstraction(&psi, &[], &[], 1000);
        assert_eq!(r.outcome, AbstractionOutcome::NotEstablished);
        assert_eq!(
            oracle::eval(&psi, OracleBudget::default()).unwrap(),
            Truth::Unsat
        );
    }

    #[test]
    fn derive_generalized_constraints() {
        let psi = pcnf(
            vec![(Quant::Exists, vec![1]), (Quant::Forall, vec![2])],
            vec![vec![1, 2]],
        );
        let assigned = [lit(1), lit(-2)];
        let cl = derive_generalized_constraint(&assigned, ConstraintKind::Clause, &psi);
        assert_eq!(cl.lits(), &[lit(-1), lit(2)]);
        let cu = derive_generalized_constraint(&assigned, ConstraintKind::Cube, &psi);
        assert_eq!(cu.lits(), &[lit(1), lit(-2)]);
        let empty = derive_generalized_constraint(&[], ConstraintKind::Clause, &psi);
        assert!(empty.is_empty());
    }

    #[test]
    fn monotone_in_budget() {
        let psi = pcnf(
            vec![(Quant::Forall, vec![1, 2]), (Quant::Exists, vec![3, 4])],
            vec![
                vec![3, 1],
                vec![3, -1, 4],
                vec![-3, 4, 2],
                vec![-3, -4],
                vec![4, -2, 3],
            ],
        );
        let mut established_at: Option<u64> = None;
        for budget in [0u64, 1, 2, 5, 10, 100, 1000] {
            let r = check_sat_trivial_truth(&psi, &[], budget);
            if r.outcome == AbstractionOutcome::Established {
                established_at.get_or_insert(budget);
            }
            if let Some(b) = established_at {
                if budget >= b {
                    assert_eq!(
                        r.outcome,
                        AbstractionOutcome::Established,
                        "monotone budget violated at {budget}"
                    );
                }
            }
        }
    }

    #[test]
    fn soundness_against_oracle_under_assignments() {
        // Both checks, when they establish, must agree with the expansion
        // oracle on ψ[A].
        let mut seed = 0x5eed_cafe_u64;
        let mut next = || {
            seed ^= seed << 13;
            seed ^= seed >> 7;
            seed ^= seed << 17;
            seed
        };
        for _ in 0..400 {
            let nvars = 3 + (next() % 6) as u32;
            let mut blocks: Vec<(Quant, Vec<u32>)> = Vec::new();
            let mut q = if next() % 2 == 0 { Quant::Forall } else { Quant::Exists };
            let nblocks = 2 + next() % 2;
            for _ in 0..nblocks {
                blocks.push((q, Vec::new()));
                q = q.dual();
            }
            for v in 1..=nvars {
                let b = (next() % nblocks) as usize;
                blocks[b].1.push(v);
            }
            let nclauses = 2 + next() % 8;
            let mut clauses = Vec::new();
            for _ in 0..nclauses {
                let w = 1 + next() % 3;
                let mut c = Vec::new();
                for _ in 0..w {
                    let v = 1 + (next() % u64::from(nvars)) as i64;
                    c.push(if next() % 2 == 0 { v } else { -v });
                }
                clauses.push(c);
            }
            let psi = pcnf(blocks, clauses);
            // Random partial assignment in prefix order (a legal QCDCL
            // decision prefix).
            let mut assigned = Vec::new();
            'outer: for b in psi.prefix.blocks() {
                for &v in &b.vars {
                    if next() % 3 == 0 {
                        break 'outer;
                    }
                    assigned.push(Lit::new(v, next() % 2 == 0));
                }
            }
            let a = crate::formula::Assignment::from_lits(&assigned).unwrap();
            let under = crate::formula::apply_assignment(&psi, &a);
            if under.has_empty_clause() {
                continue;
            }
            let truth = oracle::eval(&under, OracleBudget::default()).unwrap();
            let tt = check_sat_trivial_truth(&psi, &assigned, 10_000);
            if tt.outcome == AbstractionOutcome::Established {
                assert_eq!(truth, Truth::Sat, "trivial truth unsound");
            }
            let ea = check_unsat_existential_abstraction(&psi, &[], &assigned, 10_000);
            if ea.outcome == AbstractionOutcome::Established {
                assert_eq!(truth, Truth::Unsat, "existential abstraction unsound");
            }
        }
    }
}
