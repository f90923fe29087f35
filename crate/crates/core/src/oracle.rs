//! Brute-force QBF evaluation by recursive expansion. This is the ground
//! truth for every differential test in the crate; it trades all performance
//! for auditability.

use crate::formula::{apply_assignment, Assignment, Lit, Pcnf, Quant};

/// Definite truth value of a closed PCNF.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Truth {
    Sat,
    Unsat,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct OracleBudget {
    pub max_nodes: u64,
}

impl Default for OracleBudget {
    fn default() -> Self {
        // Comfortable for ~20-variable instances.
        OracleBudget {
            max_nodes: 1 << 24,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct BudgetExceeded;

impl std::fmt::Display for BudgetExceeded {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "oracle recursion budget exceeded")
    }
}

impl std::error::Error for BudgetExceeded {}

fn eval_rec(psi: &Pcnf, nodes: &mut u64, max_nodes: u64) -> Result<Truth, BudgetExceeded> {
    if psi.clauses.is_empty() {
        return Ok(Truth::Sat);
    }
    if psi.has_empty_clause() {
        return Ok(Truth::Unsat);
    }
    *nodes += 1;
    if *nodes > max_nodes {
        return Err(BudgetExceeded);
    }
    let block = &psi.prefix.blocks()[0];
    // Deterministic recursion order: smallest variable id of the leftmost
    // block, positive branch first.
    let x = block.vars[0];
    let mut branch = |positive: bool| {
        let mut a = Assignment::new();
        a.assign(Lit::new(x, positive)).unwrap();
        eval_rec(&apply_assignment(psi, &a), nodes, max_nodes)
    };
    let pos = branch(true)?;
    match (block.quant, pos) {
        (Quant::Exists, Truth::Sat) => Ok(Truth::Sat),
        (Quant::Forall, Truth::Unsat) => Ok(Truth::Unsat),
        _ => branch(false),
    }
}

/// Evaluates a PCNF: empty matrix is true, an empty clause is false, and
/// otherwise the least prefix variable is split existentially (OR) or
/// universally (AND).
pub fn eval(psi: &Pcnf, budget: OracleBudget) -> Result<Truth, BudgetExceeded> {
    let mut nodes = 0;
    eval_rec(psi, &mut nodes, budget.max_nodes)
}

/// Evaluates `ψ[A]`.
pub fn eval_under(
    psi: &Pcnf,
    a: &Assignment,
    budget: OracleBudget,
) -> Result<Truth, BudgetExceeded> {
    eval(&apply_assignment(psi, a), budget)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::{Pcnf, Prefix, Quant, Var};

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
            .map(|c| c.into_iter().map(Lit::from_dimacs).collect())
            .collect();
        Pcnf::new(prefix, raw).0
    }

    fn ev(psi: &Pcnf) -> Truth {
        eval(psi, OracleBudget::default()).unwrap()
    }

    #[test]
    fn base_cases() {
        assert_eq!(ev(&Pcnf::empty()), Truth::Sat);
        let psi = pcnf(vec![(Quant::Exists, vec![1])], vec![vec![]]);
        assert_eq!(ev(&psi), Truth::Unsat);
    }

    #[test]
    fn universal_reduction_example_is_unsat() {
        // ∃x∀u.(x∨u)∧(¬x∨u): both x-branches leave ∀u.(u), false at u=⊥.
        let psi = pcnf(
            vec![(Quant::Exists, vec![1]), (Quant::Forall, vec![2])],
            vec![vec![1, 2], vec![-1, 2]],
        );
        assert_eq!(ev(&psi), Truth::Unsat);
    }

    #[test]
    fn dependent_existential_is_sat() {
        // ∀u∃e.(u∨e)∧(¬u∨¬e): e=¬u is a model.
        let psi = pcnf(
            vec![(Quant::Forall, vec![1]), (Quant::Exists, vec![2])],
            vec![vec![1, 2], vec![-1, -2]],
        );
        assert_eq!(ev(&psi), Truth::Sat);
        // ∀u∃x.(x∨u)∧(¬x∨¬u): x=⊤ for u=⊥, x=⊥ for u=⊤.
        let psi = pcnf(
            vec![(Quant::Forall, vec![1]), (Quant::Exists, vec![2])],
            vec![vec![2, 1], vec![-2, -1]],
        );
        assert_eq!(ev(&psi), Truth::Sat);
    }

    #[test]
    fn eval_under_examples() {
        let psi = pcnf(vec![(Quant::Exists, vec![1])], vec![vec![1]]);
        let a = Assignment::from_lits(&[Lit::from_dimacs(1)]).unwrap();
        assert_eq!(eval_under(&psi, &a, OracleBudget::default()).unwrap(), Truth::Sat);
        let a = Assignment::from_lits(&[Lit::from_dimacs(-1)]).unwrap();
        assert_eq!(
            eval_under(&psi, &a, OracleBudget::default()).unwrap(),
            Truth::Unsat
        );
    }

    #[test]
    fn budget_exceeded_is_reported() {
        let psi = pcnf(
            vec![(Quant::Forall, vec![1, 2, 3]), (Quant::Exists, vec![4])],
            vec![vec![1, 2, 3, 4]],
        );
        assert_eq!(
            eval(&psi, OracleBudget { max_nodes: 1 }),
            Err(BudgetExceeded)
        );
    }

    /// Independent second oracle: full game-tree evaluation assigning every
    /// prefix variable in order, without formula simplification. The matrix
    /// is only inspected at the leaves.
    fn game_eval(psi: &Pcnf, fixed: &mut Vec<Lit>) -> Truth {
        let vars: Vec<(Var, Quant)> = psi
            .prefix
            .blocks()
            .iter()
            .flat_map(|b| b.vars.iter().map(move |&v| (v, b.quant)))
            .collect();
        if fixed.len() == vars.len() {
            let a = Assignment::from_lits(fixed).unwrap();
            let all = psi.clauses.iter().all(|c| {
                c.lits().iter().any(|l| a.lit_value(*l) == Some(true))
            });
            return if all { Truth::Sat } else { Truth::Unsat };
        }
        let (v, q) = vars[fixed.len()];
        let mut outcomes = [Truth::Unsat, Truth::Unsat];
        for (i, positive) in [true, false].into_iter().enumerate() {
            fixed.push(Lit::new(v, positive));
            outcomes[i] = game_eval(psi, fixed);
            fixed.pop();
        }
        match q {
            Quant::Exists => {
                if outcomes.contains(&Truth::Sat) {
                    Truth::Sat
                } else {
                    Truth::Unsat
                }
            }
            Quant::Forall => {
                if outcomes.contains(&Truth::Unsat) {
                    Truth::Unsat
                } else {
                    Truth::Sat
                }
            }
        }
    }

    fn random_small(seed: u64, max_vars: u64) -> Pcnf {
        use crate::instgen::{random_pcnf, RandomParams};
        random_pcnf(
            seed,
            &RandomParams {
                min_blocks: 1,
                max_blocks: 3,
                min_vars: 2,
                max_vars,
                min_clauses: 1,
                max_clauses: 12,
                min_width: 1,
                max_width: 3,
            },
        )
    }

    #[test]
    fn agrees_with_game_evaluation() {
        for seed in 0..300u64 {
            let psi = random_small(0x9a8e_0000 + seed, 9);
            let expansion = eval(&psi, OracleBudget::default()).unwrap();
            let game = game_eval(&psi, &mut Vec::new());
            assert_eq!(expansion, game, "seed {seed}");
        }
    }

    #[test]
    fn branch_variable_choice_does_not_matter() {
        // Splitting any variable of the leftmost block yields the same
        // verdict as the default smallest-id split.
        fn eval_split_last(psi: &Pcnf) -> Truth {
            if psi.clauses.is_empty() {
                return Truth::Sat;
            }
            if psi.has_empty_clause() {
                return Truth::Unsat;
            }
            let block = &psi.prefix.blocks()[0];
            let x = *block.vars.last().unwrap();
            let branch = |positive: bool| {
                let mut a = Assignment::new();
                a.assign(Lit::new(x, positive)).unwrap();
                eval_split_last(&crate::formula::apply_assignment(psi, &a))
            };
            let pos = branch(true);
            match (block.quant, pos) {
                (Quant::Exists, Truth::Sat) => Truth::Sat,
                (Quant::Forall, Truth::Unsat) => Truth::Unsat,
                _ => branch(false),
            }
        }
        for seed in 0..300u64 {
            let psi = random_small(0xb0a2_0000 + seed, 10);
            assert_eq!(
                eval(&psi, OracleBudget::default()).unwrap(),
                eval_split_last(&psi),
                "seed {seed}"
            );
        }
    }

    #[test]
    fn eval_under_empty_assignment_agrees_with_eval() {
        for seed in 0..1000u64 {
            let psi = random_small(0xe0a1_0000 + seed, 10);
            assert_eq!(
                eval_under(&psi, &Assignment::new(), OracleBudget::default()),
                eval(&psi, OracleBudget::default()),
                "seed {seed}"
            );
        }
    }
}
