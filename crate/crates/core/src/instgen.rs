//! Seeded instance generation for testing and benchmarking: random small
//! PCNFs, random legal decision prefixes, and a crafted family on which
//! generalized cube derivations shortcut deep cube enumeration.

use crate::formula::{Lit, Pcnf, Prefix, Quant, Var};

/// SplitMix64: tiny deterministic PRNG for reproducible generation.
#[derive(Clone, Debug)]
pub struct Rng {
    state: u64,
}

impl Rng {
    pub fn new(seed: u64) -> Rng {
        Rng { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    /// Uniform in `0..n` (n > 0).
    pub fn below(&mut self, n: u64) -> u64 {
        self.next_u64() % n
    }

    pub fn range(&mut self, lo: u64, hi: u64) -> u64 {
        lo + self.below(hi - lo + 1)
    }

    pub fn flip(&mut self) -> bool {
        self.next_u64() & 1 == 1
    }
}

#[derive(Clone, Copy, Debug)]
pub struct RandomParams {
    pub min_blocks: u64,
    pub max_blocks: u64,
    pub min_vars: u64,
    pub max_vars: u64,
    pub min_clauses: u64,
    pub max_clauses: u64,
    pub min_width: u64,
    pub max_width: u64,
}

impl Default for RandomParams {
    fn default() -> Self {
        RandomParams {
            min_blocks: 2,
            max_blocks: 4,
            min_vars: 6,
            max_vars: 14,
            min_clauses: 10,
            max_clauses: 40,
            min_width: 2,
            max_width: 4,
        }
    }
}

/// A random PCNF with the given shape. Every block is nonempty; clause
/// literals have distinct variables, so no tautologies arise.
pub fn random_pcnf(seed: u64, params: &RandomParams) -> Pcnf {
    let mut rng = Rng::new(seed);
    let nblocks = rng.range(params.min_blocks, params.max_blocks);
    let nvars = rng.range(params.min_vars.max(nblocks), params.max_vars);
    let mut block_of: Vec<usize> = (0..nvars)
        .map(|i| {
            if i < nblocks {
                i as usize // every block gets at least one variable
            } else {
                rng.below(nblocks) as usize
            }
        })
        .collect();
    // Shuffle variable-to-block mapping.
    for i in (1..block_of.len()).rev() {
        let j = rng.below(i as u64 + 1) as usize;
        block_of.swap(i, j);
    }
    let first_quant = if rng.flip() { Quant::Forall } else { Quant::Exists };
    let mut blocks: Vec<(Quant, Vec<Var>)> = (0..nblocks)
        .map(|i| {
            let q = if i % 2 == 0 { first_quant } else { first_quant.dual() };
            (q, Vec::new())
        })
        .collect();
    for (i, &b) in block_of.iter().enumerate() {
        blocks[b].1.push(Var::new(i as u32 + 1));
    }
    let prefix = Prefix::new(blocks).unwrap();

    let nclauses = rng.range(params.min_clauses, params.max_clauses);
    let mut clauses = Vec::with_capacity(nclauses as usize);
    for _ in 0..nclauses {
        let width = rng.range(params.min_width, params.max_width).min(nvars);
        let mut vars: Vec<u32> = Vec::new();
        while (vars.len() as u64) < width {
            let v = rng.range(1, nvars) as u32;
            if !vars.contains(&v) {
                vars.push(v);
            }
        }
        let clause: Vec<Lit> = vars
            .into_iter()
            .map(|v| Lit::new(Var::new(v), rng.flip()))
            .collect();
        clauses.push(clause);
    }
    Pcnf::new(prefix, clauses).0
}

/// A random decision prefix legal under the prefix order (and therefore
/// under any dependency relation whose decision rule it refines): variables
/// are assigned block by block with random polarities, stopping early at
/// random.
pub fn random_decision_prefix(psi: &Pcnf, rng: &mut Rng) -> Vec<Lit> {
    let mut out = Vec::new();
    for b in psi.prefix.blocks() {
        for &v in &b.vars {
            if rng.below(4) == 0 {
                return out;
            }
            out.push(Lit::new(v, rng.flip()));
        }
    }
    out
}

/// Deep-search family: prefix ∀u₁∃e₁…∀uₙ∃eₙ with clauses (uᵢ∨eᵢ) and
/// (¬uᵢ∨eᵢ). Deleting all universal literals leaves the satisfiable CNF
/// {(eᵢ)}, so the trivial-truth check fires immediately; without
/// generalized axioms, cube learning enumerates the 2ⁿ universal plays.
/// `perm_seed` renumbers variables to diversify instances.
pub fn deep_family_instance(layers: u32, perm_seed: u64) -> Pcnf {
    let n = 2 * layers;
    let mut perm: Vec<u32> = (1..=n).collect();
    let mut rng = Rng::new(perm_seed ^ 0xdeef_0000);
    for i in (1..perm.len()).rev() {
        let j = rng.below(i as u64 + 1) as usize;
        perm.swap(i, j);
    }
    let var = |orig: u32| Var::new(perm[(orig - 1) as usize]);
    let mut blocks = Vec::new();
    let mut clauses = Vec::new();
    for i in 0..layers {
        let u = var(2 * i + 1);
        let e = var(2 * i + 2);
        blocks.push((Quant::Forall, vec![u]));
        blocks.push((Quant::Exists, vec![e]));
        clauses.push(vec![Lit::positive(u), Lit::positive(e)]);
        clauses.push(vec![Lit::negative(u), Lit::positive(e)]);
    }
    let prefix = Prefix::new(blocks).unwrap();
    Pcnf::new(prefix, clauses).0
}

/// Family on which dependency-aware reduction strictly refines the prefix
/// order. Per copy, over Π = ∃q,p ∀u ∃e,f:
///
/// ```text
/// (q)  (¬q ∨ e)  (¬q ∨ ¬f)  (¬q ∨ p ∨ ¬e)  (¬q ∨ ¬p ∨ u ∨ f)
/// ```
///
/// Everything propagates at level 0 and the last clause is falsified with u
/// unassigned. Conflict analysis resolves out p (importing ¬e from its
/// reason), then f (whose own clause keeps u alive until then), reaching
/// the resolvent (¬q ∨ u ∨ ¬e). The variables u and e share no clause and
/// no connecting existential right of u, so u reduces under the standard
/// scheme although e sits to its right — a reduction the prefix-order rule
/// forbids, witnessed as an explicit step in every trace of a
/// standard-scheme run. The instance is unsatisfiable.
pub fn dep_refinement_instance(perm_seed: u64) -> Pcnf {
    let copies = 1 + (perm_seed % 3) as u32;
    let n = 1 + 4 * copies;
    let mut perm: Vec<u32> = (1..=n).collect();
    let mut rng = Rng::new(perm_seed ^ 0x00de_b15e);
    for i in (1..perm.len()).rev() {
        let j = rng.below(i as u64 + 1) as usize;
        perm.swap(i, j);
    }
    let var = |orig: u32| Var::new(perm[(orig - 1) as usize]);
    let q = var(1);
    let mut outer = vec![q];
    let mut universals = Vec::new();
    let mut inner = Vec::new();
    let mut clauses = vec![vec![Lit::positive(q)]];
    for c in 0..copies {
        let p = var(2 + 4 * c);
        let u = var(3 + 4 * c);
        let e = var(4 + 4 * c);
        let f = var(5 + 4 * c);
        outer.push(p);
        universals.push(u);
        inner.push(e);
        inner.push(f);
        clauses.push(vec![Lit::negative(q), Lit::positive(e)]);
        clauses.push(vec![Lit::negative(q), Lit::negative(f)]);
        clauses.push(vec![Lit::negative(q), Lit::positive(p), Lit::negative(e)]);
        clauses.push(vec![
            Lit::negative(q),
            Lit::negative(p),
            Lit::positive(u),
            Lit::positive(f),
        ]);
    }
    let blocks = vec![
        (Quant::Exists, outer),
        (Quant::Forall, universals),
        (Quant::Exists, inner),
    ];
    let prefix = Prefix::new(blocks).unwrap();
    Pcnf::new(prefix, clauses).0
}

/// Pigeonhole principle embedded in a QBF: an unsatisfiable purely
/// existential core (pigeons+1 into holes) behind which a universal toggle
/// and an inner existential keep the instance genuinely quantified. The
/// core has no unit clauses, so propagation is quiet at the top level, the
/// trivial-truth abstraction fails, and the full-existential abstraction
/// refutes the core outright: the generalized clause axiom fires on the
/// empty assignment.
pub fn php_qbf(holes: u32) -> Pcnf {
    let pigeons = holes + 1;
    let x = |p: u32, h: u32| Var::new(p * holes + h + 1);
    let u = Var::new(pigeons * holes + 1);
    let t = Var::new(pigeons * holes + 2);
    let mut clauses: Vec<Vec<Lit>> = Vec::new();
    for p in 0..pigeons {
        clauses.push((0..holes).map(|h| Lit::positive(x(p, h))).collect());
    }
    for h in 0..holes {
        for p1 in 0..pigeons {
            for p2 in p1 + 1..pigeons {
                clauses.push(vec![Lit::negative(x(p1, h)), Lit::negative(x(p2, h))]);
            }
        }
    }
    clauses.push(vec![Lit::positive(u), Lit::positive(t)]);
    clauses.push(vec![Lit::negative(u), Lit::positive(t)]);
    let blocks = vec![
        (
            Quant::Exists,
            (0..pigeons * holes).map(|i| Var::new(i + 1)).collect(),
        ),
        (Quant::Forall, vec![u]),
        (Quant::Exists, vec![t]),
    ];
    let prefix = Prefix::new(blocks).unwrap();
    Pcnf::new(prefix, clauses).0
}

/// Instance whose only refutation under the linear prefix order either
/// merges a universal variable (long-distance resolution) or defers the
/// pivot to an earlier literal: over Π = ∃q ∀u ∃e,f with
///
/// ```text
/// (f)  (e)  (q ∨ ¬u ∨ ¬f)  (¬q ∨ u ∨ ¬e)
/// ```
///
/// everything propagates at level 0 and the last clause is falsified with
/// u unassigned. Resolving on q immediately merges u (the pivot lies left
/// of u); traditional learning must skip that pivot and eliminate e and f
/// first.
pub fn ldq_merge_instance() -> Pcnf {
    let q = Var::new(1);
    let u = Var::new(2);
    let e = Var::new(3);
    let f = Var::new(4);
    let clauses = vec![
        vec![Lit::positive(f)],
        vec![Lit::positive(e)],
        vec![Lit::positive(q), Lit::negative(u), Lit::negative(f)],
        vec![Lit::negative(q), Lit::positive(u), Lit::negative(e)],
    ];
    let blocks = vec![
        (Quant::Exists, vec![q]),
        (Quant::Forall, vec![u]),
        (Quant::Exists, vec![e, f]),
    ];
    let prefix = Prefix::new(blocks).unwrap();
    Pcnf::new(prefix, clauses).0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{self, OracleBudget, Truth};

    #[test]
    fn random_pcnf_is_reproducible_and_well_formed() {
        let p = RandomParams::default();
        let a = random_pcnf(42, &p);
        let b = random_pcnf(42, &p);
        assert_eq!(a, b);
        let c = random_pcnf(43, &p);
        assert_ne!(a, c);
        for seed in 0..50 {
            let psi = random_pcnf(seed, &p);
            assert!(psi.prefix.blocks().len() >= 2);
            for w in psi.prefix.blocks().windows(2) {
                assert_ne!(w[0].quant, w[1].quant);
            }
            for cl in &psi.clauses {
                assert!(cl.merged().is_empty());
            }
        }
    }

    #[test]
    fn deep_family_is_sat_and_trivially_true() {
        for layers in [2u32, 4, 8] {
            let psi = deep_family_instance(layers, 1);
            assert_eq!(
                oracle::eval(&psi, OracleBudget::default()).unwrap(),
                Truth::Sat
            );
            // Universal-literal-deleted matrix is satisfiable.
            let r = crate::genaxioms::check_sat_trivial_truth(&psi, &[], 10_000);
            assert_eq!(
                r.outcome,
                crate::genaxioms::AbstractionOutcome::Established
            );
        }
    }

    #[test]
    fn dep_refinement_instance_is_unsat() {
        for seed in 0..6 {
            let psi = dep_refinement_instance(seed);
            assert_eq!(
                oracle::eval(&psi, OracleBudget::default()).unwrap(),
                Truth::Unsat
            );
        }
    }
}
