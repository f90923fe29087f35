//! Dynamic blocked clause elimination.
//!
//! A clause C is blocked on an unassigned existential literal l when every
//! non-satisfied, non-blocked clause D with l̄ ∈ D has a witness k ∈ C\{l}
//! with k̄ ∈ D, var(k) unassigned, and k ≤_Π l. Blocked clauses are
//! temporarily removed from the formula: propagation must not use them, and
//! solution detection treats them as satisfied.
//!
//! Status is maintained incrementally across assignments and unassignments.
//! Blocked clauses live on a stack in derivation order; after an event the
//! stack is revalidated bottom-up (an entry may only cite satisfied clauses
//! and entries below itself) and a monotone grow phase re-blocks whatever
//! became blockable. A from-scratch fixpoint serves as the differential
//! oracle. Learned clauses are excluded from the blocking view on both
//! sides unless explicitly registered.

use crate::formula::{Lit, Pcnf, Quant, Var};

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum ClauseState {
    Active,
    Blocked(Lit),
    SatisfiedByTrail,
}

impl ClauseState {
    pub fn kind(self) -> u8 {
        match self {
            ClauseState::Active => 0,
            ClauseState::Blocked(_) => 1,
            ClauseState::SatisfiedByTrail => 2,
        }
    }
}

#[derive(Clone, Debug)]
struct QClause {
    lits: Vec<Lit>,
    state: ClauseState,
    n_sat: u32,
    deleted: bool,
}

#[derive(Clone, Debug)]
pub struct QbceState {
    clauses: Vec<QClause>,
    // occ[lit.index()] = ids of clauses containing lit.
    occ: Vec<Vec<u32>>,
    value: Vec<Option<bool>>,
    quant: Vec<Option<(Quant, u32)>>,
    blocked_stack: Vec<u32>,
    // Clauses neither satisfied nor blocked (and not deleted).
    n_active: usize,
    n_unsatisfied: usize,
    pub rechecks: u64,
    scratch_mark: Vec<bool>,
}

/// Ids of clauses whose state left Blocked/Satisfied and which therefore
/// must be revisited by propagation.
pub type Unblocked = Vec<u32>;

impl QbceState {
    pub fn new(psi: &Pcnf) -> QbceState {
        let nvars = psi.max_var() as usize;
        let mut quant = vec![None; nvars];
        for b in psi.prefix.blocks() {
            for &v in &b.vars {
                quant[v.index()] = Some((b.quant, b.level));
            }
        }
        let mut s = QbceState {
            clauses: Vec::new(),
            occ: vec![Vec::new(); 2 * nvars],
            value: vec![None; nvars],
            quant,
            blocked_stack: Vec::new(),
            n_active: 0,
            n_unsatisfied: 0,
            rechecks: 0,
            scratch_mark: Vec::new(),
        };
        for c in &psi.clauses {
            s.register_clause(c.lits());
        }
        let all: Vec<u32> = (0..s.clauses.len() as u32).collect();
        s.revalidate_and_grow(all);
        s
    }

    /// Adds a clause to the view (matrix clauses at construction; learned
    /// clauses only in the experimental include-learned mode). The caller
    /// must run [`QbceState::recompute_after_add`] afterwards.
    pub fn register_clause(&mut self, lits: &[Lit]) -> u32 {
        let id = self.clauses.len() as u32;
        let mut n_sat = 0;
        for &l in lits {
            self.occ[l.index()].push(id);
            if self.lit_value(l) == Some(true) {
                n_sat += 1;
            }
        }
        let state = if n_sat > 0 {
            ClauseState::SatisfiedByTrail
        } else {
            ClauseState::Active
        };
        if state == ClauseState::Active {
            self.n_active += 1;
        }
        self.n_unsatisfied += usize::from(n_sat == 0);
        self.clauses.push(QClause {
            lits: lits.to_vec(),
            state,
            n_sat,
            deleted: false,
        });
        id
    }

    /// Re-establishes the fixpoint after clause registration.
    pub fn recompute_after_add(&mut self, id: u32) -> Unblocked {
        let mut queue = vec![id];
        queue.extend(self.partners(id));
        self.revalidate_and_grow(queue)
    }

    pub fn delete_clause(&mut self, id: u32) -> Unblocked {
        let c = &mut self.clauses[id as usize];
        if c.deleted {
            return Vec::new();
        }
        c.deleted = true;
        match c.state {
            ClauseState::Active => self.n_active -= 1,
            ClauseState::Blocked(_) => {
                let pos = self.blocked_stack.iter().position(|&x| x == id);
                if let Some(p) = pos {
                    self.blocked_stack.remove(p);
                }
            }
            ClauseState::SatisfiedByTrail => {}
        }
        if self.clauses[id as usize].n_sat == 0 {
            self.n_unsatisfied -= 1;
        }
        let queue = self.partners(id);
        self.revalidate_and_grow(queue)
    }

    fn lit_value(&self, l: Lit) -> Option<bool> {
        self.value[l.var().index()].map(|b| b == l.is_positive())
    }

    fn is_existential(&self, v: Var) -> bool {
        matches!(self.quant[v.index()], Some((Quant::Exists, _)))
    }

    fn level(&self, v: Var) -> u32 {
        self.quant[v.index()].expect("var not in prefix").1
    }

    /// All clauses sharing a complementary literal with `id`.
    fn partners(&self, id: u32) -> Vec<u32> {
        let mut out = Vec::new();
        for &l in &self.clauses[id as usize].lits {
            out.extend_from_slice(&self.occ[(!l).index()]);
        }
        out
    }

    pub fn assign(&mut self, lit: Lit) -> Unblocked {
        debug_assert!(self.value[lit.var().index()].is_none());
        self.value[lit.var().index()] = Some(lit.is_positive());
        let mut queue = Vec::new();
        for &cid in &self.occ[lit.index()] {
            let c = &mut self.clauses[cid as usize];
            c.n_sat += 1;
            if c.n_sat == 1 && !c.deleted {
                self.n_unsatisfied -= 1;
            }
            queue.push(cid);
        }
        queue.extend_from_slice(&self.occ[(!lit).index()]);
        self.seed_partner_rechecks(&mut queue);
        self.revalidate_and_grow(queue)
    }

    pub fn unassign(&mut self, lit: Lit) -> Unblocked {
        debug_assert_eq!(self.value[lit.var().index()], Some(lit.is_positive()));
        self.value[lit.var().index()] = None;
        let mut queue = Vec::new();
        for &cid in &self.occ[lit.index()] {
            let c = &mut self.clauses[cid as usize];
            c.n_sat -= 1;
            if c.n_sat == 0 && !c.deleted {
                self.n_unsatisfied += 1;
            }
            queue.push(cid);
        }
        queue.extend_from_slice(&self.occ[(!lit).index()]);
        self.seed_partner_rechecks(&mut queue);
        self.revalidate_and_grow(queue)
    }

    /// Clauses for which any directly touched clause is a resolution
    /// partner must be rechecked as well.
    fn seed_partner_rechecks(&self, queue: &mut Vec<u32>) {
        let direct: Vec<u32> = queue.clone();
        for cid in direct {
            for &l in &self.clauses[cid as usize].lits {
                queue.extend_from_slice(&self.occ[(!l).index()]);
            }
        }
    }

    /// Revalidates the blocked stack bottom-up, then grows the blocked set
    /// monotonically from the queued candidates. Returns clauses that left
    /// the Blocked/Satisfied states.
    fn revalidate_and_grow(&mut self, mut queue: Vec<u32>) -> Unblocked {
        let mut unblocked = Vec::new();

        // Phase 1: refresh satisfied-state of queued clauses.
        for &cid in &queue {
            let c = &self.clauses[cid as usize];
            if c.deleted {
                continue;
            }
            let sat_now = c.n_sat > 0;
            match c.state {
                ClauseState::SatisfiedByTrail if !sat_now => {
                    self.clauses[cid as usize].state = ClauseState::Active;
                    self.n_active += 1;
                    unblocked.push(cid);
                }
                ClauseState::Active if sat_now => {
                    self.clauses[cid as usize].state = ClauseState::SatisfiedByTrail;
                    self.n_active -= 1;
                }
                ClauseState::Blocked(_) if sat_now => {
                    self.clauses[cid as usize].state = ClauseState::SatisfiedByTrail;
                    let pos = self.blocked_stack.iter().position(|&x| x == cid);
                    if let Some(p) = pos {
                        self.blocked_stack.remove(p);
                    }
                }
                _ => {}
            }
        }

        // Phase 2: bottom-up revalidation of the blocked stack. An entry may
        // cite satisfied clauses and validated entries below itself.
        let stack = std::mem::take(&mut self.blocked_stack);
        let mut validated: Vec<u32> = Vec::with_capacity(stack.len());
        for &cid in &stack {
            let c = &self.clauses[cid as usize];
            if c.deleted {
                continue;
            }
            debug_assert!(matches!(c.state, ClauseState::Blocked(_)));
            let ok = self.find_blocking_lit_with(cid, |did| {
                let d = &self.clauses[did as usize];
                d.deleted
                    || d.n_sat > 0
                    || (matches!(d.state, ClauseState::Blocked(_)) && validated.contains(&did))
            });
            match ok {
                Some(l) => {
                    self.clauses[cid as usize].state = ClauseState::Blocked(l);
                    validated.push(cid);
                }
                None => {
                    self.clauses[cid as usize].state = ClauseState::Active;
                    self.n_active += 1;
                    unblocked.push(cid);
                    queue.push(cid);
                    queue.extend(self.partners(cid));
                }
            }
        }
        self.blocked_stack = validated;

        // Phase 3: monotone growth.
        while let Some(cid) = queue.pop() {
            let c = &self.clauses[cid as usize];
            if c.deleted || c.state != ClauseState::Active || c.n_sat > 0 {
                continue;
            }
            let found = self.find_blocking_lit_with(cid, |did| {
                let d = &self.clauses[did as usize];
                d.deleted || d.n_sat > 0 || matches!(d.state, ClauseState::Blocked(_))
            });
            if let Some(l) = found {
                self.clauses[cid as usize].state = ClauseState::Blocked(l);
                self.n_active -= 1;
                self.blocked_stack.push(cid);
                queue.extend(self.partners(cid));
            }
        }
        unblocked.sort_unstable();
        unblocked.dedup();
        unblocked
    }

    /// The blocking predicate for one clause: the first unassigned
    /// existential literal on which the clause is blocked, with resolution
    /// partners filtered by `skip`.
    fn find_blocking_lit_with(&self, cid: u32, skip: impl Fn(u32) -> bool) -> Option<Lit> {
        let c = &self.clauses[cid as usize];
        for &l in &c.lits {
            if self.lit_value(l).is_some() || !self.is_existential(l.var()) {
                continue;
            }
            if self.blocked_on_with(cid, l, &skip) {
                return Some(l);
            }
        }
        None
    }

    fn blocked_on_with(&self, cid: u32, l: Lit, skip: &impl Fn(u32) -> bool) -> bool {
        let c = &self.clauses[cid as usize];
        'partners: for &did in &self.occ[(!l).index()] {
            if did == cid || skip(did) {
                continue;
            }
            let d = &self.clauses[did as usize];
            // Witness k ∈ C\{l}, unassigned, k̄ ∈ D, k ≤_Π l.
            for &k in &c.lits {
                if k == l || self.lit_value(k).is_some() || self.level(k.var()) > self.level(l.var())
                {
                    continue;
                }
                if d.lits.contains(&!k) {
                    continue 'partners;
                }
            }
            return false;
        }
        true
    }

    /// Blocking predicate against the current view with blocked clauses
    /// removed, for direct queries and tests. Requires `l ∈ C`, `q(l) = ∃`,
    /// and the clause not satisfied by the trail.
    pub fn is_blocked(&mut self, cid: u32, l: Lit) -> bool {
        let c = &self.clauses[cid as usize];
        assert!(c.lits.contains(&l), "literal not in clause");
        assert!(self.is_existential(l.var()), "blocking literal must be existential");
        assert!(c.n_sat == 0, "clause is satisfied by the trail");
        self.rechecks += 1;
        if self.lit_value(l).is_some() {
            return false;
        }
        self.blocked_on_with(cid, l, &|did| {
            let d = &self.clauses[did as usize];
            d.deleted || d.n_sat > 0 || matches!(d.state, ClauseState::Blocked(_))
        })
    }

    pub fn state(&self, cid: u32) -> ClauseState {
        self.clauses[cid as usize].state
    }

    pub fn is_invisible(&self, cid: u32) -> bool {
        !matches!(self.clauses[cid as usize].state, ClauseState::Active)
    }

    /// Whether every clause in the view is satisfied or blocked.
    pub fn all_satisfied_or_blocked(&self) -> bool {
        self.n_active == 0
    }

    /// Whether every clause in the view is satisfied outright.
    pub fn all_satisfied(&self) -> bool {
        self.n_unsatisfied == 0
    }

    pub fn num_clauses(&self) -> usize {
        self.clauses.len()
    }

    /// State kinds per clause (0 active, 1 blocked, 2 satisfied), for
    /// differential comparison; blocking literals are order-dependent and
    /// excluded.
    pub fn state_kinds(&self) -> Vec<u8> {
        self.clauses
            .iter()
            .map(|c| if c.deleted { 3 } else { c.state.kind() })
            .collect()
    }

    /// From-scratch fixpoint over the current assignment, ignoring all
    /// incremental state: the least set of blocked clauses closed under
    /// iteration, evaluated with already-blocked and satisfied clauses
    /// removed from the view. Returns state kinds like
    /// [`QbceState::state_kinds`].
    pub fn scratch_fixpoint(&mut self) -> Vec<u8> {
        let n = self.clauses.len();
        let mut blocked = vec![false; n];
        let order_note = &mut self.scratch_mark;
        order_note.clear();
        order_note.resize(n, false);
        loop {
            let mut changed = false;
            for cid in 0..n as u32 {
                let c = &self.clauses[cid as usize];
                if c.deleted || c.n_sat > 0 || blocked[cid as usize] {
                    continue;
                }
                let found = self.find_blocking_lit_with(cid, |did| {
                    let d = &self.clauses[did as usize];
                    d.deleted || d.n_sat > 0 || blocked[did as usize]
                });
                if found.is_some() {
                    blocked[cid as usize] = true;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        (0..n)
            .map(|i| {
                let c = &self.clauses[i];
                if c.deleted {
                    3
                } else if c.n_sat > 0 {
                    2
                } else if blocked[i] {
                    1
                } else {
                    0
                }
            })
            .collect()
    }
}

/// Computes the blocked set of a formula under an assignment from scratch.
pub fn qbce_fixpoint(psi: &Pcnf, assigned: &[Lit]) -> Vec<u32> {
    let mut st = QbceState::new(psi);
    for &l in assigned {
        st.assign(l);
    }
    st.scratch_fixpoint()
        .iter()
        .enumerate()
        .filter(|(_, &k)| k == 1)
        .map(|(i, _)| i as u32)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::{Pcnf, Prefix, Quant, Var};

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
    fn blocked_predicate_examples() {
        // Π=∃x,y: C=(x∨y), D=(¬x∨¬y): C blocked on x (witness y).
        let psi = pcnf(vec![(Quant::Exists, vec![1, 2])], vec![vec![1, 2], vec![-1, -2]]);
        let mut st = QbceState::new(&psi);
        assert!(st.is_blocked(0, lit(1)));

        // Π=∃x∀u: C=(x∨u), D=(¬x∨u): no existential witness k ≤_Π x.
        let psi = pcnf(
            vec![(Quant::Exists, vec![1]), (Quant::Forall, vec![2])],
            vec![vec![1, 2], vec![-1, 2]],
        );
        let mut st = QbceState::new(&psi);
        assert!(!st.is_blocked(0, lit(1)));

        // No clause contains l̄ → vacuously blocked.
        let psi = pcnf(vec![(Quant::Exists, vec![1, 2])], vec![vec![1, 2]]);
        let mut st = QbceState::new(&psi);
        assert!(st.is_blocked(0, lit(1)));
    }

    #[test]
    fn universal_witness_is_admitted() {
        // Witnesses range over existential and universal literals k ≤_Π l.
        // Π=∀u∃x: C=(u∨x), D=(¬u∨¬x): C blocked on x with universal
        // witness u (u ≤_Π x).
        let psi = pcnf(
            vec![(Quant::Forall, vec![1]), (Quant::Exists, vec![2])],
            vec![vec![1, 2], vec![-1, -2]],
        );
        let mut st = QbceState::new(&psi);
        assert!(st.is_blocked(0, lit(2)));
    }

    #[test]
    fn fixpoint_cascades() {
        // After C=(x∨y) is blocked, D=(¬x∨¬y) is blocked vacuously.
        let psi = pcnf(vec![(Quant::Exists, vec![1, 2])], vec![vec![1, 2], vec![-1, -2]]);
        let blocked = qbce_fixpoint(&psi, &[]);
        assert_eq!(blocked, vec![0, 1]);
    }

    #[test]
    fn no_existential_literal_no_blocking() {
        let psi = pcnf(
            vec![(Quant::Forall, vec![1, 2]), (Quant::Exists, vec![3])],
            vec![vec![1, 2], vec![-1, -2]],
        );
        assert!(qbce_fixpoint(&psi, &[]).is_empty());
    }

    #[test]
    fn all_satisfied_detected() {
        let psi = pcnf(vec![(Quant::Exists, vec![1, 2])], vec![vec![1], vec![2]]);
        let mut st = QbceState::new(&psi);
        assert!(!st.all_satisfied());
        st.assign(lit(1));
        st.assign(lit(2));
        assert!(st.all_satisfied());
        assert!(st.all_satisfied_or_blocked());
        st.unassign(lit(2));
        assert!(!st.all_satisfied());
    }

    #[test]
    fn incremental_matches_scratch_under_random_events() {
        let mut seed = 0xb00c_5eed_u64;
        let mut next = || {
            seed ^= seed << 13;
            seed ^= seed >> 7;
            seed ^= seed << 17;
            seed
        };
        for round in 0..300 {
            let nvars = 3 + (next() % 6) as u32;
            let nblocks = 1 + next() % 3;
            let mut blocks: Vec<(Quant, Vec<u32>)> = Vec::new();
            let mut q = if next() % 2 == 0 { Quant::Forall } else { Quant::Exists };
            for _ in 0..nblocks {
                blocks.push((q, Vec::new()));
                q = q.dual();
            }
            for v in 1..=nvars {
                let b = (next() % nblocks) as usize;
                blocks[b].1.push(v);
            }
            let nclauses = 1 + next() % 8;
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
            let mut st = QbceState::new(&psi);
            assert_eq!(
                st.state_kinds(),
                st.scratch_fixpoint(),
                "round {round}: initial state diverges"
            );
            let mut stack: Vec<Lit> = Vec::new();
            for _ in 0..40 {
                let push = stack.is_empty() || next() % 3 != 0;
                if push {
                    let unassigned: Vec<Var> = psi
                        .prefix
                        .vars()
                        .filter(|v| !stack.iter().any(|l| l.var() == *v))
                        .collect();
                    if unassigned.is_empty() {
                        continue;
                    }
                    let v = unassigned[(next() % unassigned.len() as u64) as usize];
                    let l = Lit::new(v, next() % 2 == 0);
                    stack.push(l);
                    st.assign(l);
                } else {
                    let l = stack.pop().unwrap();
                    st.unassign(l);
                }
                assert_eq!(
                    st.state_kinds(),
                    st.scratch_fixpoint(),
                    "round {round}: incremental diverges after event"
                );
            }
        }
    }

    #[test]
    fn fixpoint_confluent_under_clause_order() {
        // Permuting clause order must not change the blocked set (as a set
        // of clauses).
        let psi = pcnf(
            vec![(Quant::Exists, vec![1, 2, 3])],
            vec![vec![1, 2], vec![-1, -2], vec![2, 3], vec![-3, 1]],
        );
        let base = qbce_fixpoint(&psi, &[]);
        let base_clauses: Vec<Vec<Lit>> = base
            .iter()
            .map(|&i| psi.clauses[i as usize].lits().to_vec())
            .collect();
        let perms: &[[usize; 4]] = &[[3, 2, 1, 0], [1, 3, 0, 2], [2, 0, 3, 1]];
        for p in perms {
            let permuted = pcnf(
                vec![(Quant::Exists, vec![1, 2, 3])],
                p.iter()
                    .map(|&i| {
                        psi.clauses[i]
                            .lits()
                            .iter()
                            .map(|l| l.to_dimacs())
                            .collect()
                    })
                    .collect(),
            );
            let blocked = qbce_fixpoint(&permuted, &[]);
            let mut blocked_clauses: Vec<Vec<Lit>> = blocked
                .iter()
                .map(|&i| permuted.clauses[i as usize].lits().to_vec())
                .collect();
            let mut expect = base_clauses.clone();
            blocked_clauses.sort();
            expect.sort();
            assert_eq!(blocked_clauses, expect);
        }
    }
}
