//! Minimal embedded CDCL SAT solver used by the generalized-axiom checks.
//!
//! Feature floor: two-watched literals, first-UIP learning, decaying
//! activity decision heuristic, Luby restarts, assumption solving, and a
//! hard conflict budget. Budgeted correctness is the requirement, not raw
//! speed. Fully deterministic: no randomization anywhere.

use crate::formula::{Lit, Var};

/// A plain propositional instance with assumptions and a conflict budget.
#[derive(Clone, Debug)]
pub struct SatInstance {
    pub num_vars: u32,
    pub clauses: Vec<Vec<Lit>>,
    pub assumptions: Vec<Lit>,
    pub budget: u64,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum SatOutcome {
    /// Model indexed by `Var::index()`.
    Sat(Vec<bool>),
    Unsat,
    Budget,
}

/// One-shot entry point over a [`SatInstance`].
pub fn sat_solve(inst: &SatInstance) -> SatOutcome {
    let mut core = SatCore::new(inst.num_vars);
    for c in &inst.clauses {
        core.add_clause(c);
    }
    core.solve(&inst.assumptions, inst.budget).0
}

const UNDEF_CLAUSE: u32 = u32::MAX;

struct Clause {
    lits: Vec<Lit>,
}

/// Persistent CDCL solver. Clauses may be added between `solve` calls; the
/// solver always returns at decision level 0.
pub struct SatCore {
    num_vars: u32,
    clauses: Vec<Clause>,
    // watches[lit.index()] = clause ids watching that literal.
    watches: Vec<Vec<u32>>,
    value: Vec<Option<bool>>,
    level: Vec<u32>,
    reason: Vec<u32>,
    trail: Vec<Lit>,
    trail_lim: Vec<usize>,
    qhead: usize,
    activity: Vec<f64>,
    act_inc: f64,
    // Simple binary max-heap of variable indices keyed by activity.
    heap: Vec<u32>,
    heap_pos: Vec<u32>,
    phase: Vec<bool>,
    seen: Vec<bool>,
    // Top-level contradiction discovered while loading clauses.
    unsat: bool,
    conflicts_total: u64,
}

const NOT_IN_HEAP: u32 = u32::MAX;

impl SatCore {
    pub fn new(num_vars: u32) -> SatCore {
        let n = num_vars as usize;
        let mut s = SatCore {
            num_vars,
            clauses: Vec::new(),
            watches: vec![Vec::new(); 2 * n],
            value: vec![None; n],
            level: vec![0; n],
            reason: vec![UNDEF_CLAUSE; n],
            trail: Vec::new(),
            trail_lim: Vec::new(),
            qhead: 0,
            activity: vec![0.0; n],
            act_inc: 1.0,
            heap: Vec::new(),
            heap_pos: vec![NOT_IN_HEAP; n],
            phase: vec![false; n],
            seen: vec![false; n],
            unsat: false,
            conflicts_total: 0,
        };
        for v in 0..num_vars {
            s.heap_insert(v);
        }
        s
    }

    pub fn num_vars(&self) -> u32 {
        self.num_vars
    }

    fn lit_value(&self, l: Lit) -> Option<bool> {
        self.value[l.var().index()].map(|b| b == l.is_positive())
    }

    fn decision_level(&self) -> u32 {
        self.trail_lim.len() as u32
    }

    // --- activity heap ---

    fn heap_less(&self, a: u32, b: u32) -> bool {
        // Max-heap on activity; ties broken toward the smaller variable id
        // for determinism.
        let (aa, ab) = (self.activity[a as usize], self.activity[b as usize]);
        aa > ab || (aa == ab && a < b)
    }

    fn heap_sift_up(&mut self, mut i: usize) {
        while i > 0 {
            let p = (i - 1) / 2;
            if self.heap_less(self.heap[i], self.heap[p]) {
                self.heap.swap(i, p);
                self.heap_pos[self.heap[i] as usize] = i as u32;
                self.heap_pos[self.heap[p] as usize] = p as u32;
                i = p;
            } else {
                break;
            }
        }
    }

    fn heap_sift_down(&mut self, mut i: usize) {
        loop {
            let l = 2 * i + 1;
            let r = 2 * i + 2;
            let mut best = i;
            if l < self.heap.len() && self.heap_less(self.heap[l], self.heap[best]) {
                best = l;
            }
            if r < self.heap.len() && self.heap_less(self.heap[r], self.heap[best]) {
                best = r;
            }
            if best == i {
                break;
            }
            self.heap.swap(i, best);
            self.heap_pos[self.heap[i] as usize] = i as u32;
            self.heap_pos[self.heap[best] as usize] = best as u32;
            i = best;
        }
    }

    fn heap_insert(&mut self, v: u32) {
        if self.heap_pos[v as usize] != NOT_IN_HEAP {
            return;
        }
        self.heap.push(v);
        self.heap_pos[v as usize] = (self.heap.len() - 1) as u32;
        self.heap_sift_up(self.heap.len() - 1);
    }

    fn heap_pop(&mut self) -> Option<u32> {
        if self.heap.is_empty() {
            return None;
        }
        let top = self.heap[0];
        self.heap_pos[top as usize] = NOT_IN_HEAP;
        let last = self.heap.pop().unwrap();
        if !self.heap.is_empty() {
            self.heap[0] = last;
            self.heap_pos[last as usize] = 0;
            self.heap_sift_down(0);
        }
        Some(top)
    }

    fn bump(&mut self, v: usize) {
        self.activity[v] += self.act_inc;
        if self.activity[v] > 1e100 {
            for a in &mut self.activity {
                *a *= 1e-100;
            }
            self.act_inc *= 1e-100;
        }
        let pos = self.heap_pos[v];
        if pos != NOT_IN_HEAP {
            self.heap_sift_up(pos as usize);
        }
    }

    // --- clause management ---

    /// Adds a clause at decision level 0. Duplicate literals are removed;
    /// clauses with complementary literals are silently dropped.
    pub fn add_clause(&mut self, lits: &[Lit]) {
        assert_eq!(self.decision_level(), 0, "clauses are added at level 0");
        if self.unsat {
            return;
        }
        let mut c: Vec<Lit> = Vec::with_capacity(lits.len());
        for &l in lits {
            assert!(l.var().id() <= self.num_vars, "literal out of range");
            if c.contains(&!l) {
                return; // tautology
            }
            if self.lit_value(l) == Some(true) {
                return; // already satisfied at level 0
            }
            if self.lit_value(l) == Some(false) {
                continue;
            }
            if !c.contains(&l) {
                c.push(l);
            }
        }
        match c.len() {
            0 => self.unsat = true,
            1 => {
                self.enqueue(c[0], UNDEF_CLAUSE);
                if self.propagate().is_some() {
                    self.unsat = true;
                }
            }
            _ => {
                let id = self.clauses.len() as u32;
                self.watches[c[0].index()].push(id);
                self.watches[c[1].index()].push(id);
                self.clauses.push(Clause { lits: c });
            }
        }
    }

    fn enqueue(&mut self, l: Lit, reason: u32) {
        debug_assert!(self.lit_value(l).is_none());
        let v = l.var().index();
        self.value[v] = Some(l.is_positive());
        self.level[v] = self.decision_level();
        self.reason[v] = reason;
        self.phase[v] = l.is_positive();
        self.trail.push(l);
    }

    fn propagate(&mut self) -> Option<u32> {
        while self.qhead < self.trail.len() {
            let l = self.trail[self.qhead];
            self.qhead += 1;
            let false_lit = !l;
            let mut ws = std::mem::take(&mut self.watches[false_lit.index()]);
            let mut i = 0;
            'watches: while i < ws.len() {
                let cid = ws[i];
                let lits = &mut self.clauses[cid as usize].lits;
                // Ensure the false literal is at position 1.
                if lits[0] == false_lit {
                    lits.swap(0, 1);
                }
                debug_assert_eq!(lits[1], false_lit);
                let first = lits[0];
                if self.value[first.var().index()].map(|b| b == first.is_positive())
                    == Some(true)
                {
                    i += 1;
                    continue;
                }
                // Look for a new literal to watch.
                for k in 2..lits.len() {
                    let cand = lits[k];
                    if self.value[cand.var().index()].map(|b| b == cand.is_positive())
                        != Some(false)
                    {
                        lits.swap(1, k);
                        self.watches[cand.index()].push(cid);
                        ws.swap_remove(i);
                        continue 'watches;
                    }
                }
                // Unit or conflict.
                if self.lit_value(first) == Some(false) {
                    self.watches[false_lit.index()] = ws;
                    self.qhead = self.trail.len();
                    return Some(cid);
                }
                self.enqueue(first, cid);
                i += 1;
            }
            self.watches[false_lit.index()] = ws;
        }
        None
    }

    fn backtrack_to(&mut self, level: u32) {
        if self.decision_level() <= level {
            return;
        }
        let target = self.trail_lim[level as usize];
        while self.trail.len() > target {
            let l = self.trail.pop().unwrap();
            let v = l.var().index();
            self.value[v] = None;
            self.reason[v] = UNDEF_CLAUSE;
            self.heap_insert(v as u32);
        }
        self.trail_lim.truncate(level as usize);
        self.qhead = self.trail.len();
    }

    /// First-UIP conflict analysis; returns (learnt clause, backjump level).
    fn analyze(&mut self, mut confl: u32) -> (Vec<Lit>, u32) {
        let mut learnt: Vec<Lit> = vec![Lit::positive(Var::new(1))]; // placeholder slot
        let mut counter = 0u32;
        let mut p: Option<Lit> = None;
        let mut index = self.trail.len();
        loop {
            let lits = &self.clauses[confl as usize].lits;
            let start = usize::from(p.is_some());
            let to_bump: Vec<usize> = lits[start..].iter().map(|q| q.var().index()).collect();
            for (k, &q) in lits.iter().enumerate() {
                if k < start {
                    continue;
                }
                let v = q.var().index();
                if !self.seen[v] && self.level[v] > 0 {
                    self.seen[v] = true;
                    if self.level[v] == self.decision_level() {
                        counter += 1;
                    } else {
                        learnt.push(q);
                    }
                }
            }
            for v in to_bump {
                self.bump(v);
            }
            // Find next literal of the current level on the trail.
            loop {
                index -= 1;
                let l = self.trail[index];
                if self.seen[l.var().index()] {
                    p = Some(l);
                    break;
                }
            }
            let pv = p.unwrap().var().index();
            self.seen[pv] = false;
            counter -= 1;
            if counter == 0 {
                learnt[0] = !p.unwrap();
                break;
            }
            confl = self.reason[pv];
            debug_assert_ne!(confl, UNDEF_CLAUSE);
        }
        for l in &learnt[1..] {
            self.seen[l.var().index()] = false;
        }
        // Backjump to the second-highest level in the clause.
        let mut bt = 0;
        if learnt.len() > 1 {
            let mut max_i = 1;
            for i in 2..learnt.len() {
                if self.level[learnt[i].var().index()] > self.level[learnt[max_i].var().index()]
                {
                    max_i = i;
                }
            }
            learnt.swap(1, max_i);
            bt = self.level[learnt[1].var().index()];
        }
        (learnt, bt)
    }

    /// Luby sequence, 1-based: 1 1 2 1 1 2 4 1 1 2 ...
    fn luby(mut i: u64) -> u64 {
        loop {
            if (i + 1).is_power_of_two() {
                return (i + 1) >> 1;
            }
            let k = 63 - (i + 1).leading_zeros() as u64;
            i -= (1u64 << k) - 1;
        }
    }

    /// Solves under assumptions with a conflict budget. Returns the outcome
    /// together with the number of conflicts spent in this call.
    pub fn solve(&mut self, assumptions: &[Lit], budget: u64) -> (SatOutcome, u64) {
        if self.unsat {
            return (SatOutcome::Unsat, 0);
        }
        self.backtrack_to(0);
        if self.propagate().is_some() {
            self.unsat = true;
            return (SatOutcome::Unsat, 0);
        }
        let mut conflicts = 0u64;
        let mut restart_idx = 1u64;
        let mut restart_limit = 100 * Self::luby(restart_idx);
        let result = 'outer: loop {
            if let Some(confl) = self.propagate() {
                conflicts += 1;
                self.conflicts_total += 1;
                if self.decision_level() == 0 {
                    self.unsat = true;
                    break SatOutcome::Unsat;
                }
                // A conflict with only assumption decisions means unsat
                // under the current assumptions.
                if (self.decision_level() as usize) <= assumptions.len() {
                    // Check whether every decision so far is an assumption.
                    break SatOutcome::Unsat;
                }
                if conflicts >= budget {
                    break SatOutcome::Budget;
                }
                let (learnt, bt) = self.analyze(confl);
                // Never backjump above the assumption levels.
                let bt = bt.max(
                    (self.decision_level() as usize).min(assumptions.len()) as u32,
                );
                let bt = bt.min(self.decision_level() - 1);
                self.backtrack_to(bt);
                self.act_inc /= 0.95;
                match learnt.len() {
                    1 => {
                        if self.lit_value(learnt[0]) == Some(false) {
                            self.unsat = true;
                            break SatOutcome::Unsat;
                        }
                        if self.lit_value(learnt[0]).is_none() {
                            self.enqueue(learnt[0], UNDEF_CLAUSE);
                        }
                    }
                    _ => {
                        let id = self.clauses.len() as u32;
                        self.watches[learnt[0].index()].push(id);
                        self.watches[learnt[1].index()].push(id);
                        let asserting = learnt[0];
                        self.clauses.push(Clause { lits: learnt });
                        if self.lit_value(asserting).is_none() {
                            self.enqueue(asserting, id);
                        }
                    }
                }
                if conflicts >= restart_limit {
                    restart_idx += 1;
                    restart_limit = conflicts + 100 * Self::luby(restart_idx);
                    self.backtrack_to(assumptions.len().min(self.decision_level() as usize) as u32);
                }
            } else {
                // Place pending assumptions first.
                while (self.decision_level() as usize) < assumptions.len() {
                    let a = assumptions[self.decision_level() as usize];
                    match self.lit_value(a) {
                        Some(true) => {
                            // Already satisfied: open an empty level to keep
                            // the decision-level/assumption correspondence.
                            self.trail_lim.push(self.trail.len());
                        }
                        Some(false) => break 'outer SatOutcome::Unsat,
                        None => {
                            self.trail_lim.push(self.trail.len());
                            self.enqueue(a, UNDEF_CLAUSE);
                        }
                    }
                    if self.propagate().is_some() {
                        conflicts += 1;
                        self.conflicts_total += 1;
                        break 'outer SatOutcome::Unsat;
                    }
                }
                // Decide.
                let mut decision = None;
                while let Some(v) = self.heap_pop() {
                    if self.value[v as usize].is_none() {
                        decision = Some(v);
                        break;
                    }
                }
                match decision {
                    None => {
                        let model: Vec<bool> =
                            self.value.iter().map(|v| v.unwrap_or(false)).collect();
                        debug_assert!(self.verify_model(&model));
                        break SatOutcome::Sat(model);
                    }
                    Some(v) => {
                        self.trail_lim.push(self.trail.len());
                        let lit = Lit::new(Var::new(v + 1), self.phase[v as usize]);
                        self.enqueue(lit, UNDEF_CLAUSE);
                    }
                }
            }
        };
        self.backtrack_to(0);
        if let SatOutcome::Sat(m) = &result {
            assert!(self.verify_model(m), "model fails direct clause evaluation");
        }
        (result, conflicts)
    }

    /// Direct evaluation of every clause under a model.
    pub fn verify_model(&self, model: &[bool]) -> bool {
        self.clauses.iter().all(|c| {
            c.lits
                .iter()
                .any(|l| model[l.var().index()] == l.is_positive())
        })
    }

    pub fn conflicts_total(&self) -> u64 {
        self.conflicts_total
    }
}
