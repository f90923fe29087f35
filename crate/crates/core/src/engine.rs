//! The QCDCL engine: propagation with reduction-aware unit detection over
//! the clause and cube stores, conflict/solution detection (syntactic,
//! QBCE-based, and abstraction-based), decision making, backtracking,
//! restarts, and learned-constraint management.

use crate::depsched::{build_deps, DepKind, DependencyRelation};
use crate::formula::{Constraint, ConstraintKind, Lit, Pcnf, Quant, Var};
use crate::genaxioms::{AbstractionOutcome, GenAxiomChecker};
use crate::learning::{self, AnalyzeCtx, AnalyzeStart};
use crate::oracle::Truth;
use crate::proof::{StepKind, Trace, TraceBuilder};
use crate::qbce::QbceState;
use std::collections::VecDeque;
use std::time::Instant;

/// Why a variable is on the trail.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Reason {
    Decision,
    UnitFromClause(u32),
    UnitFromCube(u32),
}

/// The QCDCL assignment: an ordered sequence of (literal, reason) entries
/// partitioned into decision levels. Every decision respects the active
/// dependency relation, making the trail a QCDCL assignment.
pub struct Trail {
    entries: Vec<(Lit, Reason)>,
    level_start: Vec<usize>,
    value: Vec<Option<bool>>,
    level_of: Vec<u32>,
    pos_of: Vec<u32>,
    reason_of: Vec<Reason>,
}

impl Trail {
    fn new(num_vars: usize) -> Trail {
        Trail {
            entries: Vec::new(),
            level_start: vec![0],
            value: vec![None; num_vars],
            level_of: vec![0; num_vars],
            pos_of: vec![0; num_vars],
            reason_of: vec![Reason::Decision; num_vars],
        }
    }

    pub fn decision_level(&self) -> u32 {
        (self.level_start.len() - 1) as u32
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn lits(&self) -> impl Iterator<Item = Lit> + '_ {
        self.entries.iter().map(|e| e.0)
    }

    pub fn value(&self, v: Var) -> Option<bool> {
        self.value[v.index()]
    }

    pub fn lit_value(&self, l: Lit) -> Option<bool> {
        self.value[l.var().index()].map(|b| b == l.is_positive())
    }

    pub fn level(&self, v: Var) -> u32 {
        self.level_of[v.index()]
    }

    pub fn pos(&self, v: Var) -> u32 {
        self.pos_of[v.index()]
    }

    pub fn reason(&self, v: Var) -> Reason {
        self.reason_of[v.index()]
    }

    fn assign(&mut self, lit: Lit, reason: Reason) {
        let v = lit.var().index();
        debug_assert!(self.value[v].is_none(), "variable assigned twice");
        self.value[v] = Some(lit.is_positive());
        self.level_of[v] = self.decision_level();
        self.pos_of[v] = self.entries.len() as u32;
        self.reason_of[v] = reason;
        self.entries.push((lit, reason));
    }

    fn new_level(&mut self) {
        self.level_start.push(self.entries.len());
    }

    fn pop_to(&mut self, level: u32, mut on_pop: impl FnMut(Lit, Reason)) {
        if level >= self.decision_level() {
            return;
        }
        let target = self.level_start[(level as usize) + 1];
        while self.entries.len() > target {
            let (lit, reason) = self.entries.pop().unwrap();
            self.value[lit.var().index()] = None;
            on_pop(lit, reason);
        }
        self.level_start.truncate((level as usize) + 1);
    }
}

#[derive(Clone, Debug)]
pub struct ConstraintData {
    pub c: Constraint,
    pub learned: bool,
    pub deleted: bool,
    activity: f64,
    trace_id: Option<u64>,
    /// Literals whose truth makes the constraint irrelevant: satisfied
    /// literals of a clause, falsified literals of a cube.
    n_bad: u32,
    qbce_id: Option<u32>,
}

/// Clause and cube store with occurrence lists and relevance counters.
pub struct ConstraintDb {
    pub cons: Vec<ConstraintData>,
    occ: Vec<Vec<u32>>,
    pub matrix_count: usize,
    /// Matrix clauses currently without a satisfied literal.
    matrix_unsat: usize,
    act_inc: f64,
}

impl ConstraintDb {
    fn new(num_vars: usize) -> ConstraintDb {
        ConstraintDb {
            cons: Vec::new(),
            occ: vec![Vec::new(); 2 * num_vars],
            matrix_count: 0,
            matrix_unsat: 0,
            act_inc: 1.0,
        }
    }

    pub fn constraint(&self, cid: u32) -> &Constraint {
        &self.cons[cid as usize].c
    }

    fn add(&mut self, c: Constraint, learned: bool, trail: &Trail) -> u32 {
        let cid = self.cons.len() as u32;
        let relevant_value = match c.kind {
            ConstraintKind::Clause => true,
            ConstraintKind::Cube => false,
        };
        let mut n_bad = 0;
        for &l in c.lits() {
            self.occ[l.index()].push(cid);
            if trail.lit_value(l) == Some(relevant_value) {
                n_bad += 1;
            }
        }
        if !learned {
            self.matrix_count += 1;
            if n_bad == 0 {
                self.matrix_unsat += 1;
            }
        }
        self.cons.push(ConstraintData {
            c,
            learned,
            deleted: false,
            activity: 0.0,
            trace_id: None,
            n_bad,
            qbce_id: None,
        });
        cid
    }

    pub fn bump_activity(&mut self, cid: u32) {
        let d = &mut self.cons[cid as usize];
        d.activity += self.act_inc;
        if d.activity > 1e100 {
            for c in &mut self.cons {
                c.activity *= 1e-100;
            }
            self.act_inc *= 1e-100;
        }
    }

    fn decay_activity(&mut self) {
        self.act_inc /= 0.999;
    }

    /// Trace id of a database constraint, emitting the clause axiom for
    /// matrix clauses on first use.
    pub fn trace_id_for(&mut self, cid: u32, trace: &mut TraceBuilder) -> u64 {
        let d = &mut self.cons[cid as usize];
        if let Some(id) = d.trace_id {
            return id;
        }
        debug_assert!(!d.learned, "learned constraints are traced at birth");
        let id = trace.emit(StepKind::ClAxiom, d.c.lits().to_vec(), vec![], None);
        d.trace_id = Some(id);
        id
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum LimitReason {
    Conflicts,
    Decisions,
    Time,
}

/// Solver verdict. SAT and UNSAT are only reported after deriving the empty
/// learned cube or clause.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Verdict {
    Sat,
    Unsat,
    Unknown(LimitReason),
}

impl Verdict {
    pub fn truth(self) -> Option<Truth> {
        match self {
            Verdict::Sat => Some(Truth::Sat),
            Verdict::Unsat => Some(Truth::Unsat),
            Verdict::Unknown(_) => None,
        }
    }
}

/// Scheduling state for one generalized axiom: checks are admitted on a
/// cadence that doubles on failure and halves on success, and the axiom is
/// permanently disabled once a full window of attempts yields no success.
#[derive(Clone, Debug)]
pub struct AxiomPolicyState {
    cadence: u32,
    calls_since: u32,
    fails_in_row: u32,
    pub attempts: u64,
    pub successes: u64,
    pub enabled: bool,
}

pub const AXIOM_CADENCE_INIT: u32 = 64;
pub const AXIOM_CADENCE_FLOOR: u32 = 16;
pub const AXIOM_CADENCE_CAP: u32 = 4096;
pub const AXIOM_DISABLE_WINDOW: u32 = 32;
pub const SAT_BUDGET_DEFAULT: u64 = 1000;

impl AxiomPolicyState {
    pub fn new() -> AxiomPolicyState {
        AxiomPolicyState {
            cadence: AXIOM_CADENCE_INIT,
            // First attempt is always admitted.
            calls_since: AXIOM_CADENCE_INIT,
            fails_in_row: 0,
            attempts: 0,
            successes: 0,
            enabled: true,
        }
    }

    /// Whether the axiom check is admitted at this conflict/solution
    /// detection call; updates the attempt counter when it is.
    pub fn should_apply(&mut self) -> bool {
        if !self.enabled {
            return false;
        }
        self.calls_since += 1;
        if self.calls_since >= self.cadence {
            self.calls_since = 0;
            self.attempts += 1;
            true
        } else {
            false
        }
    }

    pub fn on_result(&mut self, established: bool) {
        if established {
            self.successes += 1;
            self.fails_in_row = 0;
            self.cadence = (self.cadence / 2).max(AXIOM_CADENCE_FLOOR);
        } else {
            self.fails_in_row += 1;
            self.cadence = (self.cadence * 2).min(AXIOM_CADENCE_CAP);
            if self.fails_in_row >= AXIOM_DISABLE_WINDOW {
                self.enabled = false;
            }
        }
    }
}

impl Default for AxiomPolicyState {
    fn default() -> Self {
        Self::new()
    }
}

#[derive(Clone, Debug)]
pub struct SolverConfig {
    pub use_gen_clause_axiom: bool,
    pub use_gen_cube_axiom: bool,
    pub use_qbce: bool,
    pub dep_scheme: DepKind,
    pub ldq: bool,
    /// Collect a resolution trace.
    pub trace: bool,
    pub max_conflicts: Option<u64>,
    pub max_decisions: Option<u64>,
    pub max_seconds: Option<f64>,
    pub seed: u64,
    pub sat_budget: u64,
    /// Experimental: include learned clauses in the QBCE view on both
    /// sides. Disables learned-constraint deletion.
    pub qbce_include_learned: bool,
    /// Differential-testing mode: after every trail event, assert that the
    /// incremental QBCE state equals a from-scratch recomputation.
    pub qbce_differential: bool,
    /// Differential-testing mode: audit every propagation fixpoint with a
    /// full-scan reference pass.
    pub check_fixpoint: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            use_gen_clause_axiom: true,
            use_gen_cube_axiom: true,
            use_qbce: true,
            dep_scheme: DepKind::Standard,
            ldq: false,
            trace: false,
            max_conflicts: None,
            max_decisions: None,
            max_seconds: None,
            seed: 0,
            sat_budget: SAT_BUDGET_DEFAULT,
            qbce_include_learned: false,
            qbce_differential: false,
            check_fixpoint: false,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct ConfigError;

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "long-distance resolution requires the trivial dependency scheme"
        )
    }
}

impl std::error::Error for ConfigError {}

impl SolverConfig {
    /// Combining long-distance resolution with a non-trivial dependency
    /// scheme is unsupported (soundness of the combination is open for
    /// cube resolution).
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.ldq && self.dep_scheme != DepKind::Trivial {
            return Err(ConfigError);
        }
        Ok(())
    }

    /// Preset configurations matching the evaluation variant matrix.
    /// `dq` is the default; `-ncl`/`-ncu` drop one generalized axiom, `-n`
    /// drops all generalized derivations including QBCE, `-nq` drops only
    /// dynamic QBCE, `-lin` falls back to the linear prefix order, and
    /// `-linldq` additionally learns with long-distance resolution.
    pub fn preset(name: &str) -> Option<SolverConfig> {
        let mut cfg = SolverConfig::default();
        match name {
            "dq" => {}
            "dq-ncl" => cfg.use_gen_clause_axiom = false,
            "dq-ncu" => cfg.use_gen_cube_axiom = false,
            "dq-n" => {
                cfg.use_gen_clause_axiom = false;
                cfg.use_gen_cube_axiom = false;
                cfg.use_qbce = false;
            }
            "dq-nq" => cfg.use_qbce = false,
            "dq-lin" => cfg.dep_scheme = DepKind::Trivial,
            "dq-linldq" => {
                cfg.dep_scheme = DepKind::Trivial;
                cfg.ldq = true;
            }
            _ => return None,
        }
        Some(cfg)
    }

    /// All preset names, in the order of the evaluation tables.
    pub fn preset_names() -> &'static [&'static str] {
        &["dq", "dq-ncl", "dq-ncu", "dq-n", "dq-nq", "dq-lin", "dq-linldq"]
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Stats {
    pub conflicts: u64,
    pub solutions: u64,
    pub decisions: u64,
    pub propagations: u64,
    pub backtracks: u64,
    pub restarts: u64,
    pub learned_clauses: u64,
    pub learned_cubes: u64,
    pub deleted_constraints: u64,
    pub gen_cl_attempts: u64,
    pub gen_cl_successes: u64,
    pub gen_cu_attempts: u64,
    pub gen_cu_successes: u64,
    pub qbce_solutions: u64,
    pub cu_init_solutions: u64,
    pub qbce_rechecks: u64,
    pub sat_core_conflicts: u64,
}

impl Stats {
    /// Deterministic key/value lines for machine-readable output.
    pub fn lines(&self) -> Vec<(&'static str, u64)> {
        vec![
            ("conflicts", self.conflicts),
            ("solutions", self.solutions),
            ("decisions", self.decisions),
            ("propagations", self.propagations),
            ("backtracks", self.backtracks),
            ("restarts", self.restarts),
            ("learned_clauses", self.learned_clauses),
            ("learned_cubes", self.learned_cubes),
            ("deleted_constraints", self.deleted_constraints),
            ("gen_cl_attempts", self.gen_cl_attempts),
            ("gen_cl_successes", self.gen_cl_successes),
            ("gen_cu_attempts", self.gen_cu_attempts),
            ("gen_cu_successes", self.gen_cu_successes),
            ("qbce_solutions", self.qbce_solutions),
            ("cu_init_solutions", self.cu_init_solutions),
            ("qbce_rechecks", self.qbce_rechecks),
            ("sat_core_conflicts", self.sat_core_conflicts),
        ]
    }
}

pub struct SolveResult {
    pub verdict: Verdict,
    pub stats: Stats,
    pub trace: Option<Trace>,
}

/// What propagation plus conflict/solution detection found.
enum Found {
    /// A clause of the database is falsified (empty after reduction).
    Conflict(u32),
    /// A learned cube is empty after reduction under the assignment.
    SatisfiedCube(u32),
    /// Every matrix clause is satisfied: traditional cube axiom applies.
    AllSatisfied,
    /// Every matrix clause is satisfied or blocked: generalized cube axiom
    /// backed by dynamic QBCE.
    QbceSatisfied,
    /// Trivial-truth abstraction established satisfiability of ψ[A].
    GenCubeHit,
    /// Full-existential abstraction established unsatisfiability of ψ[A].
    GenClauseHit,
}

enum Scan {
    Nothing,
    ClauseConflict,
    ClauseUnit(Lit),
    CubeEmpty,
    CubeUnit(Lit),
}

struct Luby {
    idx: u64,
}

impl Luby {
    fn new() -> Luby {
        Luby { idx: 1 }
    }

    fn next_interval(&mut self) -> u64 {
        let mut i = self.idx;
        self.idx += 1;
        // 1-based Luby sequence.
        loop {
            if (i + 1).is_power_of_two() {
                return (i + 1) >> 1;
            }
            let k = 63 - (i + 1).leading_zeros() as u64;
            i -= (1u64 << k) - 1;
        }
    }
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
    x ^ (x >> 31)
}

pub struct Solver<'a> {
    psi: &'a Pcnf,
    cfg: SolverConfig,
    deps: DependencyRelation,
    db: ConstraintDb,
    trail: Trail,
    qbce: Option<QbceState>,
    gen: Option<GenAxiomChecker>,
    policy_cl: AxiomPolicyState,
    policy_cu: AxiomPolicyState,
    var_activity: Vec<f64>,
    var_act_inc: f64,
    phase: Vec<bool>,
    /// Precomputed dependency predecessors per variable (standard scheme).
    preds: Vec<Vec<Var>>,
    pending: VecDeque<u32>,
    prop_head: usize,
    /// Registration order of learned clauses in the QBCE view, mapping
    /// (qbce id - matrix count) back to constraint ids.
    qbce_to_cid: Vec<u32>,
    trace: TraceBuilder,
    stats: Stats,
    luby: Luby,
    conflicts_since_restart: u64,
    next_reduce_db: u64,
    start_time: Instant,
    bumped: Vec<Var>,
}

const RESTART_INTERVAL: u64 = 100;
const REDUCE_DB_INTERVAL: u64 = 4000;

impl<'a> Solver<'a> {
    pub fn new(psi: &'a Pcnf, cfg: SolverConfig) -> Solver<'a> {
        cfg.validate().expect("invalid solver configuration");
        let num_vars = psi.max_var() as usize;
        let deps = build_deps(psi, cfg.dep_scheme);
        let mut db = ConstraintDb::new(num_vars);
        let trail = Trail::new(num_vars);
        for c in &psi.clauses {
            db.add(c.clone(), false, &trail);
        }
        let qbce = cfg.use_qbce.then(|| QbceState::new(psi));
        let gen = (cfg.use_gen_clause_axiom || cfg.use_gen_cube_axiom)
            .then(|| GenAxiomChecker::new(psi, cfg.sat_budget));
        // Seed-dependent activity jitter keeps runs reproducible per seed
        // while letting seeds diversify tie-breaking.
        let var_activity: Vec<f64> = (0..num_vars)
            .map(|v| (splitmix(cfg.seed ^ (v as u64 + 1)) >> 40) as f64 * 1e-9)
            .collect();
        let all_vars: Vec<Var> = psi.prefix.vars().collect();
        let preds = if cfg.dep_scheme == DepKind::Standard {
            let mut p = vec![Vec::new(); num_vars];
            for &y in &all_vars {
                p[y.index()] = deps.predecessors(y, &all_vars);
            }
            p
        } else {
            Vec::new()
        };
        let pending: VecDeque<u32> = (0..db.cons.len() as u32).collect();
        let trace = TraceBuilder::new(cfg.trace, psi.max_var());
        Solver {
            psi,
            cfg,
            deps,
            db,
            trail,
            qbce,
            gen,
            policy_cl: AxiomPolicyState::new(),
            policy_cu: AxiomPolicyState::new(),
            var_activity,
            var_act_inc: 1.0,
            phase: vec![false; num_vars],
            preds,
            pending,
            prop_head: 0,
            qbce_to_cid: Vec::new(),
            trace,
            stats: Stats::default(),
            luby: Luby::new(),
            conflicts_since_restart: 0,
            next_reduce_db: REDUCE_DB_INTERVAL,
            start_time: Instant::now(),
            bumped: Vec::new(),
        }
    }

    pub fn stats(&self) -> &Stats {
        &self.stats
    }

    fn qbce_assign(&mut self, lit: Lit) {
        if let Some(q) = self.qbce.as_mut() {
            let unblocked = q.assign(lit);
            self.seed_unblocked(unblocked);
            self.qbce_audit();
        }
    }

    fn qbce_unassign(&mut self, lit: Lit) {
        if let Some(q) = self.qbce.as_mut() {
            let unblocked = q.unassign(lit);
            self.seed_unblocked(unblocked);
            self.qbce_audit();
        }
    }

    fn seed_unblocked(&mut self, unblocked: Vec<u32>) {
        for qid in unblocked {
            // Matrix clauses share ids with the QBCE view; learned clauses
            // map through their registration order.
            if (qid as usize) < self.db.matrix_count {
                self.pending.push_back(qid);
            } else if let Some(&cid) =
                self.qbce_to_cid.get(qid as usize - self.db.matrix_count)
            {
                self.pending.push_back(cid);
            }
        }
    }

    fn qbce_audit(&mut self) {
        if self.cfg.qbce_differential {
            let q = self.qbce.as_mut().unwrap();
            assert_eq!(
                q.state_kinds(),
                q.scratch_fixpoint(),
                "incremental QBCE state diverged from scratch recomputation"
            );
        }
    }

    /// Blocked matrix clauses are removed from propagation's view. Learned
    /// clauses stay visible even when registered in the blocking view:
    /// hiding them could hide a freshly asserted constraint and stall the
    /// search, and keeping redundant sound clauses visible is always sound.
    fn clause_invisible(&self, cid: u32) -> bool {
        match &self.qbce {
            None => false,
            Some(q) => {
                let d = &self.db.cons[cid as usize];
                !d.learned && q.is_invisible(cid)
            }
        }
    }

    /// Extends the trail and updates counters.
    fn assign(&mut self, lit: Lit, reason: Reason) {
        self.trail.assign(lit, reason);
        self.phase[lit.var().index()] = lit.is_positive();
        // Constraints containing the satisfied literal: clauses become
        // irrelevant, cubes progress.
        let touched: Vec<u32> = self.db.occ[lit.index()].clone();
        for cid in touched {
            let d = &mut self.db.cons[cid as usize];
            if d.deleted {
                continue;
            }
            match d.c.kind {
                ConstraintKind::Clause => {
                    d.n_bad += 1;
                    if d.n_bad == 1 && !d.learned {
                        self.db.matrix_unsat -= 1;
                    }
                }
                ConstraintKind::Cube => {
                    if d.n_bad == 0 {
                        self.pending.push_back(cid);
                    }
                }
            }
        }
        let touched: Vec<u32> = self.db.occ[(!lit).index()].clone();
        for cid in touched {
            let d = &mut self.db.cons[cid as usize];
            if d.deleted {
                continue;
            }
            match d.c.kind {
                ConstraintKind::Clause => {
                    if d.n_bad == 0 {
                        self.pending.push_back(cid);
                    }
                }
                ConstraintKind::Cube => d.n_bad += 1,
            }
        }
        self.qbce_assign(lit);
    }

    /// Pops the trail to `level`, reviving counters and reseeding
    /// constraints whose relevance may have changed.
    fn backtrack(&mut self, level: u32) {
        debug_assert!(level < self.trail.decision_level());
        self.stats.backtracks += 1;
        self.pop_to(level);
    }

    fn pop_to(&mut self, level: u32) {
        let mut popped: Vec<(Lit, Reason)> = Vec::new();
        let phase = &mut self.phase;
        self.trail.pop_to(level, |lit, reason| {
            phase[lit.var().index()] = lit.is_positive();
            popped.push((lit, reason));
        });
        for &(lit, reason) in &popped {
            match reason {
                Reason::UnitFromClause(cid) | Reason::UnitFromCube(cid) => {
                    self.pending.push_back(cid)
                }
                Reason::Decision => {}
            }
            let touched: Vec<u32> = self.db.occ[lit.index()].clone();
            for cid in touched {
                let d = &mut self.db.cons[cid as usize];
                if d.deleted {
                    continue;
                }
                match d.c.kind {
                    ConstraintKind::Clause => {
                        d.n_bad -= 1;
                        if d.n_bad == 0 {
                            if !d.learned {
                                self.db.matrix_unsat += 1;
                            }
                            self.pending.push_back(cid);
                        }
                    }
                    ConstraintKind::Cube => {}
                }
            }
            let touched: Vec<u32> = self.db.occ[(!lit).index()].clone();
            for cid in touched {
                let d = &mut self.db.cons[cid as usize];
                if d.deleted {
                    continue;
                }
                match d.c.kind {
                    ConstraintKind::Clause => {}
                    ConstraintKind::Cube => {
                        d.n_bad -= 1;
                        if d.n_bad == 0 {
                            self.pending.push_back(cid);
                        }
                    }
                }
            }
            self.qbce_unassign(lit);
        }
        self.prop_head = self.trail.len();
    }

    /// Reduction-aware status scan of one constraint.
    fn scan(&self, cid: u32) -> Scan {
        let d = &self.db.cons[cid as usize];
        if d.deleted || d.n_bad > 0 {
            return Scan::Nothing;
        }
        match d.c.kind {
            ConstraintKind::Clause => {
                if self.clause_invisible(cid) {
                    return Scan::Nothing;
                }
                let mut unassigned_e: Option<Lit> = None;
                let mut n_e = 0;
                for &l in d.c.lits() {
                    if self.trail.lit_value(l).is_some() {
                        continue;
                    }
                    if self.deps.quant(l.var()) == Quant::Exists {
                        n_e += 1;
                        if n_e > 1 {
                            return Scan::Nothing;
                        }
                        unassigned_e = Some(l);
                    }
                }
                match unassigned_e {
                    None => Scan::ClauseConflict,
                    Some(e) => {
                        // Unit iff every unassigned universal is independent
                        // of the remaining existential.
                        for &l in d.c.lits() {
                            if self.trail.lit_value(l).is_none()
                                && self.deps.quant(l.var()) == Quant::Forall
                                && self.deps.depends(l.var(), e.var())
                            {
                                return Scan::Nothing;
                            }
                        }
                        Scan::ClauseUnit(e)
                    }
                }
            }
            ConstraintKind::Cube => {
                let mut unassigned_u: Option<Lit> = None;
                let mut n_u = 0;
                for &l in d.c.lits() {
                    if self.trail.lit_value(l).is_some() {
                        continue;
                    }
                    if self.deps.quant(l.var()) == Quant::Forall {
                        n_u += 1;
                        if n_u > 1 {
                            return Scan::Nothing;
                        }
                        unassigned_u = Some(l);
                    }
                }
                match unassigned_u {
                    None => Scan::CubeEmpty,
                    Some(u) => {
                        for &l in d.c.lits() {
                            if self.trail.lit_value(l).is_none()
                                && self.deps.quant(l.var()) == Quant::Exists
                                && self.deps.depends(l.var(), u.var())
                            {
                                return Scan::Nothing;
                            }
                        }
                        Scan::CubeUnit(u)
                    }
                }
            }
        }
    }

    /// Audit mode: a full scan must find no unit or empty constraint at a
    /// propagation fixpoint.
    fn audit_fixpoint(&self) {
        for cid in 0..self.db.cons.len() as u32 {
            match self.scan(cid) {
                Scan::Nothing => {}
                _ => panic!("propagation fixpoint audit failed at constraint {cid}"),
            }
        }
    }

    /// Propagates to fixpoint, then runs conflict/solution detection:
    /// syntactic checks first, then QBCE, then the abstraction checks in
    /// cube/clause order, each in a resource-bounded way under the policy.
    fn propagate(&mut self) -> Option<Found> {
        while self.prop_head < self.trail.len() || !self.pending.is_empty() {
            if self.prop_head < self.trail.len() {
                self.prop_head += 1;
                continue; // counters were updated at assign time
            }
            let cid = self.pending.pop_front().unwrap();
            match self.scan(cid) {
                Scan::Nothing => {}
                Scan::ClauseConflict => return Some(Found::Conflict(cid)),
                Scan::CubeEmpty => return Some(Found::SatisfiedCube(cid)),
                Scan::ClauseUnit(l) => {
                    self.stats.propagations += 1;
                    self.assign(l, Reason::UnitFromClause(cid));
                }
                Scan::CubeUnit(l) => {
                    self.stats.propagations += 1;
                    self.assign(!l, Reason::UnitFromCube(cid));
                }
            }
        }
        if self.cfg.check_fixpoint {
            self.audit_fixpoint();
        }
        // Conflict/solution detection beyond the syntactic fixpoint.
        if self.db.matrix_unsat == 0 {
            return Some(Found::AllSatisfied);
        }
        if self.cfg.use_gen_cube_axiom {
            if let Some(q) = &self.qbce {
                if q.all_satisfied_or_blocked() {
                    return Some(Found::QbceSatisfied);
                }
            }
        }
        if self.cfg.use_gen_cube_axiom && self.policy_cu.should_apply() {
            self.stats.gen_cu_attempts += 1;
            let assigned: Vec<Lit> = self.trail.lits().collect();
            let res = self.gen.as_mut().unwrap().check_sat_trivial_truth(&assigned);
            self.stats.sat_core_conflicts += res.cost;
            let hit = res.outcome == AbstractionOutcome::Established;
            self.policy_cu.on_result(hit);
            if hit {
                self.stats.gen_cu_successes += 1;
                return Some(Found::GenCubeHit);
            }
        }
        if self.cfg.use_gen_clause_axiom && self.policy_cl.should_apply() {
            self.stats.gen_cl_attempts += 1;
            let assigned: Vec<Lit> = self.trail.lits().collect();
            let res = self
                .gen
                .as_mut()
                .unwrap()
                .check_unsat_existential_abstraction(&assigned);
            self.stats.sat_core_conflicts += res.cost;
            let hit = res.outcome == AbstractionOutcome::Established;
            self.policy_cl.on_result(hit);
            if hit {
                self.stats.gen_cl_successes += 1;
                return Some(Found::GenClauseHit);
            }
        }
        None
    }

    /// Decision eligibility: leftmost nonempty block of ψ[A] under the
    /// trivial relation; all dependency predecessors assigned under the
    /// standard one.
    fn eligible_vars(&self) -> Vec<Var> {
        match self.cfg.dep_scheme {
            DepKind::Trivial => {
                let mut out = Vec::new();
                for b in self.psi.prefix.blocks() {
                    for &v in &b.vars {
                        if self.trail.value(v).is_none() {
                            out.push(v);
                        }
                    }
                    if !out.is_empty() {
                        break;
                    }
                }
                out
            }
            DepKind::Standard => self
                .psi
                .prefix
                .vars()
                .filter(|&v| {
                    self.trail.value(v).is_none()
                        && self.preds[v.index()]
                            .iter()
                            .all(|&x| self.trail.value(x).is_some())
                })
                .collect(),
        }
    }

    fn decide(&mut self) {
        let candidates = self.eligible_vars();
        let v = candidates
            .iter()
            .copied()
            .max_by(|&a, &b| {
                self.var_activity[a.index()]
                    .partial_cmp(&self.var_activity[b.index()])
                    .unwrap()
                    .then(b.id().cmp(&a.id()))
            })
            .expect("decision requested with no eligible variable");
        debug_assert!(self.audit_decision(v), "decision violates the dependency relation");
        self.stats.decisions += 1;
        self.trail.new_level();
        let lit = Lit::new(v, self.phase[v.index()]);
        self.assign(lit, Reason::Decision);
    }

    /// Independent audit that a decision variable's dependency predecessors
    /// are all assigned (the trail is a QCDCL assignment).
    fn audit_decision(&self, y: Var) -> bool {
        self.psi
            .prefix
            .vars()
            .filter(|&x| self.deps.depends(x, y))
            .all(|x| self.trail.value(x).is_some())
    }

    fn bump_vars(&mut self) {
        let bumped = std::mem::take(&mut self.bumped);
        for v in &bumped {
            self.var_activity[v.index()] += self.var_act_inc;
            if self.var_activity[v.index()] > 1e100 {
                for a in &mut self.var_activity {
                    *a *= 1e-100;
                }
                self.var_act_inc *= 1e-100;
            }
        }
        self.var_act_inc /= 0.95;
        self.bumped = bumped;
        self.bumped.clear();
    }

    /// Handles a detection event: derives the start constraint, analyzes,
    /// learns, and backtracks. Returns the final verdict on termination.
    fn handle(&mut self, found: Found) -> Option<Verdict> {
        let start = match found {
            Found::Conflict(cid) => {
                self.stats.conflicts += 1;
                self.conflicts_since_restart += 1;
                AnalyzeStart::Db(cid)
            }
            Found::SatisfiedCube(cid) => {
                self.stats.solutions += 1;
                AnalyzeStart::Db(cid)
            }
            Found::AllSatisfied => {
                self.stats.solutions += 1;
                self.stats.cu_init_solutions += 1;
                let assigned: Vec<Lit> = self.trail.lits().collect();
                let cube = learning::initial_cube(&assigned, self.psi)
                    .expect("all-satisfied detection implies a satisfying assignment");
                let id = self.trace.emit(
                    StepKind::CuAxiom,
                    cube.lits().to_vec(),
                    vec![],
                    Some(assigned),
                );
                AnalyzeStart::Fresh {
                    constraint: cube,
                    trace_id: id,
                }
            }
            Found::QbceSatisfied => {
                self.stats.solutions += 1;
                self.stats.qbce_solutions += 1;
                let assigned: Vec<Lit> = self.trail.lits().collect();
                let cube = crate::genaxioms::derive_generalized_constraint(
                    &assigned,
                    ConstraintKind::Cube,
                    self.psi,
                );
                self.trace.comment_next("gen qbce");
                let id = self.trace.emit(
                    StepKind::GenCuAxiom,
                    cube.lits().to_vec(),
                    vec![],
                    Some(assigned),
                );
                AnalyzeStart::Fresh {
                    constraint: cube,
                    trace_id: id,
                }
            }
            Found::GenCubeHit => {
                self.stats.solutions += 1;
                let assigned: Vec<Lit> = self.trail.lits().collect();
                let cube = crate::genaxioms::derive_generalized_constraint(
                    &assigned,
                    ConstraintKind::Cube,
                    self.psi,
                );
                self.trace.comment_next("gen tt");
                let id = self.trace.emit(
                    StepKind::GenCuAxiom,
                    cube.lits().to_vec(),
                    vec![],
                    Some(assigned),
                );
                AnalyzeStart::Fresh {
                    constraint: cube,
                    trace_id: id,
                }
            }
            Found::GenClauseHit => {
                self.stats.conflicts += 1;
                self.conflicts_since_restart += 1;
                let assigned: Vec<Lit> = self.trail.lits().collect();
                let clause = crate::genaxioms::derive_generalized_constraint(
                    &assigned,
                    ConstraintKind::Clause,
                    self.psi,
                );
                self.trace.comment_next("gen ea");
                let id = self.trace.emit(
                    StepKind::GenClAxiom,
                    clause.lits().to_vec(),
                    vec![],
                    Some(assigned),
                );
                AnalyzeStart::Fresh {
                    constraint: clause,
                    trace_id: id,
                }
            }
        };

        let outcome = {
            let mut ctx = AnalyzeCtx {
                trail: &self.trail,
                db: &mut self.db,
                deps: &self.deps,
                prefix: &self.psi.prefix,
                ldq: self.cfg.ldq,
                trace: &mut self.trace,
                bumped: &mut self.bumped,
            };
            learning::analyze(&mut ctx, start)
        };
        self.bump_vars();
        self.db.decay_activity();

        if outcome.learned.is_empty() {
            let verdict = match outcome.learned.kind {
                ConstraintKind::Clause => Verdict::Unsat,
                ConstraintKind::Cube => Verdict::Sat,
            };
            return Some(verdict);
        }

        self.backtrack(outcome.backtrack_level);

        match outcome.unchanged_start.filter(|&cid| self.db.cons[cid as usize].learned) {
            Some(cid) => {
                // An already-learned start constraint is asserting as it
                // stands; re-propagating it flips the asserting literal
                // instead of relearning a duplicate. Matrix clauses do not
                // take this path: the learned store is what propagation is
                // guaranteed to see once QBCE hides parts of the matrix.
                self.pending.push_back(cid);
            }
            None => {
                let kind = outcome.learned.kind;
                let cid = self.db.add(outcome.learned, true, &self.trail);
                self.db.cons[cid as usize].trace_id = Some(outcome.trace_id);
                self.db.bump_activity(cid);
                match kind {
                    ConstraintKind::Clause => {
                        self.stats.learned_clauses += 1;
                        if let Some(g) = self.gen.as_mut() {
                            g.add_learned_clause(self.db.cons[cid as usize].c.lits());
                        }
                        if self.cfg.qbce_include_learned {
                            if let Some(q) = self.qbce.as_mut() {
                                let lits = self.db.cons[cid as usize].c.lits().to_vec();
                                let qid = q.register_clause(&lits);
                                self.db.cons[cid as usize].qbce_id = Some(qid);
                                self.qbce_to_cid.push(cid);
                                let unblocked = q.recompute_after_add(qid);
                                self.seed_unblocked(unblocked);
                                self.qbce_audit();
                            }
                        }
                    }
                    ConstraintKind::Cube => self.stats.learned_cubes += 1,
                }
                self.pending.push_back(cid);
            }
        }

        // Restarts on the Luby schedule; constraint deletion on a fixed
        // conflict interval.
        if self.conflicts_since_restart >= RESTART_INTERVAL * self.peek_luby() {
            self.conflicts_since_restart = 0;
            self.advance_luby();
            if self.trail.decision_level() > 0 {
                self.stats.restarts += 1;
                self.pop_to(0);
            }
        }
        if self.stats.conflicts + self.stats.solutions >= self.next_reduce_db {
            self.next_reduce_db += REDUCE_DB_INTERVAL;
            self.reduce_db();
        }
        None
    }

    fn peek_luby(&self) -> u64 {
        let mut l = Luby {
            idx: self.luby.idx,
        };
        l.next_interval()
    }

    fn advance_luby(&mut self) {
        self.luby.next_interval();
    }

    /// Deletes the least-active half of the learned constraints that are
    /// not currently reasons on the trail.
    fn reduce_db(&mut self) {
        let mut locked = vec![false; self.db.cons.len()];
        for (_, reason) in &self.trail.entries {
            match reason {
                Reason::UnitFromClause(cid) | Reason::UnitFromCube(cid) => {
                    locked[*cid as usize] = true
                }
                Reason::Decision => {}
            }
        }
        let mut candidates: Vec<u32> = (0..self.db.cons.len() as u32)
            .filter(|&cid| {
                let d = &self.db.cons[cid as usize];
                d.learned && !d.deleted && !locked[cid as usize]
            })
            .collect();
        candidates.sort_by(|&a, &b| {
            self.db.cons[a as usize]
                .activity
                .partial_cmp(&self.db.cons[b as usize].activity)
                .unwrap()
                .then(a.cmp(&b))
        });
        let n_delete = candidates.len() / 2;
        for &cid in &candidates[..n_delete] {
            self.db.cons[cid as usize].deleted = true;
            self.stats.deleted_constraints += 1;
            if let Some(qid) = self.db.cons[cid as usize].qbce_id {
                if let Some(q) = self.qbce.as_mut() {
                    let unblocked = q.delete_clause(qid);
                    self.seed_unblocked(unblocked);
                }
            }
        }
        if self.cfg.qbce_include_learned {
            self.qbce_audit();
        }
        // Compact occurrence lists so deleted constraints stop costing
        // anything on the assignment path.
        for occ in &mut self.db.occ {
            occ.clear();
        }
        for (cid, d) in self.db.cons.iter().enumerate() {
            if d.deleted {
                continue;
            }
            for &l in d.c.lits() {
                self.db.occ[l.index()].push(cid as u32);
            }
        }
    }

    fn check_limits(&self) -> Option<LimitReason> {
        if let Some(max) = self.cfg.max_conflicts {
            if self.stats.conflicts >= max {
                return Some(LimitReason::Conflicts);
            }
        }
        if let Some(max) = self.cfg.max_decisions {
            if self.stats.decisions >= max {
                return Some(LimitReason::Decisions);
            }
        }
        if let Some(max) = self.cfg.max_seconds {
            if self.start_time.elapsed().as_secs_f64() >= max {
                return Some(LimitReason::Time);
            }
        }
        None
    }

    pub fn run(mut self) -> SolveResult {
        let verdict = loop {
            if let Some(reason) = self.check_limits() {
                break Verdict::Unknown(reason);
            }
            match self.propagate() {
                Some(found) => {
                    if let Some(verdict) = self.handle(found) {
                        break verdict;
                    }
                }
                None => self.decide(),
            }
        };
        if let Some(q) = &self.qbce {
            self.stats.qbce_rechecks = q.rechecks;
        }
        let trace = if self.cfg.trace {
            Some(self.trace.finish(verdict.truth()))
        } else {
            None
        };
        SolveResult {
            verdict,
            stats: self.stats,
            trace,
        }
    }
}

/// Solves a PCNF under the given configuration. Deterministic for a fixed
/// (formula, configuration, seed) triple as long as no time limit is set.
pub fn solve(psi: &Pcnf, cfg: SolverConfig) -> SolveResult {
    Solver::new(psi, cfg).run()
}
