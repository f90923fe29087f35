//! Core data model: literals, quantifier prefixes, clauses/cubes, PCNFs, and
//! assignments, together with the semantics of a formula under an assignment.

use std::fmt;

/// A propositional variable, identified by a positive integer.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Var(u32);

impl Var {
    pub fn new(id: u32) -> Var {
        assert!(id >= 1, "variable ids are positive");
        assert!(id <= u32::MAX >> 1, "variable id too large for literal packing");
        Var(id)
    }

    #[inline]
    pub fn id(self) -> u32 {
        self.0
    }

    /// Zero-based index for dense per-variable tables.
    #[inline]
    pub fn index(self) -> usize {
        (self.0 - 1) as usize
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A literal: a variable together with a polarity. Negation is an involution
/// and a literal is never equal to its negation.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Lit(u32);

impl Lit {
    #[inline]
    pub fn new(var: Var, positive: bool) -> Lit {
        Lit(var.0 << 1 | u32::from(!positive))
    }

    #[inline]
    pub fn positive(var: Var) -> Lit {
        Lit::new(var, true)
    }

    #[inline]
    pub fn negative(var: Var) -> Lit {
        Lit::new(var, false)
    }

    #[inline]
    pub fn var(self) -> Var {
        Var(self.0 >> 1)
    }

    #[inline]
    pub fn is_positive(self) -> bool {
        self.0 & 1 == 0
    }

    /// Dense index usable for literal-indexed tables (2 slots per variable).
    #[inline]
    pub fn index(self) -> usize {
        (self.0 - 2) as usize
    }

    pub fn from_dimacs(l: i64) -> Lit {
        assert!(l != 0, "0 is not a literal");
        Lit::new(Var::new(l.unsigned_abs() as u32), l > 0)
    }

    pub fn to_dimacs(self) -> i64 {
        let v = i64::from(self.var().0);
        if self.is_positive() {
            v
        } else {
            -v
        }
    }
}

impl std::ops::Not for Lit {
    type Output = Lit;

    #[inline]
    fn not(self) -> Lit {
        Lit(self.0 ^ 1)
    }
}

impl fmt::Display for Lit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_dimacs())
    }
}

impl fmt::Debug for Lit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_dimacs())
    }
}

/// Quantifier of a prefix block.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum Quant {
    Forall,
    Exists,
}

impl Quant {
    pub fn dual(self) -> Quant {
        match self {
            Quant::Forall => Quant::Exists,
            Quant::Exists => Quant::Forall,
        }
    }
}

/// One block of the quantifier prefix. `level` is the 1-based block index.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct QuantBlock {
    pub quant: Quant,
    pub vars: Vec<Var>,
    pub level: u32,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum PrefixError {
    DuplicateVar(Var),
    EmptyBlock,
}

impl fmt::Display for PrefixError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PrefixError::DuplicateVar(v) => write!(f, "variable {v} quantified twice"),
            PrefixError::EmptyBlock => write!(f, "empty quantifier block"),
        }
    }
}

impl std::error::Error for PrefixError {}

/// The quantifier prefix: an ordered sequence of blocks with alternating
/// quantifiers and pairwise disjoint variable sets. Adjacent same-quantifier
/// blocks passed to the constructor are merged, so the alternation invariant
/// holds by construction.
#[derive(Clone, Debug)]
pub struct Prefix {
    blocks: Vec<QuantBlock>,
    // Indexed by Var::index(); None for variables not in the prefix.
    info: Vec<Option<(Quant, u32)>>,
}

impl Prefix {
    pub fn empty() -> Prefix {
        Prefix {
            blocks: Vec::new(),
            info: Vec::new(),
        }
    }

    pub fn new(raw: Vec<(Quant, Vec<Var>)>) -> Result<Prefix, PrefixError> {
        let mut blocks: Vec<QuantBlock> = Vec::new();
        for (quant, vars) in raw {
            if vars.is_empty() {
                continue;
            }
            match blocks.last_mut() {
                Some(b) if b.quant == quant => b.vars.extend(vars),
                _ => blocks.push(QuantBlock {
                    quant,
                    vars,
                    level: 0,
                }),
            }
        }
        let mut info: Vec<Option<(Quant, u32)>> = Vec::new();
        for (i, b) in blocks.iter_mut().enumerate() {
            b.level = (i + 1) as u32;
            b.vars.sort_unstable();
            for &v in &b.vars {
                if info.len() < v.index() + 1 {
                    info.resize(v.index() + 1, None);
                }
                if info[v.index()].is_some() {
                    return Err(PrefixError::DuplicateVar(v));
                }
                info[v.index()] = Some((b.quant, b.level));
            }
        }
        Ok(Prefix { blocks, info })
    }

    pub fn blocks(&self) -> &[QuantBlock] {
        &self.blocks
    }

    pub fn contains(&self, v: Var) -> bool {
        self.info.get(v.index()).is_some_and(|e| e.is_some())
    }

    pub fn quant(&self, v: Var) -> Quant {
        self.info[v.index()].expect("variable not in prefix").0
    }

    pub fn level(&self, v: Var) -> u32 {
        self.info[v.index()].expect("variable not in prefix").1
    }

    pub fn try_quant(&self, v: Var) -> Option<Quant> {
        self.info.get(v.index()).copied().flatten().map(|e| e.0)
    }

    /// The literal order `x ≤_Π y` lifted to variables: block of x is not to
    /// the right of block of y.
    pub fn le(&self, x: Var, y: Var) -> bool {
        self.level(x) <= self.level(y)
    }

    /// Strict block order `x <_Π y`.
    pub fn lt(&self, x: Var, y: Var) -> bool {
        self.level(x) < self.level(y)
    }

    pub fn num_vars(&self) -> usize {
        self.blocks.iter().map(|b| b.vars.len()).sum()
    }

    pub fn max_var(&self) -> u32 {
        self.blocks
            .iter()
            .flat_map(|b| b.vars.iter())
            .map(|v| v.id())
            .max()
            .unwrap_or(0)
    }

    pub fn vars(&self) -> impl Iterator<Item = Var> + '_ {
        self.blocks.iter().flat_map(|b| b.vars.iter().copied())
    }
}

impl PartialEq for Prefix {
    fn eq(&self, other: &Self) -> bool {
        self.blocks == other.blocks
    }
}

impl Eq for Prefix {}

/// Whether a constraint is a clause (disjunction) or a cube (conjunction).
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum ConstraintKind {
    Clause,
    Cube,
}

impl ConstraintKind {
    /// Quantifier type removed by reduction: universals from clauses,
    /// existentials from cubes.
    pub fn reducible_quant(self) -> Quant {
        match self {
            ConstraintKind::Clause => Quant::Forall,
            ConstraintKind::Cube => Quant::Exists,
        }
    }
}

/// A clause or cube with a canonical literal order (prefix level, then
/// variable id, then polarity). `merged` lists universal variables occurring
/// in both polarities; these only arise from long-distance resolution.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Constraint {
    pub kind: ConstraintKind,
    lits: Vec<Lit>,
    merged: Vec<Var>,
}

impl Constraint {
    /// Builds a constraint, canonicalizing literal order and deriving the
    /// merged-variable set from both-polarity occurrences. Every variable
    /// must occur in the prefix.
    pub fn new(kind: ConstraintKind, mut lits: Vec<Lit>, prefix: &Prefix) -> Constraint {
        for l in &lits {
            assert!(prefix.contains(l.var()), "literal {l} not in prefix");
        }
        lits.sort_unstable_by_key(|l| (prefix.level(l.var()), l.var().id(), !l.is_positive()));
        lits.dedup();
        let mut merged = Vec::new();
        for w in lits.windows(2) {
            if w[0].var() == w[1].var() {
                merged.push(w[0].var());
            }
        }
        Constraint { kind, lits, merged }
    }

    /// Builds an input clause; returns None for tautologies (a variable in
    /// both polarities), which input matrices must not contain.
    pub fn input_clause(lits: Vec<Lit>, prefix: &Prefix) -> Option<Constraint> {
        let c = Constraint::new(ConstraintKind::Clause, lits, prefix);
        if c.merged.is_empty() {
            Some(c)
        } else {
            None
        }
    }

    /// Constructs from literals already in canonical order with a matching
    /// merged set. Crate-internal fast path for rule implementations.
    pub(crate) fn from_parts(kind: ConstraintKind, lits: Vec<Lit>, merged: Vec<Var>) -> Constraint {
        Constraint { kind, lits, merged }
    }

    pub fn lits(&self) -> &[Lit] {
        &self.lits
    }

    pub fn merged(&self) -> &[Var] {
        &self.merged
    }

    pub fn is_empty(&self) -> bool {
        self.lits.is_empty()
    }

    pub fn len(&self) -> usize {
        self.lits.len()
    }

    pub fn contains(&self, lit: Lit) -> bool {
        self.lits.contains(&lit)
    }
}

/// Diagnostics produced while constructing a PCNF from raw clauses.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub struct PcnfDiagnostics {
    pub dropped_tautologies: usize,
    pub free_vars_closed: usize,
}

/// A prenex CNF: a quantifier prefix and a matrix of non-tautological
/// clauses whose variables all occur in the prefix.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Pcnf {
    pub prefix: Prefix,
    pub clauses: Vec<Constraint>,
}

impl Pcnf {
    pub fn empty() -> Pcnf {
        Pcnf {
            prefix: Prefix::empty(),
            clauses: Vec::new(),
        }
    }

    /// Builds a PCNF from a prefix and raw clauses. Variables mentioned only
    /// in the matrix are closed into a synthetic outermost existential block,
    /// and tautological clauses are dropped; both events are counted.
    pub fn new(prefix: Prefix, raw_clauses: Vec<Vec<Lit>>) -> (Pcnf, PcnfDiagnostics) {
        let mut diags = PcnfDiagnostics::default();

        let mut free: Vec<Var> = Vec::new();
        for c in &raw_clauses {
            for l in c {
                if !prefix.contains(l.var()) && !free.contains(&l.var()) {
                    free.push(l.var());
                }
            }
        }
        let prefix = if free.is_empty() {
            prefix
        } else {
            free.sort_unstable();
            diags.free_vars_closed = free.len();
            let mut raw: Vec<(Quant, Vec<Var>)> = vec![(Quant::Exists, free)];
            for b in prefix.blocks() {
                raw.push((b.quant, b.vars.clone()));
            }
            Prefix::new(raw).expect("closure preserves disjointness")
        };

        let mut clauses = Vec::with_capacity(raw_clauses.len());
        for lits in raw_clauses {
            match Constraint::input_clause(lits, &prefix) {
                Some(c) => clauses.push(c),
                None => diags.dropped_tautologies += 1,
            }
        }
        (Pcnf { prefix, clauses }, diags)
    }

    pub fn max_var(&self) -> u32 {
        self.prefix.max_var()
    }

    pub fn has_empty_clause(&self) -> bool {
        self.clauses.iter().any(|c| c.is_empty())
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct DuplicateAssignment(pub Var);

impl fmt::Display for DuplicateAssignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "variable {} assigned twice", self.0)
    }
}

impl std::error::Error for DuplicateAssignment {}

/// A partial assignment, recording both the values and the order in which
/// variables were assigned. Representable as a set of literals.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct Assignment {
    values: Vec<Option<bool>>,
    order: Vec<Lit>,
}

impl Assignment {
    pub fn new() -> Assignment {
        Assignment::default()
    }

    pub fn from_lits(lits: &[Lit]) -> Result<Assignment, DuplicateAssignment> {
        let mut a = Assignment::new();
        for &l in lits {
            a.assign(l)?;
        }
        Ok(a)
    }

    pub fn assign(&mut self, lit: Lit) -> Result<(), DuplicateAssignment> {
        let idx = lit.var().index();
        if self.values.len() < idx + 1 {
            self.values.resize(idx + 1, None);
        }
        if self.values[idx].is_some() {
            return Err(DuplicateAssignment(lit.var()));
        }
        self.values[idx] = Some(lit.is_positive());
        self.order.push(lit);
        Ok(())
    }

    pub fn value(&self, v: Var) -> Option<bool> {
        self.values.get(v.index()).copied().flatten()
    }

    /// Truth value of a literal under this assignment, if its variable is
    /// assigned.
    pub fn lit_value(&self, l: Lit) -> Option<bool> {
        self.value(l.var()).map(|b| b == l.is_positive())
    }

    pub fn lits(&self) -> &[Lit] {
        &self.order
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }
}

/// Status of a single constraint under an assignment, before any reduction.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum ConstraintStatus {
    Satisfied,
    Falsified,
    Unit(Lit),
    Unresolved,
}

/// Evaluates `C[A]` literal-wise. A clause is unit when exactly one literal
/// is unassigned and all others are false; a cube is unit when exactly one
/// literal is unassigned and all others are true. Reduction-aware unit
/// detection is the engine's job, not this function's.
pub fn constraint_status(c: &Constraint, a: &Assignment) -> ConstraintStatus {
    // For clauses `pass` is a satisfied literal, for cubes a falsified one:
    // either immediately decides the status.
    let decided_by = match c.kind {
        ConstraintKind::Clause => true,
        ConstraintKind::Cube => false,
    };
    let mut unassigned = None;
    let mut n_unassigned = 0usize;
    for &l in c.lits() {
        match a.lit_value(l) {
            Some(v) if v == decided_by => {
                return match c.kind {
                    ConstraintKind::Clause => ConstraintStatus::Satisfied,
                    ConstraintKind::Cube => ConstraintStatus::Falsified,
                };
            }
            Some(_) => {}
            None => {
                unassigned = Some(l);
                n_unassigned += 1;
            }
        }
    }
    match (n_unassigned, c.kind) {
        (0, ConstraintKind::Clause) => ConstraintStatus::Falsified,
        (0, ConstraintKind::Cube) => ConstraintStatus::Satisfied,
        (1, _) => ConstraintStatus::Unit(unassigned.unwrap()),
        _ => ConstraintStatus::Unresolved,
    }
}

/// The PCNF `ψ[A]`: clauses containing a true literal are removed, false
/// literals are deleted, assigned variables leave the prefix, and empty
/// blocks are dropped (merging newly adjacent same-quantifier blocks).
/// The result may contain the empty clause.
pub fn apply_assignment(psi: &Pcnf, a: &Assignment) -> Pcnf {
    for &l in a.lits() {
        assert!(
            psi.prefix.contains(l.var()),
            "assigned variable {} not in prefix",
            l.var()
        );
    }
    let raw = psi
        .prefix
        .blocks()
        .iter()
        .map(|b| {
            (
                b.quant,
                b.vars
                    .iter()
                    .copied()
                    .filter(|&v| a.value(v).is_none())
                    .collect::<Vec<_>>(),
            )
        })
        .collect();
    let prefix = Prefix::new(raw).expect("restriction preserves disjointness");

    let mut clauses = Vec::new();
    'clauses: for c in &psi.clauses {
        let mut lits = Vec::with_capacity(c.len());
        for &l in c.lits() {
            match a.lit_value(l) {
                Some(true) => continue 'clauses,
                Some(false) => {}
                None => lits.push(l),
            }
        }
        clauses.push(Constraint::new(ConstraintKind::Clause, lits, &prefix));
    }
    Pcnf { prefix, clauses }
}
