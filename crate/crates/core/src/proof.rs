//! Resolution traces: emission during solving and standalone checking.
//!
//! Text format, one step per line:
//!
//! ```text
//! p qrp-x <max-var>
//! <id> <lit>* 0 <antecedent>* 0 [<tag> <trail-lit>* 0]
//! r sat | r unsat
//! ```
//!
//! Axioms have no antecedents; resolution steps have two, reduction steps
//! one. The optional tag section records the assignment an axiom was applied
//! under: `a` marks a cube axiom (assignment satisfies the matrix
//! syntactically), `g` a generalized clause axiom, and `s` a generalized
//! cube axiom. Merged literals of long-distance resolvents are written in
//! both polarities. `c` lines are comments.

use crate::depsched::{build_deps, DepKind, DependencyRelation};
use crate::formula::{Assignment, ConstraintKind, Lit, Pcnf, Quant, Var};
use crate::oracle::{self, OracleBudget, Truth};
use std::collections::HashMap;
use std::fmt;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum StepKind {
    ClAxiom,
    CuAxiom,
    GenClAxiom,
    GenCuAxiom,
    Res,
    Reduce,
}

impl StepKind {
    pub fn constraint_kind(self) -> Option<ConstraintKind> {
        match self {
            StepKind::ClAxiom | StepKind::GenClAxiom => Some(ConstraintKind::Clause),
            StepKind::CuAxiom | StepKind::GenCuAxiom => Some(ConstraintKind::Cube),
            StepKind::Res | StepKind::Reduce => None,
        }
    }
}

/// One derivation step. `note` carries the trail literals for axiom steps
/// that were applied under an assignment.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct TraceStep {
    pub id: u64,
    pub kind: StepKind,
    pub lits: Vec<Lit>,
    pub antecedents: Vec<u64>,
    pub note: Option<Vec<Lit>>,
}

#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct Trace {
    pub max_var: u32,
    pub steps: Vec<TraceStep>,
    pub verdict: Option<Truth>,
    /// Comment lines anchored before the step with the given id; the
    /// solver records the check kind behind each generalized-axiom step
    /// here. Comments are not reconstructed by parsing.
    pub comments: Vec<(u64, String)>,
}

fn push_lits(out: &mut String, lits: &[Lit]) {
    for l in lits {
        out.push_str(&format!("{l} "));
    }
    out.push('0');
}

/// Formats one step in the trace line format.
pub fn format_step(step: &TraceStep) -> String {
    let mut s = format!("{} ", step.id);
    push_lits(&mut s, &step.lits);
    s.push(' ');
    let mut ants = String::new();
    for a in &step.antecedents {
        ants.push_str(&format!("{a} "));
    }
    s.push_str(&ants);
    s.push('0');
    let tag = match step.kind {
        StepKind::CuAxiom => Some('a'),
        StepKind::GenClAxiom => Some('g'),
        StepKind::GenCuAxiom => Some('s'),
        _ => None,
    };
    if let Some(t) = tag {
        s.push_str(&format!(" {t} "));
        push_lits(&mut s, step.note.as_deref().unwrap_or(&[]));
    }
    s.push('\n');
    s
}

/// Appends one step line to a sink. Callers keep ids monotone per sink.
pub fn emit<W: std::io::Write>(sink: &mut W, step: &TraceStep) -> std::io::Result<()> {
    sink.write_all(format_step(step).as_bytes())
}

/// Serializes a whole trace, including header, comments, and result line.
pub fn write_trace(trace: &Trace) -> String {
    let mut out = format!("p qrp-x {}\n", trace.max_var);
    let mut ci = 0;
    for step in &trace.steps {
        while ci < trace.comments.len() && trace.comments[ci].0 <= step.id {
            out.push_str(&format!("c {}\n", trace.comments[ci].1));
            ci += 1;
        }
        out.push_str(&format_step(step));
    }
    while ci < trace.comments.len() {
        out.push_str(&format!("c {}\n", trace.comments[ci].1));
        ci += 1;
    }
    match trace.verdict {
        Some(Truth::Sat) => out.push_str("r sat\n"),
        Some(Truth::Unsat) => out.push_str("r unsat\n"),
        None => {}
    }
    out
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct TraceParseError {
    pub line: usize,
    pub msg: String,
}

impl fmt::Display for TraceParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "trace line {}: {}", self.line, self.msg)
    }
}

impl std::error::Error for TraceParseError {}

/// Parses the trace format. `parse_trace(write_trace(t)) == t` for every
/// trace the solver emits.
pub fn parse_trace(input: &[u8]) -> Result<Trace, TraceParseError> {
    let text = std::str::from_utf8(input).map_err(|_| TraceParseError {
        line: 0,
        msg: "trace is not valid UTF-8".into(),
    })?;
    let mut trace = Trace::default();
    let mut saw_header = false;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        let lineno = lineno + 1;
        let err = |msg: String| TraceParseError { line: lineno, msg };
        if line.is_empty() || line.starts_with("c ") || line == "c" {
            continue;
        }
        if let Some(rest) = line.strip_prefix("p ") {
            let mut it = rest.split_ascii_whitespace();
            if it.next() != Some("qrp-x") {
                return Err(err("expected `p qrp-x <max-var>`".into()));
            }
            trace.max_var = it
                .next()
                .and_then(|w| w.parse().ok())
                .ok_or_else(|| err("bad max-var in header".into()))?;
            saw_header = true;
            continue;
        }
        if let Some(rest) = line.strip_prefix("r ") {
            trace.verdict = Some(match rest.trim() {
                "sat" => Truth::Sat,
                "unsat" => Truth::Unsat,
                other => return Err(err(format!("unknown result `{other}`"))),
            });
            continue;
        }
        if !saw_header {
            return Err(err("step before header".into()));
        }
        let mut toks = line.split_ascii_whitespace();
        let id: u64 = toks
            .next()
            .and_then(|w| w.parse().ok())
            .ok_or_else(|| err("bad step id".into()))?;
        let read_lits = |toks: &mut dyn Iterator<Item = &str>| -> Result<Vec<Lit>, TraceParseError> {
            let mut lits = Vec::new();
            loop {
                let w = toks
                    .next()
                    .ok_or_else(|| TraceParseError {
                        line: lineno,
                        msg: "missing 0 terminator".into(),
                    })?;
                let n: i64 = w.parse().map_err(|_| TraceParseError {
                    line: lineno,
                    msg: format!("bad literal `{w}`"),
                })?;
                if n == 0 {
                    return Ok(lits);
                }
                lits.push(Lit::from_dimacs(n));
            }
        };
        let lits = read_lits(&mut toks)?;
        let mut antecedents = Vec::new();
        loop {
            let w = toks
                .next()
                .ok_or_else(|| err("missing antecedent terminator".into()))?;
            let n: u64 = w
                .parse()
                .map_err(|_| err(format!("bad antecedent `{w}`")))?;
            if n == 0 {
                break;
            }
            antecedents.push(n);
        }
        let (kind, note) = match toks.next() {
            None => {
                let kind = match antecedents.len() {
                    0 => StepKind::ClAxiom,
                    1 => StepKind::Reduce,
                    2 => StepKind::Res,
                    n => return Err(err(format!("{n} antecedents"))),
                };
                (kind, None)
            }
            Some(tag) => {
                if !antecedents.is_empty() {
                    return Err(err("tagged step with antecedents".into()));
                }
                let kind = match tag {
                    "a" => StepKind::CuAxiom,
                    "g" => StepKind::GenClAxiom,
                    "s" => StepKind::GenCuAxiom,
                    other => return Err(err(format!("unknown tag `{other}`"))),
                };
                (kind, Some(read_lits(&mut toks)?))
            }
        };
        if toks.next().is_some() {
            return Err(err("trailing tokens".into()));
        }
        trace.steps.push(TraceStep {
            id,
            kind,
            lits,
            antecedents,
            note,
        });
    }
    if !saw_header {
        return Err(TraceParseError {
            line: 0,
            msg: "missing header".into(),
        });
    }
    Ok(trace)
}

/// Incremental trace construction during solving. When disabled, all
/// emission is a no-op and returned ids are meaningless.
#[derive(Debug, Default)]
pub struct TraceBuilder {
    enabled: bool,
    steps: Vec<TraceStep>,
    next_id: u64,
    max_var: u32,
    comments: Vec<(u64, String)>,
}

impl TraceBuilder {
    pub fn new(enabled: bool, max_var: u32) -> TraceBuilder {
        TraceBuilder {
            enabled,
            steps: Vec::new(),
            next_id: 1,
            max_var,
            comments: Vec::new(),
        }
    }

    pub fn enabled(&self) -> bool {
        self.enabled
    }

    pub fn emit(
        &mut self,
        kind: StepKind,
        lits: Vec<Lit>,
        antecedents: Vec<u64>,
        note: Option<Vec<Lit>>,
    ) -> u64 {
        if !self.enabled {
            return 0;
        }
        let id = self.next_id;
        self.next_id += 1;
        self.steps.push(TraceStep {
            id,
            kind,
            lits,
            antecedents,
            note,
        });
        id
    }

    /// Records the check kind behind a generalized-axiom step as a comment
    /// ahead of the step about to be emitted.
    pub fn comment_next(&mut self, text: &str) {
        if self.enabled {
            self.comments.push((self.next_id, text.to_string()));
        }
    }

    pub fn finish(self, verdict: Option<Truth>) -> Trace {
        Trace {
            max_var: self.max_var,
            steps: self.steps,
            verdict,
            comments: self.comments,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct CheckOptions {
    pub dep: DepKind,
    /// Re-verify generalized-axiom steps semantically with the expansion
    /// oracle. Exponential; intended for small instances.
    pub recheck_gen_axioms_with_oracle: bool,
    pub oracle_budget: OracleBudget,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions {
            dep: DepKind::Trivial,
            recheck_gen_axioms_with_oracle: false,
            oracle_budget: OracleBudget::default(),
        }
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum CheckError {
    Invalid {
        step: u64,
        rule: &'static str,
        reason: String,
    },
    Malformed(String),
}

impl fmt::Display for CheckError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CheckError::Invalid { step, rule, reason } => {
                write!(f, "step {step}: rule {rule} violated: {reason}")
            }
            CheckError::Malformed(m) => write!(f, "malformed trace: {m}"),
        }
    }
}

impl std::error::Error for CheckError {}

fn sorted(lits: &[Lit]) -> Vec<Lit> {
    let mut v = lits.to_vec();
    v.sort_unstable();
    v.dedup();
    v
}

fn assignment_from_note(
    psi: &Pcnf,
    note: &[Lit],
    step: u64,
    rule: &'static str,
) -> Result<Assignment, CheckError> {
    for l in note {
        if !psi.prefix.contains(l.var()) {
            return Err(CheckError::Invalid {
                step,
                rule,
                reason: format!("assignment variable {} not in prefix", l.var()),
            });
        }
    }
    Assignment::from_lits(note).map_err(|e| CheckError::Invalid {
        step,
        rule,
        reason: e.to_string(),
    })
}

struct CheckedStep {
    kind: ConstraintKind,
    lits: Vec<Lit>, // sorted, deduped
}

/// Validates every step of a trace against its rule and returns the proven
/// verdict: the final step must be the empty clause (unsatisfiable) or the
/// empty cube (satisfiable), consistent with the trace's result line.
pub fn check_proof(psi: &Pcnf, trace: &Trace, opts: &CheckOptions) -> Result<Truth, CheckError> {
    let deps = build_deps(psi, opts.dep);
    let matrix: std::collections::HashSet<Vec<Lit>> = psi
        .clauses
        .iter()
        .map(|c| sorted(c.lits()))
        .collect();
    let mut by_id: HashMap<u64, CheckedStep> = HashMap::new();
    let mut last_id = 0u64;
    let mut last_checked: Option<(u64, ConstraintKind, usize)> = None;

    if trace.steps.is_empty() {
        return Err(CheckError::Malformed("empty trace".into()));
    }

    for step in &trace.steps {
        if step.id <= last_id {
            return Err(CheckError::Malformed(format!(
                "non-monotone step id {}",
                step.id
            )));
        }
        last_id = step.id;
        for &a in &step.antecedents {
            if !by_id.contains_key(&a) {
                return Err(CheckError::Malformed(format!(
                    "step {} references unknown antecedent {a}",
                    step.id
                )));
            }
        }
        let lits = sorted(&step.lits);
        if lits.len() != step.lits.len() {
            return Err(CheckError::Invalid {
                step: step.id,
                rule: "step",
                reason: "duplicate literals".into(),
            });
        }
        for l in &lits {
            if !psi.prefix.contains(l.var()) {
                return Err(CheckError::Invalid {
                    step: step.id,
                    rule: "step",
                    reason: format!("variable {} not in prefix", l.var()),
                });
            }
        }
        let kind = match step.kind {
            StepKind::ClAxiom => {
                if !step.antecedents.is_empty() {
                    return Err(CheckError::Malformed(format!(
                        "axiom step {} with antecedents",
                        step.id
                    )));
                }
                if !matrix.contains(&lits) {
                    return Err(CheckError::Invalid {
                        step: step.id,
                        rule: "cl-init",
                        reason: "clause is not in the matrix".into(),
                    });
                }
                ConstraintKind::Clause
            }
            StepKind::CuAxiom => {
                let note = step.note.as_deref().unwrap_or(&[]);
                if sorted(note) != lits {
                    return Err(CheckError::Invalid {
                        step: step.id,
                        rule: "cu-init",
                        reason: "cube differs from its recorded assignment".into(),
                    });
                }
                let a = assignment_from_note(psi, note, step.id, "cu-init")?;
                let all_satisfied = psi.clauses.iter().all(|c| {
                    c.lits().iter().any(|l| a.lit_value(*l) == Some(true))
                });
                if !all_satisfied {
                    return Err(CheckError::Invalid {
                        step: step.id,
                        rule: "cu-init",
                        reason: "recorded assignment does not satisfy the matrix".into(),
                    });
                }
                ConstraintKind::Cube
            }
            StepKind::GenClAxiom | StepKind::GenCuAxiom => {
                let gen_cl = step.kind == StepKind::GenClAxiom;
                let rule = if gen_cl { "gen-cl-init" } else { "gen-cu-init" };
                let note = step.note.as_deref().unwrap_or(&[]);
                let expect: Vec<Lit> = if gen_cl {
                    sorted(&note.iter().map(|&l| !l).collect::<Vec<_>>())
                } else {
                    sorted(note)
                };
                if expect != lits {
                    return Err(CheckError::Invalid {
                        step: step.id,
                        rule,
                        reason: "literals inconsistent with recorded assignment".into(),
                    });
                }
                let a = assignment_from_note(psi, note, step.id, rule)?;
                if opts.recheck_gen_axioms_with_oracle {
                    let truth = oracle::eval_under(psi, &a, opts.oracle_budget).map_err(|e| {
                        CheckError::Invalid {
                            step: step.id,
                            rule,
                            reason: e.to_string(),
                        }
                    })?;
                    let want = if gen_cl { Truth::Unsat } else { Truth::Sat };
                    if truth != want {
                        return Err(CheckError::Invalid {
                            step: step.id,
                            rule,
                            reason: format!("oracle says ψ[A] is {truth:?}"),
                        });
                    }
                }
                if gen_cl {
                    ConstraintKind::Clause
                } else {
                    ConstraintKind::Cube
                }
            }
            StepKind::Res => {
                let (a1, a2) = (&by_id[&step.antecedents[0]], &by_id[&step.antecedents[1]]);
                if a1.kind != a2.kind {
                    return Err(CheckError::Invalid {
                        step: step.id,
                        rule: "res",
                        reason: "antecedents of different kinds".into(),
                    });
                }
                check_resolution(psi, step.id, a1, a2, &lits)?;
                a1.kind
            }
            StepKind::Reduce => {
                let ant = &by_id[&step.antecedents[0]];
                check_reduction(&deps, step.id, ant, &lits)?;
                ant.kind
            }
        };
        last_checked = Some((step.id, kind, lits.len()));
        by_id.insert(step.id, CheckedStep { kind, lits });
    }

    let (final_id, final_kind, final_len) = last_checked.unwrap();
    if final_len != 0 {
        return Err(CheckError::Invalid {
            step: final_id,
            rule: "termination",
            reason: "final step is not the empty constraint".into(),
        });
    }
    let verdict = match final_kind {
        ConstraintKind::Clause => Truth::Unsat,
        ConstraintKind::Cube => Truth::Sat,
    };
    match trace.verdict {
        None => Err(CheckError::Malformed("missing result line".into())),
        Some(v) if v != verdict => Err(CheckError::Invalid {
            step: final_id,
            rule: "termination",
            reason: format!("result line claims {v:?} but proof derives {verdict:?}"),
        }),
        Some(_) => Ok(verdict),
    }
}

/// Validates one resolution step, including long-distance side conditions.
fn check_resolution(
    psi: &Pcnf,
    step: u64,
    a1: &CheckedStep,
    a2: &CheckedStep,
    result: &[Lit],
) -> Result<(), CheckError> {
    let kind = a1.kind;
    let pivot_quant = match kind {
        ConstraintKind::Clause => Quant::Exists,
        ConstraintKind::Cube => Quant::Forall,
    };
    let invalid = |reason: String| CheckError::Invalid {
        step,
        rule: "res",
        reason,
    };
    let has = |lits: &[Lit], l: Lit| lits.binary_search(&l).is_ok();
    // Pivot candidates: pure in each antecedent, opposite polarities,
    // quantifier matching the constraint kind.
    let mut candidates: Vec<Var> = Vec::new();
    for l in a1.lits.iter() {
        let v = l.var();
        if psi.prefix.quant(v) != pivot_quant || candidates.contains(&v) {
            continue;
        }
        let p = Lit::positive(v);
        let n = Lit::negative(v);
        let in1 = (has(&a1.lits, p), has(&a1.lits, n));
        let in2 = (has(&a2.lits, p), has(&a2.lits, n));
        let crossing = matches!(
            (in1, in2),
            ((true, false), (false, true)) | ((false, true), (true, false))
        );
        if crossing && !has(result, p) && !has(result, n) {
            candidates.push(v);
        }
    }
    'candidates: for &p in &candidates {
        let mut expect: Vec<Lit> = a1
            .lits
            .iter()
            .chain(a2.lits.iter())
            .copied()
            .filter(|l| l.var() != p)
            .collect();
        expect.sort_unstable();
        expect.dedup();
        if expect != result {
            continue;
        }
        // Side conditions on variables merged in the resolvent: merges whose
        // conflicting occurrences cross the antecedents require pivot <_Π u;
        // pairs inherited inside one antecedent carry over.
        let mut i = 0;
        while i + 1 < expect.len() {
            if expect[i].var() == expect[i + 1].var() {
                let u = expect[i].var();
                match kind {
                    ConstraintKind::Cube => continue 'candidates, // contradictory cube
                    ConstraintKind::Clause => {
                        if psi.prefix.quant(u) != Quant::Forall {
                            continue 'candidates;
                        }
                        let crossing = [true, false].iter().any(|&sign| {
                            has(&a1.lits, Lit::new(u, sign)) && has(&a2.lits, Lit::new(u, !sign))
                        });
                        if crossing && !psi.prefix.lt(p, u) {
                            continue 'candidates;
                        }
                    }
                }
            }
            i += 1;
        }
        return Ok(());
    }
    if candidates.is_empty() {
        Err(invalid(format!(
            "no admissible pivot of the required quantifier type ({})",
            match pivot_quant {
                Quant::Exists => "existential",
                Quant::Forall => "universal",
            }
        )))
    } else {
        Err(invalid(
            "resolvent does not match any admissible pivot, or a side condition fails".into(),
        ))
    }
}

/// Validates one reduction step under the declared dependency relation.
fn check_reduction(
    deps: &DependencyRelation,
    step: u64,
    ant: &CheckedStep,
    result: &[Lit],
) -> Result<(), CheckError> {
    let invalid = |reason: String| CheckError::Invalid {
        step,
        rule: "red",
        reason,
    };
    let reducible = ant.kind.reducible_quant();
    let opposite = reducible.dual();
    let mut removed: Vec<Lit> = Vec::new();
    let mut ri = 0;
    for &l in &ant.lits {
        if ri < result.len() && result[ri] == l {
            ri += 1;
        } else {
            removed.push(l);
        }
    }
    if ri != result.len() {
        return Err(invalid("result is not a subset of the antecedent".into()));
    }
    if removed.is_empty() {
        return Err(invalid("reduction removes nothing".into()));
    }
    for l in removed {
        if deps.quant(l.var()) != reducible {
            return Err(invalid(format!(
                "removed literal {l} has the non-reducible quantifier type"
            )));
        }
        for k in result {
            if deps.quant(k.var()) == opposite && deps.depends(l.var(), k.var()) {
                return Err(invalid(format!(
                    "literal {k} depends on removed literal {l}"
                )));
            }
        }
    }
    Ok(())
}
