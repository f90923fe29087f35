//! Constraint learning: reduction, Q-resolution (optionally long-distance),
//! the clause/cube axioms, and derivation of asserting learned constraints
//! from a conflict or solution start constraint.

use crate::depsched::{may_reduce, DependencyRelation};
use crate::engine::{ConstraintDb, Reason, Trail};
use crate::formula::{Constraint, ConstraintKind, Lit, Pcnf, Prefix, Quant, Var};
use crate::proof::{StepKind, TraceBuilder, TraceStep};
use std::fmt;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum ResolveError {
    /// The resolvent would contain a variable in both polarities that the
    /// active rule does not admit.
    TautologyViolation(Var),
    /// Pivot quantifier does not match the constraint kind.
    PivotTypeError,
    /// Pivot does not occur with the required polarities.
    PivotPolarityError,
}

impl fmt::Display for ResolveError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ResolveError::TautologyViolation(v) => {
                write!(f, "resolvent tautological on variable {v}")
            }
            ResolveError::PivotTypeError => write!(f, "pivot has the wrong quantifier type"),
            ResolveError::PivotPolarityError => write!(f, "pivot polarities wrong"),
        }
    }
}

impl std::error::Error for ResolveError {}

/// Applies reduction to fixpoint: removes every universal literal from a
/// clause (existential from a cube) admitted by the dependency relation.
/// A merged universal is removed only when both polarities are admitted,
/// which holds per variable since the side condition ignores polarity.
pub fn reduce(c: &Constraint, deps: &DependencyRelation) -> Constraint {
    let reducible = c.kind.reducible_quant();
    let keep: Vec<Lit> = c
        .lits()
        .iter()
        .copied()
        .filter(|&l| deps.quant(l.var()) != reducible || !may_reduce(deps, c, l))
        .collect();
    let mut merged = Vec::new();
    for w in keep.windows(2) {
        if w[0].var() == w[1].var() {
            merged.push(w[0].var());
        }
    }
    Constraint::from_parts(c.kind, keep, merged)
}

/// Q-resolution of `c1` (containing the positive pivot) with `c2`
/// (containing the negative pivot). Without LDQ the resolvent must not
/// contain any variable in both polarities. With LDQ a universal variable u
/// whose conflicting occurrences cross the two antecedents is merged only
/// if `pivot <_Π u`; a pair already merged inside one antecedent carries
/// over without a new side condition.
pub fn resolve(
    c1: &Constraint,
    c2: &Constraint,
    pivot: Var,
    ldq: bool,
    prefix: &Prefix,
) -> Result<Constraint, ResolveError> {
    assert_eq!(c1.kind, c2.kind, "resolution mixes constraint kinds");
    let kind = c1.kind;
    let pivot_quant = match kind {
        ConstraintKind::Clause => Quant::Exists,
        ConstraintKind::Cube => Quant::Forall,
    };
    if prefix.quant(pivot) != pivot_quant {
        return Err(ResolveError::PivotTypeError);
    }
    let pos = Lit::positive(pivot);
    let neg = Lit::negative(pivot);
    if !c1.contains(pos) || c1.contains(neg) || !c2.contains(neg) || c2.contains(pos) {
        return Err(ResolveError::PivotPolarityError);
    }
    let lits: Vec<Lit> = c1
        .lits()
        .iter()
        .chain(c2.lits().iter())
        .copied()
        .filter(|l| l.var() != pivot)
        .collect();
    let out = Constraint::new(kind, lits, prefix);
    for &v in out.merged() {
        if kind != ConstraintKind::Clause || !ldq || prefix.quant(v) != Quant::Forall {
            return Err(ResolveError::TautologyViolation(v));
        }
        let crossing = [true, false].iter().any(|&sign| {
            c1.contains(Lit::new(v, sign)) && c2.contains(Lit::new(v, !sign))
        });
        if crossing && !prefix.lt(pivot, v) {
            return Err(ResolveError::TautologyViolation(v));
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum AxiomError {
    /// Clause axiom applied to a clause outside the matrix.
    NotInMatrix,
    /// Cube axiom applied under an assignment that leaves a clause
    /// unsatisfied.
    NotSatisfying,
}

impl fmt::Display for AxiomError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AxiomError::NotInMatrix => write!(f, "clause is not in the matrix"),
            AxiomError::NotSatisfying => {
                write!(f, "assignment does not satisfy every matrix clause")
            }
        }
    }
}

impl std::error::Error for AxiomError {}

/// Clause axiom: admissible only for matrix clauses; yields an axiom trace
/// step with no antecedents.
pub fn initial_clause(c: &Constraint, psi: &Pcnf, id: u64) -> Result<TraceStep, AxiomError> {
    if !psi.clauses.iter().any(|m| m.lits() == c.lits()) {
        return Err(AxiomError::NotInMatrix);
    }
    Ok(TraceStep {
        id,
        kind: StepKind::ClAxiom,
        lits: c.lits().to_vec(),
        antecedents: vec![],
        note: None,
    })
}

/// Cube axiom: requires every matrix clause to be satisfied by the
/// assignment (syntactic check); yields the cube of all assigned literals.
pub fn initial_cube(assigned: &[Lit], psi: &Pcnf) -> Result<Constraint, AxiomError> {
    let true_under = |l: &Lit| {
        assigned
            .iter()
            .any(|a| a.var() == l.var() && a.is_positive() == l.is_positive())
    };
    if !psi.clauses.iter().all(|c| c.lits().iter().any(true_under)) {
        return Err(AxiomError::NotSatisfying);
    }
    Ok(Constraint::new(
        ConstraintKind::Cube,
        assigned.to_vec(),
        &psi.prefix,
    ))
}

/// Result of conflict/solution analysis.
#[derive(Clone, Debug)]
pub struct LearnOutcome {
    pub learned: Constraint,
    /// Decision level to backtrack to; meaningless when `learned` is empty.
    pub backtrack_level: u32,
    /// The literal the learned constraint asserts after backtracking.
    pub asserting_lit: Option<Lit>,
    /// Trace step ids of the derivation (resolutions and reductions).
    pub derivation: Vec<u64>,
    /// Trace id of the learned constraint (start id if nothing was derived).
    pub trace_id: u64,
    /// Set when the outcome is the unchanged start constraint from the
    /// database (asserting immediately).
    pub unchanged_start: Option<u32>,
}

/// Where an analysis starts: an existing database constraint (falsified
/// clause / satisfied cube) or a fresh axiom-derived constraint.
pub enum AnalyzeStart {
    Db(u32),
    Fresh { constraint: Constraint, trace_id: u64 },
}

pub struct AnalyzeCtx<'a> {
    pub trail: &'a Trail,
    pub db: &'a mut ConstraintDb,
    pub deps: &'a DependencyRelation,
    pub prefix: &'a Prefix,
    pub ldq: bool,
    pub trace: &'a mut TraceBuilder,
    /// Variables to bump in the decision heuristic, collected during the
    /// analysis.
    pub bumped: &'a mut Vec<Var>,
}

/// Whether a trail value supports the constraint's falsified/satisfied
/// invariant: literals of a conflict clause are false, literals of a
/// satisfied cube are true.
fn supporting_value(kind: ConstraintKind) -> bool {
    match kind {
        ConstraintKind::Clause => false,
        ConstraintKind::Cube => true,
    }
}

/// The generalized asserting check. Returns the asserting literal and
/// backtrack level if, after backtracking to that level, the constraint is
/// guaranteed unit under reduction-aware propagation.
fn asserting_point(
    w: &Constraint,
    trail: &Trail,
    deps: &DependencyRelation,
) -> Option<(Lit, u32)> {
    let primary = w.kind.reducible_quant().dual();
    let supporting = supporting_value(w.kind);

    // Candidate: the unique primary literal at the maximal level.
    let mut best: Option<(Lit, u32)> = None;
    let mut unique = true;
    for &k in w.lits() {
        if deps.quant(k.var()) != primary {
            continue;
        }
        match trail.lit_value(k) {
            Some(v) if v == supporting => {
                let lv = trail.level(k.var());
                match best {
                    Some((_, bl)) if lv == bl => unique = false,
                    Some((_, bl)) if lv > bl => {
                        best = Some((k, lv));
                        unique = true;
                    }
                    None => best = Some((k, lv)),
                    _ => {}
                }
            }
            // A primary literal that is unassigned or anti-supporting can
            // never participate in a unit constraint for this trail.
            _ => return None,
        }
    }
    let (l, l_level) = best?;
    if !unique || l_level == 0 {
        return None;
    }

    let mut floor = 0u32;
    let mut ceiling = l_level;
    for &k in w.lits() {
        if k == l {
            continue;
        }
        let kv = k.var();
        if deps.quant(kv) == primary {
            if kv == l.var() {
                return None; // merged primary cannot assert
            }
            floor = floor.max(trail.level(kv));
            continue;
        }
        let dep = deps.depends(kv, l.var());
        match trail.lit_value(k) {
            None => {
                if dep {
                    return None;
                }
            }
            Some(v) if v == supporting => {
                if dep {
                    floor = floor.max(trail.level(kv));
                }
            }
            Some(_) => {
                if dep {
                    return None;
                }
                ceiling = ceiling.min(trail.level(kv));
            }
        }
    }
    if floor < ceiling {
        Some((l, floor))
    } else {
        None
    }
}

/// Conflict/solution analysis: repeatedly reduce and, while the working
/// constraint is not asserting, resolve it with the reason of its most
/// recently propagated literal of matching kind. Ends with an asserting
/// constraint or the empty constraint (termination).
pub fn analyze(ctx: &mut AnalyzeCtx<'_>, start: AnalyzeStart) -> LearnOutcome {
    let (mut w, mut cur_id, start_db) = match start {
        AnalyzeStart::Db(cid) => {
            let id = ctx.db.trace_id_for(cid, ctx.trace);
            ctx.db.bump_activity(cid);
            (ctx.db.constraint(cid).clone(), id, Some(cid))
        }
        AnalyzeStart::Fresh { constraint, trace_id } => (constraint, trace_id, None),
    };
    let kind = w.kind;
    let supporting = supporting_value(kind);
    let primary = kind.reducible_quant().dual();
    let mut derivation = Vec::new();
    let mut derived = false;
    for &l in w.lits() {
        ctx.bumped.push(l.var());
    }

    loop {
        let reduced = reduce(&w, ctx.deps);
        if reduced.lits().len() != w.lits().len() {
            w = reduced;
            if ctx.trace.enabled() {
                cur_id = ctx.trace.emit(StepKind::Reduce, w.lits().to_vec(), vec![cur_id], None);
                derivation.push(cur_id);
            }
            derived = true;
        }

        if w.is_empty() {
            return LearnOutcome {
                learned: w,
                backtrack_level: 0,
                asserting_lit: None,
                derivation,
                trace_id: cur_id,
                unchanged_start: if derived { None } else { start_db },
            };
        }

        if let Some((lit, level)) = asserting_point(&w, ctx.trail, ctx.deps) {
            return LearnOutcome {
                learned: w,
                backtrack_level: level,
                asserting_lit: Some(lit),
                derivation,
                trace_id: cur_id,
                unchanged_start: if derived { None } else { start_db },
            };
        }

        // Pivot candidates: propagated literals of the primary type with a
        // reason of matching kind, most recent first. Reasons are reduced
        // before resolving (antecedent reduction is part of classical
        // Q-resolution); a candidate whose resolvent would still be
        // tautological is skipped — the universal variable blocking it is
        // kept alive by existential literals of the working constraint
        // that are themselves candidates, so elimination makes progress.
        let mut candidates: Vec<(Lit, u32, u32)> = Vec::new();
        for &k in w.lits() {
            if ctx.deps.quant(k.var()) != primary
                || ctx.trail.lit_value(k) != Some(supporting)
            {
                continue;
            }
            let cid = match (kind, ctx.trail.reason(k.var())) {
                (ConstraintKind::Clause, Reason::UnitFromClause(cid)) => cid,
                (ConstraintKind::Cube, Reason::UnitFromCube(cid)) => cid,
                _ => continue,
            };
            candidates.push((k, cid, ctx.trail.pos(k.var())));
        }
        candidates.sort_unstable_by_key(|c| std::cmp::Reverse(c.2));
        assert!(
            !candidates.is_empty(),
            "analysis stuck: non-asserting constraint without a resolvable pivot (engine bug)"
        );
        // Two passes over the candidates: prefer reasons that import no
        // opposite-type literal currently broken the wrong way (a satisfied
        // universal in a clause resolvent can pin the constraint satisfied
        // and spoil assertingness if it was set at an unpoppable level);
        // fall back to any admissible resolution.
        let mut chosen = None;
        'passes: for strict in [true, false] {
            for &(k, cid, _) in &candidates {
                let reason = reduce(ctx.db.constraint(cid), ctx.deps);
                if strict
                    && reason.lits().iter().any(|l| {
                        ctx.deps.quant(l.var()) != primary
                            && ctx.trail.lit_value(*l) == Some(!supporting)
                    })
                {
                    continue;
                }
                let (c1, c2, w_first) = if reason.contains(Lit::positive(k.var())) {
                    (&reason, &w, false)
                } else {
                    (&w, &reason, true)
                };
                if let Ok(res) = resolve(c1, c2, k.var(), ctx.ldq, ctx.prefix) {
                    chosen = Some((k, cid, reason, res, w_first));
                    break 'passes;
                }
            }
        }
        let (k, reason_cid, reason, resolvent, w_first) = chosen.unwrap_or_else(|| {
            let detail: Vec<String> = candidates
                .iter()
                .map(|&(k, cid, pos)| {
                    format!(
                        "pivot {k} pos {pos} reason {:?} (reduced {:?})",
                        ctx.db.constraint(cid).lits(),
                        reduce(ctx.db.constraint(cid), ctx.deps).lits()
                    )
                })
                .collect();
            panic!(
                "analysis stuck: every candidate resolution is inadmissible (engine bug)\n\
                 working {:?} merged {:?}\n{}",
                w.lits(),
                w.merged(),
                detail.join("\n")
            )
        });
        ctx.db.bump_activity(reason_cid);
        for &l in reason.lits() {
            ctx.bumped.push(l.var());
        }
        ctx.bumped.push(k.var());
        let mut reason_id = ctx.db.trace_id_for(reason_cid, ctx.trace);
        if ctx.trace.enabled() && reason.lits().len() != ctx.db.constraint(reason_cid).len() {
            reason_id = ctx.trace.emit(
                StepKind::Reduce,
                reason.lits().to_vec(),
                vec![reason_id],
                None,
            );
            derivation.push(reason_id);
        }
        w = resolvent;
        derived = true;
        if ctx.trace.enabled() {
            let ants = if w_first {
                vec![cur_id, reason_id]
            } else {
                vec![reason_id, cur_id]
            };
            cur_id = ctx
                .trace
                .emit(StepKind::Res, w.lits().to_vec(), ants, None);
            derivation.push(cur_id);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::depsched::{standard_deps, trivial_deps};
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

    fn clause(psi: &Pcnf, lits: &[i64]) -> Constraint {
        Constraint::new(
            ConstraintKind::Clause,
            lits.iter().map(|&l| lit(l)).collect(),
            &psi.prefix,
        )
    }

    fn cube(psi: &Pcnf, lits: &[i64]) -> Constraint {
        Constraint::new(
            ConstraintKind::Cube,
            lits.iter().map(|&l| lit(l)).collect(),
            &psi.prefix,
        )
    }

    #[test]
    fn reduce_trailing_universal() {
        // Π=∃x∀u, clause (x∨u) → (x)
        let psi = pcnf(
            vec![(Quant::Exists, vec![1]), (Quant::Forall, vec![2])],
            vec![vec![1, 2]],
        );
        let d = trivial_deps(&psi);
        let r = reduce(&clause(&psi, &[1, 2]), &d);
        assert_eq!(r.lits(), &[lit(1)]);
    }

    #[test]
    fn reduce_cube_trailing_existential() {
        // Π=∀u∃x, cube (u∧x) → (u)
        let psi = pcnf(
            vec![(Quant::Forall, vec![1]), (Quant::Exists, vec![2])],
            vec![vec![1, 2]],
        );
        let d = trivial_deps(&psi);
        let r = reduce(&cube(&psi, &[1, 2]), &d);
        assert_eq!(r.lits(), &[lit(1)]);
    }

    #[test]
    fn reduce_to_empty() {
        // Π=∀u, clause (u) → empty
        let psi = pcnf(vec![(Quant::Forall, vec![1])], vec![]);
        let d = trivial_deps(&psi);
        let r = reduce(&clause(&psi, &[1]), &d);
        assert!(r.is_empty());
    }

    #[test]
    fn reduce_standard_beats_trivial() {
        // Π=∀u∃x,y, clauses {(u∨x),(y)}; learned (u∨y):
        // Standard → (y); Trivial → (u∨y).
        let psi = pcnf(
            vec![(Quant::Forall, vec![1]), (Quant::Exists, vec![2, 3])],
            vec![vec![1, 2], vec![3]],
        );
        let learned = clause(&psi, &[1, 3]);
        let r = reduce(&learned, &standard_deps(&psi));
        assert_eq!(r.lits(), &[lit(3)]);
        let r = reduce(&learned, &trivial_deps(&psi));
        assert_eq!(r.lits(), &[lit(1), lit(3)]);
    }

    #[test]
    fn resolve_basic_clause() {
        let psi = pcnf(vec![(Quant::Exists, vec![1, 2, 3])], vec![]);
        let r = resolve(
            &clause(&psi, &[1, 2]),
            &clause(&psi, &[-1, 3]),
            Var::new(1),
            false,
            &psi.prefix,
        )
        .unwrap();
        assert_eq!(r.lits(), &[lit(2), lit(3)]);
    }

    #[test]
    fn resolve_tautology_rejected_without_ldq() {
        let psi = pcnf(
            vec![(Quant::Exists, vec![1]), (Quant::Forall, vec![2])],
            vec![],
        );
        let e = resolve(
            &clause(&psi, &[1, 2]),
            &clause(&psi, &[-1, -2]),
            Var::new(1),
            false,
            &psi.prefix,
        )
        .unwrap_err();
        assert_eq!(e, ResolveError::TautologyViolation(Var::new(2)));
    }

    #[test]
    fn resolve_ldq_merges_inner_universal() {
        // Π=∃x∀u∃y: (x∨u∨y) ⊗x (¬x∨¬u∨y) → (u ∨ ū ∨ y) with u merged.
        let psi = pcnf(
            vec![
                (Quant::Exists, vec![1]),
                (Quant::Forall, vec![2]),
                (Quant::Exists, vec![3]),
            ],
            vec![],
        );
        let r = resolve(
            &clause(&psi, &[1, 2, 3]),
            &clause(&psi, &[-1, -2, 3]),
            Var::new(1),
            true,
            &psi.prefix,
        )
        .unwrap();
        assert_eq!(r.merged(), &[Var::new(2)]);
        assert_eq!(r.len(), 3);

        // Outer universal (u <_Π pivot) must still be rejected.
        let psi = pcnf(
            vec![(Quant::Forall, vec![1]), (Quant::Exists, vec![2])],
            vec![],
        );
        let e = resolve(
            &clause(&psi, &[2, 1]),
            &clause(&psi, &[-2, -1]),
            Var::new(2),
            true,
            &psi.prefix,
        )
        .unwrap_err();
        assert_eq!(e, ResolveError::TautologyViolation(Var::new(1)));
    }

    #[test]
    fn resolve_cube_universal_pivot() {
        // cubes (u∧e), (¬u∧e), pivot u → (e)
        let psi = pcnf(
            vec![(Quant::Forall, vec![1]), (Quant::Exists, vec![2])],
            vec![],
        );
        let r = resolve(
            &cube(&psi, &[1, 2]),
            &cube(&psi, &[-1, 2]),
            Var::new(1),
            false,
            &psi.prefix,
        )
        .unwrap();
        assert_eq!(r.lits(), &[lit(2)]);
        // Contradictory cubes stay rejected even with ldq set.
        let e = resolve(
            &cube(&psi, &[1, 2]),
            &cube(&psi, &[-1, -2]),
            Var::new(1),
            true,
            &psi.prefix,
        )
        .unwrap_err();
        assert_eq!(e, ResolveError::TautologyViolation(Var::new(2)));
    }

    #[test]
    fn resolve_pivot_errors() {
        let psi = pcnf(
            vec![(Quant::Forall, vec![1]), (Quant::Exists, vec![2, 3])],
            vec![],
        );
        // Universal pivot between clauses.
        let e = resolve(
            &clause(&psi, &[1, 2]),
            &clause(&psi, &[-1, 3]),
            Var::new(1),
            false,
            &psi.prefix,
        )
        .unwrap_err();
        assert_eq!(e, ResolveError::PivotTypeError);
        // Wrong polarity orientation.
        let e = resolve(
            &clause(&psi, &[-2, 3]),
            &clause(&psi, &[2, 3]),
            Var::new(2),
            false,
            &psi.prefix,
        )
        .unwrap_err();
        assert_eq!(e, ResolveError::PivotPolarityError);
    }

    #[test]
    fn initial_clause_membership() {
        let psi = pcnf(vec![(Quant::Exists, vec![1, 2])], vec![vec![1, 2]]);
        let c = clause(&psi, &[1, 2]);
        let step = initial_clause(&c, &psi, 1).unwrap();
        assert_eq!(step.kind, StepKind::ClAxiom);
        assert!(step.antecedents.is_empty());
        let other = clause(&psi, &[1]);
        assert_eq!(initial_clause(&other, &psi, 2), Err(AxiomError::NotInMatrix));
        let empty = pcnf(vec![(Quant::Exists, vec![1])], vec![]);
        assert_eq!(
            initial_clause(&clause(&empty, &[1]), &empty, 3),
            Err(AxiomError::NotInMatrix)
        );
    }

    #[test]
    fn initial_cube_requires_satisfying_assignment() {
        // ∀u∃e.(u∨e), A={ū,e}: satisfied → cube (ū∧e); ER → (ū).
        let psi = pcnf(
            vec![(Quant::Forall, vec![1]), (Quant::Exists, vec![2])],
            vec![vec![1, 2]],
        );
        let c = initial_cube(&[lit(-1), lit(2)], &psi).unwrap();
        assert_eq!(c.lits(), &[lit(-1), lit(2)]);
        let d = trivial_deps(&psi);
        assert_eq!(reduce(&c, &d).lits(), &[lit(-1)]);

        // Half-satisfying assignment is rejected.
        let psi2 = pcnf(
            vec![(Quant::Forall, vec![1]), (Quant::Exists, vec![2])],
            vec![vec![1, 2], vec![-1, -2]],
        );
        assert_eq!(
            initial_cube(&[lit(1)], &psi2),
            Err(AxiomError::NotSatisfying)
        );

        // Empty matrix, empty assignment → empty cube.
        let psi3 = pcnf(vec![(Quant::Exists, vec![1])], vec![]);
        let c = initial_cube(&[], &psi3).unwrap();
        assert!(c.is_empty());
    }
}
