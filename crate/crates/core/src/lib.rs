//! A search-based QBF solver for prenex CNF.
//!
//! The solver runs QCDCL with:
//! - generalized clause/cube axioms backed by propositional abstractions
//!   (trivial truth and full-existential abstraction) solved by an embedded
//!   budgeted CDCL SAT core,
//! - dynamic blocked clause elimination integrated into propagation,
//! - dependency-aware reduction under the standard dependency scheme,
//! - optional long-distance Q-resolution for clause learning,
//! - resolution trace emission plus a standalone trace checker,
//! - a brute-force expansion oracle for differential verification.

pub mod depsched;
pub mod engine;
pub mod formula;
pub mod genaxioms;
pub mod instgen;
pub mod learning;
pub mod oracle;
pub mod proof;
pub mod qbce;
pub mod qdimacs;
pub mod satcore;

pub use engine::{solve, SolveResult, SolverConfig, Stats, Verdict};
pub use formula::{
    apply_assignment, constraint_status, Assignment, Constraint, ConstraintKind,
    ConstraintStatus, Lit, Pcnf, Prefix, Quant, QuantBlock, Var,
};
