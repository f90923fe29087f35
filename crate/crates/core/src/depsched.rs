//! Dependency relations over prefix variables: the trivial relation induced
//! by the linear prefix order, and the standard dependency scheme computed
//! from connection sequences in the matrix. Both drive dependency-aware
//! reduction and decision eligibility.

use crate::formula::{Constraint, Pcnf, Quant, Var};

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum DepKind {
    Trivial,
    Standard,
}

/// Per-block connectivity: clauses glued by existential variables strictly
/// right of the block are in one component. Two variables x (in this block)
/// and y are connected iff some clause component contains both.
#[derive(Clone, Debug)]
struct BlockConn {
    /// Component id of each clause, w.r.t. this block's connector set.
    clause_root: Vec<u32>,
    /// Sorted component ids of the clauses each variable occurs in.
    var_roots: Vec<Vec<u32>>,
}

struct UnionFind {
    parent: Vec<u32>,
}

impl UnionFind {
    fn new(n: usize) -> UnionFind {
        UnionFind {
            parent: (0..n as u32).collect(),
        }
    }

    fn find(&mut self, x: u32) -> u32 {
        let mut r = x;
        while self.parent[r as usize] != r {
            r = self.parent[r as usize];
        }
        let mut c = x;
        while self.parent[c as usize] != r {
            let next = self.parent[c as usize];
            self.parent[c as usize] = r;
            c = next;
        }
        r
    }

    fn union(&mut self, a: u32, b: u32) {
        let ra = self.find(a);
        let rb = self.find(b);
        if ra != rb {
            self.parent[ra as usize] = rb;
        }
    }
}

/// A queryable over-approximation of variable dependencies. `(x, y) ∈ D`
/// implies `x <_Π y` and `q(x) ≠ q(y)`; y is considered to depend on x.
#[derive(Clone, Debug)]
pub struct DependencyRelation {
    pub kind: DepKind,
    // Per-var (quant, level); None outside the prefix.
    info: Vec<Option<(Quant, u32)>>,
    // For Standard: one connectivity structure per block level (index 0 is
    // block level 1).
    conn: Vec<BlockConn>,
}

impl DependencyRelation {
    fn var_info(psi: &Pcnf) -> Vec<Option<(Quant, u32)>> {
        let n = psi.max_var() as usize;
        let mut info = vec![None; n];
        for b in psi.prefix.blocks() {
            for &v in &b.vars {
                info[v.index()] = Some((b.quant, b.level));
            }
        }
        info
    }

    pub fn quant(&self, v: Var) -> Quant {
        self.info[v.index()].expect("variable not in prefix").0
    }

    pub fn level(&self, v: Var) -> u32 {
        self.info[v.index()].expect("variable not in prefix").1
    }

    /// Whether `(x, y) ∈ D`, i.e. y depends on x.
    pub fn depends(&self, x: Var, y: Var) -> bool {
        let (qx, lx) = self.info[x.index()].expect("variable not in prefix");
        let (qy, ly) = self.info[y.index()].expect("variable not in prefix");
        if lx >= ly || qx == qy {
            return false;
        }
        match self.kind {
            DepKind::Trivial => true,
            DepKind::Standard => {
                let conn = &self.conn[(lx - 1) as usize];
                let rx = &conn.var_roots[x.index()];
                let ry = &conn.var_roots[y.index()];
                // Sorted-list intersection test.
                let (mut i, mut j) = (0, 0);
                while i < rx.len() && j < ry.len() {
                    match rx[i].cmp(&ry[j]) {
                        std::cmp::Ordering::Less => i += 1,
                        std::cmp::Ordering::Greater => j += 1,
                        std::cmp::Ordering::Equal => return true,
                    }
                }
                false
            }
        }
    }

    /// All x with `(x, y) ∈ D`, in ascending id order.
    pub fn predecessors(&self, y: Var, all_vars: &[Var]) -> Vec<Var> {
        all_vars
            .iter()
            .copied()
            .filter(|&x| self.depends(x, y))
            .collect()
    }
}

/// The relation induced by the prefix order: `(x, y) ∈ D` iff `x <_Π y` and
/// `q(x) ≠ q(y)`.
pub fn trivial_deps(psi: &Pcnf) -> DependencyRelation {
    DependencyRelation {
        kind: DepKind::Trivial,
        info: DependencyRelation::var_info(psi),
        conn: Vec::new(),
    }
}

/// The standard dependency scheme: `(x, y) ∈ D^std` iff `x <_Π y`,
/// `q(x) ≠ q(y)`, and there is a sequence of clauses C₁,…,Cₖ with
/// x ∈ vars(C₁), y ∈ vars(Cₖ), and consecutive clauses sharing an
/// existential variable z with `x <_Π z`. Computed once from the input
/// matrix; learned constraints are consequences and do not refresh it.
pub fn standard_deps(psi: &Pcnf) -> DependencyRelation {
    let info = DependencyRelation::var_info(psi);
    let nblocks = psi.prefix.blocks().len();
    let nclauses = psi.clauses.len();
    let nvars = psi.max_var() as usize;

    // occ[v] = clause indices containing variable v.
    let mut occ: Vec<Vec<u32>> = vec![Vec::new(); nvars];
    for (ci, c) in psi.clauses.iter().enumerate() {
        let mut last = None;
        for l in c.lits() {
            if last != Some(l.var()) {
                occ[l.var().index()].push(ci as u32);
                last = Some(l.var());
            }
        }
    }

    let mut conn = Vec::with_capacity(nblocks);
    for level in 1..=nblocks as u32 {
        let mut uf = UnionFind::new(nclauses);
        for (vi, slot) in info.iter().enumerate() {
            if let Some((Quant::Exists, l)) = slot {
                if *l > level {
                    let cls = &occ[vi];
                    for w in cls.windows(2) {
                        uf.union(w[0], w[1]);
                    }
                }
            }
        }
        let clause_root: Vec<u32> = (0..nclauses as u32).map(|c| uf.find(c)).collect();
        let mut var_roots: Vec<Vec<u32>> = vec![Vec::new(); nvars];
        for (vi, cls) in occ.iter().enumerate() {
            let mut roots: Vec<u32> = cls.iter().map(|&c| clause_root[c as usize]).collect();
            roots.sort_unstable();
            roots.dedup();
            var_roots[vi] = roots;
        }
        conn.push(BlockConn {
            clause_root,
            var_roots,
        });
    }
    let _ = &conn.last().map(|b| &b.clause_root); // keep field used
    DependencyRelation {
        kind: DepKind::Standard,
        info,
        conn,
    }
}

pub fn build_deps(psi: &Pcnf, kind: DepKind) -> DependencyRelation {
    match kind {
        DepKind::Trivial => trivial_deps(psi),
        DepKind::Standard => standard_deps(psi),
    }
}

/// Side condition of dependency-aware reduction: literal `l` of the
/// reducible quantifier type may be removed from `c` iff no literal of the
/// opposite type in `c` depends on it. With the trivial relation this is
/// exactly the classical reduction rule.
pub fn may_reduce(d: &DependencyRelation, c: &Constraint, l: crate::formula::Lit) -> bool {
    assert!(c.contains(l), "literal not in constraint");
    assert_eq!(
        d.quant(l.var()),
        c.kind.reducible_quant(),
        "literal has the non-reducible quantifier type"
    );
    let opposite = c.kind.reducible_quant().dual();
    c.lits()
        .iter()
        .filter(|k| d.quant(k.var()) == opposite)
        .all(|k| !d.depends(l.var(), k.var()))
}
