//! Propositional backbone: literals, a CDCL solver with incremental clause
//! addition, cardinality encodings and DIMACS I/O.

mod cardinality;
mod dimacs;
mod solver;

use std::fmt;
use std::ops::Not;
use std::time::Duration;

pub use cardinality::add_at_least;
pub use dimacs::{parse_dimacs, write_dimacs, DimacsError};
pub use solver::Solver;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(pub u32);

impl Var {
    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn pos(self) -> Lit {
        Lit::new(self, true)
    }

    pub fn neg(self) -> Lit {
        Lit::new(self, false)
    }
}

/// Literal encoded as `2 * var + (negated as u32)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Lit(u32);

impl Lit {
    pub fn new(var: Var, positive: bool) -> Lit {
        Lit(var.0 << 1 | (!positive) as u32)
    }

    #[inline]
    pub fn var(self) -> Var {
        Var(self.0 >> 1)
    }

    #[inline]
    pub fn is_positive(self) -> bool {
        self.0 & 1 == 0
    }

    #[inline]
    pub(crate) fn code(self) -> usize {
        self.0 as usize
    }

    /// DIMACS integer (1-based, sign = polarity).
    pub fn to_dimacs(self) -> i64 {
        let v = self.var().0 as i64 + 1;
        if self.is_positive() {
            v
        } else {
            -v
        }
    }

    pub fn from_dimacs(x: i64) -> Lit {
        debug_assert!(x != 0);
        Lit::new(Var(x.unsigned_abs() as u32 - 1), x > 0)
    }
}

impl Not for Lit {
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

/// Total assignment returned with a satisfiable answer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Model(Vec<bool>);

impl Model {
    pub fn value(&self, v: Var) -> bool {
        self.0[v.index()]
    }

    pub fn lit(&self, l: Lit) -> bool {
        self.value(l.var()) == l.is_positive()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn satisfies(&self, clause: &[Lit]) -> bool {
        clause.iter().any(|&l| self.lit(l))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SolveResult {
    Sat(Model),
    Unsat,
    Timeout(Duration),
}

impl SolveResult {
    pub fn is_sat(&self) -> bool {
        matches!(self, SolveResult::Sat(_))
    }

    pub fn is_unsat(&self) -> bool {
        matches!(self, SolveResult::Unsat)
    }
}

/// Plain clause list, used for import/export and for checking models
/// independently of the solver's internal database.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Formula {
    pub num_vars: usize,
    pub clauses: Vec<Vec<Lit>>,
}

impl Formula {
    pub fn new_var(&mut self) -> Var {
        self.num_vars += 1;
        Var(self.num_vars as u32 - 1)
    }

    pub fn add_clause(&mut self, clause: &[Lit]) {
        self.clauses.push(clause.to_vec());
    }

    pub fn evaluate(&self, assignment: &[bool]) -> bool {
        self.clauses
            .iter()
            .all(|c| c.iter().any(|l| assignment[l.var().index()] == l.is_positive()))
    }

    pub fn to_solver(&self) -> Solver {
        let mut s = Solver::new();
        s.reserve_vars(self.num_vars);
        for c in &self.clauses {
            s.add_clause(c);
        }
        s
    }
}

/// Sink for clauses: implemented by the solver itself and by [`Formula`],
/// so encoders can target either.
pub trait ClauseSink {
    fn new_var(&mut self) -> Var;
    fn add_clause(&mut self, clause: &[Lit]);
}

impl ClauseSink for Formula {
    fn new_var(&mut self) -> Var {
        Formula::new_var(self)
    }

    fn add_clause(&mut self, clause: &[Lit]) {
        Formula::add_clause(self, clause)
    }
}

impl ClauseSink for Solver {
    fn new_var(&mut self) -> Var {
        Solver::new_var(self)
    }

    fn add_clause(&mut self, clause: &[Lit]) {
        Solver::add_clause(self, clause);
    }
}
