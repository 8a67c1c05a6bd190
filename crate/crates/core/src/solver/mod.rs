//! Integer constraint systems and the procedures that decide them.
//!
//! A [`ConstraintSystem`] is a list of declared symbolic variables and a list
//! of group-tagged clauses (disjunctions of comparison atoms) over exact
//! mathematical integers. Satisfiability is decided by the in-process
//! [`builtin`] solver, by an external SMT-LIB v2 binary ([`process`]), or,
//! for small domains, exhaustively ([`brute`]).

pub mod brute;
pub mod builtin;
mod interval;
pub mod process;
mod sexpr;
pub mod smtlib;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::BigInt;
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use brute::{brute_force_check, BruteDomain};
pub use builtin::BuiltinSolver;
pub use process::ProcessSolver;
pub use smtlib::{emit_smtlib, parse_smtlib};

/// An SSA instance of a program variable: `base` plus a per-path index.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SymVar {
    pub base: String,
    pub idx: u32,
}

impl SymVar {
    pub fn new(base: impl Into<String>, idx: u32) -> Self {
        SymVar {
            base: base.into(),
            idx,
        }
    }
}

impl fmt::Display for SymVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&smtlib::symbol_name(self))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Term {
    Var(SymVar),
    Lit(BigInt),
    Add(Box<Term>, Box<Term>),
    Sub(Box<Term>, Box<Term>),
    Mul(Box<Term>, Box<Term>),
    /// Division truncating toward zero.
    Div(Box<Term>, Box<Term>),
    Neg(Box<Term>),
}

impl Term {
    pub fn var(v: &SymVar) -> Term {
        Term::Var(v.clone())
    }

    pub fn lit(v: impl Into<BigInt>) -> Term {
        Term::Lit(v.into())
    }

    pub fn add(a: Term, b: Term) -> Term {
        Term::Add(Box::new(a), Box::new(b))
    }

    pub fn sub(a: Term, b: Term) -> Term {
        Term::Sub(Box::new(a), Box::new(b))
    }

    pub fn mul(a: Term, b: Term) -> Term {
        Term::Mul(Box::new(a), Box::new(b))
    }

    pub fn div(a: Term, b: Term) -> Term {
        Term::Div(Box::new(a), Box::new(b))
    }

    /// Negation; literals fold so that `Neg(Lit)` never arises.
    pub fn neg(a: Term) -> Term {
        match a {
            Term::Lit(n) => Term::Lit(-n),
            a => Term::Neg(Box::new(a)),
        }
    }

    pub fn collect_vars(&self, out: &mut BTreeSet<SymVar>) {
        match self {
            Term::Var(v) => {
                out.insert(v.clone());
            }
            Term::Lit(_) => {}
            Term::Add(a, b) | Term::Sub(a, b) | Term::Mul(a, b) | Term::Div(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            Term::Neg(a) => a.collect_vars(out),
        }
    }

    fn vars_in_order(&self, out: &mut Vec<SymVar>) {
        match self {
            Term::Var(v) => {
                if !out.contains(v) {
                    out.push(v.clone());
                }
            }
            Term::Lit(_) => {}
            Term::Add(a, b) | Term::Sub(a, b) | Term::Mul(a, b) | Term::Div(a, b) => {
                a.vars_in_order(out);
                b.vars_in_order(out);
            }
            Term::Neg(a) => a.vars_in_order(out),
        }
    }

    pub fn has_div(&self) -> bool {
        match self {
            Term::Div(..) => true,
            Term::Var(_) | Term::Lit(_) => false,
            Term::Add(a, b) | Term::Sub(a, b) | Term::Mul(a, b) => a.has_div() || b.has_div(),
            Term::Neg(a) => a.has_div(),
        }
    }

    /// Exact evaluation; `None` when a variable is unassigned or a divisor is 0.
    pub fn eval(&self, lookup: &dyn Fn(&SymVar) -> Option<BigInt>) -> Option<BigInt> {
        Some(match self {
            Term::Var(v) => lookup(v)?,
            Term::Lit(n) => n.clone(),
            Term::Add(a, b) => a.eval(lookup)? + b.eval(lookup)?,
            Term::Sub(a, b) => a.eval(lookup)? - b.eval(lookup)?,
            Term::Mul(a, b) => a.eval(lookup)? * b.eval(lookup)?,
            Term::Div(a, b) => {
                let d = b.eval(lookup)?;
                if d.is_zero() {
                    return None;
                }
                a.eval(lookup)? / d
            }
            Term::Neg(a) => -a.eval(lookup)?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Rel {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl Rel {
    pub fn holds(self, a: &BigInt, b: &BigInt) -> bool {
        match self {
            Rel::Eq => a == b,
            Rel::Ne => a != b,
            Rel::Lt => a < b,
            Rel::Le => a <= b,
            Rel::Gt => a > b,
            Rel::Ge => a >= b,
        }
    }

    pub fn negate(self) -> Rel {
        match self {
            Rel::Eq => Rel::Ne,
            Rel::Ne => Rel::Eq,
            Rel::Lt => Rel::Ge,
            Rel::Le => Rel::Gt,
            Rel::Gt => Rel::Le,
            Rel::Ge => Rel::Lt,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Atom {
    pub rel: Rel,
    pub lhs: Term,
    pub rhs: Term,
}

impl Atom {
    pub fn new(lhs: Term, rel: Rel, rhs: Term) -> Atom {
        Atom { rel, lhs, rhs }
    }

    pub fn negate(&self) -> Atom {
        Atom {
            rel: self.rel.negate(),
            lhs: self.lhs.clone(),
            rhs: self.rhs.clone(),
        }
    }

    /// Truth value under an assignment; an undefined side makes the atom false.
    pub fn eval(&self, lookup: &dyn Fn(&SymVar) -> Option<BigInt>) -> bool {
        match (self.lhs.eval(lookup), self.rhs.eval(lookup)) {
            (Some(a), Some(b)) => self.rel.holds(&a, &b),
            _ => false,
        }
    }
}

/// A disjunction of atoms.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Clause(pub Vec<Atom>);

impl Clause {
    pub fn unit(atom: Atom) -> Clause {
        Clause(vec![atom])
    }

    pub fn eval(&self, lookup: &dyn Fn(&SymVar) -> Option<BigInt>) -> bool {
        self.0.iter().any(|a| a.eval(lookup))
    }

    pub fn collect_vars(&self, out: &mut BTreeSet<SymVar>) {
        for a in &self.0 {
            a.lhs.collect_vars(out);
            a.rhs.collect_vars(out);
        }
    }

    fn vars_in_order(&self, out: &mut Vec<SymVar>) {
        for a in &self.0 {
            a.lhs.vars_in_order(out);
            a.rhs.vars_in_order(out);
        }
    }
}

/// Origin of an assertion; probes and guards are numbered so several can
/// coexist and be removed independently.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", content = "id", rename_all = "snake_case")]
pub enum GroupTag {
    Definition,
    Domain,
    PathCondition,
    Probe(u32),
    Guard(u32),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Assertion {
    pub group: GroupTag,
    pub clause: Clause,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct ConstraintSystem {
    pub decls: Vec<SymVar>,
    pub assertions: Vec<Assertion>,
}

impl ConstraintSystem {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn declare(&mut self, v: &SymVar) {
        if !self.decls.contains(v) {
            self.decls.push(v.clone());
        }
    }

    /// Append a clause, declaring any variable it mentions that is not yet
    /// declared (in order of first appearance).
    pub fn assert(&mut self, group: GroupTag, clause: Clause) {
        let mut vs = Vec::new();
        clause.vars_in_order(&mut vs);
        for v in &vs {
            self.declare(v);
        }
        self.assertions.push(Assertion { group, clause });
    }

    pub fn assert_atom(&mut self, group: GroupTag, atom: Atom) {
        self.assert(group, Clause::unit(atom));
    }

    /// A copy without the assertions of `group`. Declarations are kept.
    pub fn without_group(&self, group: GroupTag) -> ConstraintSystem {
        ConstraintSystem {
            decls: self.decls.clone(),
            assertions: self
                .assertions
                .iter()
                .filter(|a| a.group != group)
                .cloned()
                .collect(),
        }
    }

    pub fn group(&self, group: GroupTag) -> impl Iterator<Item = &Assertion> {
        self.assertions.iter().filter(move |a| a.group == group)
    }

    pub fn groups(&self) -> BTreeSet<GroupTag> {
        self.assertions.iter().map(|a| a.group).collect()
    }

    pub fn vars(&self) -> BTreeSet<SymVar> {
        let mut out = BTreeSet::new();
        for a in &self.assertions {
            a.clause.collect_vars(&mut out);
        }
        out
    }

    /// Every variable used in an assertion is declared.
    pub fn is_well_formed(&self) -> bool {
        let declared: BTreeSet<&SymVar> = self.decls.iter().collect();
        self.vars().iter().all(|v| declared.contains(v))
    }

    pub fn has_div(&self) -> bool {
        self.assertions
            .iter()
            .any(|a| a.clause.0.iter().any(|at| at.lhs.has_div() || at.rhs.has_div()))
    }

    /// Does `model` satisfy every assertion? Unassigned variables count as 0.
    pub fn satisfied_by(&self, model: &Model) -> bool {
        let lookup = |v: &SymVar| Some(model.get(v).cloned().unwrap_or_default());
        self.assertions.iter().all(|a| a.clause.eval(&lookup))
    }
}

pub type Model = BTreeMap<SymVar, BigInt>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Sat(Model),
    Unsat,
    Unknown(String),
}

impl Verdict {
    pub fn is_sat(&self) -> bool {
        matches!(self, Verdict::Sat(_))
    }

    pub fn is_unsat(&self) -> bool {
        matches!(self, Verdict::Unsat)
    }

    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Sat(_) => "sat",
            Verdict::Unsat => "unsat",
            Verdict::Unknown(_) => "unknown",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SolverError {
    #[error("solver unavailable: {0}")]
    Unavailable(String),
    #[error("enumeration space of 2^{bits} assignments exceeds 2^24")]
    SpaceTooLarge { bits: u32 },
    #[error("malformed SMT-LIB input: {0}")]
    Parse(String),
}

/// Anything that can decide a [`ConstraintSystem`].
pub trait Solver: Send + Sync {
    fn check_sat(&self, system: &ConstraintSystem) -> Result<Verdict, SolverError>;
}

/// The configured decision procedure.
#[derive(Debug, Clone)]
pub enum SolverBackend {
    Builtin(BuiltinSolver),
    Process(ProcessSolver),
}

impl Default for SolverBackend {
    fn default() -> Self {
        SolverBackend::Builtin(BuiltinSolver::default())
    }
}

impl Solver for SolverBackend {
    fn check_sat(&self, system: &ConstraintSystem) -> Result<Verdict, SolverError> {
        match self {
            SolverBackend::Builtin(s) => s.check_sat(system),
            SolverBackend::Process(s) => s.check_sat(system),
        }
    }
}

pub fn check_sat(system: &ConstraintSystem) -> Verdict {
    BuiltinSolver::default().decide(system)
}
