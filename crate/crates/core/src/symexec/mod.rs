//! Symbolic interpretation of program paths.
//!
//! Every assignment creates a fresh SSA instance of the assigned variable and
//! one definition constraint over mathematical integers. Inputs (parameters
//! of the analyzed root, uninitialized locals, library results) become fresh
//! variables constrained only to their kind's range. Overflow is never
//! modeled by wrapping; checkers probe the defined values instead.

pub mod engine;
pub mod summary;

use std::collections::{BTreeSet, HashMap};

use num_traits::Zero;
use thiserror::Error;

use crate::cfg::{CallNode, CfgError, TempVar};
use crate::checker::LimitTable;
use crate::frontend::pretty::expr_to_string;
use crate::frontend::{
    AssignOp, BinOp, DeclId, Expr, ExprKind, FunctionDef, IntKind, Span, Stmt, StmtKind, Type,
    TypedAst, UnOp, ValueType, VarScope,
};
use crate::solver::{
    Assertion, Atom, Clause, ConstraintSystem, GroupTag, Rel, Solver, SolverError, SymVar, Term,
    Verdict,
};

pub use engine::{DiagnosticKind, Engine, ExecConfig, ExecDiagnostic, PathStats, RunOutput};
pub use summary::{FunctionSummary, ReturnEffect, SummaryRegistry};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExecError {
    #[error("{}:{}: unsupported expression: {what}", span.line, span.col)]
    UnsupportedExpression { what: String, span: Span },
    #[error("{}:{}: no summary for library function `{name}`", span.line, span.col)]
    MissingSummary { name: String, span: Span },
    #[error("unknown symbolic variable {0}")]
    UnknownSymVar(SymVar),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Cfg(#[from] CfgError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Feasibility {
    Feasible,
    Infeasible,
}

const GLOBAL: usize = usize::MAX;
const MAX_CNF_CLAUSES: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum Key {
    Var { depth: usize, decl: DeclId },
    Field { depth: usize, decl: DeclId, path: String },
    Temp { depth: usize, name: String },
}

impl Key {
    fn depth(&self) -> usize {
        match self {
            Key::Var { depth, .. } | Key::Field { depth, .. } | Key::Temp { depth, .. } => *depth,
        }
    }
}

/// Kind and defining constraint of one SSA variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SymInfo {
    pub kind: IntKind,
    /// Index into [`PathState::assertions`] of the definition, if any.
    pub def: Option<usize>,
}

/// An assignment site reached on a path.
#[derive(Debug, Clone, PartialEq)]
pub struct Site {
    pub function: String,
    pub stmt: Stmt,
    pub span: Span,
    pub defined: SymVar,
    pub kind: IntKind,
    /// The assigned value contains `+ - * /` (compound assignments count).
    pub arithmetic: bool,
}

/// Symbolic store and constraint list of one partial path.
#[derive(Debug, Clone, Default)]
pub struct PathState {
    store: HashMap<Key, SymVar>,
    next_idx: HashMap<String, u32>,
    info: HashMap<SymVar, SymInfo>,
    order: Vec<SymVar>,
    assertions: Vec<Assertion>,
    uses: HashMap<SymVar, Vec<usize>>,
    /// Function names of the active frames; index = inlining depth.
    frames: Vec<String>,
    pending_args: Vec<Option<Term>>,
    pending_return: Option<Term>,
    terminated: bool,
}

impl PathState {
    pub fn new(root: &str) -> Self {
        PathState {
            frames: vec![root.to_string()],
            ..PathState::default()
        }
    }

    pub fn assertions(&self) -> &[Assertion] {
        &self.assertions
    }

    /// Every SSA variable created so far, in creation order.
    pub fn history(&self) -> &[SymVar] {
        &self.order
    }

    pub fn info(&self, v: &SymVar) -> Option<SymInfo> {
        self.info.get(v).copied()
    }

    pub fn kind_of(&self, v: &SymVar) -> Option<IntKind> {
        self.info.get(v).map(|i| i.kind)
    }

    /// Newest SSA instance of `base`.
    pub fn latest(&self, base: &str) -> Option<SymVar> {
        let n = *self.next_idx.get(base)?;
        Some(SymVar::new(base, n - 1))
    }

    pub fn depth(&self) -> usize {
        self.frames.len() - 1
    }

    /// A summary ended the program (`exit`, `abort`).
    pub fn terminated(&self) -> bool {
        self.terminated
    }

    /// The full constraint list as a system.
    pub fn system(&self) -> ConstraintSystem {
        let mut cs = ConstraintSystem::new();
        for a in &self.assertions {
            cs.assert(a.group, a.clause.clone());
        }
        cs
    }

    /// Constraints transitively connected to `var` through shared variables.
    pub fn slice_for(&self, var: &SymVar) -> Result<ConstraintSystem, ExecError> {
        if !self.info.contains_key(var) {
            return Err(ExecError::UnknownSymVar(var.clone()));
        }
        Ok(self.slice_vars(std::iter::once(var.clone())))
    }

    pub fn slice_vars(&self, seeds: impl IntoIterator<Item = SymVar>) -> ConstraintSystem {
        let mut keep = vec![false; self.assertions.len()];
        let mut seen = BTreeSet::new();
        let mut queue: Vec<SymVar> = Vec::new();
        let mut cs = ConstraintSystem::new();
        for s in seeds {
            if seen.insert(s.clone()) {
                cs.declare(&s);
                queue.push(s);
            }
        }
        while let Some(v) = queue.pop() {
            for &i in self.uses.get(&v).map(Vec::as_slice).unwrap_or(&[]) {
                if keep[i] {
                    continue;
                }
                keep[i] = true;
                let mut vs = BTreeSet::new();
                self.assertions[i].clause.collect_vars(&mut vs);
                for w in vs {
                    if seen.insert(w.clone()) {
                        queue.push(w);
                    }
                }
            }
        }
        for (i, a) in self.assertions.iter().enumerate() {
            if keep[i] {
                cs.assert(a.group, a.clause.clone());
            }
        }
        cs
    }

    fn push(&mut self, group: GroupTag, clause: Clause) -> usize {
        let idx = self.assertions.len();
        let mut vs = BTreeSet::new();
        clause.collect_vars(&mut vs);
        for v in vs {
            self.uses.entry(v).or_default().push(idx);
        }
        self.assertions.push(Assertion { group, clause });
        idx
    }

    fn new_var(&mut self, base: &str, kind: IntKind) -> SymVar {
        let slot = self.next_idx.entry(base.to_string()).or_insert(0);
        let v = SymVar::new(base, *slot);
        *slot += 1;
        self.info.insert(v.clone(), SymInfo { kind, def: None });
        self.order.push(v.clone());
        v
    }

    /// A fresh input ranging over `kind`.
    fn fresh(&mut self, base: &str, kind: IntKind) -> SymVar {
        let v = self.new_var(base, kind);
        let t = Term::var(&v);
        self.push(
            GroupTag::Domain,
            Clause::unit(Atom::new(t.clone(), Rel::Ge, Term::Lit(kind.min_value()))),
        );
        self.push(
            GroupTag::Domain,
            Clause::unit(Atom::new(t, Rel::Le, Term::Lit(kind.max_value()))),
        );
        v
    }

    fn define(&mut self, base: &str, kind: IntKind, value: Term) -> SymVar {
        let v = self.new_var(base, kind);
        let idx = self.push(
            GroupTag::Definition,
            Clause::unit(Atom::new(Term::var(&v), Rel::Eq, value)),
        );
        self.info.get_mut(&v).unwrap().def = Some(idx);
        v
    }

    fn drop_depth(&mut self, depth: usize) {
        self.store.retain(|k, _| k.depth() != depth);
    }
}

/// Assignment target after resolving the lvalue expression.
enum Place {
    Scalar { key: Key, base: String, kind: IntKind },
    Struct { depth: usize, decl: DeclId, prefix: String, name: String },
    /// Written through a pointer: modeled as a fresh, untracked location.
    Opaque { base: String, kind: IntKind },
    Ignore,
}

#[derive(Debug, Clone)]
enum Formula {
    Const(bool),
    Atom(Atom),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Not(Box<Formula>),
}

/// Statement encoder for one translation unit.
#[derive(Clone, Copy)]
pub struct SymExec<'a> {
    pub ast: &'a TypedAst,
    pub summaries: &'a SummaryRegistry,
    pub limits: &'a LimitTable,
}

impl<'a> SymExec<'a> {
    pub fn new(ast: &'a TypedAst, summaries: &'a SummaryRegistry, limits: &'a LimitTable) -> Self {
        SymExec {
            ast,
            summaries,
            limits,
        }
    }

    fn unsupported(what: impl Into<String>, span: Span) -> ExecError {
        ExecError::UnsupportedExpression {
            what: what.into(),
            span,
        }
    }

    fn var_depth(&self, state: &PathState, decl: DeclId) -> usize {
        if self.ast.var(decl).scope == VarScope::Global {
            GLOBAL
        } else {
            state.depth()
        }
    }

    fn base_name(&self, state: &PathState, depth: usize, decl: DeclId, path: &str) -> String {
        let var = self.ast.var(decl);
        let mut base = if depth == GLOBAL {
            let clash = self
                .ast
                .vars
                .iter()
                .any(|v| v.scope != VarScope::Global && v.unique == var.unique);
            if clash {
                format!("::{}", var.unique)
            } else {
                var.unique.clone()
            }
        } else if depth == 0 {
            var.unique.clone()
        } else {
            format!("{}@{}.{}", state.frames[depth], depth, var.unique)
        };
        if !path.is_empty() {
            base.push('.');
            base.push_str(path);
        }
        base
    }

    fn temp_base(state: &PathState, depth: usize, name: &str) -> String {
        if depth == 0 {
            name.to_string()
        } else {
            format!("{}@{}.{}", state.frames[depth], depth, name)
        }
    }

    /// Current value of a store location, created on first read.
    fn read_key(&self, state: &mut PathState, key: Key, kind: IntKind) -> Result<Term, ExecError> {
        if let Some(v) = state.store.get(&key) {
            return Ok(Term::var(v));
        }
        let v = match &key {
            Key::Var { depth, decl } => {
                let base = self.base_name(state, *depth, *decl, "");
                if *depth == GLOBAL {
                    let init = self.global_init(state, *decl)?;
                    state.define(&base, kind, init)
                } else {
                    state.fresh(&base, kind)
                }
            }
            Key::Field { depth, decl, path } => {
                let base = self.base_name(state, *depth, *decl, path);
                if *depth == GLOBAL {
                    state.define(&base, kind, Term::lit(0))
                } else {
                    state.fresh(&base, kind)
                }
            }
            Key::Temp { depth, name } => {
                let base = Self::temp_base(state, *depth, name);
                state.fresh(&base, kind)
            }
        };
        state.store.insert(key, v.clone());
        Ok(Term::var(&v))
    }

    fn global_init(&self, state: &mut PathState, decl: DeclId) -> Result<Term, ExecError> {
        let init = self
            .ast
            .globals()
            .find(|g| g.decl == decl)
            .and_then(|g| g.init.clone());
        match init {
            Some(e) => self.translate(state, &e),
            None => Ok(Term::lit(0)),
        }
    }

    fn write_key(&self, state: &mut PathState, key: Key, base: &str, kind: IntKind, value: Term) -> SymVar {
        let v = state.define(base, kind, value);
        state.store.insert(key, v.clone());
        v
    }

    /// `s.a.b` rooted at a variable without pointer hops.
    fn field_chain(e: &Expr) -> Option<(DeclId, Vec<String>)> {
        match &e.kind {
            ExprKind::Var { decl, .. } => Some((*decl, Vec::new())),
            ExprKind::Member {
                base,
                field,
                arrow: false,
            } => {
                let (d, mut path) = Self::field_chain(base)?;
                path.push(field.clone());
                Some((d, path))
            }
            _ => None,
        }
    }

    fn place(&self, state: &PathState, e: &Expr) -> Place {
        if let Some((decl, path)) = Self::field_chain(e) {
            let depth = self.var_depth(state, decl);
            let path = path.join(".");
            return match &e.ty {
                ValueType::Int(kind) => {
                    let base = self.base_name(state, depth, decl, &path);
                    let key = if path.is_empty() {
                        Key::Var { depth, decl }
                    } else {
                        Key::Field { depth, decl, path }
                    };
                    Place::Scalar {
                        key,
                        base,
                        kind: *kind,
                    }
                }
                ValueType::Struct(name) => Place::Struct {
                    depth,
                    decl,
                    prefix: path,
                    name: name.clone(),
                },
                _ => Place::Ignore,
            };
        }
        match &e.ty {
            ValueType::Int(kind) => Place::Opaque {
                base: expr_to_string(e),
                kind: *kind,
            },
            _ => Place::Ignore,
        }
    }

    /// Integer leaves of a struct type as dotted paths, with their kinds.
    fn leaves(&self, strukt: &str, prefix: &str, out: &mut Vec<(String, IntKind)>) {
        let Some(layout) = self.ast.struct_layout(strukt) else {
            return;
        };
        for (field, ty) in &layout.fields {
            let path = if prefix.is_empty() {
                field.clone()
            } else {
                format!("{prefix}.{field}")
            };
            match ty {
                Type::Int(k) => out.push((path, *k)),
                Type::Struct(s) => self.leaves(s, &path, out),
                _ => {}
            }
        }
    }

    fn field_key(depth: usize, decl: DeclId, path: &str) -> Key {
        if path.is_empty() {
            Key::Var { depth, decl }
        } else {
            Key::Field {
                depth,
                decl,
                path: path.to_string(),
            }
        }
    }

    /// Translate an integer-valued expression into a term over current SSA
    /// variables. Division by a non-constant divisor records `divisor != 0`.
    pub fn translate(&self, state: &mut PathState, e: &Expr) -> Result<Term, ExecError> {
        self.term(state, e, true)
    }

    /// `guard_div` is off inside branch conditions: there an atom is already
    /// false when a divisor is zero, which also matches `&&`/`||`
    /// short-circuiting.
    fn term(&self, state: &mut PathState, e: &Expr, guard_div: bool) -> Result<Term, ExecError> {
        match &e.kind {
            ExprKind::IntLit(n) => Ok(Term::Lit(n.clone())),
            ExprKind::Limit(m) => Ok(Term::Lit(self.limits.value(*m))),
            ExprKind::Var { .. } | ExprKind::Member { .. } | ExprKind::Deref(_) => {
                match self.place(state, e) {
                    Place::Scalar { key, kind, .. } => self.read_key(state, key, kind),
                    Place::Opaque { base, kind } => Ok(Term::var(&state.fresh(&base, kind))),
                    _ => Err(Self::unsupported(
                        format!("`{}` is not an integer", expr_to_string(e)),
                        e.span,
                    )),
                }
            }
            ExprKind::Temp(name) => {
                let kind = e
                    .int_kind()
                    .ok_or_else(|| Self::unsupported("call result is not an integer", e.span))?;
                let key = Key::Temp {
                    depth: state.depth(),
                    name: name.clone(),
                };
                self.read_key(state, key, kind)
            }
            ExprKind::Unary(UnOp::Neg, a) => Ok(Term::neg(self.term(state, a, guard_div)?)),
            ExprKind::Binary(op, a, b) if op.is_arithmetic() => {
                let ta = self.term(state, a, guard_div)?;
                let tb = self.term(state, b, guard_div)?;
                Ok(match op {
                    BinOp::Add => Term::add(ta, tb),
                    BinOp::Sub => Term::sub(ta, tb),
                    BinOp::Mul => Term::mul(ta, tb),
                    _ => {
                        if guard_div {
                            self.require_nonzero(state, &tb);
                        }
                        Term::div(ta, tb)
                    }
                })
            }
            ExprKind::Call { callee, args } => {
                match self.apply_summary(state, callee, args, e.span)? {
                    Some(t) => Ok(t),
                    None => Err(Self::unsupported(
                        format!("`{callee}` returns no integer"),
                        e.span,
                    )),
                }
            }
            ExprKind::Unary(UnOp::Not, _) | ExprKind::Binary(..) => Err(Self::unsupported(
                "logical or comparison value used as an integer",
                e.span,
            )),
            ExprKind::StrLit(_) | ExprKind::AddrOf(_) => Err(Self::unsupported(
                format!("`{}` is not an integer", expr_to_string(e)),
                e.span,
            )),
        }
    }

    fn require_nonzero(&self, state: &mut PathState, divisor: &Term) {
        if let Term::Lit(n) = divisor {
            if !n.is_zero() {
                return;
            }
        }
        state.push(
            GroupTag::PathCondition,
            Clause::unit(Atom::new(divisor.clone(), Rel::Ne, Term::lit(0))),
        );
    }

    /// Instantiate the summary of a library call. Returns the result term
    /// when the function yields an integer.
    pub fn apply_summary(
        &self,
        state: &mut PathState,
        callee: &str,
        args: &[Expr],
        span: Span,
    ) -> Result<Option<Term>, ExecError> {
        let summary = self
            .summaries
            .get(callee)
            .ok_or_else(|| ExecError::MissingSummary {
                name: callee.to_string(),
                span,
            })?;
        if summary.fresh_out_args {
            for a in args {
                if let ExprKind::AddrOf(inner) = &a.kind {
                    match self.place(state, inner) {
                        Place::Scalar { key, base, kind } => {
                            let v = state.fresh(&base, kind);
                            state.store.insert(key, v);
                        }
                        Place::Opaque { .. } | Place::Struct { .. } | Place::Ignore => {}
                    }
                }
            }
        }
        if summary.terminates {
            state.terminated = true;
        }
        Ok(match &summary.ret {
            ReturnEffect::None => None,
            ReturnEffect::Fresh(kind) => Some(Term::var(&state.fresh(callee, *kind))),
            ReturnEffect::Const(kind, value) => {
                Some(Term::var(&state.define(callee, *kind, Term::Lit(value.clone()))))
            }
        })
    }

    /// Encode one straight-line statement. Returns the assignment site when
    /// the statement defines an integer.
    pub fn encode_statement(
        &self,
        state: &mut PathState,
        stmt: &Stmt,
    ) -> Result<Option<Site>, ExecError> {
        let site = |state: &PathState, v: SymVar, kind: IntKind, arithmetic: bool| Site {
            function: state.frames[state.depth()].clone(),
            stmt: stmt.clone(),
            span: stmt.span,
            defined: v,
            kind,
            arithmetic,
        };
        match &stmt.kind {
            StmtKind::Decl(d) => {
                let depth = self.var_depth(state, d.decl);
                match (&d.ty, &d.init) {
                    (Type::Int(kind), Some(init)) => {
                        let value = self.translate(state, init)?;
                        let base = self.base_name(state, depth, d.decl, "");
                        let key = Key::Var { depth, decl: d.decl };
                        let v = self.write_key(state, key, &base, *kind, value);
                        Ok(Some(site(state, v, *kind, init.has_arithmetic())))
                    }
                    (Type::Int(kind), None) => {
                        let base = self.base_name(state, depth, d.decl, "");
                        let v = state.fresh(&base, *kind);
                        state.store.insert(Key::Var { depth, decl: d.decl }, v);
                        Ok(None)
                    }
                    (Type::Struct(name), init) => {
                        state.store.retain(|k, _| {
                            !matches!(k, Key::Field { depth: kd, decl, .. } if *kd == depth && *decl == d.decl)
                        });
                        if let Some(init) = init {
                            self.copy_struct(state, depth, d.decl, "", name, init)?;
                        }
                        Ok(None)
                    }
                    _ => {
                        if let Some(init) = &d.init {
                            self.effects_only(state, init)?;
                        }
                        Ok(None)
                    }
                }
            }
            StmtKind::Assign { target, op, value } => {
                let place = self.place(state, target);
                let rhs = |this: &Self, state: &mut PathState| -> Result<Term, ExecError> {
                    let v = this.translate(state, value)?;
                    Ok(match op.binary() {
                        None => v,
                        Some(bin) => {
                            let cur = this.translate(state, target)?;
                            match bin {
                                BinOp::Add => Term::add(cur, v),
                                BinOp::Sub => Term::sub(cur, v),
                                BinOp::Mul => Term::mul(cur, v),
                                _ => {
                                    this.require_nonzero(state, &v);
                                    Term::div(cur, v)
                                }
                            }
                        }
                    })
                };
                let arithmetic = *op != AssignOp::Assign || value.has_arithmetic();
                match place {
                    Place::Scalar { key, base, kind } => {
                        let t = rhs(self, state)?;
                        let v = self.write_key(state, key, &base, kind, t);
                        Ok(Some(site(state, v, kind, arithmetic)))
                    }
                    Place::Opaque { base, kind } => {
                        let t = rhs(self, state)?;
                        let v = state.define(&base, kind, t);
                        Ok(Some(site(state, v, kind, arithmetic)))
                    }
                    Place::Struct {
                        depth,
                        decl,
                        prefix,
                        name,
                    } => {
                        self.copy_struct(state, depth, decl, &prefix, &name, value)?;
                        Ok(None)
                    }
                    Place::Ignore => {
                        self.effects_only(state, value)?;
                        Ok(None)
                    }
                }
            }
            StmtKind::Expr(e) => {
                self.effects_only(state, e)?;
                Ok(None)
            }
            StmtKind::Return(e) => {
                if let Some(e) = e {
                    if state.depth() > 0 && e.int_kind().is_some() {
                        state.pending_return = Some(self.translate(state, e)?);
                    } else {
                        self.effects_only(state, e)?;
                    }
                }
                Ok(None)
            }
            _ => Err(Self::unsupported("compound statement on a path", stmt.span)),
        }
    }

    /// Evaluate an expression whose value is discarded: only library calls
    /// (and their summaries) matter.
    fn effects_only(&self, state: &mut PathState, e: &Expr) -> Result<(), ExecError> {
        let mut calls = Vec::new();
        e.visit(&mut |x| {
            if let ExprKind::Call { callee, args } = &x.kind {
                calls.push((callee.clone(), args.clone(), x.span));
            }
        });
        for (callee, args, span) in calls {
            self.apply_summary(state, &callee, &args, span)?;
        }
        Ok(())
    }

    fn copy_struct(
        &self,
        state: &mut PathState,
        depth: usize,
        decl: DeclId,
        prefix: &str,
        strukt: &str,
        value: &Expr,
    ) -> Result<(), ExecError> {
        let mut leaves = Vec::new();
        self.leaves(strukt, "", &mut leaves);
        let source = Self::field_chain(value).map(|(sd, sp)| {
            let sdepth = self.var_depth(state, sd);
            (sdepth, sd, sp.join("."))
        });
        if source.is_none() {
            self.effects_only(state, value)?;
        }
        for (leaf, kind) in leaves {
            let join = |p: &str| {
                if p.is_empty() {
                    leaf.clone()
                } else {
                    format!("{p}.{leaf}")
                }
            };
            let tpath = join(prefix);
            let tkey = Self::field_key(depth, decl, &tpath);
            let tbase = self.base_name(state, depth, decl, &tpath);
            match &source {
                Some((sdepth, sdecl, spath)) => {
                    let skey = Self::field_key(*sdepth, *sdecl, &join(spath));
                    let t = self.read_key(state, skey, kind)?;
                    self.write_key(state, tkey, &tbase, kind, t);
                }
                None => {
                    let v = state.fresh(&tbase, kind);
                    state.store.insert(tkey, v);
                }
            }
        }
        Ok(())
    }

    fn formula(&self, state: &mut PathState, e: &Expr) -> Result<Formula, ExecError> {
        match &e.kind {
            ExprKind::Binary(op, a, b) if op.is_comparison() => {
                let ta = self.term(state, a, false)?;
                let tb = self.term(state, b, false)?;
                let rel = match op {
                    BinOp::Lt => Rel::Lt,
                    BinOp::Le => Rel::Le,
                    BinOp::Gt => Rel::Gt,
                    BinOp::Ge => Rel::Ge,
                    BinOp::Eq => Rel::Eq,
                    _ => Rel::Ne,
                };
                Ok(Formula::Atom(Atom::new(ta, rel, tb)))
            }
            ExprKind::Binary(BinOp::And, a, b) => Ok(Formula::And(
                Box::new(self.formula(state, a)?),
                Box::new(self.formula(state, b)?),
            )),
            ExprKind::Binary(BinOp::Or, a, b) => Ok(Formula::Or(
                Box::new(self.formula(state, a)?),
                Box::new(self.formula(state, b)?),
            )),
            ExprKind::Unary(UnOp::Not, a) => Ok(Formula::Not(Box::new(self.formula(state, a)?))),
            ExprKind::IntLit(n) => Ok(Formula::Const(!n.is_zero())),
            _ => {
                let t = self.term(state, e, false)?;
                Ok(Formula::Atom(Atom::new(t, Rel::Ne, Term::lit(0))))
            }
        }
    }

    /// The branch condition (or its negation) in conjunctive normal form.
    pub fn condition_clauses(
        &self,
        state: &mut PathState,
        cond: &Expr,
        taken: bool,
    ) -> Result<Vec<Clause>, ExecError> {
        let f = self.formula(state, cond)?;
        let f = if taken { f } else { Formula::Not(Box::new(f)) };
        cnf(&nnf(f, false)).ok_or_else(|| Self::unsupported("condition too large for CNF", cond.span))
    }

    /// Add the branch condition as a path condition and decide whether the
    /// path stays feasible. `Unknown` counts as feasible.
    pub fn validate_branch(
        &self,
        state: &mut PathState,
        cond: &Expr,
        taken: bool,
        solver: &dyn Solver,
    ) -> Result<Feasibility, ExecError> {
        let before = state.assertions.len();
        let clauses = self.condition_clauses(state, cond, taken)?;
        let mut seeds = BTreeSet::new();
        for c in &clauses {
            let mut vs = BTreeSet::new();
            c.collect_vars(&mut vs);
            if vs.is_empty() {
                if !c.eval(&|_| None) {
                    return Ok(Feasibility::Infeasible);
                }
                continue;
            }
            seeds.extend(vs);
            state.push(GroupTag::PathCondition, c.clone());
        }
        for a in &state.assertions[before..] {
            a.clause.collect_vars(&mut seeds);
        }
        if seeds.is_empty() {
            return Ok(Feasibility::Feasible);
        }
        let slice = state.slice_vars(seeds);
        Ok(match solver.check_sat(&slice)? {
            Verdict::Unsat => Feasibility::Infeasible,
            _ => Feasibility::Feasible,
        })
    }

    /// Evaluate the arguments of a call to a defined function and open the
    /// callee's frame.
    pub fn enter_call(&self, state: &mut PathState, call: &CallNode) -> Result<(), ExecError> {
        let mut args = Vec::with_capacity(call.args.len());
        for a in &call.args {
            if a.int_kind().is_some() {
                args.push(Some(self.translate(state, a)?));
            } else {
                self.effects_only(state, a)?;
                args.push(None);
            }
        }
        state.pending_args = args;
        state.frames.push(call.callee.clone());
        Ok(())
    }

    /// Bind parameters at the callee's entry.
    pub fn bind_params(&self, state: &mut PathState, f: &FunctionDef) {
        let depth = state.depth();
        let args = std::mem::take(&mut state.pending_args);
        for (p, arg) in f.sig.params.iter().zip(args) {
            if let (Type::Int(kind), Some(t)) = (&p.ty, arg) {
                let base = self.base_name(state, depth, p.decl, "");
                self.write_key(state, Key::Var { depth, decl: p.decl }, &base, *kind, t);
            }
        }
    }

    /// Close the callee's frame and bind its result temporary in the caller.
    pub fn leave_call(&self, state: &mut PathState, result: Option<&TempVar>) {
        let depth = state.depth();
        let ret = state.pending_return.take();
        state.drop_depth(depth);
        state.frames.pop();
        if let Some(temp) = result {
            let caller = depth - 1;
            let base = Self::temp_base(state, caller, &temp.name);
            let key = Key::Temp {
                depth: caller,
                name: temp.name.clone(),
            };
            match ret {
                Some(t) => {
                    self.write_key(state, key, &base, temp.kind, t);
                }
                None => {
                    let v = state.fresh(&base, temp.kind);
                    state.store.insert(key, v);
                }
            }
        }
    }
}

fn nnf(f: Formula, negate: bool) -> Formula {
    match f {
        Formula::Const(b) => Formula::Const(b != negate),
        Formula::Atom(a) => Formula::Atom(if negate { a.negate() } else { a }),
        Formula::Not(inner) => nnf(*inner, !negate),
        Formula::And(a, b) => {
            let (a, b) = (nnf(*a, negate), nnf(*b, negate));
            if negate {
                Formula::Or(Box::new(a), Box::new(b))
            } else {
                Formula::And(Box::new(a), Box::new(b))
            }
        }
        Formula::Or(a, b) => {
            let (a, b) = (nnf(*a, negate), nnf(*b, negate));
            if negate {
                Formula::And(Box::new(a), Box::new(b))
            } else {
                Formula::Or(Box::new(a), Box::new(b))
            }
        }
    }
}

/// CNF of a negation-normal formula; `None` past the clause cap. A constant
/// true clause is dropped, a constant false one becomes the empty clause.
fn cnf(f: &Formula) -> Option<Vec<Clause>> {
    let out = match f {
        Formula::Const(true) => Vec::new(),
        Formula::Const(false) => vec![Clause(Vec::new())],
        Formula::Atom(a) => vec![Clause::unit(a.clone())],
        Formula::And(a, b) => {
            let mut l = cnf(a)?;
            l.extend(cnf(b)?);
            l
        }
        Formula::Or(a, b) => {
            let (l, r) = (cnf(a)?, cnf(b)?);
            if l.len() * r.len() > MAX_CNF_CLAUSES {
                return None;
            }
            let mut out = Vec::new();
            for x in &l {
                for y in &r {
                    let mut c = x.0.clone();
                    c.extend(y.0.iter().cloned());
                    out.push(Clause(c));
                }
            }
            out
        }
        Formula::Not(_) => unreachable!("formula is in negation normal form"),
    };
    (out.len() <= MAX_CNF_CLAUSES).then_some(out)
}
