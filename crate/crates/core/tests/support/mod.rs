//! Shared test oracles: a concrete interpreter over the typed AST with exact
//! integer arithmetic, and seeded generators of small programs.
#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap};

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};
use ovguard::frontend::{
    AssignOp, BinOp, DeclId, Expr, ExprKind, Span, Stmt, StmtKind, TypedAst, UnOp,
};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Halt {
    DivByZero(Span),
    LoopLimit,
    /// `exit` or `abort` was called.
    Exit,
    Unsupported(String),
}

/// Observable effects of one concrete run.
#[derive(Debug, Clone, Default)]
pub struct Trace {
    /// Every assignment in execution order: (unique variable name, value).
    pub writes: Vec<(String, BigInt)>,
    /// Values assigned at arithmetic sites: (statement span, value).
    pub sites: Vec<(Span, BigInt)>,
    pub decisions: Vec<bool>,
    /// Calls in execution order with their integer arguments.
    pub calls: Vec<(String, Vec<BigInt>)>,
    /// Final value of every variable of the entry function, by unique name.
    pub finals: BTreeMap<String, BigInt>,
}

pub struct Interp<'a> {
    ast: &'a TypedAst,
    env: HashMap<DeclId, BigInt>,
    inputs: &'a HashMap<String, BigInt>,
    trace: Trace,
    loop_limit: usize,
    ret: Option<BigInt>,
}

fn b2i(b: bool) -> BigInt {
    if b {
        BigInt::one()
    } else {
        BigInt::zero()
    }
}

enum Flow {
    Normal,
    Return,
}

impl<'a> Interp<'a> {
    /// Run function `name`; parameters and uninitialized locals take their
    /// value from `inputs` by unique name (0 when absent).
    pub fn run(
        ast: &'a TypedAst,
        name: &str,
        inputs: &'a HashMap<String, BigInt>,
    ) -> Result<Trace, Halt> {
        let f = ast
            .function(name)
            .ok_or_else(|| Halt::Unsupported(format!("no function {name}")))?;
        let mut it = Interp {
            ast,
            env: HashMap::new(),
            inputs,
            trace: Trace::default(),
            loop_limit: 1000,
            ret: None,
        };
        for p in &f.sig.params {
            let v = it.input(p.decl);
            it.env.insert(p.decl, v);
        }
        for s in &f.body.stmts {
            if let Flow::Return = it.stmt(s)? {
                break;
            }
        }
        for (decl, v) in &it.env {
            it.trace.finals.insert(ast.var(*decl).unique.clone(), v.clone());
        }
        Ok(it.trace)
    }

    fn input(&self, decl: DeclId) -> BigInt {
        let unique = &self.ast.var(decl).unique;
        self.inputs.get(unique).cloned().unwrap_or_default()
    }

    fn write(&mut self, decl: DeclId, value: BigInt) {
        self.trace
            .writes
            .push((self.ast.var(decl).unique.clone(), value.clone()));
        self.env.insert(decl, value);
    }

    fn stmt(&mut self, s: &Stmt) -> Result<Flow, Halt> {
        match &s.kind {
            StmtKind::Decl(d) => match &d.init {
                Some(e) => {
                    let v = self.eval(e)?;
                    if e.has_arithmetic() {
                        self.trace.sites.push((s.span, v.clone()));
                    }
                    self.write(d.decl, v);
                }
                None => {
                    let v = self.input(d.decl);
                    self.env.insert(d.decl, v);
                }
            },
            StmtKind::Assign { target, op, value } => {
                let ExprKind::Var { decl, .. } = &target.kind else {
                    return Err(Halt::Unsupported("non-variable target".into()));
                };
                let rhs = self.eval(value)?;
                let v = match op {
                    AssignOp::Assign => rhs,
                    AssignOp::Add => self.env[decl].clone() + rhs,
                    AssignOp::Sub => self.env[decl].clone() - rhs,
                    AssignOp::Mul => self.env[decl].clone() * rhs,
                    AssignOp::Div => {
                        if rhs.is_zero() {
                            return Err(Halt::DivByZero(s.span));
                        }
                        self.env[decl].clone() / rhs
                    }
                };
                if *op != AssignOp::Assign || value.has_arithmetic() {
                    self.trace.sites.push((s.span, v.clone()));
                }
                self.write(*decl, v);
            }
            StmtKind::Expr(e) => {
                self.eval(e)?;
            }
            StmtKind::Return(e) => {
                self.ret = match e {
                    Some(e) => Some(self.eval(e)?),
                    None => None,
                };
                return Ok(Flow::Return);
            }
            StmtKind::If {
                cond,
                then_branch,
                else_branch,
            } => {
                let c = !self.eval(cond)?.is_zero();
                self.trace.decisions.push(c);
                if c {
                    return self.stmt(then_branch);
                } else if let Some(e) = else_branch {
                    return self.stmt(e);
                }
            }
            StmtKind::While { cond, body } => {
                let mut n = 0;
                loop {
                    let c = !self.eval(cond)?.is_zero();
                    self.trace.decisions.push(c);
                    if !c {
                        break;
                    }
                    n += 1;
                    if n > self.loop_limit {
                        return Err(Halt::LoopLimit);
                    }
                    if let Flow::Return = self.stmt(body)? {
                        return Ok(Flow::Return);
                    }
                }
            }
            StmtKind::For {
                init,
                cond,
                step,
                body,
            } => {
                if let Some(i) = init {
                    self.stmt(i)?;
                }
                let mut n = 0;
                loop {
                    let c = match cond {
                        Some(c) => !self.eval(c)?.is_zero(),
                        None => true,
                    };
                    self.trace.decisions.push(c);
                    if !c {
                        break;
                    }
                    n += 1;
                    if n > self.loop_limit {
                        return Err(Halt::LoopLimit);
                    }
                    if let Flow::Return = self.stmt(body)? {
                        return Ok(Flow::Return);
                    }
                    if let Some(st) = step {
                        self.stmt(st)?;
                    }
                }
            }
            StmtKind::Block(b) => {
                for s in &b.stmts {
                    if let Flow::Return = self.stmt(s)? {
                        return Ok(Flow::Return);
                    }
                }
            }
            StmtKind::Empty => {}
        }
        Ok(Flow::Normal)
    }

    fn eval(&mut self, e: &Expr) -> Result<BigInt, Halt> {
        Ok(match &e.kind {
            ExprKind::IntLit(n) => n.clone(),
            ExprKind::StrLit(_) => BigInt::zero(),
            ExprKind::Call { callee, args } => return self.call(callee, args),
            ExprKind::Limit(m) => m.default_value(),
            ExprKind::Var { decl, .. } => self
                .env
                .get(decl)
                .cloned()
                .ok_or_else(|| Halt::Unsupported("read of global".into()))?,
            ExprKind::Unary(UnOp::Neg, a) => -self.eval(a)?,
            ExprKind::Unary(UnOp::Not, a) => b2i(self.eval(a)?.is_zero()),
            ExprKind::Binary(BinOp::And, a, b) => {
                b2i(!self.eval(a)?.is_zero() && !self.eval(b)?.is_zero())
            }
            ExprKind::Binary(BinOp::Or, a, b) => {
                b2i(!self.eval(a)?.is_zero() || !self.eval(b)?.is_zero())
            }
            ExprKind::Binary(op, a, b) => {
                let x = self.eval(a)?;
                let y = self.eval(b)?;
                match op {
                    BinOp::Add => x + y,
                    BinOp::Sub => x - y,
                    BinOp::Mul => x * y,
                    BinOp::Div => {
                        if y.is_zero() {
                            return Err(Halt::DivByZero(e.span));
                        }
                        x / y
                    }
                    BinOp::Lt => b2i(x < y),
                    BinOp::Le => b2i(x <= y),
                    BinOp::Gt => b2i(x > y),
                    BinOp::Ge => b2i(x >= y),
                    BinOp::Eq => b2i(x == y),
                    BinOp::Ne => b2i(x != y),
                    BinOp::And | BinOp::Or => unreachable!(),
                }
            }
            other => return Err(Halt::Unsupported(format!("{other:?}"))),
        })
    }
}

impl Interp<'_> {
    /// Library calls return 0; `exit`/`abort` halt; defined functions run
    /// with a fresh frame.
    fn call(&mut self, callee: &str, args: &[Expr]) -> Result<BigInt, Halt> {
        let mut values = Vec::new();
        for a in args {
            if !matches!(a.kind, ExprKind::StrLit(_)) {
                values.push(self.eval(a)?);
            }
        }
        self.trace.calls.push((callee.to_string(), values.clone()));
        if callee == "exit" || callee == "abort" {
            return Err(Halt::Exit);
        }
        let Some(f) = self.ast.function(callee) else {
            return Ok(BigInt::zero());
        };
        let saved = std::mem::take(&mut self.env);
        let mut ints = values.into_iter();
        for p in &f.sig.params {
            let v = if p.ty.int_kind().is_some() { ints.next().unwrap_or_default() } else { BigInt::zero() };
            self.env.insert(p.decl, v);
        }
        self.ret = None;
        let mut result = Ok(());
        for s in &f.body.stmts {
            match self.stmt(s) {
                Ok(Flow::Return) => break,
                Ok(Flow::Normal) => {}
                Err(e) => {
                    result = Err(e);
                    break;
                }
            }
        }
        self.env = saved;
        result?;
        Ok(self.ret.take().unwrap_or_default())
    }
}

/// All pairs of 8-bit signed inputs for params `a` and `b`.
pub fn all_char_pairs() -> impl Iterator<Item = HashMap<String, BigInt>> {
    (-128i32..=127).flat_map(|a| {
        (-128i32..=127).map(move |b| {
            HashMap::from([("a".to_string(), BigInt::from(a)), ("b".to_string(), BigInt::from(b))])
        })
    })
}

pub fn to_i64(v: &BigInt) -> i64 {
    v.to_i64().expect("fits in i64")
}

/// Random program generator over `char` parameters `a`, `b` and `int`
/// locals. Expressions stay low-degree so the builtin solver decides them.
pub struct ProgGen<'r> {
    pub rng: &'r mut ChaCha8Rng,
    pub vars: Vec<String>,
    pub locals: usize,
    pub var_divisors: bool,
}

impl<'r> ProgGen<'r> {
    pub fn new(rng: &'r mut ChaCha8Rng) -> Self {
        ProgGen {
            rng,
            vars: vec!["a".into(), "b".into()],
            locals: 0,
            var_divisors: true,
        }
    }

    fn leaf(&mut self) -> String {
        if self.rng.gen_bool(0.7) {
            let i = self.rng.gen_range(0..self.vars.len());
            self.vars[i].clone()
        } else {
            self.rng.gen_range(-6i32..=6).to_string()
        }
    }

    pub fn expr(&mut self, depth: u32) -> String {
        if depth == 0 || self.rng.gen_bool(0.3) {
            return self.leaf();
        }
        let op = ["+", "-", "*", "/"][self.rng.gen_range(0..4)];
        let lhs = self.expr(depth - 1);
        let rhs = if op == "/" {
            if self.var_divisors && self.rng.gen_bool(0.3) {
                let i = self.rng.gen_range(0..self.vars.len());
                self.vars[i].clone()
            } else {
                ["2", "3", "5", "-2"][self.rng.gen_range(0..4)].to_string()
            }
        } else {
            self.expr(depth - 1)
        };
        format!("({lhs} {op} {rhs})")
    }

    pub fn cond(&mut self, depth: u32) -> String {
        if depth > 0 && self.rng.gen_bool(0.3) {
            let op = if self.rng.gen_bool(0.5) { "&&" } else { "||" };
            let l = self.cond(depth - 1);
            let r = self.cond(depth - 1);
            return format!("({l} {op} {r})");
        }
        let rel = ["<", "<=", ">", ">=", "==", "!="][self.rng.gen_range(0..6)];
        let l = self.expr(1);
        let r = self.rng.gen_range(-40i32..=40).to_string();
        format!("{l} {rel} {r}")
    }

    /// `int vN = <expr>;` introducing a new local.
    pub fn decl(&mut self) -> String {
        let e = self.expr(2);
        let name = format!("v{}", self.locals);
        self.locals += 1;
        self.vars.push(name.clone());
        format!("int {name} = {e};")
    }

    pub fn assign(&mut self) -> String {
        let i = self.rng.gen_range(0..self.vars.len());
        let target = self.vars[i].clone();
        let e = self.expr(2);
        format!("{target} = {e};")
    }

    /// A loop-free body: declarations, reassignments and if/else blocks.
    pub fn body(&mut self, stmts: usize, allow_if: bool) -> Vec<String> {
        let mut out = Vec::new();
        for _ in 0..stmts {
            let roll = self.rng.gen_range(0..10);
            if roll < 5 || self.vars.len() < 3 {
                out.push(self.decl());
            } else if roll < 8 || !allow_if {
                out.push(self.assign());
            } else {
                let c = self.cond(1);
                let t = self.assign();
                let e = self.assign();
                out.push(format!("if ({c}) {{ {t} }} else {{ {e} }}"));
            }
        }
        out
    }
}

pub fn function_source(body: &[String]) -> String {
    let mut s = String::from("void f(char a, char b)\n{\n");
    for line in body {
        s.push_str("    ");
        s.push_str(line);
        s.push('\n');
    }
    s.push_str("}\n");
    s
}
