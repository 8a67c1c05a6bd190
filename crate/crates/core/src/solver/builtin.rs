//! In-process decision procedure for integer constraint systems.
//!
//! Interval constraint propagation narrows variable domains; a depth-first
//! search then splits disjunctions and bisects domains. Candidate models are
//! built at every node by fixing the free variables and evaluating functional
//! definitions (`v = term`), which finds witnesses for the common case long
//! before domains shrink to points. Exhausted budgets yield `Unknown`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_traits::{One, Zero};

use super::interval::{Ext, Interval};
use super::{Atom, ConstraintSystem, Model, Rel, Solver, SolverError, SymVar, Term, Verdict};

#[derive(Debug, Clone)]
pub struct BuiltinSolver {
    pub node_budget: usize,
    pub timeout: Duration,
}

impl Default for BuiltinSolver {
    fn default() -> Self {
        BuiltinSolver {
            node_budget: 200_000,
            timeout: Duration::from_secs(10),
        }
    }
}

impl Solver for BuiltinSolver {
    fn check_sat(&self, system: &ConstraintSystem) -> Result<Verdict, SolverError> {
        Ok(self.decide(system))
    }
}

#[derive(Debug, Clone, PartialEq)]
enum T {
    Var(usize),
    Lit(BigInt),
    Add(Box<T>, Box<T>),
    Sub(Box<T>, Box<T>),
    Mul(Box<T>, Box<T>),
    Sq(Box<T>),
    Div(Box<T>, Box<T>),
    Neg(Box<T>),
}

#[derive(Debug, Clone)]
struct A {
    rel: Rel,
    l: T,
    r: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Status {
    True,
    False,
    Unknown,
}

struct Problem {
    vars: Vec<SymVar>,
    clauses: Vec<Vec<A>>,
    /// Functional definitions in evaluation order.
    defs: Vec<(usize, T)>,
    free: Vec<usize>,
    defined: Vec<bool>,
}

#[derive(Clone)]
struct Node {
    dom: Vec<Interval>,
    /// Clauses reduced to one chosen atom by earlier disjunction splits.
    pick: Vec<Option<usize>>,
}

struct Conflict;

impl BuiltinSolver {
    pub fn decide(&self, system: &ConstraintSystem) -> Verdict {
        let problem = Problem::new(system);
        let start = Instant::now();
        let root = Node {
            dom: vec![Interval::full(); problem.vars.len()],
            pick: vec![None; problem.clauses.len()],
        };
        let mut stack = vec![root];
        let mut nodes = 0usize;
        while let Some(mut node) = stack.pop() {
            nodes += 1;
            if nodes > self.node_budget {
                return Verdict::Unknown(format!("search budget of {} nodes exhausted", self.node_budget));
            }
            if nodes.is_multiple_of(16) && start.elapsed() > self.timeout {
                return Verdict::Unknown(format!("timeout after {} ms", self.timeout.as_millis()));
            }
            if problem.propagate(&mut node).is_err() {
                continue;
            }
            if let Some(model) = problem.try_candidates(&node) {
                return Verdict::Sat(problem.full_model(system, &model));
            }
            match problem.branch(&node) {
                Branch::Children(children) => stack.extend(children.into_iter().rev()),
                Branch::Stuck => {
                    return Verdict::Unknown("no branching variable left".into());
                }
            }
        }
        Verdict::Unsat
    }
}

enum Branch {
    Children(Vec<Node>),
    Stuck,
}

fn lower(t: &Term, index: &HashMap<SymVar, usize>) -> T {
    match t {
        Term::Var(v) => T::Var(index[v]),
        Term::Lit(n) => T::Lit(n.clone()),
        Term::Add(a, b) => T::Add(Box::new(lower(a, index)), Box::new(lower(b, index))),
        Term::Sub(a, b) => T::Sub(Box::new(lower(a, index)), Box::new(lower(b, index))),
        Term::Mul(a, b) => {
            let (la, lb) = (lower(a, index), lower(b, index));
            if la == lb {
                T::Sq(Box::new(la))
            } else {
                T::Mul(Box::new(la), Box::new(lb))
            }
        }
        Term::Div(a, b) => T::Div(Box::new(lower(a, index)), Box::new(lower(b, index))),
        Term::Neg(a) => T::Neg(Box::new(lower(a, index))),
    }
}

fn t_vars(t: &T, out: &mut BTreeSet<usize>) {
    match t {
        T::Var(i) => {
            out.insert(*i);
        }
        T::Lit(_) => {}
        T::Add(a, b) | T::Sub(a, b) | T::Mul(a, b) | T::Div(a, b) => {
            t_vars(a, out);
            t_vars(b, out);
        }
        T::Sq(a) | T::Neg(a) => t_vars(a, out),
    }
}

fn eval(t: &T, vals: &[Option<BigInt>]) -> Option<BigInt> {
    Some(match t {
        T::Var(i) => vals[*i].clone()?,
        T::Lit(n) => n.clone(),
        T::Add(a, b) => eval(a, vals)? + eval(b, vals)?,
        T::Sub(a, b) => eval(a, vals)? - eval(b, vals)?,
        T::Mul(a, b) => eval(a, vals)? * eval(b, vals)?,
        T::Sq(a) => {
            let x = eval(a, vals)?;
            &x * &x
        }
        T::Div(a, b) => {
            let d = eval(b, vals)?;
            if d.is_zero() {
                return None;
            }
            eval(a, vals)? / d
        }
        T::Neg(a) => -eval(a, vals)?,
    })
}

fn lit_interval(lo: Option<BigInt>, hi: Option<BigInt>) -> Option<Interval> {
    Interval::new(
        lo.map(Ext::Fin).unwrap_or(Ext::NegInf),
        hi.map(Ext::Fin).unwrap_or(Ext::PosInf),
    )
}

fn shift(e: &Ext, by: i64) -> Ext {
    match e {
        Ext::Fin(n) => Ext::Fin(n + by),
        other => other.clone(),
    }
}

/// Forward evaluation: enclosure of the term's defined values and whether the
/// term is defined everywhere on the box (no divisor range touching zero).
fn fwd(t: &T, dom: &[Interval]) -> Option<(Interval, bool)> {
    Some(match t {
        T::Var(i) => (dom[*i].clone(), true),
        T::Lit(n) => (Interval::point(n.clone()), true),
        T::Add(a, b) => {
            let (x, ta) = fwd(a, dom)?;
            let (y, tb) = fwd(b, dom)?;
            (x.add(&y), ta && tb)
        }
        T::Sub(a, b) => {
            let (x, ta) = fwd(a, dom)?;
            let (y, tb) = fwd(b, dom)?;
            (x.sub(&y), ta && tb)
        }
        T::Mul(a, b) => {
            let (x, ta) = fwd(a, dom)?;
            let (y, tb) = fwd(b, dom)?;
            (x.mul(&y), ta && tb)
        }
        T::Sq(a) => {
            let (x, ta) = fwd(a, dom)?;
            (x.square(), ta)
        }
        T::Div(a, b) => {
            let (x, ta) = fwd(a, dom)?;
            let (y, tb) = fwd(b, dom)?;
            let total = ta && tb && !y.contains_zero();
            (x.tdiv(&y)?, total)
        }
        T::Neg(a) => {
            let (x, ta) = fwd(a, dom)?;
            (x.neg(), ta)
        }
    })
}

/// Bounds beyond this many bits are dropped to infinity. Nonlinear
/// propagation can otherwise square bounds round after round.
const MAX_BOUND_BITS: u64 = 256;

fn tame(e: &Ext) -> Option<Ext> {
    match e {
        Ext::Fin(n) if n.bits() > MAX_BOUND_BITS => None,
        other => Some(other.clone()),
    }
}

fn narrow_var(dom: &mut [Interval], i: usize, target: &Interval, changed: &mut bool) -> Result<(), Conflict> {
    let target = Interval::new(
        tame(&target.lo).unwrap_or(Ext::NegInf),
        tame(&target.hi).unwrap_or(Ext::PosInf),
    )
    .expect("widening keeps the interval non-empty");
    let new = dom[i].intersect(&target).ok_or(Conflict)?;
    if new != dom[i] {
        dom[i] = new;
        *changed = true;
    }
    Ok(())
}

/// Backward projection: restrict the variables of `t` so that its value can
/// lie in `target`.
fn back(t: &T, target: &Interval, dom: &mut [Interval], changed: &mut bool) -> Result<(), Conflict> {
    let Some((cur, _)) = fwd(t, dom) else {
        return Err(Conflict);
    };
    let target = cur.intersect(target).ok_or(Conflict)?;
    match t {
        T::Var(i) => narrow_var(dom, *i, &target, changed),
        T::Lit(_) => Ok(()),
        T::Add(a, b) => {
            let (ib, _) = fwd(b, dom).ok_or(Conflict)?;
            back(a, &target.sub(&ib), dom, changed)?;
            let (ia, _) = fwd(a, dom).ok_or(Conflict)?;
            back(b, &target.sub(&ia), dom, changed)
        }
        T::Sub(a, b) => {
            let (ib, _) = fwd(b, dom).ok_or(Conflict)?;
            back(a, &target.add(&ib), dom, changed)?;
            let (ia, _) = fwd(a, dom).ok_or(Conflict)?;
            back(b, &ia.sub(&target), dom, changed)
        }
        T::Neg(a) => back(a, &target.neg(), dom, changed),
        T::Mul(a, b) => {
            let (ib, _) = fwd(b, dom).ok_or(Conflict)?;
            if let Some(ra) = target.mul_inverse(&ib) {
                back(a, &ra, dom, changed)?;
            }
            let (ia, _) = fwd(a, dom).ok_or(Conflict)?;
            if let Some(rb) = target.mul_inverse(&ia) {
                back(b, &rb, dom, changed)?;
            }
            Ok(())
        }
        T::Sq(a) => {
            let r = target.sqrt_inverse().ok_or(Conflict)?;
            back(a, &r, dom, changed)
        }
        T::Div(..) => Ok(()),
    }
}

fn status(a: &A, dom: &[Interval]) -> Status {
    let (Some((l, tl)), Some((r, tr))) = (fwd(&a.l, dom), fwd(&a.r, dom)) else {
        return Status::False;
    };
    let total = tl && tr;
    let s = match a.rel {
        Rel::Eq => match (l.singleton(), r.singleton()) {
            (Some(x), Some(y)) if x == y => Status::True,
            _ if l.intersect(&r).is_none() => Status::False,
            _ => Status::Unknown,
        },
        Rel::Ne => match (l.singleton(), r.singleton()) {
            (Some(x), Some(y)) if x == y => Status::False,
            _ if l.intersect(&r).is_none() => Status::True,
            _ => Status::Unknown,
        },
        Rel::Lt => cmp_status(&l, &r, true),
        Rel::Le => cmp_status(&l, &r, false),
        Rel::Gt => cmp_status(&r, &l, true),
        Rel::Ge => cmp_status(&r, &l, false),
    };
    if s == Status::True && !total {
        Status::Unknown
    } else {
        s
    }
}

fn cmp_status(l: &Interval, r: &Interval, strict: bool) -> Status {
    if strict {
        if l.hi < r.lo {
            Status::True
        } else if l.lo >= r.hi {
            Status::False
        } else {
            Status::Unknown
        }
    } else if l.hi <= r.lo {
        Status::True
    } else if l.lo > r.hi {
        Status::False
    } else {
        Status::Unknown
    }
}

fn narrow_atom(a: &A, dom: &mut [Interval], changed: &mut bool) -> Result<(), Conflict> {
    let (l, _) = fwd(&a.l, dom).ok_or(Conflict)?;
    let (r, _) = fwd(&a.r, dom).ok_or(Conflict)?;
    match a.rel {
        Rel::Eq => {
            let m = l.intersect(&r).ok_or(Conflict)?;
            back(&a.l, &m, dom, changed)?;
            back(&a.r, &m, dom, changed)
        }
        Rel::Le | Rel::Lt | Rel::Ge | Rel::Gt => {
            // Normalize to small <= big (minus one when strict).
            let (small, big, strict) = match a.rel {
                Rel::Le => (&a.l, &a.r, false),
                Rel::Lt => (&a.l, &a.r, true),
                Rel::Ge => (&a.r, &a.l, false),
                _ => (&a.r, &a.l, true),
            };
            let gap = if strict { 1 } else { 0 };
            let (b, _) = fwd(big, dom).ok_or(Conflict)?;
            let s_target = Interval::new(Ext::NegInf, shift(&b.hi, -gap)).ok_or(Conflict)?;
            back(small, &s_target, dom, changed)?;
            let (s, _) = fwd(small, dom).ok_or(Conflict)?;
            let b_target = Interval::new(shift(&s.lo, gap), Ext::PosInf).ok_or(Conflict)?;
            back(big, &b_target, dom, changed)
        }
        Rel::Ne => {
            for (x, other) in [(&a.l, &r), (&a.r, &l)] {
                let Some(c) = other.singleton() else { continue };
                let (cur, _) = fwd(x, dom).ok_or(Conflict)?;
                let ce = Ext::Fin(c.clone());
                if cur.lo == ce {
                    let t = Interval::new(Ext::Fin(c + 1), Ext::PosInf).ok_or(Conflict)?;
                    back(x, &t, dom, changed)?;
                } else if cur.hi == ce {
                    let t = Interval::new(Ext::NegInf, Ext::Fin(c - 1)).ok_or(Conflict)?;
                    back(x, &t, dom, changed)?;
                }
            }
            Ok(())
        }
    }
}

/// Polynomial with monomials as sorted variable lists.
type Poly = BTreeMap<Vec<usize>, BigInt>;

const MAX_MONOMIALS: usize = 32;

fn poly(t: &T) -> Option<Poly> {
    let mut out = Poly::new();
    match t {
        T::Var(i) => {
            out.insert(vec![*i], BigInt::one());
        }
        T::Lit(n) => {
            out.insert(vec![], n.clone());
        }
        T::Add(a, b) | T::Sub(a, b) => {
            out = poly(a)?;
            let sign = if matches!(t, T::Sub(..)) { -1 } else { 1 };
            for (m, c) in poly(b)? {
                *out.entry(m).or_default() += c * sign;
            }
        }
        T::Neg(a) => {
            out = poly(a)?.into_iter().map(|(m, c)| (m, -c)).collect();
        }
        T::Mul(a, b) | T::Sq(a @ b) => {
            let (pa, pb) = (poly(a)?, poly(b)?);
            if pa.len() * pb.len() > MAX_MONOMIALS {
                return None;
            }
            for (ma, ca) in &pa {
                for (mb, cb) in &pb {
                    let mut m: Vec<usize> = ma.iter().chain(mb).copied().collect();
                    m.sort_unstable();
                    *out.entry(m).or_default() += ca * cb;
                }
            }
        }
        T::Div(..) => return None,
    }
    out.retain(|_, c| !c.is_zero());
    (out.len() <= MAX_MONOMIALS).then_some(out)
}

fn monomial(m: &[usize]) -> T {
    let mut factors: Vec<T> = Vec::new();
    let mut k = 0;
    while k < m.len() {
        if k + 1 < m.len() && m[k] == m[k + 1] {
            factors.push(T::Sq(Box::new(T::Var(m[k]))));
            k += 2;
        } else {
            factors.push(T::Var(m[k]));
            k += 1;
        }
    }
    factors
        .into_iter()
        .reduce(|a, b| T::Mul(Box::new(a), Box::new(b)))
        .unwrap_or(T::Lit(BigInt::one()))
}

fn sum(terms: Vec<T>) -> T {
    terms
        .into_iter()
        .reduce(|a, b| T::Add(Box::new(a), Box::new(b)))
        .unwrap_or(T::Lit(BigInt::zero()))
}

/// Rewrite a division-free atom as `positive part rel negative part` of the
/// polynomial `l - r`, cancelling repeated occurrences of a variable.
fn normalize(a: A) -> A {
    let (Some(mut p), Some(q)) = (poly(&a.l), poly(&a.r)) else {
        return a;
    };
    for (m, c) in q {
        *p.entry(m).or_default() -= c;
    }
    p.retain(|_, c| !c.is_zero());
    if p.len() > MAX_MONOMIALS {
        return a;
    }
    let (mut pos, mut neg) = (Vec::new(), Vec::new());
    let mut constant = BigInt::zero();
    for (m, c) in p {
        if m.is_empty() {
            constant = c;
            continue;
        }
        let side = if c > BigInt::zero() { &mut pos } else { &mut neg };
        let mag = if c > BigInt::zero() { c } else { -c };
        let base = monomial(&m);
        side.push(if mag.is_one() {
            base
        } else {
            T::Mul(Box::new(T::Lit(mag)), Box::new(base))
        });
    }
    // The constant goes to the side that keeps it non-negative.
    if constant > BigInt::zero() {
        pos.push(T::Lit(constant));
    } else if constant < BigInt::zero() {
        neg.push(T::Lit(-constant));
    }
    A {
        rel: a.rel,
        l: sum(pos),
        r: sum(neg),
    }
}

const MAX_ROUNDS: usize = 64;

fn nearest_zero(iv: &Interval) -> BigInt {
    match (&iv.lo, &iv.hi) {
        (Ext::Fin(l), _) if l > &BigInt::zero() => l.clone(),
        (_, Ext::Fin(h)) if h < &BigInt::zero() => h.clone(),
        _ => BigInt::zero(),
    }
}

impl Problem {
    fn new(system: &ConstraintSystem) -> Problem {
        let mut vars: Vec<SymVar> = Vec::new();
        let mut index = HashMap::new();
        for a in &system.assertions {
            let mut vs = BTreeSet::new();
            a.clause.collect_vars(&mut vs);
            for v in vs {
                if !index.contains_key(&v) {
                    index.insert(v.clone(), vars.len());
                    vars.push(v);
                }
            }
        }
        let clauses: Vec<Vec<A>> = system
            .assertions
            .iter()
            .map(|a| {
                a.clause
                    .0
                    .iter()
                    .map(|at: &Atom| {
                        normalize(A {
                            rel: at.rel,
                            l: lower(&at.lhs, &index),
                            r: lower(&at.rhs, &index),
                        })
                    })
                    .collect()
            })
            .collect();

        // Candidate definitions: unit equalities with a variable side that
        // does not occur on the other side. They are read before
        // normalization, which would fold the variable into a polynomial.
        let mut cand: BTreeMap<usize, T> = BTreeMap::new();
        let mut order = Vec::new();
        for assertion in &system.assertions {
            let [at] = assertion.clause.0.as_slice() else {
                continue;
            };
            if at.rel != Rel::Eq {
                continue;
            }
            let a = &A {
                rel: at.rel,
                l: lower(&at.lhs, &index),
                r: lower(&at.rhs, &index),
            };
            for (side, other) in [(&a.l, &a.r), (&a.r, &a.l)] {
                if let T::Var(v) = side {
                    let mut vs = BTreeSet::new();
                    t_vars(other, &mut vs);
                    if !vs.contains(v) && !cand.contains_key(v) {
                        cand.insert(*v, other.clone());
                        order.push(*v);
                        break;
                    }
                }
            }
        }
        // Topological order; cyclic definitions are dropped.
        let mut state = vec![0u8; vars.len()];
        let mut defs = Vec::new();
        fn visit(
            v: usize,
            cand: &BTreeMap<usize, T>,
            state: &mut [u8],
            defs: &mut Vec<(usize, T)>,
            dropped: &mut BTreeSet<usize>,
        ) -> bool {
            match state[v] {
                2 => return !dropped.contains(&v),
                1 => return false,
                _ => {}
            }
            let Some(t) = cand.get(&v) else {
                state[v] = 2;
                return true;
            };
            state[v] = 1;
            let mut deps = BTreeSet::new();
            t_vars(t, &mut deps);
            let mut ok = true;
            for d in deps {
                if cand.contains_key(&d) && !visit(d, cand, state, defs, dropped) {
                    ok = false;
                }
            }
            state[v] = 2;
            if ok {
                defs.push((v, t.clone()));
            } else {
                dropped.insert(v);
            }
            ok
        }
        let mut dropped = BTreeSet::new();
        for v in order {
            visit(v, &cand, &mut state, &mut defs, &mut dropped);
        }
        let mut defined = vec![false; vars.len()];
        for (v, _) in &defs {
            defined[*v] = true;
        }
        let free = (0..vars.len()).filter(|i| !defined[*i]).collect();
        Problem {
            vars,
            clauses,
            defs,
            free,
            defined,
        }
    }

    fn clause_atoms<'a>(&'a self, node: &Node, c: usize) -> Vec<&'a A> {
        match node.pick[c] {
            Some(k) => vec![&self.clauses[c][k]],
            None => self.clauses[c].iter().collect(),
        }
    }

    fn propagate(&self, node: &mut Node) -> Result<(), Conflict> {
        for _ in 0..MAX_ROUNDS {
            let mut changed = false;
            for c in 0..self.clauses.len() {
                let atoms = self.clause_atoms(node, c);
                let mut open = Vec::new();
                let mut sat = false;
                for a in atoms {
                    match status(a, &node.dom) {
                        Status::True => {
                            sat = true;
                            break;
                        }
                        Status::Unknown => open.push(a),
                        Status::False => {}
                    }
                }
                if sat {
                    continue;
                }
                match open.len() {
                    0 => return Err(Conflict),
                    1 => narrow_atom(open[0], &mut node.dom, &mut changed)?,
                    _ => {}
                }
            }
            if !changed {
                break;
            }
        }
        Ok(())
    }

    fn check(&self, vals: &[Option<BigInt>]) -> bool {
        self.clauses.iter().all(|c| {
            c.iter().any(|a| match (eval(&a.l, vals), eval(&a.r, vals)) {
                (Some(x), Some(y)) => a.rel.holds(&x, &y),
                _ => false,
            })
        })
    }

    fn complete(&self, mut vals: Vec<Option<BigInt>>) -> Option<Vec<Option<BigInt>>> {
        for (v, t) in &self.defs {
            vals[*v] = Some(eval(t, &vals)?);
        }
        Some(vals)
    }

    fn try_candidates(&self, node: &Node) -> Option<Vec<Option<BigInt>>> {
        let strategies: [fn(&Interval) -> BigInt; 4] = [
            nearest_zero,
            |iv| match &iv.lo {
                Ext::Fin(l) => l.clone(),
                _ => nearest_zero(iv),
            },
            |iv| match &iv.hi {
                Ext::Fin(h) => h.clone(),
                _ => nearest_zero(iv),
            },
            |iv| match (&iv.lo, &iv.hi) {
                (Ext::Fin(l), Ext::Fin(h)) => (l + h) / 2,
                _ => nearest_zero(iv),
            },
        ];
        for pick in strategies {
            let mut vals = vec![None; self.vars.len()];
            for &i in &self.free {
                vals[i] = Some(pick(&node.dom[i]));
            }
            if let Some(vals) = self.complete(vals) {
                if self.check(&vals) {
                    return Some(vals);
                }
            }
        }
        // Every variable fixed by propagation: use the points directly.
        let points: Option<Vec<Option<BigInt>>> = node
            .dom
            .iter()
            .map(|d| d.singleton().map(|x| Some(x.clone())))
            .collect();
        if let Some(vals) = points {
            if self.check(&vals) {
                return Some(vals);
            }
        }
        None
    }

    fn branch(&self, node: &Node) -> Branch {
        let mut open_vars = BTreeSet::new();
        for c in 0..self.clauses.len() {
            let atoms = self.clause_atoms(node, c);
            let statuses: Vec<Status> = atoms.iter().map(|a| status(a, &node.dom)).collect();
            if statuses.contains(&Status::True) {
                continue;
            }
            let open: Vec<usize> = statuses
                .iter()
                .enumerate()
                .filter(|(_, s)| **s == Status::Unknown)
                .map(|(k, _)| k)
                .collect();
            if open.len() >= 2 && node.pick[c].is_none() {
                let children = open
                    .iter()
                    .map(|&k| {
                        let mut child = node.clone();
                        child.pick[c] = Some(k);
                        child
                    })
                    .collect();
                return Branch::Children(children);
            }
            for a in atoms {
                t_vars(&a.l, &mut open_vars);
                t_vars(&a.r, &mut open_vars);
            }
        }
        // Defined variables stand for their definitions: splitting the free
        // variables underneath narrows them far faster than splitting them.
        let mut pending: Vec<usize> = open_vars.iter().copied().filter(|i| self.defined[*i]).collect();
        while let Some(v) = pending.pop() {
            for (_, t) in self.defs.iter().filter(|(d, _)| *d == v) {
                let mut deps = BTreeSet::new();
                t_vars(t, &mut deps);
                for d in deps {
                    if open_vars.insert(d) && self.defined[d] {
                        pending.push(d);
                    }
                }
            }
        }
        // Bisect the widest free variable involved in an open clause, falling
        // back to defined variables.
        let widest = |only_free: bool| {
            open_vars
                .iter()
                .copied()
                .filter(|i| !only_free || !self.defined[*i])
                .filter(|i| node.dom[*i].singleton().is_none())
                .max_by(|a, b| {
                    let wa = node.dom[*a].width();
                    let wb = node.dom[*b].width();
                    match (wa, wb) {
                        (None, None) => b.cmp(a),
                        (None, Some(_)) => std::cmp::Ordering::Greater,
                        (Some(_), None) => std::cmp::Ordering::Less,
                        (Some(x), Some(y)) => x.cmp(&y).then(b.cmp(a)),
                    }
                })
        };
        let Some(var) = widest(true).or_else(|| widest(false)) else {
            return Branch::Stuck;
        };
        let (left, right) = split(&node.dom[var]);
        let mut a = node.clone();
        a.dom[var] = left;
        let mut b = node.clone();
        b.dom[var] = right;
        Branch::Children(vec![a, b])
    }

    fn full_model(&self, system: &ConstraintSystem, vals: &[Option<BigInt>]) -> Model {
        let mut m = Model::new();
        for v in &system.decls {
            m.insert(v.clone(), BigInt::zero());
        }
        for (i, v) in self.vars.iter().enumerate() {
            m.insert(v.clone(), vals[i].clone().unwrap_or_default());
        }
        m
    }
}

/// Split a non-singleton interval in two; unbounded sides grow geometrically.
fn split(iv: &Interval) -> (Interval, Interval) {
    let two = BigInt::from(2);
    let cut = match (&iv.lo, &iv.hi) {
        (Ext::Fin(l), Ext::Fin(h)) => {
            let s: BigInt = l + h;
            num_integer::Integer::div_floor(&s, &two)
        }
        (Ext::NegInf, Ext::PosInf) => -BigInt::one(),
        (Ext::NegInf, Ext::Fin(h)) => {
            if h > &BigInt::zero() {
                BigInt::zero()
            } else {
                h * 2 - 2
            }
        }
        (Ext::Fin(l), _) => {
            if l < &BigInt::zero() {
                -BigInt::one()
            } else {
                l * 2 + 1
            }
        }
        _ => unreachable!("interval with inverted infinities"),
    };
    let left = lit_interval(None, Some(cut.clone()))
        .and_then(|x| x.intersect(iv))
        .expect("left half non-empty");
    let right = lit_interval(Some(cut + 1), None)
        .and_then(|x| x.intersect(iv))
        .expect("right half non-empty");
    (left, right)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::{Clause, GroupTag};

    fn v(n: &str) -> SymVar {
        SymVar::new(n, 0)
    }

    #[test]
    fn split_covers_and_separates() {
        for iv in [
            Interval::full(),
            lit_interval(None, Some(BigInt::from(-3))).unwrap(),
            lit_interval(Some(BigInt::from(4)), None).unwrap(),
            lit_interval(Some(BigInt::from(-5)), Some(BigInt::from(6))).unwrap(),
            lit_interval(Some(BigInt::from(7)), Some(BigInt::from(8))).unwrap(),
        ] {
            let (a, b) = split(&iv);
            assert_eq!(a.lo, iv.lo);
            assert_eq!(b.hi, iv.hi);
            match (&a.hi, &b.lo) {
                (Ext::Fin(x), Ext::Fin(y)) => assert_eq!(x + 1, *y),
                _ => panic!(),
            }
        }
    }

    #[test]
    fn disjunction_with_unbounded_vars() {
        let mut s = ConstraintSystem::new();
        s.assert(
            GroupTag::Probe(0),
            Clause(vec![
                Atom::new(Term::var(&v("x")), Rel::Gt, Term::lit(10)),
                Atom::new(Term::var(&v("x")), Rel::Lt, Term::lit(-10)),
            ]),
        );
        s.assert_atom(GroupTag::PathCondition, Atom::new(Term::var(&v("x")), Rel::Ge, Term::lit(0)));
        let Verdict::Sat(m) = BuiltinSolver::default().decide(&s) else {
            panic!()
        };
        assert!(s.satisfied_by(&m));
    }
}
