//! Exhaustive enumeration over small fixed-width domains. Used as an
//! independent reference for the other decision procedures.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_traits::ToPrimitive;

use super::{ConstraintSystem, Model, Rel, SolverError, SymVar, Term, Verdict};

/// Every variable ranges over `width`-bit two's complement values, or
/// `[0, 2^width - 1]` if listed in `unsigned`.
#[derive(Debug, Clone, Default)]
pub struct BruteDomain {
    pub width: u32,
    pub unsigned: BTreeSet<SymVar>,
}

impl BruteDomain {
    pub fn signed(width: u32) -> Self {
        BruteDomain {
            width,
            unsigned: BTreeSet::new(),
        }
    }

    pub fn range(&self, v: &SymVar) -> (i64, i64) {
        if self.unsigned.contains(v) {
            (0, (1i64 << self.width) - 1)
        } else {
            (-(1i64 << (self.width - 1)), (1i64 << (self.width - 1)) - 1)
        }
    }
}

enum C {
    Var(usize),
    Lit(i128),
    Big,
    Add(Box<C>, Box<C>),
    Sub(Box<C>, Box<C>),
    Mul(Box<C>, Box<C>),
    Div(Box<C>, Box<C>),
    Neg(Box<C>),
}

enum Val {
    Small(i128),
    /// Left the i128 range; evaluation falls back to big integers.
    Overflow,
    Undefined,
}

fn compile(t: &Term, order: &[SymVar]) -> C {
    match t {
        Term::Var(v) => C::Var(order.iter().position(|o| o == v).expect("declared variable")),
        Term::Lit(n) => n.to_i128().map(C::Lit).unwrap_or(C::Big),
        Term::Add(a, b) => C::Add(Box::new(compile(a, order)), Box::new(compile(b, order))),
        Term::Sub(a, b) => C::Sub(Box::new(compile(a, order)), Box::new(compile(b, order))),
        Term::Mul(a, b) => C::Mul(Box::new(compile(a, order)), Box::new(compile(b, order))),
        Term::Div(a, b) => C::Div(Box::new(compile(a, order)), Box::new(compile(b, order))),
        Term::Neg(a) => C::Neg(Box::new(compile(a, order))),
    }
}

fn run(c: &C, vals: &[i64]) -> Val {
    use Val::*;
    let bin = |a: &C, b: &C, f: &dyn Fn(i128, i128) -> Option<i128>| match (run(a, vals), run(b, vals)) {
        (Undefined, _) | (_, Undefined) => Undefined,
        (Small(x), Small(y)) => f(x, y).map(Small).unwrap_or(Overflow),
        _ => Overflow,
    };
    match c {
        C::Var(i) => Small(vals[*i] as i128),
        C::Lit(n) => Small(*n),
        C::Big => Overflow,
        C::Add(a, b) => bin(a, b, &|x, y| x.checked_add(y)),
        C::Sub(a, b) => bin(a, b, &|x, y| x.checked_sub(y)),
        C::Mul(a, b) => bin(a, b, &|x, y| x.checked_mul(y)),
        C::Div(a, b) => match run(b, vals) {
            Small(0) => Undefined,
            Undefined => Undefined,
            Overflow => Overflow,
            Small(d) => match run(a, vals) {
                Small(x) => x.checked_div(d).map(Small).unwrap_or(Overflow),
                other => other,
            },
        },
        C::Neg(a) => match run(a, vals) {
            Small(x) => x.checked_neg().map(Small).unwrap_or(Overflow),
            other => other,
        },
    }
}

fn holds_small(rel: Rel, x: i128, y: i128) -> bool {
    match rel {
        Rel::Eq => x == y,
        Rel::Ne => x != y,
        Rel::Lt => x < y,
        Rel::Le => x <= y,
        Rel::Gt => x > y,
        Rel::Ge => x >= y,
    }
}

/// Exhaustively search all assignments in lexicographic order (variables in
/// declaration order, values ascending). A satisfying assignment found this
/// way is the lexicographically smallest model.
pub fn brute_force_check(system: &ConstraintSystem, domain: &BruteDomain) -> Result<Verdict, SolverError> {
    assert!(domain.width >= 1 && domain.width <= 16, "width must be in 1..=16");
    let mut order: Vec<SymVar> = system.decls.clone();
    for v in system.vars() {
        if !order.contains(&v) {
            order.push(v);
        }
    }
    let bits = domain.width * order.len() as u32;
    if bits > 24 {
        return Err(SolverError::SpaceTooLarge { bits });
    }
    let compiled: Vec<Vec<(Rel, C, C, &Term, &Term)>> = system
        .assertions
        .iter()
        .map(|a| {
            a.clause
                .0
                .iter()
                .map(|at| (at.rel, compile(&at.lhs, &order), compile(&at.rhs, &order), &at.lhs, &at.rhs))
                .collect()
        })
        .collect();
    let ranges: Vec<(i64, i64)> = order.iter().map(|v| domain.range(v)).collect();
    let mut vals: Vec<i64> = ranges.iter().map(|r| r.0).collect();
    loop {
        let holds = compiled.iter().all(|clause| {
            clause.iter().any(|(rel, l, r, tl, tr)| match (run(l, &vals), run(r, &vals)) {
                (Val::Small(x), Val::Small(y)) => holds_small(*rel, x, y),
                (Val::Undefined, _) | (_, Val::Undefined) => false,
                _ => {
                    let lookup = |v: &SymVar| {
                        order.iter().position(|o| o == v).map(|i| BigInt::from(vals[i]))
                    };
                    match (tl.eval(&lookup), tr.eval(&lookup)) {
                        (Some(x), Some(y)) => rel.holds(&x, &y),
                        _ => false,
                    }
                }
            })
        });
        if holds {
            let model: Model = order
                .iter()
                .zip(&vals)
                .map(|(v, x)| (v.clone(), BigInt::from(*x)))
                .collect();
            return Ok(Verdict::Sat(model));
        }
        // Odometer increment, last variable fastest.
        let mut i = order.len();
        loop {
            if i == 0 {
                return Ok(Verdict::Unsat);
            }
            i -= 1;
            if vals[i] < ranges[i].1 {
                vals[i] += 1;
                break;
            }
            vals[i] = ranges[i].0;
        }
    }
}
