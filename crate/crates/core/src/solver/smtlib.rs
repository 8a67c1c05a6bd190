//! SMT-LIB v2 rendering and reading of constraint systems.
//!
//! Scripts are emitted one command per line with a `; <group>` comment in
//! front of every assertion, which lets [`parse_smtlib`] restore group tags.

use std::fmt::Write;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};

use super::sexpr::{parse_all, Sexp};
use super::{Atom, Clause, ConstraintSystem, GroupTag, Model, Rel, SolverError, SymVar, Term};

const TDIV: &str = "(define-fun tdiv ((a Int) (b Int)) Int (ite (>= a 0) (ite (> b 0) (div a b) (- (div a (- b)))) (ite (> b 0) (- (div (- a) b)) (div (- a) (- b)))))";

/// SMT symbol for a variable: base name followed by the SSA index, with a
/// `.` separator when the base itself ends in a digit or `_`.
pub fn symbol_name(v: &SymVar) -> String {
    let sep = match v.base.chars().last() {
        Some(c) if c.is_ascii_digit() || c == '_' => ".",
        _ => "",
    };
    let raw = format!("{}{sep}{}", v.base, v.idx);
    if is_simple_symbol(&raw) {
        raw
    } else {
        format!("|{raw}|")
    }
}

fn is_simple_symbol(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if !c.is_ascii_digit() => {}
        _ => return false,
    }
    s.chars()
        .all(|c| c.is_ascii_alphanumeric() || "~!@$%^&*_-+=<>.?/".contains(c))
}

pub fn parse_symbol(sym: &str) -> Option<SymVar> {
    let raw = sym
        .strip_prefix('|')
        .and_then(|s| s.strip_suffix('|'))
        .unwrap_or(sym);
    let digits = raw.len() - raw.trim_end_matches(|c: char| c.is_ascii_digit()).len();
    if digits == 0 || digits == raw.len() {
        return None;
    }
    let (prefix, idx) = raw.split_at(raw.len() - digits);
    let idx: u32 = idx.parse().ok()?;
    let base = match prefix.strip_suffix('.') {
        Some(b) if b.ends_with(|c: char| c.is_ascii_digit() || c == '_') => b,
        _ => prefix,
    };
    Some(SymVar::new(base, idx))
}

fn group_comment(g: GroupTag) -> String {
    match g {
        GroupTag::Definition => "definition".into(),
        GroupTag::Domain => "domain".into(),
        GroupTag::PathCondition => "path".into(),
        GroupTag::Probe(n) => format!("probe {n}"),
        GroupTag::Guard(n) => format!("guard {n}"),
    }
}

fn parse_group_comment(text: &str) -> Option<GroupTag> {
    let mut parts = text.split_whitespace();
    let kind = parts.next()?;
    let num = parts.next().and_then(|n| n.parse().ok());
    Some(match (kind, num) {
        ("definition", None) => GroupTag::Definition,
        ("domain", None) => GroupTag::Domain,
        ("path", None) => GroupTag::PathCondition,
        ("probe", Some(n)) => GroupTag::Probe(n),
        ("guard", Some(n)) => GroupTag::Guard(n),
        _ => return None,
    })
}

fn write_lit(out: &mut String, n: &BigInt) {
    if n.is_negative() {
        let _ = write!(out, "(- {})", -n);
    } else {
        let _ = write!(out, "{n}");
    }
}

pub fn write_term(out: &mut String, t: &Term) {
    let bin = |op: &str, a: &Term, b: &Term, out: &mut String| {
        let _ = write!(out, "({op} ");
        write_term(out, a);
        out.push(' ');
        write_term(out, b);
        out.push(')');
    };
    match t {
        Term::Var(v) => out.push_str(&symbol_name(v)),
        Term::Lit(n) => write_lit(out, n),
        Term::Add(a, b) => bin("+", a, b, out),
        Term::Sub(a, b) => bin("-", a, b, out),
        Term::Mul(a, b) => bin("*", a, b, out),
        Term::Div(a, b) => bin("tdiv", a, b, out),
        Term::Neg(a) => {
            out.push_str("(- ");
            write_term(out, a);
            out.push(')');
        }
    }
}

fn divisors<'a>(t: &'a Term, out: &mut Vec<&'a Term>) {
    match t {
        Term::Var(_) | Term::Lit(_) => {}
        Term::Add(a, b) | Term::Sub(a, b) | Term::Mul(a, b) => {
            divisors(a, out);
            divisors(b, out);
        }
        Term::Div(a, b) => {
            divisors(a, out);
            divisors(b, out);
            let nonzero_lit = matches!(&**b, Term::Lit(n) if !n.is_zero());
            if !nonzero_lit && !out.contains(&&**b) {
                out.push(b);
            }
        }
        Term::Neg(a) => divisors(a, out),
    }
}

/// Atoms are false wherever a divisor is zero, while `tdiv` is total in
/// SMT-LIB, so atoms with divisions carry explicit nonzero conditions.
fn write_atom(out: &mut String, a: &Atom) {
    let mut divs = Vec::new();
    divisors(&a.lhs, &mut divs);
    divisors(&a.rhs, &mut divs);
    if divs.is_empty() {
        write_core_atom(out, a);
        return;
    }
    out.push_str("(and");
    for d in divs {
        out.push_str(" (not (= ");
        write_term(out, d);
        out.push_str(" 0))");
    }
    out.push(' ');
    write_core_atom(out, a);
    out.push(')');
}

fn write_core_atom(out: &mut String, a: &Atom) {
    let op = match a.rel {
        Rel::Eq | Rel::Ne => "=",
        Rel::Lt => "<",
        Rel::Le => "<=",
        Rel::Gt => ">",
        Rel::Ge => ">=",
    };
    if a.rel == Rel::Ne {
        out.push_str("(not ");
    }
    let _ = write!(out, "({op} ");
    write_term(out, &a.lhs);
    out.push(' ');
    write_term(out, &a.rhs);
    out.push(')');
    if a.rel == Rel::Ne {
        out.push(')');
    }
}

pub fn clause_to_string(c: &Clause) -> String {
    let mut out = String::new();
    match c.0.len() {
        0 => out.push_str("false"),
        1 => write_atom(&mut out, &c.0[0]),
        _ => {
            out.push_str("(or");
            for a in &c.0 {
                out.push(' ');
                write_atom(&mut out, a);
            }
            out.push(')');
        }
    }
    out
}

/// Render a system as an SMT-LIB v2 script. Byte-stable for equal systems.
pub fn emit_smtlib(system: &ConstraintSystem) -> String {
    let mut out = String::from("(set-logic QF_NIA)\n");
    if system.has_div() {
        out.push_str(TDIV);
        out.push('\n');
    }
    for v in &system.decls {
        let _ = writeln!(out, "(declare-fun {} () Int)", symbol_name(v));
    }
    for a in &system.assertions {
        let _ = writeln!(out, "; {}", group_comment(a.group));
        let _ = writeln!(out, "(assert {})", clause_to_string(&a.clause));
    }
    out.push_str("(check-sat)\n");
    if !system.decls.is_empty() {
        out.push_str("(get-model)\n");
    }
    out
}

fn perr(msg: impl Into<String>) -> SolverError {
    SolverError::Parse(msg.into())
}

fn parse_int(s: &str) -> Option<BigInt> {
    if s.chars().all(|c| c.is_ascii_digit()) && !s.is_empty() {
        s.parse().ok()
    } else {
        None
    }
}

fn parse_term(e: &Sexp) -> Result<Term, SolverError> {
    match e {
        Sexp::Atom(a) => {
            if let Some(n) = parse_int(a) {
                return Ok(Term::Lit(n));
            }
            parse_symbol(a)
                .map(Term::Var)
                .ok_or_else(|| perr(format!("unknown symbol `{a}`")))
        }
        Sexp::List(items) => {
            let op = items
                .first()
                .and_then(Sexp::as_atom)
                .ok_or_else(|| perr("term without operator"))?;
            let args = items[1..]
                .iter()
                .map(parse_term)
                .collect::<Result<Vec<_>, _>>()?;
            if op == "-" && args.len() == 1 {
                return Ok(Term::neg(args.into_iter().next().unwrap()));
            }
            let mk: fn(Term, Term) -> Term = match op {
                "+" => Term::add,
                "-" => Term::sub,
                "*" => Term::mul,
                "tdiv" => Term::div,
                _ => return Err(perr(format!("unsupported operator `{op}`"))),
            };
            let mut it = args.into_iter();
            let first = it.next().ok_or_else(|| perr("operator without operands"))?;
            let mut acc = first;
            let mut n = 1;
            for t in it {
                acc = mk(acc, t);
                n += 1;
            }
            if n < 2 {
                return Err(perr(format!("`{op}` needs two operands")));
            }
            Ok(acc)
        }
        Sexp::Comment(_) => Err(perr("comment in term")),
    }
}

fn parse_atom(e: &Sexp) -> Result<Atom, SolverError> {
    let items = e.as_list().ok_or_else(|| perr("atom must be a list"))?;
    let op = items
        .first()
        .and_then(Sexp::as_atom)
        .ok_or_else(|| perr("atom without relation"))?;
    if op == "and" {
        // Nonzero-divisor conditions are implied by the atom's semantics.
        let core = items.last().filter(|_| items.len() > 1).ok_or_else(|| perr("empty `and`"))?;
        return parse_atom(core);
    }
    if op == "not" {
        if items.len() != 2 {
            return Err(perr("`not` takes one argument"));
        }
        return Ok(parse_atom(&items[1])?.negate());
    }
    let rel = match op {
        "=" => Rel::Eq,
        "distinct" => Rel::Ne,
        "<" => Rel::Lt,
        "<=" => Rel::Le,
        ">" => Rel::Gt,
        ">=" => Rel::Ge,
        _ => return Err(perr(format!("unsupported relation `{op}`"))),
    };
    if items.len() != 3 {
        return Err(perr(format!("`{op}` takes two arguments")));
    }
    Ok(Atom::new(parse_term(&items[1])?, rel, parse_term(&items[2])?))
}

fn parse_clause(e: &Sexp) -> Result<Clause, SolverError> {
    if e.as_atom() == Some("false") {
        return Ok(Clause(vec![]));
    }
    if e.head() == Some("or") {
        let items = e.as_list().unwrap();
        return Ok(Clause(
            items[1..].iter().map(parse_atom).collect::<Result<_, _>>()?,
        ));
    }
    Ok(Clause::unit(parse_atom(e)?))
}

/// Read back a script produced by [`emit_smtlib`].
pub fn parse_smtlib(text: &str) -> Result<ConstraintSystem, SolverError> {
    let items = parse_all(text).map_err(perr)?;
    let mut sys = ConstraintSystem::new();
    let mut pending = None;
    for item in &items {
        match item {
            Sexp::Comment(c) => pending = parse_group_comment(c),
            Sexp::List(parts) => match item.head() {
                Some("set-logic" | "set-option" | "check-sat" | "get-model" | "exit") => {}
                Some("define-fun") if parts.get(1).and_then(Sexp::as_atom) == Some("tdiv") => {}
                Some("declare-fun" | "declare-const") => {
                    let name = parts
                        .get(1)
                        .and_then(Sexp::as_atom)
                        .ok_or_else(|| perr("declaration without name"))?;
                    let v = parse_symbol(name)
                        .ok_or_else(|| perr(format!("unparseable symbol `{name}`")))?;
                    sys.declare(&v);
                }
                Some("assert") => {
                    let body = parts.get(1).ok_or_else(|| perr("empty assert"))?;
                    let clause = parse_clause(body)?;
                    let group = pending.take().unwrap_or(GroupTag::Definition);
                    sys.assert(group, clause);
                }
                other => return Err(perr(format!("unsupported command {other:?}"))),
            },
            Sexp::Atom(a) => return Err(perr(format!("stray atom `{a}`"))),
        }
    }
    Ok(sys)
}

fn model_value(e: &Sexp) -> Option<BigInt> {
    match e {
        Sexp::Atom(a) => parse_int(a),
        Sexp::List(items) if items.len() == 2 && items[0].as_atom() == Some("-") => {
            model_value(&items[1]).map(|n| -n)
        }
        _ => None,
    }
}

fn collect_defs(e: &Sexp, model: &mut Model) {
    if let Sexp::List(items) = e {
        if e.head() == Some("define-fun") && items.len() == 5 {
            if let (Some(name), Some(val)) = (items[1].as_atom(), model_value(&items[4])) {
                if let Some(v) = parse_symbol(name) {
                    model.insert(v, val);
                }
            }
            return;
        }
        for it in items {
            collect_defs(it, model);
        }
    }
}

/// Extract `(define-fun x () Int v)` entries from a `get-model` response.
pub fn parse_model(text: &str) -> Result<Model, SolverError> {
    let items = parse_all(text).map_err(perr)?;
    let mut model = Model::new();
    for it in &items {
        collect_defs(it, &mut model);
    }
    Ok(model)
}
