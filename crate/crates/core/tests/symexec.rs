mod support;

use std::collections::{BTreeMap, HashMap};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Duration;

use num_bigint::BigInt;
use ovguard::cfg::LoopExhaustion;
use ovguard::checker::{
    BoundInfo, Checker, LimitTable, OverflowChecker, SiteContext, SiteOutcome,
};
use ovguard::frontend::{parse_translation_unit, Expr, IntKind, LimitMacro, StmtKind, TypedAst};
use ovguard::solver::{
    emit_smtlib, Atom, BuiltinSolver, GroupTag, Rel, Solver, SymVar, Term, Verdict,
};
use ovguard::symexec::{
    Engine, ExecConfig, ExecError, Feasibility, FunctionSummary, PathState, SummaryRegistry,
    SymExec,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use support::{all_char_pairs, function_source, Interp, ProgGen};

fn parse(src: &str) -> TypedAst {
    parse_translation_unit(src, "t.c").unwrap_or_else(|e| panic!("{}\n{src}", e.render("t.c")))
}

fn solver() -> BuiltinSolver {
    BuiltinSolver::default()
}

/// Encode the leading simple statements of the first function.
fn encode_all(ast: &TypedAst, reg: &SummaryRegistry, n: usize) -> PathState {
    let limits = LimitTable::default();
    let exec = SymExec::new(ast, reg, &limits);
    let f = ast.functions().next().unwrap();
    let mut state = PathState::new(&f.sig.name);
    for s in f.body.stmts.iter().take(n) {
        exec.encode_statement(&mut state, s).unwrap();
    }
    state
}

fn v(name: &str, idx: u32) -> SymVar {
    SymVar::new(name, idx)
}

fn definitions(state: &PathState) -> Vec<Atom> {
    state
        .assertions()
        .iter()
        .filter(|a| a.group == GroupTag::Definition)
        .map(|a| a.clause.0[0].clone())
        .collect()
}

/// Evaluate definition constraints in order from the given input values.
fn evaluate(state: &PathState, inputs: &[(SymVar, i64)]) -> BTreeMap<SymVar, BigInt> {
    let mut env: BTreeMap<SymVar, BigInt> =
        inputs.iter().map(|(k, x)| (k.clone(), BigInt::from(*x))).collect();
    for atom in definitions(state) {
        let Term::Var(target) = &atom.lhs else { panic!("definition shape") };
        let value = atom.rhs.eval(&|s| env.get(s).cloned()).expect("evaluable");
        env.insert(target.clone(), value);
    }
    env
}

#[test]
fn declaration_encodes_sum_definition() {
    let ast = parse("void f(int varA, int varB) { int result = varA + varB; }");
    let state = encode_all(&ast, &SummaryRegistry::standard(), 1);
    let expected = Atom::new(
        Term::var(&v("result", 0)),
        Rel::Eq,
        Term::add(Term::var(&v("varA", 0)), Term::var(&v("varB", 0))),
    );
    assert_eq!(definitions(&state), vec![expected]);
    assert!(emit_smtlib(&state.system()).contains("(assert (= result0 (+ varA0 varB0)))"));
    assert_eq!(state.kind_of(&v("result", 0)), Some(IntKind::Int));
}

#[test]
fn self_assignment_is_pure_copy() {
    let ast = parse("void f(int x) { x = x; }");
    let state = encode_all(&ast, &SummaryRegistry::standard(), 1);
    assert_eq!(
        definitions(&state),
        vec![Atom::new(Term::var(&v("x", 1)), Rel::Eq, Term::var(&v("x", 0)))]
    );
}

#[test]
fn redefinition_chain_matches_concrete_run() {
    let src = "void f(int a) { int r = a * a; r = r + 1; }";
    let ast = parse(src);
    let state = encode_all(&ast, &SummaryRegistry::standard(), 2);
    assert_eq!(state.latest("r"), Some(v("r", 1)));
    let env = evaluate(&state, &[(v("a", 0), 3)]);
    let inputs = HashMap::from([("a".to_string(), BigInt::from(3))]);
    let trace = Interp::run(&ast, "f", &inputs).unwrap();
    let concrete = trace.writes.last().unwrap().1.clone();
    assert_eq!(concrete, BigInt::from(10));
    assert_eq!(env[&v("r", 1)], concrete);
}

#[test]
fn ssa_indices_increase_by_one() {
    let ast = parse("void f(int a) { int x = a + 1; x = x * 2; x = x - a; x = x / 3; }");
    let state = encode_all(&ast, &SummaryRegistry::standard(), 4);
    let xs: Vec<u32> = state
        .history()
        .iter()
        .filter(|s| s.base == "x")
        .map(|s| s.idx)
        .collect();
    assert_eq!(xs, vec![0, 1, 2, 3]);
    let unique: std::collections::BTreeSet<_> = state.history().iter().collect();
    assert_eq!(unique.len(), state.history().len());
}

fn if_conds(ast: &TypedAst) -> Vec<Expr> {
    ast.functions()
        .next()
        .unwrap()
        .body
        .stmts
        .iter()
        .filter_map(|s| match &s.kind {
            StmtKind::If { cond, .. } => Some(cond.clone()),
            _ => None,
        })
        .collect()
}

#[test]
fn branch_on_constant_negative_is_infeasible() {
    let ast = parse("void f(int x, int y) { x = -1; if (x > 0) { } if (y > 0) { } }");
    let reg = SummaryRegistry::standard();
    let limits = LimitTable::default();
    let exec = SymExec::new(&ast, &reg, &limits);
    let base = encode_all(&ast, &reg, 1);
    let conds = if_conds(&ast);
    let check = |cond: &Expr, taken: bool| {
        let mut s = base.clone();
        exec.validate_branch(&mut s, cond, taken, &solver()).unwrap()
    };
    assert_eq!(check(&conds[0], true), Feasibility::Infeasible);
    assert_eq!(check(&conds[0], false), Feasibility::Feasible);
    assert_eq!(check(&conds[1], true), Feasibility::Feasible);
    assert_eq!(check(&conds[1], false), Feasibility::Feasible);
}

#[test]
fn branch_adds_path_condition() {
    let ast = parse("void f(int y) { if (y > 0 && y < 10) { } }");
    let reg = SummaryRegistry::standard();
    let limits = LimitTable::default();
    let exec = SymExec::new(&ast, &reg, &limits);
    let mut s = PathState::new("f");
    let before = s.assertions().len();
    exec.validate_branch(&mut s, &if_conds(&ast)[0], false, &solver()).unwrap();
    let added: Vec<_> = s.assertions()[before..]
        .iter()
        .filter(|a| a.group == GroupTag::PathCondition)
        .collect();
    // not (y > 0 && y < 10) is a single two-literal clause
    assert_eq!(added.len(), 1);
    assert_eq!(added[0].clause.0.len(), 2);
}

#[test]
fn random_branch_feasibility_matches_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xfea5);
    let reg = SummaryRegistry::standard();
    let limits = LimitTable::default();
    let mut checked = 0;
    for _ in 0..100 {
        let mut g = ProgGen::new(&mut rng);
        let n = g.rng.gen_range(1..=3);
        let mut body = g.body(n, false);
        let cond = g.cond(1);
        body.push(format!("if ({cond}) {{ }}"));
        let src = function_source(&body);
        let ast = parse(&src);
        let exec = SymExec::new(&ast, &reg, &limits);
        let mut base = PathState::new("f");
        let f = ast.function("f").unwrap();
        for s in &f.body.stmts[..f.body.stmts.len() - 1] {
            exec.encode_statement(&mut base, s).unwrap();
        }
        let c = &if_conds(&ast)[0];
        let (mut t_ok, mut f_ok) = (false, false);
        for inputs in all_char_pairs() {
            if let Ok(trace) = Interp::run(&ast, "f", &inputs) {
                if trace.decisions[0] {
                    t_ok = true;
                } else {
                    f_ok = true;
                }
            }
            if t_ok && f_ok {
                break;
            }
        }
        for (taken, expect) in [(true, t_ok), (false, f_ok)] {
            let mut s = base.clone();
            let got = exec.validate_branch(&mut s, c, taken, &solver()).unwrap();
            let want = if expect {
                Feasibility::Feasible
            } else {
                Feasibility::Infeasible
            };
            assert_eq!(got, want, "taken={taken}\n{src}");
        }
        checked += 1;
    }
    assert_eq!(checked, 100);
}

#[test]
fn slice_excludes_unrelated_definitions() {
    let ast = parse("void f(int a, int b, int d) { int r = a + b; int c = d * d; }");
    let state = encode_all(&ast, &SummaryRegistry::standard(), 2);
    let slice = state.slice_for(&v("r", 0)).unwrap();
    let defs: Vec<_> = slice.group(GroupTag::Definition).collect();
    assert_eq!(defs.len(), 1);
    assert_eq!(
        defs[0].clause.0[0],
        Atom::new(
            Term::var(&v("r", 0)),
            Rel::Eq,
            Term::add(Term::var(&v("a", 0)), Term::var(&v("b", 0)))
        )
    );
    let vars = slice.vars();
    assert!(!vars.contains(&v("c", 0)) && !vars.contains(&v("d", 0)));
}

#[test]
fn slice_follows_chained_dependencies() {
    let ast = parse("void f(int b, int e) { int a = e * 2; int r = a + b; }");
    let state = encode_all(&ast, &SummaryRegistry::standard(), 2);
    let slice = state.slice_for(&v("r", 0)).unwrap();
    assert_eq!(slice.group(GroupTag::Definition).count(), 2);
    assert!(slice.vars().contains(&v("e", 0)));
}

#[test]
fn slice_of_unknown_variable_fails() {
    let state = PathState::new("f");
    assert!(matches!(
        state.slice_for(&v("ghost", 0)),
        Err(ExecError::UnknownSymVar(_))
    ));
}

#[test]
fn random_dags_slice_agrees_with_full_system() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xd4c);
    let reg = SummaryRegistry::standard();
    let s = BuiltinSolver {
        node_budget: 50_000,
        timeout: Duration::from_secs(2),
    };
    let (mut decided, mut sat) = (0, 0);
    for trial in 0..200 {
        let mut g = ProgGen::new(&mut rng);
        g.var_divisors = false;
        let n = g.rng.gen_range(2..=6);
        let body: Vec<String> = (0..n).map(|_| g.decl()).collect();
        let pick = format!("v{}", g.rng.gen_range(0..n));
        let k: i64 = g.rng.gen_range(-300..=300);
        let src = function_source(&body);
        let ast = parse(&src);
        let state = encode_all(&ast, &reg, n);
        let var = state.latest(&pick).unwrap();
        let probe = Atom::new(Term::var(&var), Rel::Gt, Term::lit(k));
        let mut slice = state.slice_for(&var).unwrap();
        slice.assert_atom(GroupTag::Probe(1), probe.clone());
        let mut full = state.system();
        full.assert_atom(GroupTag::Probe(1), probe);
        let (a, b) = (s.decide(&slice), s.decide(&full));
        if matches!(a, Verdict::Unknown(_)) || matches!(b, Verdict::Unknown(_)) {
            continue;
        }
        assert_eq!(a.label(), b.label(), "trial {trial}\n{src}");
        decided += 1;
        sat += a.is_sat() as usize;
    }
    assert!(decided >= 190, "only {decided} decided");
    assert!(sat > 20 && sat < decided - 20, "sat {sat} of {decided}");
}

#[test]
fn rand32_returns_fresh_int() {
    let ast = parse("void f(void) { int r = RAND32(); }");
    let state = encode_all(&ast, &SummaryRegistry::standard(), 1);
    let fresh = v("RAND32", 0);
    assert_eq!(state.kind_of(&fresh), Some(IntKind::Int));
    assert_eq!(state.info(&fresh).unwrap().def, None);
    let on_fresh: Vec<_> = state
        .assertions()
        .iter()
        .filter(|a| {
            let mut vs = Default::default();
            a.clause.collect_vars(&mut vs);
            vs.contains(&fresh)
        })
        .map(|a| a.group)
        .collect();
    assert_eq!(
        on_fresh,
        vec![GroupTag::Domain, GroupTag::Domain, GroupTag::Definition]
    );
}

#[test]
fn constant_summary_defines_return() {
    let ast = parse("int five(void);\nvoid f(void) { int r = five(); }");
    let mut reg = SummaryRegistry::standard();
    reg.register(FunctionSummary::constant("five", IntKind::Int, 5));
    let state = encode_all(&ast, &reg, 1);
    assert!(definitions(&state).contains(&Atom::new(
        Term::var(&v("five", 0)),
        Rel::Eq,
        Term::lit(5)
    )));
    let env = evaluate(&state, &[]);
    assert_eq!(env[&v("r", 0)], BigInt::from(5));
}

#[test]
fn memcpy_leaves_integer_state_alone() {
    let ast = parse("void f(int a, int b) { int x = a; memcpy(&x, &b, 4); }");
    let reg = SummaryRegistry::standard();
    let before = encode_all(&ast, &reg, 1);
    let after = encode_all(&ast, &reg, 2);
    assert_eq!(before.assertions(), after.assertions());
    assert_eq!(before.history(), after.history());
}

#[test]
fn missing_summary_is_an_error() {
    let ast = parse("void f(void) { }");
    let reg = SummaryRegistry::empty();
    let limits = LimitTable::default();
    let exec = SymExec::new(&ast, &reg, &limits);
    let mut s = PathState::new("f");
    let err = exec
        .apply_summary(&mut s, "RAND32", &[], Default::default())
        .unwrap_err();
    assert!(matches!(err, ExecError::MissingSummary { ref name, .. } if name == "RAND32"));
    assert!(s.assertions().is_empty());
}

#[test]
fn scanf_out_argument_becomes_fresh() {
    let ast = parse("void f(void) { int n = 0; scanf(\"%d\", &n); int m = n * 2; }");
    let state = encode_all(&ast, &SummaryRegistry::standard(), 3);
    // n0 = 0, then n1 fresh from scanf, m0 = n1 * 2
    assert_eq!(state.info(&v("n", 1)).unwrap().def, None);
    assert!(definitions(&state).contains(&Atom::new(
        Term::var(&v("m", 0)),
        Rel::Eq,
        Term::mul(Term::var(&v("n", 1)), Term::lit(2))
    )));
}

#[test]
fn encoding_is_monotone() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let reg = SummaryRegistry::standard();
    let limits = LimitTable::default();
    for _ in 0..30 {
        let mut g = ProgGen::new(&mut rng);
        let body = g.body(6, false);
        let ast = parse(&function_source(&body));
        let exec = SymExec::new(&ast, &reg, &limits);
        let mut state = PathState::new("f");
        for s in &ast.function("f").unwrap().body.stmts {
            let prev = state.assertions().to_vec();
            exec.encode_statement(&mut state, s).unwrap();
            assert_eq!(&state.assertions()[..prev.len()], &prev[..]);
        }
    }
}

struct Counting {
    hits: Arc<AtomicUsize>,
}

impl Checker for Counting {
    fn id(&self) -> &str {
        "CNT"
    }

    fn on_site(&self, ctx: &SiteContext<'_>) -> Result<SiteOutcome, ExecError> {
        if ctx.site.arithmetic {
            self.hits.fetch_add(1, Ordering::SeqCst);
        }
        Ok(SiteOutcome::Clean)
    }
}

fn engine<'a>(ast: &'a TypedAst, src: &'a str) -> Engine<'a> {
    Engine::new(ast, src, LimitTable::default(), ExecConfig::default())
}

#[test]
fn one_notification_per_site_per_path() {
    let src = "void f(int a) { int r = a * a; }";
    let ast = parse(src);
    let hits = Arc::new(AtomicUsize::new(0));
    let mut e = engine(&ast, src);
    e.register_checker(Box::new(Counting { hits: hits.clone() }));
    let out = e.run(&solver()).unwrap();
    assert_eq!(hits.load(Ordering::SeqCst), 1);
    assert_eq!(out.stats.completed, 1);
}

#[test]
fn no_checkers_no_reports() {
    let src = "void f(int a) { int r = a * a; if (r > 5) { r = r * r; } }";
    let ast = parse(src);
    let out = engine(&ast, src).run(&solver()).unwrap();
    assert!(out.reports.is_empty());
    assert_eq!(out.stats.completed, 2);
}

#[test]
fn duplicate_checkers_give_duplicate_reports() {
    let src = "void f(int a, int b) { int r = a * b; int s = r + 1; if (a > 3) { s = s * 2; } }";
    let ast = parse(src);
    let bound = BoundInfo::custom(LimitMacro::IntMax, IntKind::Int.max_value());
    let mut e = engine(&ast, src);
    e.register_checker(Box::new(OverflowChecker::with_id("IOF", bound.clone())));
    e.register_checker(Box::new(OverflowChecker::with_id("IOF2", bound)));
    let out = e.run(&solver()).unwrap();
    let mut by: BTreeMap<String, Vec<(u32, String)>> = BTreeMap::new();
    for r in &out.reports {
        by.entry(r.checker.clone())
            .or_default()
            .push((r.line, r.statement.clone()));
    }
    assert_eq!(by.len(), 2);
    assert!(!by["IOF"].is_empty());
    let mut a = by["IOF"].clone();
    let mut b = by["IOF2"].clone();
    a.sort();
    b.sort();
    assert_eq!(a, b);
}

#[test]
fn inlined_call_feeds_caller_site() {
    let src = "int sq(int v) { return v * v; }\nvoid f(int a) { int r = sq(a) + 1; }";
    let ast = parse(src);
    let mut e = engine(&ast, src);
    e.register_checker(Box::new(OverflowChecker::new(BoundInfo::custom(
        LimitMacro::IntMax,
        IntKind::Int.max_value(),
    ))));
    let out = e.run(&solver()).unwrap();
    assert_eq!(out.reports.len(), 1);
    let r = &out.reports[0];
    assert_eq!(r.function, "f");
    assert_eq!(r.statement, "int r = sq(a) + 1;");
    let text = emit_smtlib(&r.slice);
    assert!(text.contains("sq@1.v0"), "{text}");
    assert!(text.contains("(* sq@1.v0 sq@1.v0)"), "{text}");
}

#[test]
fn loop_exhaustion_modes() {
    let src = "void f(void) { int i = 0; while (i < 100) { i = i + 1; } }";
    let ast = parse(src);
    let root = 0;
    let prune = engine(&ast, src).completed_paths(root, &solver()).unwrap();
    assert!(prune.is_empty());
    let cfg = ExecConfig {
        loop_exhaustion: LoopExhaustion::Bypass,
        ..ExecConfig::default()
    };
    let bypass = Engine::new(&ast, src, LimitTable::default(), cfg)
        .completed_paths(root, &solver())
        .unwrap();
    assert_eq!(bypass.len(), 1);
    assert_eq!(bypass[0].0.len(), 11);

    let src2 = "void f(int n) { int i = 0; while (i < n) { i = i + 1; } }";
    let ast2 = parse(src2);
    let paths = engine(&ast2, src2).completed_paths(0, &solver()).unwrap();
    assert_eq!(paths.len(), 11);
}

#[test]
fn ssa_soundness_on_random_paths() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x55a);
    let s = solver();
    let mut checked_paths = 0;
    for _ in 0..40 {
        let mut g = ProgGen::new(&mut rng);
        let body = g.body(5, true);
        let src = function_source(&body);
        let ast = parse(&src);
        let e = engine(&ast, &src);
        for (decisions, state) in e.completed_paths(0, &s).unwrap() {
            let Verdict::Sat(model) = s.decide(&state.system()) else {
                continue;
            };
            let mut inputs = HashMap::new();
            for p in ["a", "b"] {
                let x = v(p, 0);
                if state.info(&x).is_some_and(|i| i.def.is_none()) {
                    inputs.insert(p.to_string(), model[&x].clone());
                }
            }
            let trace = Interp::run(&ast, "f", &inputs).expect("model avoids halting");
            assert_eq!(trace.decisions, decisions, "{src}");
            let mut defined: BTreeMap<String, Vec<BigInt>> = BTreeMap::new();
            for sv in state.history() {
                if state.info(sv).unwrap().def.is_some() {
                    defined.entry(sv.base.clone()).or_default().push(model[sv].clone());
                }
            }
            let mut written: BTreeMap<String, Vec<BigInt>> = BTreeMap::new();
            for (name, value) in &trace.writes {
                written.entry(name.clone()).or_default().push(value.clone());
            }
            assert_eq!(defined, written, "{src}");
            checked_paths += 1;
        }
    }
    assert!(checked_paths > 40, "{checked_paths}");
}

#[test]
fn constraint_lists_are_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..10 {
        let mut g = ProgGen::new(&mut rng);
        let body = g.body(5, true);
        let src = function_source(&body);
        let ast = parse(&src);
        let dump = |ast: &TypedAst| -> Vec<String> {
            engine(ast, &src)
                .completed_paths(0, &solver())
                .unwrap()
                .iter()
                .map(|(_, s)| emit_smtlib(&s.system()))
                .collect()
        };
        assert_eq!(dump(&ast), dump(&parse(&src)));
    }
}

#[test]
fn division_by_symbolic_divisor_guards_path() {
    let ast = parse("void f(int a, int b) { int q = a / b; }");
    let state = encode_all(&ast, &SummaryRegistry::standard(), 1);
    let pcs: Vec<_> = state
        .assertions()
        .iter()
        .filter(|a| a.group == GroupTag::PathCondition)
        .collect();
    assert_eq!(pcs.len(), 1);
    assert_eq!(
        pcs[0].clause.0[0],
        Atom::new(Term::var(&v("b", 0)), Rel::Ne, Term::lit(0))
    );
    let _ = solver().check_sat(&state.system()).unwrap();
}
