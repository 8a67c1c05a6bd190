mod support;

use std::collections::{BTreeSet, HashMap};
use std::io::Write;

use num_bigint::BigInt;
use ovguard::analysis::{analyze_source, AnalysisConfig};
use ovguard::checker::{
    assign_problem_ids, discover_upper_bound, eval_precondition_add_const,
    eval_precondition_mul_const, eval_precondition_square, isqrt, parse_problem_id, BoundInfo,
    BoundOrigin, BugReport, Direction, LimitTable, LimitsError, OverflowChecker,
    PreconditionError, Safety,
};
use ovguard::frontend::{parse_translation_unit, IntKind, LimitMacro, Span};
use ovguard::solver::{
    BuiltinSolver, ConstraintSystem, GroupTag, Solver, SolverError, Verdict,
};
use ovguard::symexec::{DiagnosticKind, Engine, ExecConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use support::{all_char_pairs, function_source, Interp, ProgGen};

const MOTIVATING: &str = r#"#include <stdio.h>
#include <limits.h>
unsigned int deepNestedStructVar(void);

void bad(void)
{
    unsigned int data = deepNestedStructVar();
    unsigned int result = data * data;
    printUnsignedLine(result);
}
"#;

fn solver() -> BuiltinSolver {
    BuiltinSolver::default()
}

fn analyze(src: &str, bound: Option<BoundInfo>) -> ovguard::analysis::FileAnalysis {
    let config = AnalysisConfig {
        bound,
        ..AnalysisConfig::default()
    };
    analyze_source(src, "t.c", &config, &solver()).unwrap()
}

fn bound_of(src: &str) -> BoundInfo {
    let ast = parse_translation_unit(src, "t.c").unwrap();
    discover_upper_bound(&ast, None).unwrap()
}

#[test]
fn char_max_usage_selects_127() {
    let b = bound_of("void f(int a) { if (a < CHAR_MAX) { a = a + 1; } }");
    assert_eq!(b.macro_name, LimitMacro::CharMax);
    assert_eq!(b.upper, BigInt::from(127));
    assert_eq!(b.lower, BigInt::from(-127));
    assert_eq!(b.origin, BoundOrigin::ProgramUsage);
}

#[test]
fn no_macro_defaults_to_int_max() {
    let b = bound_of("void f(int a) { int r = a + 1; }");
    assert_eq!(b.macro_name, LimitMacro::IntMax);
    assert_eq!(b.upper, BigInt::from(2147483647));
    assert_eq!(b.lower, BigInt::from(-2147483647));
    assert_eq!(b.origin, BoundOrigin::Default);
}

#[test]
fn uint_max_usage_selects_unsigned_range() {
    let b = bound_of("void f(unsigned int a) { unsigned int m = UINT_MAX; a = a + 1; }");
    assert_eq!(b.upper, BigInt::from(4294967295u64));
    assert_eq!(b.lower, BigInt::from(0));
}

#[test]
fn first_macro_in_source_order_wins() {
    let b = bound_of("void f(int a) { if (a < SHRT_MAX) { a = a + 1; } if (a < CHAR_MAX) { } }");
    assert_eq!(b.macro_name, LimitMacro::ShrtMax);
    assert_eq!(b.upper, BigInt::from(32767));
}

#[test]
fn limits_file_values_are_used() {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    writeln!(f, "/* test limits */\n#define CHAR_MIN (-100)\n#define CHAR_MAX 100\n#define WEIRD_MAX foo\n# define INT_MAX 2147483647").unwrap();
    let ast = parse_translation_unit("void f(int a) { if (a < CHAR_MAX) { } }", "t.c").unwrap();
    let b = discover_upper_bound(&ast, Some(f.path())).unwrap();
    assert_eq!(b.upper, BigInt::from(100));
    assert_eq!(b.lower, BigInt::from(-100));
    assert_eq!(b.origin, BoundOrigin::LimitsFile);
    assert_eq!(b.file_min.as_deref(), Some("-100"));
}

#[test]
fn malformed_limits_file_names_line() {
    let err = LimitTable::parse("#define CHAR_MAX 127\n#define INT_MAX __INT_MAX__\n").unwrap_err();
    assert!(matches!(err, LimitsError::MalformedLimitsFile { line: 2, .. }));
}

#[test]
fn motivating_example_reports_line_8() {
    for bound in [
        Some(BoundInfo::for_macro(
            LimitMacro::UintMax,
            &LimitTable::default(),
            BoundOrigin::ProgramUsage,
        )),
        None,
    ] {
        let a = analyze(MOTIVATING, bound.clone());
        assert_eq!(a.reports.len(), 1, "{:?}", a.diagnostics);
        let r = &a.reports[0];
        assert_eq!(r.line, 8);
        assert_eq!(r.statement, "unsigned int result = data * data;");
        assert_eq!(r.variable.to_string(), "result0");
        assert_eq!(r.direction, Direction::Overflow);
        // data above 65535 (UINT_MAX bound) or 46340 (INT_MAX)
        let data: BigInt = r.witness["data0"].parse().unwrap();
        let limit = if bound.is_some() { 65535 } else { 46340 };
        assert!(data > BigInt::from(limit), "{data}");
        assert!(solver().check_sat(&r.slice).unwrap().is_sat());
        assert_eq!(r.problem_id, "T000001-IOF");
    }
}

#[test]
fn constant_sum_is_not_reported() {
    let a = analyze("void f(void) { int r = 2 + 3; }", None);
    assert!(a.reports.is_empty());
    let tiny = BoundInfo::custom(LimitMacro::CharMax, 127);
    assert!(analyze("void f(void) { int r = 2 + 3; }", Some(tiny)).reports.is_empty());
}

#[test]
fn underflow_direction_is_recorded() {
    let a = analyze("void f(int a) { if (a < 0) { int r = a - 2147483647; } }", None);
    assert_eq!(a.reports.len(), 1);
    assert_eq!(a.reports[0].direction, Direction::Underflow);
}

#[test]
fn guarded_site_is_clean() {
    let src = "void f(int a) { if (a < 1000 && a > -1000) { int r = a * a; } }";
    assert!(analyze(src, None).reports.is_empty());
}

fn key(s: Span) -> (usize, usize) {
    (s.start, s.end)
}

/// Spans of arithmetic sites some 8-bit input drives outside [-127, 127].
fn oracle_sites(ast: &ovguard::frontend::TypedAst) -> BTreeSet<(usize, usize)> {
    let mut out = BTreeSet::new();
    for inputs in all_char_pairs() {
        if let Ok(trace) = Interp::run(ast, "f", &inputs) {
            for (span, value) in trace.sites {
                if value > BigInt::from(127) || value < BigInt::from(-127) {
                    out.insert(key(span));
                }
            }
        }
    }
    out
}

fn reports_8bit(src: &str, upper: i64) -> Vec<BugReport> {
    let a = analyze(src, Some(BoundInfo::custom(LimitMacro::CharMax, upper)));
    assert!(
        !a.diagnostics.iter().any(|d| d.kind == DiagnosticKind::Unconfirmed),
        "{:?}",
        a.diagnostics
    );
    a.reports
}

#[test]
fn random_8bit_reports_match_concrete_execution() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x0f);
    let (mut with, mut without) = (0, 0);
    for _ in 0..40 {
        let mut g = ProgGen::new(&mut rng);
        let body = g.body(4, true);
        let src = function_source(&body);
        let ast = parse_translation_unit(&src, "t.c").unwrap();
        let expected = oracle_sites(&ast);
        let reports = reports_8bit(&src, 127);
        let got: BTreeSet<(usize, usize)> = reports.iter().map(|r| key(r.span)).collect();
        assert_eq!(got, expected, "{src}");
        with += got.len();
        without += ast
            .function("f")
            .unwrap()
            .body
            .stmts
            .len()
            .saturating_sub(got.len());

        // No false positives: each witness replays to an out-of-range value.
        for r in &reports {
            assert!(solver().check_sat(&r.slice).unwrap().is_sat());
            let mut inputs = HashMap::new();
            for p in ["a", "b"] {
                if let Some(v) = r.witness.get(&format!("{p}0")) {
                    inputs.insert(p.to_string(), v.parse::<BigInt>().unwrap());
                }
            }
            let trace = Interp::run(&ast, "f", &inputs).unwrap();
            assert!(
                trace.sites.iter().any(|(s, v)| *s == r.span
                    && (*v > BigInt::from(127) || *v < BigInt::from(-127))),
                "witness {:?} does not reproduce\n{src}",
                r.witness
            );
        }

        // Lowering the bound keeps every report.
        let lower: BTreeSet<(usize, usize)> =
            reports_8bit(&src, 100).iter().map(|r| key(r.span)).collect();
        assert!(got.is_subset(&lower), "{src}");
    }
    assert!(with > 10 && without > 10, "with {with}, without {without}");
}

#[test]
fn report_ids_are_unique_and_parse() {
    let src = "void f(int a, int b) { int x = a * b; int y = x + a; if (a > 2) { y = y * y; } }";
    let mut reports = analyze(src, None).reports;
    assert!(reports.len() >= 3);
    let ids: BTreeSet<_> = reports.iter().map(|r| r.problem_id.clone()).collect();
    assert_eq!(ids.len(), reports.len());
    for (i, r) in reports.iter().enumerate() {
        assert_eq!(parse_problem_id(&r.problem_id), Some((i + 1, "IOF")));
    }
    reports.reverse();
    assign_problem_ids(&mut reports);
    assert_eq!(reports[0].problem_id, "T000001-IOF");
    assert_eq!(parse_problem_id("nonsense"), None);
    assert_eq!(parse_problem_id("T12-IOF"), None);
}

#[test]
fn report_json_round_trip() {
    let a = analyze(MOTIVATING, None);
    let r = &a.reports[0];
    let json = serde_json::to_string(r).unwrap();
    let back: BugReport = serde_json::from_str(&json).unwrap();
    assert_eq!(&back, r);
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["bound"]["upper"], "2147483647");
    assert_eq!(v["bound"]["macro"], "INT_MAX");
    assert!(v["slice"].as_str().unwrap().contains("; probe 1"));
    assert_eq!(back.slice.group(GroupTag::Probe(1)).count(), 1);
}

struct Undecided;

impl Solver for Undecided {
    fn check_sat(&self, _: &ConstraintSystem) -> Result<Verdict, SolverError> {
        Ok(Verdict::Unknown("gave up".into()))
    }
}

#[test]
fn unknown_verdict_is_unconfirmed_not_reported() {
    let src = "void f(int a) { int r = a * a; }";
    let ast = parse_translation_unit(src, "t.c").unwrap();
    let mut e = Engine::new(&ast, src, LimitTable::default(), ExecConfig::default());
    e.register_checker(Box::new(OverflowChecker::new(BoundInfo::custom(
        LimitMacro::IntMax,
        IntKind::Int.max_value(),
    ))));
    let out = e.run(&Undecided).unwrap();
    assert!(out.reports.is_empty());
    assert_eq!(out.diagnostics.len(), 1);
    assert_eq!(out.diagnostics[0].kind, DiagnosticKind::Unconfirmed);
}

struct Down;

impl Solver for Down {
    fn check_sat(&self, _: &ConstraintSystem) -> Result<Verdict, SolverError> {
        Err(SolverError::Unavailable("no binary".into()))
    }
}

#[test]
fn unavailable_solver_aborts_run() {
    let src = "void f(int a) { int r = a * a; }";
    let err = analyze_source(src, "t.c", &AnalysisConfig::default(), &Down).unwrap_err();
    assert!(err.to_string().contains("unavailable"), "{err}");
}

fn n(v: i64) -> BigInt {
    BigInt::from(v)
}

#[test]
fn precondition_examples() {
    let max = n(2147483647);
    assert_eq!(eval_precondition_add_const(&n(2147483647), &n(1), &max), Safety::Unsafe);
    assert_eq!(eval_precondition_add_const(&n(5), &n(10), &max), Safety::Safe);
    assert_eq!(
        eval_precondition_mul_const(&n(1073741824), &n(2), &max).unwrap(),
        Safety::Unsafe
    );
    assert_eq!(eval_precondition_mul_const(&n(3), &n(7), &max).unwrap(), Safety::Safe);
    assert_eq!(
        eval_precondition_mul_const(&n(3), &n(0), &max),
        Err(PreconditionError::DivisorZero)
    );
    assert_eq!(isqrt(&max), n(46340));
    assert!(n(46340) * n(46340) <= max && n(46341) * n(46341) > max);
    assert_eq!(eval_precondition_square(&n(46341), &max), Safety::Unsafe);
    assert_eq!(eval_precondition_square(&n(0), &max), Safety::Safe);
    let umax = n(4294967295);
    assert_eq!(isqrt(&umax), n(65535));
    assert_eq!(eval_precondition_square(&n(65535), &umax), Safety::Safe);
    assert_eq!(eval_precondition_square(&n(65536), &umax), Safety::Unsafe);
}

#[test]
fn preconditions_sound_exhaustively_at_8_bits() {
    let max = n(127);
    let in_range = |v: i64| (-127..=127).contains(&v);
    let mut safe_counts = [0usize; 3];
    for s1 in -128i64..=127 {
        if eval_precondition_square(&n(s1), &max) == Safety::Safe {
            assert!(in_range(s1 * s1), "square {s1}");
            safe_counts[2] += 1;
        }
        for s2 in -128i64..=127 {
            if eval_precondition_add_const(&n(s1), &n(s2), &max) == Safety::Safe {
                assert!(in_range(s1 + s2), "add {s1} {s2}");
                safe_counts[0] += 1;
            }
            if s2 != 0 && eval_precondition_mul_const(&n(s1), &n(s2), &max).unwrap() == Safety::Safe {
                assert!(in_range(s1 * s2), "mul {s1} {s2}");
                safe_counts[1] += 1;
            }
        }
    }
    // isqrt(127) = 11, so 23 squares are safe
    assert_eq!(safe_counts[2], 23);
    assert!(safe_counts[0] > 0 && safe_counts[1] > 0);
}
