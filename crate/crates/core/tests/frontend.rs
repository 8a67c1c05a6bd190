use ovguard::frontend::pretty::pretty_print;
use ovguard::frontend::{
    parse_translation_unit, resolve_field_type, BinOp, ExprKind, FieldPath, FrontendError,
    IntKind, Item, StmtKind, TypedAst,
};
use serde_json::Value;

fn strip_spans(v: &mut Value) {
    match v {
        Value::Object(map) => {
            map.remove("span");
            map.remove("source_len");
            map.values_mut().for_each(strip_spans);
        }
        Value::Array(items) => items.iter_mut().for_each(strip_spans),
        _ => {}
    }
}

fn structure(ast: &TypedAst) -> Value {
    let mut v = serde_json::to_value(ast).unwrap();
    strip_spans(&mut v);
    v
}

fn assert_round_trip(src: &str) {
    let first = parse_translation_unit(src, "t.c").unwrap();
    let printed = pretty_print(&first);
    let second = parse_translation_unit(&printed, "t.c")
        .unwrap_or_else(|e| panic!("reparse failed: {}\n{printed}", e.render("t.c")));
    assert_eq!(structure(&first), structure(&second), "printed:\n{printed}");
}

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

#[test]
fn empty_file_is_empty_unit() {
    let ast = parse_translation_unit("", "empty.c").unwrap();
    assert!(ast.items.is_empty());
    assert!(ast.vars.is_empty());
}

#[test]
fn declaration_with_addition() {
    let src = "void f(int varA, int varB) { int result = varA + varB; }";
    let ast = parse_translation_unit(src, "t.c").unwrap();
    let f = ast.function("f").unwrap();
    let StmtKind::Decl(d) = &f.body.stmts[0].kind else {
        panic!("expected declaration");
    };
    assert_eq!(d.name, "result");
    let init = d.init.as_ref().unwrap();
    let ExprKind::Binary(op, a, b) = &init.kind else {
        panic!("expected binary");
    };
    assert_eq!(*op, BinOp::Add);
    assert!(matches!(&a.kind, ExprKind::Var { name, .. } if name == "varA"));
    assert!(matches!(&b.kind, ExprKind::Var { name, .. } if name == "varB"));
    assert_eq!(init.int_kind(), Some(IntKind::Int));
}

#[test]
fn motivating_example_parses_with_unsigned_kinds() {
    let ast = parse_translation_unit(MOTIVATING, "cwe190.c").unwrap();
    let f = ast.function("bad").unwrap();
    let StmtKind::Decl(d) = &f.body.stmts[1].kind else {
        panic!()
    };
    assert_eq!(d.init.as_ref().unwrap().int_kind(), Some(IntKind::UInt));
    assert_eq!(f.body.stmts[1].span.line, 8);
}

#[test]
fn nested_anonymous_struct_field_resolution() {
    let src = "struct { struct { unsigned int v; } inner; char x; } s;\nint main(void) { s.inner.v = 1; return 0; }";
    let ast = parse_translation_unit(src, "t.c").unwrap();
    assert_eq!(
        resolve_field_type(&ast, &FieldPath::parse("s.inner.v")).unwrap(),
        IntKind::UInt
    );
    assert_eq!(
        resolve_field_type(&ast, &FieldPath::parse("s.x")).unwrap(),
        IntKind::Char
    );
    assert_eq!(
        resolve_field_type(&ast, &FieldPath::parse("s.inner.w")),
        Err(FrontendError::UnknownField { field: "w".into() })
    );
    assert_round_trip(src);
}

#[test]
fn member_access_on_unknown_field_is_rejected() {
    let src = "struct P { int a; };\nvoid f(void) { struct P p; p.b = 1; }";
    let err = parse_translation_unit(src, "t.c").unwrap_err();
    assert_eq!(err, FrontendError::UnknownField { field: "b".into() });
}

#[test]
fn unsupported_constructs_name_themselves() {
    for (src, what) in [
        ("void f(void) { int a[3]; }", "array"),
        ("void f(int a) { a = a % 2; }", "`%` operator"),
        ("void f(void) { while (1) { break; } }", "`break` statement"),
        ("#define N 3\n", "preprocessor directive"),
        ("void f(double d) { }", "floating point type"),
        ("void f(int a) { a = (char)a; }", "cast expression"),
    ] {
        match parse_translation_unit(src, "t.c") {
            Err(FrontendError::Unsupported { construct, .. }) => {
                assert!(construct.contains(what), "{construct} vs {what}")
            }
            other => panic!("{src}: {other:?}"),
        }
    }
}

#[test]
fn syntax_errors_carry_position() {
    let err = parse_translation_unit("int main(void) {\n  int x = ;\n}", "t.c").unwrap_err();
    match &err {
        FrontendError::Syntax { line, col, .. } => {
            assert_eq!((*line, *col), (2, 11));
        }
        other => panic!("{other:?}"),
    }
    assert!(err.render("t.c").starts_with("t.c:2:11: syntax error"));
}

#[test]
fn undeclared_identifier_is_a_diagnostic() {
    let err = parse_translation_unit("void f(void) { y = 1; }", "a.c").unwrap_err();
    assert_eq!(err.render("a.c"), "a.c:1:16: use of undeclared identifier `y`");
}

#[test]
fn limits_macros_and_big_literals() {
    let src = "int64_t f(void) { int64_t big = 9223372036854775807; if (big > LLONG_MAX) { return 1; } return UINT_MAX; }";
    let ast = parse_translation_unit(src, "t.c").unwrap();
    let f = ast.function("f").unwrap();
    let StmtKind::Decl(d) = &f.body.stmts[0].kind else {
        panic!()
    };
    assert_eq!(d.init.as_ref().unwrap().int_kind(), Some(IntKind::Int64));
    assert_round_trip(src);
}

#[test]
fn calls_before_definition_get_callee_return_kind() {
    let src = "void g(void) { int64_t x = h(); }\nint64_t h(void) { return 1; }";
    let ast = parse_translation_unit(src, "t.c").unwrap();
    let StmtKind::Decl(d) = &ast.function("g").unwrap().body.stmts[0].kind else {
        panic!()
    };
    assert_eq!(d.init.as_ref().unwrap().int_kind(), Some(IntKind::Int64));
}

#[test]
fn shadowed_locals_get_distinct_unique_names() {
    let src = "void f(int x) { { int x = 2; x = x + 1; } x = 3; }";
    let ast = parse_translation_unit(src, "t.c").unwrap();
    let uniques: Vec<&str> = ast.vars.iter().map(|v| v.unique.as_str()).collect();
    assert_eq!(uniques, ["x", "x~2"]);
}

#[test]
fn increments_become_compound_assignments() {
    let src = "void f(void) { int i = 0; i++; --i; for (i = 0; i < 3; i++) { } }";
    let ast = parse_translation_unit(src, "t.c").unwrap();
    let printed = pretty_print(&ast);
    assert!(printed.contains("i += 1;"));
    assert!(printed.contains("i -= 1;"));
    assert_round_trip(src);
}

#[test]
fn round_trip_covers_the_subset() {
    assert_round_trip(MOTIVATING);
    assert_round_trip(
        r#"struct pair { int a; int *b; };
static int counter = 0;
int helper(int x, struct pair *p);
int helper(int x, struct pair *p) {
    p->a = -x + -(x * 2) - (3 - x);
    *p->b = !x && (x < 3 || x >= 10);
    if (x == 1) counter += 1; else if (x != 2) { counter -= 2; } else counter = counter / 2;
    while (x > 0) x = x - 1;
    for (int i = 0; i < 4; i += 1) { counter *= 2; }
    printf("%d\n", counter);
    return (x + 1) * (x - 1) / 2;
}
"#,
    );
}

#[test]
fn spans_are_monotone_and_in_bounds() {
    let ast = parse_translation_unit(MOTIVATING, "m.c").unwrap();
    for item in &ast.items {
        let outer = item.span();
        assert!(outer.end <= MOTIVATING.len());
        if let Item::Function(f) = item {
            assert!(outer.contains(&f.body.span));
            for s in &f.body.stmts {
                s.walk(&mut |st| {
                    assert!(f.body.span.contains(&st.span));
                    for e in st.exprs() {
                        e.visit(&mut |sub| assert!(st.span.contains(&sub.span)));
                    }
                });
            }
        }
    }
}

#[test]
fn parsing_is_deterministic() {
    let a = serde_json::to_string(&parse_translation_unit(MOTIVATING, "m.c").unwrap()).unwrap();
    let b = serde_json::to_string(&parse_translation_unit(MOTIVATING, "m.c").unwrap()).unwrap();
    assert_eq!(a, b);
}
