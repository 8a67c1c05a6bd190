//! Canonical C rendering of a [`TypedAst`]. Re-parsing the output yields a
//! structurally identical tree (spans aside).

use std::collections::HashSet;
use std::fmt::Write;

use super::ast::*;
use super::types::{IntKind, Type};

pub fn pretty_print(ast: &TypedAst) -> String {
    let mut p = Printer {
        ast,
        out: String::new(),
        printed_structs: HashSet::new(),
    };
    for item in &ast.items {
        p.item(item);
    }
    p.out
}

/// Render a single expression with minimal parentheses.
pub fn expr_to_string(e: &Expr) -> String {
    let mut s = String::new();
    write_expr(&mut s, e, 0);
    s
}

/// One-line rendering of a statement without its nested bodies, e.g.
/// `unsigned int result = data * data` or `while (i < n)`.
pub fn stmt_header(st: &Stmt) -> String {
    match &st.kind {
        StmtKind::Decl(d) => {
            let mut s = String::new();
            if d.is_const {
                s.push_str("const ");
            }
            s.push_str(&type_text(&d.ty));
            s.push(' ');
            s.push_str(&d.name);
            if let Some(init) = &d.init {
                s.push_str(" = ");
                write_expr(&mut s, init, 0);
            }
            s
        }
        StmtKind::Assign { target, op, value } => {
            let mut s = String::new();
            write_expr(&mut s, target, 0);
            let _ = write!(s, " {} ", op.text());
            write_expr(&mut s, value, 0);
            s
        }
        StmtKind::Expr(e) => expr_to_string(e),
        StmtKind::Return(None) => "return".into(),
        StmtKind::Return(Some(e)) => format!("return {}", expr_to_string(e)),
        StmtKind::If { cond, .. } => format!("if ({})", expr_to_string(cond)),
        StmtKind::While { cond, .. } => format!("while ({})", expr_to_string(cond)),
        StmtKind::For { cond, .. } => format!(
            "for (..; {}; ..)",
            cond.as_ref().map(expr_to_string).unwrap_or_default()
        ),
        StmtKind::Block(_) => "{ .. }".into(),
        StmtKind::Empty => ";".into(),
    }
}

/// C spelling of a type without struct bodies.
pub fn type_text(ty: &Type) -> String {
    match ty {
        Type::Void => "void".into(),
        Type::Int(k) => int_type_name(*k).into(),
        Type::Ptr(inner) => format!("{} *", type_text(inner)),
        Type::Struct(s) => format!("struct {s}"),
    }
}

struct Printer<'a> {
    ast: &'a TypedAst,
    out: String,
    printed_structs: HashSet<String>,
}

impl Printer<'_> {
    fn item(&mut self, item: &Item) {
        match item {
            Item::Struct { name, .. } => {
                let body = self.struct_body(name, 0);
                self.printed_structs.insert(name.clone());
                let _ = writeln!(self.out, "struct {name} {body};");
            }
            Item::Global(d) => {
                let text = self.var_decl(d, 0);
                let _ = writeln!(self.out, "{text};");
            }
            Item::Prototype(sig) => {
                let text = self.signature(sig);
                let _ = writeln!(self.out, "{text};");
            }
            Item::Function(f) => {
                let text = self.signature(&f.sig);
                let _ = writeln!(self.out, "{text}");
                let body = self.block(&f.body, 0);
                self.out.push_str(&body);
                self.out.push('\n');
            }
        }
    }

    fn struct_body(&mut self, name: &str, indent: usize) -> String {
        let Some(layout) = self.ast.struct_layout(name) else {
            return "{ }".into();
        };
        let layout = layout.clone();
        let pad = "    ".repeat(indent + 1);
        let mut s = String::from("{\n");
        for (field, ty) in &layout.fields {
            let decl = self.declarator(ty, field, indent + 1);
            let _ = writeln!(s, "{pad}{decl};");
        }
        s.push_str(&"    ".repeat(indent));
        s.push('}');
        s
    }

    /// `type name` with pointer stars attached to the name.
    fn declarator(&mut self, ty: &Type, name: &str, indent: usize) -> String {
        let mut stars = String::new();
        let mut base = ty;
        while let Type::Ptr(inner) = base {
            stars.push('*');
            base = inner;
        }
        let base_text = match base {
            Type::Void => "void".to_string(),
            Type::Int(k) => int_type_name(*k).to_string(),
            Type::Struct(s) => {
                if self.printed_structs.contains(s) {
                    format!("struct {s}")
                } else {
                    self.printed_structs.insert(s.clone());
                    let body = self.struct_body(s, indent);
                    if s.starts_with('<') {
                        format!("struct {body}")
                    } else {
                        format!("struct {s} {body}")
                    }
                }
            }
            Type::Ptr(_) => unreachable!(),
        };
        if name.is_empty() {
            format!("{base_text} {stars}").trim_end().to_string()
        } else {
            format!("{base_text} {stars}{name}")
        }
    }

    fn signature(&mut self, sig: &FunctionSig) -> String {
        let ret = self.declarator(&sig.ret, &sig.name, 0);
        let params = if sig.params.is_empty() {
            "void".to_string()
        } else {
            sig.params
                .iter()
                .map(|p| {
                    let name = if p.name.starts_with('$') { "" } else { &p.name };
                    self.declarator(&p.ty, name, 0)
                })
                .collect::<Vec<_>>()
                .join(", ")
        };
        let stat = if sig.is_static { "static " } else { "" };
        format!("{stat}{ret}({params})")
    }

    fn var_decl(&mut self, d: &VarDecl, indent: usize) -> String {
        let mut s = String::new();
        if d.is_const {
            s.push_str("const ");
        }
        s.push_str(&self.declarator(&d.ty, &d.name, indent));
        if let Some(init) = &d.init {
            s.push_str(" = ");
            write_expr(&mut s, init, 0);
        }
        s
    }

    fn block(&mut self, b: &Block, indent: usize) -> String {
        let mut s = String::from("{\n");
        for st in &b.stmts {
            s.push_str(&self.stmt(st, indent + 1));
        }
        s.push_str(&"    ".repeat(indent));
        s.push('}');
        s
    }

    fn simple(&mut self, st: &Stmt, indent: usize) -> String {
        match &st.kind {
            StmtKind::Decl(d) => self.var_decl(d, indent),
            StmtKind::Assign { target, op, value } => {
                let mut s = String::new();
                write_expr(&mut s, target, 0);
                let _ = write!(s, " {} ", op.text());
                write_expr(&mut s, value, 0);
                s
            }
            StmtKind::Expr(e) => expr_to_string(e),
            _ => String::new(),
        }
    }

    fn stmt(&mut self, st: &Stmt, indent: usize) -> String {
        let pad = "    ".repeat(indent);
        match &st.kind {
            StmtKind::Decl(_) | StmtKind::Assign { .. } | StmtKind::Expr(_) => {
                format!("{pad}{};\n", self.simple(st, indent))
            }
            StmtKind::Empty => format!("{pad};\n"),
            StmtKind::Return(None) => format!("{pad}return;\n"),
            StmtKind::Return(Some(e)) => format!("{pad}return {};\n", expr_to_string(e)),
            StmtKind::Block(b) => format!("{pad}{}\n", self.block(b, indent)),
            StmtKind::If {
                cond,
                then_branch,
                else_branch,
            } => {
                let mut s = format!("{pad}if ({}) ", expr_to_string(cond));
                s.push_str(&self.body(then_branch, indent));
                if let Some(e) = else_branch {
                    s.push_str(" else ");
                    if matches!(e.kind, StmtKind::If { .. }) {
                        let nested = self.stmt(e, indent);
                        s.push_str(nested.trim_start());
                        return s;
                    }
                    s.push_str(&self.body(e, indent));
                }
                s.push('\n');
                s
            }
            StmtKind::While { cond, body } => {
                let mut s = format!("{pad}while ({}) ", expr_to_string(cond));
                s.push_str(&self.body(body, indent));
                s.push('\n');
                s
            }
            StmtKind::For {
                init,
                cond,
                step,
                body,
            } => {
                let init = init.as_ref().map(|i| self.simple(i, indent)).unwrap_or_default();
                let cond = cond.as_ref().map(expr_to_string).unwrap_or_default();
                let step = step.as_ref().map(|i| self.simple(i, indent)).unwrap_or_default();
                let mut s = format!("{pad}for ({init}; {cond}; {step}) ");
                s.push_str(&self.body(body, indent));
                s.push('\n');
                s
            }
        }
    }

    /// Body of a compound statement; non-block bodies are printed on their own
    /// line so re-parsing keeps them as single statements.
    fn body(&mut self, st: &Stmt, indent: usize) -> String {
        match &st.kind {
            StmtKind::Block(b) => self.block(b, indent),
            _ => {
                let inner = self.stmt(st, indent + 1);
                format!("\n{}", inner.trim_end_matches('\n'))
            }
        }
    }
}

fn int_type_name(k: IntKind) -> &'static str {
    match k {
        IntKind::Char => "char",
        IntKind::Short => "short",
        IntKind::Int => "int",
        IntKind::UInt => "unsigned int",
        IntKind::Int64 => "int64_t",
    }
}

fn write_expr(s: &mut String, e: &Expr, parent_prec: u8) {
    match &e.kind {
        ExprKind::IntLit(v) => {
            let _ = write!(s, "{v}");
            if e.ty == ValueType::Int(IntKind::UInt) {
                s.push('u');
            }
        }
        ExprKind::StrLit(text) => {
            let _ = write!(s, "\"{text}\"");
        }
        ExprKind::Var { name, .. } => s.push_str(name),
        ExprKind::Temp(name) => s.push_str(name),
        ExprKind::Limit(m) => s.push_str(m.name()),
        ExprKind::Unary(op, inner) => {
            s.push(match op {
                UnOp::Neg => '-',
                UnOp::Not => '!',
            });
            write_operand(s, inner);
        }
        ExprKind::Deref(inner) => {
            s.push('*');
            write_operand(s, inner);
        }
        ExprKind::AddrOf(inner) => {
            s.push('&');
            write_operand(s, inner);
        }
        ExprKind::Binary(op, a, b) => {
            let prec = op.precedence();
            let paren = prec < parent_prec;
            if paren {
                s.push('(');
            }
            write_expr(s, a, prec);
            let _ = write!(s, " {} ", op.text());
            write_expr(s, b, prec + 1);
            if paren {
                s.push(')');
            }
        }
        ExprKind::Call { callee, args } => {
            s.push_str(callee);
            s.push('(');
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    s.push_str(", ");
                }
                write_expr(s, a, 0);
            }
            s.push(')');
        }
        ExprKind::Member { base, field, arrow } => {
            write_operand(s, base);
            s.push_str(if *arrow { "->" } else { "." });
            s.push_str(field);
        }
    }
}

/// Operand of a prefix or postfix operator: anything that is not a primary
/// expression gets parentheses.
fn write_operand(s: &mut String, e: &Expr) {
    let primary = matches!(
        e.kind,
        ExprKind::IntLit(_)
            | ExprKind::Var { .. }
            | ExprKind::Temp(_)
            | ExprKind::Limit(_)
            | ExprKind::Call { .. }
            | ExprKind::Member { .. }
            | ExprKind::StrLit(_)
    );
    if primary {
        write_expr(s, e, 0);
    } else {
        s.push('(');
        write_expr(s, e, 0);
        s.push(')');
    }
}
