use std::collections::HashMap;

use num_bigint::BigInt;

use super::ast::*;
use super::lexer::{tokenize, Keyword, Tok, Token};
use super::span::Span;
use super::types::{IntKind, StructLayout, Type};
use super::FrontendError;

type PResult<T> = Result<T, FrontendError>;

/// Return type of the library functions the analysis ships summaries for.
pub fn library_return_type(name: &str) -> Option<Type> {
    Some(match name {
        "RAND32" | "rand" | "atoi" | "fscanf" | "scanf" | "printf" | "puts" => Type::Int(IntKind::Int),
        "RAND64" => Type::Int(IntKind::Int64),
        "printLine" | "printIntLine" | "printUnsignedLine" | "printLongLongLine" | "abort"
        | "exit" | "srand" => Type::Void,
        "memcpy" | "memset" => Type::Ptr(Box::new(Type::Void)),
        _ => return None,
    })
}

pub(super) fn parse(src: &str, file: &str) -> PResult<TypedAst> {
    let tokens = tokenize(src)?;
    // First pass registers every function signature and struct so calls may
    // precede definitions.
    let sigs = {
        let mut pre = Parser::new(&tokens, HashMap::new(), true);
        pre.translation_unit()?;
        pre.funcs
    };
    let mut p = Parser::new(&tokens, sigs, false);
    let items = p.translation_unit()?;
    Ok(TypedAst {
        file: file.to_string(),
        source_len: src.len(),
        items,
        structs: p.structs,
        vars: p.vars,
    })
}

struct Parser<'t> {
    toks: &'t [Token],
    pos: usize,
    skip_bodies: bool,
    funcs: HashMap<String, Type>,
    structs: Vec<StructLayout>,
    vars: Vec<VarInfo>,
    scopes: Vec<HashMap<String, DeclId>>,
    current_fn: Option<String>,
    name_counts: HashMap<String, u32>,
    anon_structs: u32,
}

struct DeclSpec {
    ty: Type,
    is_const: bool,
    is_static: bool,
    start: Span,
}

impl<'t> Parser<'t> {
    fn new(
        toks: &'t [Token],
        funcs: HashMap<String, Type>,
        skip_bodies: bool,
    ) -> Self {
        Parser {
            toks,
            pos: 0,
            skip_bodies,
            funcs,
            structs: Vec::new(),
            vars: Vec::new(),
            scopes: vec![HashMap::new()],
            current_fn: None,
            name_counts: HashMap::new(),
            anon_structs: 0,
        }
    }

    // ---- token helpers ----

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, off: usize) -> &Tok {
        let i = (self.pos + off).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn span(&self) -> Span {
        self.toks[self.pos].span
    }

    fn prev_span(&self) -> Span {
        self.toks[self.pos.saturating_sub(1)].span
    }

    fn advance(&mut self) -> &Token {
        let t = &self.toks[self.pos];
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(self.peek(), Tok::Punct(q) if *q == p)
    }

    fn is_kw(&self, k: Keyword) -> bool {
        matches!(self.peek(), Tok::Kw(q) if *q == k)
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        if self.is_punct(p) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, k: Keyword) -> bool {
        if self.is_kw(k) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn expected<T>(&self, what: &str) -> PResult<T> {
        let s = self.span();
        let found = match self.peek() {
            Tok::Ident(n) => format!("`{n}`"),
            Tok::Int { value, .. } => format!("`{value}`"),
            Tok::Str(_) => "string literal".into(),
            Tok::Limit(m) => format!("`{m}`"),
            Tok::Kw(k) => format!("`{}`", k.text()),
            Tok::Punct(p) => format!("`{p}`"),
            Tok::Eof => "end of file".into(),
        };
        Err(FrontendError::Syntax {
            line: s.line,
            col: s.col,
            expected: format!("{what}, found {found}"),
        })
    }

    fn expect_punct(&mut self, p: &str) -> PResult<Span> {
        if self.is_punct(p) {
            Ok(self.advance().span)
        } else {
            self.expected(&format!("`{p}`"))
        }
    }

    fn expect_ident(&mut self) -> PResult<(String, Span)> {
        match self.peek().clone() {
            Tok::Ident(n) => {
                let s = self.advance().span;
                Ok((n, s))
            }
            _ => self.expected("identifier"),
        }
    }

    fn unsupported<T>(&self, what: &str, span: Span) -> PResult<T> {
        Err(FrontendError::Unsupported {
            construct: what.to_string(),
            span,
        })
    }

    fn semantic<T>(&self, message: String, span: Span) -> PResult<T> {
        Err(FrontendError::Semantic { message, span })
    }

    // ---- declarations ----

    fn starts_decl(&self) -> bool {
        matches!(
            self.peek(),
            Tok::Kw(
                Keyword::Char
                    | Keyword::Short
                    | Keyword::Int
                    | Keyword::Long
                    | Keyword::Unsigned
                    | Keyword::Signed
                    | Keyword::Void
                    | Keyword::Struct
                    | Keyword::Const
                    | Keyword::Static
                    | Keyword::Int64T
                    | Keyword::Float
                    | Keyword::Double
                    | Keyword::Typedef
            )
        )
    }

    fn decl_spec(&mut self) -> PResult<DeclSpec> {
        let start = self.span();
        let mut is_const = false;
        let mut is_static = false;
        loop {
            if self.eat_kw(Keyword::Const) {
                is_const = true;
            } else if self.eat_kw(Keyword::Static) {
                is_static = true;
            } else {
                break;
            }
        }
        let ty = self.type_spec()?;
        if self.eat_kw(Keyword::Const) {
            is_const = true;
        }
        Ok(DeclSpec {
            ty,
            is_const,
            is_static,
            start,
        })
    }

    fn type_spec(&mut self) -> PResult<Type> {
        let s = self.span();
        match self.peek().clone() {
            Tok::Kw(Keyword::Void) => {
                self.advance();
                Ok(Type::Void)
            }
            Tok::Kw(Keyword::Char) => {
                self.advance();
                Ok(Type::Int(IntKind::Char))
            }
            Tok::Kw(Keyword::Short) => {
                self.advance();
                self.eat_kw(Keyword::Int);
                Ok(Type::Int(IntKind::Short))
            }
            Tok::Kw(Keyword::Int) => {
                self.advance();
                Ok(Type::Int(IntKind::Int))
            }
            Tok::Kw(Keyword::Int64T) => {
                self.advance();
                Ok(Type::Int(IntKind::Int64))
            }
            Tok::Kw(Keyword::Long) => {
                self.advance();
                self.eat_kw(Keyword::Long);
                self.eat_kw(Keyword::Int);
                Ok(Type::Int(IntKind::Int64))
            }
            Tok::Kw(Keyword::Signed) => {
                self.advance();
                match self.peek() {
                    Tok::Kw(Keyword::Char | Keyword::Short | Keyword::Int | Keyword::Long) => {
                        self.type_spec()
                    }
                    _ => Ok(Type::Int(IntKind::Int)),
                }
            }
            Tok::Kw(Keyword::Unsigned) => {
                self.advance();
                match self.peek() {
                    Tok::Kw(Keyword::Int) => {
                        self.advance();
                        Ok(Type::Int(IntKind::UInt))
                    }
                    Tok::Kw(Keyword::Char | Keyword::Short | Keyword::Long) => {
                        let t = self.span();
                        self.unsupported("unsigned integer type other than `unsigned int`", s.to(t))
                    }
                    _ => Ok(Type::Int(IntKind::UInt)),
                }
            }
            Tok::Kw(Keyword::Struct) => {
                self.advance();
                self.struct_spec(s)
            }
            Tok::Kw(Keyword::Float | Keyword::Double) => self.unsupported("floating point type", s),
            Tok::Kw(Keyword::Typedef) => self.unsupported("typedef", s),
            _ => self.expected("type specifier"),
        }
    }

    fn struct_spec(&mut self, start: Span) -> PResult<Type> {
        let tag = match self.peek().clone() {
            Tok::Ident(n) => {
                self.advance();
                Some(n)
            }
            _ => None,
        };
        if !self.is_punct("{") {
            let Some(tag) = tag else {
                return self.expected("struct tag or `{`");
            };
            return Ok(Type::Struct(tag));
        }
        self.advance();
        let name = match tag {
            Some(t) => t,
            None => {
                self.anon_structs += 1;
                format!("<anon#{}>", self.anon_structs)
            }
        };
        let mut fields: Vec<(String, Type)> = Vec::new();
        while !self.is_punct("}") {
            let spec = self.decl_spec()?;
            loop {
                let ty = self.pointer_suffix(spec.ty.clone());
                let (fname, fspan) = self.expect_ident()?;
                if self.is_punct("[") {
                    return self.unsupported("array", self.span());
                }
                if fields.iter().any(|(n, _)| *n == fname) {
                    return self.semantic(format!("duplicate field `{fname}`"), fspan);
                }
                fields.push((fname, ty));
                if !self.eat_punct(",") {
                    break;
                }
            }
            self.expect_punct(";")?;
        }
        let end = self.expect_punct("}")?;
        let layout = StructLayout {
            name: name.clone(),
            fields,
        };
        match self.structs.iter_mut().find(|s| s.name == name) {
            Some(existing) if self.skip_bodies => *existing = layout,
            Some(_) => return self.semantic(format!("redefinition of struct `{name}`"), start.to(end)),
            None => self.structs.push(layout),
        }
        Ok(Type::Struct(name))
    }

    fn pointer_suffix(&mut self, mut ty: Type) -> Type {
        while self.eat_punct("*") {
            self.eat_kw(Keyword::Const);
            ty = Type::Ptr(Box::new(ty));
        }
        ty
    }

    fn check_complete_type(&self, ty: &Type, span: Span) -> PResult<()> {
        if let Type::Struct(name) = ty {
            if self.struct_layout(name).is_none() {
                return self.semantic(format!("unknown struct `{name}`"), span);
            }
        }
        Ok(())
    }

    fn struct_layout(&self, name: &str) -> Option<&StructLayout> {
        self.structs.iter().find(|s| s.name == name)
    }

    fn declare(&mut self, name: &str, ty: Type, scope: VarScope, span: Span) -> PResult<DeclId> {
        let current = self.scopes.last().expect("scope stack");
        if current.contains_key(name) && !self.skip_bodies {
            return self.semantic(format!("redeclaration of `{name}`"), span);
        }
        let unique = match scope {
            VarScope::Global => name.to_string(),
            _ => {
                let c = self.name_counts.entry(name.to_string()).or_insert(0);
                *c += 1;
                if *c == 1 {
                    name.to_string()
                } else {
                    format!("{name}~{c}")
                }
            }
        };
        let id = self.vars.len();
        self.vars.push(VarInfo {
            name: name.to_string(),
            unique,
            ty,
            scope,
            function: self.current_fn.clone(),
            span,
        });
        self.scopes.last_mut().unwrap().insert(name.to_string(), id);
        Ok(id)
    }

    fn lookup(&self, name: &str) -> Option<DeclId> {
        self.scopes.iter().rev().find_map(|s| s.get(name).copied())
    }

    fn translation_unit(&mut self) -> PResult<Vec<Item>> {
        let mut items = Vec::new();
        while !matches!(self.peek(), Tok::Eof) {
            if self.eat_punct(";") {
                continue;
            }
            self.external_decl(&mut items)?;
        }
        Ok(items)
    }

    fn external_decl(&mut self, items: &mut Vec<Item>) -> PResult<()> {
        let spec = self.decl_spec()?;
        if self.is_punct(";") {
            let end = self.advance().span;
            if let Type::Struct(name) = &spec.ty {
                items.push(Item::Struct {
                    name: name.clone(),
                    span: spec.start.to(end),
                });
                return Ok(());
            }
            return self.expected("declarator");
        }
        let ty = self.pointer_suffix(spec.ty.clone());
        let (name, name_span) = self.expect_ident()?;
        if self.is_punct("(") {
            return self.function(spec, ty, name, items);
        }
        // Global variable(s).
        let mut ty = ty;
        let mut name = name;
        let mut name_span = name_span;
        let mut decl_start = spec.start;
        loop {
            if self.is_punct("[") {
                return self.unsupported("array", self.span());
            }
            self.check_complete_type(&ty, name_span)?;
            let init = if self.eat_punct("=") {
                Some(self.expr()?)
            } else {
                None
            };
            let decl = if self.skip_bodies {
                0
            } else {
                self.declare(&name, ty.clone(), VarScope::Global, name_span)?
            };
            let end = self.prev_span();
            if let Some(init) = &init {
                self.check_assignable(&ty, init)?;
            }
            items.push(Item::Global(VarDecl {
                decl,
                name: name.clone(),
                ty: ty.clone(),
                is_const: spec.is_const,
                init,
                span: decl_start.to(end),
            }));
            if self.eat_punct(",") {
                ty = self.pointer_suffix(spec.ty.clone());
                let (n, s) = self.expect_ident()?;
                name = n;
                name_span = s;
                decl_start = s;
                continue;
            }
            break;
        }
        let end = self.expect_punct(";")?;
        if let Some(Item::Global(last)) = items.last_mut() {
            last.span = last.span.to(end);
        }
        Ok(())
    }

    fn function(
        &mut self,
        spec: DeclSpec,
        ret: Type,
        name: String,
        items: &mut Vec<Item>,
    ) -> PResult<()> {
        self.expect_punct("(")?;
        self.current_fn = Some(name.clone());
        self.name_counts.clear();
        self.scopes.push(HashMap::new());
        let mut params = Vec::new();
        let only_void = self.is_kw(Keyword::Void) && matches!(self.peek_at(1), Tok::Punct(")"));
        if only_void {
            self.advance();
        }
        if !self.is_punct(")") {
            loop {
                if self.is_punct("...") {
                    return self.unsupported("variadic parameter list", self.span());
                }
                let pspec = self.decl_spec()?;
                let pty = self.pointer_suffix(pspec.ty);
                let (pname, pspan) = match self.peek().clone() {
                    Tok::Ident(n) => {
                        let s = self.advance().span;
                        (n, s)
                    }
                    _ => (format!("$arg{}", params.len()), self.prev_span()),
                };
                let decl = if self.skip_bodies {
                    0
                } else {
                    self.declare(&pname, pty.clone(), VarScope::Param, pspan)?
                };
                params.push(Param {
                    name: pname,
                    ty: pty,
                    decl,
                    span: pspan,
                });
                if !self.eat_punct(",") {
                    break;
                }
            }
        }
        let close = self.expect_punct(")")?;
        let sig = FunctionSig {
            name: name.clone(),
            ret: ret.clone(),
            params,
            is_static: spec.is_static,
            span: spec.start.to(close),
        };
        if self.skip_bodies {
            self.funcs.insert(name.clone(), ret.clone());
        }
        if self.is_punct(";") {
            let end = self.advance().span;
            self.scopes.pop();
            self.current_fn = None;
            let mut sig = sig;
            sig.span = sig.span.to(end);
            items.push(Item::Prototype(sig));
            return Ok(());
        }
        if !self.is_punct("{") {
            return self.expected("`{` or `;`");
        }
        if self.skip_bodies {
            let open = self.span();
            let mut depth = 0usize;
            loop {
                match self.peek() {
                    Tok::Punct("{") => depth += 1,
                    Tok::Punct("}") => {
                        depth -= 1;
                        if depth == 0 {
                            self.advance();
                            break;
                        }
                    }
                    Tok::Eof => return self.expected("`}`"),
                    _ => {}
                }
                self.advance();
            }
            self.scopes.pop();
            self.current_fn = None;
            let end = self.prev_span();
            items.push(Item::Function(FunctionDef {
                span: spec.start.to(end),
                sig,
                body: Block {
                    stmts: vec![],
                    span: open.to(end),
                },
            }));
            return Ok(());
        }
        let body = self.block_no_scope()?;
        self.scopes.pop();
        self.current_fn = None;
        let span = spec.start.to(body.span);
        items.push(Item::Function(FunctionDef { sig, body, span }));
        Ok(())
    }

    // ---- statements ----

    fn block(&mut self) -> PResult<Block> {
        self.scopes.push(HashMap::new());
        let b = self.block_no_scope();
        self.scopes.pop();
        b
    }

    fn block_no_scope(&mut self) -> PResult<Block> {
        let open = self.expect_punct("{")?;
        let mut stmts = Vec::new();
        while !self.is_punct("}") {
            if matches!(self.peek(), Tok::Eof) {
                return self.expected("`}`");
            }
            self.statement_into(&mut stmts)?;
        }
        let close = self.expect_punct("}")?;
        Ok(Block {
            stmts,
            span: open.to(close),
        })
    }

    fn statement_into(&mut self, out: &mut Vec<Stmt>) -> PResult<()> {
        if self.starts_decl() {
            let decls = self.local_decl()?;
            self.expect_punct(";")?;
            let end = self.prev_span();
            let n = decls.len();
            for (i, mut d) in decls.into_iter().enumerate() {
                if i + 1 == n {
                    d.span = d.span.to(end);
                }
                out.push(Stmt {
                    span: d.span,
                    kind: StmtKind::Decl(d),
                });
            }
            return Ok(());
        }
        let s = self.statement()?;
        out.push(s);
        Ok(())
    }

    /// A statement in a position where a single statement is required; a bare
    /// declaration there is wrapped in a block of its own.
    fn sub_statement(&mut self) -> PResult<Stmt> {
        if self.starts_decl() {
            let start = self.span();
            self.scopes.push(HashMap::new());
            let mut stmts = Vec::new();
            let r = self.statement_into(&mut stmts);
            self.scopes.pop();
            r?;
            let span = start.to(self.prev_span());
            return Ok(Stmt {
                kind: StmtKind::Block(Block { stmts, span }),
                span,
            });
        }
        self.scopes.push(HashMap::new());
        let r = self.statement();
        self.scopes.pop();
        r
    }

    fn local_decl(&mut self) -> PResult<Vec<VarDecl>> {
        let spec = self.decl_spec()?;
        if spec.is_static {
            return self.unsupported("static local variable", spec.start);
        }
        let mut out = Vec::new();
        let mut start = spec.start;
        loop {
            let ty = self.pointer_suffix(spec.ty.clone());
            if ty == Type::Void {
                return self.semantic("variable declared void".into(), self.span());
            }
            let (name, name_span) = self.expect_ident()?;
            if self.is_punct("[") {
                return self.unsupported("array", self.span());
            }
            self.check_complete_type(&ty, name_span)?;
            let init = if self.eat_punct("=") {
                let e = self.expr()?;
                self.check_assignable(&ty, &e)?;
                Some(e)
            } else {
                None
            };
            // Declared after the initializer so `int x = x;` does not see itself.
            let decl = self.declare(&name, ty.clone(), VarScope::Local, name_span)?;
            out.push(VarDecl {
                decl,
                name,
                ty,
                is_const: spec.is_const,
                init,
                span: start.to(self.prev_span()),
            });
            if self.eat_punct(",") {
                start = self.span();
                continue;
            }
            break;
        }
        Ok(out)
    }

    fn statement(&mut self) -> PResult<Stmt> {
        let start = self.span();
        match self.peek().clone() {
            Tok::Punct("{") => {
                let b = self.block()?;
                Ok(Stmt {
                    span: b.span,
                    kind: StmtKind::Block(b),
                })
            }
            Tok::Punct(";") => {
                self.advance();
                Ok(Stmt {
                    kind: StmtKind::Empty,
                    span: start,
                })
            }
            Tok::Kw(Keyword::If) => {
                self.advance();
                self.expect_punct("(")?;
                let cond = self.condition()?;
                self.expect_punct(")")?;
                let then_branch = Box::new(self.sub_statement()?);
                let else_branch = if self.eat_kw(Keyword::Else) {
                    Some(Box::new(self.sub_statement()?))
                } else {
                    None
                };
                let end = self.prev_span();
                Ok(Stmt {
                    kind: StmtKind::If {
                        cond,
                        then_branch,
                        else_branch,
                    },
                    span: start.to(end),
                })
            }
            Tok::Kw(Keyword::While) => {
                self.advance();
                self.expect_punct("(")?;
                let cond = self.condition()?;
                self.expect_punct(")")?;
                let body = Box::new(self.sub_statement()?);
                let end = self.prev_span();
                Ok(Stmt {
                    kind: StmtKind::While { cond, body },
                    span: start.to(end),
                })
            }
            Tok::Kw(Keyword::For) => {
                self.advance();
                self.expect_punct("(")?;
                self.scopes.push(HashMap::new());
                let result = self.for_rest(start);
                self.scopes.pop();
                result
            }
            Tok::Kw(Keyword::Return) => {
                self.advance();
                let value = if self.is_punct(";") {
                    None
                } else {
                    Some(self.expr()?)
                };
                let end = self.expect_punct(";")?;
                Ok(Stmt {
                    kind: StmtKind::Return(value),
                    span: start.to(end),
                })
            }
            Tok::Kw(
                k @ (Keyword::Break
                | Keyword::Continue
                | Keyword::Do
                | Keyword::Switch
                | Keyword::Goto),
            ) => self.unsupported(&format!("`{}` statement", k.text()), start),
            Tok::Kw(Keyword::Else) => self.expected("statement"),
            _ => {
                let s = self.simple_statement()?;
                let end = self.expect_punct(";")?;
                Ok(Stmt {
                    kind: s.kind,
                    span: s.span.to(end),
                })
            }
        }
    }

    fn for_rest(&mut self, start: Span) -> PResult<Stmt> {
        let init = if self.is_punct(";") {
            None
        } else if self.starts_decl() {
            let mut decls = self.local_decl()?;
            if decls.len() != 1 {
                return self.unsupported("multiple declarators in `for` initializer", start);
            }
            let d = decls.remove(0);
            Some(Box::new(Stmt {
                span: d.span,
                kind: StmtKind::Decl(d),
            }))
        } else {
            Some(Box::new(self.simple_statement()?))
        };
        self.expect_punct(";")?;
        let cond = if self.is_punct(";") {
            None
        } else {
            Some(self.condition()?)
        };
        self.expect_punct(";")?;
        let step = if self.is_punct(")") {
            None
        } else {
            Some(Box::new(self.simple_statement()?))
        };
        self.expect_punct(")")?;
        let body = Box::new(self.sub_statement()?);
        let end = self.prev_span();
        Ok(Stmt {
            kind: StmtKind::For {
                init,
                cond,
                step,
                body,
            },
            span: start.to(end),
        })
    }

    /// Assignment, increment, or expression statement without the trailing `;`.
    fn simple_statement(&mut self) -> PResult<Stmt> {
        let start = self.span();
        if self.is_punct("++") || self.is_punct("--") {
            let inc = self.is_punct("++");
            self.advance();
            let target = self.unary()?;
            self.check_lvalue(&target)?;
            return Ok(self.increment(target, inc, start));
        }
        let lhs = self.expr()?;
        let op = match self.peek() {
            Tok::Punct("=") => Some(AssignOp::Assign),
            Tok::Punct("+=") => Some(AssignOp::Add),
            Tok::Punct("-=") => Some(AssignOp::Sub),
            Tok::Punct("*=") => Some(AssignOp::Mul),
            Tok::Punct("/=") => Some(AssignOp::Div),
            Tok::Punct(p @ ("%=" | "<<=" | ">>=" | "&=" | "|=" | "^=")) => {
                let p = *p;
                return self.unsupported(&format!("`{p}` assignment"), self.span());
            }
            Tok::Punct(p @ ("++" | "--")) => {
                let inc = *p == "++";
                self.advance();
                self.check_lvalue(&lhs)?;
                return Ok(self.increment(lhs, inc, start));
            }
            _ => None,
        };
        match op {
            Some(op) => {
                self.advance();
                self.check_lvalue(&lhs)?;
                let value = self.expr()?;
                if op == AssignOp::Assign {
                    let tty = match &lhs.ty {
                        ValueType::Int(k) => Type::Int(*k),
                        ValueType::Ptr(t) => Type::Ptr(Box::new(t.clone())),
                        ValueType::Struct(s) => Type::Struct(s.clone()),
                        ValueType::Void => Type::Void,
                    };
                    self.check_assignable(&tty, &value)?;
                } else if lhs.int_kind().is_none() || value.int_kind().is_none() {
                    return self.unsupported("compound assignment on non-integer", start);
                }
                let span = start.to(self.prev_span());
                Ok(Stmt {
                    kind: StmtKind::Assign {
                        target: lhs,
                        op,
                        value,
                    },
                    span,
                })
            }
            None => {
                let span = lhs.span;
                Ok(Stmt {
                    kind: StmtKind::Expr(lhs),
                    span,
                })
            }
        }
    }

    fn increment(&mut self, target: Expr, inc: bool, start: Span) -> Stmt {
        let span = start.to(self.prev_span());
        let one = Expr {
            kind: ExprKind::IntLit(BigInt::from(1)),
            ty: ValueType::Int(IntKind::Int),
            span,
        };
        Stmt {
            kind: StmtKind::Assign {
                target,
                op: if inc { AssignOp::Add } else { AssignOp::Sub },
                value: one,
            },
            span,
        }
    }

    fn check_lvalue(&self, e: &Expr) -> PResult<()> {
        match &e.kind {
            ExprKind::Var { .. } | ExprKind::Member { .. } | ExprKind::Deref(_) => Ok(()),
            _ => self.semantic("expression is not assignable".into(), e.span),
        }
    }

    fn check_assignable(&self, ty: &Type, value: &Expr) -> PResult<()> {
        if self.skip_bodies {
            return Ok(());
        }
        let ok = match (ty, &value.ty) {
            (Type::Int(_), ValueType::Int(_)) => true,
            (Type::Ptr(_), ValueType::Ptr(_)) => true,
            (Type::Ptr(_), ValueType::Int(_)) => {
                matches!(&value.kind, ExprKind::IntLit(v) if *v == BigInt::from(0))
            }
            (Type::Struct(a), ValueType::Struct(b)) => a == b,
            _ => false,
        };
        if ok {
            Ok(())
        } else {
            self.semantic("incompatible types in assignment".into(), value.span)
        }
    }

    // ---- expressions ----

    fn condition(&mut self) -> PResult<Expr> {
        let e = self.expr()?;
        if e.int_kind().is_none() && !self.skip_bodies {
            return self.semantic("condition must be an integer expression".into(), e.span);
        }
        Ok(e)
    }

    pub fn expr(&mut self) -> PResult<Expr> {
        let e = self.binary(1)?;
        if self.is_punct("?") {
            return self.unsupported("conditional operator", self.span());
        }
        Ok(e)
    }

    fn binop_here(&self) -> PResult<Option<BinOp>> {
        Ok(match self.peek() {
            Tok::Punct(p) => match *p {
                "||" => Some(BinOp::Or),
                "&&" => Some(BinOp::And),
                "==" => Some(BinOp::Eq),
                "!=" => Some(BinOp::Ne),
                "<" => Some(BinOp::Lt),
                "<=" => Some(BinOp::Le),
                ">" => Some(BinOp::Gt),
                ">=" => Some(BinOp::Ge),
                "+" => Some(BinOp::Add),
                "-" => Some(BinOp::Sub),
                "*" => Some(BinOp::Mul),
                "/" => Some(BinOp::Div),
                "%" | "<<" | ">>" | "|" | "^" => {
                    return self.unsupported(&format!("`{p}` operator"), self.span())
                }
                "&" => return self.unsupported("bitwise `&` operator", self.span()),
                _ => None,
            },
            _ => None,
        })
    }

    fn binary(&mut self, min_prec: u8) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.binop_here()? {
            let prec = op.precedence();
            if prec < min_prec {
                break;
            }
            self.advance();
            let rhs = self.binary(prec + 1)?;
            lhs = self.make_binary(op, lhs, rhs)?;
        }
        Ok(lhs)
    }

    fn make_binary(&self, op: BinOp, lhs: Expr, rhs: Expr) -> PResult<Expr> {
        let span = lhs.span.to(rhs.span);
        let ty = if self.skip_bodies {
            ValueType::Int(IntKind::Int)
        } else {
            match (lhs.int_kind(), rhs.int_kind()) {
                (Some(a), Some(b)) => {
                    if op.is_arithmetic() {
                        ValueType::Int(IntKind::arithmetic_result(a, b))
                    } else {
                        ValueType::Int(IntKind::Int)
                    }
                }
                _ if op.is_comparison() && lhs.ty != ValueType::Void && rhs.ty != ValueType::Void => {
                    if matches!(lhs.ty, ValueType::Struct(_)) || matches!(rhs.ty, ValueType::Struct(_)) {
                        return self.semantic("struct operand in comparison".into(), span);
                    }
                    ValueType::Int(IntKind::Int)
                }
                _ if op.is_arithmetic() => {
                    return self.unsupported("pointer arithmetic", span);
                }
                _ => return self.semantic(format!("invalid operands to `{}`", op.text()), span),
            }
        };
        Ok(Expr {
            kind: ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)),
            ty,
            span,
        })
    }

    fn unary(&mut self) -> PResult<Expr> {
        let start = self.span();
        match self.peek().clone() {
            Tok::Punct("-") => {
                self.advance();
                let e = self.unary()?;
                let kind = e.int_kind();
                if kind.is_none() && !self.skip_bodies {
                    return self.semantic("negation of non-integer".into(), e.span);
                }
                let k = kind.map(|k| IntKind::arithmetic_result(k, k)).unwrap_or(IntKind::Int);
                let span = start.to(e.span);
                Ok(Expr {
                    kind: ExprKind::Unary(UnOp::Neg, Box::new(e)),
                    ty: ValueType::Int(k),
                    span,
                })
            }
            Tok::Punct("+") => {
                self.advance();
                self.unary()
            }
            Tok::Punct("!") => {
                self.advance();
                let e = self.unary()?;
                let span = start.to(e.span);
                Ok(Expr {
                    kind: ExprKind::Unary(UnOp::Not, Box::new(e)),
                    ty: ValueType::Int(IntKind::Int),
                    span,
                })
            }
            Tok::Punct("*") => {
                self.advance();
                let e = self.unary()?;
                let span = start.to(e.span);
                let ty = match &e.ty {
                    ValueType::Ptr(t) => ValueType::from_type(t),
                    _ if self.skip_bodies => ValueType::Int(IntKind::Int),
                    _ => return self.semantic("dereference of non-pointer".into(), span),
                };
                if ty == ValueType::Void && !self.skip_bodies {
                    return self.semantic("dereference of void pointer".into(), span);
                }
                Ok(Expr {
                    kind: ExprKind::Deref(Box::new(e)),
                    ty,
                    span,
                })
            }
            Tok::Punct("&") => {
                self.advance();
                let e = self.unary()?;
                let span = start.to(e.span);
                let inner = match &e.ty {
                    ValueType::Int(k) => Type::Int(*k),
                    ValueType::Ptr(t) => Type::Ptr(Box::new(t.clone())),
                    ValueType::Struct(s) => Type::Struct(s.clone()),
                    ValueType::Void => Type::Void,
                };
                Ok(Expr {
                    kind: ExprKind::AddrOf(Box::new(e)),
                    ty: ValueType::Ptr(inner),
                    span,
                })
            }
            Tok::Punct("~") => self.unsupported("bitwise complement", start),
            Tok::Punct("++") | Tok::Punct("--") => {
                self.unsupported("increment inside an expression", start)
            }
            Tok::Kw(Keyword::Sizeof) => self.unsupported("sizeof", start),
            _ => self.postfix(),
        }
    }

    fn postfix(&mut self) -> PResult<Expr> {
        let mut e = self.primary()?;
        loop {
            if self.is_punct(".") || self.is_punct("->") {
                let arrow = self.is_punct("->");
                self.advance();
                let (field, fspan) = self.expect_ident()?;
                let span = e.span.to(fspan);
                let ty = if self.skip_bodies {
                    ValueType::Int(IntKind::Int)
                } else {
                    let strukt = match (&e.ty, arrow) {
                        (ValueType::Struct(s), false) => s.clone(),
                        (ValueType::Ptr(Type::Struct(s)), true) => s.clone(),
                        _ => {
                            return self.semantic(
                                format!("member access `{field}` on non-struct"),
                                span,
                            )
                        }
                    };
                    let layout = self.struct_layout(&strukt).ok_or(FrontendError::UnknownField {
                        field: field.clone(),
                    })?;
                    let fty = layout.field(&field).ok_or(FrontendError::UnknownField {
                        field: field.clone(),
                    })?;
                    ValueType::from_type(fty)
                };
                e = Expr {
                    kind: ExprKind::Member {
                        base: Box::new(e),
                        field,
                        arrow,
                    },
                    ty,
                    span,
                };
            } else if self.is_punct("[") {
                return self.unsupported("array subscript", self.span());
            } else if self.is_punct("(") {
                return self.unsupported("call through expression", self.span());
            } else {
                return Ok(e);
            }
        }
    }

    fn primary(&mut self) -> PResult<Expr> {
        let start = self.span();
        match self.peek().clone() {
            Tok::Int { value, unsigned } => {
                self.advance();
                let kind = IntKind::for_literal(&value, unsigned);
                Ok(Expr {
                    kind: ExprKind::IntLit(value),
                    ty: ValueType::Int(kind),
                    span: start,
                })
            }
            Tok::Str(s) => {
                self.advance();
                let mut text = s;
                let mut span = start;
                // Adjacent literals concatenate.
                while let Tok::Str(more) = self.peek().clone() {
                    text.push_str(&more);
                    span = span.to(self.advance().span);
                }
                Ok(Expr {
                    kind: ExprKind::StrLit(text),
                    ty: ValueType::Ptr(Type::Int(IntKind::Char)),
                    span,
                })
            }
            Tok::Limit(m) => {
                self.advance();
                Ok(Expr {
                    kind: ExprKind::Limit(m),
                    ty: ValueType::Int(m.kind()),
                    span: start,
                })
            }
            Tok::Punct("(") => {
                if matches!(
                    self.peek_at(1),
                    Tok::Kw(
                        Keyword::Char
                            | Keyword::Short
                            | Keyword::Int
                            | Keyword::Long
                            | Keyword::Unsigned
                            | Keyword::Signed
                            | Keyword::Void
                            | Keyword::Struct
                            | Keyword::Int64T
                            | Keyword::Const
                    )
                ) {
                    return self.unsupported("cast expression", start);
                }
                self.advance();
                let e = self.expr()?;
                let close = self.expect_punct(")")?;
                // Parentheses only affect spans; the tree already encodes grouping.
                Ok(Expr {
                    span: start.to(close),
                    ..e
                })
            }
            Tok::Ident(name) => {
                self.advance();
                if self.is_punct("(") {
                    return self.call(name, start);
                }
                if self.skip_bodies {
                    return Ok(Expr {
                        kind: ExprKind::Var { name, decl: 0 },
                        ty: ValueType::Int(IntKind::Int),
                        span: start,
                    });
                }
                let Some(decl) = self.lookup(&name) else {
                    return self.semantic(format!("use of undeclared identifier `{name}`"), start);
                };
                let ty = ValueType::from_type(&self.vars[decl].ty);
                Ok(Expr {
                    kind: ExprKind::Var { name, decl },
                    ty,
                    span: start,
                })
            }
            _ => self.expected("expression"),
        }
    }

    fn call(&mut self, callee: String, start: Span) -> PResult<Expr> {
        self.expect_punct("(")?;
        let mut args = Vec::new();
        if !self.is_punct(")") {
            loop {
                args.push(self.expr()?);
                if !self.eat_punct(",") {
                    break;
                }
            }
        }
        let close = self.expect_punct(")")?;
        let span = start.to(close);
        let ret = self
            .funcs
            .get(&callee)
            .cloned()
            .or_else(|| library_return_type(&callee))
            .unwrap_or(Type::Int(IntKind::Int));
        if self.lookup(&callee).is_some() {
            return self.unsupported("call through variable", span);
        }
        Ok(Expr {
            kind: ExprKind::Call { callee, args },
            ty: ValueType::from_type(&ret),
            span,
        })
    }
}
