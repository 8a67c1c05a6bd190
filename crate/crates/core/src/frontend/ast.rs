use num_bigint::BigInt;
use serde::{Deserialize, Serialize};

use super::span::Span;
use super::types::{IntKind, LimitMacro, StructLayout, Type};

/// Index into [`TypedAst::vars`].
pub type DeclId = usize;

/// Parsed and type-annotated translation unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypedAst {
    pub file: String,
    pub source_len: usize,
    pub items: Vec<Item>,
    pub structs: Vec<StructLayout>,
    pub vars: Vec<VarInfo>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarScope {
    Global,
    Param,
    Local,
}

/// One declared variable. `unique` is distinct within its function (and among
/// globals) so symbolic stores can key on it directly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarInfo {
    pub name: String,
    pub unique: String,
    pub ty: Type,
    pub scope: VarScope,
    pub function: Option<String>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Item {
    Struct { name: String, span: Span },
    Global(VarDecl),
    Function(FunctionDef),
    Prototype(FunctionSig),
}

impl Item {
    pub fn span(&self) -> Span {
        match self {
            Item::Struct { span, .. } => *span,
            Item::Global(d) => d.span,
            Item::Function(f) => f.span,
            Item::Prototype(s) => s.span,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionSig {
    pub name: String,
    pub ret: Type,
    pub params: Vec<Param>,
    pub is_static: bool,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Param {
    pub name: String,
    pub ty: Type,
    pub decl: DeclId,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionDef {
    pub sig: FunctionSig,
    pub body: Block,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub stmts: Vec<Stmt>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarDecl {
    pub decl: DeclId,
    pub name: String,
    pub ty: Type,
    pub is_const: bool,
    pub init: Option<Expr>,
    pub span: Span,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssignOp {
    Assign,
    Add,
    Sub,
    Mul,
    Div,
}

impl AssignOp {
    pub fn text(self) -> &'static str {
        match self {
            AssignOp::Assign => "=",
            AssignOp::Add => "+=",
            AssignOp::Sub => "-=",
            AssignOp::Mul => "*=",
            AssignOp::Div => "/=",
        }
    }

    pub fn binary(self) -> Option<BinOp> {
        match self {
            AssignOp::Assign => None,
            AssignOp::Add => Some(BinOp::Add),
            AssignOp::Sub => Some(BinOp::Sub),
            AssignOp::Mul => Some(BinOp::Mul),
            AssignOp::Div => Some(BinOp::Div),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stmt {
    pub kind: StmtKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StmtKind {
    Decl(VarDecl),
    Assign {
        target: Expr,
        op: AssignOp,
        value: Expr,
    },
    Expr(Expr),
    If {
        cond: Expr,
        then_branch: Box<Stmt>,
        else_branch: Option<Box<Stmt>>,
    },
    While {
        cond: Expr,
        body: Box<Stmt>,
    },
    For {
        init: Option<Box<Stmt>>,
        cond: Option<Expr>,
        step: Option<Box<Stmt>>,
        body: Box<Stmt>,
    },
    Return(Option<Expr>),
    Block(Block),
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    And,
    Or,
}

impl BinOp {
    pub fn text(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::And => "&&",
            BinOp::Or => "||",
        }
    }

    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Eq | BinOp::Ne => 3,
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 4,
            BinOp::Add | BinOp::Sub => 5,
            BinOp::Mul | BinOp::Div => 6,
        }
    }

    pub fn is_arithmetic(self) -> bool {
        matches!(self, BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div)
    }

    pub fn is_comparison(self) -> bool {
        matches!(
            self,
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge | BinOp::Eq | BinOp::Ne
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnOp {
    Neg,
    Not,
}

/// Resolved type of an expression. Integer-valued expressions carry exactly
/// one [`IntKind`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValueType {
    Int(IntKind),
    Ptr(Type),
    Struct(String),
    Void,
}

impl ValueType {
    pub fn from_type(ty: &Type) -> ValueType {
        match ty {
            Type::Void => ValueType::Void,
            Type::Int(k) => ValueType::Int(*k),
            Type::Ptr(inner) => ValueType::Ptr((**inner).clone()),
            Type::Struct(s) => ValueType::Struct(s.clone()),
        }
    }

    pub fn int_kind(&self) -> Option<IntKind> {
        match self {
            ValueType::Int(k) => Some(*k),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Expr {
    pub kind: ExprKind,
    pub ty: ValueType,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExprKind {
    IntLit(BigInt),
    StrLit(String),
    Var { name: String, decl: DeclId },
    Limit(LimitMacro),
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call { callee: String, args: Vec<Expr> },
    Member { base: Box<Expr>, field: String, arrow: bool },
    Deref(Box<Expr>),
    AddrOf(Box<Expr>),
    /// Compiler-introduced temporary (hoisted call results); never produced
    /// by the parser.
    Temp(String),
}

impl Expr {
    pub fn int_kind(&self) -> Option<IntKind> {
        self.ty.int_kind()
    }

    /// Does the expression contain an arithmetic operator anywhere?
    pub fn has_arithmetic(&self) -> bool {
        match &self.kind {
            ExprKind::Binary(op, a, b) => {
                op.is_arithmetic() || a.has_arithmetic() || b.has_arithmetic()
            }
            ExprKind::Unary(UnOp::Neg, e) => {
                !matches!(e.kind, ExprKind::IntLit(_)) || e.has_arithmetic()
            }
            ExprKind::Unary(UnOp::Not, e) => e.has_arithmetic(),
            _ => false,
        }
    }

    pub fn visit<'a>(&'a self, f: &mut dyn FnMut(&'a Expr)) {
        f(self);
        match &self.kind {
            ExprKind::Unary(_, e) | ExprKind::Deref(e) | ExprKind::AddrOf(e) => e.visit(f),
            ExprKind::Member { base, .. } => base.visit(f),
            ExprKind::Binary(_, a, b) => {
                a.visit(f);
                b.visit(f);
            }
            ExprKind::Call { args, .. } => args.iter().for_each(|a| a.visit(f)),
            _ => {}
        }
    }
}

impl TypedAst {
    pub fn functions(&self) -> impl Iterator<Item = &FunctionDef> {
        self.items.iter().filter_map(|i| match i {
            Item::Function(f) => Some(f),
            _ => None,
        })
    }

    pub fn function(&self, name: &str) -> Option<&FunctionDef> {
        self.functions().find(|f| f.sig.name == name)
    }

    pub fn globals(&self) -> impl Iterator<Item = &VarDecl> {
        self.items.iter().filter_map(|i| match i {
            Item::Global(d) => Some(d),
            _ => None,
        })
    }

    pub fn struct_layout(&self, name: &str) -> Option<&StructLayout> {
        self.structs.iter().find(|s| s.name == name)
    }

    pub fn var(&self, id: DeclId) -> &VarInfo {
        &self.vars[id]
    }
}

impl Stmt {
    /// Visit this statement and every nested statement, pre-order.
    pub fn walk<'a>(&'a self, f: &mut dyn FnMut(&'a Stmt)) {
        f(self);
        match &self.kind {
            StmtKind::If {
                then_branch,
                else_branch,
                ..
            } => {
                then_branch.walk(f);
                if let Some(e) = else_branch {
                    e.walk(f);
                }
            }
            StmtKind::While { body, .. } => body.walk(f),
            StmtKind::For {
                init, step, body, ..
            } => {
                if let Some(i) = init {
                    i.walk(f);
                }
                if let Some(s) = step {
                    s.walk(f);
                }
                body.walk(f);
            }
            StmtKind::Block(b) => b.stmts.iter().for_each(|s| s.walk(f)),
            _ => {}
        }
    }

    /// Top-level expressions owned directly by this statement.
    pub fn exprs(&self) -> Vec<&Expr> {
        match &self.kind {
            StmtKind::Decl(d) => d.init.iter().collect(),
            StmtKind::Assign { target, value, .. } => vec![target, value],
            StmtKind::Expr(e) => vec![e],
            StmtKind::If { cond, .. } | StmtKind::While { cond, .. } => vec![cond],
            StmtKind::For { cond, .. } => cond.iter().collect(),
            StmtKind::Return(e) => e.iter().collect(),
            StmtKind::Block(_) | StmtKind::Empty => vec![],
        }
    }
}
