//! Repair patterns: a property list scored against the buggy statement and a
//! guard template with placeholders.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::checker::{isqrt, BoundInfo};
use crate::frontend::pretty::type_text;
use crate::frontend::{BinOp, Expr, ExprKind, IntKind, Span, Stmt, StmtKind, Type, UnOp};

use super::RepairError;

const DEFAULT_POOL: &str = include_str!("patterns.toml");

#[derive(Debug, Error)]
pub enum PatternError {
    #[error("pattern pool: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("pattern pool: {0}")]
    Io(#[from] std::io::Error),
    #[error("pattern pool is empty")]
    EmptyPool,
    #[error("unknown pattern property `{0}`")]
    BadProperty(String),
}

/// A fact about the buggy statement a pattern can require.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Property {
    Operator(BinOp),
    OperandsEqual,
    OperandsDistinct,
    ConstantOperand,
    OperandCount(usize),
}

impl FromStr for Property {
    type Err = PatternError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || PatternError::BadProperty(s.to_string());
        Ok(match s.trim() {
            "operands_equal" => Property::OperandsEqual,
            "operands_distinct" => Property::OperandsDistinct,
            "constant_operand" => Property::ConstantOperand,
            other => {
                if let Some(op) = other.strip_prefix("operator=") {
                    let op = match op {
                        "+" => BinOp::Add,
                        "-" => BinOp::Sub,
                        "*" => BinOp::Mul,
                        "/" => BinOp::Div,
                        _ => return Err(bad()),
                    };
                    Property::Operator(op)
                } else if let Some(n) = other.strip_prefix("operand_count=") {
                    Property::OperandCount(n.parse().map_err(|_| bad())?)
                } else {
                    return Err(bad());
                }
            }
        })
    }
}

impl TryFrom<String> for Property {
    type Error = PatternError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<Property> for String {
    fn from(p: Property) -> String {
        p.to_string()
    }
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Property::Operator(op) => write!(f, "operator={}", op.text()),
            Property::OperandsEqual => f.write_str("operands_equal"),
            Property::OperandsDistinct => f.write_str("operands_distinct"),
            Property::ConstantOperand => f.write_str("constant_operand"),
            Property::OperandCount(n) => write!(f, "operand_count={n}"),
        }
    }
}

/// How `value4`/`value5` are computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PatternKind {
    Square,
    Add,
    Multiply,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HandlerVariant {
    /// Log a line and continue.
    V1,
    /// Call a handler function whose definition is injected once per file.
    #[default]
    V2,
}

impl FromStr for HandlerVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "v1" => Ok(HandlerVariant::V1),
            "v2" => Ok(HandlerVariant::V2),
            _ => Err(format!("unknown handler variant `{s}` (expected v1 or v2)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HandlerTemplates {
    pub v1: String,
    pub v2: String,
    pub v2_name: String,
    pub v2_prelude: String,
}

impl HandlerTemplates {
    pub fn call(&self, variant: HandlerVariant) -> &str {
        match variant {
            HandlerVariant::V1 => &self.v1,
            HandlerVariant::V2 => &self.v2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepairPattern {
    pub id: String,
    pub kind: PatternKind,
    pub properties: Vec<Property>,
    pub template: String,
}

impl RepairPattern {
    pub fn score(&self, facts: &StmtFacts) -> usize {
        self.properties.iter().filter(|p| facts.satisfies(**p)).count()
    }

    pub fn template_lines(&self) -> usize {
        self.template.lines().count()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternPool {
    pub handlers: HandlerTemplates,
    #[serde(rename = "pattern")]
    pub patterns: Vec<RepairPattern>,
}

impl PatternPool {
    pub fn parse(text: &str) -> Result<PatternPool, PatternError> {
        let pool: PatternPool = toml::from_str(text)?;
        if pool.patterns.is_empty() {
            return Err(PatternError::EmptyPool);
        }
        Ok(pool)
    }

    pub fn load(path: &Path) -> Result<PatternPool, PatternError> {
        PatternPool::parse(&std::fs::read_to_string(path)?)
    }

    pub fn get(&self, id: &str) -> Option<&RepairPattern> {
        self.patterns.iter().find(|p| p.id == id)
    }
}

impl Default for PatternPool {
    fn default() -> Self {
        PatternPool::parse(DEFAULT_POOL).expect("built-in pattern pool parses")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OperandFact {
    /// Source text, whitespace collapsed.
    pub text: String,
    pub constant: Option<BigInt>,
    pub kind: Option<IntKind>,
}

impl OperandFact {
    fn from_expr(e: &Expr, source: &str) -> OperandFact {
        OperandFact {
            text: collapse(e.span.text(source)),
            constant: literal_value(e),
            kind: e.int_kind(),
        }
    }

    /// Text safe to embed as a comparison operand.
    pub fn guarded_text(&self) -> String {
        let simple = self
            .text
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.')
            || (self.text.starts_with('(') && self.text.ends_with(')'));
        if simple {
            self.text.clone()
        } else {
            format!("({})", self.text)
        }
    }

    fn bare(&self) -> &str {
        let mut t = self.text.as_str();
        while t.starts_with('(') && t.ends_with(')') {
            t = t[1..t.len() - 1].trim();
        }
        t
    }
}

/// Facts about an assignment statement used for pattern selection.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StmtFacts {
    pub span: Span,
    /// Assigned variable text.
    pub target: String,
    /// Top-level operator of the assigned value (compound assignments use
    /// their arithmetic operator with the target as first operand).
    pub operator: Option<BinOp>,
    pub operands: Vec<OperandFact>,
    /// Declared type when the statement is a declaration; the repair then
    /// hoists the declaration above the guard.
    pub declared: Option<Type>,
    /// The statement as an assignment (declarations rewritten).
    pub assignment: String,
}

fn collapse(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn literal_value(e: &Expr) -> Option<BigInt> {
    match &e.kind {
        ExprKind::IntLit(n) => Some(n.clone()),
        ExprKind::Unary(UnOp::Neg, inner) => literal_value(inner).map(|v| -v),
        _ => None,
    }
}

impl StmtFacts {
    /// `None` for statements that are not assignments.
    pub fn from_stmt(stmt: &Stmt, source: &str) -> Option<StmtFacts> {
        let text = collapse(stmt.span.text(source));
        let (target, value, compound, declared, assignment) = match &stmt.kind {
            StmtKind::Decl(d) => {
                let init = d.init.as_ref()?;
                let assignment = format!("{} = {};", d.name, collapse(init.span.text(source)));
                (d.name.clone(), init, None, Some(d.ty.clone()), assignment)
            }
            StmtKind::Assign { target, op, value } => (
                collapse(target.span.text(source)),
                value,
                op.binary().map(|b| (b, target)),
                None,
                text,
            ),
            _ => return None,
        };
        let (operator, operands) = match compound {
            Some((op, t)) => (
                Some(op),
                vec![OperandFact::from_expr(t, source), OperandFact::from_expr(value, source)],
            ),
            None => match &value.kind {
                ExprKind::Binary(op, a, b) if op.is_arithmetic() => (
                    Some(*op),
                    vec![OperandFact::from_expr(a, source), OperandFact::from_expr(b, source)],
                ),
                _ => (None, vec![OperandFact::from_expr(value, source)]),
            },
        };
        Some(StmtFacts {
            span: stmt.span,
            target,
            operator,
            operands,
            declared,
            assignment,
        })
    }

    fn operands_equal(&self) -> bool {
        self.operands.len() == 2 && self.operands[0].bare() == self.operands[1].bare()
    }

    pub fn satisfies(&self, p: Property) -> bool {
        match p {
            Property::Operator(op) => self.operator == Some(op),
            Property::OperandsEqual => self.operands_equal(),
            Property::OperandsDistinct => self.operands.len() == 2 && !self.operands_equal(),
            Property::ConstantOperand => self.operands.iter().any(|o| o.constant.is_some()),
            Property::OperandCount(n) => self.operands.len() == n,
        }
    }
}

/// Highest-scoring pattern; ties go to the earliest in the pool.
pub fn select_pattern<'p>(
    facts: &StmtFacts,
    pool: &'p [RepairPattern],
) -> Result<&'p RepairPattern, RepairError> {
    let mut best: Option<(&RepairPattern, usize)> = None;
    for p in pool {
        let s = p.score(facts);
        if s > best.map_or(0, |(_, b)| b) {
            best = Some((p, s));
        }
    }
    best.map(|(p, _)| p).ok_or(RepairError::NoApplicablePattern)
}

/// The guard's operand limits, as C expression text.
fn operand_limits(
    kind: PatternKind,
    facts: &StmtFacts,
    bound: &BoundInfo,
) -> Result<(OperandFact, String, String), RepairError> {
    let mismatch = |why: &str| RepairError::PatternMismatch(why.to_string());
    let (upper, lower) = (&bound.upper, &bound.lower);
    if facts.operands.len() != 2 {
        return Err(mismatch("statement has no binary operator"));
    }
    let (a, b) = (&facts.operands[0], &facts.operands[1]);
    // The variable operand first, the other (constant when there is one) second.
    let (var, other) = if a.constant.is_some() { (b, a) } else { (a, b) };
    if var.constant.is_some() {
        return Err(mismatch("both operands are constants"));
    }
    let clamp = |v: BigInt| -> String {
        match var.kind {
            Some(k) if !k.signed() && v < k.min_value() => k.min_value().to_string(),
            _ => v.to_string(),
        }
    };
    Ok(match kind {
        PatternKind::Square => {
            if facts.operator != Some(BinOp::Mul) || !facts.operands_equal() {
                return Err(mismatch("square pattern needs `x * x`"));
            }
            let r = isqrt(upper);
            let low = if lower >= &BigInt::from(0) { BigInt::from(0) } else { -r.clone() };
            (var.clone(), r.to_string(), clamp(low))
        }
        PatternKind::Add => {
            if facts.operator != Some(BinOp::Add) {
                return Err(mismatch("add pattern needs `+`"));
            }
            match &other.constant {
                Some(c) => (var.clone(), (upper - c).to_string(), clamp(lower - c)),
                None => {
                    let o = other.guarded_text();
                    (var.clone(), format!("{upper} - {o}"), format!("{lower} - {o}"))
                }
            }
        }
        PatternKind::Multiply => {
            if facts.operator != Some(BinOp::Mul) {
                return Err(mismatch("multiply pattern needs `*`"));
            }
            let c = other
                .constant
                .as_ref()
                .ok_or_else(|| mismatch("multiply pattern needs a constant operand"))?;
            let zero = BigInt::from(0);
            if c == &zero {
                return Err(mismatch("multiplication by zero cannot overflow"));
            }
            // v * c within [lower, upper], exactly, for either sign of c.
            let (hi, lo) = if c > &zero {
                (upper.div_floor(c), lower.div_ceil(c))
            } else {
                (lower.div_floor(c), upper.div_ceil(c))
            };
            (var.clone(), hi.to_string(), clamp(lo))
        }
    })
}

/// Concrete report data bound into the template.
#[derive(Debug, Clone)]
pub struct ReportFields<'a> {
    pub file: &'a str,
    pub problem_id: &'a str,
    pub line: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Instantiation {
    pub bindings: BTreeMap<String, String>,
    /// Replacement for the buggy statement, unindented.
    pub code: String,
}

fn c_string(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Replace every `{name}` placeholder; an unknown name is an error.
pub fn fill(template: &str, bindings: &BTreeMap<String, String>) -> Result<String, RepairError> {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        let name_len = after
            .find(|c: char| !(c.is_ascii_alphanumeric() || c == '_'))
            .unwrap_or(after.len());
        if name_len > 0 && after[name_len..].starts_with('}') {
            let name = &after[..name_len];
            let value = bindings
                .get(name)
                .ok_or_else(|| RepairError::UnboundPlaceholder(name.to_string()))?;
            out.push_str(value);
            rest = &after[name_len + 1..];
        } else {
            out.push('{');
            rest = after;
        }
    }
    out.push_str(rest);
    Ok(out)
}

pub fn instantiate_pattern(
    pattern: &RepairPattern,
    facts: &StmtFacts,
    bound: &BoundInfo,
    report: &ReportFields<'_>,
    handlers: &HandlerTemplates,
    variant: HandlerVariant,
) -> Result<Instantiation, RepairError> {
    let (operand, value4, value5) = operand_limits(pattern.kind, facts, bound)?;
    let mut b = BTreeMap::new();
    b.insert("FileName".to_string(), c_string(report.file));
    b.insert("IO_ID".to_string(), c_string(report.problem_id));
    b.insert("LineNumber".to_string(), report.line.to_string());
    let handler = fill(handlers.call(variant), &b)?;
    b.insert("handler".to_string(), handler);
    b.insert("operand".to_string(), operand.guarded_text());
    b.insert("value4".to_string(), value4);
    b.insert("value5".to_string(), value5);
    b.insert("buggyStm10".to_string(), facts.assignment.clone());
    let guard = fill(&pattern.template, &b)?;
    let code = match &facts.declared {
        Some(ty) => format!("{} {} = 0;\n{guard}", type_text(ty), facts.target),
        None => guard,
    };
    Ok(Instantiation { bindings: b, code })
}
