//! Integer upper bound discovery from the program and a limits header.

use std::collections::BTreeMap;
use std::path::Path;

use num_bigint::BigInt;
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frontend::{ExprKind, Item, LimitMacro, Stmt, TypedAst};

#[derive(Debug, Error)]
pub enum LimitsError {
    #[error("malformed limits file at line {line}: {text}")]
    MalformedLimitsFile { line: usize, text: String },
    #[error("cannot read limits file: {0}")]
    Io(#[from] std::io::Error),
}

/// Values of the supported limits macros, plus any minimums a limits file
/// defines.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LimitTable {
    values: BTreeMap<LimitMacro, BigInt>,
    minimums: BTreeMap<LimitMacro, BigInt>,
    from_file: bool,
}

impl Default for LimitTable {
    fn default() -> Self {
        LimitTable {
            values: LimitMacro::ALL
                .into_iter()
                .map(|m| (m, m.default_value()))
                .collect(),
            minimums: BTreeMap::new(),
            from_file: false,
        }
    }
}

/// `123`, `-5`, `255U`, `(2147483647L)`.
fn parse_int(text: &str) -> Option<BigInt> {
    let t = text.trim();
    let t = t
        .strip_prefix('(')
        .and_then(|t| t.strip_suffix(')'))
        .unwrap_or(t)
        .trim();
    let t = t.trim_end_matches(['u', 'U', 'l', 'L']);
    let (neg, digits) = match t.strip_prefix('-') {
        Some(rest) => (true, rest.trim()),
        None => (false, t),
    };
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let v: BigInt = digits.parse().ok()?;
    Some(if neg { -v } else { v })
}

impl LimitTable {
    /// Parse `#define <MACRO> <integer>` lines. Other lines and unknown
    /// macros are ignored; a supported maximum with a non-integer value is
    /// an error. Macros the file omits keep their standard values.
    pub fn parse(text: &str) -> Result<LimitTable, LimitsError> {
        let mut table = LimitTable {
            from_file: true,
            ..LimitTable::default()
        };
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            let Some(rest) = line.strip_prefix('#') else {
                continue;
            };
            let mut parts = rest.trim_start().splitn(2, char::is_whitespace);
            if parts.next() != Some("define") {
                continue;
            }
            let rest = parts.next().unwrap_or("").trim();
            let mut parts = rest.splitn(2, char::is_whitespace);
            let name = parts.next().unwrap_or("");
            let value = parts.next().unwrap_or("").trim();
            let value = value.split("/*").next().unwrap_or("").split("//").next().unwrap_or("");
            if let Some(m) = LimitMacro::from_name(name) {
                let v = parse_int(value).ok_or_else(|| LimitsError::MalformedLimitsFile {
                    line: i + 1,
                    text: raw.to_string(),
                })?;
                table.values.insert(m, v);
            } else if let Some(m) = LimitMacro::ALL.into_iter().find(|m| m.min_name() == Some(name)) {
                if let Some(v) = parse_int(value) {
                    table.minimums.insert(m, v);
                }
            }
        }
        Ok(table)
    }

    pub fn load(path: &Path) -> Result<LimitTable, LimitsError> {
        LimitTable::parse(&std::fs::read_to_string(path)?)
    }

    pub fn value(&self, m: LimitMacro) -> BigInt {
        self.values[&m].clone()
    }

    pub fn minimum(&self, m: LimitMacro) -> Option<&BigInt> {
        self.minimums.get(&m)
    }

    pub fn from_file(&self) -> bool {
        self.from_file
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundOrigin {
    LimitsFile,
    ProgramUsage,
    Default,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundInfo {
    #[serde(rename = "macro")]
    pub macro_name: LimitMacro,
    #[serde(with = "crate::serde_util::bigint_string")]
    pub upper: BigInt,
    #[serde(with = "crate::serde_util::bigint_string")]
    pub lower: BigInt,
    pub origin: BoundOrigin,
    /// The minimum a limits file defines for this macro, kept for reference.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file_min: Option<String>,
}

impl BoundInfo {
    /// Bound for `m` with the lower limit derived by negation (0 for
    /// `UINT_MAX`).
    pub fn for_macro(m: LimitMacro, table: &LimitTable, origin: BoundOrigin) -> BoundInfo {
        let upper = table.value(m);
        let lower = if m == LimitMacro::UintMax {
            BigInt::zero()
        } else {
            -upper.clone()
        };
        BoundInfo {
            macro_name: m,
            upper,
            lower,
            origin,
            file_min: table.minimum(m).map(|v| v.to_string()),
        }
    }

    /// A bound with explicit values, mainly for tests and small-width runs.
    pub fn custom(m: LimitMacro, upper: impl Into<BigInt>) -> BoundInfo {
        let upper = upper.into();
        BoundInfo {
            macro_name: m,
            lower: -upper.clone(),
            upper,
            origin: BoundOrigin::Default,
            file_min: None,
        }
    }
}

/// First limits macro in source order, if the program uses any.
pub fn first_macro_used(ast: &TypedAst) -> Option<LimitMacro> {
    let mut found: Option<(usize, LimitMacro)> = None;
    let mut note = |start: usize, m: LimitMacro| {
        if found.is_none_or(|(s, _)| start < s) {
            found = Some((start, m));
        }
    };
    let mut exprs = Vec::new();
    for item in &ast.items {
        match item {
            Item::Global(d) => exprs.extend(d.init.iter()),
            Item::Function(f) => {
                for s in &f.body.stmts {
                    s.walk(&mut |s: &Stmt| exprs.extend(s.exprs()));
                }
            }
            _ => {}
        }
    }
    for e in exprs {
        e.visit(&mut |x| {
            if let ExprKind::Limit(m) = x.kind {
                note(x.span.start, m);
            }
        });
    }
    found.map(|(_, m)| m)
}

/// The active bound: the first macro the program uses, otherwise `INT_MAX`.
/// Values come from `limits_path` when given.
pub fn discover_upper_bound(ast: &TypedAst, limits_path: Option<&Path>) -> Result<BoundInfo, LimitsError> {
    let table = match limits_path {
        Some(p) => LimitTable::load(p)?,
        None => LimitTable::default(),
    };
    Ok(bound_from_table(ast, &table))
}

pub fn bound_from_table(ast: &TypedAst, table: &LimitTable) -> BoundInfo {
    match first_macro_used(ast) {
        Some(m) => {
            let origin = if table.from_file() {
                BoundOrigin::LimitsFile
            } else {
                BoundOrigin::ProgramUsage
            };
            BoundInfo::for_macro(m, table, origin)
        }
        None => BoundInfo::for_macro(LimitMacro::IntMax, table, BoundOrigin::Default),
    }
}
