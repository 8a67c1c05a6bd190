//! Lexing, parsing and type annotation of the supported C subset.
//!
//! The subset covers integer declarations (including nested structs and
//! pointers), assignments, `+ - * /`, comparisons, `&& || !`, `if`/`else`,
//! `while`, `for`, function definitions and calls, and the five limits
//! macros. Anything else is rejected with [`FrontendError::Unsupported`].

pub mod ast;
pub mod lexer;
mod parser;
pub mod pretty;
pub mod span;
pub mod types;

use thiserror::Error;

pub use ast::*;
pub use parser::library_return_type;
pub use span::Span;
pub use types::{IntKind, LimitMacro, StructLayout, Type};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FrontendError {
    #[error("{line}:{col}: syntax error: expected {expected}")]
    Syntax {
        line: u32,
        col: u32,
        expected: String,
    },
    #[error("{}:{}: unsupported construct: {construct}", span.line, span.col)]
    Unsupported { construct: String, span: Span },
    #[error("{}:{}: {message}", span.line, span.col)]
    Semantic { message: String, span: Span },
    #[error("unknown field `{field}`")]
    UnknownField { field: String },
}

impl FrontendError {
    /// One-line diagnostic in `file:line:col: message` form.
    pub fn render(&self, file: &str) -> String {
        match self {
            FrontendError::Syntax {
                line,
                col,
                expected,
            } => format!("{file}:{line}:{col}: syntax error: expected {expected}"),
            FrontendError::Unsupported { construct, span } => format!(
                "{file}:{}:{}: unsupported construct: {construct}",
                span.line, span.col
            ),
            FrontendError::Semantic { message, span } => {
                format!("{file}:{}:{}: {message}", span.line, span.col)
            }
            FrontendError::UnknownField { field } => {
                format!("{file}:0:0: unknown field `{field}`")
            }
        }
    }
}

pub fn parse_translation_unit(source: &str, file_name: &str) -> Result<TypedAst, FrontendError> {
    parser::parse(source, file_name)
}

/// A dotted access path rooted at a variable, e.g. `s.inner.v`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldPath {
    pub root: String,
    pub fields: Vec<String>,
}

impl FieldPath {
    pub fn parse(path: &str) -> FieldPath {
        let mut parts = path.split('.').map(str::to_string);
        let root = parts.next().unwrap_or_default();
        FieldPath {
            root,
            fields: parts.collect(),
        }
    }
}

/// Resolve the integer kind at the end of a struct access path.
///
/// The root variable is looked up among globals first, then among function
/// locals in source order.
pub fn resolve_field_type(ast: &TypedAst, path: &FieldPath) -> Result<IntKind, FrontendError> {
    let root = ast
        .vars
        .iter()
        .filter(|v| v.name == path.root)
        .min_by_key(|v| (v.scope != ast::VarScope::Global, v.span.start))
        .ok_or_else(|| FrontendError::UnknownField {
            field: path.root.clone(),
        })?;
    let mut ty = root.ty.clone();
    for field in &path.fields {
        let strukt = match &ty {
            Type::Struct(name) => name.clone(),
            Type::Ptr(inner) => match &**inner {
                Type::Struct(name) => name.clone(),
                _ => {
                    return Err(FrontendError::UnknownField {
                        field: field.clone(),
                    })
                }
            },
            _ => {
                return Err(FrontendError::UnknownField {
                    field: field.clone(),
                })
            }
        };
        let layout = ast
            .struct_layout(&strukt)
            .ok_or_else(|| FrontendError::UnknownField {
                field: field.clone(),
            })?;
        ty = layout
            .field(field)
            .cloned()
            .ok_or_else(|| FrontendError::UnknownField {
                field: field.clone(),
            })?;
    }
    ty.int_kind().ok_or_else(|| FrontendError::UnknownField {
        field: path.fields.last().cloned().unwrap_or(path.root.clone()),
    })
}
