//! Per-function control-flow graphs and bounded depth-first path walking.
//!
//! Calls to functions defined in the translation unit are hoisted out of
//! expressions into dedicated call nodes whose result lands in a temporary;
//! the walker inlines them under a call string. `for` loops are lowered to
//! the `while` shape (init, header branch, body, step, back edge).

mod build;
mod walk;

use std::collections::BTreeMap;
use std::fmt::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frontend::{Expr, IntKind, Span, Stmt, TypedAst};

pub use build::build_cfg;
pub use walk::{
    enumerate_paths, BranchChoice, CallSite, Cursor, Frame, LoopVisit, PathStep, ProgramPath, Status,
};

pub type NodeId = usize;
pub type FuncId = usize;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: NodeId,
    pub kind: NodeKind,
    pub span: Span,
    /// Successors; branch nodes list the true edge first.
    pub succ: Vec<NodeId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Entry,
    Exit,
    /// Declaration, assignment, expression statement or `return`.
    Stmt(Stmt),
    Call(CallNode),
    Branch { cond: Expr, loop_id: Option<usize> },
}

/// Hoisted call to a function defined in the same translation unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CallNode {
    pub callee: String,
    pub args: Vec<Expr>,
    pub result: Option<TempVar>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TempVar {
    pub name: String,
    pub kind: IntKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoopInfo {
    pub header: NodeId,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cfg {
    pub function: String,
    pub nodes: Vec<Node>,
    pub entry: NodeId,
    pub exit: NodeId,
    pub loops: Vec<LoopInfo>,
}

impl Cfg {
    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id]
    }

    pub fn edge_count(&self) -> usize {
        self.nodes.iter().map(|n| n.succ.len()).sum()
    }

    pub fn branch_count(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n.kind, NodeKind::Branch { .. }))
            .count()
    }

    /// Text rendering, one node per line: id, kind, span, successors.
    pub fn dump(&self) -> String {
        let mut out = format!("cfg {}\n", self.function);
        for n in &self.nodes {
            let kind = match &n.kind {
                NodeKind::Entry => "entry".to_string(),
                NodeKind::Exit => "exit".to_string(),
                NodeKind::Stmt(s) => format!("stmt {}", crate::frontend::pretty::stmt_header(s)),
                NodeKind::Call(c) => match &c.result {
                    Some(t) => format!("call {} = {}(..)", t.name, c.callee),
                    None => format!("call {}(..)", c.callee),
                },
                NodeKind::Branch { cond, loop_id } => {
                    let text = crate::frontend::pretty::expr_to_string(cond);
                    match loop_id {
                        Some(l) => format!("loop#{l} ({text})"),
                        None => format!("branch ({text})"),
                    }
                }
            };
            let succ: Vec<String> = n.succ.iter().map(|s| s.to_string()).collect();
            let _ = writeln!(
                out,
                "{:>4}  {:<40} {}:{}  -> [{}]",
                n.id,
                kind,
                n.span.line,
                n.span.col,
                succ.join(", ")
            );
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CfgError {
    #[error("call string depth exceeded at call to `{callee}` (line {line})")]
    CallDepthExceeded { callee: String, line: u32 },
    #[error("unknown function `{0}`")]
    UnknownFunction(String),
}

/// What happens when a loop header is reached with its unroll budget spent.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LoopExhaustion {
    /// Only the exit edge remains and its condition is still checked, so a
    /// path that must iterate further is dropped.
    #[default]
    Prune,
    /// The exit edge is taken without checking the loop condition.
    Bypass,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WalkConfig {
    pub unroll_bound: u32,
    pub max_call_depth: usize,
}

impl Default for WalkConfig {
    fn default() -> Self {
        WalkConfig {
            unroll_bound: 10,
            max_call_depth: 8,
        }
    }
}

/// CFGs for every function defined in a translation unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Program {
    pub cfgs: Vec<Cfg>,
    index: BTreeMap<String, FuncId>,
}

impl Program {
    pub fn build(ast: &TypedAst) -> Program {
        let cfgs: Vec<Cfg> = ast.functions().map(|f| build_cfg(ast, f)).collect();
        let index = cfgs
            .iter()
            .enumerate()
            .map(|(i, c)| (c.function.clone(), i))
            .collect();
        Program { cfgs, index }
    }

    pub fn func_id(&self, name: &str) -> Option<FuncId> {
        self.index.get(name).copied()
    }

    pub fn cfg(&self, f: FuncId) -> &Cfg {
        &self.cfgs[f]
    }

    pub fn by_name(&self, name: &str) -> Option<&Cfg> {
        self.func_id(name).map(|f| &self.cfgs[f])
    }

    fn callees(&self, f: FuncId) -> Vec<FuncId> {
        let mut out: Vec<FuncId> = self.cfgs[f]
            .nodes
            .iter()
            .filter_map(|n| match &n.kind {
                NodeKind::Call(c) => self.func_id(&c.callee),
                _ => None,
            })
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Analysis roots: functions no other function calls, plus the first
    /// function of every call cycle left unreachable from those.
    pub fn roots(&self) -> Vec<FuncId> {
        let n = self.cfgs.len();
        let mut called = vec![false; n];
        for f in 0..n {
            for g in self.callees(f) {
                if g != f {
                    called[g] = true;
                }
            }
        }
        let mut roots: Vec<FuncId> = (0..n).filter(|f| !called[*f]).collect();
        let mut reached = vec![false; n];
        let mark = |start: FuncId, reached: &mut Vec<bool>| {
            let mut stack = vec![start];
            while let Some(f) = stack.pop() {
                if !reached[f] {
                    reached[f] = true;
                    stack.extend(self.callees(f));
                }
            }
        };
        for &r in &roots {
            mark(r, &mut reached);
        }
        for f in 0..n {
            if !reached[f] {
                roots.push(f);
                mark(f, &mut reached);
            }
        }
        roots.sort_unstable();
        roots
    }
}
