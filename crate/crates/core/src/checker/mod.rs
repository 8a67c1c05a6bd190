//! Checkers notified at assignment sites, and the reports they produce.

pub mod bound;
pub mod overflow;
pub mod precondition;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::frontend::{IntKind, Span};
use crate::solver::{ConstraintSystem, GroupTag, Solver, SymVar};
use crate::symexec::{ExecError, PathState, Site};

pub use bound::{
    bound_from_table, discover_upper_bound, first_macro_used, BoundInfo, BoundOrigin, LimitTable,
    LimitsError,
};
pub use overflow::{check_assignment_site, OverflowChecker, OVERFLOW_CHECKER_ID};
pub use precondition::{
    eval_precondition_add_const, eval_precondition_mul_const, eval_precondition_square, isqrt,
    PreconditionError, Safety,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SiteKind {
    Assignment,
}

/// What a checker sees at a site.
pub struct SiteContext<'a> {
    pub state: &'a PathState,
    pub site: &'a Site,
    pub solver: &'a dyn Solver,
    pub file: &'a str,
    pub source: &'a str,
    /// Branch decisions taken on the path so far.
    pub decisions: &'a [bool],
}

impl SiteContext<'_> {
    /// Source text of the site's statement, whitespace collapsed.
    pub fn statement_text(&self) -> String {
        let span = self.site.span;
        self.source
            .get(span.start..span.end)
            .unwrap_or("")
            .split_whitespace()
            .collect::<Vec<_>>()
            .join(" ")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SiteOutcome {
    Clean,
    Report(Box<BugReport>),
    /// The solver could not decide; reported as a diagnostic only.
    Unconfirmed(String),
}

pub trait Checker: Send + Sync {
    /// Short unique identifier, used as the problem-id suffix.
    fn id(&self) -> &str;

    fn site_kinds(&self) -> &[SiteKind] {
        &[SiteKind::Assignment]
    }

    fn on_site(&self, ctx: &SiteContext<'_>) -> Result<SiteOutcome, ExecError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Overflow,
    Underflow,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BugReport {
    /// Logical timestamp plus checker id, e.g. `T000003-IOF`.
    pub problem_id: String,
    pub checker: String,
    pub file: String,
    pub function: String,
    /// Analysis root whose path reached the site (differs from `function`
    /// when the site is in an inlined callee).
    #[serde(default)]
    pub root: String,
    pub line: u32,
    pub col: u32,
    pub span: Span,
    pub statement: String,
    pub variable: SymVar,
    pub kind: IntKind,
    /// Detection slice; its probe group is removable.
    #[serde(with = "crate::serde_util::smtlib_system")]
    pub slice: ConstraintSystem,
    pub probe: GroupTag,
    pub bound: BoundInfo,
    pub decisions: Vec<bool>,
    pub direction: Direction,
    /// Satisfying assignment, symbol name to decimal value.
    pub witness: BTreeMap<String, String>,
}

pub fn problem_id(seq: usize, checker: &str) -> String {
    format!("T{seq:06}-{checker}")
}

/// Split a problem id into its sequence number and checker id.
pub fn parse_problem_id(id: &str) -> Option<(usize, &str)> {
    let (stamp, checker) = id.split_once('-')?;
    let seq = stamp.strip_prefix('T')?;
    if seq.len() < 6 || !seq.bytes().all(|b| b.is_ascii_digit()) || checker.is_empty() {
        return None;
    }
    Some((seq.parse().ok()?, checker))
}

/// Give reports run-unique ids in their current order.
pub fn assign_problem_ids(reports: &mut [BugReport]) {
    for (i, r) in reports.iter_mut().enumerate() {
        r.problem_id = problem_id(i + 1, &r.checker);
    }
}
