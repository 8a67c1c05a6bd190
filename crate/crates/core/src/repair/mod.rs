//! Guard repair generation: cluster a report with its path state, constrain
//! the detecting variable back into range, check the new system, pick and
//! instantiate a pattern, and stage the edit as a candidate.

pub mod insert;
pub mod pattern;
pub mod revalidate;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{AnalysisConfig, FileAnalysis};
use crate::checker::{parse_problem_id, BoundInfo, BugReport, OverflowChecker};
use crate::frontend::{Span, Stmt, StmtKind, TypedAst};
use crate::solver::{
    Atom, Clause, ConstraintSystem, GroupTag, Rel, Solver, SolverError, SymVar, Term, Verdict,
};
use crate::symexec::{Engine, ExecError, PathState};

pub use insert::{apply_candidates, insert_repair, unified_diff, Patched};
pub use pattern::{
    instantiate_pattern, select_pattern, HandlerTemplates, HandlerVariant, Instantiation,
    PatternError, PatternKind, PatternPool, Property, RepairPattern, ReportFields, StmtFacts,
};
pub use revalidate::{revalidate, CandidateRevalidation, RevalidationSummary};

/// Version of the candidate and store JSON layout.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum RepairError {
    #[error("report {0} does not match the replayed path")]
    StaleState(String),
    #[error("unknown checker in problem id `{0}`")]
    UnknownChecker(String),
    #[error("guard constraint check failed: {0}")]
    ConstraintCheckFailed(String),
    #[error("no repair pattern applies to the statement")]
    NoApplicablePattern,
    #[error("pattern does not fit the statement: {0}")]
    PatternMismatch(String),
    #[error("template placeholder `{{{0}}}` has no binding")]
    UnboundPlaceholder(String),
    #[error("statement cannot be wrapped in a guard: {0}")]
    UnsupportedLocation(String),
    #[error("{problem_id}: source changed since detection (span {start}..{end})")]
    SpanDrift {
        problem_id: String,
        start: usize,
        end: usize,
    },
    #[error("solver unavailable: {0}")]
    SolverUnavailable(#[from] SolverError),
    #[error(transparent)]
    Exec(#[from] ExecError),
    #[error(transparent)]
    Analysis(#[from] crate::analysis::AnalysisError),
    #[error(transparent)]
    Pattern(#[from] PatternError),
}

impl RepairError {
    /// Errors that end the whole run rather than one candidate.
    pub fn is_fatal(&self) -> bool {
        matches!(
            self,
            RepairError::SolverUnavailable(_)
                | RepairError::Exec(ExecError::Solver(_))
                | RepairError::Analysis(crate::analysis::AnalysisError::Exec(ExecError::Solver(_)))
        )
    }
}

/// Everything the repair steps need about one report.
#[derive(Debug, Clone)]
pub struct BugCluster {
    pub report: BugReport,
    pub facts: StmtFacts,
    pub variable: SymVar,
    /// Variables of the defining constraint other than `variable`.
    pub dependencies: BTreeSet<SymVar>,
    /// Detection slice including its probe group.
    pub slice: ConstraintSystem,
    pub probe: GroupTag,
    pub bound: BoundInfo,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Placement {
    Block,
    Nested,
    LoopHeader,
}

/// Find the statement with `span` and check it can be wrapped: it must sit
/// directly in a block, or be a non-declaration branch or loop body.
fn locate_stmt(ast: &TypedAst, span: Span) -> Result<&Stmt, RepairError> {
    fn visit<'a>(s: &'a Stmt, span: Span, at: Placement, hit: &mut Option<(&'a Stmt, Placement)>) {
        if hit.is_some() {
            return;
        }
        if s.span == span {
            *hit = Some((s, at));
            return;
        }
        match &s.kind {
            StmtKind::If {
                then_branch,
                else_branch,
                ..
            } => {
                visit(then_branch, span, Placement::Nested, hit);
                if let Some(e) = else_branch {
                    visit(e, span, Placement::Nested, hit);
                }
            }
            StmtKind::While { body, .. } => visit(body, span, Placement::Nested, hit),
            StmtKind::For {
                init, step, body, ..
            } => {
                for h in [init, step].into_iter().flatten() {
                    visit(h, span, Placement::LoopHeader, hit);
                }
                visit(body, span, Placement::Nested, hit);
            }
            StmtKind::Block(b) => b.stmts.iter().for_each(|c| visit(c, span, Placement::Block, hit)),
            _ => {}
        }
    }
    let mut hit = None;
    for f in ast.functions() {
        for s in &f.body.stmts {
            visit(s, span, Placement::Block, &mut hit);
        }
    }
    match hit {
        Some((_, Placement::LoopHeader)) => {
            Err(RepairError::UnsupportedLocation("loop header".into()))
        }
        Some((s, Placement::Block)) => Ok(s),
        Some((s, Placement::Nested)) if !matches!(s.kind, StmtKind::Decl(_)) => Ok(s),
        Some(_) => Err(RepairError::UnsupportedLocation(
            "declaration outside a block".into(),
        )),
        None => Err(RepairError::UnsupportedLocation("statement not found".into())),
    }
}

fn collapse(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Group the report with the statement and the path state it came from.
pub fn cluster_bug(
    report: &BugReport,
    state: &PathState,
    ast: &TypedAst,
    source: &str,
) -> Result<BugCluster, RepairError> {
    let stale = || RepairError::StaleState(report.problem_id.clone());
    if state.info(&report.variable).is_none() {
        return Err(stale());
    }
    let slice = state.slice_for(&report.variable)?;
    if slice.assertions != report.slice.without_group(report.probe).assertions {
        return Err(stale());
    }
    let stmt = locate_stmt(ast, report.span)?;
    if collapse(stmt.span.text(source)) != report.statement {
        return Err(stale());
    }
    let facts = StmtFacts::from_stmt(stmt, source).ok_or_else(stale)?;
    let mut dependencies = BTreeSet::new();
    if let Some(def) = state.info(&report.variable).and_then(|i| i.def) {
        state.assertions()[def].clause.collect_vars(&mut dependencies);
    }
    dependencies.remove(&report.variable);
    Ok(BugCluster {
        report: report.clone(),
        facts,
        variable: report.variable.clone(),
        dependencies,
        slice: report.slice.clone(),
        probe: report.probe,
        bound: report.bound.clone(),
    })
}

/// The variable(s) to re-constrain: the detecting variable. Operand
/// variables stay recorded in the cluster's dependencies.
pub fn select_constraint_vars(cluster: &BugCluster) -> Vec<SymVar> {
    vec![cluster.variable.clone()]
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstraintGroup {
    pub tag: GroupTag,
    pub clauses: Vec<Clause>,
}

/// The guard group `lower <= v <= upper` for each selected variable, the
/// complement of the probe, under a guard tag unused in the slice.
pub fn reconstrain(cluster: &BugCluster, vars: &[SymVar]) -> ConstraintGroup {
    let next = cluster
        .slice
        .groups()
        .iter()
        .filter_map(|g| match g {
            GroupTag::Guard(n) => Some(*n),
            _ => None,
        })
        .max()
        .unwrap_or(0)
        + 1;
    let mut clauses = Vec::new();
    for v in vars {
        clauses.push(Clause::unit(Atom::new(
            Term::var(v),
            Rel::Le,
            Term::Lit(cluster.bound.upper.clone()),
        )));
        clauses.push(Clause::unit(Atom::new(
            Term::var(v),
            Rel::Ge,
            Term::Lit(cluster.bound.lower.clone()),
        )));
    }
    ConstraintGroup {
        tag: GroupTag::Guard(next),
        clauses,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "result", content = "reason", rename_all = "snake_case")]
pub enum ConstraintCheck {
    Validated,
    Failed(String),
}

/// Swap the probe for the guard group and check (a) probe plus guard is
/// Unsat and (b) the guard alone is Sat. Unknown fails conservatively.
pub fn build_and_check_new_system(
    cluster: &BugCluster,
    group: &ConstraintGroup,
    solver: &dyn Solver,
) -> Result<ConstraintCheck, RepairError> {
    let mut guarded = cluster.slice.without_group(cluster.probe);
    for c in &group.clauses {
        guarded.assert(group.tag, c.clone());
    }
    let mut probed = guarded.clone();
    for a in cluster.slice.group(cluster.probe) {
        probed.assert(a.group, a.clause.clone());
    }
    match solver.check_sat(&probed)? {
        Verdict::Unsat => {}
        Verdict::Sat(_) => {
            return Ok(ConstraintCheck::Failed(
                "overflow still possible under the guard".into(),
            ))
        }
        Verdict::Unknown(r) => return Ok(ConstraintCheck::Failed(format!("solver unknown: {r}"))),
    }
    Ok(match solver.check_sat(&guarded)? {
        Verdict::Sat(_) => ConstraintCheck::Validated,
        Verdict::Unsat => ConstraintCheck::Failed("guarded path is infeasible".into()),
        Verdict::Unknown(r) => ConstraintCheck::Failed(format!("solver unknown: {r}")),
    })
}

/// Checker id from the problem id, resolved against `registered`.
pub fn determine_bug_type(report: &BugReport, registered: &[&str]) -> Result<String, RepairError> {
    let unknown = || RepairError::UnknownChecker(report.problem_id.clone());
    let (_, checker) = parse_problem_id(&report.problem_id).ok_or_else(unknown)?;
    registered
        .iter()
        .find(|c| **c == checker)
        .map(|c| c.to_string())
        .ok_or_else(unknown)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValidationStatus {
    Unvalidated,
    ConstraintValidated,
    Revalidated,
    Failed,
}

/// One source replacement.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edit {
    pub start: usize,
    pub end: usize,
    /// Expected text at `start..end`; a mismatch is span drift.
    pub original: String,
    pub replacement: String,
}

/// Handler definition injected once per file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prelude {
    pub name: String,
    pub offset: usize,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepairCandidate {
    pub schema_version: u32,
    pub problem_id: String,
    pub checker: String,
    pub file: String,
    pub function: String,
    pub line: u32,
    pub statement: String,
    pub variable: SymVar,
    pub dependencies: Vec<SymVar>,
    pub selected: Vec<SymVar>,
    pub pattern: String,
    pub template_lines: usize,
    pub handler: HandlerVariant,
    pub bindings: BTreeMap<String, String>,
    /// Only in-place repairs exist.
    pub repair_type: String,
    pub edit: Edit,
    pub prelude: Option<Prelude>,
    pub status: ValidationStatus,
    pub failure: Option<String>,
    /// Lines of the guard block when this candidate is applied alone.
    pub guard_lines: (u32, u32),
    pub diff: String,
}

/// Outcome of repairing one report.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepairAttempt {
    pub problem_id: String,
    pub candidate: Option<RepairCandidate>,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepairConfig {
    pub pool: PatternPool,
    pub handler: HandlerVariant,
}

/// Repairs for the reports of one file.
pub struct Repairer<'a> {
    ast: &'a TypedAst,
    source: &'a str,
    engine: Engine<'a>,
    config: &'a RepairConfig,
}

impl<'a> Repairer<'a> {
    pub fn new(
        ast: &'a TypedAst,
        source: &'a str,
        analysis: &AnalysisConfig,
        bound: &BoundInfo,
        config: &'a RepairConfig,
    ) -> Result<Self, RepairError> {
        let table = analysis.limit_table().map_err(crate::analysis::AnalysisError::from)?;
        let mut engine = Engine::new(ast, source, table, analysis.exec);
        engine.register_checker(Box::new(OverflowChecker::new(bound.clone())));
        Ok(Repairer {
            ast,
            source,
            engine,
            config,
        })
    }

    /// Replay the report's path and cluster it.
    pub fn cluster(&self, report: &BugReport, solver: &dyn Solver) -> Result<BugCluster, RepairError> {
        let stale = || RepairError::StaleState(report.problem_id.clone());
        let root = self.engine.program().func_id(&report.root).ok_or_else(stale)?;
        let state = self
            .engine
            .replay(root, &report.decisions, report.span, &report.variable, solver)?
            .ok_or_else(stale)?;
        cluster_bug(report, &state, self.ast, self.source)
    }

    /// Run every repair step for one report.
    pub fn repair(&self, report: &BugReport, solver: &dyn Solver) -> Result<RepairCandidate, RepairError> {
        let cluster = self.cluster(report, solver)?;
        let vars = select_constraint_vars(&cluster);
        let group = reconstrain(&cluster, &vars);
        if let ConstraintCheck::Failed(why) = build_and_check_new_system(&cluster, &group, solver)? {
            return Err(RepairError::ConstraintCheckFailed(why));
        }
        let registered: Vec<&str> = self.engine.checkers().map(|c| c.id()).collect();
        let checker = determine_bug_type(report, &registered)?;
        let pattern = select_pattern(&cluster.facts, &self.config.pool.patterns)?;
        let inst = instantiate_pattern(
            pattern,
            &cluster.facts,
            &cluster.bound,
            &ReportFields {
                file: &report.file,
                problem_id: &report.problem_id,
                line: report.line,
            },
            &self.config.pool.handlers,
            self.config.handler,
        )?;
        let edit = self.edit_for(&cluster, &inst.code);
        let prelude = self.prelude();
        let mut candidate = RepairCandidate {
            schema_version: SCHEMA_VERSION,
            problem_id: report.problem_id.clone(),
            checker,
            file: report.file.clone(),
            function: report.function.clone(),
            line: report.line,
            statement: report.statement.clone(),
            variable: cluster.variable.clone(),
            dependencies: cluster.dependencies.iter().cloned().collect(),
            selected: vars,
            pattern: pattern.id.clone(),
            template_lines: pattern.template_lines(),
            handler: self.config.handler,
            bindings: inst.bindings,
            repair_type: "in_place".into(),
            edit,
            prelude,
            status: ValidationStatus::ConstraintValidated,
            failure: None,
            guard_lines: (0, 0),
            diff: String::new(),
        };
        let patched = apply_candidates(self.source, &[&candidate])?;
        candidate.guard_lines = patched.guard_lines[0];
        candidate.diff = unified_diff(&report.file, self.source, &patched.text);
        Ok(candidate)
    }

    fn edit_for(&self, cluster: &BugCluster, code: &str) -> Edit {
        let span = cluster.report.span;
        let line_start = self.source[..span.start].rfind('\n').map_or(0, |i| i + 1);
        let indent: String = self.source[line_start..span.start]
            .chars()
            .take_while(|c| c.is_whitespace())
            .collect();
        let replacement = code
            .lines()
            .enumerate()
            .map(|(i, l)| if i == 0 || l.is_empty() { l.to_string() } else { format!("{indent}{l}") })
            .collect::<Vec<_>>()
            .join("\n");
        Edit {
            start: span.start,
            end: span.end,
            original: self.source[span.start..span.end].to_string(),
            replacement,
        }
    }

    /// The v2 handler definition, placed before the first function
    /// definition unless the file already defines it.
    fn prelude(&self) -> Option<Prelude> {
        if self.config.handler != HandlerVariant::V2 {
            return None;
        }
        let h = &self.config.pool.handlers;
        if self.ast.function(&h.v2_name).is_some() {
            return None;
        }
        let first = self.ast.functions().map(|f| f.span.start).min()?;
        let offset = self.source[..first].rfind('\n').map_or(0, |i| i + 1);
        Some(Prelude {
            name: h.v2_name.clone(),
            offset,
            text: format!("{}\n", h.v2_prelude),
        })
    }
}

/// Repair every report of an analyzed file. Per-report failures are
/// recorded; solver unavailability ends the run.
pub fn generate_repairs(
    ast: &TypedAst,
    source: &str,
    analysis: &FileAnalysis,
    analysis_config: &AnalysisConfig,
    config: &RepairConfig,
    solver: &dyn Solver,
) -> Result<Vec<RepairAttempt>, RepairError> {
    let repairer = Repairer::new(ast, source, analysis_config, &analysis.bound, config)?;
    let mut out = Vec::new();
    for r in &analysis.reports {
        match repairer.repair(r, solver) {
            Ok(c) => out.push(RepairAttempt {
                problem_id: r.problem_id.clone(),
                candidate: Some(c),
                failure: None,
            }),
            Err(e) if e.is_fatal() => return Err(e),
            Err(e) => out.push(RepairAttempt {
                problem_id: r.problem_id.clone(),
                candidate: None,
                failure: Some(e.to_string()),
            }),
        }
    }
    Ok(out)
}
