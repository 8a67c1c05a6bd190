//! Depth-first exploration of every bounded path of every analysis root,
//! with checker notification at assignment sites.

use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cfg::{
    BranchChoice, Cursor, FuncId, LoopExhaustion, NodeKind, Program, Status, WalkConfig,
};
use crate::checker::{BugReport, Checker, LimitTable, SiteContext, SiteOutcome};
use crate::frontend::{Span, TypedAst};
use crate::solver::{emit_smtlib, Solver, SymVar};

use super::{ExecError, Feasibility, PathState, Site, SummaryRegistry, SymExec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecConfig {
    pub walk: WalkConfig,
    pub loop_exhaustion: LoopExhaustion,
    /// Paths explored per root (completed, infeasible or aborted) before
    /// the root is cut short.
    pub max_paths: usize,
    /// Stop notifying a checker at a site once it reported there.
    pub dedupe_sites: bool,
    /// Keep an SMT-LIB dump of every completed path.
    pub dump_constraints: bool,
}

impl Default for ExecConfig {
    fn default() -> Self {
        ExecConfig {
            walk: WalkConfig::default(),
            loop_exhaustion: LoopExhaustion::Prune,
            max_paths: 20_000,
            dedupe_sites: true,
            dump_constraints: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagnosticKind {
    Unsupported,
    MissingSummary,
    CallDepth,
    Unconfirmed,
    PathBudget,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ExecDiagnostic {
    pub kind: DiagnosticKind,
    pub function: String,
    pub line: u32,
    pub col: u32,
    pub message: String,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathStats {
    pub completed: usize,
    pub infeasible: usize,
    pub aborted: usize,
    pub notifications: usize,
    pub truncated_roots: usize,
}

impl PathStats {
    fn explored(&self) -> usize {
        self.completed + self.infeasible + self.aborted
    }

    fn absorb(&mut self, o: &PathStats) {
        self.completed += o.completed;
        self.infeasible += o.infeasible;
        self.aborted += o.aborted;
        self.notifications += o.notifications;
        self.truncated_roots += o.truncated_roots;
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOutput {
    /// Reports in DFS order (roots in definition order); ids unassigned.
    pub reports: Vec<BugReport>,
    pub diagnostics: Vec<ExecDiagnostic>,
    pub stats: PathStats,
    pub dumps: Vec<String>,
}

enum Mode<'m> {
    Analyze,
    /// Keep the final state of every completed path; no notifications.
    Collect,
    /// Follow `decisions` and stop at the site that defines `target`.
    Replay {
        decisions: &'m [bool],
        span: Span,
        target: &'m SymVar,
    },
}

enum Step {
    Next(Option<bool>),
    Done(PathEnd),
    Stop,
}

enum PathEnd {
    Completed,
    Infeasible,
}

#[derive(Default)]
struct RootRun {
    out: RunOutput,
    reported: HashSet<(usize, Span)>,
    diag_seen: HashSet<ExecDiagnostic>,
    found: Option<PathState>,
    collected: Vec<(Vec<bool>, PathState)>,
}

impl RootRun {
    fn diagnose(&mut self, d: ExecDiagnostic) {
        if self.diag_seen.insert(d.clone()) {
            self.out.diagnostics.push(d);
        }
    }
}

pub struct Engine<'a> {
    ast: &'a TypedAst,
    source: &'a str,
    program: Program,
    summaries: SummaryRegistry,
    limits: LimitTable,
    checkers: Vec<Box<dyn Checker>>,
    config: ExecConfig,
}

impl<'a> Engine<'a> {
    pub fn new(ast: &'a TypedAst, source: &'a str, limits: LimitTable, config: ExecConfig) -> Self {
        Engine {
            ast,
            source,
            program: Program::build(ast),
            summaries: SummaryRegistry::for_program(ast),
            limits,
            checkers: Vec::new(),
            config,
        }
    }

    pub fn with_summaries(mut self, summaries: SummaryRegistry) -> Self {
        self.summaries = summaries;
        self
    }

    pub fn register_checker(&mut self, checker: Box<dyn Checker>) {
        self.checkers.push(checker);
    }

    pub fn checkers(&self) -> impl Iterator<Item = &dyn Checker> {
        self.checkers.iter().map(|c| c.as_ref())
    }

    pub fn program(&self) -> &Program {
        &self.program
    }

    pub fn config(&self) -> &ExecConfig {
        &self.config
    }

    pub fn exec(&self) -> SymExec<'_> {
        SymExec::new(self.ast, &self.summaries, &self.limits)
    }

    /// Explore every root; roots run in parallel and are merged in order.
    pub fn run(&self, solver: &dyn Solver) -> Result<RunOutput, ExecError> {
        let roots = self.program.roots();
        let runs: Vec<Result<RootRun, ExecError>> = roots
            .par_iter()
            .map(|&root| {
                let mut run = RootRun::default();
                self.explore(root, solver, &Mode::Analyze, &mut run)?;
                Ok(run)
            })
            .collect();
        let mut out = RunOutput::default();
        let mut reported: HashSet<(String, Span)> = HashSet::new();
        let mut diag_seen: HashSet<ExecDiagnostic> = HashSet::new();
        for run in runs {
            let run = run?;
            out.stats.absorb(&run.out.stats);
            for r in run.out.reports {
                if !self.config.dedupe_sites || reported.insert((r.checker.clone(), r.span)) {
                    out.reports.push(r);
                }
            }
            for d in run.out.diagnostics {
                if diag_seen.insert(d.clone()) {
                    out.diagnostics.push(d);
                }
            }
            out.dumps.extend(run.out.dumps);
        }
        Ok(out)
    }

    /// Re-walk the path of a report and return the state right after its
    /// site's statement. `None` when the path no longer reaches that site.
    pub fn replay(
        &self,
        root: FuncId,
        decisions: &[bool],
        span: Span,
        target: &SymVar,
        solver: &dyn Solver,
    ) -> Result<Option<PathState>, ExecError> {
        let mut run = RootRun::default();
        let mode = Mode::Replay {
            decisions,
            span,
            target,
        };
        self.explore(root, solver, &mode, &mut run)?;
        Ok(run.found)
    }

    /// Final states of all completed paths from `root`, in DFS order.
    pub fn completed_paths(
        &self,
        root: FuncId,
        solver: &dyn Solver,
    ) -> Result<Vec<(Vec<bool>, PathState)>, ExecError> {
        let mut run = RootRun::default();
        self.explore(root, solver, &Mode::Collect, &mut run)?;
        Ok(run.collected)
    }

    fn explore(
        &self,
        root: FuncId,
        solver: &dyn Solver,
        mode: &Mode<'_>,
        run: &mut RootRun,
    ) -> Result<(), ExecError> {
        let cfg = self.program.cfg(root);
        let mut stack = vec![(
            self.program.start(root, &[], false),
            PathState::new(&cfg.function),
        )];
        while let Some((mut cur, mut state)) = stack.pop() {
            if run.out.stats.explored() >= self.config.max_paths {
                run.out.stats.truncated_roots += 1;
                run.diagnose(ExecDiagnostic {
                    kind: DiagnosticKind::PathBudget,
                    function: cfg.function.clone(),
                    line: cfg.node(cfg.entry).span.line,
                    col: cfg.node(cfg.entry).span.col,
                    message: format!(
                        "path budget of {} exhausted; remaining paths skipped",
                        self.config.max_paths
                    ),
                });
                break;
            }
            loop {
                let span = self.program.current(&cur).span;
                let func = self.program.cfg(cur.func()).function.clone();
                let step = self.step(&mut cur, &mut state, &mut stack, solver, mode, run);
                let step = match step {
                    Ok(s) => s,
                    Err(e) => {
                        self.abort_path(e, &func, span, run)?;
                        break;
                    }
                };
                let taken = match step {
                    Step::Next(t) => t,
                    Step::Done(end) => {
                        self.finish(end, &cur, &state, mode, run);
                        break;
                    }
                    Step::Stop => return Ok(()),
                };
                match self.program.advance(&mut cur, taken, &self.config.walk) {
                    Ok(Status::Running) => {}
                    Ok(Status::Finished) => {
                        self.finish(PathEnd::Completed, &cur, &state, mode, run);
                        break;
                    }
                    Err(e) => {
                        self.abort_path(e.into(), &func, span, run)?;
                        break;
                    }
                }
            }
        }
        Ok(())
    }

    fn finish(&self, end: PathEnd, cur: &Cursor, state: &PathState, mode: &Mode<'_>, run: &mut RootRun) {
        match end {
            PathEnd::Completed => {
                run.out.stats.completed += 1;
                if let Mode::Collect = mode {
                    run.collected.push((cur.decisions.clone(), state.clone()));
                }
                if self.config.dump_constraints {
                    let decisions: String =
                        cur.decisions.iter().map(|d| if *d { '1' } else { '0' }).collect();
                    run.out.dumps.push(format!(
                        "; path {} [{}]\n{}",
                        self.program.cfg(cur.frames[0].func).function,
                        decisions,
                        emit_smtlib(&state.system())
                    ));
                }
            }
            PathEnd::Infeasible => run.out.stats.infeasible += 1,
        }
    }

    /// Solver failures end the run; anything else only ends the path.
    fn abort_path(&self, e: ExecError, func: &str, span: Span, run: &mut RootRun) -> Result<(), ExecError> {
        let kind = match &e {
            ExecError::Solver(_) => return Err(e),
            ExecError::MissingSummary { .. } => DiagnosticKind::MissingSummary,
            ExecError::Cfg(_) => DiagnosticKind::CallDepth,
            _ => DiagnosticKind::Unsupported,
        };
        let (line, col) = match &e {
            ExecError::UnsupportedExpression { span, .. } | ExecError::MissingSummary { span, .. } => {
                (span.line, span.col)
            }
            _ => (span.line, span.col),
        };
        run.out.stats.aborted += 1;
        run.diagnose(ExecDiagnostic {
            kind,
            function: func.to_string(),
            line,
            col,
            message: e.to_string(),
        });
        Ok(())
    }

    fn step(
        &self,
        cur: &mut Cursor,
        state: &mut PathState,
        stack: &mut Vec<(Cursor, PathState)>,
        solver: &dyn Solver,
        mode: &Mode<'_>,
        run: &mut RootRun,
    ) -> Result<Step, ExecError> {
        let exec = self.exec();
        let node = self.program.current(cur);
        match &node.kind {
            NodeKind::Entry => {
                if state.depth() > 0 {
                    let name = &self.program.cfg(cur.func()).function;
                    if let Some(f) = self.ast.function(name) {
                        exec.bind_params(state, f);
                    }
                }
                Ok(Step::Next(None))
            }
            NodeKind::Stmt(s) => {
                if let Some(site) = exec.encode_statement(state, s)? {
                    let root = &self.program.cfg(cur.frames[0].func).function;
                    if !self.on_site(state, &site, root, &cur.decisions, solver, mode, run)? {
                        return Ok(Step::Stop);
                    }
                }
                if state.terminated() {
                    return Ok(Step::Done(PathEnd::Completed));
                }
                Ok(Step::Next(None))
            }
            NodeKind::Call(c) => {
                exec.enter_call(state, c)?;
                Ok(Step::Next(None))
            }
            NodeKind::Exit => {
                if state.depth() > 0 {
                    let (caller, site) = cur
                        .frames
                        .last()
                        .and_then(|f| f.call_site)
                        .expect("inlined frame has a call site");
                    let result = match &self.program.cfg(caller).node(site).kind {
                        NodeKind::Call(c) => c.result.clone(),
                        _ => None,
                    };
                    exec.leave_call(state, result.as_ref());
                }
                Ok(Step::Next(None))
            }
            NodeKind::Branch { cond, .. } => {
                let forced = match mode {
                    Mode::Replay { decisions, .. } => match decisions.get(cur.decisions.len()) {
                        Some(d) => Some(*d),
                        // Past the recorded decisions the site was never reached.
                        None => return Ok(Step::Stop),
                    },
                    Mode::Analyze | Mode::Collect => None,
                };
                match self.program.choices(cur, &self.config.walk) {
                    BranchChoice::Exhausted => {
                        if forced == Some(true) {
                            return Ok(Step::Done(PathEnd::Infeasible));
                        }
                        if self.config.loop_exhaustion == LoopExhaustion::Prune
                            && exec.validate_branch(state, cond, false, solver)?
                                == Feasibility::Infeasible
                        {
                            return Ok(Step::Done(PathEnd::Infeasible));
                        }
                        Ok(Step::Next(Some(false)))
                    }
                    BranchChoice::Both => {
                        if forced.is_none() {
                            let mut other = (cur.clone(), state.clone());
                            match exec.validate_branch(&mut other.1, cond, false, solver) {
                                Ok(Feasibility::Feasible) => {
                                    let func = self.program.cfg(cur.func()).function.clone();
                                    match self.program.advance(&mut other.0, Some(false), &self.config.walk) {
                                        Ok(_) => stack.push(other),
                                        Err(e) => self.abort_path(e.into(), &func, node.span, run)?,
                                    }
                                }
                                Ok(Feasibility::Infeasible) => run.out.stats.infeasible += 1,
                                Err(e) => {
                                    let func = self.program.cfg(cur.func()).function.clone();
                                    self.abort_path(e, &func, node.span, run)?;
                                }
                            }
                        }
                        let dir = forced.unwrap_or(true);
                        if exec.validate_branch(state, cond, dir, solver)? == Feasibility::Infeasible {
                            return Ok(Step::Done(PathEnd::Infeasible));
                        }
                        Ok(Step::Next(Some(dir)))
                    }
                }
            }
        }
    }

    /// Notify checkers. Returns false when exploration should stop.
    fn on_site(
        &self,
        state: &PathState,
        site: &Site,
        root: &str,
        decisions: &[bool],
        solver: &dyn Solver,
        mode: &Mode<'_>,
        run: &mut RootRun,
    ) -> Result<bool, ExecError> {
        if let Mode::Replay { span, target, .. } = mode {
            if site.span == *span && &site.defined == *target {
                run.found = Some(state.clone());
                return Ok(false);
            }
            return Ok(true);
        }
        if let Mode::Collect = mode {
            return Ok(true);
        }
        for (i, checker) in self.checkers.iter().enumerate() {
            if self.config.dedupe_sites && run.reported.contains(&(i, site.span)) {
                continue;
            }
            run.out.stats.notifications += 1;
            let ctx = SiteContext {
                state,
                site,
                solver,
                file: &self.ast.file,
                source: self.source,
                decisions,
            };
            match checker.on_site(&ctx)? {
                SiteOutcome::Clean => {}
                SiteOutcome::Report(mut r) => {
                    r.root = root.to_string();
                    run.reported.insert((i, site.span));
                    run.out.reports.push(*r);
                }
                SiteOutcome::Unconfirmed(reason) => run.diagnose(ExecDiagnostic {
                    kind: DiagnosticKind::Unconfirmed,
                    function: site.function.clone(),
                    line: site.span.line,
                    col: site.span.col,
                    message: format!("[{}] possible overflow not confirmed: {reason}", checker.id()),
                }),
            }
        }
        Ok(true)
    }
}
