//! The integer overflow checker: probes each arithmetic assignment for a
//! value outside `[lower, upper]`.

use num_bigint::BigInt;

use crate::solver::{
    Atom, Clause, ConstraintSystem, GroupTag, Model, Rel, Solver, SymVar, Term, Verdict,
};
use crate::symexec::{ExecError, PathState, Site};

use super::{BoundInfo, BugReport, Checker, Direction, SiteContext, SiteOutcome};

pub const OVERFLOW_CHECKER_ID: &str = "IOF";

/// Probe group used in detection slices.
pub const PROBE: GroupTag = GroupTag::Probe(1);

#[derive(Debug, Clone)]
pub struct OverflowChecker {
    id: String,
    bound: BoundInfo,
}

impl OverflowChecker {
    pub fn new(bound: BoundInfo) -> Self {
        OverflowChecker::with_id(OVERFLOW_CHECKER_ID, bound)
    }

    pub fn with_id(id: &str, bound: BoundInfo) -> Self {
        OverflowChecker {
            id: id.to_string(),
            bound,
        }
    }

    pub fn bound(&self) -> &BoundInfo {
        &self.bound
    }
}

/// The probe clause `v > upper || v < lower`.
pub fn probe_clause(v: &SymVar, bound: &BoundInfo) -> Clause {
    Clause(vec![
        Atom::new(Term::var(v), Rel::Gt, Term::Lit(bound.upper.clone())),
        Atom::new(Term::var(v), Rel::Lt, Term::Lit(bound.lower.clone())),
    ])
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProbeResult {
    InRange,
    Violation { slice: ConstraintSystem, model: Model },
    Undecided(String),
}

/// Probe one site: the slice for the defined variable plus the probe group.
/// Sites without arithmetic are never probed.
pub fn check_assignment_site(
    state: &PathState,
    site: &Site,
    bound: &BoundInfo,
    solver: &dyn Solver,
) -> Result<ProbeResult, ExecError> {
    if !site.arithmetic {
        return Ok(ProbeResult::InRange);
    }
    let mut slice = state.slice_for(&site.defined)?;
    slice.assert(PROBE, probe_clause(&site.defined, bound));
    Ok(match solver.check_sat(&slice)? {
        Verdict::Sat(model) => ProbeResult::Violation { slice, model },
        Verdict::Unsat => ProbeResult::InRange,
        Verdict::Unknown(reason) => ProbeResult::Undecided(reason),
    })
}

impl Checker for OverflowChecker {
    fn id(&self) -> &str {
        &self.id
    }

    fn on_site(&self, ctx: &SiteContext<'_>) -> Result<SiteOutcome, ExecError> {
        let site = ctx.site;
        let (slice, model) = match check_assignment_site(ctx.state, site, &self.bound, ctx.solver)? {
            ProbeResult::Violation { slice, model } => (slice, model),
            ProbeResult::InRange => return Ok(SiteOutcome::Clean),
            ProbeResult::Undecided(reason) => return Ok(SiteOutcome::Unconfirmed(reason)),
        };
        // The slice leaves out conditions on unrelated variables; a model of
        // the whole path makes the witness replayable.
        let mut full = ctx.state.system();
        full.assert(PROBE, probe_clause(&site.defined, &self.bound));
        let model = match ctx.solver.check_sat(&full)? {
            Verdict::Sat(m) => m,
            _ => model,
        };
        let value = model.get(&site.defined).cloned().unwrap_or_else(|| BigInt::from(0));
        let direction = if value > self.bound.upper {
            Direction::Overflow
        } else {
            Direction::Underflow
        };
        let witness = model
            .iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect();
        Ok(SiteOutcome::Report(Box::new(BugReport {
            problem_id: String::new(),
            checker: self.id.clone(),
            file: ctx.file.to_string(),
            function: site.function.clone(),
            root: String::new(),
            line: site.span.line,
            col: site.span.col,
            span: site.span,
            statement: ctx.statement_text(),
            variable: site.defined.clone(),
            kind: site.kind,
            slice,
            probe: PROBE,
            bound: self.bound.clone(),
            decisions: ctx.decisions.to_vec(),
            direction,
            witness,
        })))
    }
}
