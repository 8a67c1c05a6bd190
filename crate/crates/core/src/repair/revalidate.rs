//! Re-analysis of patched files.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::analysis::{analyze_source, AnalysisConfig};
use crate::checker::BugReport;
use crate::solver::Solver;

use super::{RepairCandidate, RepairError, ValidationStatus};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateRevalidation {
    pub problem_id: String,
    pub status: ValidationStatus,
    /// Reports still raised inside the guard block.
    pub fresh: Vec<BugReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RevalidationSummary {
    pub file: String,
    pub outcomes: Vec<CandidateRevalidation>,
    /// Reports at sites that had none before patching.
    pub new_reports: Vec<BugReport>,
}

impl RevalidationSummary {
    pub fn all_revalidated(&self) -> bool {
        self.new_reports.is_empty()
            && self.outcomes.iter().all(|o| o.status == ValidationStatus::Revalidated)
    }
}

/// Re-analyze `patched` (with the bound of the original analysis) and judge
/// each applied candidate by the reports inside its guard block, given as a
/// byte range of `patched`.
pub fn revalidate(
    patched: &str,
    file: &str,
    applied: &[(&RepairCandidate, (usize, usize))],
    before: &[BugReport],
    config: &AnalysisConfig,
    solver: &dyn Solver,
) -> Result<RevalidationSummary, RepairError> {
    let fresh = analyze_source(patched, file, config, solver)?;
    let inside = |r: &BugReport, (a, b): (usize, usize)| r.span.start >= a && r.span.end <= b;
    let outcomes = applied
        .iter()
        .map(|(c, guard)| {
            let hits: Vec<BugReport> =
                fresh.reports.iter().filter(|r| inside(r, *guard)).cloned().collect();
            CandidateRevalidation {
                problem_id: c.problem_id.clone(),
                status: if hits.is_empty() {
                    ValidationStatus::Revalidated
                } else {
                    ValidationStatus::Failed
                },
                fresh: hits,
            }
        })
        .collect();
    let known: BTreeSet<(&str, &str)> = before
        .iter()
        .map(|r| (r.function.as_str(), r.statement.as_str()))
        .collect();
    let new_reports = fresh
        .reports
        .iter()
        .filter(|r| !applied.iter().any(|(_, l)| inside(r, *l)))
        .filter(|r| !known.contains(&(r.function.as_str(), r.statement.as_str())))
        .cloned()
        .collect();
    Ok(RevalidationSummary {
        file: file.to_string(),
        outcomes,
        new_reports,
    })
}
