//! Findings of one run persisted as a JSON directory, the human decisions
//! on them, and applying accepted candidates.
//!
//! ```text
//! <run>/run.json            run id, configuration, analyzed files
//! <run>/reports.json        every report, ordered by (file, line, path)
//! <run>/candidates/<id>.json staged candidate with its unified diff
//! <run>/failures.json       reports no candidate could be built for
//! <run>/decisions.json      per-candidate decision and revalidation outcome
//! <run>/sources/NNN.c       snapshot of each file as analyzed
//! ```
//!
//! Everything except `decisions.json` is written once.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{de::DeserializeOwned, Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::analysis::{analyze_ast, parse_source, AnalysisConfig, AnalysisError, FileAnalysis};
use crate::checker::{assign_problem_ids, BoundInfo, BugReport};
use crate::config::RunConfig;
use crate::repair::{
    apply_candidates, generate_repairs, revalidate, RepairCandidate, RepairConfig, RepairError,
    RevalidationSummary, ValidationStatus, SCHEMA_VERSION,
};
use crate::solver::Solver;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path}: schema version {found} is not supported (expected {SCHEMA_VERSION})")]
    Schema { path: PathBuf, found: u32 },
    #[error("unknown finding {0}")]
    UnknownId(String),
    #[error("finding {0} is already applied")]
    AlreadyApplied(String),
    #[error("finding {0} has no repair candidate")]
    NoCandidate(String),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Repair(#[from] RepairError),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> StoreError + '_ {
    move |source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Write through a temporary sibling and rename, so readers never see a
/// partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), StoreError> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes).map_err(io_err(&tmp))?;
    fs::rename(&tmp, path).map_err(io_err(path))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), StoreError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|source| StoreError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, StoreError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|source| StoreError::Json {
        path: path.to_path_buf(),
        source,
    })
}

fn check_schema(path: &Path, found: u32) -> Result<(), StoreError> {
    if found == SCHEMA_VERSION {
        Ok(())
    } else {
        Err(StoreError::Schema {
            path: path.to_path_buf(),
            found,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Pending,
    Accepted,
    Rejected,
    Applied,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecisionRecord {
    pub decision: Decision,
    /// Set once applied.
    pub revalidation: Option<ValidationStatus>,
    /// Why the last apply attempt skipped this candidate.
    pub failure: Option<String>,
}

impl DecisionRecord {
    fn pending() -> DecisionRecord {
        DecisionRecord {
            decision: Decision::Pending,
            revalidation: None,
            failure: None,
        }
    }
}

/// One analyzed file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceEntry {
    /// Name as given on the command line; reports refer to it.
    pub file: String,
    /// Location patched by apply.
    pub path: PathBuf,
    /// Snapshot relative to the run directory.
    pub snapshot: String,
    pub bound: BoundInfo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunInfo {
    pub schema_version: u32,
    pub run_id: String,
    pub config: RunConfig,
    pub files: Vec<SourceEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub schema_version: u32,
    pub reports: Vec<BugReport>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepairFailure {
    pub problem_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct FailureFile {
    schema_version: u32,
    failures: Vec<RepairFailure>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct DecisionFile {
    schema_version: u32,
    decisions: BTreeMap<String, DecisionRecord>,
}

/// A source file to analyze.
#[derive(Debug, Clone)]
pub struct SourceInput {
    pub file: String,
    pub path: PathBuf,
    pub text: String,
}

impl SourceInput {
    pub fn read(path: &Path) -> Result<SourceInput, StoreError> {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        Ok(SourceInput {
            file: path.display().to_string(),
            path: path.to_path_buf(),
            text,
        })
    }
}

/// Analyses of several files with problem ids numbered across all of them
/// in (file, line, column, path) order.
pub fn analyze_files(
    inputs: &[SourceInput],
    config: &AnalysisConfig,
    solver: &dyn Solver,
) -> Result<Vec<FileAnalysis>, AnalysisError> {
    let mut order: Vec<&SourceInput> = inputs.iter().collect();
    order.sort_by(|a, b| a.file.cmp(&b.file));
    let mut out = Vec::with_capacity(order.len());
    for input in order {
        let ast = parse_source(&input.text, &input.file)?;
        out.push(analyze_ast(&ast, &input.text, config, solver)?);
    }
    let mut all: Vec<BugReport> = out.iter().flat_map(|a| a.reports.iter().cloned()).collect();
    assign_problem_ids(&mut all);
    let mut ids = all.into_iter();
    for a in &mut out {
        for r in &mut a.reports {
            *r = ids.next().expect("one id per report");
        }
    }
    Ok(out)
}

/// Stable identifier of a run over these inputs and settings.
pub fn run_id(inputs: &[SourceInput], config: &RunConfig) -> String {
    let mut h = Sha256::new();
    let relevant = (
        config.unroll,
        config.call_depth,
        &config.limits,
        &config.patterns,
        config.handler,
    );
    h.update(serde_json::to_vec(&relevant).expect("config serializes"));
    let mut order: Vec<&SourceInput> = inputs.iter().collect();
    order.sort_by(|a, b| a.file.cmp(&b.file));
    for i in order {
        h.update(i.file.as_bytes());
        h.update([0]);
        h.update(i.text.as_bytes());
        h.update([0]);
    }
    h.finalize().iter().take(8).map(|b| format!("{b:02x}")).collect()
}

/// Summary row for the findings list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FindingSummary {
    pub problem_id: String,
    pub checker: String,
    pub file: String,
    pub function: String,
    pub line: u32,
    pub statement: String,
    pub has_candidate: bool,
    pub decision: Decision,
    pub revalidation: Option<ValidationStatus>,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FindingDetail {
    pub report: BugReport,
    pub candidate: Option<RepairCandidate>,
    pub diff: Option<String>,
    pub decision: DecisionRecord,
    pub repair_failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileStatus {
    pub file: String,
    pub path: PathBuf,
    /// The file on disk differs from the analyzed snapshot.
    pub modified: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoreStatus {
    pub schema_version: u32,
    pub run_id: String,
    pub reports: usize,
    pub candidates: usize,
    pub pending: usize,
    pub accepted: usize,
    pub rejected: usize,
    pub applied: usize,
    pub files: Vec<FileStatus>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AppliedCandidate {
    pub problem_id: String,
    pub file: String,
    pub status: ValidationStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApplySummary {
    pub schema_version: u32,
    pub run_id: String,
    pub applied: Vec<AppliedCandidate>,
    pub failed: Vec<RepairFailure>,
    pub files: Vec<RevalidationSummary>,
}

impl ApplySummary {
    pub fn revalidated(&self) -> usize {
        self.applied
            .iter()
            .filter(|a| a.status == ValidationStatus::Revalidated)
            .count()
    }
}

#[derive(Debug, Clone)]
pub struct FindingStore {
    dir: PathBuf,
    pub run: RunInfo,
    pub reports: Vec<BugReport>,
    pub candidates: BTreeMap<String, RepairCandidate>,
    pub failures: BTreeMap<String, String>,
    pub decisions: BTreeMap<String, DecisionRecord>,
}

impl FindingStore {
    /// Analyze and repair `inputs`, then persist the run under
    /// `root/<run id>`. An existing run directory for the same id keeps its
    /// decisions.
    pub fn create(
        root: &Path,
        inputs: &[SourceInput],
        config: &RunConfig,
        repair: &RepairConfig,
        solver: &dyn Solver,
    ) -> Result<FindingStore, StoreError> {
        let id = run_id(inputs, config);
        let dir = root.join(&id);
        if dir.join("run.json").is_file() {
            return FindingStore::open(&dir);
        }
        let analysis_config = config.analysis();
        let analyses = analyze_files(inputs, &analysis_config, solver)?;
        fs::create_dir_all(dir.join("candidates")).map_err(io_err(&dir))?;
        fs::create_dir_all(dir.join("sources")).map_err(io_err(&dir))?;

        let mut files = Vec::new();
        let mut reports = Vec::new();
        let mut candidates = BTreeMap::new();
        let mut failures = BTreeMap::new();
        for (i, analysis) in analyses.iter().enumerate() {
            let input = inputs
                .iter()
                .find(|s| s.file == analysis.file)
                .expect("analysis of a given input");
            let ast = parse_source(&input.text, &input.file)?;
            let attempts =
                generate_repairs(&ast, &input.text, analysis, &analysis_config, repair, solver)?;
            for a in attempts {
                match (a.candidate, a.failure) {
                    (Some(c), _) => {
                        candidates.insert(a.problem_id, c);
                    }
                    (None, reason) => {
                        failures.insert(a.problem_id, reason.unwrap_or_default());
                    }
                }
            }
            let snapshot = format!("sources/{i:03}.c");
            write_atomic(&dir.join(&snapshot), input.text.as_bytes())?;
            let path = fs::canonicalize(&input.path).unwrap_or_else(|_| input.path.clone());
            files.push(SourceEntry {
                file: input.file.clone(),
                path,
                snapshot,
                bound: analysis.bound.clone(),
            });
            reports.extend(analysis.reports.iter().cloned());
        }
        let store = FindingStore {
            run: RunInfo {
                schema_version: SCHEMA_VERSION,
                run_id: id,
                config: config.clone(),
                files,
            },
            decisions: candidates
                .keys()
                .map(|id| (id.clone(), DecisionRecord::pending()))
                .collect(),
            dir,
            reports,
            candidates,
            failures,
        };
        store.write_all()?;
        Ok(store)
    }

    fn write_all(&self) -> Result<(), StoreError> {
        write_json(
            &self.dir.join("reports.json"),
            &ReportFile {
                schema_version: SCHEMA_VERSION,
                reports: self.reports.clone(),
            },
        )?;
        for (id, c) in &self.candidates {
            write_json(&self.dir.join("candidates").join(format!("{id}.json")), c)?;
        }
        write_json(
            &self.dir.join("failures.json"),
            &FailureFile {
                schema_version: SCHEMA_VERSION,
                failures: self
                    .failures
                    .iter()
                    .map(|(id, reason)| RepairFailure {
                        problem_id: id.clone(),
                        reason: reason.clone(),
                    })
                    .collect(),
            },
        )?;
        self.save_decisions()?;
        // Written last: its presence marks a complete run directory.
        write_json(&self.dir.join("run.json"), &self.run)
    }

    pub fn open(dir: &Path) -> Result<FindingStore, StoreError> {
        let run_path = dir.join("run.json");
        let run: RunInfo = read_json(&run_path)?;
        check_schema(&run_path, run.schema_version)?;
        let reports_path = dir.join("reports.json");
        let reports: ReportFile = read_json(&reports_path)?;
        check_schema(&reports_path, reports.schema_version)?;
        let failures_path = dir.join("failures.json");
        let failures: FailureFile = read_json(&failures_path)?;
        check_schema(&failures_path, failures.schema_version)?;
        let decisions_path = dir.join("decisions.json");
        let decisions: DecisionFile = read_json(&decisions_path)?;
        check_schema(&decisions_path, decisions.schema_version)?;
        let mut candidates = BTreeMap::new();
        for id in decisions.decisions.keys() {
            let path = dir.join("candidates").join(format!("{id}.json"));
            let c: RepairCandidate = read_json(&path)?;
            check_schema(&path, c.schema_version)?;
            candidates.insert(id.clone(), c);
        }
        Ok(FindingStore {
            dir: dir.to_path_buf(),
            run,
            reports: reports.reports,
            candidates,
            failures: failures
                .failures
                .into_iter()
                .map(|f| (f.problem_id, f.reason))
                .collect(),
            decisions: decisions.decisions,
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn save_decisions(&self) -> Result<(), StoreError> {
        write_json(
            &self.dir.join("decisions.json"),
            &DecisionFile {
                schema_version: SCHEMA_VERSION,
                decisions: self.decisions.clone(),
            },
        )
    }

    pub fn report(&self, id: &str) -> Option<&BugReport> {
        self.reports.iter().find(|r| r.problem_id == id)
    }

    fn record(&self, id: &str) -> DecisionRecord {
        self.decisions.get(id).cloned().unwrap_or_else(DecisionRecord::pending)
    }

    pub fn findings(&self) -> Vec<FindingSummary> {
        self.reports
            .iter()
            .map(|r| {
                let d = self.record(&r.problem_id);
                FindingSummary {
                    problem_id: r.problem_id.clone(),
                    checker: r.checker.clone(),
                    file: r.file.clone(),
                    function: r.function.clone(),
                    line: r.line,
                    statement: r.statement.clone(),
                    has_candidate: self.candidates.contains_key(&r.problem_id),
                    decision: d.decision,
                    revalidation: d.revalidation,
                    failure: d.failure.or_else(|| self.failures.get(&r.problem_id).cloned()),
                }
            })
            .collect()
    }

    pub fn finding(&self, id: &str) -> Result<FindingDetail, StoreError> {
        let report = self.report(id).ok_or_else(|| StoreError::UnknownId(id.to_string()))?;
        let candidate = self.candidates.get(id).cloned();
        Ok(FindingDetail {
            report: report.clone(),
            diff: candidate.as_ref().map(|c| c.diff.clone()),
            candidate,
            decision: self.record(id),
            repair_failure: self.failures.get(id).cloned(),
        })
    }

    /// Record a decision. Only `accepted` and `rejected` are accepted from
    /// callers, and applied candidates are final.
    pub fn decide(&mut self, id: &str, decision: Decision) -> Result<(), StoreError> {
        if self.report(id).is_none() {
            return Err(StoreError::UnknownId(id.to_string()));
        }
        let Some(rec) = self.decisions.get_mut(id) else {
            return Err(StoreError::NoCandidate(id.to_string()));
        };
        if rec.decision == Decision::Applied || decision == Decision::Applied {
            return Err(StoreError::AlreadyApplied(id.to_string()));
        }
        rec.decision = decision;
        rec.failure = None;
        self.save_decisions()
    }

    pub fn status(&self) -> StoreStatus {
        let count = |d: Decision| self.decisions.values().filter(|r| r.decision == d).count();
        StoreStatus {
            schema_version: SCHEMA_VERSION,
            run_id: self.run.run_id.clone(),
            reports: self.reports.len(),
            candidates: self.candidates.len(),
            pending: count(Decision::Pending),
            accepted: count(Decision::Accepted),
            rejected: count(Decision::Rejected),
            applied: count(Decision::Applied),
            files: self
                .run
                .files
                .iter()
                .map(|f| FileStatus {
                    file: f.file.clone(),
                    path: f.path.clone(),
                    modified: fs::read(&f.path).ok() != fs::read(self.dir.join(&f.snapshot)).ok(),
                })
                .collect(),
        }
    }

    /// Patch every file with its accepted candidates, revalidate, and mark
    /// them applied. A candidate whose span no longer matches the file is
    /// skipped and keeps its accepted state.
    pub fn apply_accepted(&mut self, solver: &dyn Solver) -> Result<ApplySummary, StoreError> {
        let mut summary = ApplySummary {
            schema_version: SCHEMA_VERSION,
            run_id: self.run.run_id.clone(),
            applied: Vec::new(),
            failed: Vec::new(),
            files: Vec::new(),
        };
        for entry in self.run.files.clone() {
            let ids_of = |d: Decision| -> Vec<String> {
                self.decisions
                    .iter()
                    .filter(|(id, r)| r.decision == d && self.candidates[*id].file == entry.file)
                    .map(|(id, _)| id.clone())
                    .collect()
            };
            let fresh = ids_of(Decision::Accepted);
            if fresh.is_empty() {
                continue;
            }
            let prior = ids_of(Decision::Applied);
            let original = fs::read_to_string(self.dir.join(&entry.snapshot))
                .map_err(io_err(&self.dir.join(&entry.snapshot)))?;
            let disk = fs::read_to_string(&entry.path).map_err(io_err(&entry.path))?;
            let cand = |id: &String| &self.candidates[id];
            let prior_c: Vec<&RepairCandidate> = prior.iter().map(cand).collect();
            let expected = apply_candidates(&original, &prior_c)?.text;

            // On an untouched file, patch from the snapshot so earlier
            // applies do not shift offsets; otherwise each candidate must
            // still match the file as it is.
            let (base, chosen, skipped) = if disk == expected {
                let all: Vec<&RepairCandidate> = prior.iter().chain(&fresh).map(cand).collect();
                (original, all, Vec::new())
            } else {
                let (ok, bad): (Vec<&String>, Vec<&String>) = fresh.iter().partition(|id| {
                    let e = &cand(id).edit;
                    disk.get(e.start..e.end) == Some(e.original.as_str())
                });
                (disk.clone(), ok.into_iter().map(cand).collect(), bad)
            };
            for id in skipped {
                let e = &cand(id).edit;
                let reason = RepairError::SpanDrift {
                    problem_id: id.clone(),
                    start: e.start,
                    end: e.end,
                }
                .to_string();
                summary.failed.push(RepairFailure {
                    problem_id: id.clone(),
                    reason: reason.clone(),
                });
                self.decisions.get_mut(id).expect("decided").failure = Some(reason);
            }
            let newly: Vec<&RepairCandidate> = chosen
                .iter()
                .copied()
                .filter(|c| fresh.contains(&c.problem_id))
                .collect();
            if newly.is_empty() {
                continue;
            }
            let patched = match apply_candidates(&base, &chosen) {
                Ok(p) => p,
                Err(e) => {
                    for c in &newly {
                        summary.failed.push(RepairFailure {
                            problem_id: c.problem_id.clone(),
                            reason: e.to_string(),
                        });
                    }
                    continue;
                }
            };
            write_atomic(&entry.path, patched.text.as_bytes())?;

            let mut config = self.run.config.analysis();
            config.bound = Some(entry.bound.clone());
            let before: Vec<BugReport> = self
                .reports
                .iter()
                .filter(|r| r.file == entry.file)
                .cloned()
                .collect();
            let reval = revalidate(
                &patched.text,
                &entry.file,
                &patched.applied(&chosen),
                &before,
                &config,
                solver,
            )?;
            for outcome in &reval.outcomes {
                if !fresh.contains(&outcome.problem_id) {
                    continue;
                }
                let rec = self.decisions.get_mut(&outcome.problem_id).expect("decided");
                rec.decision = Decision::Applied;
                rec.revalidation = Some(outcome.status);
                rec.failure = None;
                summary.applied.push(AppliedCandidate {
                    problem_id: outcome.problem_id.clone(),
                    file: entry.file.clone(),
                    status: outcome.status,
                });
            }
            summary.files.push(reval);
        }
        self.save_decisions()?;
        Ok(summary)
    }
}
