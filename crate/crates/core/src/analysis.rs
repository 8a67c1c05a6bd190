//! One-call analysis of a source file: parse, discover the bound, explore
//! paths with the overflow checker, and number the reports.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::checker::{
    assign_problem_ids, bound_from_table, BoundInfo, BugReport, LimitTable, LimitsError,
    OverflowChecker,
};
use crate::frontend::{parse_translation_unit, FrontendError, TypedAst};
use crate::solver::Solver;
use crate::symexec::{Engine, ExecConfig, ExecDiagnostic, ExecError, PathStats};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("{0}")]
    Frontend(String),
    #[error(transparent)]
    Limits(#[from] LimitsError),
    #[error(transparent)]
    Exec(#[from] ExecError),
}

impl AnalysisError {
    pub fn frontend(e: &FrontendError, file: &str) -> AnalysisError {
        AnalysisError::Frontend(e.render(file))
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct AnalysisConfig {
    pub exec: ExecConfig,
    pub limits_path: Option<PathBuf>,
    /// Skip discovery and use this bound.
    pub bound: Option<BoundInfo>,
}

impl AnalysisConfig {
    pub fn limit_table(&self) -> Result<LimitTable, LimitsError> {
        match &self.limits_path {
            Some(p) => LimitTable::load(p),
            None => Ok(LimitTable::default()),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FileAnalysis {
    pub file: String,
    pub bound: BoundInfo,
    pub reports: Vec<BugReport>,
    pub diagnostics: Vec<ExecDiagnostic>,
    pub stats: PathStats,
}

pub fn parse_source(source: &str, file: &str) -> Result<TypedAst, AnalysisError> {
    parse_translation_unit(source, file).map_err(|e| AnalysisError::frontend(&e, file))
}

/// Analyze one translation unit. Report ids are numbered from 1 in
/// (line, column, path) order; callers combining several files renumber with
/// [`assign_problem_ids`].
pub fn analyze_source(
    source: &str,
    file: &str,
    config: &AnalysisConfig,
    solver: &dyn Solver,
) -> Result<FileAnalysis, AnalysisError> {
    let ast = parse_source(source, file)?;
    analyze_ast(&ast, source, config, solver)
}

pub fn analyze_ast(
    ast: &TypedAst,
    source: &str,
    config: &AnalysisConfig,
    solver: &dyn Solver,
) -> Result<FileAnalysis, AnalysisError> {
    let table = config.limit_table()?;
    let bound = match &config.bound {
        Some(b) => b.clone(),
        None => bound_from_table(ast, &table),
    };
    let mut engine = Engine::new(ast, source, table, config.exec);
    engine.register_checker(Box::new(OverflowChecker::new(bound.clone())));
    let out = engine.run(solver)?;
    let mut reports = out.reports;
    reports.sort_by(|a, b| (a.line, a.col, &a.decisions).cmp(&(b.line, b.col, &b.decisions)));
    assign_problem_ids(&mut reports);
    Ok(FileAnalysis {
        file: ast.file.clone(),
        bound,
        reports,
        diagnostics: out.diagnostics,
        stats: out.stats,
    })
}
