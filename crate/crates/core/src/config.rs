//! Run configuration: a flat `key = value` file plus command-line overrides.
//!
//! ```text
//! # comments start with '#'
//! unroll = 10
//! call_depth = 8
//! solver = "builtin"          # or a path to an SMT-LIB v2 solver binary
//! solver_timeout_ms = 10000
//! limits = "limits.txt"
//! patterns = "patterns.toml"
//! handler = "v2"              # v1 logs, v2 calls a handler function
//! auto_apply = false
//! workers = 4
//! ```
//!
//! Strings are quoted; numbers and booleans are bare.

use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::AnalysisConfig;
use crate::repair::{HandlerVariant, PatternPool, RepairConfig};
use crate::solver::{BuiltinSolver, ProcessSolver, SolverBackend};
use crate::symexec::ExecConfig;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Syntax { path: PathBuf, message: String },
    #[error("`{key}` must be positive")]
    NotPositive { key: &'static str },
    #[error("{key} file not found: {path}")]
    MissingFile { key: &'static str, path: PathBuf },
    #[error("solver binary not found: {0}")]
    MissingSolver(PathBuf),
    #[error("pattern pool {path}: {message}")]
    Patterns { path: PathBuf, message: String },
}

/// Where satisfiability checks go.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverChoice {
    Builtin,
    Process(PathBuf),
}

impl SolverChoice {
    fn parse(s: &str) -> SolverChoice {
        if s == "builtin" {
            SolverChoice::Builtin
        } else {
            SolverChoice::Process(PathBuf::from(s))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunConfig {
    pub unroll: u32,
    pub call_depth: usize,
    pub solver: SolverChoice,
    pub solver_timeout_ms: u64,
    pub limits: Option<PathBuf>,
    pub patterns: Option<PathBuf>,
    pub handler: HandlerVariant,
    pub auto_apply: bool,
    pub workers: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        let walk = crate::cfg::WalkConfig::default();
        RunConfig {
            unroll: walk.unroll_bound,
            call_depth: walk.max_call_depth,
            solver: SolverChoice::Builtin,
            solver_timeout_ms: 10_000,
            limits: None,
            patterns: None,
            handler: HandlerVariant::default(),
            auto_apply: false,
            workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
        }
    }
}

/// Every key optional; present keys override defaults.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    unroll: Option<u32>,
    call_depth: Option<usize>,
    solver: Option<String>,
    solver_timeout_ms: Option<u64>,
    limits: Option<PathBuf>,
    patterns: Option<PathBuf>,
    handler: Option<String>,
    auto_apply: Option<bool>,
    workers: Option<usize>,
}

impl RunConfig {
    /// Defaults overridden by the file at `path`. Relative file paths in the
    /// file resolve against its directory.
    pub fn load(path: &Path) -> Result<RunConfig, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        RunConfig::parse(&text, path)
    }

    pub fn parse(text: &str, path: &Path) -> Result<RunConfig, ConfigError> {
        let syntax = |message: String| ConfigError::Syntax {
            path: path.to_path_buf(),
            message,
        };
        let f: ConfigFile = toml::from_str(text).map_err(|e| syntax(e.message().to_string()))?;
        let base = path.parent().unwrap_or(Path::new(""));
        let resolve = |p: PathBuf| if p.is_relative() { base.join(p) } else { p };
        let mut c = RunConfig::default();
        if let Some(v) = f.unroll {
            c.unroll = v;
        }
        if let Some(v) = f.call_depth {
            c.call_depth = v;
        }
        if let Some(v) = f.solver {
            c.solver = SolverChoice::parse(&v);
        }
        if let Some(v) = f.solver_timeout_ms {
            c.solver_timeout_ms = v;
        }
        c.limits = f.limits.map(resolve);
        c.patterns = f.patterns.map(resolve);
        if let Some(v) = f.handler {
            c.handler = v.parse().map_err(syntax)?;
        }
        if let Some(v) = f.auto_apply {
            c.auto_apply = v;
        }
        if let Some(v) = f.workers {
            c.workers = v;
        }
        Ok(c)
    }

    /// Startup checks: numeric knobs positive, named files present.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.unroll == 0 {
            return Err(ConfigError::NotPositive { key: "unroll" });
        }
        if self.call_depth == 0 {
            return Err(ConfigError::NotPositive { key: "call_depth" });
        }
        if self.solver_timeout_ms == 0 {
            return Err(ConfigError::NotPositive { key: "solver_timeout_ms" });
        }
        if self.workers == 0 {
            return Err(ConfigError::NotPositive { key: "workers" });
        }
        for (key, p) in [("limits", &self.limits), ("patterns", &self.patterns)] {
            if let Some(p) = p {
                if !p.is_file() {
                    return Err(ConfigError::MissingFile { key, path: p.clone() });
                }
            }
        }
        if let SolverChoice::Process(p) = &self.solver {
            if !solver_exists(p) {
                return Err(ConfigError::MissingSolver(p.clone()));
            }
        }
        Ok(())
    }

    pub fn analysis(&self) -> AnalysisConfig {
        let mut exec = ExecConfig::default();
        exec.walk.unroll_bound = self.unroll;
        exec.walk.max_call_depth = self.call_depth;
        AnalysisConfig {
            exec,
            limits_path: self.limits.clone(),
            bound: None,
        }
    }

    pub fn repair(&self) -> Result<RepairConfig, ConfigError> {
        let pool = match &self.patterns {
            Some(p) => PatternPool::load(p).map_err(|e| ConfigError::Patterns {
                path: p.clone(),
                message: e.to_string(),
            })?,
            None => PatternPool::default(),
        };
        Ok(RepairConfig {
            pool,
            handler: self.handler,
        })
    }

    pub fn solver(&self) -> SolverBackend {
        match &self.solver {
            SolverChoice::Builtin => SolverBackend::Builtin(BuiltinSolver::default()),
            SolverChoice::Process(p) => {
                let mut s = ProcessSolver::new(p);
                s.timeout = Duration::from_millis(self.solver_timeout_ms);
                SolverBackend::Process(s)
            }
        }
    }
}

/// A path with a separator must exist; a bare name is looked up on `PATH`.
fn solver_exists(p: &Path) -> bool {
    if p.components().count() > 1 {
        return p.is_file();
    }
    std::env::var_os("PATH")
        .map(|paths| std::env::split_paths(&paths).any(|d| d.join(p).is_file()))
        .unwrap_or(false)
}
