//! Seeded benchmark corpora with ground-truth manifests, and a runner that
//! scores detection and repair against them.

mod gen;
mod run;

use std::path::PathBuf;

use thiserror::Error;

use crate::analysis::AnalysisError;
use crate::repair::RepairError;
use crate::solver::SolverError;

pub use gen::{
    corpus_specs, generate_program, BenchSpec, Decoy, DecoyKind, GeneratedProgram, LocClass,
    ManifestEntry,
};
pub use run::{
    generate_corpus, metrics_table, read_manifest, run_corpus, run_program, write_manifest, write_outputs, ClassMetrics,
    CorpusMetrics, CorpusRun, ProgramResult, RunOptions, MANIFEST_FILE,
};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid benchmark spec: {0}")]
    InvalidSpec(String),
    #[error("generated decoy at line {0} is not overflow-free")]
    UnsafeDecoy(u32),
    #[error("manifest does not match corpus file {file}: {reason}")]
    ManifestMismatch { file: String, reason: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("manifest line {line}: {source}")]
    Manifest {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Repair(#[from] RepairError),
}

impl BenchError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> BenchError {
        BenchError::Io {
            path: path.into(),
            source,
        }
    }
}
