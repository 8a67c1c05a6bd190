//! `ovguard` command-line interface.
//!
//! Exit codes: 0 success, 1 findings reported (`analyze`) or candidates not
//! revalidated (`repair --yes`, `apply`), 2 source parse error, 3 solver
//! unavailable, 4 any other error, 64 usage error.

use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ovguard::analysis::AnalysisError;
use ovguard::bench::{
    corpus_specs, generate_corpus, metrics_table, read_manifest, run_corpus, write_outputs,
    BenchError, LocClass, RunOptions, MANIFEST_FILE,
};
use ovguard::config::{ConfigError, RunConfig, SolverChoice};
use ovguard::repair::{RepairError, SCHEMA_VERSION};
use ovguard::service::{ReviewServer, ReviewService};
use ovguard::solver::SolverError;
use ovguard::store::{
    analyze_files, write_atomic, ApplySummary, Decision, FindingStore, ReportFile, SourceInput,
    StoreError,
};
use ovguard::symexec::ExecError;

#[derive(Parser)]
#[command(name = "ovguard", version, about = "Detect and repair integer overflows in C sources")]
struct Cli {
    #[command(flatten)]
    config: ConfigArgs,
    #[command(subcommand)]
    command: Command,
}

/// Overrides for the run configuration file.
#[derive(Args)]
struct ConfigArgs {
    /// Key-value configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Loop unroll bound.
    #[arg(long, global = true)]
    unroll: Option<u32>,
    /// Maximum inlined call depth.
    #[arg(long, global = true)]
    call_depth: Option<usize>,
    /// `builtin` or the path of an SMT-LIB v2 solver.
    #[arg(long, global = true)]
    solver: Option<String>,
    #[arg(long, global = true)]
    solver_timeout_ms: Option<u64>,
    /// File of limit macro values.
    #[arg(long, global = true)]
    limits: Option<PathBuf>,
    /// Repair pattern pool.
    #[arg(long, global = true)]
    patterns: Option<PathBuf>,
    /// Failure handler variant: v1 or v2.
    #[arg(long, global = true)]
    handler: Option<String>,
    /// Worker threads.
    #[arg(long, global = true)]
    workers: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Report integer overflows as JSON.
    Analyze {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        /// Write the report here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Analyze and stage repair candidates in a run directory.
    Repair {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        /// Directory holding run directories.
        #[arg(long, default_value = ".ovguard/runs")]
        store: PathBuf,
        /// Accept and apply every candidate.
        #[arg(long)]
        yes: bool,
    },
    /// Accept the given candidates and apply all accepted ones.
    Apply {
        /// Run directory printed by `repair`.
        #[arg(long)]
        run: PathBuf,
        ids: Vec<String>,
        /// Accept every pending candidate.
        #[arg(long)]
        all: bool,
    },
    /// Seeded benchmark corpora.
    Bench {
        #[command(subcommand)]
        command: BenchCommand,
    },
    /// Serve the review API for a run.
    Serve {
        #[arg(long)]
        run: PathBuf,
        #[arg(long, default_value = "127.0.0.1:8787")]
        bind: SocketAddr,
        /// Permit a non-loopback bind address.
        #[arg(long)]
        allow_remote: bool,
    },
}

#[derive(Subcommand)]
enum BenchCommand {
    /// Generate a corpus and its manifest.
    Gen {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 100)]
        count: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Comma-separated LOC classes cycled through: 500, 1k, 2k, 6k, 11k, 20k.
        #[arg(long, value_delimiter = ',', default_value = "500,1k,2k")]
        classes: Vec<LocClass>,
        /// Fix the helper call count of every program.
        #[arg(long)]
        functions: Option<usize>,
        /// Fix the loop iteration count of every program.
        #[arg(long)]
        loops: Option<usize>,
        /// Fix the decoy count of every program.
        #[arg(long)]
        false_positives: Option<usize>,
        /// Fix the nesting depth of every seeded site.
        #[arg(long)]
        depth: Option<usize>,
    },
    /// Run a corpus against its manifest.
    Run {
        dir: PathBuf,
        /// Timed repetitions per program.
        #[arg(long, default_value_t = 1)]
        runs: usize,
        /// Directory for reports.json, candidates.json and metrics.json.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Run programs concurrently.
        #[arg(long)]
        parallel: bool,
    },
}

enum Failure {
    Parse(String),
    Solver(String),
    Other(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Parse(_) => 2,
            Failure::Solver(_) => 3,
            Failure::Other(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Parse(m) | Failure::Solver(m) | Failure::Other(m) => m,
        }
    }
}

impl From<AnalysisError> for Failure {
    fn from(e: AnalysisError) -> Self {
        match e {
            AnalysisError::Frontend(m) => Failure::Parse(m),
            AnalysisError::Exec(ExecError::Solver(s)) => Failure::from(s),
            e => Failure::Other(e.to_string()),
        }
    }
}

impl From<SolverError> for Failure {
    fn from(e: SolverError) -> Self {
        match e {
            SolverError::Unavailable(_) => Failure::Solver(e.to_string()),
            e => Failure::Other(e.to_string()),
        }
    }
}

impl From<RepairError> for Failure {
    fn from(e: RepairError) -> Self {
        match e {
            RepairError::SolverUnavailable(s) => Failure::from(s),
            RepairError::Analysis(a) => Failure::from(a),
            e => Failure::Other(e.to_string()),
        }
    }
}

impl From<StoreError> for Failure {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::Analysis(a) => Failure::from(a),
            StoreError::Repair(r) => Failure::from(r),
            e => Failure::Other(e.to_string()),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::MissingSolver(_) => Failure::Solver(e.to_string()),
            e => Failure::Other(e.to_string()),
        }
    }
}

impl From<BenchError> for Failure {
    fn from(e: BenchError) -> Self {
        match e {
            BenchError::Analysis(a) => Failure::from(a),
            BenchError::Repair(r) => Failure::from(r),
            BenchError::Solver(s) => Failure::from(s),
            e => Failure::Other(e.to_string()),
        }
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Other(e.to_string())
    }
}

fn run_config(args: &ConfigArgs) -> Result<RunConfig, Failure> {
    let mut c = match &args.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(v) = args.unroll {
        c.unroll = v;
    }
    if let Some(v) = args.call_depth {
        c.call_depth = v;
    }
    if let Some(v) = &args.solver {
        c.solver = if v == "builtin" {
            SolverChoice::Builtin
        } else {
            SolverChoice::Process(PathBuf::from(v))
        };
    }
    if let Some(v) = args.solver_timeout_ms {
        c.solver_timeout_ms = v;
    }
    if let Some(v) = &args.limits {
        c.limits = Some(v.clone());
    }
    if let Some(v) = &args.patterns {
        c.patterns = Some(v.clone());
    }
    if let Some(v) = &args.handler {
        c.handler = v.parse().map_err(Failure::Other)?;
    }
    if let Some(v) = args.workers {
        c.workers = v;
    }
    c.validate()?;
    Ok(c)
}

fn read_inputs(files: &[PathBuf]) -> Result<Vec<SourceInput>, Failure> {
    files
        .iter()
        .map(|p| SourceInput::read(p).map_err(Failure::from))
        .collect()
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value)?;
    let mut out = std::io::stdout().lock();
    writeln!(out, "{text}").map_err(|e| Failure::Other(e.to_string()))
}

fn apply_exit(summary: &ApplySummary) -> u8 {
    if summary.failed.is_empty() && summary.revalidated() == summary.applied.len() {
        0
    } else {
        1
    }
}

fn analyze(config: &RunConfig, files: &[PathBuf], out: Option<&Path>) -> Result<u8, Failure> {
    let inputs = read_inputs(files)?;
    let solver = config.solver();
    let analyses = analyze_files(&inputs, &config.analysis(), &solver)?;
    let report = ReportFile {
        schema_version: SCHEMA_VERSION,
        reports: analyses.into_iter().flat_map(|a| a.reports).collect(),
    };
    let mut text = serde_json::to_string_pretty(&report)?;
    text.push('\n');
    match out {
        Some(p) => write_atomic(p, text.as_bytes())?,
        None => print!("{text}"),
    }
    Ok(if report.reports.is_empty() { 0 } else { 1 })
}

fn repair(config: &RunConfig, files: &[PathBuf], root: &Path, yes: bool) -> Result<u8, Failure> {
    let inputs = read_inputs(files)?;
    let solver = config.solver();
    let repair_config = config.repair()?;
    let mut store = FindingStore::create(root, &inputs, config, &repair_config, &solver)?;
    eprintln!("run {}", store.dir().display());
    eprintln!(
        "{} report(s), {} candidate(s), {} failure(s)",
        store.reports.len(),
        store.candidates.len(),
        store.failures.len()
    );
    for (id, reason) in &store.failures {
        eprintln!("{id}: no repair: {reason}");
    }
    if !(yes || config.auto_apply) {
        for c in store.candidates.values() {
            eprintln!("{} {}:{} {}", c.problem_id, c.file, c.line, c.statement);
            eprint!("{}", c.diff);
        }
        return Ok(0);
    }
    let pending: Vec<String> = store
        .decisions
        .iter()
        .filter(|(_, d)| d.decision == Decision::Pending)
        .map(|(id, _)| id.clone())
        .collect();
    for id in pending {
        store.decide(&id, Decision::Accepted)?;
    }
    let summary = store.apply_accepted(&solver)?;
    print_json(&summary)?;
    Ok(apply_exit(&summary))
}

fn apply(config: &RunConfig, run: &Path, ids: &[String], all: bool) -> Result<u8, Failure> {
    let mut store = FindingStore::open(run)?;
    let mut accept: Vec<String> = ids.to_vec();
    if all {
        accept.extend(
            store
                .decisions
                .iter()
                .filter(|(_, d)| d.decision == Decision::Pending)
                .map(|(id, _)| id.clone()),
        );
    }
    for id in &accept {
        store.decide(id, Decision::Accepted)?;
    }
    let summary = store.apply_accepted(&config.solver())?;
    print_json(&summary)?;
    Ok(apply_exit(&summary))
}

fn serve(config: &RunConfig, run: &Path, bind: SocketAddr, allow_remote: bool) -> Result<u8, Failure> {
    let store = FindingStore::open(run)?;
    let service = ReviewService::new(store, config.solver());
    let server = ReviewServer::bind(bind, allow_remote, service).map_err(|e| Failure::Other(e.to_string()))?;
    eprintln!("serving http://{}/api", server.local_addr());
    server.run();
    Ok(0)
}

fn bench(config: &RunConfig, command: BenchCommand) -> Result<u8, Failure> {
    let solver = config.solver();
    match command {
        BenchCommand::Gen {
            out,
            count,
            seed,
            classes,
            functions,
            loops,
            false_positives,
            depth,
        } => {
            let mut specs = corpus_specs(count, seed, &classes);
            for s in &mut specs {
                s.functions = functions.unwrap_or(s.functions);
                s.loops = loops.unwrap_or(s.loops);
                s.false_positives = false_positives.unwrap_or(s.false_positives);
                s.seed_depth = depth.unwrap_or(s.seed_depth);
            }
            let entries = generate_corpus(&out, &specs, &solver)?;
            eprintln!("{} program(s) in {}", entries.len(), out.display());
            Ok(0)
        }
        BenchCommand::Run {
            dir,
            runs,
            out,
            parallel,
        } => {
            let entries = read_manifest(&dir.join(MANIFEST_FILE))?;
            let opts = RunOptions {
                analysis: config.analysis(),
                repair: config.repair()?,
                runs,
                parallel,
            };
            let run = run_corpus(&dir, &entries, &opts, &solver)?;
            if let Some(out) = out {
                write_outputs(&out, &run)?;
            }
            print!("{}", metrics_table(&run.metrics));
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return ExitCode::from(if usage { 64 } else { 0 });
        }
    };
    let result = run_config(&cli.config).and_then(|config| {
        // A second initialization only happens in tests; ignore it.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(config.workers)
            .build_global();
        match cli.command {
            Command::Analyze { files, out } => analyze(&config, &files, out.as_deref()),
            Command::Repair { files, store, yes } => repair(&config, &files, &store, yes),
            Command::Apply { run, ids, all } => apply(&config, &run, &ids, all),
            Command::Bench { command } => bench(&config, command),
            Command::Serve {
                run,
                bind,
                allow_remote,
            } => serve(&config, &run, bind, allow_remote),
        }
    });
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
