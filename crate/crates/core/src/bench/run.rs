//! Corpus generation on disk, manifest I/O, and scored runs.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{analyze_ast, parse_source, AnalysisConfig};
use crate::checker::BugReport;
use crate::repair::{
    apply_candidates, generate_repairs, revalidate, RepairAttempt, RepairCandidate, RepairConfig,
    RevalidationSummary,
};
use crate::solver::Solver;

use super::gen::{generate_program, BenchSpec, ManifestEntry};
use super::BenchError;

pub const MANIFEST_FILE: &str = "manifest.jsonl";

/// Write `prog_NNN.c` for each spec and the JSON-lines manifest into `dir`.
pub fn generate_corpus(
    dir: &Path,
    specs: &[BenchSpec],
    solver: &dyn Solver,
) -> Result<Vec<ManifestEntry>, BenchError> {
    fs::create_dir_all(dir).map_err(|e| BenchError::io(dir, e))?;
    let mut entries = Vec::with_capacity(specs.len());
    for (i, spec) in specs.iter().enumerate() {
        let name = format!("prog_{i:03}.c");
        let prog = generate_program(spec, &name, solver)?;
        let path = dir.join(&name);
        fs::write(&path, &prog.source).map_err(|e| BenchError::io(&path, e))?;
        entries.push(prog.entry);
    }
    write_manifest(&dir.join(MANIFEST_FILE), &entries)?;
    Ok(entries)
}

pub fn write_manifest(path: &Path, entries: &[ManifestEntry]) -> Result<(), BenchError> {
    let mut text = String::new();
    for e in entries {
        text.push_str(&serde_json::to_string(e)?);
        text.push('\n');
    }
    fs::write(path, text).map_err(|e| BenchError::io(path, e))
}

pub fn read_manifest(path: &Path) -> Result<Vec<ManifestEntry>, BenchError> {
    let text = fs::read_to_string(path).map_err(|e| BenchError::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|source| BenchError::Manifest { line: i + 1, source }))
        .collect()
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub analysis: AnalysisConfig,
    pub repair: RepairConfig,
    /// Timed repetitions per program; timings are averaged.
    pub runs: usize,
    /// Run programs concurrently. Timings then include contention.
    pub parallel: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProgramResult {
    pub file: String,
    pub class: String,
    pub true_positive: bool,
    /// Lines of reports other than the seeded one.
    pub false_positive_lines: Vec<u32>,
    pub reports: Vec<BugReport>,
    pub attempts: Vec<RepairAttempt>,
    pub revalidation: RevalidationSummary,
    pub detect_secs: f64,
    pub repair_secs: f64,
    pub revalidate_secs: f64,
    pub loc_before: usize,
    pub loc_after: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub programs: usize,
    pub loc: usize,
    pub avg_detect_secs: f64,
    pub avg_repair_secs: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CorpusMetrics {
    pub programs: usize,
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    pub decoys: usize,
    /// Percent of programs whose seeded site was reported.
    pub detection_rate: f64,
    pub candidates: usize,
    pub revalidated: usize,
    pub repair_failures: usize,
    pub detect_secs: f64,
    pub repair_secs: f64,
    pub revalidate_secs: f64,
    /// Repair time as a percent of detection time.
    pub repair_overhead_pct: f64,
    pub loc_before: usize,
    pub loc_after: usize,
    pub loc_increase_pct: f64,
    pub per_class: BTreeMap<String, ClassMetrics>,
}

impl CorpusMetrics {
    pub fn from_results(results: &[ProgramResult], entries: &[ManifestEntry]) -> CorpusMetrics {
        let mut m = CorpusMetrics {
            programs: results.len(),
            decoys: entries.iter().map(|e| e.decoys.len()).sum(),
            ..CorpusMetrics::default()
        };
        for r in results {
            m.true_positives += r.true_positive as usize;
            m.false_negatives += !r.true_positive as usize;
            m.false_positives += r.false_positive_lines.len();
            for a in &r.attempts {
                match &a.candidate {
                    Some(_) => m.candidates += 1,
                    None => m.repair_failures += 1,
                }
            }
            m.revalidated += r
                .revalidation
                .outcomes
                .iter()
                .filter(|o| o.status == crate::repair::ValidationStatus::Revalidated)
                .count();
            m.detect_secs += r.detect_secs;
            m.repair_secs += r.repair_secs;
            m.revalidate_secs += r.revalidate_secs;
            m.loc_before += r.loc_before;
            m.loc_after += r.loc_after;
            let c = m.per_class.entry(r.class.clone()).or_default();
            c.programs += 1;
            c.loc += r.loc_before;
            c.avg_detect_secs += r.detect_secs;
            c.avg_repair_secs += r.repair_secs;
        }
        for c in m.per_class.values_mut() {
            c.avg_detect_secs /= c.programs as f64;
            c.avg_repair_secs /= c.programs as f64;
        }
        m.detection_rate = percent(m.true_positives, m.programs);
        m.repair_overhead_pct = ratio_pct(m.repair_secs, m.detect_secs);
        m.loc_increase_pct = percent(m.loc_after - m.loc_before, m.loc_before);
        m
    }
}

fn percent(n: usize, d: usize) -> f64 {
    if d == 0 {
        0.0
    } else {
        100.0 * n as f64 / d as f64
    }
}

fn ratio_pct(n: f64, d: f64) -> f64 {
    if d == 0.0 {
        0.0
    } else {
        100.0 * n / d
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusRun {
    pub results: Vec<ProgramResult>,
    pub metrics: CorpusMetrics,
}

fn loc(text: &str) -> usize {
    text.lines().count()
}

fn check_entry(source: &str, entry: &ManifestEntry) -> Result<(), BenchError> {
    let mismatch = |reason: String| BenchError::ManifestMismatch {
        file: entry.file.clone(),
        reason,
    };
    let line = source
        .lines()
        .nth((entry.tp_line as usize).saturating_sub(1))
        .filter(|_| entry.tp_line > 0)
        .ok_or_else(|| mismatch(format!("line {} is past the end of the file", entry.tp_line)))?;
    if line.trim() != entry.tp_statement.trim() {
        return Err(mismatch(format!(
            "line {} is `{}`, expected `{}`",
            entry.tp_line,
            line.trim(),
            entry.tp_statement
        )));
    }
    Ok(())
}

/// Detect, repair every report, apply all candidates and revalidate one
/// corpus program.
pub fn run_program(
    dir: &Path,
    entry: &ManifestEntry,
    opts: &RunOptions,
    solver: &dyn Solver,
) -> Result<ProgramResult, BenchError> {
    let path = dir.join(&entry.file);
    let source = fs::read_to_string(&path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            BenchError::ManifestMismatch {
                file: entry.file.clone(),
                reason: "file is missing".into(),
            }
        } else {
            BenchError::io(&path, e)
        }
    })?;
    check_entry(&source, entry)?;
    let runs = opts.runs.max(1);

    let ast = parse_source(&source, &entry.file)?;
    let mut detect_secs = 0.0;
    let mut analysis = None;
    for _ in 0..runs {
        let t = Instant::now();
        analysis = Some(analyze_ast(&ast, &source, &opts.analysis, solver)?);
        detect_secs += t.elapsed().as_secs_f64();
    }
    let analysis = analysis.expect("at least one run");

    let mut repair_secs = 0.0;
    let mut repaired = None;
    for _ in 0..runs {
        let t = Instant::now();
        let attempts = generate_repairs(&ast, &source, &analysis, &opts.analysis, &opts.repair, solver)?;
        let cands: Vec<&RepairCandidate> = attempts.iter().filter_map(|a| a.candidate.as_ref()).collect();
        let patched = apply_candidates(&source, &cands)?;
        repair_secs += t.elapsed().as_secs_f64();
        repaired = Some((attempts.clone(), patched));
    }
    let (attempts, patched) = repaired.expect("at least one run");

    let mut reval_config = opts.analysis.clone();
    reval_config.bound = Some(analysis.bound.clone());
    let cands: Vec<&RepairCandidate> = attempts.iter().filter_map(|a| a.candidate.as_ref()).collect();
    let t = Instant::now();
    let revalidation = revalidate(
        &patched.text,
        &entry.file,
        &patched.applied(&cands),
        &analysis.reports,
        &reval_config,
        solver,
    )?;
    let revalidate_secs = t.elapsed().as_secs_f64();

    let true_positive = analysis.reports.iter().any(|r| r.line == entry.tp_line);
    let false_positive_lines = analysis
        .reports
        .iter()
        .filter(|r| r.line != entry.tp_line)
        .map(|r| r.line)
        .collect();
    Ok(ProgramResult {
        file: entry.file.clone(),
        class: entry.spec.loc_class.name().to_string(),
        true_positive,
        false_positive_lines,
        reports: analysis.reports,
        attempts,
        revalidation,
        detect_secs: detect_secs / runs as f64,
        repair_secs: repair_secs / runs as f64,
        revalidate_secs,
        loc_before: loc(&source),
        loc_after: loc(&patched.text),
    })
}

/// Run every manifest entry. Results are in manifest order regardless of
/// scheduling.
pub fn run_corpus(
    dir: &Path,
    entries: &[ManifestEntry],
    opts: &RunOptions,
    solver: &dyn Solver,
) -> Result<CorpusRun, BenchError> {
    let results: Vec<ProgramResult> = if opts.parallel {
        entries
            .par_iter()
            .map(|e| run_program(dir, e, opts, solver))
            .collect::<Result<_, _>>()?
    } else {
        entries
            .iter()
            .map(|e| run_program(dir, e, opts, solver))
            .collect::<Result<_, _>>()?
    };
    let metrics = CorpusMetrics::from_results(&results, entries);
    Ok(CorpusRun { results, metrics })
}

#[derive(Serialize)]
struct FileReports<'a> {
    file: &'a str,
    reports: &'a [BugReport],
}

#[derive(Serialize)]
struct FileAttempts<'a> {
    file: &'a str,
    attempts: &'a [RepairAttempt],
}

/// Write `reports.json` and `candidates.json` (deterministic for a given
/// corpus) and `metrics.json` (contains timings) into `dir`.
pub fn write_outputs(dir: &Path, run: &CorpusRun) -> Result<(), BenchError> {
    fs::create_dir_all(dir).map_err(|e| BenchError::io(dir, e))?;
    let write = |name: &str, text: String| {
        let path = dir.join(name);
        fs::write(&path, text + "\n").map_err(|e| BenchError::io(&path, e))
    };
    let reports: Vec<FileReports> = run
        .results
        .iter()
        .map(|r| FileReports {
            file: &r.file,
            reports: &r.reports,
        })
        .collect();
    write("reports.json", serde_json::to_string_pretty(&reports)?)?;
    let attempts: Vec<FileAttempts> = run
        .results
        .iter()
        .map(|r| FileAttempts {
            file: &r.file,
            attempts: &r.attempts,
        })
        .collect();
    write("candidates.json", serde_json::to_string_pretty(&attempts)?)?;
    write("metrics.json", serde_json::to_string_pretty(&run.metrics)?)
}

/// Human-readable rendering of the metrics.
pub fn metrics_table(m: &CorpusMetrics) -> String {
    let mut out = String::new();
    let mut row = |k: &str, v: String| out.push_str(&format!("{k:<22} {v}\n"));
    row("programs", m.programs.to_string());
    row("true positives", m.true_positives.to_string());
    row("false positives", m.false_positives.to_string());
    row("false negatives", m.false_negatives.to_string());
    row("decoys", m.decoys.to_string());
    row("detection rate", format!("{:.1}%", m.detection_rate));
    row("candidates", m.candidates.to_string());
    row("revalidated", m.revalidated.to_string());
    row("repair failures", m.repair_failures.to_string());
    row("detection time", format!("{:.3}s", m.detect_secs));
    row("repair time", format!("{:.3}s", m.repair_secs));
    row("revalidation time", format!("{:.3}s", m.revalidate_secs));
    row("repair overhead", format!("{:.2}%", m.repair_overhead_pct));
    row("LOC before", m.loc_before.to_string());
    row("LOC after", m.loc_after.to_string());
    row("LOC increase", format!("{:.2}%", m.loc_increase_pct));
    out.push_str(&format!(
        "\n{:<8} {:>8} {:>10} {:>14} {:>14}\n",
        "class", "programs", "LOC", "avg detect s", "avg repair s"
    ));
    for (class, c) in &m.per_class {
        out.push_str(&format!(
            "{class:<8} {:>8} {:>10} {:>14.3} {:>14.4}\n",
            c.programs, c.loc, c.avg_detect_secs, c.avg_repair_secs
        ));
    }
    out
}
