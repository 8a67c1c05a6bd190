//! Acceptance suite: one PASS/FAIL/SKIP line per criterion. Runs without the
//! libtest harness so the lines always reach standard output; exits non-zero
//! when any criterion fails.

mod support;

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use ovguard::analysis::{analyze_ast, analyze_source, parse_source, AnalysisConfig};
use ovguard::bench::{
    corpus_specs, generate_corpus, generate_program, run_corpus, write_outputs, BenchSpec,
    CorpusRun, LocClass, ManifestEntry, RunOptions,
};
use ovguard::checker::BoundInfo;
use ovguard::frontend::{parse_translation_unit, LimitMacro, Span, TypedAst};
use ovguard::repair::{
    apply_candidates, generate_repairs, revalidate, HandlerVariant, RepairCandidate, RepairConfig,
    ValidationStatus,
};
use ovguard::solver::BuiltinSolver;
use ovguard::symexec::DiagnosticKind;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use support::{all_char_pairs, function_source, Halt, Interp, ProgGen};
use tempfile::TempDir;

const CORPUS_SIZE: usize = 100;
const CORPUS_SEED: u64 = 1;
const ORACLE_PROGRAMS: u64 = 200;
const SOUNDNESS_PROGRAMS: u64 = 80;

enum Verdict {
    Pass(String),
    Fail(String),
    Skip(String),
}

type Check = Result<String, String>;

fn verdict(c: Check) -> Verdict {
    match c {
        Ok(s) => Verdict::Pass(s),
        Err(s) => Verdict::Fail(s),
    }
}

fn solver() -> BuiltinSolver {
    BuiltinSolver::default()
}

fn char_config() -> AnalysisConfig {
    AnalysisConfig {
        bound: Some(BoundInfo::custom(LimitMacro::CharMax, 127)),
        ..AnalysisConfig::default()
    }
}

fn in_range(v: &BigInt) -> bool {
    *v <= BigInt::from(127) && *v >= BigInt::from(-127)
}

struct Corpus {
    _dir: TempDir,
    root: std::path::PathBuf,
    entries: Vec<ManifestEntry>,
    run: CorpusRun,
    elapsed: Duration,
}

fn options(parallel: bool) -> RunOptions {
    RunOptions {
        analysis: AnalysisConfig::default(),
        repair: RepairConfig::default(),
        runs: 1,
        parallel,
    }
}

fn build_corpus() -> Result<Corpus, String> {
    let dir = TempDir::new().map_err(|e| e.to_string())?;
    let root = dir.path().join("corpus");
    let specs = corpus_specs(CORPUS_SIZE, CORPUS_SEED, &[LocClass::C500, LocClass::C1k, LocClass::C2k]);
    let entries = generate_corpus(&root, &specs, &solver()).map_err(|e| e.to_string())?;
    let t = Instant::now();
    let run = run_corpus(&root, &entries, &options(false), &solver()).map_err(|e| e.to_string())?;
    Ok(Corpus {
        _dir: dir,
        root,
        entries,
        run,
        elapsed: t.elapsed(),
    })
}

fn detection(c: &Corpus) -> Check {
    let m = &c.run.metrics;
    let mut misses = Vec::new();
    for (e, r) in c.entries.iter().zip(&c.run.results) {
        let lines: Vec<u32> = r.reports.iter().map(|x| x.line).collect();
        if lines != [e.tp_line] {
            misses.push(format!("{}: expected line {}, got {lines:?}", e.file, e.tp_line));
        }
    }
    let detail = format!(
        "{} programs, TP {}, FP {}, FN {}, {} decoys, {:.1}s",
        m.programs,
        m.true_positives,
        m.false_positives,
        m.false_negatives,
        m.decoys,
        c.elapsed.as_secs_f64()
    );
    if !misses.is_empty() {
        return Err(format!("{detail}; {}", misses.join("; ")));
    }
    if m.programs != CORPUS_SIZE || m.true_positives != CORPUS_SIZE || m.false_positives != 0 || m.false_negatives != 0 {
        return Err(detail);
    }
    if c.elapsed > Duration::from_secs(600) {
        return Err(format!("{detail}; over 10 min"));
    }
    Ok(detail)
}

/// A straight-line body with one if/else at a random position.
fn single_branch_program(seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = ProgGen::new(&mut rng);
    let before = g.rng.gen_range(1..=3);
    let mut body = g.body(before, false);
    let cond = g.cond(1);
    let t = g.assign();
    let e = g.assign();
    body.push(format!("if ({cond}) {{ {t} }} else {{ {e} }}"));
    let after = g.rng.gen_range(0..=2);
    body.extend(g.body(after, false));
    function_source(&body)
}

fn key(s: Span) -> (usize, usize) {
    (s.start, s.end)
}

/// Sites that some pair of 8-bit inputs drives outside [-127, 127].
fn oracle_sites(ast: &TypedAst) -> BTreeSet<(usize, usize)> {
    let mut out = BTreeSet::new();
    for inputs in all_char_pairs() {
        if let Ok(trace) = Interp::run(ast, "f", &inputs) {
            for (span, value) in trace.sites {
                if !in_range(&value) {
                    out.insert(key(span));
                }
            }
        }
    }
    out
}

fn oracle_equivalence() -> Check {
    let config = char_config();
    let outcomes: Vec<Result<(usize, usize), String>> = (0..ORACLE_PROGRAMS)
        .into_par_iter()
        .map(|i| {
            let src = single_branch_program(0xacce_0000 + i);
            let ast = parse_translation_unit(&src, "t.c").map_err(|e| e.render("t.c"))?;
            let a = analyze_source(&src, "t.c", &config, &solver()).map_err(|e| e.to_string())?;
            if a.diagnostics.iter().any(|d| d.kind == DiagnosticKind::Unconfirmed) {
                return Err(format!("unconfirmed verdict in\n{src}"));
            }
            let got: BTreeSet<_> = a.reports.iter().map(|r| key(r.span)).collect();
            let expected = oracle_sites(&ast);
            if got != expected {
                return Err(format!("reported {got:?}, oracle {expected:?}\n{src}"));
            }
            let sites = ast.function("f").map_or(0, |f| f.body.stmts.len());
            Ok((got.len(), sites))
        })
        .collect();
    let mut flagged = 0;
    for o in outcomes {
        flagged += o?.0;
    }
    Ok(format!("{ORACLE_PROGRAMS} programs agree with exhaustive 8-bit enumeration ({flagged} overflowing sites)"))
}

/// Exhaustive 8-bit soundness and behavior preservation of one program.
fn check_8bit_repair(seed: u64) -> Result<usize, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = ProgGen::new(&mut rng);
    g.var_divisors = false;
    let body = g.body(4, true);
    let src = function_source(&body);
    let config = char_config();
    let handler = if seed.is_multiple_of(2) { HandlerVariant::V2 } else { HandlerVariant::V1 };
    let rc = RepairConfig {
        handler,
        ..RepairConfig::default()
    };
    let ast = parse_source(&src, "t.c").map_err(|e| e.to_string())?;
    let analysis = analyze_ast(&ast, &src, &config, &solver()).map_err(|e| e.to_string())?;
    let attempts = generate_repairs(&ast, &src, &analysis, &config, &rc, &solver()).map_err(|e| e.to_string())?;
    let cands: Vec<&RepairCandidate> = attempts.iter().filter_map(|a| a.candidate.as_ref()).collect();
    if cands.is_empty() {
        return Ok(0);
    }
    let patched = apply_candidates(&src, &cands).map_err(|e| e.to_string())?;
    let applied = patched.applied(&cands);
    let summary = revalidate(&patched.text, "t.c", &applied, &analysis.reports, &config, &solver())
        .map_err(|e| e.to_string())?;
    if !summary.all_revalidated() {
        return Err(format!("not revalidated\n{}", patched.text));
    }
    let guards: Vec<(usize, usize)> = applied.iter().map(|(_, g)| *g).collect();
    let new_ast = parse_translation_unit(&patched.text, "t.c").map_err(|e| e.render("t.c"))?;
    for inputs in all_char_pairs() {
        let before = Interp::run(&ast, "f", &inputs);
        let after = Interp::run(&new_ast, "f", &inputs);
        match &after {
            Ok(t) => {
                for (span, v) in &t.sites {
                    if guards.iter().any(|(a, b)| span.start >= *a && span.end <= *b) && !in_range(v) {
                        return Err(format!("guarded site reaches {v} on {inputs:?}\n{}", patched.text));
                    }
                }
            }
            Err(Halt::Exit) => {}
            Err(h) => return Err(format!("patched run halted with {h:?}\n{}", patched.text)),
        }
        if let Ok(t) = &before {
            if t.sites.iter().all(|(_, v)| in_range(v)) {
                match &after {
                    Ok(a) if a.finals == t.finals => {}
                    _ => return Err(format!("in-range input {inputs:?} changed behavior\n{}", patched.text)),
                }
            }
        }
    }
    Ok(cands.len())
}

fn repair_soundness(c: &Corpus) -> Check {
    let m = &c.run.metrics;
    let mut stale = Vec::new();
    for r in &c.run.results {
        for o in &r.revalidation.outcomes {
            if o.status != ValidationStatus::Revalidated || !o.fresh.is_empty() {
                stale.push(o.problem_id.clone());
            }
        }
        if !r.revalidation.new_reports.is_empty() {
            stale.push(format!("{}: new reports", r.file));
        }
    }
    if m.candidates != m.programs || m.revalidated != m.candidates || !stale.is_empty() {
        return Err(format!(
            "corpus: {} candidates, {} revalidated, failing {stale:?}",
            m.candidates, m.revalidated
        ));
    }
    let checked: Vec<Result<usize, String>> =
        (0..SOUNDNESS_PROGRAMS).into_par_iter().map(|i| check_8bit_repair(0x5eed + i)).collect();
    let mut total = 0;
    for c in checked {
        total += c?;
    }
    if total < 30 {
        return Err(format!("only {total} 8-bit repairs exercised"));
    }
    Ok(format!(
        "corpus {}/{} revalidated; {total} 8-bit repairs sound and behavior-preserving over all inputs",
        m.revalidated, m.candidates
    ))
}

fn repair_overhead(c: &Corpus) -> Check {
    let m = &c.run.metrics;
    let detail = format!(
        "{:.2}% (repair {:.3}s vs detection {:.3}s)",
        m.repair_overhead_pct, m.repair_secs, m.detect_secs
    );
    if m.repair_overhead_pct <= 5.0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn loc_increase(c: &Corpus) -> Check {
    let m = &c.run.metrics;
    let detail = format!("{:.2}% ({} -> {} lines)", m.loc_increase_pct, m.loc_before, m.loc_after);
    if m.loc_increase_pct <= 2.0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn scaling() -> Check {
    let classes = [LocClass::C6k, LocClass::C11k, LocClass::C20k];
    let mut times = Vec::new();
    for (i, class) in classes.into_iter().enumerate() {
        let dir = TempDir::new().map_err(|e| e.to_string())?;
        let mut spec = corpus_specs(1, 0x5ca1 + i as u64, &[class]).remove(0);
        spec.loc_class = class;
        let entries = generate_corpus(dir.path(), &[spec], &solver()).map_err(|e| e.to_string())?;
        let t = Instant::now();
        let run = run_corpus(dir.path(), &entries, &options(false), &solver()).map_err(|e| e.to_string())?;
        let secs = t.elapsed().as_secs_f64();
        let m = &run.metrics;
        if m.true_positives != 1 || m.false_positives != 0 || m.revalidated != 1 {
            return Err(format!("{} class: TP {}, FP {}, revalidated {}", class.name(), m.true_positives, m.false_positives, m.revalidated));
        }
        times.push((class.name(), m.loc_before, secs));
    }
    let mut detail = String::new();
    for (name, loc, secs) in &times {
        let _ = write!(detail, "{name} ({loc} LOC) {secs:.1}s; ");
    }
    let monotonic = times.windows(2).all(|w| w[0].2 < w[1].2);
    let last = times.last().map_or(0.0, |t| t.2);
    if monotonic && last < 1800.0 {
        Ok(detail.trim_end_matches("; ").to_string())
    } else {
        Err(detail)
    }
}

fn determinism(c: &Corpus) -> Check {
    let dir = TempDir::new().map_err(|e| e.to_string())?;
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    write_outputs(&a, &c.run).map_err(|e| e.to_string())?;
    let again = run_corpus(&c.root, &c.entries, &options(true), &solver()).map_err(|e| e.to_string())?;
    write_outputs(&b, &again).map_err(|e| e.to_string())?;
    let mut bytes = 0;
    for f in ["reports.json", "candidates.json"] {
        let x = fs::read(a.join(f)).map_err(|e| e.to_string())?;
        let y = fs::read(b.join(f)).map_err(|e| e.to_string())?;
        if x != y {
            return Err(format!("{f} differs between runs"));
        }
        bytes += x.len();
    }
    Ok(format!("reports.json and candidates.json byte-identical ({bytes} bytes), sequential vs parallel"))
}

fn have_cc() -> bool {
    Command::new("cc").arg("--version").output().is_ok_and(|o| o.status.success())
}

/// `main` calling every function of the program with inputs from a counter.
fn driver(ast: &TypedAst) -> String {
    let mut calls = String::new();
    for f in ast.functions() {
        let args = ["a", "b"][..f.sig.params.len().min(2)].join(", ");
        let _ = writeln!(calls, "        sink += {}({args});", f.sig.name);
    }
    format!(
        "\nint main(int argc, char **argv)\n{{\n    long n = argc > 1 ? atol(argv[1]) : 200000;\n    volatile int sink = 0;\n    long i;\n    for (i = 0; i < n; i++) {{\n        int a = (int)(i % 4001) - 2000;\n        int b = (int)((i * 7) % 2001) - 1000;\n{calls}    }}\n    printf(\"%d\\n\", sink);\n    return 0;\n}}\n"
    )
}

fn compile(dir: &Path, name: &str, text: &str) -> Result<std::path::PathBuf, String> {
    let src = dir.join(format!("{name}.c"));
    fs::write(&src, text).map_err(|e| e.to_string())?;
    let exe = dir.join(name);
    let out = Command::new("cc")
        .args(["-O2", "-fwrapv", "-w", "-o"])
        .arg(&exe)
        .arg(&src)
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("{name}: {}", String::from_utf8_lossy(&out.stderr)));
    }
    Ok(exe)
}

fn timed(exe: &Path, iterations: &str) -> Result<(f64, Vec<u8>), String> {
    let t = Instant::now();
    let out = Command::new(exe).arg(iterations).output().map_err(|e| e.to_string())?;
    let secs = t.elapsed().as_secs_f64();
    if !out.status.success() {
        return Err(format!("{} exited with {:?}", exe.display(), out.status.code()));
    }
    Ok((secs, out.stdout))
}

fn runtime_overhead(c: &Corpus) -> Verdict {
    if !have_cc() {
        return Verdict::Skip("no C compiler on PATH".into());
    }
    verdict((|| {
        let dir = TempDir::new().map_err(|e| e.to_string())?;
        let (mut base, mut repaired) = (0.0, 0.0);
        let picked: Vec<_> = c.entries.iter().zip(&c.run.results).take(6).collect();
        for (e, r) in &picked {
            let original = fs::read_to_string(c.root.join(&e.file)).map_err(|e| e.to_string())?;
            let cands: Vec<&RepairCandidate> = r.attempts.iter().filter_map(|a| a.candidate.as_ref()).collect();
            let patched = apply_candidates(&original, &cands).map_err(|e| e.to_string())?.text;
            let ast = parse_source(&original, &e.file).map_err(|e| e.to_string())?;
            let main = driver(&ast);
            let stem = e.file.trim_end_matches(".c");
            let a = compile(dir.path(), &format!("{stem}_orig"), &(original + &main))?;
            let b = compile(dir.path(), &format!("{stem}_fixed"), &(patched + &main))?;
            let (mut ta, mut tb) = (f64::MAX, f64::MAX);
            for _ in 0..5 {
                let (sa, oa) = timed(&a, "2000000")?;
                let (sb, ob) = timed(&b, "2000000")?;
                if oa != ob {
                    return Err(format!("{}: outputs differ on fixed inputs", e.file));
                }
                ta = ta.min(sa);
                tb = tb.min(sb);
            }
            base += ta;
            repaired += tb;
        }
        let pct = (repaired - base) / base * 100.0;
        let detail = format!(
            "{:+.2}% over {} programs ({base:.3}s -> {repaired:.3}s), identical outputs",
            pct,
            picked.len()
        );
        if pct <= 5.0 {
            Ok(detail)
        } else {
            Err(detail)
        }
    })())
}

/// The seeded generator stands in for an external benchmark suite; the
/// criteria above run against the core library alone.
fn substitution() -> Check {
    let spec = BenchSpec {
        functions: 2,
        loops: 2,
        false_positives: 1,
        seed_depth: 2,
        seed: 9,
        loc_class: LocClass::C500,
    };
    let p = generate_program(&spec, "probe.c", &solver()).map_err(|e| e.to_string())?;
    let a = analyze_source(&p.source, "probe.c", &AnalysisConfig::default(), &solver()).map_err(|e| e.to_string())?;
    let lines: Vec<u32> = a.reports.iter().map(|r| r.line).collect();
    if lines != [p.entry.tp_line] {
        return Err(format!("probe reported {lines:?}, expected [{}]", p.entry.tp_line));
    }
    Ok("external suite unavailable; covered by the seeded corpus criteria, core library only".into())
}

fn main() -> ExitCode {
    // Respect libtest's list mode so `cargo test -- --list` works.
    if std::env::args().any(|a| a == "--list") {
        return ExitCode::SUCCESS;
    }
    let mut results: Vec<(&str, Verdict)> = Vec::new();
    let corpus = build_corpus();
    match &corpus {
        Ok(c) => {
            results.push(("detection completeness", verdict(detection(c))));
            results.push(("oracle equivalence", verdict(oracle_equivalence())));
            results.push(("repair soundness", verdict(repair_soundness(c))));
            results.push(("repair overhead <= 5%", verdict(repair_overhead(c))));
            results.push(("LOC increase <= 2%", verdict(loc_increase(c))));
            results.push(("scaling 6k/11k/20k", verdict(scaling())));
            results.push(("determinism", verdict(determinism(c))));
            results.push(("runtime overhead <= 5%", runtime_overhead(c)));
        }
        Err(e) => {
            results.push(("seeded corpus", Verdict::Fail(e.clone())));
            results.push(("oracle equivalence", verdict(oracle_equivalence())));
            results.push(("scaling 6k/11k/20k", verdict(scaling())));
        }
    }
    results.push(("external suite substitution", verdict(substitution())));

    let mut failed = 0;
    for (name, v) in &results {
        let (tag, detail) = match v {
            Verdict::Pass(d) => ("PASS", d),
            Verdict::Fail(d) => {
                failed += 1;
                ("FAIL", d)
            }
            Verdict::Skip(d) => ("SKIP", d),
        };
        println!("{tag} {name}: {detail}");
    }
    println!("acceptance: {} criteria, {failed} failed", results.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
