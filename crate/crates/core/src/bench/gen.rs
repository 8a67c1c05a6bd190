//! Seeded micro-benchmark programs with one true positive and guarded or
//! infeasible decoy sites.

use std::str::FromStr;

use num_bigint::BigInt;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::frontend::IntKind;
use crate::solver::{Atom, Clause, ConstraintSystem, GroupTag, Rel, Solver, SymVar, Term};

use super::BenchError;

const INT_MAX: i64 = 2_147_483_647;

/// Target size of a generated program.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum LocClass {
    #[serde(rename = "500")]
    C500,
    #[serde(rename = "1k")]
    C1k,
    #[serde(rename = "2k")]
    C2k,
    #[serde(rename = "6k")]
    C6k,
    #[serde(rename = "11k")]
    C11k,
    #[serde(rename = "20k")]
    C20k,
}

impl LocClass {
    pub const ALL: [LocClass; 6] = [
        LocClass::C500,
        LocClass::C1k,
        LocClass::C2k,
        LocClass::C6k,
        LocClass::C11k,
        LocClass::C20k,
    ];

    pub fn lines(self) -> usize {
        match self {
            LocClass::C500 => 500,
            LocClass::C1k => 1_000,
            LocClass::C2k => 2_000,
            LocClass::C6k => 6_000,
            LocClass::C11k => 11_000,
            LocClass::C20k => 20_000,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            LocClass::C500 => "500",
            LocClass::C1k => "1k",
            LocClass::C2k => "2k",
            LocClass::C6k => "6k",
            LocClass::C11k => "11k",
            LocClass::C20k => "20k",
        }
    }
}

impl FromStr for LocClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        LocClass::ALL
            .into_iter()
            .find(|c| c.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown LOC class `{s}` (expected 500, 1k, 2k, 6k, 11k or 20k)"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchSpec {
    /// Calls to helper functions.
    pub functions: usize,
    /// Iteration count of generated loops (at most the unroll bound).
    pub loops: usize,
    /// Decoy sites.
    pub false_positives: usize,
    /// Branches enclosing the true positive.
    pub seed_depth: usize,
    pub seed: u64,
    pub loc_class: LocClass,
}

impl BenchSpec {
    pub fn validate(&self) -> Result<(), BenchError> {
        if self.loops == 0 || self.loops > 10 {
            return Err(BenchError::InvalidSpec("loops must be in 1..=10".into()));
        }
        if self.seed_depth == 0 || self.seed_depth > 16 {
            return Err(BenchError::InvalidSpec("seed_depth must be in 1..=16".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecoyKind {
    RangeGuarded,
    InfeasiblePath,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Decoy {
    pub line: u32,
    pub function: String,
    pub kind: DecoyKind,
}

/// Ground truth for one generated program.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub file: String,
    pub tp_line: u32,
    pub tp_function: String,
    pub tp_statement: String,
    pub kind: String,
    /// Parameter values reaching the true positive and overflowing it.
    pub witness: Vec<(String, String)>,
    pub decoys: Vec<Decoy>,
    /// Branch statements in the program, recorded for CFG checks.
    pub branches: usize,
    pub spec: BenchSpec,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneratedProgram {
    pub file: String,
    pub source: String,
    pub entry: ManifestEntry,
}

/// Source text builder that tracks line numbers.
struct Out {
    text: String,
    line: u32,
    branches: usize,
}

impl Out {
    fn push(&mut self, indent: usize, s: &str) -> u32 {
        for _ in 0..indent {
            self.text.push_str("    ");
        }
        self.text.push_str(s);
        self.text.push('\n');
        self.line += 1;
        if s.starts_with("if (") || s.starts_with("for (") || s.starts_with("} else if (") {
            self.branches += 1;
        }
        self.line
    }
}

const VERBS: [&str; 10] = [
    "update", "scale", "mix", "step", "blend", "fold", "shift", "merge", "tally", "adjust",
];
const NOUNS: [&str; 10] = [
    "buffer", "frame", "record", "sample", "packet", "entry", "block", "cell", "token", "slot",
];

struct Gen<'s> {
    rng: ChaCha8Rng,
    spec: &'s BenchSpec,
    names: usize,
}

/// One decoy as checked at generation time: the guarding conditions on the
/// single input `y`, and the assigned expression.
struct DecoyCheck {
    conds: Vec<(Rel, i64)>,
    expr: Term,
}

#[derive(Clone, Copy)]
enum TpShape {
    Square,
    AddConst(i64),
    MulConst(i64),
}

impl Gen<'_> {
    fn name(&mut self) -> String {
        let v = VERBS[self.rng.gen_range(0..VERBS.len())];
        let n = NOUNS[self.rng.gen_range(0..NOUNS.len())];
        self.names += 1;
        format!("{v}_{n}_{}", self.names)
    }

    fn small(&mut self) -> i64 {
        self.rng.gen_range(1..=60)
    }

    fn helper(&mut self, out: &mut Out, name: &str) {
        let (c1, c2) = (self.rng.gen_range(2..=5), self.small());
        out.push(0, &format!("int {name}(int p)"));
        out.push(0, "{");
        out.push(1, &format!("int q = p * {c1};"));
        out.push(1, &format!("int w = q + {c2};"));
        out.push(1, "return w - p;");
        out.push(0, "}");
        out.push(0, "");
    }

    /// A root doing bounded constant arithmetic, parameter branches and a
    /// constant loop, optionally calling a helper.
    fn filler(&mut self, out: &mut Out, helper: Option<&str>) {
        let name = self.name();
        out.push(0, &format!("int {name}(int a, int b)"));
        out.push(0, "{");
        out.push(1, &format!("int acc = {};", self.small()));
        out.push(1, &format!("int t0 = {};", self.small()));
        let chain = self.rng.gen_range(2..=8);
        for i in 1..=chain {
            let (m, d) = (self.rng.gen_range(1..=4), self.small());
            let op = if self.rng.gen_bool(0.5) { "+" } else { "-" };
            out.push(1, &format!("int t{i} = t{} * {m} {op} {d};", i - 1));
        }
        out.push(1, &format!("if (a > {}) {{", self.rng.gen_range(-100..=100)));
        out.push(2, &format!("acc = acc + t{chain};"));
        out.push(1, "} else {");
        out.push(2, &format!("acc = acc - t{};", chain - 1));
        out.push(1, "}");
        out.push(1, "int k = 0;");
        out.push(1, &format!("for (k = 0; k < {}; k = k + 1) {{", self.spec.loops));
        out.push(2, &format!("acc = acc + k * {};", self.rng.gen_range(1..=9)));
        out.push(1, "}");
        if self.rng.gen_bool(0.5) {
            out.push(1, &format!("if (b < {}) {{", self.rng.gen_range(-100..=100)));
            out.push(2, "acc = acc * 2;");
            out.push(1, "}");
        }
        if let Some(h) = helper {
            out.push(1, &format!("acc = acc + {h}(t1);"));
        }
        out.push(1, "return acc;");
        out.push(0, "}");
        out.push(0, "");
    }

    fn decoy(&mut self, out: &mut Out) -> (Decoy, DecoyCheck) {
        let function = self.name();
        let y = Term::var(&SymVar::new("y", 0));
        out.push(0, &format!("int {function}(int y)"));
        out.push(0, "{");
        out.push(1, "int d = 0;");
        let (kind, line, check) = if self.rng.gen_bool(0.7) {
            let (conds, text, expr) = match self.rng.gen_range(0..3) {
                0 => {
                    let b = self.rng.gen_range(10..=46340);
                    (vec![(Rel::Gt, -b), (Rel::Lt, b)], "d = y * y;".to_string(), Term::mul(y.clone(), y.clone()))
                }
                1 => {
                    let c = self.rng.gen_range(3..=1000);
                    let b = self.rng.gen_range(1..=INT_MAX / c);
                    (
                        vec![(Rel::Gt, -b), (Rel::Lt, b)],
                        format!("d = y * {c};"),
                        Term::mul(y.clone(), Term::lit(c)),
                    )
                }
                _ => {
                    let c = self.rng.gen_range(1000..=100_000);
                    (
                        vec![(Rel::Lt, INT_MAX - c), (Rel::Gt, -1000)],
                        format!("d = y + {c};"),
                        Term::add(y.clone(), Term::lit(c)),
                    )
                }
            };
            out.push(
                1,
                &format!(
                    "if (y {} {} && y {} {}) {{",
                    rel_text(conds[0].0),
                    conds[0].1,
                    rel_text(conds[1].0),
                    conds[1].1
                ),
            );
            let line = out.push(2, &text);
            out.push(1, "}");
            (DecoyKind::RangeGuarded, line, DecoyCheck { conds, expr })
        } else {
            let a = self.rng.gen_range(100..=100_000);
            let b = a - self.rng.gen_range(0..=50);
            out.push(1, &format!("if (y > {a}) {{"));
            out.push(2, &format!("if (y < {b}) {{"));
            let line = out.push(3, "d = y * y;");
            out.push(2, "}");
            out.push(1, "}");
            (
                DecoyKind::InfeasiblePath,
                line,
                DecoyCheck {
                    conds: vec![(Rel::Gt, a), (Rel::Lt, b)],
                    expr: Term::mul(y.clone(), y),
                },
            )
        };
        out.push(1, "return d;");
        out.push(0, "}");
        out.push(0, "");
        (Decoy { line, function, kind }, check)
    }

    /// The true positive nested under `seed_depth` satisfiable branches.
    fn true_positive(&mut self, out: &mut Out) -> (String, u32, String, Vec<(String, String)>) {
        let function = self.name();
        let shape = match self.rng.gen_range(0..3) {
            0 => TpShape::Square,
            1 => TpShape::AddConst(self.rng.gen_range(1000..=100_000)),
            _ => TpShape::MulConst(self.rng.gen_range(3..=1000)),
        };
        // Witness first; every condition is drawn to hold for it.
        let xw: i64 = match shape {
            TpShape::Square => self.rng.gen_range(46341..=1_000_000),
            TpShape::AddConst(c) => self.rng.gen_range(INT_MAX - c + 1..=INT_MAX),
            TpShape::MulConst(c) => self.rng.gen_range(INT_MAX / c + 1..=INT_MAX / c + 10_000),
        };
        // An in-range value the path also admits, so a guard can keep it.
        let xs: i64 = self.rng.gen_range(0..=40_000);
        let yw: i64 = self.rng.gen_range(-1000..=1000);
        out.push(0, &format!("int {function}(int x, int y)"));
        out.push(0, "{");
        out.push(1, &format!("int r = {};", self.small()));
        let depth = self.spec.seed_depth;
        for level in 0..depth {
            let (var, lo, hi) = if self.rng.gen_bool(0.5) {
                ("x", xs.min(xw), xs.max(xw))
            } else {
                ("y", yw, yw)
            };
            let cond = if self.rng.gen_bool(0.5) || hi > INT_MAX - 501 {
                format!("{var} > {}", lo - self.rng.gen_range(1..=500))
            } else {
                format!("{var} < {}", hi + self.rng.gen_range(1..=500))
            };
            out.push(1 + level, &format!("if ({cond}) {{"));
            if self.rng.gen_bool(0.3) {
                out.push(2 + level, &format!("r = r + {};", self.small()));
            }
        }
        let stmt = match shape {
            TpShape::Square => "int v = x * x;".to_string(),
            TpShape::AddConst(c) => format!("int v = x + {c};"),
            TpShape::MulConst(c) => format!("int v = x * {c};"),
        };
        let line = out.push(1 + depth, &stmt);
        out.push(1 + depth, "r = v;");
        for level in (0..depth).rev() {
            out.push(1 + level, "}");
        }
        out.push(1, "return r;");
        out.push(0, "}");
        out.push(0, "");
        let witness = vec![("x".to_string(), xw.to_string()), ("y".to_string(), yw.to_string())];
        (function, line, stmt, witness)
    }
}

fn rel_text(rel: Rel) -> &'static str {
    match rel {
        Rel::Eq => "==",
        Rel::Ne => "!=",
        Rel::Lt => "<",
        Rel::Le => "<=",
        Rel::Gt => ">",
        Rel::Ge => ">=",
    }
}

/// Decoy probe in isolation: guarding conditions, definition and probe.
fn decoy_is_safe(check: &DecoyCheck, solver: &dyn Solver) -> Result<bool, BenchError> {
    let y = SymVar::new("y", 0);
    let d = SymVar::new("d", 0);
    let kind = IntKind::Int;
    let mut cs = ConstraintSystem::new();
    cs.assert_atom(GroupTag::Domain, Atom::new(Term::var(&y), Rel::Ge, Term::Lit(kind.min_value())));
    cs.assert_atom(GroupTag::Domain, Atom::new(Term::var(&y), Rel::Le, Term::Lit(kind.max_value())));
    for (rel, c) in &check.conds {
        cs.assert_atom(GroupTag::PathCondition, Atom::new(Term::var(&y), *rel, Term::lit(*c)));
    }
    cs.assert_atom(GroupTag::Definition, Atom::new(Term::var(&d), Rel::Eq, check.expr.clone()));
    let max = BigInt::from(INT_MAX);
    cs.assert(
        GroupTag::Probe(1),
        Clause(vec![
            Atom::new(Term::var(&d), Rel::Gt, Term::Lit(max.clone())),
            Atom::new(Term::var(&d), Rel::Lt, Term::Lit(-max)),
        ]),
    );
    Ok(solver.check_sat(&cs)?.is_unsat())
}

/// Generate one program. Deterministic in `spec`; every decoy is checked
/// with `solver` to be overflow-free under its guarding conditions.
pub fn generate_program(
    spec: &BenchSpec,
    file: &str,
    solver: &dyn Solver,
) -> Result<GeneratedProgram, BenchError> {
    spec.validate()?;
    let mut g = Gen {
        rng: ChaCha8Rng::seed_from_u64(spec.seed),
        spec,
        names: 0,
    };
    let mut out = Out {
        text: String::new(),
        line: 0,
        branches: 0,
    };
    out.push(0, "#include <stdio.h>");
    out.push(0, "#include <stdlib.h>");
    out.push(0, "");

    let helpers: Vec<String> = (0..spec.functions).map(|i| format!("helper_{i}")).collect();
    for h in &helpers {
        g.helper(&mut out, h);
    }

    // Fillers, the true positive and decoys in shuffled order.
    #[derive(Clone, Copy)]
    enum Part {
        Filler(Option<usize>),
        Tp,
        Decoy,
    }
    let target = spec.loc_class.lines();
    let approx_filler = 22;
    let fixed = out.line as usize + 12 + spec.seed_depth * 2 + spec.false_positives * 9;
    let fillers = (target.saturating_sub(fixed) / approx_filler).max(helpers.len());
    let mut parts: Vec<Part> = (0..fillers)
        .map(|i| Part::Filler((i < helpers.len()).then_some(i)))
        .collect();
    parts.push(Part::Tp);
    parts.extend(std::iter::repeat_n(Part::Decoy, spec.false_positives));
    parts.shuffle(&mut g.rng);

    let mut tp = None;
    let mut decoys = Vec::new();
    for part in parts {
        match part {
            Part::Filler(h) => {
                let h = h.map(|i| helpers[i].clone());
                g.filler(&mut out, h.as_deref());
            }
            Part::Tp => tp = Some(g.true_positive(&mut out)),
            Part::Decoy => {
                let (decoy, check) = g.decoy(&mut out);
                if !decoy_is_safe(&check, solver)? {
                    return Err(BenchError::UnsafeDecoy(decoy.line));
                }
                decoys.push(decoy);
            }
        }
    }
    let (tp_function, tp_line, tp_statement, witness) = tp.expect("true positive emitted");
    let mut source = out.text;
    // Trim to exactly one trailing newline.
    while source.ends_with("\n\n") {
        source.pop();
    }
    Ok(GeneratedProgram {
        file: file.to_string(),
        source,
        entry: ManifestEntry {
            file: file.to_string(),
            tp_line,
            tp_function,
            tp_statement,
            kind: "integer-overflow".into(),
            witness,
            decoys,
            branches: out.branches,
            spec: spec.clone(),
        },
    })
}

/// Mixed specs for a corpus of `count` programs cycling through `classes`.
pub fn corpus_specs(count: usize, base_seed: u64, classes: &[LocClass]) -> Vec<BenchSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(base_seed);
    (0..count)
        .map(|i| BenchSpec {
            functions: rng.gen_range(1..=6),
            loops: rng.gen_range(1..=10),
            false_positives: rng.gen_range(1..=4),
            seed_depth: rng.gen_range(2..=6),
            seed: base_seed.wrapping_mul(1_000_003).wrapping_add(i as u64),
            loc_class: classes[i % classes.len()],
        })
        .collect()
}
