//! Library function summaries: how calls to functions without a body affect
//! the symbolic state.

use std::collections::BTreeMap;

use num_bigint::BigInt;

use crate::frontend::{IntKind, Item, Type, TypedAst};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ReturnEffect {
    /// Nothing usable as an integer comes back.
    None,
    /// A fresh value anywhere in the return kind's range.
    Fresh(IntKind),
    Const(IntKind, BigInt),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunctionSummary {
    pub name: String,
    pub ret: ReturnEffect,
    /// `&x` arguments receive fresh values (scanf-style input).
    pub fresh_out_args: bool,
    /// The call never returns (`exit`, `abort`).
    pub terminates: bool,
}

impl FunctionSummary {
    pub fn fresh(name: &str, kind: IntKind) -> Self {
        FunctionSummary {
            name: name.into(),
            ret: ReturnEffect::Fresh(kind),
            fresh_out_args: false,
            terminates: false,
        }
    }

    pub fn constant(name: &str, kind: IntKind, value: impl Into<BigInt>) -> Self {
        FunctionSummary {
            name: name.into(),
            ret: ReturnEffect::Const(kind, value.into()),
            fresh_out_args: false,
            terminates: false,
        }
    }

    pub fn no_effect(name: &str) -> Self {
        FunctionSummary {
            name: name.into(),
            ret: ReturnEffect::None,
            fresh_out_args: false,
            terminates: false,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct SummaryRegistry {
    map: BTreeMap<String, FunctionSummary>,
}

impl SummaryRegistry {
    pub fn empty() -> Self {
        SummaryRegistry::default()
    }

    /// Stubs for the C library and test-harness helpers the subset knows.
    pub fn standard() -> Self {
        let mut r = SummaryRegistry::empty();
        for name in ["RAND32", "rand", "atoi"] {
            r.register(FunctionSummary::fresh(name, IntKind::Int));
        }
        r.register(FunctionSummary::fresh("RAND64", IntKind::Int64));
        for name in ["fscanf", "scanf"] {
            r.register(FunctionSummary {
                fresh_out_args: true,
                ..FunctionSummary::fresh(name, IntKind::Int)
            });
        }
        for name in ["printf", "puts"] {
            r.register(FunctionSummary::fresh(name, IntKind::Int));
        }
        for name in [
            "printLine",
            "printIntLine",
            "printUnsignedLine",
            "printLongLongLine",
            "srand",
            "memcpy",
            "memset",
        ] {
            r.register(FunctionSummary::no_effect(name));
        }
        for name in ["abort", "exit"] {
            r.register(FunctionSummary {
                terminates: true,
                ..FunctionSummary::no_effect(name)
            });
        }
        r
    }

    /// Standard stubs plus one for every prototype without a body in `ast`:
    /// a fresh value of the declared return kind.
    pub fn for_program(ast: &TypedAst) -> Self {
        let mut r = SummaryRegistry::standard();
        for item in &ast.items {
            if let Item::Prototype(sig) = item {
                if ast.function(&sig.name).is_some() || r.get(&sig.name).is_some() {
                    continue;
                }
                let ret = match &sig.ret {
                    Type::Int(k) => ReturnEffect::Fresh(*k),
                    _ => ReturnEffect::None,
                };
                r.register(FunctionSummary {
                    name: sig.name.clone(),
                    ret,
                    fresh_out_args: false,
                    terminates: false,
                });
            }
        }
        r
    }

    pub fn register(&mut self, s: FunctionSummary) {
        self.map.insert(s.name.clone(), s);
    }

    pub fn get(&self, name: &str) -> Option<&FunctionSummary> {
        self.map.get(name)
    }
}
