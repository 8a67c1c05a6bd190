use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

/// Integer kinds supported by the analyzed C subset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntKind {
    Char,
    Short,
    Int,
    UInt,
    Int64,
}

impl IntKind {
    pub const ALL: [IntKind; 5] = [
        IntKind::Char,
        IntKind::Short,
        IntKind::Int,
        IntKind::UInt,
        IntKind::Int64,
    ];

    pub fn name(self) -> &'static str {
        match self {
            IntKind::Char => "char",
            IntKind::Short => "short",
            IntKind::Int => "int",
            IntKind::UInt => "unsigned int",
            IntKind::Int64 => "int64_t",
        }
    }

    pub fn width(self) -> u32 {
        match self {
            IntKind::Char => 8,
            IntKind::Short => 16,
            IntKind::Int | IntKind::UInt => 32,
            IntKind::Int64 => 64,
        }
    }

    pub fn signed(self) -> bool {
        !matches!(self, IntKind::UInt)
    }

    pub fn max_value(self) -> BigInt {
        let w = self.width();
        if self.signed() {
            (BigInt::one() << (w - 1)) - 1
        } else {
            (BigInt::one() << w) - 1
        }
    }

    pub fn min_value(self) -> BigInt {
        if self.signed() {
            -(BigInt::one() << (self.width() - 1))
        } else {
            BigInt::zero()
        }
    }

    pub fn contains(self, value: &BigInt) -> bool {
        *value >= self.min_value() && *value <= self.max_value()
    }

    /// Kind of a binary arithmetic result: operands narrower than `int` are
    /// promoted, otherwise the wider operand wins and unsigned wins ties.
    pub fn arithmetic_result(a: IntKind, b: IntKind) -> IntKind {
        let promote = |k: IntKind| match k {
            IntKind::Char | IntKind::Short => IntKind::Int,
            other => other,
        };
        let (a, b) = (promote(a), promote(b));
        match (a, b) {
            (IntKind::Int64, _) | (_, IntKind::Int64) => IntKind::Int64,
            (IntKind::UInt, _) | (_, IntKind::UInt) => IntKind::UInt,
            _ => IntKind::Int,
        }
    }

    /// Smallest kind able to hold a literal value, C-style (`int` first).
    pub fn for_literal(value: &BigInt, unsigned_suffix: bool) -> IntKind {
        if unsigned_suffix && IntKind::UInt.contains(value) {
            return IntKind::UInt;
        }
        if IntKind::Int.contains(value) {
            IntKind::Int
        } else if IntKind::UInt.contains(value) && unsigned_suffix {
            IntKind::UInt
        } else {
            IntKind::Int64
        }
    }
}

impl fmt::Display for IntKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The limits macros the lexer recognizes as dedicated tokens.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LimitMacro {
    #[serde(rename = "CHAR_MAX")]
    CharMax,
    #[serde(rename = "SHRT_MAX")]
    ShrtMax,
    #[serde(rename = "INT_MAX")]
    IntMax,
    #[serde(rename = "UINT_MAX")]
    UintMax,
    #[serde(rename = "LLONG_MAX")]
    LlongMax,
}

impl LimitMacro {
    pub const ALL: [LimitMacro; 5] = [
        LimitMacro::CharMax,
        LimitMacro::ShrtMax,
        LimitMacro::IntMax,
        LimitMacro::UintMax,
        LimitMacro::LlongMax,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LimitMacro::CharMax => "CHAR_MAX",
            LimitMacro::ShrtMax => "SHRT_MAX",
            LimitMacro::IntMax => "INT_MAX",
            LimitMacro::UintMax => "UINT_MAX",
            LimitMacro::LlongMax => "LLONG_MAX",
        }
    }

    pub fn from_name(name: &str) -> Option<LimitMacro> {
        LimitMacro::ALL.into_iter().find(|m| m.name() == name)
    }

    /// Name of the matching minimum macro in a limits header, if any.
    pub fn min_name(self) -> Option<&'static str> {
        match self {
            LimitMacro::CharMax => Some("CHAR_MIN"),
            LimitMacro::ShrtMax => Some("SHRT_MIN"),
            LimitMacro::IntMax => Some("INT_MIN"),
            LimitMacro::LlongMax => Some("LLONG_MIN"),
            LimitMacro::UintMax => None,
        }
    }

    pub fn kind(self) -> IntKind {
        match self {
            LimitMacro::CharMax => IntKind::Char,
            LimitMacro::ShrtMax => IntKind::Short,
            LimitMacro::IntMax => IntKind::Int,
            LimitMacro::UintMax => IntKind::UInt,
            LimitMacro::LlongMax => IntKind::Int64,
        }
    }

    pub fn default_value(self) -> BigInt {
        self.kind().max_value()
    }
}

impl fmt::Display for LimitMacro {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Declared type of a variable, field, parameter, or function result.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Type {
    Void,
    Int(IntKind),
    Ptr(Box<Type>),
    Struct(String),
}

impl Type {
    pub fn int_kind(&self) -> Option<IntKind> {
        match self {
            Type::Int(k) => Some(*k),
            _ => None,
        }
    }

    pub fn is_pointer(&self) -> bool {
        matches!(self, Type::Ptr(_))
    }
}

/// Layout of a struct: ordered fields whose types are integers, pointers or
/// nested structs (referenced by name).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructLayout {
    pub name: String,
    pub fields: Vec<(String, Type)>,
}

impl StructLayout {
    pub fn field(&self, name: &str) -> Option<&Type> {
        self.fields.iter().find(|(n, _)| n == name).map(|(_, t)| t)
    }
}
