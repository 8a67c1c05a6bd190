//! Serde adapters for values whose default encodings are unreadable in JSON.

/// Big integers as decimal strings.
pub mod bigint_string {
    use num_bigint::BigInt;
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &BigInt, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&v.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigInt, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(D::Error::custom)
    }
}

/// Constraint systems as SMT-LIB v2 scripts (group tags survive as comments).
pub mod smtlib_system {
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    use crate::solver::{emit_smtlib, parse_smtlib, ConstraintSystem};

    pub fn serialize<S: Serializer>(v: &ConstraintSystem, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&emit_smtlib(v))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<ConstraintSystem, D::Error> {
        let text = String::deserialize(d)?;
        parse_smtlib(&text).map_err(D::Error::custom)
    }
}
