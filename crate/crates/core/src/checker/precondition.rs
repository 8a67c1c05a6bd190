//! Safety preconditions evaluated by emitted guards, mirrored here so their
//! semantics can be checked exhaustively.

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Safety {
    Safe,
    Unsafe,
}

impl Safety {
    fn from(ok: bool) -> Safety {
        if ok {
            Safety::Safe
        } else {
            Safety::Unsafe
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PreconditionError {
    #[error("constant operand is zero")]
    DivisorZero,
}

/// Addition of a variable and a constant:
/// `s1 > 0 && s2 > 0 && s1 <= MAX - s2 && s1 >= -MAX - s2`.
pub fn eval_precondition_add_const(s1: &BigInt, s2: &BigInt, max: &BigInt) -> Safety {
    let zero = BigInt::zero();
    Safety::from(s1 > &zero && s2 > &zero && *s1 <= max - s2 && *s1 >= -max - s2)
}

/// Multiplication of a variable by a constant:
/// `s1 > 0 && s2 > 0 && s1 <= MAX / s2 && s1 >= -MAX / s2 - 1`.
pub fn eval_precondition_mul_const(
    s1: &BigInt,
    s2: &BigInt,
    max: &BigInt,
) -> Result<Safety, PreconditionError> {
    if s2.is_zero() {
        return Err(PreconditionError::DivisorZero);
    }
    let zero = BigInt::zero();
    Ok(Safety::from(
        s1 > &zero && s2 > &zero && *s1 <= max / s2 && *s1 >= -max / s2 - 1,
    ))
}

/// Integer floor square root of a non-negative value.
pub fn isqrt(n: &BigInt) -> BigInt {
    if n.is_negative() {
        BigInt::zero()
    } else {
        n.sqrt()
    }
}

/// Squaring: `s1` within `[-isqrt(MAX), isqrt(MAX)]`.
pub fn eval_precondition_square(s1: &BigInt, max: &BigInt) -> Safety {
    let r = isqrt(max);
    Safety::from(*s1 <= r && *s1 >= -r.clone())
}
