//! Element types carried by sparse and dense matrices.
//!
//! Integer kinds accumulate in `i64` with checked arithmetic so that every
//! product path (oracle, simulator, host GEMM) either agrees bit-exactly or
//! reports an overflow. `f32` accumulates in `f64`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ValueKind {
    Int32,
    Int16,
    Int8,
    Float32,
}

impl ValueKind {
    pub fn elem_bytes(self) -> usize {
        match self {
            ValueKind::Int32 | ValueKind::Float32 => 4,
            ValueKind::Int16 => 2,
            ValueKind::Int8 => 1,
        }
    }

    pub fn is_integer(self) -> bool {
        !matches!(self, ValueKind::Float32)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ValueKind::Int32 => "int32",
            ValueKind::Int16 => "int16",
            ValueKind::Int8 => "int8",
            ValueKind::Float32 => "float32",
        }
    }
}

impl fmt::Display for ValueKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ValueKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "int32" | "i32" => Ok(ValueKind::Int32),
            "int16" | "i16" => Ok(ValueKind::Int16),
            "int8" | "i8" => Ok(ValueKind::Int8),
            "float32" | "f32" | "fp32" => Ok(ValueKind::Float32),
            other => Err(format!("unknown value kind '{other}'")),
        }
    }
}

pub trait Scalar:
    Copy + Default + PartialEq + PartialOrd + fmt::Debug + fmt::Display + Send + Sync + 'static
{
    /// Wide accumulator used for every reduction.
    type Acc: Copy + Default + PartialEq + fmt::Debug + Send + Sync;

    const KIND: ValueKind;

    fn one() -> Self;
    fn widen(self) -> Self::Acc;
    /// `None` when the accumulated value does not fit the element type.
    fn narrow(acc: Self::Acc) -> Option<Self>;
    fn mul_add(acc: Self::Acc, a: Self, b: Self) -> Option<Self::Acc>;
    fn acc_add(a: Self::Acc, b: Self::Acc) -> Option<Self::Acc>;
    /// Exact conversion of a parsed file value; integers reject fractions.
    fn from_f64_exact(v: f64) -> Option<Self>;
    /// Encodes a real-valued edge weight; integer kinds use `round(w * scale)`.
    fn from_weight(w: f64, scale: i64) -> Option<Self>;
    /// Undoes the fixed-point weight scale (floor division for integers).
    fn descale(self, scale: i64) -> Self;
    fn to_f64(self) -> f64;

    fn zero() -> Self {
        Self::default()
    }

    fn relu(self) -> Self {
        if self > Self::zero() {
            self
        } else {
            Self::zero()
        }
    }
}

macro_rules! int_scalar {
    ($t:ty, $kind:expr) => {
        impl Scalar for $t {
            type Acc = i64;
            const KIND: ValueKind = $kind;

            fn one() -> Self {
                1
            }

            fn widen(self) -> i64 {
                self as i64
            }

            fn narrow(acc: i64) -> Option<Self> {
                <$t>::try_from(acc).ok()
            }

            fn mul_add(acc: i64, a: Self, b: Self) -> Option<i64> {
                (a as i64).checked_mul(b as i64)?.checked_add(acc)
            }

            fn acc_add(a: i64, b: i64) -> Option<i64> {
                a.checked_add(b)
            }

            fn from_f64_exact(v: f64) -> Option<Self> {
                if v.fract() != 0.0 || !v.is_finite() {
                    return None;
                }
                if v < <$t>::MIN as f64 || v > <$t>::MAX as f64 {
                    return None;
                }
                Some(v as $t)
            }

            fn from_weight(w: f64, scale: i64) -> Option<Self> {
                let v = (w * scale as f64).round();
                Self::from_f64_exact(v)
            }

            fn descale(self, scale: i64) -> Self {
                // |result| <= |self| so the narrowing cannot fail
                (self as i64).div_euclid(scale) as $t
            }

            fn to_f64(self) -> f64 {
                self as f64
            }
        }
    };
}

int_scalar!(i32, ValueKind::Int32);
int_scalar!(i16, ValueKind::Int16);
int_scalar!(i8, ValueKind::Int8);

impl Scalar for f32 {
    type Acc = f64;
    const KIND: ValueKind = ValueKind::Float32;

    fn one() -> Self {
        1.0
    }

    fn widen(self) -> f64 {
        self as f64
    }

    fn narrow(acc: f64) -> Option<Self> {
        let v = acc as f32;
        v.is_finite().then_some(v)
    }

    fn mul_add(acc: f64, a: Self, b: Self) -> Option<f64> {
        Some(acc + a as f64 * b as f64)
    }

    fn acc_add(a: f64, b: f64) -> Option<f64> {
        Some(a + b)
    }

    fn from_f64_exact(v: f64) -> Option<Self> {
        v.is_finite().then_some(v as f32)
    }

    fn from_weight(w: f64, _scale: i64) -> Option<Self> {
        Self::from_f64_exact(w)
    }

    fn descale(self, _scale: i64) -> Self {
        self
    }

    fn to_f64(self) -> f64 {
        self as f64
    }
}
