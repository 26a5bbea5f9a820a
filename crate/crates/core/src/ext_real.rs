//! Nonnegative extended reals with `1/0 = ∞` and `1/∞ = 0`.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Relative slack for threshold comparisons such as `α ≥ 1/γ`, so that
/// rescaling the inputs by a finite factor cannot flip a verdict through
/// floating-point rounding alone.
pub const COMPARE_REL_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ExtReal {
    Finite(f64),
    Infinity,
}

impl ExtReal {
    pub const ZERO: ExtReal = ExtReal::Finite(0.0);
    pub const ONE: ExtReal = ExtReal::Finite(1.0);
    pub const INF: ExtReal = ExtReal::Infinity;

    pub fn new(x: f64) -> Result<Self> {
        if x.is_nan() || x < 0.0 {
            return Err(Error::Invalid(format!("extended real must be ≥ 0, got {x}")));
        }
        Ok(if x.is_infinite() { ExtReal::Infinity } else { ExtReal::Finite(x) })
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, ExtReal::Infinity)
    }

    pub fn is_zero(self) -> bool {
        self == ExtReal::ZERO
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            ExtReal::Finite(x) => Some(x),
            ExtReal::Infinity => None,
        }
    }

    /// `f64` view, with `∞` as `f64::INFINITY`.
    pub fn to_f64(self) -> f64 {
        self.finite().unwrap_or(f64::INFINITY)
    }

    pub fn recip(self) -> ExtReal {
        match self {
            ExtReal::Infinity => ExtReal::ZERO,
            ExtReal::Finite(0.0) => ExtReal::Infinity,
            ExtReal::Finite(x) => ExtReal::Finite(1.0 / x),
        }
    }

    /// Scaling by a finite positive factor.
    pub fn scale(self, c: f64) -> ExtReal {
        match self {
            ExtReal::Infinity => ExtReal::Infinity,
            ExtReal::Finite(x) => ExtReal::Finite(x * c),
        }
    }

    /// `self ≥ other` up to [`COMPARE_REL_TOL`]; exact when either side is
    /// infinite or zero.
    pub fn at_least(self, other: ExtReal) -> bool {
        match (self, other) {
            (ExtReal::Infinity, _) => true,
            (ExtReal::Finite(_), ExtReal::Infinity) => false,
            (ExtReal::Finite(x), ExtReal::Finite(y)) => x >= y * (1.0 - COMPARE_REL_TOL),
        }
    }
}

impl PartialOrd for ExtReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match (self, other) {
            (ExtReal::Infinity, ExtReal::Infinity) => Some(Ordering::Equal),
            (ExtReal::Infinity, _) => Some(Ordering::Greater),
            (_, ExtReal::Infinity) => Some(Ordering::Less),
            (ExtReal::Finite(a), ExtReal::Finite(b)) => a.partial_cmp(b),
        }
    }
}

impl From<f64> for ExtReal {
    /// Panics on negative or NaN input; use [`ExtReal::new`] for fallible conversion.
    fn from(x: f64) -> Self {
        ExtReal::new(x).expect("nonnegative value")
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtReal::Finite(x) => write!(f, "{x}"),
            ExtReal::Infinity => f.write_str("inf"),
        }
    }
}

impl FromStr for ExtReal {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        match t.to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "+inf" | "∞" => Ok(ExtReal::Infinity),
            _ => {
                let x: f64 = t.parse().map_err(|_| Error::Parse {
                    pos: 0,
                    msg: format!("'{t}' is neither a number nor 'inf'"),
                })?;
                ExtReal::new(x)
            }
        }
    }
}

impl Serialize for ExtReal {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ExtReal::Finite(x) => s.serialize_f64(*x),
            ExtReal::Infinity => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for ExtReal {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = ExtReal;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a nonnegative number or \"inf\"")
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<ExtReal, E> {
                ExtReal::new(v).map_err(E::custom)
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<ExtReal, E> {
                Ok(ExtReal::Finite(v as f64))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<ExtReal, E> {
                ExtReal::new(v as f64).map_err(E::custom)
            }

            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<ExtReal, E> {
                v.parse().map_err(E::custom)
            }
        }
        d.deserialize_any(V)
    }
}
