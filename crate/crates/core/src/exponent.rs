//! The L^p exponent, `p ∈ [1, ∞]`.

use std::fmt;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// An exponent `p ∈ [1, ∞]`. Infinity is `Exponent::INFINITY`.
///
/// JSON encoding: finite exponents as numbers, infinity as the string
/// `"inf"` (JSON has no infinity literal).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Exponent(f64);

impl Exponent {
    pub const ONE: Exponent = Exponent(1.0);
    pub const INFINITY: Exponent = Exponent(f64::INFINITY);

    pub fn new(p: f64) -> Result<Self> {
        if p.is_nan() || p < 1.0 {
            return Err(Error::InvalidExponent(format!(
                "exponent must satisfy p >= 1 (or be infinite), got {p}"
            )));
        }
        Ok(Self(p))
    }

    pub fn get(self) -> f64 {
        self.0
    }

    pub fn is_one(self) -> bool {
        self.0 == 1.0
    }

    pub fn is_infinite(self) -> bool {
        self.0.is_infinite()
    }

    /// The norm exponent `s = 2p/(p−1)` of the quotient denominator
    /// `‖v‖_s²`: `s = 2` at `p = ∞` and `s → ∞` as `p → 1⁺`.
    pub fn denominator_exponent(self) -> f64 {
        if self.is_infinite() {
            2.0
        } else {
            2.0 * self.0 / (self.0 - 1.0)
        }
    }

    /// The constraint exponent `q = 2/(p−1)` of `∫ |v|^q v = 0`
    /// (finite `p > 1` only).
    pub fn constraint_exponent(self) -> f64 {
        debug_assert!(!self.is_one() && !self.is_infinite());
        2.0 / (self.0 - 1.0)
    }

    /// Parse `"inf"`, `"∞"` or a number.
    pub fn parse(s: &str) -> Result<Self> {
        let t = s.trim();
        if t.eq_ignore_ascii_case("inf") || t.eq_ignore_ascii_case("infinity") || t == "∞" {
            return Ok(Self::INFINITY);
        }
        let p: f64 = t
            .parse()
            .map_err(|_| Error::InvalidExponent(format!("cannot parse exponent `{s}`")))?;
        Self::new(p)
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_infinite() {
            write!(f, "inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl Serialize for Exponent {
    fn serialize<S: Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        if self.is_infinite() {
            ser.serialize_str("inf")
        } else {
            ser.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for Exponent {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        let raw = Raw::deserialize(de)?;
        let parsed = match raw {
            Raw::Num(p) => Exponent::new(p),
            Raw::Str(s) => Exponent::parse(&s),
        };
        parsed.map_err(|e| D::Error::custom(e.to_string()))
    }
}
