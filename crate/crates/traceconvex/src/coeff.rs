//! Dual-mode scalars: exact arbitrary-precision rationals or double floats.
//!
//! A polynomial (commutative or free) carries a single mode; arithmetic never
//! mixes modes. Exact mode is used for all symbolic identities, float mode
//! whenever roots leave the rationals.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Coefficient cleanup threshold for float mode.
pub const FLOAT_EPS: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Exact,
    Float,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mode::Exact => write!(f, "exact"),
            Mode::Float => write!(f, "float"),
        }
    }
}

/// A scalar tagged with its arithmetic mode.
#[derive(Debug, Clone, PartialEq)]
pub enum Coeff {
    Rat(BigRational),
    F64(f64),
}

impl Coeff {
    pub fn mode(&self) -> Mode {
        match self {
            Coeff::Rat(_) => Mode::Exact,
            Coeff::F64(_) => Mode::Float,
        }
    }

    pub fn zero(mode: Mode) -> Self {
        match mode {
            Mode::Exact => Coeff::Rat(BigRational::zero()),
            Mode::Float => Coeff::F64(0.0),
        }
    }

    pub fn one(mode: Mode) -> Self {
        Coeff::from_int(1, mode)
    }

    pub fn from_int(v: i64, mode: Mode) -> Self {
        match mode {
            Mode::Exact => Coeff::Rat(BigRational::from_integer(BigInt::from(v))),
            Mode::Float => Coeff::F64(v as f64),
        }
    }

    pub fn from_ratio(num: i64, den: i64, mode: Mode) -> Self {
        assert!(den != 0, "zero denominator");
        match mode {
            Mode::Exact => Coeff::Rat(BigRational::new(BigInt::from(num), BigInt::from(den))),
            Mode::Float => Coeff::F64(num as f64 / den as f64),
        }
    }

    pub fn from_big(r: BigRational, mode: Mode) -> Self {
        match mode {
            Mode::Exact => Coeff::Rat(r),
            Mode::Float => Coeff::F64(r.to_f64().unwrap_or(f64::NAN)),
        }
    }

    pub fn from_f64(v: f64) -> Self {
        Coeff::F64(v)
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Coeff::Rat(r) => r.to_f64().unwrap_or(f64::NAN),
            Coeff::F64(v) => *v,
        }
    }

    /// Convert into the requested mode. Exact -> Float loses precision;
    /// Float -> Exact uses the exact binary value of the double.
    pub fn into_mode(self, mode: Mode) -> Self {
        match (self, mode) {
            (c @ Coeff::Rat(_), Mode::Exact) => c,
            (c @ Coeff::F64(_), Mode::Float) => c,
            (Coeff::Rat(r), Mode::Float) => Coeff::F64(r.to_f64().unwrap_or(f64::NAN)),
            (Coeff::F64(v), Mode::Exact) => {
                Coeff::Rat(BigRational::from_float(v).expect("finite float"))
            }
        }
    }

    pub fn as_rat(&self) -> &BigRational {
        match self {
            Coeff::Rat(r) => r,
            Coeff::F64(_) => panic!("expected exact coefficient"),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Coeff::Rat(r) => r.is_zero(),
            Coeff::F64(v) => *v == 0.0,
        }
    }

    /// Zero in exact mode, below the cleanup threshold in float mode.
    pub fn is_negligible(&self) -> bool {
        match self {
            Coeff::Rat(r) => r.is_zero(),
            Coeff::F64(v) => v.abs() < FLOAT_EPS,
        }
    }

    pub fn is_negative(&self) -> bool {
        match self {
            Coeff::Rat(r) => r.is_negative(),
            Coeff::F64(v) => *v < 0.0,
        }
    }

    pub fn is_positive(&self) -> bool {
        match self {
            Coeff::Rat(r) => r.is_positive(),
            Coeff::F64(v) => *v > 0.0,
        }
    }

    pub fn abs(&self) -> Coeff {
        match self {
            Coeff::Rat(r) => Coeff::Rat(r.abs()),
            Coeff::F64(v) => Coeff::F64(v.abs()),
        }
    }

    pub fn abs_f64(&self) -> f64 {
        self.to_f64().abs()
    }

    pub fn neg(&self) -> Coeff {
        match self {
            Coeff::Rat(r) => Coeff::Rat(-r),
            Coeff::F64(v) => Coeff::F64(-v),
        }
    }

    pub fn add(&self, other: &Coeff) -> Coeff {
        match (self, other) {
            (Coeff::Rat(a), Coeff::Rat(b)) => Coeff::Rat(a + b),
            (Coeff::F64(a), Coeff::F64(b)) => Coeff::F64(a + b),
            _ => panic!("coefficient mode mismatch"),
        }
    }

    pub fn sub(&self, other: &Coeff) -> Coeff {
        match (self, other) {
            (Coeff::Rat(a), Coeff::Rat(b)) => Coeff::Rat(a - b),
            (Coeff::F64(a), Coeff::F64(b)) => Coeff::F64(a - b),
            _ => panic!("coefficient mode mismatch"),
        }
    }

    pub fn mul(&self, other: &Coeff) -> Coeff {
        match (self, other) {
            (Coeff::Rat(a), Coeff::Rat(b)) => Coeff::Rat(a * b),
            (Coeff::F64(a), Coeff::F64(b)) => Coeff::F64(a * b),
            _ => panic!("coefficient mode mismatch"),
        }
    }

    pub fn div(&self, other: &Coeff) -> Coeff {
        match (self, other) {
            (Coeff::Rat(a), Coeff::Rat(b)) => Coeff::Rat(a / b),
            (Coeff::F64(a), Coeff::F64(b)) => Coeff::F64(a / b),
            _ => panic!("coefficient mode mismatch"),
        }
    }

    /// Total order on the real value. Modes must match.
    pub fn cmp_real(&self, other: &Coeff) -> Ordering {
        match (self, other) {
            (Coeff::Rat(a), Coeff::Rat(b)) => a.cmp(b),
            (Coeff::F64(a), Coeff::F64(b)) => a.partial_cmp(b).unwrap_or(Ordering::Equal),
            _ => panic!("coefficient mode mismatch"),
        }
    }
}

impl fmt::Display for Coeff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coeff::Rat(r) => {
                if r.is_integer() {
                    write!(f, "{}", r.numer())
                } else {
                    write!(f, "{}/{}", r.numer(), r.denom())
                }
            }
            Coeff::F64(v) => write!(f, "{}", v),
        }
    }
}

/// Parse a scalar literal: integer, `p/q` rational, or decimal.
/// Integers and rationals produce exact coefficients, decimals floats.
pub fn parse_scalar(text: &str) -> Result<Coeff> {
    let s = text.trim();
    if s.is_empty() {
        return Err(Error::Parse {
            pos: 0,
            msg: "empty scalar".into(),
        });
    }
    if let Some((num, den)) = s.split_once('/') {
        let n: BigInt = num.trim().parse().map_err(|_| Error::Parse {
            pos: 0,
            msg: format!("bad rational numerator {:?}", num),
        })?;
        let d: BigInt = den.trim().parse().map_err(|_| Error::Parse {
            pos: 0,
            msg: format!("bad rational denominator {:?}", den),
        })?;
        if d.is_zero() {
            return Err(Error::Parse {
                pos: 0,
                msg: "zero denominator".into(),
            });
        }
        return Ok(Coeff::Rat(BigRational::new(n, d)));
    }
    if let Ok(n) = s.parse::<BigInt>() {
        return Ok(Coeff::Rat(BigRational::from_integer(n)));
    }
    s.parse::<f64>()
        .map(Coeff::F64)
        .map_err(|_| Error::Parse {
            pos: 0,
            msg: format!("bad scalar literal {:?}", s),
        })
}
