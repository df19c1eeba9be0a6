//! Two-tier zero testing: canonical form first, numeric sampling second.

use std::fmt;

use num_complex::Complex64;

use super::Expr;
use crate::error::Result;
use crate::jet::PdeSystem;
use crate::oracle::{numeric_zero_check, OracleConfig};

/// Sample point at which an expression was found to be nonzero.
#[derive(Clone, Debug, PartialEq)]
pub struct Witness {
    pub seed: u64,
    /// Printed symbol (or function leaf) with its sampled value.
    pub values: Vec<(String, Complex64)>,
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .values
            .iter()
            .map(|(k, v)| format!("{} = {}", k, fmt_complex(v)))
            .collect();
        write!(f, "{{{}}}", parts.join(", "))
    }
}

pub(crate) fn fmt_complex(v: &Complex64) -> String {
    if v.im == 0.0 {
        format!("{:.6}", v.re)
    } else {
        format!("{:.6}{:+.6}i", v.re, v.im)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ZeroVerdict {
    ProvedZero,
    NumericZero { trials: usize, max_abs: f64 },
    NonZero { witness: Witness, value: Complex64 },
}

impl ZeroVerdict {
    /// Proved or numerically zero.
    pub fn is_zero(&self) -> bool {
        !matches!(self, ZeroVerdict::NonZero { .. })
    }

    pub fn is_proved(&self) -> bool {
        matches!(self, ZeroVerdict::ProvedZero)
    }

    pub fn witness(&self) -> Option<&Witness> {
        match self {
            ZeroVerdict::NonZero { witness, .. } => Some(witness),
            _ => None,
        }
    }
}

impl fmt::Display for ZeroVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ZeroVerdict::ProvedZero => write!(f, "ProvedZero"),
            ZeroVerdict::NumericZero { trials, max_abs } => {
                write!(f, "NumericZero ({} trials, max |value| {:.3e})", trials, max_abs)
            }
            ZeroVerdict::NonZero { witness, value } => {
                write!(f, "NonZero (value {} at {})", fmt_complex(value), witness)
            }
        }
    }
}

/// Zero test with default oracle settings.
pub fn is_zero(e: &Expr) -> Result<ZeroVerdict> {
    is_zero_with(e, &OracleConfig::default(), None)
}

/// Zero test; with `constraints`, numeric samples lie on the solution manifold.
pub fn is_zero_with(e: &Expr, cfg: &OracleConfig, constraints: Option<&PdeSystem>) -> Result<ZeroVerdict> {
    if e.is_zero() {
        return Ok(ZeroVerdict::ProvedZero);
    }
    numeric_zero_check(e, cfg, constraints)
}
