//! Alphabet sizes carried in the log domain.
//!
//! Sizes such as `2^256` never fit an integer type, so an [`Alphabet`] keeps
//! `N`, `ln N` and `ln (N - 1)` as floats. Every formula downstream reads
//! the logarithms, which stay accurate for any bit-width up to 1023.

use std::f64::consts::LN_2;
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};

/// Largest bit-width accepted; `2^1023` is the largest power of two an `f64` holds.
pub const MAX_BITS: u32 = 1023;

/// Largest alphabet that [`Alphabet::exact_size`] will hand out for materialization.
pub const MAX_MATERIALIZED: u64 = 1 << 24;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Alphabet {
    size: f64,
    ln_size: f64,
    ln_size_minus_one: f64,
    exact: Option<u64>,
    bits: Option<u32>,
}

impl Alphabet {
    /// An alphabet of `n >= 2` symbols.
    pub fn new(n: u64) -> Result<Self> {
        if n < 2 {
            return Err(Error::domain(format!("alphabet size must be at least 2, got {n}")));
        }
        let bits = n.is_power_of_two().then(|| n.trailing_zeros());
        Ok(Self {
            size: n as f64,
            ln_size: match bits {
                Some(b) => f64::from(b) * LN_2,
                None => (n as f64).ln(),
            },
            ln_size_minus_one: ((n - 1) as f64).ln(),
            exact: Some(n),
            bits,
        })
    }

    /// An alphabet of `2^bits` symbols, `1 <= bits <= 1023`.
    pub fn from_bits(bits: u32) -> Result<Self> {
        if bits == 0 || bits > MAX_BITS {
            return Err(Error::domain(format!(
                "bit-width must lie in [1, {MAX_BITS}], got {bits}"
            )));
        }
        if bits < 64 {
            return Self::new(1u64 << bits);
        }
        let size = 2f64.powi(bits as i32);
        Ok(Self {
            size,
            ln_size: f64::from(bits) * LN_2,
            ln_size_minus_one: f64::from(bits) * LN_2 + (-1.0 / size).ln_1p(),
            exact: None,
            bits: Some(bits),
        })
    }

    /// `N` as a float (exact for powers of two and for `N <= 2^53`).
    pub fn size(&self) -> f64 {
        self.size
    }

    pub fn ln_size(&self) -> f64 {
        self.ln_size
    }

    pub fn log2_size(&self) -> f64 {
        match self.bits {
            Some(b) => f64::from(b),
            None => self.ln_size / LN_2,
        }
    }

    /// `ln (N - 1)`.
    pub fn ln_size_minus_one(&self) -> f64 {
        self.ln_size_minus_one
    }

    /// `N / (N - 1)` without forming `N - 1` for huge sizes.
    pub fn size_over_size_minus_one(&self) -> f64 {
        1.0 / (1.0 - 1.0 / self.size)
    }

    /// Bit-width when `N` is a power of two.
    pub fn bits(&self) -> Option<u32> {
        self.bits
    }

    /// `N` as an integer when it is small enough to build a weight vector.
    pub fn exact_size(&self) -> Option<usize> {
        self.exact
            .filter(|&n| n <= MAX_MATERIALIZED)
            .map(|n| n as usize)
    }
}

impl fmt::Display for Alphabet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.exact, self.bits) {
            (Some(n), _) => write!(f, "{n}"),
            (None, Some(b)) => write!(f, "2^{b}"),
            (None, None) => write!(f, "{}", self.size),
        }
    }
}

#[inline]
pub fn nats_to_bits(nats: f64) -> f64 {
    nats / LN_2
}

#[inline]
pub fn bits_to_nats(bits: f64) -> f64 {
    bits * LN_2
}
