//! Two's-complement fixed-point arithmetic shared by the circuit builders,
//! the reference oracles and both protocol parties.
//!
//! A value is a signed word of `total_bits` with `frac_bits` fractional bits,
//! stored sign-extended in an `i64`. All operations are defined on the bit
//! pattern: addition wraps in `total_bits`, multiplication keeps the full
//! product and shifts right arithmetically by `frac_bits` (truncation toward
//! negative infinity), then wraps. A result computed here is bit-identical on
//! every platform, which is what lets a garbled circuit and a plaintext
//! oracle be compared with `==`.

use crate::mathf;
use alloc::vec::Vec;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FixedPointError {
    #[error("invalid format Q{total_bits}.{frac_bits}: need 0 < frac < total <= 64")]
    InvalidFormat { total_bits: u8, frac_bits: u8 },
    #[error("value {value} not representable in Q{total_bits}.{frac_bits}")]
    Range {
        value: f64,
        total_bits: u8,
        frac_bits: u8,
    },
    #[error("arithmetic overflow in checked fixed-point op")]
    Overflow,
    #[error("bit slice has length {got}, expected {expected}")]
    Length { expected: usize, got: usize },
}

/// Word layout: `total_bits` wide with `frac_bits` fractional bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FixedPointFormat {
    total_bits: u8,
    frac_bits: u8,
}

impl FixedPointFormat {
    /// Default format used by the protocol: 32-bit words, 16 fractional bits.
    pub const Q32_16: FixedPointFormat = FixedPointFormat {
        total_bits: 32,
        frac_bits: 16,
    };

    pub fn new(total_bits: u8, frac_bits: u8) -> Result<Self, FixedPointError> {
        if frac_bits == 0 || frac_bits >= total_bits || total_bits > 64 {
            return Err(FixedPointError::InvalidFormat {
                total_bits,
                frac_bits,
            });
        }
        Ok(FixedPointFormat {
            total_bits,
            frac_bits,
        })
    }

    pub fn total_bits(&self) -> u8 {
        self.total_bits
    }

    pub fn frac_bits(&self) -> u8 {
        self.frac_bits
    }

    /// 2^frac_bits as a float; exact because frac_bits <= 63.
    fn scale(&self) -> f64 {
        (1u128 << self.frac_bits) as f64
    }

    /// Smallest value out of range on the positive side, 2^(total-frac-1).
    fn upper_bound_scaled(&self) -> f64 {
        (1u128 << (self.total_bits - 1)) as f64
    }
}

/// A fixed-point word, stored sign-extended.
///
/// The invariant is that `bits` always equals the sign extension of the low
/// `total_bits` of itself, so two words are equal iff their truncated bit
/// patterns are.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FixedWord {
    bits: i64,
}

impl FixedWord {
    pub const ZERO: FixedWord = FixedWord { bits: 0 };

    /// Truncates `bits` to the format width and sign-extends.
    pub fn from_bits(bits: i64, fmt: FixedPointFormat) -> FixedWord {
        let shift = 64 - u32::from(fmt.total_bits);
        FixedWord {
            bits: ((bits as u64) << shift) as i64 >> shift,
        }
    }

    pub fn bits(&self) -> i64 {
        self.bits
    }

    /// Two's-complement pattern in the low `total_bits`, upper bits zero.
    pub fn pattern(&self, fmt: FixedPointFormat) -> u64 {
        let shift = 64 - u32::from(fmt.total_bits);
        ((self.bits as u64) << shift) >> shift
    }
}

/// Rounds to nearest, ties to even, and rejects values outside the
/// representable range (including non-finite input).
pub fn encode(value: f64, fmt: FixedPointFormat) -> Result<FixedWord, FixedPointError> {
    let range_err = || FixedPointError::Range {
        value,
        total_bits: fmt.total_bits,
        frac_bits: fmt.frac_bits,
    };
    if !value.is_finite() {
        return Err(range_err());
    }
    let scaled = mathf::round_ties_even(value * fmt.scale());
    let bound = fmt.upper_bound_scaled();
    if scaled >= bound || scaled < -bound {
        return Err(range_err());
    }
    Ok(FixedWord {
        bits: scaled as i64,
    })
}

pub fn decode(w: FixedWord, fmt: FixedPointFormat) -> f64 {
    w.bits as f64 / fmt.scale()
}

/// Wrapping addition in `total_bits`.
pub fn fx_add(a: FixedWord, b: FixedWord, fmt: FixedPointFormat) -> FixedWord {
    FixedWord::from_bits(a.bits.wrapping_add(b.bits), fmt)
}

/// Wrapping subtraction in `total_bits`.
pub fn fx_sub(a: FixedWord, b: FixedWord, fmt: FixedPointFormat) -> FixedWord {
    FixedWord::from_bits(a.bits.wrapping_sub(b.bits), fmt)
}

/// Full product shifted right arithmetically by `frac_bits`, truncated to
/// `total_bits`. The shift truncates toward negative infinity.
pub fn fx_mul(a: FixedWord, b: FixedWord, fmt: FixedPointFormat) -> FixedWord {
    let prod = i128::from(a.bits) * i128::from(b.bits);
    FixedWord::from_bits((prod >> fmt.frac_bits) as i64, fmt)
}

/// Like [`fx_add`] but reports instead of wrapping; used when debugging an
/// oracle run that is suspected of overflowing.
pub fn fx_add_checked(
    a: FixedWord,
    b: FixedWord,
    fmt: FixedPointFormat,
) -> Result<FixedWord, FixedPointError> {
    let wide = i128::from(a.bits) + i128::from(b.bits);
    checked_result(wide, fmt)
}

/// Like [`fx_mul`] but reports instead of wrapping.
pub fn fx_mul_checked(
    a: FixedWord,
    b: FixedWord,
    fmt: FixedPointFormat,
) -> Result<FixedWord, FixedPointError> {
    let wide = (i128::from(a.bits) * i128::from(b.bits)) >> fmt.frac_bits;
    checked_result(wide, fmt)
}

fn checked_result(wide: i128, fmt: FixedPointFormat) -> Result<FixedWord, FixedPointError> {
    let bound = 1i128 << (fmt.total_bits - 1);
    if wide >= bound || wide < -bound {
        return Err(FixedPointError::Overflow);
    }
    Ok(FixedWord { bits: wide as i64 })
}

/// Word as bits, least significant first; length `total_bits`.
pub fn word_to_bits(w: FixedWord, fmt: FixedPointFormat) -> Vec<bool> {
    let pat = w.pattern(fmt);
    (0..fmt.total_bits).map(|i| (pat >> i) & 1 == 1).collect()
}

/// Inverse of [`word_to_bits`].
pub fn bits_to_word(bits: &[bool], fmt: FixedPointFormat) -> Result<FixedWord, FixedPointError> {
    let t = usize::from(fmt.total_bits);
    if bits.len() != t {
        return Err(FixedPointError::Length {
            expected: t,
            got: bits.len(),
        });
    }
    let mut pat = 0u64;
    for (i, &b) in bits.iter().enumerate() {
        if b {
            pat |= 1 << i;
        }
    }
    Ok(FixedWord::from_bits(pat as i64, fmt))
}

/// Concatenates word bit vectors in order, each least significant first.
pub fn vector_to_bits(words: &[FixedWord], fmt: FixedPointFormat) -> Vec<bool> {
    let mut out = Vec::with_capacity(words.len() * usize::from(fmt.total_bits));
    for w in words {
        out.extend(word_to_bits(*w, fmt));
    }
    out
}

/// Inverse of [`vector_to_bits`]; the slice length must be a multiple of the
/// word width.
pub fn bits_to_vector(
    bits: &[bool],
    fmt: FixedPointFormat,
) -> Result<Vec<FixedWord>, FixedPointError> {
    let t = usize::from(fmt.total_bits);
    if !bits.len().is_multiple_of(t) {
        return Err(FixedPointError::Length {
            expected: bits.len().div_ceil(t) * t,
            got: bits.len(),
        });
    }
    bits.chunks(t).map(|c| bits_to_word(c, fmt)).collect()
}
