//! Stateless counter-based middle-square kernels.
//!
//! The 32-bit generator runs four square-add-rotate rounds over `ctr * key`;
//! the 64-bit generator adds a fifth round and XORs it into the fourth-round
//! value. Both are pure functions of `(ctr, key)` with no generator state,
//! so any counter can be evaluated in any order from any thread.
//!
//! All arithmetic is modulo 2^64 (wrapping). The kernels are total over the
//! full `(ctr, key)` input space; statistical quality is only claimed for
//! keys produced by the [`crate::keys`] utility.

/// Swaps the upper and lower 32-bit halves of `x`. Involutive.
#[inline]
pub const fn rot_half(x: u64) -> u64 {
    x.rotate_left(32)
}

/// One square-add-rotate round: `rot_half(x*x + w)` mod 2^64.
///
/// This is the shared body of rounds 1-3 of both kernels (and round 4 of
/// the 64-bit kernel before output extraction).
#[inline]
pub const fn round(x: u64, w: u64) -> u64 {
    rot_half(x.wrapping_mul(x).wrapping_add(w))
}

/// Four-round kernel producing a 32-bit output for counter `ctr` under `key`.
///
/// The rotation after each square positions the "middle" bits of the square
/// in the low half, and the rounds alternate adding `y = ctr*key` and
/// `z = y + key`; one of the two always carries non-zero digits for utility
/// keys, which is what keeps the output uniform.
#[inline]
pub const fn squares32(ctr: u64, key: u64) -> u32 {
    let y = ctr.wrapping_mul(key);
    let z = y.wrapping_add(key);
    let mut x = y;
    x = round(x, y); // round 1
    x = round(x, z); // round 2
    x = round(x, y); // round 3
    (x.wrapping_mul(x).wrapping_add(z) >> 32) as u32 // round 4
}

/// Five-round kernel producing a 64-bit output for counter `ctr` under `key`.
///
/// Rounds 1-4 match [`squares32`]; the full 64-bit round-4 value `t` is
/// XORed with the upper half of a fifth round, so the output keeps the
/// 32 strong bits of the 4-round generator in its upper half.
#[inline]
pub const fn squares64(ctr: u64, key: u64) -> u64 {
    let y = ctr.wrapping_mul(key);
    let z = y.wrapping_add(key);
    let mut x = y;
    x = round(x, y); // round 1
    x = round(x, z); // round 2
    x = round(x, y); // round 3
    let t = x.wrapping_mul(x).wrapping_add(z); // round 4
    x = rot_half(t);
    t ^ (x.wrapping_mul(x).wrapping_add(y) >> 32) // round 5
}

/// Width parameters for the reduced-width kernel analog.
///
/// `word_bits` plays the role of 64 and `half_bits` the role of 32 in
/// [`squares32`]. Small widths make the full counter space enumerable, which
/// is how the output-uniformity claim is checked at desk scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScaledParams {
    word_bits: u32,
    half_bits: u32,
}

/// Rejected width for [`ScaledParams`]: must be even and within `[8, 64]`.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("scaled word width must be even and in [8, 64], got {0}")]
pub struct ScaledWidthError(pub u32);

impl ScaledParams {
    /// Validates `word_bits` (even, `8 <= W <= 64`).
    pub fn new(word_bits: u32) -> Result<Self, ScaledWidthError> {
        if !word_bits.is_multiple_of(2) || !(8..=64).contains(&word_bits) {
            return Err(ScaledWidthError(word_bits));
        }
        Ok(Self {
            word_bits,
            half_bits: word_bits / 2,
        })
    }

    /// Total word width W.
    pub fn word_bits(self) -> u32 {
        self.word_bits
    }

    /// W/2, the output width of the scaled kernel.
    pub fn half_bits(self) -> u32 {
        self.half_bits
    }

    /// Bit mask selecting a W-bit word.
    #[inline]
    pub fn word_mask(self) -> u64 {
        if self.word_bits == 64 {
            u64::MAX
        } else {
            (1u64 << self.word_bits) - 1
        }
    }

    /// Number of distinct W/2-bit outputs.
    pub fn output_cardinality(self) -> u64 {
        1u64 << self.half_bits
    }
}

/// [`squares32`] with 64 -> W and 32 -> W/2 substituted everywhere.
///
/// Inputs are reduced mod 2^W. At `W = 64` this agrees bit-exactly with
/// [`squares32`] for every `(ctr, key)`.
pub fn squares32_scaled(ctr: u64, key: u64, p: ScaledParams) -> u64 {
    let mask = p.word_mask();
    let h = p.half_bits;
    let scaled_round = |x: u64, w: u64| -> u64 {
        let sq = x.wrapping_mul(x).wrapping_add(w) & mask;
        ((sq >> h) | (sq << h)) & mask
    };
    let ctr = ctr & mask;
    let key = key & mask;
    let y = ctr.wrapping_mul(key) & mask;
    let z = y.wrapping_add(key) & mask;
    let mut x = y;
    x = scaled_round(x, y);
    x = scaled_round(x, z);
    x = scaled_round(x, y);
    (x.wrapping_mul(x).wrapping_add(z) & mask) >> h
}

/// Executable witness that `n` repeated wrapping additions of `s` trace the
/// same sequence as `i * s` mod 2^64 for `i` in `[0, n)`.
///
/// This always holds; the function exists so the equivalence underlying the
/// counter-times-key construction is checked by running it, not assumed.
pub fn weyl_equivalence_check(s: u64, n: u64) -> bool {
    let mut w = 0u64;
    for i in 0..n {
        if w != i.wrapping_mul(s) {
            return false;
        }
        w = w.wrapping_add(s);
    }
    true
}
