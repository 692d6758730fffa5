//! Sequential and parallel-friendly stream facade over the kernels.
//!
//! A [`SquaresStream`] is just a counter cursor plus a key; every draw
//! evaluates the kernel at the cursor and advances it by one. Because the
//! kernels are stateless, [`SquaresStream::skip`] is O(1) and
//! [`partition`] can hand out disjoint counter ranges to parallel workers.
//!
//! The counter wraps silently mod 2^64: after 2^64 draws a stream repeats.
//! Erroring would put a check on the hot path for a condition no desk-scale
//! run can reach; callers needing more than 2^64 values use more keys.

use serde::Serialize;

use crate::kernel::{squares32, squares64};
use crate::keys::Key;

/// Output mode of a stream: 32-bit (4-round) or 64-bit (5-round) kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum OutputWidth {
    U32,
    U64,
}

impl OutputWidth {
    /// Bytes per draw: 4 or 8.
    #[inline]
    pub fn word_bytes(self) -> usize {
        match self {
            Self::U32 => 4,
            Self::U64 => 8,
        }
    }

    pub fn bits(self) -> u32 {
        match self {
            Self::U32 => 32,
            Self::U64 => 64,
        }
    }
}

/// An operation was called on a stream of the wrong output width.
#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("stream has {actual:?} output, operation requires {required:?}")]
pub struct WidthError {
    pub required: OutputWidth,
    pub actual: OutputWidth,
}

/// Counter cursor over one key's output space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SquaresStream {
    key: u64,
    counter: u64,
    width: OutputWidth,
}

impl SquaresStream {
    /// Stream over a validated key, starting at counter `start`.
    pub fn new(key: Key, start: u64, width: OutputWidth) -> Self {
        Self::with_raw_key(key.get(), start, width)
    }

    /// Stream over an arbitrary 64-bit key.
    ///
    /// The kernels are total, so any key works mechanically; statistical
    /// quality is only claimed for keys from the key utility.
    pub fn with_raw_key(key: u64, start: u64, width: OutputWidth) -> Self {
        Self {
            key,
            counter: start,
            width,
        }
    }

    pub fn key(&self) -> u64 {
        self.key
    }

    /// Next counter to be consumed.
    pub fn counter(&self) -> u64 {
        self.counter
    }

    pub fn width(&self) -> OutputWidth {
        self.width
    }

    fn require(&self, required: OutputWidth) -> Result<(), WidthError> {
        if self.width == required {
            Ok(())
        } else {
            Err(WidthError {
                required,
                actual: self.width,
            })
        }
    }

    /// `squares32` at the cursor; cursor advances by one.
    #[inline]
    pub fn next_u32(&mut self) -> Result<u32, WidthError> {
        self.require(OutputWidth::U32)?;
        let out = squares32(self.counter, self.key);
        self.counter = self.counter.wrapping_add(1);
        Ok(out)
    }

    /// `squares64` at the cursor; cursor advances by one.
    #[inline]
    pub fn next_u64(&mut self) -> Result<u64, WidthError> {
        self.require(OutputWidth::U64)?;
        let out = squares64(self.counter, self.key);
        self.counter = self.counter.wrapping_add(1);
        Ok(out)
    }

    /// Uniform double in `[0, 1)` with 53 bits of entropy from one
    /// `squares64` draw.
    #[inline]
    pub fn next_f64(&mut self) -> Result<f64, WidthError> {
        Ok(u64_to_f64(self.next_u64()?))
    }

    /// Two uniform floats in `[0, 1)` from one `squares64` draw, low half
    /// first, each with 24 bits of entropy.
    #[inline]
    pub fn next_f32_pair(&mut self) -> Result<(f32, f32), WidthError> {
        let raw = self.next_u64()?;
        Ok((u32_to_f32(raw as u32), u32_to_f32((raw >> 32) as u32)))
    }

    /// Advances the cursor by `n` in O(1), wrapping mod 2^64.
    #[inline]
    pub fn skip(&mut self, n: u64) {
        self.counter = self.counter.wrapping_add(n);
    }

    /// Fills `dest` with little-endian kernel output bytes.
    ///
    /// A trailing partial word is truncated from a full draw; the cursor
    /// advances by `ceil(dest.len() / word_bytes)`.
    pub fn fill_bytes(&mut self, dest: &mut [u8]) {
        match self.width {
            OutputWidth::U32 => {
                let mut chunks = dest.chunks_exact_mut(4);
                for chunk in &mut chunks {
                    let out = squares32(self.counter, self.key);
                    self.counter = self.counter.wrapping_add(1);
                    chunk.copy_from_slice(&out.to_le_bytes());
                }
                let tail = chunks.into_remainder();
                if !tail.is_empty() {
                    let out = squares32(self.counter, self.key);
                    self.counter = self.counter.wrapping_add(1);
                    tail.copy_from_slice(&out.to_le_bytes()[..tail.len()]);
                }
            }
            OutputWidth::U64 => {
                let mut chunks = dest.chunks_exact_mut(8);
                for chunk in &mut chunks {
                    let out = squares64(self.counter, self.key);
                    self.counter = self.counter.wrapping_add(1);
                    chunk.copy_from_slice(&out.to_le_bytes());
                }
                let tail = chunks.into_remainder();
                if !tail.is_empty() {
                    let out = squares64(self.counter, self.key);
                    self.counter = self.counter.wrapping_add(1);
                    tail.copy_from_slice(&out.to_le_bytes()[..tail.len()]);
                }
            }
        }
    }
}

/// `(raw >> 11) * 2^-53`: uniform in `[0, 1)` from the 53 strongest bits.
#[inline]
pub fn u64_to_f64(raw: u64) -> f64 {
    (raw >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// `(half >> 8) * 2^-24`: uniform in `[0, 1)` from the 24 strongest bits.
#[inline]
pub fn u32_to_f32(half: u32) -> f32 {
    (half >> 8) as f32 * (1.0 / (1u32 << 24) as f32)
}

/// A disjoint counter interval assigned to one parallel worker.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Partition {
    key: Key,
    start: u64,
    length: u128,
}

/// Invalid arguments to [`partition`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum PartitionError {
    #[error("num_parts must be at least 1")]
    ZeroParts,
    #[error("partition index {idx} out of range for {num_parts} parts")]
    IndexOutOfRange { idx: u64, num_parts: u64 },
}

impl Partition {
    pub fn key(&self) -> Key {
        self.key
    }

    /// First counter of the interval.
    pub fn start(&self) -> u64 {
        self.start
    }

    /// Interval length. 128-bit because a single partition over one part
    /// spans the full 2^64 counter space.
    pub fn length(&self) -> u128 {
        self.length
    }

    /// Stream positioned at the start of this partition.
    pub fn stream(&self, width: OutputWidth) -> SquaresStream {
        SquaresStream::new(self.key, self.start, width)
    }
}

/// Splits the 2^64 counter space into `num_parts` near-equal intervals.
///
/// Every part gets `floor(2^64 / num_parts)` counters; the last part
/// absorbs the remainder. Parts are pairwise disjoint and tile the space.
pub fn partition(key: Key, num_parts: u64, idx: u64) -> Result<Partition, PartitionError> {
    if num_parts == 0 {
        return Err(PartitionError::ZeroParts);
    }
    if idx >= num_parts {
        return Err(PartitionError::IndexOutOfRange { idx, num_parts });
    }
    const SPACE: u128 = 1u128 << 64;
    let span = SPACE / u128::from(num_parts);
    let start = span * u128::from(idx);
    let length = if idx == num_parts - 1 {
        SPACE - start
    } else {
        span
    };
    Ok(Partition {
        key,
        start: start as u64,
        length,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::keys::{key_from_index, KeyIndex};

    fn test_key() -> Key {
        key_from_index(KeyIndex::new(0).unwrap())
    }

    #[test]
    fn next_matches_kernel_at_cursor() {
        let key = test_key();
        let mut s = SquaresStream::new(key, 7, OutputWidth::U32);
        assert_eq!(s.next_u32().unwrap(), squares32(7, key.get()));
        assert_eq!(s.next_u32().unwrap(), squares32(8, key.get()));

        let mut s = SquaresStream::new(key, 7, OutputWidth::U64);
        assert_eq!(s.next_u64().unwrap(), squares64(7, key.get()));
        assert_eq!(s.counter(), 8);
    }

    #[test]
    fn degenerate_raw_key_zero_draws_zero() {
        let mut s = SquaresStream::with_raw_key(0, 0, OutputWidth::U32);
        assert_eq!(s.next_u32().unwrap(), 0);
        let mut s = SquaresStream::with_raw_key(0, 0, OutputWidth::U64);
        assert_eq!(s.next_u64().unwrap(), 0);
        // squares32(1, 1) collapses to 0 through (2^32)^2 mod 2^64
        let mut s = SquaresStream::with_raw_key(1, 1, OutputWidth::U32);
        assert_eq!(s.next_u32().unwrap(), 0);
    }

    #[test]
    fn wrong_width_is_rejected() {
        let mut s = SquaresStream::new(test_key(), 0, OutputWidth::U32);
        assert!(s.next_u64().is_err());
        assert!(s.next_f64().is_err());
        assert!(s.next_f32_pair().is_err());
        let mut s = SquaresStream::new(test_key(), 0, OutputWidth::U64);
        assert!(s.next_u32().is_err());
    }

    #[test]
    fn sequential_draws_equal_batch_evaluation() {
        let key = test_key();
        let start = 0xFFFF_FFFF_FFFF_FF00u64; // crosses the wrap boundary
        let mut s = SquaresStream::new(key, start, OutputWidth::U64);
        for i in 0..10_000u64 {
            assert_eq!(
                s.next_u64().unwrap(),
                squares64(start.wrapping_add(i), key.get())
            );
        }
    }

    #[test]
    fn skip_is_equivalent_to_discarding() {
        let key = test_key();
        let mut skipped = SquaresStream::new(key, 0, OutputWidth::U32);
        skipped.skip(5);
        let mut walked = SquaresStream::new(key, 0, OutputWidth::U32);
        for _ in 0..5 {
            walked.next_u32().unwrap();
        }
        assert_eq!(skipped.next_u32().unwrap(), walked.next_u32().unwrap());
    }

    #[test]
    fn skip_zero_and_wraparound() {
        let key = test_key();
        let mut s = SquaresStream::new(key, 123, OutputWidth::U32);
        s.skip(0);
        assert_eq!(s.counter(), 123);
        s.skip(1u64 << 63);
        s.skip(1u64 << 63);
        assert_eq!(s.counter(), 123);
    }

    #[test]
    fn f64_conversion_fixed_points() {
        assert_eq!(u64_to_f64(0), 0.0);
        assert_eq!(u64_to_f64(1u64 << 63), 0.5);
        let max = u64_to_f64(u64::MAX);
        assert_eq!(max, ((1u64 << 53) - 1) as f64 / (1u64 << 53) as f64);
        assert!(max < 1.0);
    }

    #[test]
    fn f32_pair_conversion_fixed_points() {
        assert_eq!(u32_to_f32(0), 0.0);
        assert_eq!(u32_to_f32(1u32 << 31), 0.5);
        let max = u32_to_f32(u32::MAX);
        assert_eq!(max, ((1u32 << 24) - 1) as f32 / (1u32 << 24) as f32);
        assert!(max < 1.0);
    }

    #[test]
    fn f32_pair_orders_low_half_first() {
        let key = test_key();
        let raw = squares64(0, key.get());
        let mut s = SquaresStream::new(key, 0, OutputWidth::U64);
        let (lo, hi) = s.next_f32_pair().unwrap();
        assert_eq!(lo, u32_to_f32(raw as u32));
        assert_eq!(hi, u32_to_f32((raw >> 32) as u32));
    }

    #[test]
    fn f64_draws_stay_in_unit_interval_with_uniform_mean() {
        let mut s = SquaresStream::new(test_key(), 0, OutputWidth::U64);
        let n = 1_000_000u64;
        let mut sum = 0.0f64;
        for _ in 0..n {
            let x = s.next_f64().unwrap();
            assert!((0.0..1.0).contains(&x));
            sum += x;
        }
        let mean = sum / n as f64;
        // 3 sigma of the uniform mean at n = 10^6 is ~0.000866
        let sigma3 = 3.0 / (12.0f64 * n as f64).sqrt();
        assert!(
            (0.4995 - sigma3..=0.5005 + sigma3).contains(&mean),
            "mean {mean} outside tolerance"
        );
    }

    #[test]
    fn fill_bytes_serializes_little_endian_words() {
        let key = test_key();
        let mut s = SquaresStream::new(key, 0, OutputWidth::U64);
        let mut buf = [0u8; 12];
        s.fill_bytes(&mut buf);
        let d0 = squares64(0, key.get());
        let d1 = squares64(1, key.get());
        assert_eq!(&buf[..8], &d0.to_le_bytes());
        assert_eq!(&buf[8..], &d1.to_le_bytes()[..4]);
        assert_eq!(s.counter(), 2);

        let mut s = SquaresStream::new(key, 0, OutputWidth::U32);
        let mut buf = [0u8; 4];
        s.fill_bytes(&mut buf);
        assert_eq!(buf, squares32(0, key.get()).to_le_bytes());
    }

    #[test]
    fn fill_bytes_zero_key_yields_zero_bytes() {
        let mut s = SquaresStream::with_raw_key(0, 0, OutputWidth::U64);
        let mut buf = [0xAAu8; 8];
        s.fill_bytes(&mut buf);
        assert_eq!(buf, [0u8; 8]);
    }

    #[test]
    fn partition_full_space_and_halves() {
        let key = test_key();
        let p = partition(key, 1, 0).unwrap();
        assert_eq!(p.start(), 0);
        assert_eq!(p.length(), 1u128 << 64);

        let p = partition(key, 2, 1).unwrap();
        assert_eq!(p.start(), 1u64 << 63);
        assert_eq!(p.length(), 1u128 << 63);
    }

    #[test]
    fn partition_ten_million_parts_length() {
        // 2^64 / 10^7 is about 1.8 trillion counters per part.
        let p = partition(test_key(), 10_000_000, 42).unwrap();
        assert_eq!(p.length(), 1_844_674_407_370);
    }

    #[test]
    fn partition_rejects_bad_arguments() {
        assert_eq!(partition(test_key(), 0, 0), Err(PartitionError::ZeroParts));
        assert!(matches!(
            partition(test_key(), 4, 4),
            Err(PartitionError::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn partitions_tile_the_counter_space() {
        for num_parts in [1u64, 2, 3, 7, 100, 9_999, 10_000] {
            let mut expected_start = 0u128;
            for idx in 0..num_parts {
                let p = partition(test_key(), num_parts, idx).unwrap();
                assert_eq!(
                    u128::from(p.start()),
                    expected_start,
                    "parts={num_parts} idx={idx}"
                );
                expected_start += p.length();
            }
            assert_eq!(expected_start, 1u128 << 64, "parts={num_parts}");
        }
    }
}
