//! Property tests over the structural invariants.

use proptest::prelude::*;

use squares::kernel::{rot_half, squares32, squares64};
use squares::keys::{generate_keys, KeyFile, KeyFileFormat, KeyIndex};
use squares::stats::transform_bits_reversed;
use squares::stream::{OutputWidth, SquaresStream};

proptest! {
    #[test]
    fn rot_half_is_an_involution(x: u64) {
        prop_assert_eq!(rot_half(rot_half(x)), x);
    }

    #[test]
    fn squares64_upper_half_is_squares32(ctr: u64, key: u64) {
        // The fifth-round XOR term only reaches the low half, so the 64-bit
        // output always carries the 32-bit output in its upper 32 bits.
        prop_assert_eq!((squares64(ctr, key) >> 32) as u32, squares32(ctr, key));
    }

    #[test]
    fn skip_composes_additively(key: u64, start: u64, n: u64, m: u64) {
        let mut once = SquaresStream::with_raw_key(key, start, OutputWidth::U64);
        once.skip(n.wrapping_add(m));
        let mut twice = SquaresStream::with_raw_key(key, start, OutputWidth::U64);
        twice.skip(n);
        twice.skip(m);
        prop_assert_eq!(once.counter(), twice.counter());
        prop_assert_eq!(once.next_u64().unwrap(), twice.next_u64().unwrap());
    }

    #[test]
    fn bits_reversed_is_an_involution(bytes in proptest::collection::vec(any::<u8>(), 0..512)) {
        for width in [OutputWidth::U32, OutputWidth::U64] {
            let twice = transform_bits_reversed(&transform_bits_reversed(&bytes, width), width);
            prop_assert_eq!(&twice, &bytes);
        }
    }

    #[test]
    fn fill_bytes_round_trips_kernel_outputs(key: u64, start: u64, words in 1usize..64) {
        let mut s = SquaresStream::with_raw_key(key, start, OutputWidth::U64);
        let mut buf = vec![0u8; words * 8];
        s.fill_bytes(&mut buf);
        for (i, chunk) in buf.chunks_exact(8).enumerate() {
            let decoded = u64::from_le_bytes(chunk.try_into().unwrap());
            prop_assert_eq!(decoded, squares64(start.wrapping_add(i as u64), key));
        }
    }

    #[test]
    fn key_file_round_trips_both_formats(start in 0u32..(1 << 20), count in 0u32..40) {
        let file = generate_keys(KeyIndex::new(start).unwrap(), count).unwrap();
        for format in [KeyFileFormat::Text, KeyFileFormat::CHeader] {
            let parsed = KeyFile::parse(&file.write(format)).unwrap();
            prop_assert_eq!(parsed.entries(), file.entries());
        }
    }
}
