//! Known-answer fixtures and the self-test runner behind `squares selftest`.
//!
//! Kernel fixtures were produced by an independently built C transcription
//! of the two generators (see `tests/oracle/squares_ref.c`), run once and
//! frozen here; key fixtures come from an independent replication of the
//! indexed digit-selection procedure. Everything is compared bit-exactly.

use crate::kernel::{squares32, squares32_scaled, squares64, weyl_equivalence_check, ScaledParams};
use crate::keys::{key_from_index, KeyIndex};
use crate::stream::{u32_to_f32, u64_to_f64, OutputWidth, SquaresStream};

/// Expected kernel outputs for one `(ctr, key)` input.
#[derive(Debug, Clone, Copy)]
pub struct KernelFixture {
    pub ctr: u64,
    pub key: u64,
    pub out32: u32,
    pub out64: u64,
}

/// Known-answer set for both kernels.
#[rustfmt::skip]
pub const KERNEL_FIXTURES: &[KernelFixture] = &[
    KernelFixture { ctr: 0x0000000000000000, key: 0x0000000000000000, out32: 0x00000000, out64: 0x0000000000000000 },
    KernelFixture { ctr: 0x0000000000000001, key: 0x0000000000000001, out32: 0x00000000, out64: 0x0000000000000002 },
    KernelFixture { ctr: 0x000000000000002a, key: 0xe83f6921f8dab4c3, out32: 0x947943c1, out64: 0x947943c14cfaa1dc },
    KernelFixture { ctr: 0x00000000000f4240, key: 0x62ea98b474f2e6c3, out32: 0x82dfac40, out64: 0x82dfac4061abcde9 },
    KernelFixture { ctr: 0x0000000000000000, key: 0xe83f6921f8dab4c3, out32: 0x8bb0cb28, out64: 0x8bb0cb28edd11a02 },
    KernelFixture { ctr: 0x0000000000000001, key: 0xe83f6921f8dab4c3, out32: 0x25197d0a, out64: 0x25197d0acdf87ace },
    KernelFixture { ctr: 0x0000000000000002, key: 0xe83f6921f8dab4c3, out32: 0x4671f49f, out64: 0x4671f49fbc077e7b },
    KernelFixture { ctr: 0x0000000000000003, key: 0xe83f6921f8dab4c3, out32: 0xdbbb87f7, out64: 0xdbbb87f78b61da09 },
    KernelFixture { ctr: 0xffffffffffffffff, key: 0xe83f6921f8dab4c3, out32: 0xb30f1e8b, out64: 0xb30f1e8b869e00f6 },
    KernelFixture { ctr: 0xdeadbeef12345678, key: 0x9cf14de2d8ba3495, out32: 0x3817e835, out64: 0x3817e83589d9b430 },
    KernelFixture { ctr: 0x0123456789abcdef, key: 0x2ba47c8fec2a9d17, out32: 0x4996e898, out64: 0x4996e898d29154c0 },
    KernelFixture { ctr: 0x8000000000000000, key: 0x7e294bf69dca4e73, out32: 0x11e1d93b, out64: 0x11e1d93bcf6db428 },
    KernelFixture { ctr: 0x0000000100000000, key: 0x6c1579f2a84e1f67, out32: 0x0703c645, out64: 0x0703c6450cf0d18d },
    KernelFixture { ctr: 0xfffffffeffffffff, key: 0xc835be29e4972a81, out32: 0x93c83f38, out64: 0x93c83f38f475d516 },
    KernelFixture { ctr: 0x1000000000000000, key: 0xa1b259f48bc97d41, out32: 0xb90c7df9, out64: 0xb90c7df91c645c5e },
    KernelFixture { ctr: 0x0000000000000042, key: 0xbc6d752fda6f8153, out32: 0xcf175530, out64: 0xcf175530012aeed3 },
];

/// Expected key for one index of the deterministic key sequence.
#[derive(Debug, Clone, Copy)]
pub struct KeyFixture {
    pub index: u32,
    pub key: u64,
}

/// Known-answer set for [`key_from_index`].
#[rustfmt::skip]
pub const KEY_FIXTURES: &[KeyFixture] = &[
    KeyFixture { index: 0, key: 0xe83f6921f8dab4c3 },
    KeyFixture { index: 1, key: 0x9cf14de2d8ba3495 },
    KeyFixture { index: 2, key: 0x9cad8147c79b3f65 },
    KeyFixture { index: 3, key: 0x2ba47c8fec2a9d17 },
    KeyFixture { index: 4, key: 0x7e294bf69dca4e73 },
    KeyFixture { index: 5, key: 0x6c1579f2a84e1f67 },
    KeyFixture { index: 6, key: 0xc835be29e4972a81 },
    KeyFixture { index: 7, key: 0x62ea98b474f2e6c3 },
    KeyFixture { index: 8, key: 0xa1b259f48bc97d41 },
    KeyFixture { index: 9, key: 0xbc6d752fda6f8153 },
    KeyFixture { index: 100, key: 0x3267c1de9fc327a1 },
    KeyFixture { index: 2147483647, key: 0x628ec9f1e6f37c95 },
];

/// First fixture mismatch encountered by the self test.
#[derive(Debug, Clone, thiserror::Error)]
#[error("self test failed [{check}]: {detail}")]
pub struct SelfTestFailure {
    pub check: &'static str,
    pub detail: String,
}

fn fail(check: &'static str, detail: String) -> SelfTestFailure {
    SelfTestFailure { check, detail }
}

/// Checks a kernel fixture table; split out so tests can feed a corrupted
/// table through the same path.
pub fn check_kernel_fixtures(fixtures: &[KernelFixture]) -> Result<(), SelfTestFailure> {
    for f in fixtures {
        let got32 = squares32(f.ctr, f.key);
        if got32 != f.out32 {
            return Err(fail(
                "kernel32",
                format!(
                    "squares32({:#x}, {:#x}) = {got32:#010x}, fixture says {:#010x}",
                    f.ctr, f.key, f.out32
                ),
            ));
        }
        let got64 = squares64(f.ctr, f.key);
        if got64 != f.out64 {
            return Err(fail(
                "kernel64",
                format!(
                    "squares64({:#x}, {:#x}) = {got64:#018x}, fixture says {:#018x}",
                    f.ctr, f.key, f.out64
                ),
            ));
        }
        // structural relation: the 64-bit output carries the 32-bit output
        // in its upper half
        if (f.out64 >> 32) as u32 != f.out32 {
            return Err(fail(
                "kernel64",
                format!(
                    "fixture ({:#x}, {:#x}) breaks the upper-half relation",
                    f.ctr, f.key
                ),
            ));
        }
    }
    Ok(())
}

fn check_key_fixtures() -> Result<(), SelfTestFailure> {
    for f in KEY_FIXTURES {
        let idx = KeyIndex::new(f.index).expect("fixture indices are in range");
        let got = key_from_index(idx).get();
        if got != f.key {
            return Err(fail(
                "key_from_index",
                format!(
                    "index {} gave {got:#018x}, fixture says {:#018x}",
                    f.index, f.key
                ),
            ));
        }
    }
    Ok(())
}

fn check_float_conversion() -> Result<(), SelfTestFailure> {
    let cases64 = [
        (0u64, 0.0f64),
        (1u64 << 63, 0.5),
        (u64::MAX, ((1u64 << 53) - 1) as f64 / (1u64 << 53) as f64),
    ];
    for (raw, want) in cases64 {
        let got = u64_to_f64(raw);
        if got != want {
            return Err(fail(
                "f64",
                format!("u64_to_f64({raw:#x}) = {got}, want {want}"),
            ));
        }
    }
    let cases32 = [
        (0u32, 0.0f32),
        (1u32 << 31, 0.5),
        (u32::MAX, ((1u32 << 24) - 1) as f32 / (1u32 << 24) as f32),
    ];
    for (raw, want) in cases32 {
        let got = u32_to_f32(raw);
        if got != want {
            return Err(fail(
                "f32",
                format!("u32_to_f32({raw:#x}) = {got}, want {want}"),
            ));
        }
    }
    Ok(())
}

fn check_serialization() -> Result<(), SelfTestFailure> {
    // 12 bytes of the key-0 64-bit stream: draw 0 plus half of draw 1.
    let key = KERNEL_FIXTURES[4].key;
    let mut expected = Vec::new();
    expected.extend_from_slice(&KERNEL_FIXTURES[4].out64.to_le_bytes());
    expected.extend_from_slice(&KERNEL_FIXTURES[5].out64.to_le_bytes()[..4]);
    let mut s = SquaresStream::with_raw_key(key, 0, OutputWidth::U64);
    let mut buf = [0u8; 12];
    s.fill_bytes(&mut buf);
    if buf != expected[..] {
        return Err(fail(
            "serialization",
            format!("fill_bytes gave {buf:02x?}, want {expected:02x?}"),
        ));
    }
    Ok(())
}

fn check_scaled_consistency() -> Result<(), SelfTestFailure> {
    let full = ScaledParams::new(64).expect("64 is a valid width");
    for f in KERNEL_FIXTURES {
        let got = squares32_scaled(f.ctr, f.key, full);
        if got != u64::from(f.out32) {
            return Err(fail(
                "scaled",
                format!(
                    "scaled W=64 ({:#x}, {:#x}) = {got:#x}, want {:#x}",
                    f.ctr, f.key, f.out32
                ),
            ));
        }
    }
    Ok(())
}

fn check_weyl() -> Result<(), SelfTestFailure> {
    for s in [3u64, 0x9E3779B97F4A7C15, u64::MAX] {
        if !weyl_equivalence_check(s, 1000) {
            return Err(fail("weyl", format!("equivalence broke for s = {s:#x}")));
        }
    }
    Ok(())
}

/// Runs every fixture check, returning the number of checks on success or
/// the first divergent case.
pub fn run() -> Result<usize, SelfTestFailure> {
    check_kernel_fixtures(KERNEL_FIXTURES)?;
    check_key_fixtures()?;
    check_float_conversion()?;
    check_serialization()?;
    check_scaled_consistency()?;
    check_weyl()?;
    Ok(6)
}
