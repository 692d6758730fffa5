//! Desk-scale statistical battery.
//!
//! Four built-in tests (monobit, 256-bin byte chi-square, 65536-bin serial
//! pair chi-square, bit runs) run over raw generator bytes, optionally
//! after a bits-reversed transform, plus sources for stride and key-counter
//! regimes, an exhaustive reduced-width uniformity check, and inter-stream
//! correlation. External heavyweight suites are fed through byte piping
//! instead of being reimplemented; this battery gives CI-speed signal on
//! the same source shapes.
//!
//! Verdicts are two-sided: a test passes iff `alpha <= p <= 1 - alpha`,
//! flagging p-values extreme on either side.

pub mod pvalue;

use serde::Serialize;

use crate::kernel::{squares32, squares32_scaled, squares64, ScaledParams};
use crate::keys::{Key, KeyFile};
use crate::stream::OutputWidth;

/// Minimum configurable sample size in bytes (2^16).
pub const MIN_SAMPLE_BYTES: usize = 1 << 16;

/// Default rejection threshold.
pub const DEFAULT_ALPHA: f64 = 1e-6;

/// Two-sided pass/fail verdict of a single test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Pass,
    Fail,
    /// A precondition of the test (itself a weaker test) already failed,
    /// so the test statistic is not meaningful. Counts as a failure.
    DependentFailure,
}

/// Outcome of one statistical test.
#[derive(Debug, Clone, Serialize)]
pub struct TestResult {
    pub test_name: &'static str,
    pub statistic: f64,
    pub p_value: f64,
    pub sample_bits: u64,
    pub verdict: Verdict,
}

impl TestResult {
    fn two_sided(
        test_name: &'static str,
        statistic: f64,
        p_value: f64,
        sample_bits: u64,
        alpha: f64,
    ) -> Self {
        let verdict = if p_value >= alpha && p_value <= 1.0 - alpha {
            Verdict::Pass
        } else {
            Verdict::Fail
        };
        Self {
            test_name,
            statistic,
            p_value,
            sample_bits,
            verdict,
        }
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

/// Invalid input or configuration for the battery.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StatsError {
    #[error("{test}: sample too small: need {needed_bytes} bytes, got {got_bytes}")]
    SampleTooSmall {
        test: &'static str,
        needed_bytes: usize,
        got_bytes: usize,
    },
    #[error("source holds {got} bytes but the battery is configured for {needed}")]
    InsufficientData { needed: usize, got: usize },
    #[error("sample_bytes {got} below minimum {MIN_SAMPLE_BYTES}")]
    SampleBytesBelowMinimum { got: usize },
    #[error("alpha {got} outside (0, 0.5)")]
    InvalidAlpha { got: f64 },
    #[error("need at least {needed} keys, got {got}")]
    TooFewKeys { needed: usize, got: usize },
    #[error("exhaustive enumeration needs word width <= 24, got {got}")]
    ScaledWidthTooLarge { got: u32 },
}

fn check_sample(test: &'static str, needed: usize, got: usize) -> Result<(), StatsError> {
    if got < needed {
        return Err(StatsError::SampleTooSmall {
            test,
            needed_bytes: needed,
            got_bytes: got,
        });
    }
    Ok(())
}

fn count_one_bits(bytes: &[u8]) -> u64 {
    let mut chunks = bytes.chunks_exact(8);
    let mut total: u64 = 0;
    for c in &mut chunks {
        total += u64::from(u64::from_le_bytes(c.try_into().unwrap()).count_ones());
    }
    for &b in chunks.remainder() {
        total += u64::from(b.count_ones());
    }
    total
}

/// Bit runs in LSB-first order within each byte: transitions + 1.
fn count_bit_runs(bytes: &[u8]) -> u64 {
    let mut transitions = 0u64;
    let mut prev_top: Option<u8> = None;
    for &b in bytes {
        transitions += u64::from(((b ^ (b >> 1)) & 0x7F).count_ones());
        if let Some(p) = prev_top {
            transitions += u64::from(p != (b & 1));
        }
        prev_top = Some(b >> 7);
    }
    transitions + 1
}

/// Proportion of one bits: `|#ones - #zeros| / sqrt(n)` against the normal
/// tail.
pub fn monobit_test(bytes: &[u8], alpha: f64) -> Result<TestResult, StatsError> {
    check_sample("monobit", MONOBIT_MIN_BYTES, bytes.len())?;
    let n_bits = bytes.len() as u64 * 8;
    let ones = count_one_bits(bytes);
    let diff = (2.0 * ones as f64) - n_bits as f64;
    let statistic = diff.abs() / (n_bits as f64).sqrt();
    let p = pvalue::erfc(statistic / std::f64::consts::SQRT_2);
    Ok(TestResult::two_sided(
        "monobit", statistic, p, n_bits, alpha,
    ))
}

const MONOBIT_MIN_BYTES: usize = (1 << 16) / 8;

/// 256-bin chi-square of byte values against uniform (df = 255).
pub fn byte_chi_square(bytes: &[u8], alpha: f64) -> Result<TestResult, StatsError> {
    check_sample("byte_chi_square", BYTE_CHI_MIN_BYTES, bytes.len())?;
    let mut hist = [0u64; 256];
    for &b in bytes {
        hist[b as usize] += 1;
    }
    let expected = bytes.len() as f64 / 256.0;
    let statistic: f64 = hist
        .iter()
        .map(|&o| {
            let d = o as f64 - expected;
            d * d / expected
        })
        .sum();
    let p = pvalue::chi_square_p(statistic, 255);
    Ok(TestResult::two_sided(
        "byte_chi_square",
        statistic,
        p,
        bytes.len() as u64 * 8,
        alpha,
    ))
}

const BYTE_CHI_MIN_BYTES: usize = 256 * 50;

/// Chi-square over non-overlapping byte pairs, 65536 bins (df = 65535).
pub fn serial_pair_test(bytes: &[u8], alpha: f64) -> Result<TestResult, StatsError> {
    check_sample("serial_pair", SERIAL_PAIR_MIN_BYTES, bytes.len())?;
    let mut hist = vec![0u64; 65536];
    for pair in bytes.chunks_exact(2) {
        hist[usize::from(pair[0]) | usize::from(pair[1]) << 8] += 1;
    }
    let pairs = (bytes.len() / 2) as f64;
    let expected = pairs / 65536.0;
    let statistic: f64 = hist
        .iter()
        .map(|&o| {
            let d = o as f64 - expected;
            d * d / expected
        })
        .sum();
    let p = pvalue::chi_square_p(statistic, 65535);
    Ok(TestResult::two_sided(
        "serial_pair",
        statistic,
        p,
        (bytes.len() / 2) as u64 * 16,
        alpha,
    ))
}

const SERIAL_PAIR_MIN_BYTES: usize = 2 * 65536 * 50;

/// Number of bit runs against the expectation `2n*pi*(1-pi) + 1`.
///
/// If the one-bit proportion already deviates by more than `2/sqrt(n)` the
/// result is a [`Verdict::DependentFailure`]: the run count is meaningless
/// once monobit-level balance is gone.
pub fn runs_test(bytes: &[u8], alpha: f64) -> Result<TestResult, StatsError> {
    check_sample("runs", MONOBIT_MIN_BYTES, bytes.len())?;
    let n = bytes.len() as f64 * 8.0;
    let pi = count_one_bits(bytes) as f64 / n;
    let sample_bits = bytes.len() as u64 * 8;
    if (pi - 0.5).abs() >= 2.0 / n.sqrt() {
        return Ok(TestResult {
            test_name: "runs",
            statistic: 0.0,
            p_value: 0.0,
            sample_bits,
            verdict: Verdict::DependentFailure,
        });
    }
    let runs = count_bit_runs(bytes) as f64;
    let expected = 2.0 * n * pi * (1.0 - pi) + 1.0;
    let statistic = (runs - expected).abs() / (2.0 * (2.0 * n).sqrt() * pi * (1.0 - pi));
    let p = pvalue::erfc(statistic);
    Ok(TestResult::two_sided(
        "runs",
        statistic,
        p,
        sample_bits,
        alpha,
    ))
}

/// Exhaustive output histogram of the reduced-width kernel over all 2^W
/// counters, chi-squared against uniform over the 2^(W/2) outputs.
pub fn scaled_uniformity_test(
    params: ScaledParams,
    key: u64,
    alpha: f64,
) -> Result<TestResult, StatsError> {
    if params.word_bits() > 24 {
        return Err(StatsError::ScaledWidthTooLarge {
            got: params.word_bits(),
        });
    }
    let counters = 1u64 << params.word_bits();
    let bins = params.output_cardinality() as usize;
    let mut hist = vec![0u64; bins];
    for ctr in 0..counters {
        hist[squares32_scaled(ctr, key, params) as usize] += 1;
    }
    let expected = counters as f64 / bins as f64;
    let statistic: f64 = hist
        .iter()
        .map(|&o| {
            let d = o as f64 - expected;
            d * d / expected
        })
        .sum();
    let p = pvalue::chi_square_p(statistic, bins as u64 - 1);
    Ok(TestResult::two_sided(
        "scaled_uniformity",
        statistic,
        p,
        counters * u64::from(params.half_bits()),
        alpha,
    ))
}

/// Reverses the bit order of every word; trailing bytes that do not fill a
/// word are left unchanged. Involutive.
pub fn transform_bits_reversed(bytes: &[u8], width: OutputWidth) -> Vec<u8> {
    let mut out = bytes.to_vec();
    match width {
        OutputWidth::U32 => {
            for chunk in out.chunks_exact_mut(4) {
                let w = u32::from_le_bytes(chunk.try_into().unwrap()).reverse_bits();
                chunk.copy_from_slice(&w.to_le_bytes());
            }
        }
        OutputWidth::U64 => {
            for chunk in out.chunks_exact_mut(8) {
                let w = u64::from_le_bytes(chunk.try_into().unwrap()).reverse_bits();
                chunk.copy_from_slice(&w.to_le_bytes());
            }
        }
    }
    out
}

/// Kernel output bytes at counters `start + i*stride` for `i` in `[0, n)`.
pub fn stride_source(key: Key, start: u64, stride: u64, n: u64, width: OutputWidth) -> Vec<u8> {
    assert!(stride >= 1, "stride must be at least 1");
    assert!(n >= 1, "n must be at least 1");
    let mut out = Vec::with_capacity(n as usize * width.word_bytes());
    let mut ctr = start;
    for _ in 0..n {
        match width {
            OutputWidth::U32 => out.extend_from_slice(&squares32(ctr, key.get()).to_le_bytes()),
            OutputWidth::U64 => out.extend_from_slice(&squares64(ctr, key.get()).to_le_bytes()),
        }
        ctr = ctr.wrapping_add(stride);
    }
    out
}

/// Kernel output bytes with the counter fixed and the key varying over the
/// file, in order.
pub fn key_counter_source(
    keys: &KeyFile,
    fixed_ctr: u64,
    width: OutputWidth,
) -> Result<Vec<u8>, StatsError> {
    if keys.len() < 2 {
        return Err(StatsError::TooFewKeys {
            needed: 2,
            got: keys.len(),
        });
    }
    let mut out = Vec::with_capacity(keys.len() * width.word_bytes());
    for key in keys.entries() {
        match width {
            OutputWidth::U32 => {
                out.extend_from_slice(&squares32(fixed_ctr, key.get()).to_le_bytes())
            }
            OutputWidth::U64 => {
                out.extend_from_slice(&squares64(fixed_ctr, key.get()).to_le_bytes())
            }
        }
    }
    Ok(out)
}

/// Built-in battery tests, in canonical (name) order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TestKind {
    ByteChiSquare,
    Monobit,
    Runs,
    SerialPair,
}

impl TestKind {
    /// Every built-in test, in aggregation order.
    pub const ALL: [TestKind; 4] = [
        TestKind::ByteChiSquare,
        TestKind::Monobit,
        TestKind::Runs,
        TestKind::SerialPair,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::ByteChiSquare => "byte_chi_square",
            Self::Monobit => "monobit",
            Self::Runs => "runs",
            Self::SerialPair => "serial_pair",
        }
    }

    /// Smallest sample the test accepts.
    pub fn min_bytes(self) -> usize {
        match self {
            Self::ByteChiSquare => BYTE_CHI_MIN_BYTES,
            Self::Monobit | Self::Runs => MONOBIT_MIN_BYTES,
            Self::SerialPair => SERIAL_PAIR_MIN_BYTES,
        }
    }

    fn run(self, bytes: &[u8], alpha: f64) -> Result<TestResult, StatsError> {
        match self {
            Self::ByteChiSquare => byte_chi_square(bytes, alpha),
            Self::Monobit => monobit_test(bytes, alpha),
            Self::Runs => runs_test(bytes, alpha),
            Self::SerialPair => serial_pair_test(bytes, alpha),
        }
    }
}

/// How the battery's source bytes were produced or should be rewritten.
///
/// `BitsReversed` is applied by [`run_battery`] itself; `Stride` and
/// `KeyCounter` describe source construction (see [`stride_source`] and
/// [`key_counter_source`]) and act as identity at battery time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SourceTransform {
    Identity,
    BitsReversed,
    Stride(u64),
    KeyCounter,
}

/// Battery configuration: sample size, alpha, test subset, transform.
#[derive(Debug, Clone, Serialize)]
pub struct BatteryConfig {
    pub sample_bytes: usize,
    pub alpha: f64,
    pub tests: Vec<TestKind>,
    pub transform: SourceTransform,
    pub width: OutputWidth,
}

impl BatteryConfig {
    /// Validates the sample size (>= 2^16) and alpha (in (0, 0.5)).
    pub fn new(sample_bytes: usize, alpha: f64) -> Result<Self, StatsError> {
        if sample_bytes < MIN_SAMPLE_BYTES {
            return Err(StatsError::SampleBytesBelowMinimum { got: sample_bytes });
        }
        if !(alpha > 0.0 && alpha < 0.5) {
            return Err(StatsError::InvalidAlpha { got: alpha });
        }
        Ok(Self {
            sample_bytes,
            alpha,
            tests: TestKind::ALL.to_vec(),
            transform: SourceTransform::Identity,
            width: OutputWidth::U64,
        })
    }

    pub fn with_tests(mut self, tests: &[TestKind]) -> Self {
        self.tests = tests.to_vec();
        self
    }

    pub fn with_transform(mut self, transform: SourceTransform) -> Self {
        self.transform = transform;
        self
    }

    pub fn with_width(mut self, width: OutputWidth) -> Self {
        self.width = width;
        self
    }

    /// Tests that fit in `sample_bytes`, in canonical order.
    pub fn fitting_tests(sample_bytes: usize) -> Vec<TestKind> {
        TestKind::ALL
            .iter()
            .copied()
            .filter(|t| t.min_bytes() <= sample_bytes)
            .collect()
    }
}

/// Runs the configured tests over `source`, after the configured transform.
///
/// Results come back in canonical test order regardless of the order
/// `cfg.tests` lists them, so reports are deterministic.
pub fn run_battery(source: &[u8], cfg: &BatteryConfig) -> Result<Vec<TestResult>, StatsError> {
    if source.len() < cfg.sample_bytes {
        return Err(StatsError::InsufficientData {
            needed: cfg.sample_bytes,
            got: source.len(),
        });
    }
    let data = &source[..cfg.sample_bytes];
    let reversed;
    let data: &[u8] = if cfg.transform == SourceTransform::BitsReversed {
        reversed = transform_bits_reversed(data, cfg.width);
        &reversed
    } else {
        data
    };
    let mut results = Vec::with_capacity(cfg.tests.len());
    for kind in TestKind::ALL {
        if cfg.tests.contains(&kind) {
            results.push(kind.run(data, cfg.alpha)?);
        }
    }
    Ok(results)
}

/// True iff every result passed.
pub fn battery_passes(results: &[TestResult]) -> bool {
    results.iter().all(TestResult::passed)
}

/// Pearson correlation coefficient of two equal-length samples.
pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let n = a.len() as f64;
    let mean_a = a.iter().sum::<f64>() / n;
    let mean_b = b.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var_a = 0.0;
    let mut var_b = 0.0;
    for (&x, &y) in a.iter().zip(b) {
        let dx = x - mean_a;
        let dy = y - mean_b;
        cov += dx * dy;
        var_a += dx * dx;
        var_b += dy * dy;
    }
    cov / (var_a * var_b).sqrt()
}

/// One key pair whose correlation exceeded the threshold.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FlaggedPair {
    pub key_i: usize,
    pub key_j: usize,
    pub r: f64,
}

/// Pairwise correlation outcome across a set of streams.
#[derive(Debug, Clone, Serialize)]
pub struct CorrelationSummary {
    pub n_per_stream: usize,
    /// Flag level `4 / sqrt(n)`, roughly 6.3 sigma, conservative against
    /// multiple comparisons across pairs.
    pub threshold: f64,
    pub max_abs_r: f64,
    pub flagged: Vec<FlaggedPair>,
}

impl CorrelationSummary {
    pub fn passed(&self) -> bool {
        self.flagged.is_empty()
    }
}

/// Inter-stream independence report: pairwise correlation plus a battery
/// over round-robin interleaved outputs.
#[derive(Debug, Clone, Serialize)]
pub struct InterstreamReport {
    pub correlation: CorrelationSummary,
    pub battery: Vec<TestResult>,
}

impl InterstreamReport {
    pub fn passed(&self) -> bool {
        self.correlation.passed() && battery_passes(&self.battery)
    }
}

/// Correlates streams that share the counter sequence but differ in key,
/// then batteries their interleaved bytes.
pub fn interstream_test(
    keys: &KeyFile,
    n_per_stream: usize,
    cfg: &BatteryConfig,
) -> Result<InterstreamReport, StatsError> {
    if keys.len() < 2 {
        return Err(StatsError::TooFewKeys {
            needed: 2,
            got: keys.len(),
        });
    }

    // Pairwise Pearson over the raw outputs as reals.
    let streams: Vec<Vec<f64>> = keys
        .entries()
        .iter()
        .map(|key| {
            (0..n_per_stream as u64)
                .map(|ctr| match cfg.width {
                    OutputWidth::U32 => f64::from(squares32(ctr, key.get())),
                    OutputWidth::U64 => squares64(ctr, key.get()) as f64,
                })
                .collect()
        })
        .collect();
    let threshold = 4.0 / (n_per_stream as f64).sqrt();
    let mut max_abs_r = 0.0f64;
    let mut flagged = Vec::new();
    for i in 0..streams.len() {
        for j in i + 1..streams.len() {
            let r = pearson(&streams[i], &streams[j]);
            max_abs_r = max_abs_r.max(r.abs());
            if r.abs() > threshold {
                flagged.push(FlaggedPair {
                    key_i: i,
                    key_j: j,
                    r,
                });
            }
        }
    }
    drop(streams);

    // Interleaved battery: counter 0 of every key, then counter 1, ...
    let word = cfg.width.word_bytes();
    let mut bytes = Vec::with_capacity(cfg.sample_bytes + keys.len() * word);
    let mut ctr = 0u64;
    'fill: loop {
        for key in keys.entries() {
            if bytes.len() >= cfg.sample_bytes {
                break 'fill;
            }
            match cfg.width {
                OutputWidth::U32 => {
                    bytes.extend_from_slice(&squares32(ctr, key.get()).to_le_bytes())
                }
                OutputWidth::U64 => {
                    bytes.extend_from_slice(&squares64(ctr, key.get()).to_le_bytes())
                }
            }
        }
        ctr = ctr.wrapping_add(1);
    }
    bytes.truncate(cfg.sample_bytes);
    let battery = run_battery(&bytes, cfg)?;

    Ok(InterstreamReport {
        correlation: CorrelationSummary {
            n_per_stream,
            threshold,
            max_abs_r,
            flagged,
        },
        battery,
    })
}
