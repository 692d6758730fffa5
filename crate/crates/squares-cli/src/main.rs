//! Command-line front end for the squares generator.
//!
//! Subcommands: `genkeys` (key utility), `gen` (raw bytes or floats,
//! pipeable into external statistical testers), `test` (built-in battery),
//! `bench` (throughput comparison), `selftest` (known-answer fixtures).
//!
//! Exit codes: 0 success/pass, 1 statistical or self-test failure,
//! 2 usage or validation error, 3 I/O error. In raw `gen` mode stdout
//! carries only generator bytes; everything else goes to stderr.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use squares::kernel::squares32;
use squares::keys::{generate_keys, validate_key, KeyFile, KeyFileFormat, KeyIndex};
use squares::selftest;
use squares::stats::{
    battery_passes, key_counter_source, run_battery, BatteryConfig, SourceTransform, TestResult,
};
use squares::stream::{u32_to_f32, OutputWidth, SquaresStream};

const EXIT_STAT_FAIL: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_IO: u8 = 3;

#[derive(Parser)]
#[command(
    name = "squares",
    version,
    about = "Counter-based middle-square RNG toolkit"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate validated keys with the different-digits utility
    Genkeys(GenkeysArgs),
    /// Emit raw random bytes or text floats
    Gen(GenArgs),
    /// Run the statistical battery over generator output
    Test(TestArgs),
    /// Measure generator throughput
    Bench(BenchArgs),
    /// Verify all known-answer fixtures
    Selftest,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum WidthArg {
    #[value(name = "32")]
    W32,
    #[value(name = "64")]
    W64,
}

impl From<WidthArg> for OutputWidth {
    fn from(w: WidthArg) -> Self {
        match w {
            WidthArg::W32 => OutputWidth::U32,
            WidthArg::W64 => OutputWidth::U64,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Text,
    CHeader,
}

#[derive(Args)]
struct GenkeysArgs {
    /// First key index
    #[arg(long, default_value_t = 0)]
    start: u32,
    /// Number of keys to emit
    #[arg(long)]
    count: u32,
    /// Output layout
    #[arg(long, value_enum, default_value_t = FormatArg::Text)]
    format: FormatArg,
    /// Output path (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
#[command(group = ArgGroup::new("amount").required(true).multiple(false))]
struct GenArgs {
    /// Stream key, hex (with or without 0x)
    #[arg(long, value_parser = parse_hex64)]
    key: u64,
    /// Starting counter
    #[arg(long, default_value = "0", value_parser = parse_u64_flex)]
    ctr: u64,
    /// Output kernel: 32 (4 rounds) or 64 (5 rounds)
    #[arg(long, value_enum, default_value_t = WidthArg::W64)]
    width: WidthArg,
    /// Bytes to emit (suffixes K/M/G = powers of 1024)
    #[arg(long, group = "amount", value_parser = parse_size)]
    bytes: Option<u64>,
    /// Floats to emit as text, one per line
    #[arg(long, group = "amount", value_parser = parse_size)]
    floats: Option<u64>,
    /// Output path (stdout when omitted; raw mode writes only bytes there)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Accept keys that fail the digit rules
    #[arg(long)]
    no_validate_key: bool,
    /// Generate byte output with this many worker threads; output is
    /// identical for every thread count
    #[arg(long, default_value_t = 1)]
    threads: u32,
}

#[derive(Args)]
#[command(group = ArgGroup::new("source").required(true).multiple(false))]
struct TestArgs {
    /// Stream key, hex
    #[arg(long, group = "source", value_parser = parse_hex64)]
    key: Option<u64>,
    /// Key file (text or c-header), required for --transform key-counter
    #[arg(long, group = "source")]
    keys: Option<PathBuf>,
    /// Sample size in bytes (suffixes K/M/G); key-counter mode defaults to
    /// the whole file
    #[arg(long, value_parser = parse_size)]
    bytes: Option<u64>,
    /// Output kernel under test
    #[arg(long, value_enum, default_value_t = WidthArg::W64)]
    width: WidthArg,
    /// Source shape: identity | reversed | stride:K | key-counter
    #[arg(long, default_value = "identity", value_parser = parse_transform)]
    transform: TransformArg,
    /// Two-sided rejection threshold
    #[arg(long, default_value_t = 1e-6)]
    alpha: f64,
    /// Starting counter (fixed counter in key-counter mode)
    #[arg(long, default_value = "0", value_parser = parse_u64_flex)]
    ctr: u64,
    /// Write a JSON report here
    #[arg(long)]
    report: Option<PathBuf>,
    /// Accept keys that fail the digit rules (test hook: --key 0x0 gives an
    /// all-zero source)
    #[arg(long)]
    no_validate_key: bool,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum TransformArg {
    Identity,
    Reversed,
    Stride(u64),
    KeyCounter,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum VariantArg {
    All,
    #[value(name = "32")]
    V32,
    #[value(name = "64")]
    V64,
    Two32,
}

#[derive(Args)]
struct BenchArgs {
    /// Generator variant(s) to time
    #[arg(long, value_enum, default_value_t = VariantArg::All)]
    variant: VariantArg,
    /// Bytes per timed run (minimum 16M)
    #[arg(long, default_value = "64M", value_parser = parse_size)]
    bytes: u64,
    /// Timed repeats per variant (median reported)
    #[arg(long, default_value_t = 5)]
    repeats: u32,
    /// Stream key, hex (defaults to the index-0 utility key)
    #[arg(long, value_parser = parse_hex64)]
    key: Option<u64>,
}

/// Failure carrying its exit code; message goes to stderr.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    fn io(context: &str, err: io::Error) -> Self {
        Self {
            code: EXIT_IO,
            message: format!("{context}: {err}"),
        }
    }
}

fn parse_size(s: &str) -> Result<u64, String> {
    let s = s.trim();
    let (digits, mult) = match s.as_bytes().last() {
        Some(b'k' | b'K') => (&s[..s.len() - 1], 1u64 << 10),
        Some(b'm' | b'M') => (&s[..s.len() - 1], 1u64 << 20),
        Some(b'g' | b'G') => (&s[..s.len() - 1], 1u64 << 30),
        _ => (s, 1),
    };
    let n: u64 = digits
        .parse()
        .map_err(|_| format!("invalid size {s:?} (expected digits with optional K/M/G)"))?;
    n.checked_mul(mult)
        .ok_or_else(|| format!("size {s:?} overflows u64"))
}

fn parse_hex64(s: &str) -> Result<u64, String> {
    let t = s
        .strip_prefix("0x")
        .or_else(|| s.strip_prefix("0X"))
        .unwrap_or(s);
    u64::from_str_radix(t, 16).map_err(|_| format!("invalid hex value {s:?}"))
}

fn parse_u64_flex(s: &str) -> Result<u64, String> {
    if let Some(hex) = s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        u64::from_str_radix(hex, 16).map_err(|_| format!("invalid value {s:?}"))
    } else {
        s.parse().map_err(|_| format!("invalid value {s:?}"))
    }
}

fn parse_transform(s: &str) -> Result<TransformArg, String> {
    match s {
        "identity" => Ok(TransformArg::Identity),
        "reversed" => Ok(TransformArg::Reversed),
        "key-counter" => Ok(TransformArg::KeyCounter),
        _ => {
            if let Some(k) = s.strip_prefix("stride:") {
                let stride = parse_u64_flex(k)?;
                if stride == 0 {
                    return Err("stride must be at least 1".into());
                }
                Ok(TransformArg::Stride(stride))
            } else {
                Err(format!(
                    "unknown transform {s:?} (identity | reversed | stride:K | key-counter)"
                ))
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.cmd {
        Cmd::Genkeys(a) => cmd_genkeys(a),
        Cmd::Gen(a) => cmd_gen(a),
        Cmd::Test(a) => cmd_test(a),
        Cmd::Bench(a) => cmd_bench(a),
        Cmd::Selftest => cmd_selftest(),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("squares: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn write_output(path: Option<&Path>, bytes: &[u8]) -> Result<(), Failure> {
    match path {
        Some(p) => fs::write(p, bytes).map_err(|e| Failure::io(&p.display().to_string(), e)),
        None => {
            let mut out = io::stdout().lock();
            out.write_all(bytes)
                .and_then(|()| out.flush())
                .map_err(|e| Failure::io("stdout", e))
        }
    }
}

// ======================================================================
// genkeys
// ======================================================================

fn cmd_genkeys(a: GenkeysArgs) -> Result<u8, Failure> {
    let start = KeyIndex::new(a.start).map_err(|e| Failure::usage(e.to_string()))?;
    let file = generate_keys(start, a.count).map_err(|e| Failure::usage(e.to_string()))?;
    let format = match a.format {
        FormatArg::Text => KeyFileFormat::Text,
        FormatArg::CHeader => KeyFileFormat::CHeader,
    };
    write_output(a.out.as_deref(), &file.write(format))?;
    eprintln!(
        "wrote {} keys (indices {}..{})",
        a.count,
        a.start,
        u64::from(a.start) + u64::from(a.count)
    );
    Ok(0)
}

// ======================================================================
// gen
// ======================================================================

fn require_valid_key(key: u64, skip: bool) -> Result<(), Failure> {
    if skip {
        return Ok(());
    }
    validate_key(key).map_err(|e| Failure::usage(format!("{e} (use --no-validate-key to force)")))
}

fn cmd_gen(a: GenArgs) -> Result<u8, Failure> {
    require_valid_key(a.key, a.no_validate_key)?;
    if a.threads == 0 {
        return Err(Failure::usage("--threads must be at least 1"));
    }
    let width = OutputWidth::from(a.width);

    let mut sink: Box<dyn Write> = match &a.out {
        Some(p) => Box::new(io::BufWriter::new(
            fs::File::create(p).map_err(|e| Failure::io(&p.display().to_string(), e))?,
        )),
        None => Box::new(io::BufWriter::new(io::stdout().lock())),
    };

    if let Some(n) = a.floats {
        emit_floats(&mut sink, a.key, a.ctr, width, n)?;
    } else {
        let total = a
            .bytes
            .expect("clap group guarantees one of --bytes/--floats");
        emit_bytes(&mut sink, a.key, a.ctr, width, total, a.threads)?;
    }
    sink.flush().map_err(|e| Failure::io("output", e))?;
    Ok(0)
}

fn emit_floats(
    dest: &mut dyn Write,
    key: u64,
    ctr: u64,
    width: OutputWidth,
    n: u64,
) -> Result<(), Failure> {
    let io_err = |e| Failure::io("output", e);
    match width {
        // 17 significant digits: exact round trip for doubles
        OutputWidth::U64 => {
            let mut s = SquaresStream::with_raw_key(key, ctr, width);
            for _ in 0..n {
                let v = s.next_f64().expect("stream constructed with U64");
                writeln!(dest, "{v:.16e}").map_err(io_err)?;
            }
        }
        // 9 significant digits: exact round trip for single precision
        OutputWidth::U32 => {
            let mut s = SquaresStream::with_raw_key(key, ctr, width);
            for _ in 0..n {
                let v = u32_to_f32(s.next_u32().expect("stream constructed with U32"));
                writeln!(dest, "{v:.8e}").map_err(io_err)?;
            }
        }
    }
    Ok(())
}

fn emit_bytes(
    dest: &mut dyn Write,
    key: u64,
    ctr: u64,
    width: OutputWidth,
    total: u64,
    threads: u32,
) -> Result<(), Failure> {
    // Word-aligned blocks keep chunked output identical to one long fill.
    const BLOCK: u64 = 4 << 20;
    let io_err = |e| Failure::io("output", e);
    let word = width.word_bytes() as u64;

    if threads == 1 {
        let mut stream = SquaresStream::with_raw_key(key, ctr, width);
        let mut buf = vec![0u8; BLOCK.min(total.max(1)) as usize];
        let mut remaining = total;
        while remaining > 0 {
            let len = BLOCK.min(remaining) as usize;
            stream.fill_bytes(&mut buf[..len]);
            dest.write_all(&buf[..len]).map_err(io_err)?;
            remaining -= len as u64;
        }
        return Ok(());
    }

    let mut offset = 0u64;
    while offset < total {
        let blocks: Vec<(u64, u64)> = (0..u64::from(threads))
            .map_while(|t| {
                let start = offset + t * BLOCK;
                (start < total).then(|| (start, BLOCK.min(total - start)))
            })
            .collect();
        let buffers: Vec<Vec<u8>> = std::thread::scope(|scope| {
            let handles: Vec<_> = blocks
                .iter()
                .map(|&(start, len)| {
                    scope.spawn(move || {
                        let mut buf = vec![0u8; len as usize];
                        SquaresStream::with_raw_key(key, ctr.wrapping_add(start / word), width)
                            .fill_bytes(&mut buf);
                        buf
                    })
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("worker panicked"))
                .collect()
        });
        for buf in &buffers {
            dest.write_all(buf).map_err(io_err)?;
            offset += buf.len() as u64;
        }
    }
    Ok(())
}

// ======================================================================
// test
// ======================================================================

/// Schema of the JSON report written by `squares test --report`.
#[derive(Serialize)]
struct ReportDoc<'a> {
    config: &'a BatteryConfig,
    results: &'a [TestResult],
    overall_pass: bool,
}

fn cmd_test(a: TestArgs) -> Result<u8, Failure> {
    let width = OutputWidth::from(a.width);
    let word = width.word_bytes() as u64;

    let (source, transform): (Vec<u8>, SourceTransform) = match a.transform {
        TransformArg::KeyCounter => {
            let path = a
                .keys
                .as_ref()
                .ok_or_else(|| Failure::usage("--transform key-counter needs --keys FILE"))?;
            let raw = fs::read(path).map_err(|e| Failure::io(&path.display().to_string(), e))?;
            let keys = KeyFile::parse(&raw).map_err(|e| Failure::usage(e.to_string()))?;
            let bytes = key_counter_source(&keys, a.ctr, width)
                .map_err(|e| Failure::usage(e.to_string()))?;
            let available = bytes.len() as u64;
            let sample = a.bytes.unwrap_or(available);
            if sample > available {
                return Err(Failure::usage(format!(
                    "--bytes {sample} exceeds the {available} bytes the key file provides"
                )));
            }
            (
                bytes[..sample as usize].to_vec(),
                SourceTransform::KeyCounter,
            )
        }
        stream_transform => {
            let key = a.key.ok_or_else(|| {
                Failure::usage("this transform needs --key (use --keys only with key-counter)")
            })?;
            require_valid_key(key, a.no_validate_key)?;
            let sample = a.bytes.unwrap_or(1 << 24) as usize;
            let mut buf = vec![0u8; sample];
            let mut s = SquaresStream::with_raw_key(key, a.ctr, width);
            let transform = match stream_transform {
                TransformArg::Identity => {
                    s.fill_bytes(&mut buf);
                    SourceTransform::Identity
                }
                TransformArg::Reversed => {
                    s.fill_bytes(&mut buf);
                    SourceTransform::BitsReversed
                }
                TransformArg::Stride(k) => {
                    for chunk in buf.chunks_mut(word as usize) {
                        s.fill_bytes(chunk);
                        s.skip(k - 1);
                    }
                    SourceTransform::Stride(k)
                }
                TransformArg::KeyCounter => unreachable!("handled above"),
            };
            (buf, transform)
        }
    };

    let cfg = BatteryConfig::new(source.len(), a.alpha)
        .map_err(|e| Failure::usage(e.to_string()))?
        .with_width(width)
        .with_transform(transform)
        .with_tests(&BatteryConfig::fitting_tests(source.len()));
    let results = run_battery(&source, &cfg).map_err(|e| Failure::usage(e.to_string()))?;

    for r in &results {
        println!(
            "{:<16} statistic {:>14.4}   p {:<13.6e} {:?}",
            r.test_name, r.statistic, r.p_value, r.verdict
        );
    }
    let pass = battery_passes(&results);
    println!(
        "overall: {} ({}/{} tests, {} bytes, alpha {:e})",
        if pass { "PASS" } else { "FAIL" },
        results.iter().filter(|r| r.passed()).count(),
        results.len(),
        cfg.sample_bytes,
        cfg.alpha,
    );

    if let Some(path) = &a.report {
        let doc = ReportDoc {
            config: &cfg,
            results: &results,
            overall_pass: pass,
        };
        let json = serde_json::to_string_pretty(&doc).expect("report serialization");
        fs::write(path, json).map_err(|e| Failure::io(&path.display().to_string(), e))?;
    }

    Ok(if pass { 0 } else { EXIT_STAT_FAIL })
}

// ======================================================================
// bench
// ======================================================================

struct BenchReport {
    variant: &'static str,
    bytes_generated: u64,
    elapsed: f64,
    throughput: f64,
    per_call_ns: f64,
}

fn timer_resolution() -> Duration {
    let mut best = Duration::from_secs(1);
    for _ in 0..64 {
        let a = Instant::now();
        let mut b = Instant::now();
        while b.duration_since(a).is_zero() {
            b = Instant::now();
        }
        best = best.min(b.duration_since(a));
    }
    best
}

fn fill_two32(buf: &mut [u8], key: u64, ctr: &mut u64) {
    // 8 bytes from two 4-round calls, the composition the 5-round kernel
    // competes against.
    for chunk in buf.chunks_exact_mut(8) {
        chunk[..4].copy_from_slice(&squares32(*ctr, key).to_le_bytes());
        chunk[4..].copy_from_slice(&squares32(ctr.wrapping_add(1), key).to_le_bytes());
        *ctr = ctr.wrapping_add(2);
    }
}

fn bench_variant(variant: VariantArg, key: u64, total: u64, repeats: u32) -> BenchReport {
    const BUF: usize = 8 << 20;
    let mut buf = vec![0u8; BUF.min(total as usize)];
    let (name, word) = match variant {
        VariantArg::V32 => ("squares32", 4),
        VariantArg::V64 => ("squares64", 8),
        VariantArg::Two32 => ("two-calls-32", 4),
        VariantArg::All => unreachable!("expanded by caller"),
    };

    let mut checksum = 0u64;
    let mut one_run = |ctr_base: u64| -> f64 {
        let mut ctr = ctr_base;
        let mut remaining = total;
        let start = Instant::now();
        while remaining > 0 {
            let len = (buf.len() as u64).min(remaining) as usize;
            let chunk = &mut buf[..len];
            match variant {
                VariantArg::V32 => {
                    let mut s = SquaresStream::with_raw_key(key, ctr, OutputWidth::U32);
                    s.fill_bytes(chunk);
                    ctr = s.counter();
                }
                VariantArg::V64 => {
                    let mut s = SquaresStream::with_raw_key(key, ctr, OutputWidth::U64);
                    s.fill_bytes(chunk);
                    ctr = s.counter();
                }
                VariantArg::Two32 => fill_two32(chunk, key, &mut ctr),
                VariantArg::All => unreachable!(),
            }
            // fold the output so the generator work cannot be eliminated
            for w in chunk.chunks_exact(8) {
                checksum ^= u64::from_le_bytes(w.try_into().unwrap());
            }
            remaining -= len as u64;
        }
        start.elapsed().as_secs_f64()
    };

    one_run(0); // warm-up, discarded
    let mut times: Vec<f64> = (0..repeats).map(|r| one_run(u64::from(r))).collect();
    times.sort_by(f64::total_cmp);
    let elapsed = times[times.len() / 2];
    eprintln!("{name}: checksum {checksum:#018x}");

    BenchReport {
        variant: name,
        bytes_generated: total,
        elapsed,
        throughput: total as f64 / elapsed,
        per_call_ns: elapsed * 1e9 / (total / word) as f64,
    }
}

fn cmd_bench(a: BenchArgs) -> Result<u8, Failure> {
    if a.bytes < 1 << 24 {
        return Err(Failure::usage(
            "--bytes must be at least 16M for stable timing",
        ));
    }
    if a.repeats == 0 {
        return Err(Failure::usage("--repeats must be at least 1"));
    }
    let key = a
        .key
        .unwrap_or_else(|| squares::key_from_index(KeyIndex::new(0).expect("0 is in range")).get());

    let variants: Vec<VariantArg> = match a.variant {
        VariantArg::All => vec![VariantArg::V32, VariantArg::V64, VariantArg::Two32],
        v => vec![v],
    };

    let resolution = timer_resolution();
    let mut reports = Vec::new();
    for v in variants {
        let report = bench_variant(v, key, a.bytes, a.repeats);
        if report.elapsed <= 10.0 * resolution.as_secs_f64() {
            return Err(Failure::usage(format!(
                "elapsed {:.3e}s too close to timer resolution {:.3e}s; raise --bytes",
                report.elapsed,
                resolution.as_secs_f64()
            )));
        }
        reports.push(report);
    }

    println!(
        "{:<14} {:>12} {:>10} {:>14} {:>12}",
        "variant", "bytes", "median s", "bytes/sec", "ns/call"
    );
    for r in &reports {
        println!(
            "{:<14} {:>12} {:>10.4} {:>14.3e} {:>12.3}",
            r.variant, r.bytes_generated, r.elapsed, r.throughput, r.per_call_ns
        );
    }
    if let (Some(v64), Some(two)) = (
        reports.iter().find(|r| r.variant == "squares64"),
        reports.iter().find(|r| r.variant == "two-calls-32"),
    ) {
        println!(
            "squares64 vs two-calls-32: {:.2}x throughput (informative)",
            v64.throughput / two.throughput
        );
    }
    Ok(0)
}

// ======================================================================
// selftest
// ======================================================================

fn cmd_selftest() -> Result<u8, Failure> {
    match selftest::run() {
        Ok(checks) => {
            println!("self test: {checks} checks passed");
            Ok(0)
        }
        Err(e) => {
            eprintln!("{e}");
            Ok(EXIT_STAT_FAIL)
        }
    }
}
