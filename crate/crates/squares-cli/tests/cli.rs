//! End-to-end tests of the `squares` binary: exit codes, output
//! bit-exactness against the library, and the documented file formats.

use std::path::PathBuf;
use std::process::{Command, Output};

use squares::keys::{generate_keys, KeyIndex};
use squares::stream::{u64_to_f64, OutputWidth, SquaresStream};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_squares"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn tmp(name: &str) -> PathBuf {
    let mut p = PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    p.push(name);
    p
}

const KEY0: &str = "0xe83f6921f8dab4c3";

#[test]
fn genkeys_writes_expected_text_lines() {
    let out = run(&["genkeys", "--count", "3"]);
    assert!(out.status.success());
    let expected: String = generate_keys(KeyIndex::new(0).unwrap(), 3)
        .unwrap()
        .entries()
        .iter()
        .map(|k| format!("{k}\n"))
        .collect();
    assert_eq!(String::from_utf8(out.stdout).unwrap(), expected);
}

#[test]
fn genkeys_count_zero_gives_empty_success() {
    let out = run(&["genkeys", "--count", "0"]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
}

#[test]
fn genkeys_range_overflow_exits_2() {
    let out = run(&["genkeys", "--start", "2147483647", "--count", "2"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn genkeys_unwritable_path_exits_3() {
    let out = run(&[
        "genkeys",
        "--count",
        "1",
        "--out",
        "/nonexistent-dir/keys.txt",
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn genkeys_c_header_round_trips_through_test_subcommand() {
    let path = tmp("keys_roundtrip.h");
    let out = run(&[
        "genkeys",
        "--count",
        "8192",
        "--format",
        "c-header",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let out = run(&[
        "test",
        "--keys",
        path.to_str().unwrap(),
        "--transform",
        "key-counter",
        "--width",
        "64",
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn gen_bytes_match_library_serialization() {
    let out = run(&[
        "gen", "--key", KEY0, "--ctr", "5", "--width", "32", "--bytes", "24",
    ]);
    assert!(out.status.success());
    let mut expected = vec![0u8; 24];
    SquaresStream::with_raw_key(0xe83f6921f8dab4c3, 5, OutputWidth::U32).fill_bytes(&mut expected);
    assert_eq!(out.stdout, expected);
}

#[test]
fn gen_rejects_invalid_key_unless_forced() {
    let out = run(&["gen", "--key", "0x0", "--bytes", "8"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("zero digit"));

    let out = run(&["gen", "--key", "0x0", "--bytes", "8", "--no-validate-key"]);
    assert!(out.status.success());
    assert_eq!(out.stdout, vec![0u8; 8]);
}

#[test]
fn gen_requires_exactly_one_amount_flag() {
    let out = run(&["gen", "--key", KEY0]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["gen", "--key", KEY0, "--bytes", "8", "--floats", "8"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn gen_floats_round_trip_at_17_digits() {
    let out = run(&["gen", "--key", KEY0, "--floats", "4"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut s = SquaresStream::with_raw_key(0xe83f6921f8dab4c3, 0, OutputWidth::U64);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 4);
    for line in lines {
        let expected = u64_to_f64(s.next_u64().unwrap());
        assert_eq!(
            line.parse::<f64>().unwrap(),
            expected,
            "line {line:?} lost precision"
        );
    }
}

#[test]
fn gen_threaded_output_is_identical() {
    let single = run(&[
        "gen",
        "--key",
        KEY0,
        "--ctr",
        "99",
        "--bytes",
        "9M",
        "--threads",
        "1",
    ]);
    let quad = run(&[
        "gen",
        "--key",
        KEY0,
        "--ctr",
        "99",
        "--bytes",
        "9M",
        "--threads",
        "4",
    ]);
    assert!(single.status.success() && quad.status.success());
    assert_eq!(single.stdout.len(), 9 << 20);
    assert_eq!(single.stdout, quad.stdout);
}

#[test]
fn gen_size_suffixes_are_powers_of_1024() {
    let out = run(&["gen", "--key", KEY0, "--bytes", "2K"]);
    assert_eq!(out.stdout.len(), 2048);
}

#[test]
fn test_zero_key_source_fails_with_status_1() {
    let out = run(&[
        "test",
        "--key",
        "0x0",
        "--no-validate-key",
        "--bytes",
        "64K",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let report = String::from_utf8(out.stdout).unwrap();
    assert!(report.contains("overall: FAIL"));
}

#[test]
fn test_utility_key_passes_with_status_0() {
    let out = run(&["test", "--key", KEY0, "--bytes", "1M"]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stdout)
    );
    assert!(String::from_utf8(out.stdout)
        .unwrap()
        .contains("overall: PASS"));
}

#[test]
fn test_reversed_transform_passes() {
    let out = run(&[
        "test",
        "--key",
        KEY0,
        "--bytes",
        "1M",
        "--transform",
        "reversed",
    ]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn test_key_counter_requires_keys_file() {
    let out = run(&["test", "--key", KEY0, "--transform", "key-counter"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn test_rejects_malformed_keys_file() {
    let path = tmp("bad_keys.txt");
    std::fs::write(&path, "xyz\n").unwrap();
    let out = run(&[
        "test",
        "--keys",
        path.to_str().unwrap(),
        "--transform",
        "key-counter",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 1"));
}

#[test]
fn test_writes_machine_readable_report() {
    let path = tmp("report.json");
    let out = run(&[
        "test",
        "--key",
        KEY0,
        "--bytes",
        "64K",
        "--report",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_slice(&std::fs::read(&path).unwrap()).unwrap();
    assert_eq!(doc["overall_pass"], serde_json::Value::Bool(true));
    assert_eq!(doc["config"]["sample_bytes"], 65536);
    assert!(doc["results"].as_array().unwrap().len() >= 3);
    for r in doc["results"].as_array().unwrap() {
        assert_eq!(r["verdict"], "Pass");
    }
}

#[test]
fn bench_reports_all_variants() {
    let out = run(&["bench", "--bytes", "16M", "--repeats", "1"]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["squares32", "squares64", "two-calls-32"] {
        assert!(text.contains(name), "missing {name} in:\n{text}");
    }
    assert!(text.contains("squares64 vs two-calls-32"));
}

#[test]
fn bench_rejects_tiny_sizes() {
    let out = run(&["bench", "--bytes", "1M"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn selftest_passes_on_fresh_build() {
    let started = std::time::Instant::now();
    let out = run(&["selftest"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8(out.stdout)
        .unwrap()
        .contains("checks passed"));
    assert!(
        started.elapsed().as_secs() < 10,
        "selftest exceeded its 10s budget"
    );
}

/// Wall-clock sensitive; run explicitly with `--ignored` on a quiet machine.
#[test]
#[ignore = "timing-sensitive"]
fn bench_elapsed_scales_roughly_linearly() {
    let parse_median = |out: Output| -> f64 {
        String::from_utf8(out.stdout)
            .unwrap()
            .lines()
            .find(|l| l.starts_with("squares64"))
            .and_then(|l| l.split_whitespace().nth(2))
            .unwrap()
            .parse()
            .unwrap()
    };
    let small = parse_median(run(&[
        "bench",
        "--variant",
        "64",
        "--bytes",
        "64M",
        "--repeats",
        "5",
    ]));
    let large = parse_median(run(&[
        "bench",
        "--variant",
        "64",
        "--bytes",
        "256M",
        "--repeats",
        "5",
    ]));
    let factor = large / small;
    assert!(
        (3.2..=4.8).contains(&factor),
        "4x the bytes took {factor:.2}x the time"
    );
}
