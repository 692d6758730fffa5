//! Key generation and validation using the "different digits" method.
//!
//! A key is a 64-bit constant multiplying the counter; it identifies a
//! stream. Viewed as 16 hex digits `d15..d0`, a valid key has pairwise
//! distinct non-zero digits within each 8-digit half, and an odd `d0`.
//! Distinct digits guarantee the added `ctr*key` term changes enough per
//! invocation; the odd low digit gives `ctr*key` full period 2^64.
//!
//! Key construction is deterministic and indexed: [`key_from_index`] drives
//! digit selection from a SplitMix64 sequence seeded with the index, so the
//! same index yields the same key on every platform. The 2^31 index space
//! provides about two billion keys.
//!
//! SplitMix64 test vectors (state starts at the seed; each step adds
//! 0x9e3779b97f4a7c15 and applies the xor-shift-multiply finalizer), seed 0:
//! `0xe220a8397b1dcdaf`, `0x6e789e6aa1b965f4`, `0x06c45d188009454f`.

use std::collections::HashSet;
use std::fmt;

use serde::Serialize;

/// Number of indexable keys: `2^31`.
pub const KEY_INDEX_SPACE: u64 = 1 << 31;

/// A validated 64-bit stream key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(transparent)]
pub struct Key(u64);

impl Key {
    /// Validates `value` against the digit rules.
    pub fn new(value: u64) -> Result<Self, InvalidKey> {
        validate_key(value)?;
        Ok(Self(value))
    }

    /// The raw 64-bit key value.
    #[inline]
    pub fn get(self) -> u64 {
        self.0
    }
}

impl fmt::Display for Key {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "0x{:016x}", self.0)
    }
}

impl From<Key> for u64 {
    fn from(k: Key) -> u64 {
        k.0
    }
}

/// A single violated key rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RuleViolation {
    /// Hex digit at `position` (0 = least significant) is zero.
    ZeroDigit { position: u8 },
    /// `digit` occurs more than once among digits d15..d8.
    RepeatedUpperDigit { digit: u8 },
    /// `digit` occurs more than once among digits d7..d0.
    RepeatedLowerDigit { digit: u8 },
    /// d0 is even, so the key is even.
    EvenLowDigit,
}

impl fmt::Display for RuleViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::ZeroDigit { position } => write!(f, "zero digit at position {position}"),
            Self::RepeatedUpperDigit { digit } => {
                write!(f, "repeated digit '{digit:x}' in upper half")
            }
            Self::RepeatedLowerDigit { digit } => {
                write!(f, "repeated digit '{digit:x}' in lower half")
            }
            Self::EvenLowDigit => write!(f, "even least-significant digit"),
        }
    }
}

/// Verdict for a key that violates one or more digit rules.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct InvalidKey {
    pub value: u64,
    pub violations: Vec<RuleViolation>,
}

impl fmt::Display for InvalidKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid key 0x{:016x}: ", self.value)?;
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Checks the digit rules, listing every violation on failure.
pub fn validate_key(value: u64) -> Result<(), InvalidKey> {
    let mut violations = Vec::new();
    let digit = |pos: u8| ((value >> (pos * 4)) & 0xF) as u8;

    for pos in 0..16 {
        if digit(pos) == 0 {
            violations.push(RuleViolation::ZeroDigit { position: pos });
        }
    }
    // Seen-sets per half; report each repeated digit value once.
    for (base, upper) in [(8u8, true), (0u8, false)] {
        let mut seen = [0u8; 16];
        for pos in base..base + 8 {
            seen[digit(pos) as usize] += 1;
        }
        for (d, &count) in seen.iter().enumerate().skip(1) {
            if count > 1 {
                let digit = d as u8;
                violations.push(if upper {
                    RuleViolation::RepeatedUpperDigit { digit }
                } else {
                    RuleViolation::RepeatedLowerDigit { digit }
                });
            }
        }
    }
    if digit(0) % 2 == 0 {
        violations.push(RuleViolation::EvenLowDigit);
    }

    if violations.is_empty() {
        Ok(())
    } else {
        Err(InvalidKey { value, violations })
    }
}

/// Index into the deterministic key sequence, in `[0, 2^31)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(transparent)]
pub struct KeyIndex(u32);

/// Index outside `[0, 2^31)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("key index {0} outside [0, 2^31)")]
pub struct KeyIndexError(pub u32);

impl KeyIndex {
    /// Largest valid index, `2^31 - 1`.
    pub const MAX: u32 = (KEY_INDEX_SPACE - 1) as u32;

    pub fn new(index: u32) -> Result<Self, KeyIndexError> {
        if u64::from(index) >= KEY_INDEX_SPACE {
            return Err(KeyIndexError(index));
        }
        Ok(Self(index))
    }

    #[inline]
    pub fn get(self) -> u32 {
        self.0
    }
}

/// SplitMix64 sequence driving digit selection for one index.
struct IndexMixer {
    state: u64,
}

impl IndexMixer {
    fn new(index: KeyIndex) -> Self {
        Self {
            state: u64::from(index.get()),
        }
    }

    fn next(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Draw in `[0, m)` by 128-bit multiply-shift. Bias is at most m/2^64
    /// per draw, far below anything the tests can resolve.
    fn draw(&mut self, m: u64) -> u64 {
        ((u128::from(self.next()) * u128::from(m)) >> 64) as u64
    }
}

/// Deterministic key for `index` via Fisher-Yates digit selection.
///
/// Upper half: eight draws without replacement from the fifteen non-zero
/// digits fill d15 down to d8 in draw order. Lower half: d0 is drawn from
/// the eight odd digits, then seven draws from the remaining fourteen
/// non-zero digits fill d7 down to d1 in draw order. The result satisfies
/// every key rule by construction.
pub fn key_from_index(index: KeyIndex) -> Key {
    let mut mixer = IndexMixer::new(index);
    let mut value = 0u64;

    // d15..d8
    let mut upper: [u8; 15] = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15];
    for k in 0..8usize {
        let j = k + mixer.draw((15 - k) as u64) as usize;
        upper.swap(k, j);
        value |= u64::from(upper[k]) << ((15 - k) * 4);
    }

    // d0 from the odd digits
    let odd: [u8; 8] = [0x1, 0x3, 0x5, 0x7, 0x9, 0xB, 0xD, 0xF];
    let d0 = odd[mixer.draw(8) as usize];
    value |= u64::from(d0);

    // d7..d1 from the remaining non-zero digits
    let mut lower = [0u8; 14];
    let mut n = 0;
    for d in 1..=15u8 {
        if d != d0 {
            lower[n] = d;
            n += 1;
        }
    }
    for k in 0..7usize {
        let j = k + mixer.draw((14 - k) as u64) as usize;
        lower.swap(k, j);
        value |= u64::from(lower[k]) << ((7 - k) * 4);
    }

    debug_assert!(validate_key(value).is_ok());
    Key(value)
}

/// Requested range exceeds the `2^31` index space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("key range start={start} count={count} exceeds index space 2^31")]
pub struct KeyRangeError {
    pub start: u32,
    pub count: u64,
}

/// Ordered collection of validated keys, optionally with source indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyFile {
    entries: Vec<Key>,
    source_indices: Option<Vec<KeyIndex>>,
}

/// Output layout for [`KeyFile::write`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KeyFileFormat {
    /// One `0x` + 16 lowercase hex digits per line, LF-terminated.
    Text,
    /// A `#`-prefixed generation comment, then one C array of `uint64_t`
    /// constants.
    CHeader,
}

/// Parse or construction failure for key files.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum KeyFileError {
    #[error("line {line}: malformed key file: {detail}")]
    Malformed { line: usize, detail: String },
    #[error("line {line}: {source}")]
    InvalidKey { line: usize, source: InvalidKey },
    #[error("duplicate key 0x{value:016x}")]
    DuplicateKey { value: u64 },
    #[error("key file is not valid UTF-8")]
    NotUtf8,
}

impl KeyFile {
    /// Builds a key file, rejecting duplicate entries.
    pub fn new(entries: Vec<Key>) -> Result<Self, KeyFileError> {
        Self::with_indices(entries, None)
    }

    fn with_indices(
        entries: Vec<Key>,
        source_indices: Option<Vec<KeyIndex>>,
    ) -> Result<Self, KeyFileError> {
        let mut seen = HashSet::with_capacity(entries.len());
        for k in &entries {
            if !seen.insert(k.get()) {
                return Err(KeyFileError::DuplicateKey { value: k.get() });
            }
        }
        Ok(Self {
            entries,
            source_indices,
        })
    }

    pub fn entries(&self) -> &[Key] {
        &self.entries
    }

    pub fn source_indices(&self) -> Option<&[KeyIndex]> {
        self.source_indices.as_deref()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Serializes to the chosen format.
    ///
    /// Text: `0x` + 16 lowercase hex digits per line. C header: a
    /// `# squares keys: count=N` comment line, then
    /// `static const uint64_t squares_keys[N] = { ... };` with one
    /// comma-terminated constant per line.
    pub fn write(&self, format: KeyFileFormat) -> Vec<u8> {
        let mut out = String::new();
        match format {
            KeyFileFormat::Text => {
                for k in &self.entries {
                    out.push_str(&format!("0x{:016x}\n", k.get()));
                }
            }
            KeyFileFormat::CHeader => {
                out.push_str(&format!("# squares keys: count={}\n", self.entries.len()));
                out.push_str(&format!(
                    "static const uint64_t squares_keys[{}] = {{\n",
                    self.entries.len()
                ));
                for k in &self.entries {
                    out.push_str(&format!("    0x{:016x},\n", k.get()));
                }
                out.push_str("};\n");
            }
        }
        out.into_bytes()
    }

    /// Parses either format emitted by [`KeyFile::write`], validating every
    /// entry and rejecting duplicates.
    pub fn parse(bytes: &[u8]) -> Result<Self, KeyFileError> {
        let text = std::str::from_utf8(bytes).map_err(|_| KeyFileError::NotUtf8)?;
        let first_content = text.lines().find(|l| !l.trim().is_empty());
        match first_content {
            Some(l) if l.starts_with('#') => Self::parse_c_header(text),
            _ => Self::parse_text(text),
        }
    }

    fn parse_text(text: &str) -> Result<Self, KeyFileError> {
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let lineno = i + 1;
            if line.is_empty() {
                continue;
            }
            let value = parse_hex_key(line).ok_or_else(|| KeyFileError::Malformed {
                line: lineno,
                detail: format!("expected 0x + 16 lowercase hex digits, got {line:?}"),
            })?;
            entries.push(key_at_line(value, lineno)?);
        }
        Self::new(entries)
    }

    fn parse_c_header(text: &str) -> Result<Self, KeyFileError> {
        let mut lines = text.lines().enumerate().peekable();

        // generation comment
        let (_, comment) = lines.next().expect("caller checked non-empty");
        debug_assert!(comment.starts_with('#'));

        let (declno, decl) = lines.next().ok_or(KeyFileError::Malformed {
            line: 2,
            detail: "missing array declaration".into(),
        })?;
        let declno = declno + 1;
        let declared: usize = decl
            .strip_prefix("static const uint64_t ")
            .and_then(|rest| rest.split_once('['))
            .and_then(|(_, rest)| rest.split_once(']'))
            .filter(|(_, tail)| tail.trim() == "= {")
            .and_then(|(n, _)| n.parse().ok())
            .ok_or_else(|| KeyFileError::Malformed {
                line: declno,
                detail: format!("expected `static const uint64_t name[N] = {{`, got {decl:?}"),
            })?;

        let mut entries = Vec::with_capacity(declared);
        let mut closed = false;
        for (i, line) in lines {
            let lineno = i + 1;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if line == "};" {
                closed = true;
                continue;
            }
            if closed {
                return Err(KeyFileError::Malformed {
                    line: lineno,
                    detail: "content after closing `};`".into(),
                });
            }
            let entry = line.strip_suffix(',').unwrap_or(line);
            let value = parse_hex_key(entry).ok_or_else(|| KeyFileError::Malformed {
                line: lineno,
                detail: format!("expected 0x + 16 lowercase hex digits, got {line:?}"),
            })?;
            entries.push(key_at_line(value, lineno)?);
        }
        if !closed {
            return Err(KeyFileError::Malformed {
                line: text.lines().count(),
                detail: "missing closing `};`".into(),
            });
        }
        if entries.len() != declared {
            return Err(KeyFileError::Malformed {
                line: declno,
                detail: format!("array declares {declared} keys but {} found", entries.len()),
            });
        }
        Self::new(entries)
    }
}

fn key_at_line(value: u64, line: usize) -> Result<Key, KeyFileError> {
    Key::new(value).map_err(|source| KeyFileError::InvalidKey { line, source })
}

fn parse_hex_key(s: &str) -> Option<u64> {
    let digits = s.strip_prefix("0x")?;
    if digits.len() != 16
        || !digits
            .bytes()
            .all(|b| matches!(b, b'0'..=b'9' | b'a'..=b'f'))
    {
        return None;
    }
    u64::from_str_radix(digits, 16).ok()
}

/// Keys for indices `start..start+count`, in order.
pub fn generate_keys(start: KeyIndex, count: u32) -> Result<KeyFile, KeyRangeError> {
    let end = u64::from(start.get()) + u64::from(count);
    if end > KEY_INDEX_SPACE {
        return Err(KeyRangeError {
            start: start.get(),
            count: u64::from(count),
        });
    }
    let mut entries = Vec::with_capacity(count as usize);
    let mut indices = Vec::with_capacity(count as usize);
    for i in start.get()..start.get() + count {
        let idx = KeyIndex(i);
        entries.push(key_from_index(idx));
        indices.push(idx);
    }
    KeyFile::with_indices(entries, Some(indices))
        .map_err(|_| unreachable!("indexed keys collided; see key_from_index injectivity tests"))
}
