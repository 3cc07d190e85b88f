//! Netpbm grayscale (PGM) codec, P2 (ASCII) and P5 (binary) variants.
//!
//! Hand-rolled because the format is a dozen lines of header grammar and
//! the toolkit needs exact control over maxval handling: intensities are
//! normalized by the file's stated maxval on read and quantized to 16-bit
//! on write, which keeps load → save → load bit-identical for both 8-bit
//! and 16-bit inputs (255·257 = 65535).

use std::fmt;

/// Decoded PGM payload: dimensions, the header maxval, and raw samples.
#[derive(Debug)]
pub struct RawPgm {
    pub width: usize,
    pub height: usize,
    pub maxval: u16,
    pub samples: Vec<u16>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PgmError {
    BadMagic,
    TruncatedHeader,
    BadHeaderToken { what: &'static str },
    BadMaxval { maxval: u64 },
    TruncatedData { expected: usize, got: usize },
    TrailingData,
    SampleExceedsMaxval { index: usize, value: u16, maxval: u16 },
}

impl fmt::Display for PgmError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PgmError::BadMagic => write!(f, "not a PGM file (magic must be P2 or P5)"),
            PgmError::TruncatedHeader => write!(f, "PGM header ended early"),
            PgmError::BadHeaderToken { what } => write!(f, "unreadable PGM {what}"),
            PgmError::BadMaxval { maxval } => {
                write!(f, "PGM maxval {maxval} outside 1..=65535")
            }
            PgmError::TruncatedData { expected, got } => {
                write!(f, "PGM pixel data truncated: expected {expected} samples, got {got}")
            }
            PgmError::TrailingData => write!(f, "PGM carries extra bytes after pixel data"),
            PgmError::SampleExceedsMaxval { index, value, maxval } => {
                write!(f, "PGM sample {value} at index {index} exceeds maxval {maxval}")
            }
        }
    }
}

impl std::error::Error for PgmError {}

/// Byte cursor over the header: skips whitespace and `#` comments between
/// tokens, per the netpbm grammar.
struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn skip_separators(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b' ' | b'\t' | b'\r' | b'\n' => self.pos += 1,
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                _ => break,
            }
        }
    }

    fn next_uint(&mut self, what: &'static str) -> Result<u64, PgmError> {
        self.skip_separators();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if self.pos == start {
            return if self.pos >= self.bytes.len() {
                Err(PgmError::TruncatedHeader)
            } else {
                Err(PgmError::BadHeaderToken { what })
            };
        }
        let mut value: u64 = 0;
        for &b in &self.bytes[start..self.pos] {
            value = value.saturating_mul(10).saturating_add(u64::from(b - b'0'));
        }
        Ok(value)
    }
}

/// Parse a PGM image from raw file bytes.
pub fn parse_pgm(bytes: &[u8]) -> Result<RawPgm, PgmError> {
    if bytes.len() < 2 {
        return Err(PgmError::BadMagic);
    }
    let binary = match &bytes[..2] {
        b"P2" => false,
        b"P5" => true,
        _ => return Err(PgmError::BadMagic),
    };
    let mut cursor = Cursor { bytes, pos: 2 };
    let width = cursor.next_uint("width")?;
    let height = cursor.next_uint("height")?;
    let maxval = cursor.next_uint("maxval")?;
    if width == 0 || height == 0 {
        return Err(PgmError::BadHeaderToken { what: "dimensions" });
    }
    if maxval == 0 || maxval > 65535 {
        return Err(PgmError::BadMaxval { maxval });
    }
    let (width, height, maxval) = (width as usize, height as usize, maxval as u16);
    let count = width * height;
    let mut samples = Vec::with_capacity(count);

    if binary {
        // exactly one separator byte between maxval and the pixel block
        if cursor.pos >= bytes.len() {
            return Err(PgmError::TruncatedData { expected: count, got: 0 });
        }
        cursor.pos += 1;
        let data = &bytes[cursor.pos..];
        let two_byte = maxval > 255;
        let needed = count * if two_byte { 2 } else { 1 };
        if data.len() < needed {
            let got = data.len() / if two_byte { 2 } else { 1 };
            return Err(PgmError::TruncatedData { expected: count, got });
        }
        if data.len() > needed {
            return Err(PgmError::TrailingData);
        }
        if two_byte {
            for pair in data.chunks_exact(2) {
                samples.push(u16::from_be_bytes([pair[0], pair[1]]));
            }
        } else {
            samples.extend(data.iter().map(|&b| u16::from(b)));
        }
    } else {
        for _ in 0..count {
            let v = cursor.next_uint("pixel value")?;
            if v > u64::from(u16::MAX) {
                return Err(PgmError::SampleExceedsMaxval {
                    index: samples.len(),
                    value: u16::MAX,
                    maxval,
                });
            }
            samples.push(v as u16);
        }
        cursor.skip_separators();
        if cursor.pos != bytes.len() {
            return Err(PgmError::TrailingData);
        }
    }

    if samples.len() != count {
        return Err(PgmError::TruncatedData { expected: count, got: samples.len() });
    }
    for (index, &value) in samples.iter().enumerate() {
        if value > maxval {
            return Err(PgmError::SampleExceedsMaxval { index, value, maxval });
        }
    }
    Ok(RawPgm { width, height, maxval, samples })
}

/// Encode normalized intensities as a binary 16-bit PGM (P5, maxval 65535).
pub fn encode_pgm(width: usize, height: usize, intensities: &[f64]) -> Vec<u8> {
    assert_eq!(intensities.len(), width * height, "intensity buffer mismatch");
    let header = format!("P5\n{width} {height}\n65535\n");
    let mut out = Vec::with_capacity(header.len() + 2 * intensities.len());
    out.extend_from_slice(header.as_bytes());
    for &v in intensities {
        let q = (v * 65535.0).round().clamp(0.0, 65535.0) as u16;
        out.extend_from_slice(&q.to_be_bytes());
    }
    out
}
