//! File formats: coefficient files, signals, subband dumps and CSV exports.

use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::prototype::{PrototypeFilter, Symmetry, LOADING_TOLERANCE};

/// Render a float with 17 significant digits, which round-trips exactly.
fn exact(v: f64) -> String {
    format!("{v:.16e}")
}

fn json_array(values: &[f64]) -> String {
    let items: Vec<String> = values.iter().map(|&v| exact(v)).collect();
    format!("[{}]", items.join(", "))
}

pub fn prototype_to_json(p: &PrototypeFilter) -> String {
    format!(
        "{{\n  \"channels\": {},\n  \"numerator\": {},\n  \"denominator\": {},\n  \"symmetry\": \"{}\"\n}}\n",
        p.channels(),
        json_array(p.numerator()),
        json_array(p.denominator()),
        p.symmetry().as_str()
    )
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CoefficientFile {
    channels: usize,
    numerator: Vec<f64>,
    #[serde(default)]
    denominator: Vec<f64>,
    symmetry: String,
}

/// Parse a coefficient file and re-validate every prototype invariant.
///
/// Symmetry is checked at [`LOADING_TOLERANCE`] so that hand-entered,
/// rounded tables load; the declared sign must agree with the detected one.
pub fn prototype_from_json(text: &str) -> Result<PrototypeFilter> {
    let file: CoefficientFile =
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    let declared: Symmetry = file.symmetry.parse()?;
    let p = PrototypeFilter::with_tolerance(
        file.channels,
        file.numerator,
        file.denominator,
        LOADING_TOLERANCE,
    )
    .map_err(|e| Error::InvariantViolation(e.to_string()))?;
    if p.symmetry() != declared {
        return Err(Error::InvariantViolation(format!(
            "declared symmetry {} but coefficients are {}",
            declared.as_str(),
            p.symmetry().as_str()
        )));
    }
    Ok(p)
}

pub fn save_prototype(p: &PrototypeFilter, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, prototype_to_json(p))?;
    Ok(())
}

pub fn load_prototype(path: impl AsRef<Path>) -> Result<PrototypeFilter> {
    let text = std::fs::read_to_string(path)?;
    prototype_from_json(&text)
}

/// Signal encodings shared by every command that reads or writes samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignalFormat {
    /// One decimal sample per line.
    Text,
    /// Raw little-endian `f64`, no header.
    Binary,
}

pub fn read_signal<R: Read>(reader: R, format: SignalFormat) -> Result<Vec<f64>> {
    match format {
        SignalFormat::Text => {
            let mut out = Vec::new();
            for (lineno, line) in BufReader::new(reader).lines().enumerate() {
                let line = line?;
                let trimmed = line.trim();
                if trimmed.is_empty() {
                    continue;
                }
                let v = trimmed
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("line {}: {trimmed:?}: {e}", lineno + 1)))?;
                out.push(v);
            }
            Ok(out)
        }
        SignalFormat::Binary => {
            let mut bytes = Vec::new();
            BufReader::new(reader).read_to_end(&mut bytes)?;
            if bytes.len() % 8 != 0 {
                return Err(Error::Parse(format!(
                    "binary signal length {} is not a multiple of 8 bytes",
                    bytes.len()
                )));
            }
            Ok(bytes
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
                .collect())
        }
    }
}

pub fn write_signal<W: Write>(mut writer: W, samples: &[f64], format: SignalFormat) -> Result<()> {
    match format {
        SignalFormat::Text => {
            let mut buf = String::with_capacity(samples.len() * 24);
            for &v in samples {
                let _ = writeln!(buf, "{}", exact(v));
            }
            writer.write_all(buf.as_bytes())?;
        }
        SignalFormat::Binary => {
            let bytes: Vec<u8> = samples.iter().flat_map(|v| v.to_le_bytes()).collect();
            writer.write_all(&bytes)?;
        }
    }
    writer.flush()?;
    Ok(())
}

pub const SUBBAND_MAGIC: &[u8; 4] = b"CMFB";
pub const SUBBAND_VERSION: u32 = 1;

/// Interleaved subband dump: 16-byte header (`CMFB`, version, `M`,
/// samples per channel; little-endian `u32`s) then `f64` samples in time
/// order, channel-minor.
pub fn write_subbands<W: Write>(mut writer: W, subbands: &[Vec<f64>]) -> Result<()> {
    let m = subbands.len();
    let n = subbands.first().map_or(0, Vec::len);
    if subbands.iter().any(|s| s.len() != n) {
        return Err(Error::ShapeMismatch("subband lengths differ".into()));
    }
    let to_u32 = |v: usize, what: &str| {
        u32::try_from(v).map_err(|_| Error::ShapeMismatch(format!("{what} {v} exceeds u32")))
    };
    let mut bytes = Vec::with_capacity(16 + 8 * m * n);
    bytes.extend_from_slice(SUBBAND_MAGIC);
    bytes.extend_from_slice(&SUBBAND_VERSION.to_le_bytes());
    bytes.extend_from_slice(&to_u32(m, "channel count")?.to_le_bytes());
    bytes.extend_from_slice(&to_u32(n, "samples per channel")?.to_le_bytes());
    for i in 0..n {
        for band in subbands {
            bytes.extend_from_slice(&band[i].to_le_bytes());
        }
    }
    writer.write_all(&bytes)?;
    writer.flush()?;
    Ok(())
}

pub fn read_subbands<R: Read>(mut reader: R) -> Result<Vec<Vec<f64>>> {
    let mut bytes = Vec::new();
    reader.read_to_end(&mut bytes)?;
    if bytes.len() < 16 || &bytes[..4] != SUBBAND_MAGIC {
        return Err(Error::Parse("missing CMFB subband header".into()));
    }
    let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().expect("4 bytes")) as usize;
    let version = word(4) as u32;
    if version != SUBBAND_VERSION {
        return Err(Error::Parse(format!(
            "unsupported subband version {version}"
        )));
    }
    let (m, n) = (word(8), word(12));
    let expected = m
        .checked_mul(n)
        .and_then(|v| v.checked_mul(8))
        .and_then(|v| v.checked_add(16));
    if expected != Some(bytes.len()) {
        return Err(Error::Parse(format!(
            "subband payload is {} bytes, header implies {m} x {n} samples",
            bytes.len() - 16
        )));
    }
    let mut out = vec![Vec::with_capacity(n); m];
    for (i, chunk) in bytes[16..].chunks_exact(8).enumerate() {
        out[i % m].push(f64::from_le_bytes(chunk.try_into().expect("8 bytes")));
    }
    Ok(out)
}

/// Format with 12 significant digits.
fn sig12(v: f64) -> String {
    format!("{v:.11e}")
}

/// CSV with the given header and rows of numbers, LF line endings.
pub fn write_csv<W: Write>(mut writer: W, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    let mut buf = String::new();
    buf.push_str(&header.join(","));
    buf.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|&v| sig12(v)).collect();
        buf.push_str(&cells.join(","));
        buf.push('\n');
    }
    writer.write_all(buf.as_bytes())?;
    writer.flush()?;
    Ok(())
}
