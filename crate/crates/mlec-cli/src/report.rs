//! Deterministic report emission.
//!
//! JSON reports print every float with 17 significant digits so values
//! round-trip bit for bit; non-finite values (divergence markers) serialise
//! as `null`. Struct fields keep declaration order, so identical runs write
//! identical bytes. CSV exports use the same float formatting.

use std::io::{self, Write};
use std::path::Path;

use serde::Serialize;

/// `f64` with 17 significant digits: enough to reparse the exact bits.
pub fn format_float(value: f64) -> String {
    format!("{value:.16e}")
}

struct SigFigFormatter;

impl serde_json::ser::Formatter for SigFigFormatter {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        if value.is_finite() {
            write!(writer, "{}", format_float(value))
        } else {
            writer.write_all(b"null")
        }
    }

    fn write_f32<W>(&mut self, writer: &mut W, value: f32) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        self.write_f64(writer, value as f64)
    }
}

/// Serialise to canonical JSON (compact, 17-digit floats, trailing newline).
pub fn to_canonical_json<T: Serialize>(value: &T) -> io::Result<Vec<u8>> {
    let mut buffer = Vec::new();
    let mut serializer = serde_json::Serializer::with_formatter(&mut buffer, SigFigFormatter);
    value
        .serialize(&mut serializer)
        .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))?;
    buffer.push(b'\n');
    Ok(buffer)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> io::Result<()> {
    let bytes = to_canonical_json(value)?;
    std::fs::write(path, bytes)
}

/// Write a CSV file with the given header and pre-formatted rows.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> io::Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(header)?;
    for row in rows {
        writer.write_record(row)?;
    }
    writer.flush()?;
    let mut inner = writer.into_inner().map_err(io::Error::other)?;
    inner.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip_exactly() {
        for &v in &[
            0.25,
            1.0 / 3.0,
            std::f64::consts::PI,
            -0.0,
            6.02e23,
            5e-324,
            0.1 + 0.2,
        ] {
            let text = format_float(v);
            let back: f64 = text.parse().unwrap();
            assert_eq!(v.to_bits(), back.to_bits(), "{v} -> {text} -> {back}");
        }
    }

    #[test]
    fn canonical_json_is_stable_and_null_for_non_finite() {
        #[derive(Serialize)]
        struct Sample {
            x: f64,
            y: f64,
            n: u32,
        }
        let a = to_canonical_json(&Sample {
            x: 0.5,
            y: f64::INFINITY,
            n: 7,
        })
        .unwrap();
        let b = to_canonical_json(&Sample {
            x: 0.5,
            y: f64::INFINITY,
            n: 7,
        })
        .unwrap();
        assert_eq!(a, b);
        let text = String::from_utf8(a).unwrap();
        assert!(text.contains("5.0000000000000000e-1"));
        assert!(text.contains("\"y\":null"));
    }
}
