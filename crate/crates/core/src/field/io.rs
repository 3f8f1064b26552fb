//! Field dump formats.
//!
//! Binary: a little-endian `u64` entry count followed by the values as
//! little-endian 64-bit reals (3 per entry for vector fields). Text: one
//! entry per line in full `%.17e` precision, whitespace-separated
//! components, for diffing in validation runs.
//!
//! Readers are total: malformed input yields an error, never a panic, and
//! allocation is bounded by the actual data supplied.

use std::io::{Read, Write};

use super::Vec3;
use crate::error::{Error, Result};

fn parse_err(format: &'static str, reason: impl Into<String>) -> Error {
    Error::Parse {
        format,
        reason: reason.into(),
    }
}

pub fn write_scalar_binary(mut w: impl Write, values: &[f64]) -> Result<()> {
    w.write_all(&(values.len() as u64).to_le_bytes())?;
    for v in values {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_scalar_binary(mut r: impl Read) -> Result<Vec<f64>> {
    let declared = read_u64(&mut r, "scalar binary dump")? as usize;
    read_reals(&mut r, declared, "scalar binary dump")
}

pub fn write_vector_binary(mut w: impl Write, values: &[Vec3]) -> Result<()> {
    w.write_all(&(values.len() as u64).to_le_bytes())?;
    for v in values {
        w.write_all(&v.x.to_le_bytes())?;
        w.write_all(&v.y.to_le_bytes())?;
        w.write_all(&v.z.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_vector_binary(mut r: impl Read) -> Result<Vec<Vec3>> {
    let declared = read_u64(&mut r, "vector binary dump")? as usize;
    let n = declared
        .checked_mul(3)
        .ok_or_else(|| parse_err("vector binary dump", "entry count overflows"))?;
    let flat = read_reals(&mut r, n, "vector binary dump")?;
    Ok(flat
        .chunks_exact(3)
        .map(|c| Vec3::new(c[0], c[1], c[2]))
        .collect())
}

fn read_u64(r: &mut impl Read, format: &'static str) -> Result<u64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)
        .map_err(|_| parse_err(format, "truncated length prefix"))?;
    Ok(u64::from_le_bytes(buf))
}

/// Read exactly `n` little-endian f64 values. Growth is driven by bytes
/// actually present, so an absurd declared length fails fast instead of
/// reserving memory for it.
fn read_reals(r: &mut impl Read, n: usize, format: &'static str) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(n.min(1 << 16));
    let mut buf = [0u8; 8];
    for _ in 0..n {
        r.read_exact(&mut buf)
            .map_err(|_| parse_err(format, format!("expected {n} values, input truncated")))?;
        out.push(f64::from_le_bytes(buf));
    }
    Ok(out)
}

pub fn write_scalar_text(mut w: impl Write, values: &[f64]) -> Result<()> {
    for v in values {
        writeln!(w, "{v:.17e}")?;
    }
    Ok(())
}

pub fn read_scalar_text(text: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let v: f64 = line.parse().map_err(|_| {
            parse_err(
                "scalar text dump",
                format!("line {}: not a real number: `{line}`", lineno + 1),
            )
        })?;
        out.push(v);
    }
    Ok(out)
}

pub fn write_vector_text(mut w: impl Write, values: &[Vec3]) -> Result<()> {
    for v in values {
        writeln!(w, "{:.17e} {:.17e} {:.17e}", v.x, v.y, v.z)?;
    }
    Ok(())
}

pub fn read_vector_text(text: &str) -> Result<Vec<Vec3>> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let mut comps = [0.0f64; 3];
        for c in &mut comps {
            let tok = parts.next().ok_or_else(|| {
                parse_err(
                    "vector text dump",
                    format!("line {}: expected 3 components", lineno + 1),
                )
            })?;
            *c = tok.parse().map_err(|_| {
                parse_err(
                    "vector text dump",
                    format!("line {}: not a real number: `{tok}`", lineno + 1),
                )
            })?;
        }
        if parts.next().is_some() {
            return Err(parse_err(
                "vector text dump",
                format!("line {}: trailing tokens", lineno + 1),
            ));
        }
        out.push(Vec3::new(comps[0], comps[1], comps[2]));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_binary_roundtrip() {
        let values = vec![1.0, -2.5, 1e-300, f64::MAX, 0.1 + 0.2];
        let mut buf = Vec::new();
        write_scalar_binary(&mut buf, &values).unwrap();
        let back = read_scalar_binary(buf.as_slice()).unwrap();
        assert_eq!(values.len(), back.len());
        for (a, b) in values.iter().zip(&back) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn vector_text_roundtrip() {
        let values = vec![Vec3::new(1.0, 2.0, 3.0), Vec3::new(-0.25, 1e-7, 9.0)];
        let mut buf = Vec::new();
        write_vector_text(&mut buf, &values).unwrap();
        let back = read_vector_text(std::str::from_utf8(&buf).unwrap()).unwrap();
        assert_eq!(values, back);
    }

    #[test]
    fn truncated_binary_is_an_error() {
        let values = vec![1.0, 2.0, 3.0];
        let mut buf = Vec::new();
        write_scalar_binary(&mut buf, &values).unwrap();
        buf.truncate(buf.len() - 3);
        assert!(read_scalar_binary(buf.as_slice()).is_err());
    }

    #[test]
    fn absurd_length_prefix_fails_without_reserving() {
        // Declares 2^60 values but carries none.
        let mut buf = Vec::new();
        buf.extend_from_slice(&(1u64 << 60).to_le_bytes());
        assert!(read_scalar_binary(buf.as_slice()).is_err());
    }

    #[test]
    fn malformed_text_is_an_error() {
        assert!(read_scalar_text("1.0\nnot-a-number\n").is_err());
        assert!(read_vector_text("1 2\n").is_err());
        assert!(read_vector_text("1 2 3 4\n").is_err());
        // NaN/inf spellings accepted by f64::parse are fine.
        assert!(read_scalar_text("NaN\ninf\n").is_ok());
    }
}
