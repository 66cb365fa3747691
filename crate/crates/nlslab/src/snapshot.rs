//! Field snapshot format: one JSON header line `{n, L, t, label}` terminated
//! by a newline, followed by n^3 little-endian (real, imag) float64 pairs in
//! the fixed row-major x-fastest layout.

use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::Grid3;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SnapshotHeader {
    pub n: usize,
    #[serde(rename = "L")]
    pub l: f64,
    pub t: f64,
    pub label: String,
}

pub fn write_snapshot<W: Write>(w: &mut W, field: &Field, t: f64, label: &str) -> Result<()> {
    let header = SnapshotHeader {
        n: field.grid().n(),
        l: field.grid().half_width(),
        t,
        label: label.to_string(),
    };
    let mut out = BufWriter::new(w);
    serde_json::to_writer(&mut out, &header)?;
    out.write_all(b"\n")?;
    let mut buf = [0u8; 16];
    for v in field.values() {
        buf[..8].copy_from_slice(&v.re.to_le_bytes());
        buf[8..].copy_from_slice(&v.im.to_le_bytes());
        out.write_all(&buf)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_snapshot<R: Read>(r: &mut R) -> Result<(SnapshotHeader, Field)> {
    let mut reader = BufReader::new(r);
    let mut line = String::new();
    reader.read_line(&mut line)?;
    let header: SnapshotHeader = serde_json::from_str(line.trim_end())
        .map_err(|e| Error::SnapshotFormat(format!("bad header: {e}")))?;
    let grid = Grid3::new(header.n, header.l)?;
    let mut values = Vec::with_capacity(grid.len());
    let mut buf = [0u8; 16];
    for i in 0..grid.len() {
        reader.read_exact(&mut buf).map_err(|_| {
            Error::SnapshotFormat(format!("truncated payload at sample {i} of {}", grid.len()))
        })?;
        let re = f64::from_le_bytes(buf[..8].try_into().unwrap());
        let im = f64::from_le_bytes(buf[8..].try_into().unwrap());
        values.push(Complex64::new(re, im));
    }
    Ok((header, Field::from_values(grid, values)))
}

pub fn save_snapshot(path: &Path, field: &Field, t: f64, label: &str) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    write_snapshot(&mut f, field, t, label)
}

pub fn load_snapshot(path: &Path) -> Result<(SnapshotHeader, Field)> {
    let mut f = std::fs::File::open(path)?;
    read_snapshot(&mut f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::sample;

    #[test]
    fn roundtrip_preserves_bits() {
        let grid = Grid3::new(8, 2.0).unwrap();
        let f = sample(grid, |p| Complex64::new(p[0] * 0.1, p[1] - p[2])).unwrap();
        let mut buf = Vec::new();
        write_snapshot(&mut buf, &f, 1.25, "test").unwrap();
        let (header, g) = read_snapshot(&mut buf.as_slice()).unwrap();
        assert_eq!(header.n, 8);
        assert_eq!(header.t, 1.25);
        assert_eq!(header.label, "test");
        assert_eq!(f.values(), g.values());
    }

    #[test]
    fn truncated_payload_is_an_error() {
        let grid = Grid3::new(8, 2.0).unwrap();
        let f = Field::zeros(grid);
        let mut buf = Vec::new();
        write_snapshot(&mut buf, &f, 0.0, "x").unwrap();
        buf.truncate(buf.len() - 8);
        assert!(read_snapshot(&mut buf.as_slice()).is_err());
    }
}
